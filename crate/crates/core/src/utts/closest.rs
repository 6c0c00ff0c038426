//! Exact closest point on a single triangle, with the Voronoi region it lies in.

use crate::linalg::Vec3;
use crate::real::Real;

/// Feature of a triangle `(a, b, c)` that holds the closest point.
///
/// Edges are numbered by their first corner: 0 = ab, 1 = bc, 2 = ca, and the
/// parameter `t` runs from that corner to the next.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region<T> {
    /// Barycentric coordinates `(λ_a, λ_b, λ_c)`.
    Face([T; 3]),
    Edge(usize, T),
    Vertex(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleHit<T> {
    pub point: Vec3<T>,
    pub dist_sq: T,
    pub region: Region<T>,
}

/// Closest point on triangle `tri` to `x` by Voronoi-region classification.
///
/// Edge parameters landing exactly on an endpoint are reported as the vertex.
#[inline]
pub fn closest_on_triangle<T: Real>(x: Vec3<T>, tri: &[Vec3<T>; 3]) -> TriangleHit<T> {
    let [a, b, c] = *tri;
    let zero = T::zero();
    let ab = b - a;
    let ac = c - a;
    let ap = x - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    let vertex = |k: usize, p: Vec3<T>| TriangleHit { point: p, dist_sq: (x - p).norm_squared(), region: Region::Vertex(k) };
    if d1 <= zero && d2 <= zero {
        return vertex(0, a);
    }
    let bp = x - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return vertex(1, b);
    }
    let edge = |k: usize, t: T, from: Vec3<T>, dir: Vec3<T>| {
        if t <= zero {
            return vertex(k, from);
        }
        if t >= T::one() {
            return vertex((k + 1) % 3, from + dir);
        }
        let p = from + dir * t;
        TriangleHit { point: p, dist_sq: (x - p).norm_squared(), region: Region::Edge(k, t) }
    };
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        return edge(0, d1 / (d1 - d3), a, ab);
    }
    let cp = x - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return vertex(2, c);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        // Parameter along a→c; edge 2 runs c→a.
        let t = d2 / (d2 - d6);
        return edge(2, T::one() - t, c, a - c);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return edge(1, t, b, c - b);
    }
    // Interior: the barycentrics are ratios of sub-triangle areas.
    let denom = T::one() / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let p = a + ab * v + ac * w;
    TriangleHit { point: p, dist_sq: (x - p).norm_squared(), region: Region::Face([T::one() - v - w, v, w]) }
}

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::real::Real;

use super::TriangleMesh;

/// UV coordinates closer than this are considered identical.
pub const SEAM_UV_TOLERANCE: f64 = 1e-9;

/// One mesh edge seen from both sides of a UV seam.
///
/// Side `a` is the lower-indexed face. Both sides start at the same mesh
/// vertex (`vertices.0`), so a common interpolation factor addresses the same
/// surface point on either chart.
#[derive(Clone, Debug, PartialEq)]
pub struct SeamPair<T> {
    pub vertices: (usize, usize),
    pub faces: (usize, usize),
    pub start_a: Vec2<T>,
    pub dir_a: Vec2<T>,
    /// Unit UV normal of edge `a`, pointing into face `a`'s UV triangle.
    pub normal_a: Vec2<T>,
    pub start_b: Vec2<T>,
    pub dir_b: Vec2<T>,
    pub normal_b: Vec2<T>,
}

pub type SeamEdgeList<T> = Vec<SeamPair<T>>;

fn inward_normal<T: Real>(start: Vec2<T>, dir: Vec2<T>, opposite: Vec2<T>) -> Vec2<T> {
    let n = Vec2::new(-dir.y, dir.x) / dir.norm();
    if n.dot(opposite - start) < T::zero() {
        -n
    } else {
        n
    }
}

pub fn extract_seams<T: Real>(mesh: &TriangleMesh<T>) -> Result<SeamEdgeList<T>> {
    let tol = T::lit(SEAM_UV_TOLERANCE);
    let mut out = Vec::new();
    for e in mesh.edges() {
        match e.faces.len() {
            1 => continue,
            2 => {}
            count => return Err(Error::NonManifoldEdge { a: e.a, b: e.b, count }),
        }
        let (fa, fb) = (e.faces[0].min(e.faces[1]), e.faces[0].max(e.faces[1]));
        let corner = |f: usize, v: usize| mesh.corner_of(f, v).expect("edge vertex in face");
        let uv = |f: usize, v: usize| mesh.uvs()[f][corner(f, v)];
        let third = |f: usize| {
            let k = (0..3).find(|&k| mesh.faces()[f][k] != e.a && mesh.faces()[f][k] != e.b).unwrap();
            mesh.uvs()[f][k]
        };
        let (sa, ea) = (uv(fa, e.a), uv(fa, e.b));
        let (sb, eb) = (uv(fb, e.a), uv(fb, e.b));
        if (sa - sb).norm() <= tol && (ea - eb).norm() <= tol {
            continue;
        }
        let (dir_a, dir_b) = (ea - sa, eb - sb);
        if !(dir_a.norm() > T::zero() && dir_b.norm() > T::zero()) {
            return Err(Error::InvalidMesh(format!(
                "seam edge ({}, {}) has zero UV length",
                e.a, e.b
            )));
        }
        out.push(SeamPair {
            vertices: (e.a, e.b),
            faces: (fa, fb),
            start_a: sa,
            dir_a,
            normal_a: inward_normal(sa, dir_a, third(fa)),
            start_b: sb,
            dir_b,
            normal_b: inward_normal(sb, dir_b, third(fb)),
        });
    }
    Ok(out)
}

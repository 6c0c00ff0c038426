//! Global points to (u_x, u_y, d) coordinates of the undeformed texture space.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Vec2, Vec3};
use crate::real::Real;

use super::closest::Region;
use super::index::{ClosestHit, ClosestPointIndex};

/// Mesh element holding the closest surface point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Element {
    Face { face: usize },
    /// Vertex indices with `a < b`.
    Edge { a: usize, b: usize },
    Vertex { vertex: usize },
}

impl Element {
    pub fn class(&self) -> ElementClass {
        match self {
            Element::Face { .. } => ElementClass::Face,
            Element::Edge { .. } => ElementClass::Edge,
            Element::Vertex { .. } => ElementClass::Vertex,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementClass {
    Face,
    Edge,
    Vertex,
}

/// Point of the texture space: atlas coordinate, signed height and the
/// normalized height `d̂ = (d / d_max + 1) / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UttsPoint<T> {
    pub u: Vec2<T>,
    pub d: T,
    pub d_hat: T,
}

impl<T: Real> UttsPoint<T> {
    pub fn new(u: Vec2<T>, d: T, d_max: T) -> Self {
        Self { u, d, d_hat: normalized_height(d, d_max) }
    }

    /// Point given by normalized coordinates `(u_x, u_y, d̂)`.
    pub fn from_normalized(u: Vec2<T>, d_hat: T, d_max: T) -> Self {
        Self { u, d: (d_hat * T::two() - T::one()) * d_max, d_hat }
    }

    pub fn coords(&self) -> [T; 3] {
        [self.u.x, self.u.y, self.d_hat]
    }

    pub fn is_valid(&self) -> bool {
        let (z, o) = (T::zero(), T::one());
        self.u.x >= z && self.u.x <= o && self.u.y >= z && self.u.y <= o && self.d_hat >= z && self.d_hat <= o
    }
}

#[inline]
pub fn normalized_height<T: Real>(d: T, d_max: T) -> T {
    (d / d_max + T::one()) * T::half()
}

/// Closest surface point of a query, before the height is signed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint<T> {
    pub element: Element,
    /// Face the point was found on; its UV corners define `u`.
    pub face: usize,
    pub point: Vec3<T>,
    pub u: Vec2<T>,
    /// `(λ_a, λ_b)` for corners 0 and 1 of `face` in the face case.
    pub barycentric: Option<(T, T)>,
    /// Position along the edge from vertex `a` to `b` in the edge case.
    pub edge_t: Option<T>,
    /// Unsigned distance `‖x − p‖`.
    pub distance: T,
    /// Pseudo-normal of the element, used to sign the height.
    pub normal: Vec3<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MappingResult<T> {
    pub surface: SurfacePoint<T>,
    /// Coordinates with signed `d`; `d̂` leaves `[0, 1]` when out of range.
    pub coords: UttsPoint<T>,
    pub out_of_range: bool,
    pub collision_prone: bool,
}

impl<T: Real> MappingResult<T> {
    pub fn element(&self) -> Element {
        self.surface.element
    }

    pub fn d(&self) -> T {
        self.coords.d
    }

    /// Texture-space point, `None` when beyond `d_max`.
    pub fn utts(&self) -> Option<UttsPoint<T>> {
        (!self.out_of_range).then_some(self.coords)
    }

    /// Sign of the height, with points on the surface counted as outside.
    pub fn side(&self) -> T {
        if self.coords.d < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    }

    /// Recomputes `(u_x, u_y, d̂)` at `x` while keeping the closest element
    /// fixed. Agrees with the mapping at the original query and is smooth in
    /// `x` away from element boundaries, so it can be evaluated on dual
    /// numbers to differentiate through the mapping.
    pub fn coords_at<S: Real>(&self, index: &ClosestPointIndex<T>, x: Vec3<S>, d_max: S) -> [S; 3] {
        let (u, d) = self.uv_height_at(index, x);
        [u.x, u.y, normalized_height(d, d_max)]
    }

    /// Surface UV and signed height at `x` with the closest element held
    /// fixed; see [`Self::coords_at`].
    pub fn uv_height_at<S: Real>(&self, index: &ClosestPointIndex<T>, x: Vec3<S>) -> (Vec2<S>, S) {
        let s = |v: T| S::lit(v.to_f64_lossy());
        let sv = |v: Vec3<T>| Vec3::new(s(v.x), s(v.y), s(v.z));
        let su = |v: Vec2<T>| Vec2::new(s(v.x), s(v.y));
        let f = self.surface.face;
        let corners = index.faces()[f];
        let uvs = index.uvs()[f];
        let tri = index.triangle(f);
        let (u, d) = match self.surface.element {
            Element::Face { .. } => {
                let n = sv(index.face_normal(f));
                let [a, b, c] = tri.map(sv);
                let d = (x - a).dot(n);
                let p = x - n * d;
                let area2 = (b - a).cross(c - a).dot(n);
                let la = (c - b).cross(p - b).dot(n) / area2;
                let lb = (a - c).cross(p - c).dot(n) / area2;
                let u = su(uvs[0]) * la + su(uvs[1]) * lb + su(uvs[2]) * (S::one() - la - lb);
                (u, d)
            }
            Element::Edge { a, .. } => {
                let ka = corners.iter().position(|&v| v == a).unwrap();
                let kb = corners.iter().position(|&v| v == self.other_edge_vertex()).unwrap();
                let (pa, pb) = (sv(tri[ka]), sv(tri[kb]));
                let e = pb - pa;
                let t = e.dot(x - pa) / e.norm_squared();
                let p = pa + e * t;
                let u = su(uvs[ka]) * (S::one() - t) + su(uvs[kb]) * t;
                (u, (x - p).norm() * s(self.side()))
            }
            Element::Vertex { vertex } => {
                let k = corners.iter().position(|&v| v == vertex).unwrap();
                (su(uvs[k]), (x - sv(tri[k])).norm() * s(self.side()))
            }
        };
        (u, d)
    }

    fn other_edge_vertex(&self) -> usize {
        match self.surface.element {
            Element::Edge { b, .. } => b,
            _ => unreachable!("edge case only"),
        }
    }
}

fn surface_from_hit<T: Real>(index: &ClosestPointIndex<T>, hit: &ClosestHit<T>) -> SurfacePoint<T> {
    let f = hit.face;
    let corners = index.faces()[f];
    let uvs = index.uvs()[f];
    let distance = hit.dist_sq.sqrt();
    match hit.region {
        Region::Face(l) => SurfacePoint {
            element: Element::Face { face: f },
            face: f,
            point: hit.point,
            u: uvs[0] * l[0] + uvs[1] * l[1] + uvs[2] * l[2],
            barycentric: Some((l[0], l[1])),
            edge_t: None,
            distance,
            normal: index.face_normal(f),
        },
        Region::Edge(k, t) => {
            let (va, vb) = (corners[k], corners[(k + 1) % 3]);
            let (a, b, t_ab) = if va < vb { (va, vb, t) } else { (vb, va, T::one() - t) };
            SurfacePoint {
                element: Element::Edge { a, b },
                face: f,
                point: hit.point,
                u: uvs[k] * (T::one() - t) + uvs[(k + 1) % 3] * t,
                barycentric: None,
                edge_t: Some(t_ab),
                distance,
                normal: index.edge_normal(f, k),
            }
        }
        Region::Vertex(k) => SurfacePoint {
            element: Element::Vertex { vertex: corners[k] },
            face: f,
            point: hit.point,
            u: uvs[k],
            barycentric: None,
            edge_t: None,
            distance,
            normal: index.vertex_normal(corners[k]),
        },
    }
}

/// Nearest element, its surface point, atlas coordinate and unsigned distance.
pub fn closest_point<T: Real>(index: &ClosestPointIndex<T>, x: Vec3<T>) -> SurfacePoint<T> {
    surface_from_hit(index, &index.closest(x))
}

/// Same as [`closest_point`] by exhaustive scan; the reference for tests.
pub fn closest_point_brute_force<T: Real>(index: &ClosestPointIndex<T>, x: Vec3<T>) -> SurfacePoint<T> {
    surface_from_hit(index, &index.closest_brute_force(x))
}

/// Signs the height of a closest-point result and applies the `d_max` band.
pub fn sign_height<T: Real>(x: Vec3<T>, surface: SurfacePoint<T>, d_max: T) -> MappingResult<T> {
    let sign = if (x - surface.point).dot(surface.normal) < T::zero() { -T::one() } else { T::one() };
    let d = surface.distance * sign;
    MappingResult {
        surface,
        coords: UttsPoint::new(surface.u, d, d_max),
        out_of_range: surface.distance > d_max,
        collision_prone: surface.element.class() != ElementClass::Face,
    }
}

/// Maps a global point into the texture space of the posed template.
pub fn map_to_utts<T: Real>(index: &ClosestPointIndex<T>, x: Vec3<T>, d_max: T) -> MappingResult<T> {
    sign_height(x, closest_point(index, x), d_max)
}

/// Data-parallel [`map_to_utts`] over a point set.
///
/// Points are processed in contiguous chunks, each query warm-started from the
/// previous point's face when that point is within `d_max`, so ordering
/// samples along rays pays off.
pub fn map_batch<T: Real>(index: &ClosestPointIndex<T>, points: &[Vec3<T>], d_max: T) -> Vec<MappingResult<T>> {
    const CHUNK: usize = 256;
    let mut out = Vec::with_capacity(points.len());
    out.par_extend(points.par_chunks(CHUNK).flat_map_iter(|chunk| {
        let mut prev: Option<(Vec3<T>, usize)> = None;
        chunk.iter().map(move |&x| {
            // A far-away previous point makes a poor starting leaf.
            let hint = prev.filter(|(p, _)| (x - *p).norm_squared() <= d_max * d_max).map(|(_, f)| f);
            let hit = index.closest_from(x, hint);
            prev = Some((x, hit.face));
            sign_height(x, surface_from_hit(index, &hit), d_max)
        })
    }));
    out
}

/// Global point of a face-case result: `Σ λ v + d · n_f`.
pub fn inverse_map<T: Real>(index: &ClosestPointIndex<T>, result: &MappingResult<T>) -> Result<Vec3<T>> {
    let (face, (la, lb)) = match (result.surface.element, result.surface.barycentric) {
        (Element::Face { face }, Some(l)) => (face, l),
        (e, _) => return Err(Error::NotFaceCase(format!("{e:?}"))),
    };
    let [a, b, c] = index.triangle(face);
    Ok(a * la + b * lb + c * (T::one() - la - lb) + index.face_normal(face) * result.coords.d)
}

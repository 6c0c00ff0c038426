//! Procedural meshes with UV atlases.

use std::collections::HashMap;

use crate::linalg::{Vec2, Vec3};
use crate::mesh::TriangleMesh;
use crate::real::Real;

fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Planar grid in the xy-plane with `nx × ny` quads of edge `size / max(nx, ny)`,
/// one UV chart. Vertex `(i, j)` has index `j * (nx + 1) + i`.
pub fn grid<T: Real>(nx: usize, ny: usize, size: f64) -> TriangleMesh<T> {
    let step = size / nx.max(ny) as f64;
    let mut v = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            v.push(Vec3::new(lit(i as f64 * step), lit(j as f64 * step), T::zero()));
        }
    }
    let uv_of = |i: usize, j: usize| Vec2::new(lit::<T>(i as f64 / nx as f64), lit::<T>(j as f64 / ny as f64));
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::new();
    let mut uvs = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            uvs.push([uv_of(i, j), uv_of(i + 1, j), uv_of(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            uvs.push([uv_of(i, j), uv_of(i + 1, j + 1), uv_of(i, j + 1)]);
        }
    }
    TriangleMesh::new(v, faces, uvs).expect("grid is valid")
}

fn midpoint_refine<T: Real>(
    verts: &mut Vec<Vec3<T>>,
    faces: &[[usize; 3]],
    radius: T,
) -> Vec<[usize; 3]> {
    let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3<T>>| {
        *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let m = ((verts[a] + verts[b]) * T::half()).normalize() * radius;
            verts.push(m);
            verts.len() - 1
        })
    };
    let mut out = Vec::with_capacity(faces.len() * 4);
    for &[a, b, c] in faces {
        let ab = mid(a, b, verts);
        let bc = mid(b, c, verts);
        let ca = mid(c, a, verts);
        out.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    out
}

/// Planar xy projection into `[0,1]²`; both hemispheres overlap in UV.
fn projected_uvs<T: Real>(verts: &[Vec3<T>], faces: &[[usize; 3]], radius: T) -> Vec<[Vec2<T>; 3]> {
    let uv = |p: Vec3<T>| {
        let f = |c: T| ((c / radius + T::one()) * T::half()).max(T::zero()).min(T::one());
        Vec2::new(f(p.x), f(p.y))
    };
    faces.iter().map(|f| [uv(verts[f[0]]), uv(verts[f[1]]), uv(verts[f[2]])]).collect()
}

/// Icosphere: icosahedron refined `level` times (20·4^level faces).
pub fn icosphere<T: Real>(radius: f64, level: usize) -> TriangleMesh<T> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let r = lit::<T>(radius);
    let mut verts: Vec<Vec3<T>> = raw
        .iter()
        .map(|p| Vec3::from_f64(p[0], p[1], p[2]).normalize() * r)
        .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        faces = midpoint_refine(&mut verts, &faces, r);
    }
    let uvs = projected_uvs(&verts, &faces, r);
    TriangleMesh::new(verts, faces, uvs).expect("icosphere is valid")
}

/// Latitude/longitude sphere with a UV seam along the `u = 0/1` meridian.
pub fn uv_sphere<T: Real>(radius: f64, segments: usize, rings: usize) -> TriangleMesh<T> {
    use std::f64::consts::PI;
    let mut verts = vec![Vec3::from_f64(0.0, 0.0, radius)];
    for i in 1..rings {
        let th = PI * i as f64 / rings as f64;
        for j in 0..segments {
            let ph = 2.0 * PI * j as f64 / segments as f64;
            verts.push(Vec3::from_f64(radius * th.sin() * ph.cos(), radius * th.sin() * ph.sin(), radius * th.cos()));
        }
    }
    let south = verts.len();
    verts.push(Vec3::from_f64(0.0, 0.0, -radius));
    let ring_v = |i: usize, j: usize| 1 + (i - 1) * segments + (j % segments);
    let uv = |i: usize, j: usize| Vec2::new(lit::<T>(j as f64 / segments as f64), lit::<T>(1.0 - i as f64 / rings as f64));
    let mut faces = Vec::new();
    let mut uvs = Vec::new();
    for j in 0..segments {
        let uc = lit::<T>((j as f64 + 0.5) / segments as f64);
        faces.push([0, ring_v(1, j), ring_v(1, j + 1)]);
        uvs.push([Vec2::new(uc, T::one()), uv(1, j), uv(1, j + 1)]);
        faces.push([south, ring_v(rings - 1, j + 1), ring_v(rings - 1, j)]);
        uvs.push([Vec2::new(uc, T::zero()), uv(rings - 1, j + 1), uv(rings - 1, j)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (ring_v(i, j), ring_v(i + 1, j), ring_v(i + 1, j + 1), ring_v(i, j + 1));
            faces.push([a, b, c]);
            uvs.push([uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)]);
            faces.push([a, c, d]);
            uvs.push([uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)]);
        }
    }
    TriangleMesh::new(verts, faces, uvs).expect("uv sphere is valid")
}

/// Open cylinder around the z-axis, `z ∈ [0, height]`, cut along the `+x`
/// generator line (vertex column 0) in UV. Vertex `(ring, seg)` has index
/// `ring * segments + seg`.
pub fn cylinder<T: Real>(radius: f64, height: f64, segments: usize, rings: usize) -> TriangleMesh<T> {
    use std::f64::consts::PI;
    let mut verts = Vec::new();
    for r in 0..=rings {
        let z = height * r as f64 / rings as f64;
        for s in 0..segments {
            let ph = 2.0 * PI * s as f64 / segments as f64;
            verts.push(Vec3::from_f64(radius * ph.cos(), radius * ph.sin(), z));
        }
    }
    let idx = |r: usize, s: usize| r * segments + (s % segments);
    let uv = |r: usize, s: usize| Vec2::new(lit::<T>(s as f64 / segments as f64), lit::<T>(r as f64 / rings as f64));
    let mut faces = Vec::new();
    let mut uvs = Vec::new();
    for r in 0..rings {
        for s in 0..segments {
            faces.push([idx(r, s), idx(r, s + 1), idx(r + 1, s + 1)]);
            uvs.push([uv(r, s), uv(r, s + 1), uv(r + 1, s + 1)]);
            faces.push([idx(r, s), idx(r + 1, s + 1), idx(r + 1, s)]);
            uvs.push([uv(r, s), uv(r + 1, s + 1), uv(r + 1, s)]);
        }
    }
    TriangleMesh::new(verts, faces, uvs).expect("cylinder is valid")
}

/// Octahedral sphere with two hemispherical UV charts: the upper hemisphere
/// lives in `u ∈ [0, 0.5]`, the lower one in `u ∈ [0.5, 1]`. Seams run
/// exactly along the equator.
pub fn two_chart_sphere<T: Real>(radius: f64, level: usize) -> TriangleMesh<T> {
    let r = lit::<T>(radius);
    let mut verts: Vec<Vec3<T>> = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
    .iter()
    .map(|p| Vec3::from_f64(p[0], p[1], p[2]) * r)
    .collect();
    let mut faces = vec![
        [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4],
        [1, 0, 5], [2, 1, 5], [3, 2, 5], [0, 3, 5],
    ];
    for _ in 0..level {
        faces = midpoint_refine(&mut verts, &faces, r);
    }
    // Snap equator points exactly onto z = 0.
    for v in verts.iter_mut() {
        if v.z.abs() < lit(1e-12) {
            v.z = T::zero();
        }
    }
    let uvs = faces
        .iter()
        .map(|f| {
            let upper = f.iter().all(|&i| verts[i].z >= T::zero());
            let off: T = if upper { lit(0.25) } else { lit(0.75) };
            let map = |p: Vec3<T>| Vec2::new(off + lit::<T>(0.24) * p.x / r, lit::<T>(0.5) + lit::<T>(0.48) * p.y / r);
            [map(verts[f[0]]), map(verts[f[1]]), map(verts[f[2]])]
        })
        .collect();
    TriangleMesh::new(verts, faces, uvs).expect("two-chart sphere is valid")
}

/// Axis-aligned box `[-h, h]` with each side split into `n × n` quads and a
/// 3×2 atlas of per-side charts.
pub fn cube<T: Real>(half: f64, n: usize) -> TriangleMesh<T> {
    let mut verts: Vec<Vec3<T>> = Vec::new();
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut faces = Vec::new();
    let mut uvs = Vec::new();
    // (normal axis, sign, u axis, v axis) chosen so u × v = outward normal.
    let sides = [(0, 1.0, 1, 2), (0, -1.0, 2, 1), (1, 1.0, 2, 0), (1, -1.0, 0, 2), (2, 1.0, 0, 1), (2, -1.0, 1, 0)];
    for (si, &(ax, sign, ua, va)) in sides.iter().enumerate() {
        let (cu, cv) = ((si % 3) as f64 / 3.0, (si / 3) as f64 / 2.0);
        let mut key_of = |i: usize, j: usize| {
            let mut k = [0i64; 3];
            k[ax] = if sign > 0.0 { n as i64 } else { -(n as i64) };
            k[ua] = 2 * i as i64 - n as i64;
            k[va] = 2 * j as i64 - n as i64;
            let next = verts.len();
            *index.entry(k).or_insert_with(|| {
                verts.push(Vec3::from_f64(
                    half * k[0] as f64 / n as f64,
                    half * k[1] as f64 / n as f64,
                    half * k[2] as f64 / n as f64,
                ));
                next
            })
        };
        let uv = |i: usize, j: usize| {
            Vec2::new(
                lit::<T>(cu + 0.3 * i as f64 / n as f64 + 0.015),
                lit::<T>(cv + 0.45 * j as f64 / n as f64 + 0.025),
            )
        };
        for i in 0..n {
            for j in 0..n {
                let (a, b, c, d) = (key_of(i, j), key_of(i + 1, j), key_of(i + 1, j + 1), key_of(i, j + 1));
                faces.push([a, b, c]);
                uvs.push([uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)]);
                faces.push([a, c, d]);
                uvs.push([uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)]);
            }
        }
    }
    TriangleMesh::new(verts, faces, uvs).expect("cube is valid")
}

/// Two triangles sharing the edge along the y-axis with interior dihedral
/// angle `dihedral` (radians); `π` is flat.
pub fn tent<T: Real>(dihedral: f64) -> TriangleMesh<T> {
    let half = (std::f64::consts::PI - dihedral) / 2.0;
    let (s, c) = half.sin_cos();
    let verts = vec![
        Vec3::from_f64(0.0, 0.0, 0.0),
        Vec3::from_f64(0.0, 1.0, 0.0),
        Vec3::from_f64(c, 0.5, -s),
        Vec3::from_f64(-c, 0.5, -s),
    ];
    let faces = vec![[0, 2, 1], [0, 1, 3]];
    let uvs = vec![
        [Vec2::new(lit(0.5), lit(0.0)), Vec2::new(lit(1.0), lit(0.5)), Vec2::new(lit(0.5), lit(1.0))],
        [Vec2::new(lit(0.5), lit(0.0)), Vec2::new(lit(0.5), lit(1.0)), Vec2::new(lit(0.0), lit(0.5))],
    ];
    TriangleMesh::new(verts, faces, uvs).expect("tent is valid")
}

/// Cylinder bent along an arc in the xz-plane and with a sinusoidal radial
/// bulge; a stand-in for a deforming limb.
pub fn deformed_cylinder<T: Real>(segments: usize, rings: usize) -> TriangleMesh<T> {
    let (radius, height) = (0.12, 1.0);
    let base = cylinder::<T>(radius, height, segments, rings);
    let bend = 0.8; // total bend angle (rad) over the height
    let arc_r = height / bend;
    let verts = base
        .vertices()
        .iter()
        .map(|p| {
            let (x, y, z) = (p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy());
            let phi = y.atan2(x);
            let bulge = 1.0 + 0.25 * (3.0 * std::f64::consts::PI * z / height).sin() * (2.0 * phi).cos();
            let (x, y) = (x * bulge, y * bulge);
            let ang = z / arc_r;
            let rr = arc_r - x;
            Vec3::from_f64(arc_r - rr * ang.cos(), y, rr * ang.sin())
        })
        .collect();
    base.with_vertices(verts).expect("same vertex count")
}

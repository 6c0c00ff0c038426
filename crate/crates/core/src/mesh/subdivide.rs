use std::collections::HashMap;

use crate::error::Result;
use crate::linalg::Vec3;
use crate::real::Real;

use super::{TriangleMesh, WeightRow};

fn blend_rows<T: Real>(a: &WeightRow<T>, b: &WeightRow<T>) -> WeightRow<T> {
    let mut merged: Vec<(usize, T)> = Vec::with_capacity(a.len() + b.len());
    for &(j, w) in a.iter().chain(b.iter()) {
        match merged.iter_mut().find(|(k, _)| *k == j) {
            Some((_, acc)) => *acc += w * T::half(),
            None => merged.push((j, w * T::half())),
        }
    }
    merged.sort_unstable_by_key(|&(j, _)| j);
    merged
}

/// One step of midpoint (1-to-4) subdivision applied to `positions`.
///
/// Each undirected edge receives exactly one new vertex; UVs are split per
/// face corner so atlas seams survive. Skinning weights, if any, are averaged.
pub fn subdivide_once<T: Real>(
    mesh: &TriangleMesh<T>,
    positions: &[Vec3<T>],
) -> Result<TriangleMesh<T>> {
    mesh.check_positions(positions)?;
    let mut verts = positions.to_vec();
    let mut weights = mesh.skin_weights().map(|w| w.to_vec());
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut faces = Vec::with_capacity(mesh.face_count() * 4);
    let mut uvs = Vec::with_capacity(mesh.face_count() * 4);

    for (f, cuv) in mesh.faces().iter().zip(mesh.uvs()) {
        let mut mid = [0usize; 3];
        let mut mid_uv = [cuv[0]; 3];
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            mid[k] = *midpoint.entry(key).or_insert_with(|| {
                verts.push((positions[a] + positions[b]) * T::half());
                if let Some(w) = weights.as_mut() {
                    let row = blend_rows(&w[a], &w[b]);
                    w.push(row);
                }
                verts.len() - 1
            });
            mid_uv[k] = (cuv[k] + cuv[(k + 1) % 3]) * T::half();
        }
        // Corners: a=f0, b=f1, c=f2; midpoints: ab=mid0, bc=mid1, ca=mid2.
        let [a, b, c] = *f;
        let [ab, bc, ca] = mid;
        let [ua, ub, uc] = *cuv;
        let [uab, ubc, uca] = mid_uv;
        faces.push([a, ab, ca]);
        uvs.push([ua, uab, uca]);
        faces.push([ab, b, bc]);
        uvs.push([uab, ub, ubc]);
        faces.push([ca, bc, c]);
        uvs.push([uca, ubc, uc]);
        faces.push([ab, bc, ca]);
        uvs.push([uab, ubc, uca]);
    }
    let out = TriangleMesh::new(verts, faces, uvs)?;
    match weights {
        Some(w) => out.with_skin_weights(w),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec2;
    use crate::primitives;

    #[test]
    fn single_triangle_becomes_four() {
        let m = TriangleMesh::new(
            vec![Vec3::<f64>::zero(), Vec3::unit_x(), Vec3::unit_y()],
            vec![[0, 1, 2]],
            vec![[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]],
        )
        .unwrap();
        let s = subdivide_once(&m, m.vertices()).unwrap();
        assert_eq!((s.face_count(), s.vertex_count()), (4, 6));
    }

    #[test]
    fn icosahedron_counts() {
        let m = primitives::icosphere::<f64>(1.0, 0);
        assert_eq!((m.face_count(), m.vertex_count(), m.edges().len()), (20, 12, 30));
        let s = subdivide_once(&m, m.vertices()).unwrap();
        assert_eq!((s.face_count(), s.vertex_count()), (80, 42));
    }

    #[test]
    fn planar_area_is_preserved() {
        let m = primitives::grid::<f64>(5, 3, 0.37);
        let s = subdivide_once(&m, m.vertices()).unwrap();
        assert!((s.area(s.vertices()) - m.area(m.vertices())).abs() < 1e-12);
    }

    #[test]
    fn midpoint_uvs_lie_on_parent_uv_edges() {
        let m = primitives::uv_sphere::<f64>(1.0, 6, 4);
        let s = subdivide_once(&m, m.vertices()).unwrap();
        for (fi, parent) in m.uvs().iter().enumerate() {
            // Corner children of parent fi are the first three of its block of four.
            let child = s.uvs()[4 * fi];
            assert_eq!(child[0], parent[0]);
            let mid = child[1];
            let (a, b) = (parent[0], parent[1]);
            assert!((a - mid).perp_dot(b - mid).abs() < 1e-15);
            assert!((mid - (a + b) * 0.5).norm() < 1e-15);
        }
    }

    #[test]
    fn skin_weights_follow_midpoints() {
        let m = primitives::grid::<f64>(1, 1, 1.0);
        let w: Vec<_> = (0..m.vertex_count())
            .map(|v| if v % 2 == 0 { vec![(0, 1.0)] } else { vec![(1, 1.0)] })
            .collect();
        let m = m.with_skin_weights(w).unwrap();
        let s = subdivide_once(&m, m.vertices()).unwrap();
        for row in s.skin_weights().unwrap() {
            let sum: f64 = row.iter().map(|r| r.1).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}

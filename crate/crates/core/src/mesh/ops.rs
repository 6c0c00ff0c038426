use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::real::Real;

use super::TriangleMesh;

/// Faces with area at or below this (m²) are degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FaceGeometry<T> {
    /// Unit normals following counter-clockwise winding.
    pub normals: Vec<Vec3<T>>,
    pub areas: Vec<T>,
}

pub fn face_geometry<T: Real>(
    mesh: &TriangleMesh<T>,
    positions: &[Vec3<T>],
) -> Result<FaceGeometry<T>> {
    mesh.check_positions(positions)?;
    let eps = T::lit(DEGENERATE_AREA);
    let mut normals = Vec::with_capacity(mesh.face_count());
    let mut areas = Vec::with_capacity(mesh.face_count());
    let mut degenerate = Vec::new();
    for (fi, f) in mesh.faces().iter().enumerate() {
        let (a, b, c) = (positions[f[0]], positions[f[1]], positions[f[2]]);
        let cr = (b - a).cross(c - a);
        let len = cr.norm();
        let area = len * T::half();
        if !(area > eps) {
            degenerate.push(fi);
            normals.push(Vec3::zero());
        } else {
            normals.push(cr / len);
        }
        areas.push(area);
    }
    if !degenerate.is_empty() {
        return Err(Error::DegenerateFaces(degenerate));
    }
    Ok(FaceGeometry { normals, areas })
}

/// Angle-weighted vertex pseudo-normals.
pub fn vertex_normals<T: Real>(mesh: &TriangleMesh<T>, positions: &[Vec3<T>]) -> Result<Vec<Vec3<T>>> {
    let geo = face_geometry(mesh, positions)?;
    let mut acc = vec![Vec3::zero(); mesh.vertex_count()];
    for (fi, f) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            let p = positions[f[k]];
            let e1 = (positions[f[(k + 1) % 3]] - p).normalize();
            let e2 = (positions[f[(k + 2) % 3]] - p).normalize();
            let angle = e1.dot(e2).max(-T::one()).min(T::one()).acos();
            acc[f[k]] += geo.normals[fi] * angle;
        }
    }
    Ok(acc.into_iter().map(|n| n.try_normalize().unwrap_or_else(Vec3::zero)).collect())
}

/// Uniform (umbrella) Laplacian `L_v = x_v − mean(x_j, j ∈ N(v))`.
#[derive(Clone, Debug)]
pub struct Laplacian {
    neighbors: Vec<Vec<usize>>,
}

impl Laplacian {
    pub fn new<T: Real>(mesh: &TriangleMesh<T>) -> Result<Self> {
        let neighbors = mesh.neighbors().to_vec();
        let isolated: Vec<usize> = neighbors
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_empty())
            .map(|(i, _)| i)
            .collect();
        if !isolated.is_empty() {
            return Err(Error::IsolatedVertices(isolated));
        }
        Ok(Self { neighbors })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn apply<T: Real>(&self, x: &[Vec3<T>]) -> Vec<Vec3<T>> {
        self.neighbors
            .iter()
            .enumerate()
            .map(|(v, nb)| {
                let mut mean = Vec3::zero();
                for &j in nb {
                    mean += x[j];
                }
                x[v] - mean / T::from_usize_lossy(nb.len())
            })
            .collect()
    }

    /// `Lᵀ g`, used to pull gradients back through the Laplacian.
    pub fn apply_transpose<T: Real>(&self, g: &[Vec3<T>]) -> Vec<Vec3<T>> {
        let mut out = g.to_vec();
        for (v, nb) in self.neighbors.iter().enumerate() {
            let share = g[v] / T::from_usize_lossy(nb.len());
            for &j in nb {
                out[j] -= share;
            }
        }
        out
    }

    /// Dense matrix form (row-major, `n × n`); for tests and small meshes.
    pub fn dense<T: Real>(&self) -> Vec<Vec<T>> {
        let n = self.neighbors.len();
        let mut m = vec![vec![T::zero(); n]; n];
        for (v, nb) in self.neighbors.iter().enumerate() {
            m[v][v] = T::one();
            let w = T::one() / T::from_usize_lossy(nb.len());
            for &j in nb {
                m[v][j] -= w;
            }
        }
        m
    }
}

pub fn vertex_laplacian<T: Real>(
    mesh: &TriangleMesh<T>,
    positions: &[Vec3<T>],
) -> Result<Vec<Vec3<T>>> {
    mesh.check_positions(positions)?;
    Ok(Laplacian::new(mesh)?.apply(positions))
}

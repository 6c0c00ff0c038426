use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::mesh::{Laplacian, TriangleMesh};
use crate::real::pairwise_sum;

/// Template regularizers with gradients with respect to the refined
/// positions.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceLosses {
    /// Mean `‖(L V_before)_i − (L V_after)_i‖`.
    pub reg: f64,
    /// Mean `‖(L V_after)_i‖`.
    pub zero: f64,
    /// Mean over faces of the mean `1 − n_i·n_j` over edge-adjacent faces.
    pub normal: f64,
    /// Mean over faces of the population variance of the edge lengths.
    pub area: f64,
    pub grad_reg: Vec<Vec3<f64>>,
    pub grad_zero: Vec<Vec3<f64>>,
    pub grad_normal: Vec<Vec3<f64>>,
    pub grad_area: Vec<Vec3<f64>>,
}

/// Precomputed topology for repeated evaluation during refinement.
#[derive(Clone, Debug)]
pub struct SurfaceRegularizer {
    faces: Vec<[usize; 3]>,
    adjacency: Vec<Vec<usize>>,
    laplacian: Laplacian,
    /// `L V_before`.
    reference: Vec<Vec3<f64>>,
}

impl SurfaceRegularizer {
    pub fn new(mesh: &TriangleMesh<f64>, before: &[Vec3<f64>]) -> Result<Self> {
        mesh.check_positions(before)?;
        let laplacian = Laplacian::new(mesh)?;
        let reference = laplacian.apply(before);
        Ok(Self { faces: mesh.faces().to_vec(), adjacency: mesh.face_adjacency(), laplacian, reference })
    }

    pub fn evaluate(&self, after: &[Vec3<f64>]) -> Result<SurfaceLosses> {
        if after.len() != self.reference.len() {
            return Err(Error::TopologyMismatch(format!(
                "{} reference vertices, {} refined",
                self.reference.len(),
                after.len()
            )));
        }
        let lap = self.laplacian.apply(after);
        let diff: Vec<Vec3<f64>> = self.reference.iter().zip(&lap).map(|(&b, &a)| b - a).collect();
        let (reg, g) = mean_norm(&diff);
        let grad_reg = self.laplacian.apply_transpose(&g).into_iter().map(|v| -v).collect();
        let (zero, g) = mean_norm(&lap);
        let grad_zero = self.laplacian.apply_transpose(&g);
        let (normal, grad_normal) = self.normal_consistency(after)?;
        let (area, grad_area) = self.edge_variance(after);
        Ok(SurfaceLosses { reg, zero, normal, area, grad_reg, grad_zero, grad_normal, grad_area })
    }

    fn normal_consistency(&self, x: &[Vec3<f64>]) -> Result<(f64, Vec<Vec3<f64>>)> {
        let nf = self.faces.len();
        let mut normals = Vec::with_capacity(nf);
        let mut degenerate = Vec::new();
        for (fi, f) in self.faces.iter().enumerate() {
            let c = (x[f[1]] - x[f[0]]).cross(x[f[2]] - x[f[0]]);
            let len = c.norm();
            if !(len > 0.0) {
                degenerate.push(fi);
            }
            normals.push((c / len, len));
        }
        if !degenerate.is_empty() {
            return Err(Error::DegenerateFaces(degenerate));
        }
        let inv = 1.0 / nf as f64;
        let per_face: Vec<f64> = self
            .adjacency
            .iter()
            .enumerate()
            .map(|(i, adj)| {
                if adj.is_empty() {
                    return 0.0;
                }
                adj.iter().map(|&j| 1.0 - normals[i].0.dot(normals[j].0)).sum::<f64>() / adj.len() as f64
            })
            .collect();
        let value = pairwise_sum(&per_face) * inv;

        let mut grad = vec![Vec3::zero(); x.len()];
        for (i, f) in self.faces.iter().enumerate() {
            let adj = &self.adjacency[i];
            if adj.is_empty() {
                continue;
            }
            // Each pair appears in both faces' averages.
            let mut g_n = Vec3::zero();
            for &j in adj {
                g_n -= normals[j].0 * (inv / adj.len() as f64 + inv / self.adjacency[j].len() as f64);
            }
            let (n, len) = normals[i];
            let g_c = (g_n - n * n.dot(g_n)) / len;
            let (e1, e2) = (x[f[1]] - x[f[0]], x[f[2]] - x[f[0]]);
            let (g1, g2) = (e2.cross(g_c), g_c.cross(e1));
            grad[f[1]] += g1;
            grad[f[2]] += g2;
            grad[f[0]] -= g1 + g2;
        }
        Ok((value, grad))
    }

    fn edge_variance(&self, x: &[Vec3<f64>]) -> (f64, Vec<Vec3<f64>>) {
        let inv = 1.0 / self.faces.len() as f64;
        let mut grad = vec![Vec3::zero(); x.len()];
        let mut per_face = Vec::with_capacity(self.faces.len());
        for f in &self.faces {
            let e = [0, 1, 2].map(|k| x[f[(k + 1) % 3]] - x[f[k]]);
            let l = e.map(|v| v.norm());
            let mean = (l[0] + l[1] + l[2]) / 3.0;
            per_face.push(l.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / 3.0);
            for k in 0..3 {
                if l[k] == 0.0 {
                    continue;
                }
                // ∂Var/∂l_k = 2 (l_k − mean) / 3, since the deviations sum to zero.
                let g = e[k] * (2.0 / 3.0 * (l[k] - mean) / l[k] * inv);
                grad[f[(k + 1) % 3]] += g;
                grad[f[k]] -= g;
            }
        }
        (pairwise_sum(&per_face) * inv, grad)
    }
}

/// Mean Euclidean norm of the rows and its gradient (zero rows get a zero
/// subgradient).
fn mean_norm(rows: &[Vec3<f64>]) -> (f64, Vec<Vec3<f64>>) {
    let inv = 1.0 / rows.len() as f64;
    let norms: Vec<f64> = rows.iter().map(|r| r.norm()).collect();
    let grad = rows.iter().zip(&norms).map(|(&r, &n)| if n > 0.0 { r * (inv / n) } else { Vec3::zero() }).collect();
    (pairwise_sum(&norms) * inv, grad)
}

/// One-shot form of [`SurfaceRegularizer`].
pub fn surface_regularizers(
    before_mesh: &TriangleMesh<f64>,
    before: &[Vec3<f64>],
    after_mesh: &TriangleMesh<f64>,
    after: &[Vec3<f64>],
) -> Result<SurfaceLosses> {
    if before_mesh.faces() != after_mesh.faces() {
        return Err(Error::TopologyMismatch("face lists differ".into()));
    }
    after_mesh.check_positions(after)?;
    SurfaceRegularizer::new(before_mesh, before)?.evaluate(after)
}

//! Embedded-graph deformation with per-vertex displacements, followed by
//! dual-quaternion skinning.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::linalg::{Mat3, Vec3};
use crate::mesh::{TriangleMesh, WeightRow};
use crate::real::Real;
use crate::skeleton::{dq_skin, forward_kinematics, SkeletalMotion, Skeleton};

/// Number of graph nodes influencing each vertex.
pub const DEFAULT_NODES_PER_VERTEX: usize = 4;

/// Embedded deformation graph.
///
/// JSON layout: `{"nodes": [[x,y,z],...], "anchors": [v,...], "edges": [[a,b],...],
/// "weights": [[[node, w],...], ...]}`. `weights` may be omitted and computed
/// with [`geodesic_weights`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct EmbeddedGraph<T> {
    pub nodes: Vec<Vec3<T>>,
    /// Mesh vertex each node is attached to.
    pub anchors: Vec<usize>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub weights: Vec<WeightRow<T>>,
}

impl<T: Real> EmbeddedGraph<T> {
    /// Graph whose nodes sit on the given mesh vertices, with geodesic weights.
    pub fn from_anchors(mesh: &TriangleMesh<T>, anchors: Vec<usize>, k: usize) -> Result<Self> {
        let nodes = anchors
            .iter()
            .map(|&a| {
                mesh.vertices()
                    .get(a)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("anchor {a} is not a mesh vertex")))
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = geodesic_weights(mesh, &anchors, k)?;
        Ok(Self { nodes, anchors, edges: Vec::new(), weights })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fsutil::read_to_string(path)?)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Checks weight rows: non-negative, summing to 1 within 1e-6, valid node
    /// indices, at most `max_nonzeros` entries.
    pub fn validate(&self, vertex_count: usize, max_nonzeros: usize) -> Result<()> {
        if self.anchors.len() != self.nodes.len() {
            return Err(Error::dim("graph anchors", self.nodes.len(), self.anchors.len()));
        }
        if self.weights.len() != vertex_count {
            return Err(Error::dim("graph weight rows", vertex_count, self.weights.len()));
        }
        let n = self.nodes.len();
        if let Some(e) = self.edges.iter().find(|e| e[0] >= n || e[1] >= n) {
            return Err(Error::InvalidArgument(format!("graph edge {e:?} outside 0..{n}")));
        }
        for (v, row) in self.weights.iter().enumerate() {
            let sum: T = row.iter().map(|r| r.1).sum();
            let nnz = row.iter().filter(|r| r.1 != T::zero()).count();
            if row.iter().any(|&(k, w)| k >= n || w < T::zero())
                || (sum - T::one()).abs() > T::lit(1e-6)
                || nnz > max_nonzeros
            {
                return Err(Error::InvalidArgument(format!("invalid graph weight row for vertex {v}")));
            }
        }
        Ok(())
    }
}

/// Per-node Euler angles and translations plus per-vertex displacements.
///
/// JSON layout: `{"rotations": [[ax,ay,az],...], "translations": [[x,y,z],...],
/// "displacements": [[x,y,z],...]}`; omitted arrays mean zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct GraphParams<T> {
    #[serde(default)]
    pub rotations: Vec<Vec3<T>>,
    #[serde(default)]
    pub translations: Vec<Vec3<T>>,
    #[serde(default)]
    pub displacements: Vec<Vec3<T>>,
}

impl<T: Real> GraphParams<T> {
    pub fn identity(nodes: usize, vertices: usize) -> Self {
        Self {
            rotations: vec![Vec3::zero(); nodes],
            translations: vec![Vec3::zero(); nodes],
            displacements: vec![Vec3::zero(); vertices],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fsutil::read_to_string(path)?)
    }

    /// Fills omitted arrays with zeros and checks lengths.
    pub fn resolved(&self, nodes: usize, vertices: usize) -> Result<Self> {
        let fill = |v: &Vec<Vec3<T>>, n: usize, what: &'static str| -> Result<Vec<Vec3<T>>> {
            match v.len() {
                0 => Ok(vec![Vec3::zero(); n]),
                len if len == n => Ok(v.clone()),
                len => Err(Error::dim(what, n, len)),
            }
        };
        Ok(Self {
            rotations: fill(&self.rotations, nodes, "node rotations")?,
            translations: fill(&self.translations, nodes, "node translations")?,
            displacements: fill(&self.displacements, vertices, "vertex displacements")?,
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier<T>(T, usize);

impl<T: Real> Eq for Frontier<T> {}

impl<T: Real> Ord for Frontier<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        // Min-heap on distance, then vertex index for determinism.
        o.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal).then_with(|| o.1.cmp(&self.1))
    }
}

impl<T: Real> PartialOrd for Frontier<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Shortest edge-path distances from `source` to every vertex.
pub fn dijkstra<T: Real>(mesh: &TriangleMesh<T>, source: usize) -> Vec<T> {
    let verts = mesh.vertices();
    let nbrs = mesh.neighbors();
    let mut dist = vec![T::infinity(); verts.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = T::zero();
    heap.push(Frontier(T::zero(), source));
    while let Some(Frontier(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &u in &nbrs[v] {
            let nd = d + (verts[u] - verts[v]).norm();
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Frontier(nd, u));
            }
        }
    }
    dist
}

/// Node weights from geodesic distances: keep the `k` nearest nodes and use
/// `(1 - d / d_ref)²` normalized to sum 1, where `d_ref` is the distance to
/// the `(k+1)`-th nearest node.
///
/// With `k` or fewer nodes there is no `(k+1)`-th one; `d_ref` is then twice
/// the largest retained distance. A vertex on an anchor gets weight 1 on that
/// node, and a row whose kernel vanishes everywhere is shared uniformly among
/// its nearest nodes.
pub fn geodesic_weights<T: Real>(mesh: &TriangleMesh<T>, anchors: &[usize], k: usize) -> Result<Vec<WeightRow<T>>> {
    if anchors.is_empty() {
        return Err(Error::Empty("embedded graph nodes"));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("nodes per vertex must be positive".into()));
    }
    let nv = mesh.vertex_count();
    if let Some(&a) = anchors.iter().find(|&&a| a >= nv) {
        return Err(Error::InvalidArgument(format!("anchor {a} is not a mesh vertex")));
    }
    let dists: Vec<Vec<T>> = anchors.par_iter().map(|&a| dijkstra(mesh, a)).collect();
    (0..nv)
        .into_par_iter()
        .map(|v| {
            let mut cand: Vec<(T, usize)> = dists.iter().enumerate().map(|(n, d)| (d[v], n)).collect();
            cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
            if !cand[0].0.is_finite() {
                return Err(Error::DisconnectedVertex { vertex: v });
            }
            let keep = k.min(cand.len());
            if cand[0].0 == T::zero() {
                return Ok(vec![(cand[0].1, T::one())]);
            }
            let retained: Vec<(T, usize)> = cand[..keep].iter().copied().filter(|c| c.0.is_finite()).collect();
            let d_ref = match cand.get(keep) {
                Some(&(d, _)) if d.is_finite() => d,
                _ => retained.last().unwrap().0 * T::two(),
            };
            let mut row: WeightRow<T> = retained
                .iter()
                .map(|&(d, n)| {
                    let s = (T::one() - d / d_ref).max(T::zero());
                    (n, s * s)
                })
                .collect();
            let total: T = row.iter().map(|r| r.1).sum();
            if total > T::zero() {
                for r in &mut row {
                    r.1 /= total;
                }
            } else {
                let dmin = retained[0].0;
                let ties: Vec<usize> = retained.iter().filter(|c| c.0 == dmin).map(|c| c.1).collect();
                let w = T::one() / T::from_usize_lossy(ties.len());
                row = ties.into_iter().map(|n| (n, w)).collect();
            }
            row.retain(|r| r.1 > T::zero());
            row.sort_unstable_by_key(|r| r.0);
            Ok(row)
        })
        .collect()
}

/// Canonical-pose deformation
/// `Y_v = D_v + Σ_k w_vk (R(A_k)(M_v − G_k) + G_k + T_k)`.
pub fn embedded_deform<T: Real>(rest: &[Vec3<T>], graph: &EmbeddedGraph<T>, params: &GraphParams<T>) -> Result<Vec<Vec3<T>>> {
    if graph.weights.len() != rest.len() {
        return Err(Error::dim("graph weight rows", rest.len(), graph.weights.len()));
    }
    let p = params.resolved(graph.node_count(), rest.len())?;
    let rot: Vec<Mat3<T>> = p.rotations.iter().map(|&a| Mat3::from_euler_xyz(a)).collect();
    let n = graph.node_count();
    rest.par_iter()
        .zip(graph.weights.par_iter())
        .zip(p.displacements.par_iter())
        .enumerate()
        .map(|(v, ((&m, row), &d))| {
            let mut y = d;
            for &(k, w) in row {
                if k >= n {
                    return Err(Error::InvalidArgument(format!("vertex {v} references graph node {k} of {n}")));
                }
                let g = graph.nodes[k];
                y += (rot[k] * (m - g) + g + p.translations[k]) * w;
            }
            Ok(y)
        })
        .collect()
}

/// Posed, deformed template: embedded deformation in the canonical pose
/// followed by skinning with the current frame of `motion`.
pub fn deformable_model<T: Real>(
    template: &TriangleMesh<T>,
    graph: &EmbeddedGraph<T>,
    params: &GraphParams<T>,
    skeleton: &Skeleton,
    motion: &SkeletalMotion<T>,
) -> Result<Vec<Vec3<T>>> {
    let weights = template
        .skin_weights()
        .ok_or_else(|| Error::InvalidArgument("template has no skinning weights".into()))?;
    let canonical = embedded_deform(template.vertices(), graph, params)?;
    let dqs = forward_kinematics(skeleton, motion.current())?;
    dq_skin(&canonical, weights, &dqs)
}

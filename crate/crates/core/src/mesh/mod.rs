//! Triangle meshes with per-corner UV atlases.

mod obj;
mod ops;
mod seams;
mod subdivide;

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{Vec2, Vec3};
use crate::real::Real;

pub use obj::{load_obj, parse_obj, write_obj, write_obj_string};
pub use ops::{
    face_geometry, vertex_laplacian, vertex_normals, FaceGeometry, Laplacian,
    DEGENERATE_AREA,
};
pub use seams::{extract_seams, SeamEdgeList, SeamPair, SEAM_UV_TOLERANCE};
pub use subdivide::subdivide_once;

/// Sparse skinning/graph weight row: `(index, weight)` pairs.
pub type WeightRow<T> = Vec<(usize, T)>;

/// Undirected mesh edge with its incident faces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    /// Lower vertex index.
    pub a: usize,
    /// Higher vertex index.
    pub b: usize,
    pub faces: Vec<usize>,
}

#[derive(Debug)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
    uvs: Vec<[Vec2<T>; 3]>,
    skin_weights: Option<Vec<WeightRow<T>>>,
    neighbors: OnceLock<Vec<Vec<usize>>>,
    edges: OnceLock<Vec<Edge>>,
}

impl<T: Real> Clone for TriangleMesh<T> {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            faces: self.faces.clone(),
            uvs: self.uvs.clone(),
            skin_weights: self.skin_weights.clone(),
            neighbors: self.neighbors.clone(),
            edges: self.edges.clone(),
        }
    }
}

impl<T: Real> TriangleMesh<T> {
    /// Builds a mesh and checks index, UV and face invariants.
    pub fn new(
        vertices: Vec<Vec3<T>>,
        faces: Vec<[usize; 3]>,
        uvs: Vec<[Vec2<T>; 3]>,
    ) -> Result<Self> {
        if uvs.len() != faces.len() {
            return Err(Error::dim("uv corners per face", faces.len(), uvs.len()));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex outside 0..{n}: {f:?}"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex: {f:?}")));
            }
        }
        let (lo, hi) = (T::zero(), T::one());
        for (fi, corners) in uvs.iter().enumerate() {
            for uv in corners {
                if !(uv.x >= lo && uv.x <= hi && uv.y >= lo && uv.y <= hi) {
                    return Err(Error::InvalidMesh(format!(
                        "face {fi} has uv ({}, {}) outside [0,1]^2",
                        uv.x, uv.y
                    )));
                }
            }
        }
        if let Some(v) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not finite")));
        }
        Ok(Self {
            vertices,
            faces,
            uvs,
            skin_weights: None,
            neighbors: OnceLock::new(),
            edges: OnceLock::new(),
        })
    }

    /// Attaches per-vertex skinning weights (rows must sum to 1 within 1e-6).
    pub fn with_skin_weights(mut self, weights: Vec<WeightRow<T>>) -> Result<Self> {
        if weights.len() != self.vertices.len() {
            return Err(Error::dim("skin weight rows", self.vertices.len(), weights.len()));
        }
        let tol = T::lit(1e-6);
        for (v, row) in weights.iter().enumerate() {
            let sum: T = row.iter().map(|&(_, w)| w).sum();
            if (sum - T::one()).abs() > tol || row.iter().any(|&(_, w)| w < T::zero()) {
                return Err(Error::InvalidMesh(format!(
                    "skin weights of vertex {v} are negative or sum to {sum}"
                )));
            }
        }
        self.skin_weights = Some(weights);
        Ok(self)
    }

    /// Same topology and UVs with new rest positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3<T>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::dim("vertex count", self.vertices.len(), vertices.len()));
        }
        let mut m = self.clone();
        m.vertices = vertices;
        Ok(m)
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    #[inline]
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    #[inline]
    pub fn uvs(&self) -> &[[Vec2<T>; 3]] {
        &self.uvs
    }

    pub fn skin_weights(&self) -> Option<&[WeightRow<T>]> {
        self.skin_weights.as_deref()
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Sorted, de-duplicated one-ring neighbours per vertex.
    pub fn neighbors(&self) -> &[Vec<usize>] {
        self.neighbors.get_or_init(|| {
            let mut nb = vec![Vec::new(); self.vertices.len()];
            for f in &self.faces {
                for k in 0..3 {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    nb[a].push(b);
                    nb[b].push(a);
                }
            }
            for row in nb.iter_mut() {
                row.sort_unstable();
                row.dedup();
            }
            nb
        })
    }

    /// Undirected edges in lexicographic `(a, b)` order.
    pub fn edges(&self) -> &[Edge] {
        self.edges.get_or_init(|| {
            let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
            for (fi, f) in self.faces.iter().enumerate() {
                for k in 0..3 {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    map.entry((a.min(b), a.max(b))).or_default().push(fi);
                }
            }
            let mut edges: Vec<Edge> =
                map.into_iter().map(|((a, b), faces)| Edge { a, b, faces }).collect();
            edges.sort_unstable_by_key(|e| (e.a, e.b));
            edges
        })
    }

    /// Pairs of faces sharing an edge, per face (the face adjacency used by
    /// the normal-consistency regularizer).
    pub fn face_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.faces.len()];
        for e in self.edges() {
            for (i, &f) in e.faces.iter().enumerate() {
                for &g in &e.faces[i + 1..] {
                    adj[f].push(g);
                    adj[g].push(f);
                }
            }
        }
        for row in adj.iter_mut() {
            row.sort_unstable();
            row.dedup();
        }
        adj
    }

    /// Checks that `positions` can stand in for this mesh's vertices.
    pub fn check_positions(&self, positions: &[Vec3<T>]) -> Result<()> {
        if positions.len() != self.vertices.len() {
            return Err(Error::dim("positions", self.vertices.len(), positions.len()));
        }
        Ok(())
    }

    /// Corner index (0..3) of vertex `v` in face `f`.
    pub fn corner_of(&self, f: usize, v: usize) -> Option<usize> {
        self.faces[f].iter().position(|&x| x == v)
    }

    /// Total surface area at `positions`.
    pub fn area(&self, positions: &[Vec3<T>]) -> T {
        self.faces
            .iter()
            .map(|f| {
                let (a, b, c) = (positions[f[0]], positions[f[1]], positions[f[2]]);
                (b - a).cross(c - a).norm() * T::half()
            })
            .sum()
    }

    pub fn cast<U: Real>(&self) -> TriangleMesh<U> {
        let mut m = TriangleMesh::new(
            self.vertices.iter().map(|v| v.cast()).collect(),
            self.faces.clone(),
            self.uvs.iter().map(|c| [c[0].cast(), c[1].cast(), c[2].cast()]).collect(),
        )
        .expect("cast preserves mesh invariants");
        m.skin_weights = self.skin_weights.as_ref().map(|rows| {
            rows.iter()
                .map(|r| r.iter().map(|&(j, w)| (j, U::lit(w.to_f64_lossy()))).collect())
                .collect()
        });
        m
    }
}

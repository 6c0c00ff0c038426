//! Bounding-volume hierarchy for exact nearest-element queries on a posed mesh.

use std::collections::HashMap;

use crate::error::Result;
use crate::linalg::{Aabb, Vec2, Vec3};
use crate::mesh::{face_geometry, vertex_normals, TriangleMesh};
use crate::real::Real;

use super::closest::{closest_on_triangle, Region, TriangleHit};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
struct Node<T> {
    bbox: Aabb<T>,
    /// Leaf: first slot in `order`. Internal: index of the right child (the
    /// left child always follows its parent).
    index: u32,
    /// Number of faces for a leaf, 0 for internal nodes.
    count: u32,
}

/// Nearest face found by a query, with the feature of that face holding the
/// closest point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestHit<T> {
    pub face: usize,
    pub point: Vec3<T>,
    pub dist_sq: T,
    pub region: Region<T>,
}

/// Immutable query structure over the faces of a mesh at given positions.
///
/// Holds unit face normals and angle-weighted pseudo-normals for every
/// vertex and edge, used to sign distances.
#[derive(Clone, Debug)]
pub struct ClosestPointIndex<T> {
    positions: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
    uvs: Vec<[Vec2<T>; 3]>,
    face_normals: Vec<Vec3<T>>,
    /// Per face, the pseudo-normal of edges 0 = ab, 1 = bc, 2 = ca.
    edge_normals: Vec<[Vec3<T>; 3]>,
    vertex_normals: Vec<Vec3<T>>,
    nodes: Vec<Node<T>>,
    /// Face indices in leaf order.
    order: Vec<u32>,
    /// Triangle corners in leaf order.
    tris: Vec<[Vec3<T>; 3]>,
    /// Unit normal and offset of each triangle's plane, in leaf order.
    planes: Vec<(Vec3<T>, T)>,
    parents: Vec<u32>,
    leaf_of_face: Vec<u32>,
}

/// Builds the index; fails on degenerate faces.
pub fn build_index<T: Real>(mesh: &TriangleMesh<T>, positions: &[Vec3<T>]) -> Result<ClosestPointIndex<T>> {
    ClosestPointIndex::new(mesh, positions)
}

impl<T: Real> ClosestPointIndex<T> {
    pub fn new(mesh: &TriangleMesh<T>, positions: &[Vec3<T>]) -> Result<Self> {
        let geo = face_geometry(mesh, positions)?;
        let vnormals = vertex_normals(mesh, positions)?;
        let faces = mesh.faces().to_vec();

        // Edge pseudo-normal: the two adjacent face normals, each weighted by
        // the angle π it subtends around the edge, i.e. their plain average.
        let mut sums: HashMap<(usize, usize), Vec3<T>> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *sums.entry((a.min(b), a.max(b))).or_insert_with(Vec3::zero) += geo.normals[fi];
            }
        }
        let edge_normals = faces
            .iter()
            .enumerate()
            .map(|(fi, f)| {
                let mut out = [Vec3::zero(); 3];
                for (k, slot) in out.iter_mut().enumerate() {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    *slot = sums[&(a.min(b), a.max(b))].try_normalize().unwrap_or(geo.normals[fi]);
                }
                out
            })
            .collect();

        let mut order: Vec<u32> = (0..faces.len() as u32).collect();
        let boxes: Vec<Aabb<T>> = faces
            .iter()
            .map(|f| Aabb::from_points([&positions[f[0]], &positions[f[1]], &positions[f[2]]]))
            .collect();
        let centroids: Vec<Vec3<T>> = boxes.iter().map(|b| b.center()).collect();
        let mut nodes = Vec::with_capacity(2 * faces.len() / LEAF_SIZE + 1);
        if !faces.is_empty() {
            build_node(&mut nodes, &mut order, 0, &boxes, &centroids);
        }
        let tris: Vec<[Vec3<T>; 3]> = order
            .iter()
            .map(|&f| {
                let f = faces[f as usize];
                [positions[f[0]], positions[f[1]], positions[f[2]]]
            })
            .collect();
        // Slightly shrunk so rounding never lets the bound exceed the true distance.
        let shrink = T::one() - T::lit(1e-12);
        let planes = order
            .iter()
            .zip(&tris)
            .map(|(&f, t)| {
                let n = geo.normals[f as usize] * shrink;
                (n, n.dot(t[0]))
            })
            .collect();
        let mut parents = vec![0u32; nodes.len()];
        let mut leaf_of_face = vec![0u32; faces.len()];
        for (ni, n) in nodes.iter().enumerate() {
            if n.count > 0 {
                for slot in n.index..n.index + n.count {
                    leaf_of_face[order[slot as usize] as usize] = ni as u32;
                }
            } else {
                parents[ni + 1] = ni as u32;
                parents[n.index as usize] = ni as u32;
            }
        }
        Ok(Self {
            positions: positions.to_vec(),
            faces,
            uvs: mesh.uvs().to_vec(),
            face_normals: geo.normals,
            edge_normals,
            vertex_normals: vnormals,
            nodes,
            order,
            tris,
            planes,
            parents,
            leaf_of_face,
        })
    }

    pub fn positions(&self) -> &[Vec3<T>] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn uvs(&self) -> &[[Vec2<T>; 3]] {
        &self.uvs
    }

    pub fn face_normal(&self, f: usize) -> Vec3<T> {
        self.face_normals[f]
    }

    pub fn edge_normal(&self, f: usize, k: usize) -> Vec3<T> {
        self.edge_normals[f][k]
    }

    pub fn vertex_normal(&self, v: usize) -> Vec3<T> {
        self.vertex_normals[v]
    }

    pub fn vertex_normals(&self) -> &[Vec3<T>] {
        &self.vertex_normals
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.count > 0).count()
    }

    /// Bounds of all faces.
    pub fn bounds(&self) -> Aabb<T> {
        self.nodes.first().map(|n| n.bbox).unwrap_or_else(Aabb::empty)
    }

    pub fn triangle(&self, f: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.faces[f];
        [self.positions[a], self.positions[b], self.positions[c]]
    }

    /// Nearest face to `x`. Equidistant faces resolve to the lowest index, so
    /// the answer matches [`Self::closest_brute_force`] exactly.
    pub fn closest(&self, x: Vec3<T>) -> ClosestHit<T> {
        self.closest_from(x, None)
    }

    /// [`Self::closest`] starting from the distance to face `hint`, typically
    /// the answer for a nearby point. The result does not depend on the hint.
    pub fn closest_from(&self, x: Vec3<T>, hint: Option<usize>) -> ClosestHit<T> {
        let mut best = ClosestHit { face: usize::MAX, point: x, dist_sq: T::infinity(), region: Region::Vertex(0) };
        if self.nodes.is_empty() {
            return best;
        }
        let Some(f) = hint.filter(|&f| f < self.faces.len()) else {
            self.descend(0, x, &mut best);
            return best;
        };
        // Scan the hint's leaf, then climb to the root and search every
        // sibling subtree the current bound cannot exclude.
        let mut node = self.leaf_of_face[f];
        self.scan_leaf(node as usize, x, &mut best);
        while node != 0 {
            let parent = self.parents[node as usize];
            let right = self.nodes[parent as usize].index;
            let sibling = if node == right { parent + 1 } else { right };
            self.descend(sibling, x, &mut best);
            node = parent;
        }
        best
    }

    fn scan_leaf(&self, ni: usize, x: Vec3<T>, best: &mut ClosestHit<T>) {
        let node = &self.nodes[ni];
        let start = node.index as usize;
        for slot in start..start + node.count as usize {
            // The plane distance bounds the triangle distance from below.
            let plane = self.planes[slot];
            let h = plane.0.dot(x) - plane.1;
            if h * h > best.dist_sq {
                continue;
            }
            let hit = closest_on_triangle(x, &self.tris[slot]);
            let f = self.order[slot] as usize;
            if hit.dist_sq < best.dist_sq || (hit.dist_sq == best.dist_sq && f < best.face) {
                *best = ClosestHit { face: f, point: hit.point, dist_sq: hit.dist_sq, region: hit.region };
            }
        }
    }

    /// Near-first traversal of the subtree at `root`, pruning boxes strictly
    /// farther than the best hit so ties are still visited.
    fn descend(&self, root: u32, x: Vec3<T>, best: &mut ClosestHit<T>) {
        let d = self.nodes[root as usize].bbox.distance_squared(x);
        if d > best.dist_sq {
            return;
        }
        let mut stack = [(0u32, T::zero()); 64];
        let mut top = 1;
        stack[0] = (root, d);
        while top > 0 {
            top -= 1;
            let (ni, d) = stack[top];
            if d > best.dist_sq {
                continue;
            }
            let node = &self.nodes[ni as usize];
            if node.count > 0 {
                self.scan_leaf(ni as usize, x, best);
                continue;
            }
            let (l, r) = (ni + 1, node.index);
            let dl = self.nodes[l as usize].bbox.distance_squared(x);
            let dr = self.nodes[r as usize].bbox.distance_squared(x);
            let (near, far) = if dl <= dr { ((l, dl), (r, dr)) } else { ((r, dr), (l, dl)) };
            if far.1 <= best.dist_sq {
                stack[top] = far;
                top += 1;
            }
            if near.1 <= best.dist_sq {
                stack[top] = near;
                top += 1;
            }
        }
    }

    /// Exhaustive scan over every face with the same tie rule as [`Self::closest`].
    pub fn closest_brute_force(&self, x: Vec3<T>) -> ClosestHit<T> {
        let mut best = ClosestHit { face: usize::MAX, point: x, dist_sq: T::infinity(), region: Region::Vertex(0) };
        for f in 0..self.faces.len() {
            let TriangleHit { point, dist_sq, region } = closest_on_triangle(x, &self.triangle(f));
            if dist_sq < best.dist_sq {
                best = ClosestHit { face: f, point, dist_sq, region };
            }
        }
        best
    }
}

fn build_node<T: Real>(
    nodes: &mut Vec<Node<T>>,
    order: &mut [u32],
    offset: usize,
    boxes: &[Aabb<T>],
    centroids: &[Vec3<T>],
) -> usize {
    let bbox = order.iter().fold(Aabb::empty(), |acc, &f| acc.union(&boxes[f as usize]));
    let me = nodes.len();
    nodes.push(Node { bbox, index: offset as u32, count: order.len() as u32 });
    if order.len() <= LEAF_SIZE {
        return me;
    }
    let cb = Aabb::from_points(order.iter().map(|&f| &centroids[f as usize]));
    let e = cb.extent();
    let axis = if e.x >= e.y && e.x >= e.z {
        0
    } else if e.y >= e.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .partial_cmp(&centroids[b as usize][axis])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build_node(nodes, left, offset, boxes, centroids);
    let r = build_node(nodes, right, offset + mid, boxes, centroids);
    nodes[me].index = r as u32;
    nodes[me].count = 0;
    me
}

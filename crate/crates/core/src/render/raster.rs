use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::Vec3;
use crate::mesh::TriangleMesh;

use super::camera::Camera;

const TILE: usize = 32;
/// Triangles with a corner closer than this (camera `z`, m) are skipped.
pub const NEAR_PLANE: f64 = 1e-3;

/// Visits the pixel centers covered by a 2D triangle inside the pixel window
/// `[x0, x1) × [y0, y1)`, with the top-left fill rule, passing barycentrics
/// of the three corners. Degenerate triangles cover nothing.
pub fn raster_triangle(
    p: [(f64, f64); 3],
    window: (usize, usize, usize, usize),
    mut visit: impl FnMut(usize, usize, [f64; 3]),
) {
    let edge = |a: (f64, f64), b: (f64, f64), q: (f64, f64)| (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0);
    let area = edge(p[0], p[1], p[2]);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    // Orient so the interior has positive edge functions.
    let (order, area) = if area > 0.0 { ([0, 1, 2], area) } else { ([0, 2, 1], -area) };
    let q = order.map(|k| p[k]);
    // Image y grows downwards: a top edge runs in +x, a left edge in −y.
    let owns = |a: (f64, f64), b: (f64, f64)| {
        let (ex, ey) = (b.0 - a.0, b.1 - a.1);
        (ey == 0.0 && ex > 0.0) || ey < 0.0
    };
    let own = [owns(q[1], q[2]), owns(q[2], q[0]), owns(q[0], q[1])];
    let (x0, y0, x1, y1) = window;
    let lo_x = q.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let hi_x = q.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let lo_y = q.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi_y = q.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let clamp = |v: f64, lo: usize, hi: usize| (v.max(lo as f64).min(hi as f64)) as usize;
    let (ix0, ix1) = (clamp((lo_x - 0.5).floor(), x0, x1), clamp((hi_x - 0.5).ceil() + 1.0, x0, x1));
    let (iy0, iy1) = (clamp((lo_y - 0.5).floor(), y0, y1), clamp((hi_y - 0.5).ceil() + 1.0, y0, y1));
    for j in iy0..iy1 {
        for i in ix0..ix1 {
            let c = (i as f64 + 0.5, j as f64 + 0.5);
            let w = [edge(q[1], q[2], c), edge(q[2], q[0], c), edge(q[0], q[1], c)];
            let inside = (0..3).all(|k| w[k] > 0.0 || (w[k] == 0.0 && own[k]));
            if inside {
                let mut b = [0.0; 3];
                for k in 0..3 {
                    b[order[k]] = w[k] / area;
                }
                visit(i, j, b);
            }
        }
    }
}

/// Nearest surface per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    /// Distance along the unit pixel ray; `+∞` for background.
    pub depth: Vec<f64>,
    /// Visible face, `u32::MAX` for background.
    pub face: Vec<u32>,
    /// Perspective-correct barycentrics on the visible face.
    pub bary: Vec<[f64; 3]>,
}

impl DepthMap {
    pub fn is_foreground(&self, i: usize, j: usize) -> bool {
        self.face[j * self.width + i] != u32::MAX
    }

    /// 1 for covered pixels, 0 for background.
    pub fn mask(&self) -> Vec<f64> {
        self.face.iter().map(|&f| if f == u32::MAX { 0.0 } else { 1.0 }).collect()
    }

    pub fn foreground_pixels(&self) -> Vec<(usize, usize)> {
        (0..self.height)
            .flat_map(|j| (0..self.width).map(move |i| (i, j)))
            .filter(|&(i, j)| self.is_foreground(i, j))
            .collect()
    }
}

/// Z-buffered rasterization of `positions` through `camera`; tiles are
/// rasterized in parallel, triangles within a tile in index order (ties go
/// to the lower face index).
pub fn rasterize_depth(mesh: &TriangleMesh<f64>, positions: &[Vec3<f64>], camera: &Camera) -> Result<DepthMap> {
    camera.validate()?;
    mesh.check_positions(positions)?;
    let (w, h) = (camera.width, camera.height);
    let projected: Vec<Option<(f64, f64, f64)>> =
        positions.iter().map(|&p| camera.project(p).filter(|&(_, _, z)| z > NEAR_PLANE)).collect();
    let (tx, ty) = (w.div_ceil(TILE), h.div_ceil(TILE));
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tx * ty];
    let mut screen = Vec::with_capacity(mesh.face_count());
    for (fi, f) in mesh.faces().iter().enumerate() {
        let corners = [projected[f[0]], projected[f[1]], projected[f[2]]];
        let Some(c) = corners.iter().copied().collect::<Option<Vec<_>>>() else {
            screen.push(None);
            continue;
        };
        let c = [c[0], c[1], c[2]];
        let lo_x = c.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let hi_x = c.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
        let lo_y = c.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let hi_y = c.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        screen.push(Some(c));
        if hi_x < 0.0 || hi_y < 0.0 || lo_x > w as f64 || lo_y > h as f64 {
            continue;
        }
        let t = |v: f64, n: usize| ((v.max(0.0) as usize) / TILE).min(n - 1);
        for by in t(lo_y, ty)..=t(hi_y, ty) {
            for bx in t(lo_x, tx)..=t(hi_x, tx) {
                bins[by * tx + bx].push(fi as u32);
            }
        }
    }

    let tiles: Vec<(usize, Vec<(usize, f64, u32, [f64; 3])>)> = bins
        .par_iter()
        .enumerate()
        .map(|(b, faces)| {
            let (x0, y0) = ((b % tx) * TILE, (b / tx) * TILE);
            let (x1, y1) = ((x0 + TILE).min(w), (y0 + TILE).min(h));
            let tw = x1 - x0;
            let mut z = vec![f64::INFINITY; tw * (y1 - y0)];
            let mut frag = vec![(u32::MAX, [0.0; 3]); z.len()];
            for &fi in faces {
                let c = screen[fi as usize].unwrap();
                let inv = [1.0 / c[0].2, 1.0 / c[1].2, 1.0 / c[2].2];
                raster_triangle([(c[0].0, c[0].1), (c[1].0, c[1].1), (c[2].0, c[2].1)], (x0, y0, x1, y1), |i, j, b| {
                    // 1/z is affine in screen space.
                    let s = b[0] * inv[0] + b[1] * inv[1] + b[2] * inv[2];
                    let depth = 1.0 / s;
                    let k = (j - y0) * tw + (i - x0);
                    if depth < z[k] {
                        z[k] = depth;
                        frag[k] = (fi, [b[0] * inv[0] / s, b[1] * inv[1] / s, b[2] * inv[2] / s]);
                    }
                });
            }
            let out = (y0..y1)
                .flat_map(|j| (x0..x1).map(move |i| (i, j)))
                .zip(z.into_iter().zip(frag))
                .filter(|(_, (_, (f, _)))| *f != u32::MAX)
                .map(|((i, j), (zc, (f, b)))| {
                    let ray_t = zc * camera.camera_dir(i as f64 + 0.5, j as f64 + 0.5).norm();
                    (j * w + i, ray_t, f, b)
                })
                .collect();
            (b, out)
        })
        .collect();

    let mut map = DepthMap {
        width: w,
        height: h,
        depth: vec![f64::INFINITY; w * h],
        face: vec![u32::MAX; w * h],
        bary: vec![[0.0; 3]; w * h],
    };
    for (_, frags) in tiles {
        for (k, t, f, b) in frags {
            map.depth[k] = t;
            map.face[k] = f;
            map.bary[k] = b;
        }
    }
    Ok(map)
}

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::mesh::{vertex_normals, TriangleMesh};

use super::raster::raster_triangle;

/// Atlas resolution of the motion textures.
pub const DEFAULT_TEXTURE_RESOLUTION: usize = 256;
/// Frames in a motion window: `f − 2`, `f − 1`, `f`.
pub const WINDOW_FRAMES: usize = 3;

/// Atlas-space pose encoding. Texel `(i, j)` (column, row) sits at UV
/// `((i + 0.5) / R, (j + 0.5) / R)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionTextureSet {
    pub resolution: usize,
    /// Root-relative scaled positions at frame `f`.
    pub position: Vec<[f64; 3]>,
    /// `T_p(f) − T_p(f − 1)`.
    pub velocity: Vec<[f64; 3]>,
    /// `T_v(f) − T_v(f − 1)`.
    pub acceleration: Vec<[f64; 3]>,
    /// UV of the texel center.
    pub uv: Vec<[f64; 2]>,
    /// Unit surface normals at frame `f`.
    pub normal: Vec<[f64; 3]>,
    pub mask: Vec<bool>,
}

impl MotionTextureSet {
    fn empty(r: usize) -> Self {
        Self {
            resolution: r,
            position: vec![[0.0; 3]; r * r],
            velocity: vec![[0.0; 3]; r * r],
            acceleration: vec![[0.0; 3]; r * r],
            uv: vec![[0.0; 2]; r * r],
            normal: vec![[0.0; 3]; r * r],
            mask: vec![false; r * r],
        }
    }

    pub fn covered(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// The five maps stacked channel-last as `[R, R, 14]` plus the mask.
    pub fn to_channels(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.mask.len() * 15);
        for k in 0..self.mask.len() {
            let m = if self.mask[k] { 1.0 } else { 0.0 };
            let row = self.position[k]
                .iter()
                .chain(&self.velocity[k])
                .chain(&self.acceleration[k])
                .chain(&self.uv[k])
                .chain(&self.normal[k])
                .chain(std::iter::once(&m));
            out.extend(row.map(|&v| v as f32));
        }
        out
    }
}

/// Bakes the pose window into atlas space by rasterizing each UV triangle.
///
/// `frames` holds posed vertices oldest first and `roots` the matching root
/// translations; the last three frames are used. Positions are normalized as
/// `(v − root) · scale`. Where UV charts overlap the lowest face index wins.
pub fn bake_motion_textures(
    mesh: &TriangleMesh<f64>,
    frames: &[Vec<Vec3<f64>>],
    roots: &[Vec3<f64>],
    resolution: usize,
    scale: f64,
) -> Result<MotionTextureSet> {
    if frames.len() < WINDOW_FRAMES {
        return Err(Error::WindowTooShort { needed: WINDOW_FRAMES, got: frames.len() });
    }
    if roots.len() != frames.len() {
        return Err(Error::dim("root translations per frame", frames.len(), roots.len()));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("texture resolution must be positive".into()));
    }
    let start = frames.len() - WINDOW_FRAMES;
    let (frames, roots) = (&frames[start..], &roots[start..]);
    for f in frames {
        mesh.check_positions(f)?;
    }
    let normalized: Vec<Vec<Vec3<f64>>> = frames
        .iter()
        .zip(roots)
        .map(|(f, &root)| f.iter().map(|&v| (v - root) * scale).collect())
        .collect();
    let normals = vertex_normals(mesh, &frames[2])?;

    let r = resolution;
    let rf = r as f64;
    let mut set = MotionTextureSet::empty(r);
    for (fi, face) in mesh.faces().iter().enumerate() {
        let uv = mesh.uvs()[fi];
        let corners = [0, 1, 2].map(|k| (uv[k].x * rf, uv[k].y * rf));
        let lerp = |v: &[Vec3<f64>], b: [f64; 3]| v[face[0]] * b[0] + v[face[1]] * b[1] + v[face[2]] * b[2];
        raster_triangle(corners, (0, 0, r, r), |i, j, b| {
            let k = j * r + i;
            if set.mask[k] {
                return;
            }
            let p = [0, 1, 2].map(|f| lerp(&normalized[f], b));
            let v = p[2] - p[1];
            let v_prev = p[1] - p[0];
            let n = lerp(&normals, b).try_normalize().unwrap_or_else(|| face_normal(&frames[2], face));
            set.mask[k] = true;
            set.position[k] = p[2].to_array();
            set.velocity[k] = v.to_array();
            set.acceleration[k] = (v - v_prev).to_array();
            set.uv[k] = [(i as f64 + 0.5) / rf, (j as f64 + 0.5) / rf];
            set.normal[k] = n.to_array();
        });
    }
    Ok(set)
}

fn face_normal(v: &[Vec3<f64>], f: &[usize; 3]) -> Vec3<f64> {
    (v[f[1]] - v[f[0]]).cross(v[f[2]] - v[f[0]]).try_normalize().unwrap_or_else(Vec3::unit_z)
}

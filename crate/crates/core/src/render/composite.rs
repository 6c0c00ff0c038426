use crate::error::{Error, Result};
use crate::linalg::{Vec2, Vec3};
use crate::mesh::TriangleMesh;

use super::camera::Camera;
use super::raster::rasterize_depth;

/// Straight-alpha RGBA image in atlas space, row `j` at `v = (j + 0.5) / H`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbaTexture {
    pub width: usize,
    pub height: usize,
    pub texels: Vec<[f64; 4]>,
}

impl RgbaTexture {
    pub fn new(width: usize, height: usize, texels: Vec<[f64; 4]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty("texture"));
        }
        if texels.len() != width * height {
            return Err(Error::dim("texels", width * height, texels.len()));
        }
        Ok(Self { width, height, texels })
    }

    pub fn filled(width: usize, height: usize, rgba: [f64; 4]) -> Self {
        Self { width, height, texels: vec![rgba; width * height] }
    }

    /// Bilinear lookup with clamp-to-edge addressing.
    pub fn sample(&self, uv: Vec2<f64>) -> [f64; 4] {
        let x = (uv.x * self.width as f64 - 0.5).clamp(0.0, (self.width - 1) as f64);
        let y = (uv.y * self.height as f64 - 0.5).clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let t = |i: usize, j: usize| self.texels[j * self.width + i];
        let mut out = [0.0; 4];
        for (c, o) in out.iter_mut().enumerate() {
            let top = t(x0, y0)[c] * (1.0 - fx) + t(x1, y0)[c] * fx;
            let bottom = t(x0, y1)[c] * (1.0 - fx) + t(x1, y1)[c] * fx;
            *o = top * (1.0 - fy) + bottom * fy;
        }
        out
    }
}

/// Blends an atlas-space edit over a rendered image: the template is
/// rasterized with depth testing, each visible pixel looks up the edit at
/// its UV and `out = α·icon + (1 − α)·render`.
pub fn composite_texture_edit(
    render: &[[f64; 3]],
    mesh: &TriangleMesh<f64>,
    positions: &[Vec3<f64>],
    camera: &Camera,
    edit: &RgbaTexture,
) -> Result<Vec<[f64; 3]>> {
    if render.len() != camera.width * camera.height {
        return Err(Error::dim("rendered pixels", camera.width * camera.height, render.len()));
    }
    let raster = rasterize_depth(mesh, positions, camera)?;
    let mut out = render.to_vec();
    for (k, px) in out.iter_mut().enumerate() {
        let f = raster.face[k];
        if f == u32::MAX {
            continue;
        }
        let uv = mesh.uvs()[f as usize];
        let b = raster.bary[k];
        let at = uv[0] * b[0] + uv[1] * b[1] + uv[2] * b[2];
        let icon = edit.sample(at);
        let a = icon[3];
        if a > 0.0 {
            for c in 0..3 {
                px[c] = a * icon[c] + (1.0 - a) * px[c];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two stacked squares facing the camera: the near one (faces 0, 1) maps
    /// to the left strip of the atlas, the far one (faces 2, 3) to the right.
    fn two_planes(near_half: f64) -> TriangleMesh<f64> {
        let quad = |z: f64, h: f64| {
            [Vec3::new(-h, -h, z), Vec3::new(h, -h, z), Vec3::new(h, h, z), Vec3::new(-h, h, z)]
        };
        let mut v = quad(-0.5, near_half).to_vec();
        v.extend(quad(0.5, 1.0));
        let uv = |u0: f64, u1: f64| {
            let c = [Vec2::new(u0, 0.0), Vec2::new(u1, 0.0), Vec2::new(u1, 1.0), Vec2::new(u0, 1.0)];
            [[c[0], c[1], c[2]], [c[0], c[2], c[3]]]
        };
        let mut uvs = uv(0.0, 0.2).to_vec();
        uvs.extend(uv(0.8, 1.0));
        TriangleMesh::new(v, vec![[0, 1, 2], [0, 2, 3], [4, 5, 6], [4, 6, 7]], uvs).unwrap()
    }

    fn camera() -> Camera {
        Camera::look_at(Vec3::new(0.0, 0.0, -3.0), Vec3::zero(), -Vec3::unit_y(), 0.9, 48, 48)
    }

    fn gray(n: usize) -> Vec<[f64; 3]> {
        (0..n).map(|k| [0.1 * (k % 7) as f64, 0.3, 0.5]).collect()
    }

    /// Opaque red on the right half of the atlas (the far plane).
    fn far_icon() -> RgbaTexture {
        let (w, h) = (32, 32);
        let texels = (0..w * h).map(|k| if k % w >= w / 2 { [1.0, 0.0, 0.0, 1.0] } else { [0.0; 4] }).collect();
        RgbaTexture::new(w, h, texels).unwrap()
    }

    #[test]
    fn transparent_edit_is_identity() {
        let m = two_planes(0.3);
        let c = camera();
        let render = gray(48 * 48);
        let out = composite_texture_edit(&render, &m, m.vertices(), &c, &RgbaTexture::filled(8, 8, [0.9, 0.2, 0.1, 0.0]))
            .unwrap();
        assert_eq!(out, render);
    }

    #[test]
    fn opaque_icon_replaces_visible_pixels_only() {
        let m = two_planes(0.3);
        let c = camera();
        let render = gray(48 * 48);
        let out = composite_texture_edit(&render, &m, m.vertices(), &c, &far_icon()).unwrap();
        let raster = rasterize_depth(&m, m.vertices(), &c).unwrap();
        let mut replaced = 0;
        for k in 0..out.len() {
            match raster.face[k] {
                2 | 3 => {
                    assert_eq!(out[k], [1.0, 0.0, 0.0]);
                    replaced += 1;
                }
                // Background and the occluding near plane keep the render.
                _ => assert_eq!(out[k], render[k]),
            }
        }
        assert!(replaced > 0);
        // The image center sees the near plane, which hides the icon.
        assert_eq!(out[24 * 48 + 24], render[24 * 48 + 24]);
    }

    #[test]
    fn bilinear_lookup_hits_texel_centers() {
        let t = RgbaTexture::new(2, 1, vec![[0.0; 4], [1.0; 4]]).unwrap();
        assert_eq!(t.sample(Vec2::new(0.25, 0.5)), [0.0; 4]);
        assert_eq!(t.sample(Vec2::new(0.75, 0.5)), [1.0; 4]);
        assert_eq!(t.sample(Vec2::new(0.5, 0.5)), [0.5; 4]);
    }
}

//! JSON scene descriptions for the command-line tools.
//!
//! ```json
//! {"mesh":   {"type": "icosphere", "radius": 1.0, "level": 3},
//!  "field":  {"type": "sphere", "center": [0, 0, 0], "radius": 1.0},
//!  "camera": {"type": "look_at", "eye": [0, 0, -4], "target": [0, 0, 0],
//!             "fov_y_deg": 40, "width": 128, "height": 128},
//!  "render": {"sharpness": 200, "samples_per_ray": 20}}
//! ```
//! Relative paths resolve against the scene file's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::avatar::Avatar;
use crate::error::{Error, Result};
use crate::field::{
    DecodedField, FeatureTriplane, MlpWeights, SdfField, DIRECTION_FREQUENCIES, POSITION_FREQUENCIES,
};
use crate::fsutil;
use crate::linalg::Vec3;
use crate::mesh::{load_obj, TriangleMesh};
use crate::primitives;
use crate::render::{Camera, RenderSettings};
use crate::utts::build_index;

fn default_d_max() -> f64 {
    0.04
}
fn default_position_frequencies() -> usize {
    POSITION_FREQUENCIES
}
fn default_direction_frequencies() -> usize {
    DIRECTION_FREQUENCIES
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldSpec {
    Sphere {
        center: Vec3<f64>,
        radius: f64,
    },
    Capsule {
        a: Vec3<f64>,
        b: Vec3<f64>,
        radius: f64,
    },
    Plane {
        normal: Vec3<f64>,
        offset: f64,
    },
    Constant {
        value: f64,
    },
    /// Signed distance to the scene's own (posed) mesh.
    #[default]
    Mesh,
    /// Tri-plane features decoded through the posed mesh's texture space.
    Decoded {
        /// Tensor file `[3, R, R, C]`.
        triplane: PathBuf,
        /// Layer manifest of the geometry decoder.
        geometry: PathBuf,
        #[serde(default)]
        appearance: Option<PathBuf>,
        #[serde(default)]
        motion_code: Vec<f64>,
        #[serde(default)]
        texture_code: Vec<f64>,
        #[serde(default = "default_position_frequencies")]
        position_frequencies: usize,
        #[serde(default = "default_direction_frequencies")]
        direction_frequencies: usize,
        #[serde(default = "default_d_max")]
        d_max: f64,
    },
}

impl FieldSpec {
    /// Instantiates the field around a posed mesh.
    pub fn build(&self, mesh: &TriangleMesh<f64>, positions: &[Vec3<f64>], base: &Path) -> Result<SdfField> {
        let positive = |what: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")))
            }
        };
        Ok(match self {
            FieldSpec::Sphere { center, radius } => {
                positive("sphere radius", *radius)?;
                SdfField::Sphere { center: *center, radius: *radius }
            }
            FieldSpec::Capsule { a, b, radius } => {
                positive("capsule radius", *radius)?;
                SdfField::Capsule { a: *a, b: *b, radius: *radius }
            }
            FieldSpec::Plane { normal, offset } => {
                let n = normal
                    .try_normalize()
                    .ok_or_else(|| Error::InvalidArgument("plane normal must be nonzero".into()))?;
                SdfField::Plane { normal: n, offset: *offset }
            }
            FieldSpec::Constant { value } => SdfField::Constant { value: *value },
            FieldSpec::Mesh => SdfField::mesh(build_index(mesh, positions)?),
            FieldSpec::Decoded {
                triplane,
                geometry,
                appearance,
                motion_code,
                texture_code,
                position_frequencies,
                direction_frequencies,
                d_max,
            } => SdfField::decoded(DecodedField {
                triplane: FeatureTriplane::load(base.join(triplane))?,
                geometry: MlpWeights::load(base.join(geometry))?,
                appearance: appearance.as_ref().map(|p| MlpWeights::load(base.join(p))).transpose()?,
                motion_code: motion_code.clone(),
                texture_code: texture_code.clone(),
                position_frequencies: *position_frequencies,
                direction_frequencies: *direction_frequencies,
                index: Arc::new(build_index(mesh, positions)?),
                d_max: *d_max,
            })?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeshSpec {
    Obj { path: PathBuf },
    Icosphere { radius: f64, level: usize },
    Cylinder { radius: f64, height: f64, segments: usize, rings: usize },
    DeformedCylinder { segments: usize, rings: usize },
    /// An avatar manifest (or `"demo"`) posed at one motion frame.
    Avatar {
        path: PathBuf,
        #[serde(default)]
        frame: usize,
    },
}

impl MeshSpec {
    fn validate_counts(&self) -> Result<()> {
        let bad = match self {
            MeshSpec::Icosphere { radius, level } => !(*radius > 0.0) || *level > 7,
            MeshSpec::Cylinder { radius, height, segments, rings } => {
                !(*radius > 0.0 && *height > 0.0) || *segments < 3 || *rings < 1
            }
            MeshSpec::DeformedCylinder { segments, rings } => *segments < 3 || *rings < 1,
            _ => false,
        };
        if bad {
            return Err(Error::InvalidArgument(format!("invalid procedural mesh {self:?}")));
        }
        Ok(())
    }

    /// Mesh, posed positions and, for avatars, the avatar's own field spec.
    pub fn build(&self, base: &Path) -> Result<(TriangleMesh<f64>, Vec<Vec3<f64>>, Option<FieldSpec>)> {
        self.validate_counts()?;
        let plain = |m: TriangleMesh<f64>| {
            let x = m.vertices().to_vec();
            Ok((m, x, None))
        };
        match self {
            MeshSpec::Obj { path } => plain(load_obj(base.join(path))?),
            MeshSpec::Icosphere { radius, level } => plain(primitives::icosphere(*radius, *level)),
            MeshSpec::Cylinder { radius, height, segments, rings } => {
                plain(primitives::cylinder(*radius, *height, *segments, *rings))
            }
            MeshSpec::DeformedCylinder { segments, rings } => plain(primitives::deformed_cylinder(*segments, *rings)),
            MeshSpec::Avatar { path, frame } => {
                let path = if path.as_os_str() == "demo" { path.clone() } else { base.join(path) };
                let avatar = Avatar::load(&path)?;
                let x = avatar.pose(&avatar.frame_pose(*frame)?)?;
                Ok((avatar.template, x, Some(avatar.field)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CameraSpec {
    LookAt {
        eye: Vec3<f64>,
        target: Vec3<f64>,
        #[serde(default = "default_up")]
        up: Vec3<f64>,
        fov_y_deg: f64,
        width: usize,
        height: usize,
    },
    Pinhole(Camera),
}

fn default_up() -> Vec3<f64> {
    Vec3::new(0.0, 1.0, 0.0)
}

impl CameraSpec {
    pub fn build(&self) -> Result<Camera> {
        let cam = match self {
            CameraSpec::LookAt { eye, target, up, fov_y_deg, width, height } => {
                if !(*fov_y_deg > 0.0 && *fov_y_deg < 180.0) {
                    return Err(Error::InvalidArgument(format!("fov_y_deg must lie in (0, 180), got {fov_y_deg}")));
                }
                let forward = *target - *eye;
                if forward.try_normalize().is_none() || forward.cross(*up).try_normalize().is_none() {
                    return Err(Error::InvalidArgument("camera eye, target and up are degenerate".into()));
                }
                Camera::look_at(*eye, *target, *up, fov_y_deg.to_radians(), *width, *height)
            }
            CameraSpec::Pinhole(c) => c.clone(),
        };
        cam.validate()?;
        Ok(cam)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub mesh: MeshSpec,
    /// Defaults to the avatar's field for avatar meshes, else the mesh SDF.
    #[serde(default)]
    pub field: Option<FieldSpec>,
    pub camera: CameraSpec,
    #[serde(default)]
    pub render: RenderSettings,
}

/// A scene with every asset loaded.
#[derive(Clone, Debug)]
pub struct LoadedScene {
    pub mesh: TriangleMesh<f64>,
    pub positions: Vec<Vec3<f64>>,
    pub field: SdfField,
    pub camera: Camera,
    pub settings: RenderSettings,
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<LoadedScene> {
        let path = path.as_ref();
        let spec = Self::from_json(&fsutil::read_to_string(path)?)?;
        spec.load(path.parent().unwrap_or(Path::new("")))
    }

    pub fn load(&self, base: &Path) -> Result<LoadedScene> {
        let (mesh, positions, own_field) = self.mesh.build(base)?;
        let field_spec = self.field.clone().or(own_field).unwrap_or_default();
        let field = field_spec.build(&mesh, &positions, base)?;
        let camera = self.camera.build()?;
        self.render.validate()?;
        Ok(LoadedScene { mesh, positions, field, camera, settings: self.render.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE: &str = r#"{
        "mesh": {"type": "icosphere", "radius": 1.0, "level": 2},
        "field": {"type": "sphere", "center": [0, 0, 0], "radius": 1.0},
        "camera": {"type": "look_at", "eye": [0, 0, -4], "target": [0, 0, 0], "fov_y_deg": 40, "width": 32, "height": 24},
        "render": {"sharpness": 500, "samples_per_ray": 8}
    }"#;

    #[test]
    fn documented_example_parses() {
        let s = SceneSpec::from_json(SPHERE).unwrap().load(Path::new("")).unwrap();
        assert_eq!(s.mesh.face_count(), 320);
        assert_eq!((s.camera.width, s.camera.height), (32, 24));
        assert_eq!(s.settings.sharpness, 500.0);
        assert_eq!(s.settings.samples_per_ray, 8);
        assert_eq!(s.settings.d_max, RenderSettings::default().d_max);
        assert!(matches!(s.field, SdfField::Sphere { .. }));
    }

    #[test]
    fn avatar_scene_uses_the_mesh_field() {
        let text = r#"{"mesh": {"type": "avatar", "path": "demo", "frame": 3},
            "camera": {"type": "look_at", "eye": [2, 0, -0.5], "target": [0, 0, -0.5], "up": [0, 0, 1],
                       "fov_y_deg": 50, "width": 16, "height": 16}}"#;
        let s = SceneSpec::from_json(text).unwrap().load(Path::new("")).unwrap();
        assert!(matches!(s.field, SdfField::Mesh(_)));
        assert_eq!(s.positions.len(), s.mesh.vertex_count());
    }

    #[test]
    fn pinhole_camera_round_trips() {
        let cam = Camera::look_at(Vec3::new(0.0, 0.0, -3.0), Vec3::zero(), Vec3::unit_y(), 0.7, 10, 8);
        let spec = CameraSpec::Pinhole(cam.clone());
        let text = serde_json::to_string(&spec).unwrap();
        let back: CameraSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.build().unwrap(), cam);
    }

    #[test]
    fn rejects_bad_values() {
        let bad_fov = SPHERE.replace("\"fov_y_deg\": 40", "\"fov_y_deg\": 0");
        assert!(SceneSpec::from_json(&bad_fov).unwrap().load(Path::new("")).is_err());
        let bad_radius = SPHERE.replace("\"radius\": 1.0}", "\"radius\": -1.0}");
        assert!(SceneSpec::from_json(&bad_radius).unwrap().load(Path::new("")).is_err());
        assert!(SceneSpec::from_json(r#"{"mesh": {"type": "torus"}}"#).is_err());
    }
}

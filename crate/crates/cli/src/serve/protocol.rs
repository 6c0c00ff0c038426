//! WebSocket wire format.
//!
//! Control messages are JSON text frames tagged by `type`. Client to server:
//!
//! | type         | fields                                                        |
//! |--------------|---------------------------------------------------------------|
//! | `set_mode`   | `mode`: `replay`, `edit` or `orbit`                           |
//! | `set_frame`  | `frame`: motion frame index                                   |
//! | `set_dofs`   | `dofs`: full pose vector                                      |
//! | `set_camera` | `eye`, `target`, optional `up`, `fov_y_deg`, `width`, `height` |
//! | `snapshot`   | none                                                          |
//!
//! Server to client: `mesh`, `render`, `stats`, `error` and `snapshot`.
//! Every state change bumps the session's `generation`; the mesh, render
//! and stats computed from a state carry its generation. A `mesh` message is
//! followed by one binary frame holding the `[V, 3]` vertex buffer as a
//! TRIT tensor. The first mesh message of a connection also lists the faces.

use avatar_core::render::Camera;
use avatar_core::{Error, Point3, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_RENDER_SIZE: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `set_frame` loads that frame's pose.
    Replay,
    /// `set_frame` moves the frame but keeps the edited pose.
    Edit,
    /// Pose frozen; only the camera moves.
    Orbit,
}

fn default_up() -> Point3 {
    Point3::new(0.0, 0.0, 1.0)
}
fn default_fov() -> f64 {
    40.0
}
fn default_size() -> usize {
    DEFAULT_RENDER_SIZE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRequest {
    pub eye: Point3,
    pub target: Point3,
    #[serde(default = "default_up")]
    pub up: Point3,
    #[serde(default = "default_fov")]
    pub fov_y_deg: f64,
    #[serde(default = "default_size")]
    pub width: usize,
    #[serde(default = "default_size")]
    pub height: usize,
}

/// Largest accepted render edge in pixels.
pub const MAX_RENDER_SIZE: usize = 2048;

impl CameraRequest {
    pub fn to_camera(&self) -> Result<Camera> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.fov_y_deg > 0.0 && self.fov_y_deg < 180.0) {
            return bad(format!("fov_y_deg must lie in (0, 180), got {}", self.fov_y_deg));
        }
        if self.width == 0 || self.height == 0 || self.width > MAX_RENDER_SIZE || self.height > MAX_RENDER_SIZE {
            return bad(format!("render size {}x{} outside 1..={MAX_RENDER_SIZE}", self.width, self.height));
        }
        let forward = self.target - self.eye;
        if forward.try_normalize().is_none() || forward.cross(self.up).try_normalize().is_none() {
            return bad("camera eye, target and up are degenerate".into());
        }
        let cam = Camera::look_at(self.eye, self.target, self.up, self.fov_y_deg.to_radians(), self.width, self.height);
        cam.validate()?;
        Ok(cam)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    SetMode { mode: Mode },
    SetFrame { frame: usize },
    SetDofs { dofs: Vec<f64> },
    SetCamera(CameraRequest),
    Snapshot,
}

impl ClientMessage {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("malformed message: {e}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub deform_ms: f64,
    pub map_ms: f64,
    pub field_ms: f64,
    pub integrate_ms: f64,
    /// Rasterization and sample placement.
    pub raster_ms: f64,
    pub total_ms: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Mesh {
        generation: u64,
        vertex_count: usize,
        face_count: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        faces: Option<Vec<[usize; 3]>>,
    },
    Render {
        generation: u64,
        width: usize,
        height: usize,
        /// Base64 PNG.
        png: String,
    },
    Stats {
        generation: u64,
        /// State changes folded into this result without their own reply.
        coalesced: u64,
        #[serde(flatten)]
        stages: StageStats,
    },
    Error {
        reason: String,
    },
    Snapshot {
        generation: u64,
        mode: Mode,
        frame: usize,
        frame_count: usize,
        dofs: Vec<f64>,
        dof_ranges: Vec<Option<[f64; 2]>>,
        camera: CameraRequest,
    },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

use std::time::Instant;

use avatar_core::avatar::Avatar;
use avatar_core::render::{render_image, RenderSettings, Scene};
use avatar_core::{Error, Point3, Result};

use super::protocol::{CameraRequest, ClientMessage, Mode, StageStats, DEFAULT_RENDER_SIZE};
use crate::io::{encode_png, render_rgba};

/// Immutable assets shared by every connection.
#[derive(Debug)]
pub struct SessionAssets {
    pub avatar: Avatar,
    pub settings: RenderSettings,
    pub default_camera: CameraRequest,
}

impl SessionAssets {
    /// Frames the rest template from the side at `size × size`.
    pub fn new(avatar: Avatar, settings: RenderSettings, size: usize) -> Result<Self> {
        let bounds = avatar_core::Aabb::from_points(avatar.template.vertices());
        let center = bounds.center();
        let extent = bounds.extent().norm().max(1e-3);
        let default_camera = CameraRequest {
            eye: center + Point3::new(1.6 * extent, 0.0, 0.0),
            target: center,
            up: Point3::new(0.0, 0.0, 1.0),
            fov_y_deg: 40.0,
            width: size,
            height: size,
        };
        default_camera.to_camera()?;
        settings.validate()?;
        Ok(Self { avatar, settings, default_camera })
    }

    pub fn demo() -> Self {
        Self::new(avatar_core::avatar::demo_avatar(), RenderSettings::default(), DEFAULT_RENDER_SIZE)
            .expect("demo assets are valid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionState {
    pub mode: Mode,
    pub frame: usize,
    pub dofs: Vec<f64>,
    pub camera: CameraRequest,
}

/// What a message did to the session.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Applied {
    /// Pose or camera changed; a new mesh and render are due.
    Recompute,
    /// Only the mode changed or a snapshot was requested.
    Snapshot,
}

impl SessionState {
    pub fn initial(assets: &SessionAssets) -> Self {
        Self {
            mode: Mode::Replay,
            frame: 0,
            dofs: assets.avatar.frame_pose(0).expect("motion is non-empty"),
            camera: assets.default_camera.clone(),
        }
    }

    /// Applies a message, leaving the state untouched on error.
    ///
    /// `set_dofs` switches replay mode to edit mode. Orbit mode rejects
    /// pose changes.
    pub fn apply(&mut self, msg: ClientMessage, assets: &SessionAssets) -> Result<Applied> {
        let avatar = &assets.avatar;
        match msg {
            ClientMessage::SetMode { mode } => {
                self.mode = mode;
                Ok(Applied::Snapshot)
            }
            ClientMessage::Snapshot => Ok(Applied::Snapshot),
            ClientMessage::SetFrame { frame } => {
                if self.mode == Mode::Orbit {
                    return Err(Error::InvalidArgument("pose is frozen in orbit mode".into()));
                }
                let pose = avatar.frame_pose(frame)?;
                self.frame = frame;
                if self.mode == Mode::Replay {
                    self.dofs = pose;
                }
                Ok(Applied::Recompute)
            }
            ClientMessage::SetDofs { dofs } => {
                if self.mode == Mode::Orbit {
                    return Err(Error::InvalidArgument("pose is frozen in orbit mode".into()));
                }
                avatar.skeleton.check_pose(&dofs)?;
                if let Some(i) = dofs.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("dof {i} is not finite")));
                }
                self.dofs = dofs;
                self.mode = Mode::Edit;
                Ok(Applied::Recompute)
            }
            ClientMessage::SetCamera(c) => {
                c.to_camera()?;
                self.camera = c;
                Ok(Applied::Recompute)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Computed {
    pub positions: Vec<Point3>,
    pub width: usize,
    pub height: usize,
    pub png: Vec<u8>,
    pub stats: StageStats,
}

/// Poses the template, builds its field and renders it.
pub fn compute(assets: &SessionAssets, state: &SessionState) -> Result<Computed> {
    let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
    let start = Instant::now();
    let avatar = &assets.avatar;
    let positions = avatar.pose(&state.dofs)?;
    let deform = start.elapsed();

    let clock = Instant::now();
    let field = avatar.field.build(&avatar.template, &positions, &avatar.base_dir)?;
    let build = clock.elapsed();

    let camera = state.camera.to_camera()?;
    let scene = Scene { mesh: &avatar.template, positions: &positions, field: &field, camera: &camera };
    let out = render_image(&scene, &assets.settings)?;
    let png = encode_png(out.width, out.height, render_rgba(&out))?;
    let t = out.timings;
    let stats = StageStats {
        deform_ms: ms(deform),
        map_ms: ms(build + t.map),
        field_ms: ms(t.field),
        integrate_ms: ms(t.integrate),
        raster_ms: ms(t.raster + t.filter),
        total_ms: ms(start.elapsed()),
        samples: out.samples,
    };
    Ok(Computed { positions, width: out.width, height: out.height, png, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use avatar_core::avatar::DEMO_KNEE_DOF;

    #[test]
    fn mode_rules() {
        let assets = SessionAssets::demo();
        let mut s = SessionState::initial(&assets);
        let p = assets.avatar.skeleton.dof_count();
        assert_eq!(s.apply(ClientMessage::SetFrame { frame: 3 }, &assets).unwrap(), Applied::Recompute);
        assert_eq!(s.dofs, assets.avatar.frame_pose(3).unwrap());

        s.apply(ClientMessage::SetDofs { dofs: vec![0.0; p] }, &assets).unwrap();
        assert_eq!(s.mode, Mode::Edit);
        s.apply(ClientMessage::SetFrame { frame: 5 }, &assets).unwrap();
        assert_eq!((s.frame, s.dofs.clone()), (5, vec![0.0; p]));

        s.apply(ClientMessage::SetMode { mode: Mode::Orbit }, &assets).unwrap();
        let before = s.clone();
        assert!(s.apply(ClientMessage::SetDofs { dofs: vec![0.1; p] }, &assets).is_err());
        assert!(s.apply(ClientMessage::SetFrame { frame: 1 }, &assets).is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn invalid_updates_leave_state_untouched() {
        let assets = SessionAssets::demo();
        let mut s = SessionState::initial(&assets);
        let before = s.clone();
        assert!(s.apply(ClientMessage::SetDofs { dofs: vec![0.0; 2] }, &assets).is_err());
        assert!(s.apply(ClientMessage::SetFrame { frame: 1000 }, &assets).is_err());
        let mut cam = s.camera.clone();
        cam.target = cam.eye;
        assert!(s.apply(ClientMessage::SetCamera(cam), &assets).is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn knee_edit_changes_the_render() {
        let assets = SessionAssets::new(
            avatar_core::avatar::demo_avatar(),
            RenderSettings::default(),
            48,
        )
        .unwrap();
        let mut s = SessionState::initial(&assets);
        s.apply(ClientMessage::SetDofs { dofs: vec![0.0; 5] }, &assets).unwrap();
        let rest = compute(&assets, &s).unwrap();
        assert!(rest.stats.samples > 0);
        let mut bent = vec![0.0; 5];
        bent[DEMO_KNEE_DOF] = 1.2;
        s.apply(ClientMessage::SetDofs { dofs: bent }, &assets).unwrap();
        let flexed = compute(&assets, &s).unwrap();
        assert_ne!(rest.png, flexed.png);
        assert_eq!((flexed.width, flexed.height), (48, 48));
    }
}

//! Avatar asset bundle: skinned template, skeleton, deformation graph,
//! motion and the field description, plus a small procedural demo leg.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::deform::{deformable_model, EmbeddedGraph, GraphParams, DEFAULT_NODES_PER_VERTEX};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::linalg::Vec3;
use crate::mesh::{load_obj, TriangleMesh, WeightRow};
use crate::primitives;
use crate::scene::FieldSpec;
use crate::skeleton::{Axis, Dof, DofKind, Joint, MotionSequence, SkeletalMotion, Skeleton};

/// On-disk manifest. Paths are relative to the manifest's directory.
///
/// ```json
/// {"template": "leg.obj", "skin_weights": "weights.json", "skeleton": "skeleton.json",
///  "graph": "graph.json", "graph_params": "params.json", "motion": "motion.json",
///  "field": {"type": "mesh"}}
/// ```
/// `graph` falls back to every eighth vertex as a node, `graph_params` to
/// the identity and `motion` to a single rest frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AvatarManifest {
    pub template: PathBuf,
    pub skin_weights: PathBuf,
    pub skeleton: PathBuf,
    #[serde(default)]
    pub graph: Option<PathBuf>,
    #[serde(default)]
    pub graph_params: Option<PathBuf>,
    #[serde(default)]
    pub motion: Option<PathBuf>,
    #[serde(default)]
    pub field: FieldSpec,
}

#[derive(Clone, Debug)]
pub struct Avatar {
    /// Rest template with skinning weights attached.
    pub template: TriangleMesh<f64>,
    pub skeleton: Skeleton,
    pub graph: EmbeddedGraph<f64>,
    pub params: GraphParams<f64>,
    pub motion: MotionSequence,
    pub field: FieldSpec,
    /// Directory that relative paths inside `field` resolve against.
    pub base_dir: PathBuf,
}

impl Avatar {
    /// Loads a manifest, or the built-in demo when `path` is `"demo"`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.as_os_str() == "demo" {
            return Ok(demo_avatar());
        }
        let manifest: AvatarManifest = serde_json::from_str(&fsutil::read_to_string(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let weights: Vec<WeightRow<f64>> = serde_json::from_str(&fsutil::read_to_string(base.join(&manifest.skin_weights))?)?;
        let template = load_obj::<f64>(base.join(&manifest.template))?.with_skin_weights(weights)?;
        let skeleton = Skeleton::load(base.join(&manifest.skeleton))?;
        let graph = match &manifest.graph {
            Some(p) => EmbeddedGraph::load(base.join(p))?,
            None => default_graph(&template)?,
        };
        let params = match &manifest.graph_params {
            Some(p) => GraphParams::load(base.join(p))?,
            None => GraphParams::identity(graph.node_count(), template.vertex_count()),
        };
        let motion = match &manifest.motion {
            Some(p) => MotionSequence::load(base.join(p))?,
            None => MotionSequence { fps: crate::skeleton::DEFAULT_FPS, frames: vec![vec![0.0; skeleton.dof_count()]] },
        };
        Self::new(template, skeleton, graph, params, motion, manifest.field, base)
    }

    pub fn new(
        template: TriangleMesh<f64>,
        skeleton: Skeleton,
        graph: EmbeddedGraph<f64>,
        params: GraphParams<f64>,
        motion: MotionSequence,
        field: FieldSpec,
        base_dir: PathBuf,
    ) -> Result<Self> {
        let n = template.vertex_count();
        let weights = template
            .skin_weights()
            .ok_or_else(|| Error::InvalidArgument("avatar template has no skinning weights".into()))?;
        if let Some(v) = weights.iter().position(|row| row.iter().any(|&(j, _)| j >= skeleton.joint_count())) {
            return Err(Error::InvalidArgument(format!("skin weights of vertex {v} name a missing joint")));
        }
        graph.validate(n, DEFAULT_NODES_PER_VERTEX.max(graph.node_count()))?;
        let params = params.resolved(graph.node_count(), n)?;
        if motion.is_empty() {
            return Err(Error::Empty("motion sequence"));
        }
        skeleton.check_pose(&motion.frames[0])?;
        Ok(Self { template, skeleton, graph, params, motion, field, base_dir })
    }

    pub fn rest_pose(&self) -> Vec<f64> {
        vec![0.0; self.skeleton.dof_count()]
    }

    pub fn frame_pose(&self, frame: usize) -> Result<Vec<f64>> {
        self.motion
            .frames
            .get(frame)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("frame {frame} outside sequence of {} frames", self.motion.len())))
    }

    /// Deformed and skinned template for one pose vector.
    pub fn pose(&self, pose: &[f64]) -> Result<Vec<Vec3<f64>>> {
        self.skeleton.check_pose(pose)?;
        deformable_model(&self.template, &self.graph, &self.params, &self.skeleton, &SkeletalMotion::single(pose.to_vec()))
    }

    /// Posed templates and root translations for the `window` frames ending
    /// at `frame` (earlier frames repeat frame 0).
    pub fn pose_window(&self, frame: usize, window: usize) -> Result<(Vec<Vec<Vec3<f64>>>, Vec<Vec3<f64>>)> {
        let motion = self.motion.window::<f64>(frame, window)?;
        let mut frames = Vec::with_capacity(window);
        let mut roots = Vec::with_capacity(window);
        for pose in motion.poses() {
            frames.push(self.pose(pose)?);
            roots.push(self.skeleton.root_translation(pose));
        }
        Ok((frames, roots))
    }
}

fn default_graph(template: &TriangleMesh<f64>) -> Result<EmbeddedGraph<f64>> {
    let anchors: Vec<usize> = (0..template.vertex_count()).step_by(8).collect();
    EmbeddedGraph::from_anchors(template, anchors, DEFAULT_NODES_PER_VERTEX)
}

/// Joint indices of the demo leg.
pub const DEMO_HIP: usize = 0;
pub const DEMO_KNEE: usize = 1;
/// Pose-vector index of the demo knee flexion DoF.
pub const DEMO_KNEE_DOF: usize = 4;

const LEG_LENGTH: f64 = 0.9;
const LEG_RADIUS: f64 = 0.07;
/// Half-width of the skinning blend band around the knee (m).
const KNEE_BLEND: f64 = 0.06;

/// A single leg: an open cylinder hanging from the hip at the origin down
/// to `z = −0.9`, skinned to hip and knee with a smooth blend around the
/// knee. DoFs: root translation x, y, z, hip flexion, knee flexion (both
/// about x). The motion swings the knee over 12 frames.
pub fn demo_avatar() -> Avatar {
    let (segments, rings) = (24, 36);
    let base = primitives::cylinder::<f64>(LEG_RADIUS, LEG_LENGTH, segments, rings);
    let verts: Vec<Vec3<f64>> = base.vertices().iter().map(|v| Vec3::new(v.x, v.y, v.z - LEG_LENGTH)).collect();
    let knee_z = -0.5 * LEG_LENGTH;
    let weights: Vec<WeightRow<f64>> = verts
        .iter()
        .map(|v| {
            // Smoothstep from hip (above the band) to knee (below it).
            let t = ((knee_z + KNEE_BLEND - v.z) / (2.0 * KNEE_BLEND)).clamp(0.0, 1.0);
            let w = t * t * (3.0 - 2.0 * t);
            if w == 0.0 {
                vec![(DEMO_HIP, 1.0)]
            } else if w == 1.0 {
                vec![(DEMO_KNEE, 1.0)]
            } else {
                vec![(DEMO_HIP, 1.0 - w), (DEMO_KNEE, w)]
            }
        })
        .collect();
    let template = base.with_vertices(verts).and_then(|m| m.with_skin_weights(weights)).expect("demo template is valid");
    let joint = |name: &str, parent: i64, z: f64| Joint {
        name: name.into(),
        parent,
        rotation: [1.0, 0.0, 0.0, 0.0],
        translation: [0.0, 0.0, z],
    };
    let dof = |joint, axis, kind| Dof { joint, axis, kind, range: None };
    let mut dofs = vec![
        dof(DEMO_HIP, Axis::X, DofKind::Translational),
        dof(DEMO_HIP, Axis::Y, DofKind::Translational),
        dof(DEMO_HIP, Axis::Z, DofKind::Translational),
        dof(DEMO_HIP, Axis::X, DofKind::Rotational),
        dof(DEMO_KNEE, Axis::X, DofKind::Rotational),
    ];
    dofs[3].range = Some([-1.2, 1.2]);
    dofs[4].range = Some([0.0, 2.2]);
    let skeleton = Skeleton::new(vec![joint("hip", -1, 0.0), joint("knee", 0, knee_z), joint("ankle", 1, knee_z)], dofs)
        .expect("demo skeleton is valid");
    let graph = default_graph(&template).expect("demo graph");
    let params = GraphParams::identity(graph.node_count(), template.vertex_count());
    let frames = (0..12)
        .map(|f| {
            let phase = std::f64::consts::TAU * f as f64 / 12.0;
            vec![0.0, 0.02 * f as f64, 0.0, 0.3 * phase.sin(), 0.6 * (1.0 - phase.cos())]
        })
        .collect();
    let motion = MotionSequence { fps: crate::skeleton::DEFAULT_FPS, frames };
    Avatar::new(template, skeleton, graph, params, motion, FieldSpec::Mesh, PathBuf::new()).expect("demo avatar is valid")
}

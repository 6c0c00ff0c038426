//! Skeleton DoF model, forward kinematics and dual-quaternion skinning.

mod dualquat;
mod kinematics;
mod model;
mod motion;
mod skin;

pub use dualquat::{DualQuat, Quat, Rigid};
pub use kinematics::{compose_global, forward_kinematics, global_transforms, local_transforms, DualQuaternionSet};
pub use model::{Axis, Dof, DofKind, Joint, Skeleton};
pub use motion::{normalize_motion, MotionSequence, SkeletalMotion, DEFAULT_FPS, DEFAULT_WINDOW};
pub use skin::{apply_blended, blend, dq_skin, MIN_BLEND_NORM};

//! Training and refinement objectives, each with an analytic gradient, and
//! a central-difference harness to verify them.

mod check;
mod field;
mod image;
mod report;
mod suite;
mod surface;

pub use check::{check_gradients, GradientCheck, GRADIENT_CHECK_STEP, GRADIENT_CHECK_TOLERANCE};
pub use field::{
    eikonal_loss, eikonal_triplane_gradient, sdf_vertex_loss, seam_loss, seam_loss_with, EikonalLoss, SdfVertexLoss,
};
pub use image::{image_losses, image_losses_with_levels, Frame, ImageLosses, PYRAMID_LEVELS};
pub use report::{weights, LossReport, STAGE1_WEIGHTS, STAGE2_WEIGHTS, STAGE3_WEIGHTS};
pub use suite::{gradient_suite, SuiteEntry};
pub use surface::{surface_regularizers, SurfaceLosses, SurfaceRegularizer};

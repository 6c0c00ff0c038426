//! Pinhole cameras, software rasterization, depth-filtered SDF volume
//! rendering and atlas-space baking.

mod camera;
mod composite;
mod image;
mod raster;
mod samples;
mod textures;
mod volume;

pub use camera::{all_pixels, generate_rays, Camera, Ray};
pub use composite::{composite_texture_edit, RgbaTexture};
pub use image::{mask_iou, render_image, RenderOutput, RenderSettings, Scene, StageTimings};
pub use raster::{raster_triangle, rasterize_depth, DepthMap, NEAR_PLANE};
pub use samples::{bounded_samples, filter_samples, RaySampleBatch, INTERACTIVE_SAMPLES, RAY_BATCH, TRAINING_SAMPLES};
pub use textures::{bake_motion_textures, MotionTextureSet, DEFAULT_TEXTURE_RESOLUTION, WINDOW_FRAMES};
pub use volume::{interval_alpha, sample_weights, sdf_to_alpha, volume_integrate, Integrated};

//! Mapping of global points into the undeformed tri-plane texture space:
//! closest point on the posed template, atlas coordinate and signed height.

mod closest;
mod collisions;
mod index;
mod mapping;
mod seam_samples;

pub use closest::{closest_on_triangle, Region, TriangleHit};
pub use collisions::{collision_csv, collision_ratio, collision_study, BandSamples, CollisionStats};
pub use index::{build_index, ClosestHit, ClosestPointIndex};
pub use mapping::{
    closest_point, closest_point_brute_force, inverse_map, map_batch, map_to_utts, normalized_height, sign_height,
    Element, ElementClass, MappingResult, SurfacePoint, UttsPoint,
};
pub use seam_samples::{seam_sample_pairs, SeamSamplePair, DEFAULT_SEAM_EPSILON, DEFAULT_SEAM_HEIGHT_RANGE};

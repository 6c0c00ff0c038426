//! Tri-plane feature grids, shallow decoders with loadable weights, and the
//! signed-distance fields built from them.

mod encoding;
mod mlp;
mod sdf;
mod triplane;

pub use encoding::{encoded_dim, positional_encoding, DIRECTION_FREQUENCIES, POSITION_FREQUENCIES};
pub use mlp::{Activation, Layer, MlpWeights};
pub use sdf::{random_decoded_field, DecodedField, MeshSdf, SdfField, SdfSample, FD_STEP};
pub use triplane::{FeatureTriplane, PlaneTaps};

#[cfg(test)]
pub(crate) use sdf::tests::random_decoded;

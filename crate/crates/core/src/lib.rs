//! Geometry kernel for tri-plane driven human avatars.
//!
//! Numeric code is generic over [`Real`], implemented for `f32`, `f64` and the
//! forward-mode [`Dual`] number. The aliases at the bottom of this file pin
//! the common types to `f64`.

pub mod avatar;
pub mod deform;
pub mod dual;
pub mod error;
pub mod field;
pub mod fsutil;
pub mod linalg;
pub mod losses;
pub mod mesh;
pub mod primitives;
pub mod real;
pub mod refine;
pub mod render;
pub mod scene;
pub mod skeleton;
pub mod tensor;
pub mod utts;

pub use dual::Dual;
pub use error::{Error, Result};
pub use linalg::{Aabb, Mat3, Vec2, Vec3};
pub use real::Real;

pub type Mesh = mesh::TriangleMesh<f64>;
pub type Point3 = Vec3<f64>;
pub type Point2 = Vec2<f64>;

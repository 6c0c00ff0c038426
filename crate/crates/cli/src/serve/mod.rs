//! Steering service: one WebSocket session per connection, driving pose,
//! frame and camera and streaming back meshes and renders.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{CameraRequest, ClientMessage, Mode, ServerMessage, StageStats, DEFAULT_RENDER_SIZE};
pub use server::{bind, router, serve};
pub use session::{compute, Applied, Computed, SessionAssets, SessionState};

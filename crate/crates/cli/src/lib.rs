//! Command-line tools and the steering server.

pub mod commands;
pub mod io;
pub mod serve;

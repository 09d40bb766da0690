//! Command line and HTTP front ends.

pub mod api;
pub mod cli;
pub mod server;

pub use api::{Api, ApiConfig, ApiResponse, SimulateRequest};
pub use cli::run;

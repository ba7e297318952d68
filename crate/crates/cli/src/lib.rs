//! The `prospect` command line and HTTP service.

pub mod app;
pub mod server;

pub use app::run;

//! Attribution engine runtime: file formats, model backends, the per-video
//! pipeline, the run store, report rendering, the HTTP API and the CLI.
//! The scoring and decision logic lives in `curio-core`.

pub mod backend;
pub mod cli;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod server;
pub mod store;

pub use error::{Error, Result};

//! Configuration, eigenpair caches, JSON reports, SVG figures and the
//! acceptance gate around [`nodalkk_core`].

pub mod cache;
pub mod config;
pub mod error;
pub mod gate;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod svg;

pub use cache::CacheFile;
pub use config::RunConfig;
pub use error::{LabError, Result};

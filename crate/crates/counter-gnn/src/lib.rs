//! File formats, pipeline stages, the command-line tool and the HTTP service
//! around `counter-gnn-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod service;

pub use error::{Error, Result};

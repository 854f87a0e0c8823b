//! File formats, node synthesis and the command-line pipeline around
//! [`probi_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod synth;
pub mod synthetic;

pub use error::{HarnessError, Result};

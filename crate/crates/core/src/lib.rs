pub mod asm;
pub mod classifiers;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod model;
pub mod prior;
pub mod realtime;
pub mod synth;
pub mod training;

pub use error::{Error, ErrorCategory, Result};

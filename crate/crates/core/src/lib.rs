//! Multi-scenario reasoning over synthetic visual, auditory and tactile
//! records: trust filtering and fusion, perturbed scenario generation,
//! sparse attention, two-tier memory, feedback-weighted decisions,
//! sim2real re-planning and per-step confusion-matrix evaluation.

pub mod attention;
pub mod config;
pub mod dataset;
pub mod decision;
mod error;
pub mod eval;
pub mod exec;
pub mod executor;
pub mod ingest;
pub mod memory;
pub mod modality;
pub mod pipeline;
pub mod scenario;
pub mod seed;
pub mod sim2real;

pub use config::RunConfig;
pub use dataset::{Dataset, GeneratorConfig, ModalRecord};
pub use error::{Error, Result};
pub use exec::Execution;
pub use modality::{Modality, PerModality};
pub use pipeline::{run, RunOptions, RunOutput};

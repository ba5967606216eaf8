//! Adaptive BGFC driver: problem setup from a declarative config, the
//! solve / estimate / mark / adapt loop, reference errors, file formats and
//! the per-step run log.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod config;
pub mod io;
pub mod marking;
pub mod reference;
pub mod runlog;
pub mod setup;
pub mod solve;

use std::path::Path;

use thiserror::Error;

use qcmesh::adapt::AdaptError;
use qcmesh::coupled::CoupledError;
use qcmesh_model::minimize::MinimizeError;
use qcmesh_model::ModelError;

pub use marking::MarkError;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error(transparent)]
    Coupled(#[from] CoupledError),
    #[error(transparent)]
    Adapt(#[from] AdaptError),
    #[error(transparent)]
    Mark(#[from] MarkError),
    #[error("mesh failed validation after {stage}: {detail}")]
    InvalidMesh { stage: String, detail: String },
    #[error("reference mesh is not covered by the coupled mesh ({0} nodes outside)")]
    NoCommonRefinement(usize),
}

impl DriverError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        DriverError::Io { path: path.display().to_string(), source }
    }

    /// Short machine-readable category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            DriverError::Io { .. } => "io",
            DriverError::Parse { .. } => "parse",
            DriverError::Config(_) => "config",
            DriverError::Model(_) => "model",
            DriverError::Minimize(_) => "stall",
            DriverError::Coupled(_) => "mesh_generation",
            DriverError::Adapt(_) => "adaptation",
            DriverError::Mark(MarkError::ConvergedOrDegenerate) => "converged_or_degenerate",
            DriverError::Mark(_) => "marking",
            DriverError::InvalidMesh { .. } => "invalid_mesh",
            DriverError::NoCommonRefinement(_) => "no_common_refinement",
        }
    }

    /// Process exit code for the category.
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Io { .. } => 2,
            DriverError::Parse { .. } | DriverError::Config(_) => 3,
            DriverError::Model(_) | DriverError::Minimize(_) => 4,
            DriverError::Coupled(_) | DriverError::Adapt(_) | DriverError::InvalidMesh { .. } => 5,
            DriverError::Mark(_) => 6,
            DriverError::NoCommonRefinement(_) => 7,
        }
    }
}

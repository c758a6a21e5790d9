//! Experiment drivers for the collapsing-star Dirac model, with TOML configuration and
//! deterministic CSV/JSON reports. The `hawklab` binary is a thin front end over [`run`].

pub mod config;
pub mod experiments;
pub mod report;

use hawking_core::car::CarError;
use hawking_core::classical::ClassicalError;
use hawking_core::geometry::GeometryError;
use hawking_core::interacting::InteractingError;
use hawking_core::spectral::SpectralError;
use thiserror::Error;

pub use config::RunConfig;
pub use experiments::{catalog, run};
pub use report::{Assertion, Report, Table};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit code: 2 configuration, 3 numerical, 4 resource (including i/o).
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Numerical(_) => 3,
            LabError::Resource(_) | LabError::Io(_) => 4,
        }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {$(
        impl From<$t> for LabError {
            fn from(e: $t) -> Self {
                LabError::Numerical(e.to_string())
            }
        }
    )*};
}

numerical_from!(ClassicalError, GeometryError, SpectralError);

impl From<InteractingError> for LabError {
    fn from(e: InteractingError) -> Self {
        match e {
            InteractingError::Car(c) => c.into(),
            other => LabError::Numerical(other.to_string()),
        }
    }
}

impl From<CarError> for LabError {
    fn from(e: CarError) -> Self {
        match e {
            CarError::ModeBasis { .. } => LabError::Resource(e.to_string()),
            other => LabError::Numerical(other.to_string()),
        }
    }
}

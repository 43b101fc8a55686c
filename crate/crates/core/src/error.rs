use thiserror::Error;

use crate::jets::JetError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("axiom check failed: antisymmetry {antisymmetry:.3e}, anchor {anchor:.3e}, jacobiator {jacobiator:.3e}")]
    AxiomsFailed { antisymmetry: f64, anchor: f64, jacobiator: f64 },
    #[error("Λ not invertible: |det| = {0:.3e}")]
    NonInvertible(f64),
    #[error("precondition '{what}' violated: residual {residual:.3e}")]
    Precondition { what: String, residual: f64 },
    #[error("wrong category: {0}")]
    WrongCategory(String),
    #[error("parallel transport is path dependent: defect {0:.3e}")]
    PathDependence(f64),
    #[error("flow left the domain at {0:?}")]
    DomainExit(Vec<f64>),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<Error> for JetError {
    fn from(e: Error) -> Self {
        match e {
            Error::Jet(j) => j,
            other => JetError::Eval(other.to_string()),
        }
    }
}

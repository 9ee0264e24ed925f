//! Probability cascades for forecasting a long chain of necessary steps,
//! plus the supporting arithmetic: log-bucket grids, compute economics,
//! constant-hazard risk, forecast aggregation and what-if solvers.

pub mod aggregate;
pub mod cascade;
pub mod display;
pub mod econ;
pub mod exact;
pub mod grid;
pub mod hazard;
pub mod numeric;
pub mod probability;
pub mod sensitivity;
pub mod solve;

pub use cascade::{
    evaluate_cascade, joint_odds, CascadeError, CascadeModel, EvaluationReport, Factor,
    FactorGroup, FactorValue,
};
pub use probability::{Probability, ProbabilityError};

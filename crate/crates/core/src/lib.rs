//! Zero-order optimization with the JAGUAR coordinate-memory gradient
//! estimator: noisy call-counted oracles, gradient estimators, Frank-Wolfe
//! and gradient descent solvers, objectives, datasets and numeric
//! validators.

pub mod dataio;
pub mod error;
pub mod estimators;
pub mod feasible_sets;
pub mod objectives;
pub mod oracle;
pub mod reference;
pub mod rng;
pub mod solvers;
pub mod theory_checks;
pub mod vector;

pub use error::{Error, Result};

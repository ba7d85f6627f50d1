//! Kernel estimators of relative covariate effects under dependent competing risks.

pub mod baselines;
pub mod copulas;
pub mod datagen;
pub mod error;
pub mod inference;
pub mod estimators;
pub mod kernels;
pub mod oracle;
pub mod quadrature;
pub mod seeding;
pub mod stats;

pub use error::{Error, Result};

//! Command-line harness: simulation campaigns, estimation on data files,
//! bootstrap tests and oracle reference values.

pub mod campaign;
pub mod config;
pub mod emit;
pub mod error;
pub mod estimate;
pub mod io;
pub mod reference;

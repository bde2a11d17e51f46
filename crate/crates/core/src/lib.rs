//! Bayesian nonparametric inference for ancestral lineages under Kingman's
//! coalescent with mutation.

pub mod ancestral;
pub mod error;
pub mod ewens;
pub mod numerics;
pub mod oracle;
pub mod pmf;
pub mod posterior;
pub mod simulator;

pub use error::{Error, Result};

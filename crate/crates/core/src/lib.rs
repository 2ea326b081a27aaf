//! Validation-error estimation for spatially correlated data under covariate shift.

pub mod dre;
pub mod error;
pub mod experiment;
pub mod ingest;
mod linalg;
pub mod models;
pub mod rng;
pub mod shiftfns;
pub mod simulate;
pub mod spatial;
pub mod synthetic;
pub mod validate;

pub use error::{Error, Result};

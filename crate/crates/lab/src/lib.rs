//! File formats, experiments and the acceptance suite around `oda-core`.

pub mod acceptance;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod results;
pub mod run;
pub mod scenario;

pub use error::{LabError, LabResult};

//! Resource adequacy assessment with risk-minimizing dispatch and ELCC
//! accreditation by scenario-fixed bisection.

pub mod cli;
pub mod colocated;
pub mod config;
pub mod dispatch;
pub mod elcc;
pub mod error;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod scenario;
pub mod study;
pub mod synthetic;

pub use error::{Error, Result};

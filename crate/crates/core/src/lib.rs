//! Audit checks for supervised machine-learning applications.
//!
//! The crate covers the parts of an ML certification audit that a machine
//! can verify: split integrity and leakage, evaluation metrics, model-level
//! diagnostics, a criticality-gated requirements catalog, the certification
//! lifecycle, and the report format tying them together.

pub mod catalog;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod integrity;
pub mod metrics;
pub mod report;
pub mod workflow;

pub use error::{Error, Result};

//! Graph neural network benchmark harness for supply-chain time series.
//!
//! The crate covers graph construction and quality checks, windowed temporal
//! datasets, MLP/GCN/GAT regressors trained from scratch, rank-based model
//! comparison, and the SVG/JSON report.

pub mod compute;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod models;
pub mod report;
pub mod stats;
pub mod trainer;

pub use error::{Error, Result};

//! User-context modeling from phone sensor logs.
//!
//! Logs are sliced into 1-second slots and encoded as wide feature vectors
//! ([`ingest`]), balanced with SMOTE ([`balance`]), optionally reduced to a
//! handful of latent features ([`dimred`]) and classified ([`classify`]).
//! [`synth`] generates test worlds and [`bench`] runs the experiment grid.
//!
//! Numeric code is generic over [`scalar::Real`]; the aliases below fix the
//! scalar for the common cases.

pub mod balance;
pub mod bench;
pub mod classify;
pub mod config;
pub mod container;
pub mod dataset;
pub mod dimred;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};

pub type MatrixF64 = matrix::Matrix<f64>;
pub type MatrixF32 = matrix::Matrix<f32>;
pub type DatasetF64 = dataset::Dataset<f64>;
pub type DatasetF32 = dataset::Dataset<f32>;
pub type ReducerModelF64 = dimred::ReducerModel<f64>;
pub type ClassifierModelF64 = classify::ClassifierModel<f64>;

//! Synthetic tabular data augmentation for click-through-rate prediction.
//!
//! The pipeline: fit one of six tabular generators on an imbalanced
//! all-categorical dataset, synthesize a hybrid pool of labeled rows, mix it
//! with the original training split under one of five scenarios (S1–S5),
//! train a CTR model (DNN, DeepFM, or MaskNet), and report test AUC plus the
//! count of synthetic rows that exactly duplicate original rows.
//!
//! Start with the runnable examples (`cargo run --release --example …`):
//! each major capability has one. The `tabaug` binary drives the same
//! library end to end from a TOML config.

pub mod data;
pub mod demo;
pub mod error;
pub mod nn;

pub use data::{infer_schema, load_csv, load_csv_with_schema, Feature, FeatureSchema, Row, TabularDataset};
pub use error::{Error, Result};

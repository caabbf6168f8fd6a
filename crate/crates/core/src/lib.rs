//! Lagged causal discovery (PC1 + MCI, and a latent-aware variant) with
//! pluggable conditional independence tests, plus a quantization-token
//! forecasting pipeline with coverage evaluation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod chronoslite;
pub mod citest;
pub mod discovery;
pub mod error;
pub mod evalstats;
pub mod panel;
pub mod seed;

pub use error::{Error, Result};

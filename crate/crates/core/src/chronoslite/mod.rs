//! Quantization-token probabilistic forecasting.
//!
//! Contexts are mean-scaled, uniformly binned into tokens, and continued by
//! sampling from a smoothed back-off k-gram model; quantile bands come from
//! the sampled trajectories.

mod forecast;
mod model;
mod quantizer;

pub use forecast::{
    bands_csv, forecast_quantiles, level_key, rolling_forecast, sample_forecast, sample_tokens, window_corpus,
    ForecastBundle, ForecastConfig, DEFAULT_LEVELS,
};
pub use model::{cross_entropy, Smoothing, TokenPredictor};
pub use quantizer::{mean_scale, Quantizer, ScaledContext, Token};

//! Conditional independence tests `X ⊥ Y | Z` on finite samples.
//!
//! Two tests are provided: [`parcorr_test`], partial correlation with an
//! analytic Student's-t null, and [`gpdc_test`], Gaussian-process residuals
//! followed by distance correlation of rank-uniformized residuals with a
//! permutation null.
//!
//! Conditioning sets are passed column-wise as `&[&[f64]]`; an empty slice
//! means unconditional.

mod dcor;
mod gp;
mod gpdc;
mod parcorr;

pub use dcor::{distance_correlation, distance_covariance_sq, rank_uniform_transform};
pub use gp::{gp_fit, gp_residuals, GpFitter, GpHyper, GpModel, HyperGrid};
pub use gpdc::{gpdc_residuals, gpdc_test, GpdcConfig};
pub use parcorr::{ols_fit, ols_residuals, parcorr_test};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiTestResult {
    /// Pearson r (ParCorr) or distance correlation (GPDC).
    pub statistic: f64,
    pub p_value: f64,
    pub sample_size: usize,
    pub cond_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dof: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_permutations: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

/// Residuals of `x` and `y` after removing the conditioning set, with the
/// regression log of each fit.
#[derive(Debug, Clone)]
pub struct ResidualPair {
    pub eps_x: Vec<f64>,
    pub eps_y: Vec<f64>,
    pub fit_x: FitDiagnostics,
    pub fit_y: FitDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FitDiagnostics {
    /// Mean removal only (empty conditioning set).
    Demean {
        mean: f64,
    },
    /// OLS on `[1, Z]`; the intercept comes first.
    Ols {
        coefficients: Vec<f64>,
    },
    Gp {
        hyper: GpHyper,
        log_marginal_likelihood: f64,
        jitter: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CiTestKind {
    Parcorr,
    Gpdc,
}

impl std::str::FromStr for CiTestKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "parcorr" => Ok(CiTestKind::Parcorr),
            "gpdc" => Ok(CiTestKind::Gpdc),
            other => Err(format!("unknown CI test {other:?} (expected parcorr or gpdc)")),
        }
    }
}

/// A configured CI test, as used by the discovery engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CiTest {
    ParCorr,
    Gpdc(GpdcConfig),
}

impl CiTest {
    pub fn from_kind(kind: CiTestKind, n_perm: usize) -> Self {
        match kind {
            CiTestKind::Parcorr => CiTest::ParCorr,
            CiTestKind::Gpdc => CiTest::Gpdc(GpdcConfig { n_perm, ..GpdcConfig::default() }),
        }
    }

    pub fn kind(&self) -> CiTestKind {
        match self {
            CiTest::ParCorr => CiTestKind::Parcorr,
            CiTest::Gpdc(_) => CiTestKind::Gpdc,
        }
    }

    /// `seed` is ignored by ParCorr.
    pub fn run(&self, x: &[f64], y: &[f64], z: &[&[f64]], seed: u64) -> Result<CiTestResult> {
        match self {
            CiTest::ParCorr => parcorr_test(x, y, z),
            CiTest::Gpdc(cfg) => gpdc_test(x, y, z, cfg, seed),
        }
    }
}

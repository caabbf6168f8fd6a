use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dcor::{double_centered, mean_product, rank_uniform_transform};
use super::gp::{GpFitter, HyperGrid};
use super::{CiTestResult, FitDiagnostics, ResidualPair};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpdcConfig {
    pub n_perm: usize,
    pub grid: HyperGrid,
}

impl Default for GpdcConfig {
    fn default() -> Self {
        GpdcConfig { n_perm: 199, grid: HyperGrid::default() }
    }
}

fn standardize_columns(z: &[&[f64]]) -> Vec<Vec<f64>> {
    z.iter()
        .map(|c| {
            let n = c.len() as f64;
            let m = c.iter().sum::<f64>() / n;
            let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            let sd = if sd > 0.0 { sd } else { 1.0 };
            c.iter().map(|v| (v - m) / sd).collect()
        })
        .collect()
}

fn demean(v: &[f64]) -> (Vec<f64>, FitDiagnostics) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|a| a - mean).collect(), FitDiagnostics::Demean { mean })
}

/// Removes the conditioning set from `x` and `y`: demeaning when `z` is empty,
/// GP regression on standardized `z` otherwise.
pub fn gpdc_residuals(x: &[f64], y: &[f64], z: &[&[f64]], grid: &HyperGrid) -> Result<ResidualPair> {
    if z.is_empty() {
        let (eps_x, fit_x) = demean(x);
        let (eps_y, fit_y) = demean(y);
        return Ok(ResidualPair { eps_x, eps_y, fit_x, fit_y });
    }
    let zs = standardize_columns(z);
    let refs: Vec<&[f64]> = zs.iter().map(Vec::as_slice).collect();
    let fitter = GpFitter::new(&refs, grid)?;
    let fit = |v: &[f64]| -> Result<(Vec<f64>, FitDiagnostics)> {
        let m = fitter.fit(v)?;
        let r = m.residuals(v)?;
        Ok((
            r,
            FitDiagnostics::Gp { hyper: m.hyper, log_marginal_likelihood: m.log_marginal_likelihood, jitter: m.jitter },
        ))
    };
    let (eps_x, fit_x) = fit(x)?;
    let (eps_y, fit_y) = fit(y)?;
    Ok(ResidualPair { eps_x, eps_y, fit_x, fit_y })
}

/// GPDC test: residualize, rank-uniformize, distance correlation, and a
/// permutation p-value `(1 + #{R_perm >= R_obs}) / (n_perm + 1)`.
///
/// Permutation `k` shuffles the x-ranks with a generator seeded from
/// `(seed, k)`, so the result is independent of thread scheduling.
pub fn gpdc_test(x: &[f64], y: &[f64], z: &[&[f64]], cfg: &GpdcConfig, seed: u64) -> Result<CiTestResult> {
    let t = x.len();
    if y.len() != t {
        return Err(Error::Config(format!("x has {t} samples, y has {}", y.len())));
    }
    if cfg.n_perm < 99 {
        return Err(Error::Config(format!("n_perm = {} < 99", cfg.n_perm)));
    }
    if t < 2 || (!z.is_empty() && t < 20) {
        return Err(Error::SampleSize(format!("GPDC with {} conditions needs more than {t} samples", z.len())));
    }
    let d = z.len();
    let mut notes = Vec::new();
    if d as f64 > t as f64 / 10.0 {
        let msg = format!(
            "conditioning dimension {d} exceeds T/10 = {:.1}; GP regression may not remove Z, making the test close to an unconditional dependence measure",
            t as f64 / 10.0
        );
        log::warn!("{msg}");
        notes.push(msg);
    }

    let res = gpdc_residuals(x, y, z, &cfg.grid)?;
    let rx = rank_uniform_transform(&res.eps_x);
    let ry = rank_uniform_transform(&res.eps_y);
    let a = double_centered(&rx);
    let b = double_centered(&ry);
    let vaa = mean_product(&a, &a);
    let vbb = mean_product(&b, &b);
    let denom = (vaa * vbb).sqrt();

    let base = CiTestResult {
        statistic: 0.0,
        p_value: 1.0,
        sample_size: t,
        cond_dim: d,
        dof: None,
        n_permutations: Some(cfg.n_perm),
        notes,
    };
    if !(denom > 0.0) {
        return Ok(base);
    }
    let observed = mean_product(&a, &b);
    let statistic = (observed / denom).clamp(0.0, 1.0);
    let tol = 1e-12 * observed.abs().max(1e-300);

    let exceed: usize = (0..cfg.n_perm)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::rng(seed::derive_seed(seed, k as u64));
            let mut perm: Vec<usize> = (0..t).collect();
            perm.shuffle(&mut rng);
            let mut s = 0.0;
            for i in 0..t {
                let row = &a[perm[i] * t..(perm[i] + 1) * t];
                let brow = &b[i * t..(i + 1) * t];
                for j in 0..t {
                    s += row[perm[j]] * brow[j];
                }
            }
            usize::from(s / (t * t) as f64 >= observed - tol)
        })
        .sum();

    Ok(CiTestResult { statistic, p_value: (1 + exceed) as f64 / (cfg.n_perm + 1) as f64, ..base })
}

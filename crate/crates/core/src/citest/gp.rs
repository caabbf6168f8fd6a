//! Zero-mean GP regression with an isotropic squared-exponential kernel plus
//! white noise, with hyperparameters picked by exhaustive grid search on the
//! exact log marginal likelihood.
//!
//! For each candidate length scale the unit-variance kernel matrix is
//! eigendecomposed once; the likelihood for every `(signal, noise)` pair then
//! costs `O(n)`. The selected model is refactored with a Cholesky
//! decomposition, escalating the diagonal jitter on failure.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const JITTER_STEPS: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub signal_var: f64,
    pub length_scale: f64,
    pub noise_var: f64,
}

/// Relative hyperparameter grid. Length scales multiply the median pairwise
/// input distance; variances multiply the sample variance of the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub length_scale: Vec<f64>,
    pub signal_var: Vec<f64>,
    pub noise_var: Vec<f64>,
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            length_scale: logspace(0.1, 10.0, 7),
            signal_var: vec![0.25, 0.5, 1.0, 2.0],
            noise_var: logspace(1e-4, 1.0, 7),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    pub hyper: GpHyper,
    /// Diagonal jitter added on top of `noise_var` to make the factorization succeed.
    pub jitter: f64,
    pub log_marginal_likelihood: f64,
    /// Grid indices of the selected `(length, signal, noise)` point.
    pub grid_index: (usize, usize, usize),
    inputs: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl GpModel {
    /// Builds a model with fixed hyperparameters on inputs `z` (columns).
    pub fn with_hyper(z: &[&[f64]], hyper: GpHyper) -> Result<Self> {
        let inputs = to_matrix(z)?;
        let sq = sq_distances(&inputs);
        let k = kernel(&sq, hyper.length_scale, hyper.signal_var);
        let (chol, jitter) = factor(&k, hyper.noise_var)?;
        Ok(GpModel { hyper, jitter, log_marginal_likelihood: f64::NAN, grid_index: (0, 0, 0), inputs, chol })
    }

    pub fn n(&self) -> usize {
        self.inputs.nrows()
    }

    /// Total diagonal term: noise variance plus jitter.
    pub fn effective_noise(&self) -> f64 {
        self.hyper.noise_var + self.jitter
    }

    /// Posterior mean at the training inputs given targets `v`.
    pub fn posterior_mean(&self, v: &[f64]) -> Result<Vec<f64>> {
        let resid = self.residuals(v)?;
        Ok(v.iter().zip(resid).map(|(a, r)| a - r).collect())
    }

    /// `v - K_f (K_f + σ²I)⁻¹ v`, which equals `σ² (K_f + σ²I)⁻¹ v`.
    pub fn residuals(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n() {
            return Err(Error::Config(format!("model fitted on {} points, got {}", self.n(), v.len())));
        }
        let alpha = self.chol.solve(&DVector::from_column_slice(v));
        let s = self.effective_noise();
        Ok(alpha.iter().map(|a| a * s).collect())
    }
}

fn to_matrix(z: &[&[f64]]) -> Result<DMatrix<f64>> {
    let n = z.first().map_or(0, |c| c.len());
    if z.is_empty() || n == 0 {
        return Err(Error::Config("GP regression needs a non-empty input matrix".into()));
    }
    if z.iter().any(|c| c.len() != n) {
        return Err(Error::Config("input columns of unequal length".into()));
    }
    Ok(DMatrix::from_fn(n, z.len(), |i, j| z[j][i]))
}

fn sq_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for c in 0..x.ncols() {
                let t = x[(i, c)] - x[(j, c)];
                s += t * t;
            }
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    d
}

fn kernel(sq: &DMatrix<f64>, length: f64, signal: f64) -> DMatrix<f64> {
    let inv = 1.0 / (2.0 * length * length);
    sq.map(|d| signal * (-d * inv).exp())
}

fn factor(k: &DMatrix<f64>, noise: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    let scale = (k.trace() / n as f64 + noise).max(f64::MIN_POSITIVE);
    for jitter in std::iter::once(0.0).chain(JITTER_STEPS.iter().map(|j| j * scale)) {
        let mut m = k.clone();
        for i in 0..n {
            m[(i, i)] += noise + jitter;
        }
        if let Some(ch) = Cholesky::new(m) {
            let l = ch.l_dirty();
            // nearly-zero pivots mean the factorization only succeeded by rounding
            let tiny = (0..n).any(|i| l[(i, i)] * l[(i, i)] <= 1e-13 * scale);
            if !tiny {
                return Ok((ch, jitter));
            }
        }
    }
    Err(Error::Numerical(format!("Cholesky failed after jitter escalation up to {:e}", JITTER_STEPS[4] * scale)))
}

fn median_distance(sq: &DMatrix<f64>) -> f64 {
    let n = sq.nrows();
    let mut d: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(sq[(i, j)].sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    let m = *m;
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Precomputed eigendecompositions for one input matrix across the grid's
/// length scales; fit several targets on the same inputs cheaply.
pub struct GpFitter {
    inputs: DMatrix<f64>,
    sq: DMatrix<f64>,
    grid: HyperGrid,
    median: f64,
    eig: Vec<(f64, DVector<f64>, DMatrix<f64>)>,
}

impl GpFitter {
    pub fn new(z: &[&[f64]], grid: &HyperGrid) -> Result<Self> {
        let inputs = to_matrix(z)?;
        let n = inputs.nrows();
        if n < 10 {
            return Err(Error::SampleSize(format!("GP fit needs at least 10 samples, got {n}")));
        }
        if grid.length_scale.is_empty() || grid.signal_var.is_empty() || grid.noise_var.is_empty() {
            return Err(Error::Config("empty hyperparameter grid".into()));
        }
        let sq = sq_distances(&inputs);
        let median = median_distance(&sq);
        let eig = grid
            .length_scale
            .iter()
            .map(|f| {
                let ell = f * median;
                let e = SymmetricEigen::new(kernel(&sq, ell, 1.0));
                (ell, e.eigenvalues.map(|l| l.max(0.0)), e.eigenvectors)
            })
            .collect();
        Ok(GpFitter { inputs, sq, grid: grid.clone(), median, eig })
    }

    pub fn median_distance(&self) -> f64 {
        self.median
    }

    /// Grid search on the exact log marginal likelihood, then a Cholesky
    /// refactor of the winner.
    pub fn fit(&self, v: &[f64]) -> Result<GpModel> {
        let n = self.inputs.nrows();
        if v.len() != n {
            return Err(Error::Config(format!("{n} inputs but {} targets", v.len())));
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let base = if var > 0.0 { var } else { 1.0 };
        let target = DVector::from_column_slice(v);
        let log2pi = (2.0 * std::f64::consts::PI).ln();

        let mut best: Option<(f64, (usize, usize, usize))> = None;
        for (li, (_, lambda, vecs)) in self.eig.iter().enumerate() {
            let w2: Vec<f64> = (vecs.transpose() * &target).iter().map(|w| w * w).collect();
            for (si, sf) in self.grid.signal_var.iter().enumerate() {
                let sf = sf * base;
                for (ni, sn) in self.grid.noise_var.iter().enumerate() {
                    // floor matches the first jitter step of the final factorization
                    let sn = (sn * base).max(JITTER_STEPS[0] * (sf + sn * base));
                    let mut lml = -0.5 * n as f64 * log2pi;
                    for (l, w) in lambda.iter().zip(&w2) {
                        let mu = sf * l + sn;
                        lml -= 0.5 * (w / mu + mu.ln());
                    }
                    if best.is_none_or(|(b, _)| lml > b) {
                        best = Some((lml, (li, si, ni)));
                    }
                }
            }
        }
        let (lml, (li, si, ni)) =
            best.ok_or_else(|| Error::Numerical("no finite log marginal likelihood on the grid".into()))?;
        if !lml.is_finite() {
            return Err(Error::Numerical("log marginal likelihood is not finite".into()));
        }
        let hyper = GpHyper {
            signal_var: self.grid.signal_var[si] * base,
            length_scale: self.eig[li].0,
            noise_var: self.grid.noise_var[ni] * base,
        };
        let k = kernel(&self.sq, hyper.length_scale, hyper.signal_var);
        let (chol, jitter) = factor(&k, hyper.noise_var)?;
        Ok(GpModel {
            hyper,
            jitter,
            log_marginal_likelihood: lml,
            grid_index: (li, si, ni),
            inputs: self.inputs.clone(),
            chol,
        })
    }
}

/// Fits a GP of `v` on inputs `z` (columns, expected standardized).
pub fn gp_fit(z: &[&[f64]], v: &[f64], grid: &HyperGrid) -> Result<GpModel> {
    GpFitter::new(z, grid)?.fit(v)
}

/// `v` minus the GP posterior mean at the training inputs.
pub fn gp_residuals(model: &GpModel, v: &[f64]) -> Result<Vec<f64>> {
    model.residuals(v)
}

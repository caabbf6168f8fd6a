//! Synthetic series: TSMixup convex combinations and KernelSynth draws from
//! Gaussian-process priors with randomly composed kernels.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsMixupConfig {
    pub max_series: usize,
    pub dirichlet_alpha: f64,
    pub length_range: [usize; 2],
}

impl Default for TsMixupConfig {
    fn default() -> Self {
        TsMixupConfig { max_series: 3, dirichlet_alpha: 1.5, length_range: [64, 512] }
    }
}

impl TsMixupConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_series < 1 {
            return Err(Error::Config("max_series must be at least 1".into()));
        }
        if !(self.dirichlet_alpha > 0.0 && self.dirichlet_alpha.is_finite()) {
            return Err(Error::Config(format!("dirichlet_alpha must be positive, got {}", self.dirichlet_alpha)));
        }
        let [lo, hi] = self.length_range;
        if lo < 1 || lo > hi {
            return Err(Error::Config(format!("invalid length range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// One mixed series with the draw that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixupSample {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub sources: Vec<usize>,
    pub offsets: Vec<usize>,
}

fn scaled_window(x: &[f64]) -> Vec<f64> {
    let s = x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
    if s > 0.0 {
        x.iter().map(|v| v / s).collect()
    } else {
        vec![0.0; x.len()]
    }
}

/// Symmetric Dirichlet weights from normalized Gamma(alpha, 1) draws.
pub fn dirichlet_weights(k: usize, alpha: f64, rng: &mut seed::Rng) -> Result<Vec<f64>> {
    let g = Gamma::new(alpha, 1.0).map_err(|e| Error::Config(format!("dirichlet: {e}")))?;
    loop {
        let draws: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return Ok(draws.iter().map(|d| d / total).collect());
        }
    }
}

/// Draws `k ~ U{1..K}` distinct pool series and a length `l ~ U{l_min..l_max}`
/// (capped at the shortest selected series), cuts an independent window from
/// each, mean-scales the windows and mixes them with symmetric Dirichlet
/// weights.
pub fn tsmixup(pool: &[Vec<f64>], cfg: &TsMixupConfig, seed: u64) -> Result<MixupSample> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::Config("empty TSMixup pool".into()));
    }
    if pool.iter().any(|s| s.is_empty() || s.iter().any(|v| !v.is_finite())) {
        return Err(Error::Config("pool series must be non-empty and finite".into()));
    }
    let mut rng = seed::rng(seed);
    let k = rng.random_range(1..=cfg.max_series.min(pool.len()));
    let mut sources = index::sample(&mut rng, pool.len(), k).into_vec();
    sources.sort_unstable();
    let l = rng.random_range(cfg.length_range[0]..=cfg.length_range[1]);
    let l = sources.iter().map(|i| pool[*i].len()).min().unwrap_or(l).min(l);
    let offsets: Vec<usize> = sources.iter().map(|i| rng.random_range(0..=pool[*i].len() - l)).collect();
    let weights = dirichlet_weights(k, cfg.dirichlet_alpha, &mut rng)?;
    let mut values = vec![0.0; l];
    for ((i, off), w) in sources.iter().zip(&offsets).zip(&weights) {
        for (v, x) in values.iter_mut().zip(scaled_window(&pool[*i][*off..*off + l])) {
            *v += w * x;
        }
    }
    Ok(MixupSample { values, weights, sources, offsets })
}

/// Kernel expression on inputs in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelExpr {
    Linear { variance: f64, offset: f64 },
    Periodic { variance: f64, period: f64, length_scale: f64 },
    Rbf { variance: f64, length_scale: f64 },
    Add { left: Box<KernelExpr>, right: Box<KernelExpr> },
    Mul { left: Box<KernelExpr>, right: Box<KernelExpr> },
}

impl KernelExpr {
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        match self {
            KernelExpr::Linear { variance, offset } => variance * (a - offset) * (b - offset),
            KernelExpr::Periodic { variance, period, length_scale } => {
                let s = (std::f64::consts::PI * (a - b).abs() / period).sin();
                variance * (-2.0 * s * s / (length_scale * length_scale)).exp()
            }
            KernelExpr::Rbf { variance, length_scale } => {
                let d = a - b;
                variance * (-d * d / (2.0 * length_scale * length_scale)).exp()
            }
            KernelExpr::Add { left, right } => left.eval(a, b) + right.eval(a, b),
            KernelExpr::Mul { left, right } => left.eval(a, b) * right.eval(a, b),
        }
    }

    pub fn matrix(&self, points: &[f64]) -> DMatrix<f64> {
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(points[i], points[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    pub fn n_primitives(&self) -> usize {
        match self {
            KernelExpr::Add { left, right } | KernelExpr::Mul { left, right } => {
                left.n_primitives() + right.n_primitives()
            }
            _ => 1,
        }
    }

    /// Infix rendering, e.g. `(rbf(l=0.2) + periodic(p=0.1,l=1))`.
    pub fn describe(&self) -> String {
        match self {
            KernelExpr::Linear { variance, offset } => format!("linear(v={variance},c={offset})"),
            KernelExpr::Periodic { variance, period, length_scale } => {
                format!("periodic(v={variance},p={period},l={length_scale})")
            }
            KernelExpr::Rbf { variance, length_scale } => format!("rbf(v={variance},l={length_scale})"),
            KernelExpr::Add { left, right } => format!("({} + {})", left.describe(), right.describe()),
            KernelExpr::Mul { left, right } => format!("({} * {})", left.describe(), right.describe()),
        }
    }
}

fn random_primitive(rng: &mut seed::Rng) -> KernelExpr {
    match rng.random_range(0..3) {
        0 => KernelExpr::Linear { variance: 1.0, offset: rng.random_range(0.0..=1.0) },
        1 => KernelExpr::Periodic { variance: 1.0, period: rng.random_range(0.05..=0.5), length_scale: 1.0 },
        _ => KernelExpr::Rbf { variance: 1.0, length_scale: rng.random_range(0.05..=1.0) },
    }
}

/// Draws `j ~ U{1..J}` unit-variance primitives (linear offset in [0, 1],
/// period in [0.05, 0.5], RBF length-scale in [0.05, 1]) and folds them left
/// with uniformly chosen `+` / `*`.
pub fn sample_kernel(max_terms: usize, seed: u64) -> Result<KernelExpr> {
    if max_terms < 1 {
        return Err(Error::Config("max_terms must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    let j = rng.random_range(1..=max_terms);
    let mut expr = random_primitive(&mut rng);
    for _ in 1..j {
        let next = random_primitive(&mut rng);
        expr = if rng.random_bool(0.5) {
            KernelExpr::Add { left: Box::new(expr), right: Box::new(next) }
        } else {
            KernelExpr::Mul { left: Box::new(expr), right: Box::new(next) }
        };
    }
    Ok(expr)
}

/// Evenly spaced grid of `n` points on `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Factored GP prior on the unit grid; draws are `L z`.
#[derive(Debug, Clone)]
pub struct GpPrior {
    factor: Option<DMatrix<f64>>,
    n: usize,
    pub jitter: f64,
}

impl GpPrior {
    pub fn new(n: usize, expr: &KernelExpr) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("series length must be at least 2, got {n}")));
        }
        let k = expr.matrix(&unit_grid(n));
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("kernel matrix has non-finite entries".into()));
        }
        let scale = k.diagonal().iter().sum::<f64>() / n as f64;
        if scale == 0.0 && k.iter().all(|v| *v == 0.0) {
            return Ok(GpPrior { factor: None, n, jitter: 0.0 });
        }
        let scale = scale.abs().max(f64::MIN_POSITIVE);
        for rel in [1e-8, 1e-7, 1e-6, 1e-5] {
            let jitter = rel * scale;
            let mut kj = k.clone();
            for i in 0..n {
                kj[(i, i)] += jitter;
            }
            if let Some(c) = Cholesky::new(kj) {
                return Ok(GpPrior { factor: Some(c.l()), n, jitter });
            }
        }
        Err(Error::Numerical("kernel matrix not positive definite after jitter 1e-5".into()))
    }

    pub fn draw(&self, seed: u64) -> Vec<f64> {
        let Some(l) = &self.factor else { return vec![0.0; self.n] };
        let mut rng = seed::rng(seed);
        let z = DVector::from_iterator(self.n, (0..self.n).map(|_| StandardNormal.sample(&mut rng)));
        (l * z).iter().copied().collect()
    }
}

/// One draw of length `n` from `GP(0, expr)` on the unit grid.
pub fn kernelsynth(n: usize, expr: &KernelExpr, seed: u64) -> Result<Vec<f64>> {
    Ok(GpPrior::new(n, expr)?.draw(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    #[test]
    fn single_series_mixup_is_scaled_window() {
        let pool = vec![(0..100).map(|i| i as f64 + 1.0).collect::<Vec<f64>>()];
        let cfg = TsMixupConfig { max_series: 1, length_range: [10, 20], ..TsMixupConfig::default() };
        let m = tsmixup(&pool, &cfg, 3).unwrap();
        assert_eq!(m.weights, vec![1.0]);
        let off = m.offsets[0];
        let want = scaled_window(&pool[0][off..off + m.values.len()]);
        assert_eq!(m.values, want);
    }

    #[test]
    fn constant_series_mix_to_one() {
        let pool = vec![vec![1.0; 50], vec![3.0; 50]];
        let cfg = TsMixupConfig { max_series: 2, length_range: [8, 8], ..TsMixupConfig::default() };
        for s in 0..20 {
            let m = tsmixup(&pool, &cfg, s).unwrap();
            assert!(m.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
        assert!(tsmixup(&[], &cfg, 0).is_err());
    }

    #[test]
    fn identical_entries_give_shared_window() {
        let base: Vec<f64> = (0..64).map(|i| ((i as f64) * 0.7).sin() + 2.0).collect();
        let pool = vec![base.clone(); 3];
        let cfg = TsMixupConfig { length_range: [64, 64], ..TsMixupConfig::default() };
        let m = tsmixup(&pool, &cfg, 11).unwrap();
        let want = scaled_window(&base);
        for (a, b) in m.values.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_sampling_is_deterministic() {
        assert_eq!(sample_kernel(5, 9).unwrap(), sample_kernel(5, 9).unwrap());
        for s in 0..20 {
            assert_eq!(sample_kernel(1, s).unwrap().n_primitives(), 1);
            assert!(sample_kernel(5, s).unwrap().n_primitives() <= 5);
        }
        assert!(sample_kernel(0, 0).is_err());
    }

    #[test]
    fn zero_kernel_gives_zero_series() {
        let k = KernelExpr::Rbf { variance: 0.0, length_scale: 0.3 };
        assert_eq!(kernelsynth(16, &k, 1).unwrap(), vec![0.0; 16]);
        let expr = sample_kernel(4, 2).unwrap();
        assert_eq!(kernelsynth(64, &expr, 5).unwrap(), kernelsynth(64, &expr, 5).unwrap());
        assert!(kernelsynth(1, &expr, 5).is_err());
    }

    proptest! {
        #[test]
        fn mixup_weights_are_convex(seed in any::<u64>()) {
            let pool: Vec<Vec<f64>> = (0..4).map(|j| (0..80).map(|i| ((i * (j + 1)) as f64 * 0.3).cos() + 1.5).collect()).collect();
            let cfg = TsMixupConfig { length_range: [16, 70], ..TsMixupConfig::default() };
            let m = tsmixup(&pool, &cfg, seed).unwrap();
            prop_assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(m.weights.iter().all(|w| *w >= 0.0));
            let l = m.values.len();
            for t in 0..l {
                let parts: Vec<f64> = m.sources.iter().zip(&m.offsets)
                    .map(|(i, o)| scaled_window(&pool[*i][*o..*o + l])[t]).collect();
                let lo = parts.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = parts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(m.values[t] >= lo - 1e-12 && m.values[t] <= hi + 1e-12);
            }
        }

        #[test]
        fn composite_kernels_are_psd(seed in any::<u64>()) {
            let expr = sample_kernel(5, seed).unwrap();
            let mut rng = seed::rng(seed ^ 0xabc);
            let pts: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
            let k = expr.matrix(&pts);
            let min = SymmetricEigen::new(k).eigenvalues.min();
            prop_assert!(min >= -1e-8, "min eigenvalue {min} for {}", expr.describe());
        }
    }
}

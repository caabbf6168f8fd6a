//! Forecast evaluation: interval coverage with Jeffreys posteriors, error and
//! width distributions, binomial calibration and anomaly flags.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::chronoslite::ForecastBundle;
use crate::error::{Error, Result};

/// Per-horizon coverage: `k[h]` of `n[h]` observations inside the band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCounts {
    pub level: f64,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
}

impl CoverageCounts {
    pub fn proportions(&self) -> Vec<f64> {
        self.k.iter().zip(&self.n).map(|(k, n)| if *n == 0 { f64::NAN } else { *k as f64 / *n as f64 }).collect()
    }

    pub fn pooled(&self) -> (usize, usize) {
        (self.k.iter().sum(), self.n.iter().sum())
    }

    pub fn violations(&self) -> usize {
        let (k, n) = self.pooled();
        n - k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub k: usize,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub mean: f64,
    /// Equal-tailed 90 % credible interval.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

/// Raw per-horizon values with their summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonDistribution {
    pub horizon: usize,
    pub values: Vec<f64>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialReport {
    pub violations: usize,
    pub n: usize,
    pub p: f64,
    pub mean: f64,
    pub sd: f64,
    pub z: f64,
    pub within_2sd: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyFlag {
    pub origin: String,
    pub step: usize,
    pub index: usize,
    pub observed: f64,
    pub lower_tail: f64,
    pub upper_tail: f64,
    pub tail_probability: f64,
    pub flagged: bool,
    pub alpha: f64,
}

/// Sample summary; quartiles interpolate linearly between order statistics.
pub fn summarize(values: &[f64]) -> Summary {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return Summary {
            count: 0,
            mean: f64::NAN,
            median: f64::NAN,
            q25: f64::NAN,
            q75: f64::NAN,
            iqr: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
        };
    }
    let q = |p: f64| {
        let pos = p * (n - 1) as f64;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        if i + 1 < n {
            v[i] + f * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    let (q25, q75) = (q(0.25), q(0.75));
    Summary {
        count: n,
        mean: v.iter().sum::<f64>() / n as f64,
        median: q(0.5),
        q25,
        q75,
        iqr: q75 - q25,
        min: v[0],
        max: v[n - 1],
    }
}

fn common_horizon(bundles: &[ForecastBundle]) -> Result<usize> {
    let Some(first) = bundles.first() else {
        return Err(Error::Alignment("no forecast bundles".into()));
    };
    if let Some(b) = bundles.iter().find(|b| b.horizon != first.horizon) {
        return Err(Error::Alignment(format!(
            "bundle {} has horizon {}, expected {}",
            b.origin, b.horizon, first.horizon
        )));
    }
    Ok(first.horizon)
}

/// Actual value for step `h` (0-based) of `b`.
fn actual(actuals: &[f64], b: &ForecastBundle, h: usize) -> Result<f64> {
    let i = b.origin_index + h;
    match actuals.get(i) {
        Some(v) if v.is_finite() => Ok(*v),
        Some(_) => Err(Error::Alignment(format!("missing actual at index {i} (origin {})", b.origin))),
        None => Err(Error::Alignment(format!(
            "origin {} step {} needs actual index {i}, only {} actuals",
            b.origin,
            h + 1,
            actuals.len()
        ))),
    }
}

/// Counts observations inside the central `level` band, boundaries included.
/// `actuals[b.origin_index + h]` is compared with step `h + 1` of bundle `b`.
pub fn coverage_counts(actuals: &[f64], bundles: &[ForecastBundle], level: f64) -> Result<CoverageCounts> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("band level {level} outside (0, 1)")));
    }
    let h = common_horizon(bundles)?;
    let tail = (1.0 - level) / 2.0;
    let mut k = vec![0; h];
    for b in bundles {
        let lo = b.band(tail)?;
        let hi = b.band(1.0 - tail)?;
        for step in 0..h {
            let y = actual(actuals, b, step)?;
            if y >= lo[step] && y <= hi[step] {
                k[step] += 1;
            }
        }
    }
    Ok(CoverageCounts { level, n: vec![bundles.len(); h], k })
}

/// `x` with `I_x(a, b) = p`, by bisection to 1e-10.
pub fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Jeffreys posterior `Beta(k + 0.5, n - k + 0.5)` with its equal-tailed 90 %
/// credible interval.
pub fn beta_posterior(k: usize, n: usize) -> Result<PosteriorSummary> {
    if k > n {
        return Err(Error::Config(format!("k = {k} exceeds n = {n}")));
    }
    let a = k as f64 + 0.5;
    let b = (n - k) as f64 + 0.5;
    Ok(PosteriorSummary {
        k,
        n,
        a,
        b,
        mean: a / (a + b),
        lower: beta_quantile(a, b, 0.05),
        upper: beta_quantile(a, b, 0.95),
    })
}

/// `|y - median|` per horizon.
pub fn error_distributions(actuals: &[f64], bundles: &[ForecastBundle]) -> Result<Vec<HorizonDistribution>> {
    let h = common_horizon(bundles)?;
    let mut errs = vec![Vec::with_capacity(bundles.len()); h];
    for b in bundles {
        let med = b.median()?;
        for step in 0..h {
            errs[step].push((actual(actuals, b, step)? - med[step]).abs());
        }
    }
    Ok(distributions(errs))
}

/// `q_{upper} - q_{lower}` of the central `level` band per horizon.
pub fn interval_widths(bundles: &[ForecastBundle], level: f64) -> Result<Vec<HorizonDistribution>> {
    let h = common_horizon(bundles)?;
    let tail = (1.0 - level) / 2.0;
    let mut widths = vec![Vec::with_capacity(bundles.len()); h];
    for b in bundles {
        let lo = b.band(tail)?;
        let hi = b.band(1.0 - tail)?;
        for step in 0..h {
            widths[step].push(hi[step] - lo[step]);
        }
    }
    Ok(distributions(widths))
}

fn distributions(per_h: Vec<Vec<f64>>) -> Vec<HorizonDistribution> {
    per_h
        .into_iter()
        .enumerate()
        .map(|(i, values)| HorizonDistribution { horizon: i + 1, summary: summarize(&values), values })
        .collect()
}

/// Compares a violation count with `Binomial(n, p)`.
pub fn binomial_calibration(violations: usize, n: usize, p: f64) -> Result<BinomialReport> {
    if violations > n {
        return Err(Error::Config(format!("{violations} violations exceed n = {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("p = {p} outside (0, 1)")));
    }
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    let z = if sd > 0.0 { (violations as f64 - mean) / sd } else { 0.0 };
    Ok(BinomialReport { violations, n, p, mean, sd, z, within_2sd: z.abs() <= 2.0 })
}

/// Tail probabilities of `obs` among `samples`, with add-one continuity:
/// `((1 + #{s <= obs}) / (m + 1), (1 + #{s >= obs}) / (m + 1))`.
pub fn tail_probabilities(samples: &[f64], obs: f64) -> (f64, f64) {
    let m = samples.len() as f64;
    let below = samples.iter().filter(|s| **s <= obs).count() as f64;
    let above = samples.iter().filter(|s| **s >= obs).count() as f64;
    ((1.0 + below) / (m + 1.0), (1.0 + above) / (m + 1.0))
}

/// Flags every forecast step whose observation falls in either tail of the
/// sampled predictive distribution: `min(lower, upper) < alpha`.
pub fn anomaly_flags(actuals: &[f64], bundles: &[ForecastBundle], alpha: f64) -> Result<Vec<AnomalyFlag>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha = {alpha} outside (0, 1)")));
    }
    let h = common_horizon(bundles)?;
    let mut out = Vec::new();
    for b in bundles {
        let Some(samples) = &b.samples else {
            return Err(Error::Config(format!("bundle {} has no sample trajectories", b.origin)));
        };
        let mut col = Vec::with_capacity(samples.len());
        for step in 0..h {
            col.clear();
            col.extend(samples.iter().map(|s| s[step]));
            let y = actual(actuals, b, step)?;
            let (lower_tail, upper_tail) = tail_probabilities(&col, y);
            let tail_probability = lower_tail.min(upper_tail);
            out.push(AnomalyFlag {
                origin: b.origin.clone(),
                step: step + 1,
                index: b.origin_index + step,
                observed: y,
                lower_tail,
                upper_tail,
                tail_probability,
                flagged: tail_probability < alpha,
                alpha,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub level: f64,
    pub alpha: f64,
    pub n_origins: usize,
    pub coverage: CoverageCounts,
    pub proportions: Vec<f64>,
    pub posteriors: Vec<PosteriorSummary>,
    pub pooled_posterior: PosteriorSummary,
    pub calibration: BinomialReport,
    pub errors: Vec<HorizonDistribution>,
    pub widths: Vec<HorizonDistribution>,
    /// Empty when the bundles carry no samples.
    pub anomalies: Vec<AnomalyFlag>,
}

/// Full evaluation suite over aligned actuals and bundles.
pub fn evaluate(actuals: &[f64], bundles: &[ForecastBundle], level: f64, alpha: f64) -> Result<EvaluationReport> {
    let coverage = coverage_counts(actuals, bundles, level)?;
    let posteriors =
        coverage.k.iter().zip(&coverage.n).map(|(k, n)| beta_posterior(*k, *n)).collect::<Result<Vec<_>>>()?;
    let (k, n) = coverage.pooled();
    let anomalies =
        if bundles.iter().all(|b| b.samples.is_some()) { anomaly_flags(actuals, bundles, alpha)? } else { Vec::new() };
    Ok(EvaluationReport {
        level,
        alpha,
        n_origins: bundles.len(),
        proportions: coverage.proportions(),
        posteriors,
        pooled_posterior: beta_posterior(k, n)?,
        calibration: binomial_calibration(n - k, n, 1.0 - level)?,
        errors: error_distributions(actuals, bundles)?,
        widths: interval_widths(bundles, level)?,
        anomalies,
        coverage,
    })
}

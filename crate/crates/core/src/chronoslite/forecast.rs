use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Smoothing, TokenPredictor};
use super::quantizer::{mean_scale, Quantizer, Token};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_LEVELS: [f64; 3] = [0.05, 0.5, 0.95];

/// Sampled forecast for one origin. `samples[i][h]` is trajectory `i` at step
/// `h + 1`; `quantiles[l][h]` is level `levels[l]` at step `h + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastBundle {
    pub origin: String,
    pub origin_index: usize,
    pub horizon: usize,
    pub scale: f64,
    pub levels: Vec<f64>,
    pub quantiles: Vec<Vec<f64>>,
    pub samples: Option<Vec<Vec<f64>>>,
    pub tokens: Option<Vec<Vec<Token>>>,
}

#[derive(Serialize, Deserialize)]
struct BundleJson {
    origin: String,
    #[serde(default)]
    origin_index: Option<usize>,
    #[serde(default)]
    horizon: Option<usize>,
    s: f64,
    quantiles: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<Vec<Token>>>,
}

pub fn level_key(level: f64) -> String {
    format!("{level}")
}

impl ForecastBundle {
    fn to_repr(&self) -> BundleJson {
        BundleJson {
            origin: self.origin.clone(),
            origin_index: Some(self.origin_index),
            horizon: Some(self.horizon),
            s: self.scale,
            quantiles: self.levels.iter().zip(&self.quantiles).map(|(l, q)| (level_key(*l), q.clone())).collect(),
            samples: self.samples.clone(),
            tokens: self.tokens.clone(),
        }
    }

    fn from_repr(r: BundleJson) -> Result<Self> {
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
        for (k, v) in r.quantiles {
            let l: f64 = k.parse().map_err(|_| Error::Config(format!("bad quantile level {k:?}")))?;
            pairs.push((l, v));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let horizon = r
            .horizon
            .or_else(|| pairs.first().map(|p| p.1.len()))
            .or_else(|| r.samples.as_ref().and_then(|s| s.first()).map(Vec::len))
            .unwrap_or(0);
        if pairs.iter().any(|p| p.1.len() != horizon) {
            return Err(Error::Config("quantile rows disagree with horizon".into()));
        }
        Ok(ForecastBundle {
            origin: r.origin,
            origin_index: r.origin_index.unwrap_or(0),
            horizon,
            scale: r.s,
            levels: pairs.iter().map(|p| p.0).collect(),
            quantiles: pairs.into_iter().map(|p| p.1).collect(),
            samples: r.samples,
            tokens: r.tokens,
        })
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_repr()).expect("bundle serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_repr()).expect("bundle serializes")
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self> {
        Self::from_repr(serde_json::from_value(v)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_repr(serde_json::from_str(s)?)
    }

    /// Band at `level`, from stored quantiles or, failing that, the samples.
    pub fn band(&self, level: f64) -> Result<Vec<f64>> {
        if let Some(i) = self.levels.iter().position(|l| (l - level).abs() < 1e-9) {
            return Ok(self.quantiles[i].clone());
        }
        match &self.samples {
            Some(s) => Ok(forecast_quantiles(s, &[level])?.remove(0)),
            None => Err(Error::Config(format!("bundle {} has no band at level {level}", self.origin))),
        }
    }

    pub fn median(&self) -> Result<Vec<f64>> {
        self.band(0.5)
    }
}

/// Draws `n_samples` trajectories of `horizon` tokens, feeding each draw back
/// into the context. Only bin tokens are drawn: `PAD` and `EOS` are rejected,
/// which amounts to renormalizing over the bins. Returns token trajectories.
pub fn sample_tokens(
    predictor: &TokenPredictor,
    quantizer: &Quantizer,
    context: &[Token],
    horizon: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<Token>>> {
    if horizon < 1 || n_samples < 1 {
        return Err(Error::Config("horizon and n_samples must be at least 1".into()));
    }
    if predictor.vocab_size() != quantizer.vocab_size() {
        return Err(Error::Config("predictor and quantizer vocabularies differ".into()));
    }
    let bins = quantizer.bins();
    let keep = predictor.order();
    Ok((0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed::derive_seed(seed, i as u64));
            let mut hist: Vec<Token> = context[context.len().saturating_sub(keep)..].to_vec();
            let mut out = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let d = predictor.distribution(&hist);
                let total: f64 = d[..bins].iter().sum();
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut tok = bins;
                for (j, p) in d[..bins].iter().enumerate() {
                    acc += p;
                    if u < acc {
                        tok = j + 1;
                        break;
                    }
                }
                out.push(tok as Token);
                hist.push(tok as Token);
                if hist.len() > keep {
                    hist.remove(0);
                }
            }
            out
        })
        .collect())
}

/// Nearest-rank quantiles per step: `sorted[ceil(p n) - 1]`.
pub fn forecast_quantiles(samples: &[Vec<f64>], levels: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = samples.len();
    if n < 20 {
        return Err(Error::Config(format!("need at least 20 samples for quantiles, got {n}")));
    }
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::Config(format!("quantile level {l} outside (0, 1)")));
    }
    let h = samples[0].len();
    if samples.iter().any(|s| s.len() != h) {
        return Err(Error::Config("ragged sample trajectories".into()));
    }
    let mut out = vec![vec![0.0; h]; levels.len()];
    let mut col = vec![0.0; n];
    for step in 0..h {
        for (c, s) in col.iter_mut().zip(samples) {
            *c = s[step];
        }
        col.sort_by(f64::total_cmp);
        for (li, l) in levels.iter().enumerate() {
            let rank = ((l * n as f64) - 1e-9).ceil().max(1.0) as usize;
            out[li][step] = col[rank.min(n) - 1];
        }
    }
    Ok(out)
}

/// Mean-scales `context`, samples `horizon` steps and builds the bundle.
#[allow(clippy::too_many_arguments)]
pub fn sample_forecast(
    predictor: &TokenPredictor,
    quantizer: &Quantizer,
    context: &[f64],
    horizon: usize,
    n_samples: usize,
    levels: &[f64],
    seed: u64,
    keep_tokens: bool,
) -> Result<ForecastBundle> {
    let sc = mean_scale(context)?;
    let ctx = quantizer.tokenize(&sc.values);
    let tokens = sample_tokens(predictor, quantizer, &ctx, horizon, n_samples, seed)?;
    let samples: Vec<Vec<f64>> =
        tokens.iter().map(|tr| tr.iter().map(|t| quantizer.centers()[*t as usize - 1] * sc.scale).collect()).collect();
    let quantiles = if n_samples >= 20 { forecast_quantiles(&samples, levels)? } else { Vec::new() };
    Ok(ForecastBundle {
        origin: String::new(),
        origin_index: 0,
        horizon,
        scale: sc.scale,
        levels: if quantiles.is_empty() { Vec::new() } else { levels.to_vec() },
        quantiles,
        samples: Some(samples),
        tokens: keep_tokens.then_some(tokens),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    pub context_len: usize,
    pub horizon: usize,
    pub step: usize,
    /// Offset between consecutive training windows.
    pub train_stride: usize,
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
    pub order: usize,
    pub gamma: f64,
    pub smoothing: Smoothing,
    pub n_samples: usize,
    pub levels: Vec<f64>,
    /// First origin index; defaults to `context_len`.
    pub first_origin: Option<usize>,
    pub keep_samples: bool,
    pub keep_tokens: bool,
    pub seed: u64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            context_len: 40,
            horizon: 4,
            step: 4,
            train_stride: 4,
            bins: 64,
            lo: -15.0,
            hi: 15.0,
            order: 3,
            gamma: 3.0,
            smoothing: Smoothing::Hierarchical,
            n_samples: 200,
            levels: DEFAULT_LEVELS.to_vec(),
            first_origin: None,
            keep_samples: true,
            keep_tokens: false,
            seed: 0,
        }
    }
}

impl ForecastConfig {
    pub fn quantizer(&self) -> Result<Quantizer> {
        Quantizer::new(self.bins, self.lo, self.hi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.context_len < 1 || self.horizon < 1 || self.step < 1 || self.train_stride < 1 {
            return Err(Error::Config("context_len, horizon, step and train_stride must be at least 1".into()));
        }
        if self.n_samples < 20 {
            return Err(Error::Config(format!("n_samples = {} < 20", self.n_samples)));
        }
        self.quantizer()?;
        TokenPredictor::new(self.bins + 2, self.bins as Token + 1, self.order, self.gamma, self.smoothing)?;
        Ok(())
    }

    /// Origins `o` (index of the first forecast point) with `o + horizon <= len`.
    pub fn origins(&self, len: usize) -> Vec<usize> {
        let first = self.first_origin.unwrap_or(self.context_len).max(self.context_len);
        (first..).step_by(self.step).take_while(|o| o + self.horizon <= len).collect()
    }
}

/// Training sequence for one window: scaled by the mean |x| of its leading
/// `ctx` values, tokenized and closed by `EOS`. All-zero windows are skipped.
fn window_tokens(q: &Quantizer, window: &[f64], ctx: usize) -> Option<Vec<Token>> {
    let ctx = ctx.clamp(1, window.len());
    let s = window[..ctx].iter().map(|v| v.abs()).sum::<f64>() / ctx as f64;
    if !(s > 0.0) {
        return None;
    }
    let scaled: Vec<f64> = window.iter().map(|v| v / s).collect();
    Some(q.training_sequence(&scaled))
}

/// Training windows of `context_len + horizon` points at `train_stride` from
/// each series, tokenized like the rolling protocol does. Useful for a base
/// corpus built from synthetic series.
pub fn window_corpus(series: &[Vec<f64>], cfg: &ForecastConfig) -> Result<Vec<Vec<Token>>> {
    cfg.validate()?;
    let q = cfg.quantizer()?;
    let need = cfg.context_len + cfg.horizon;
    let mut out = Vec::new();
    for s in series {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("corpus series contains non-finite values".into()));
        }
        let mut start = 0;
        while start + need <= s.len() {
            out.extend(window_tokens(&q, &s[start..start + need], cfg.context_len));
            start += cfg.train_stride;
        }
    }
    Ok(out)
}

/// Rolling-origin forecasts with an expanding training history.
///
/// At origin `o` the predictor has seen `base_corpus` plus every window of
/// `context_len + horizon` points lying strictly before `o`; when the history
/// is shorter than one window, the whole history is used as a single short
/// window. The context is the last `context_len` points before `o`.
pub fn rolling_forecast(
    series: &[f64],
    labels: Option<&[String]>,
    cfg: &ForecastConfig,
    base_corpus: &[Vec<Token>],
) -> Result<Vec<ForecastBundle>> {
    cfg.validate()?;
    let need = cfg.context_len + cfg.horizon;
    if series.len() < need {
        return Err(Error::InsufficientHistory(format!(
            "series has {} points, need context_len + horizon = {need}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("series contains missing or non-finite values".into()));
    }
    if let Some(l) = labels {
        if l.len() != series.len() {
            return Err(Error::Alignment(format!("{} labels for {} points", l.len(), series.len())));
        }
    }
    let q = cfg.quantizer()?;
    let mut model = TokenPredictor::train_or_empty(base_corpus, &q, cfg)?;
    let mut next_window = 0usize;
    let mut out = Vec::new();
    for o in cfg.origins(series.len()) {
        while next_window + need <= o {
            if let Some(t) = window_tokens(&q, &series[next_window..next_window + need], cfg.context_len) {
                model.add_sequence(&t)?;
            }
            next_window += cfg.train_stride;
        }
        let short;
        let predictor = if o < need {
            let mut m = model.clone();
            if let Some(t) = window_tokens(&q, &series[..o], o.saturating_sub(cfg.horizon)) {
                m.add_sequence(&t)?;
            }
            short = m;
            &short
        } else {
            &model
        };
        let context = &series[o - cfg.context_len..o];
        let mut b = sample_forecast(
            predictor,
            &q,
            context,
            cfg.horizon,
            cfg.n_samples,
            &cfg.levels,
            seed::derive_seed(cfg.seed, o as u64),
            cfg.keep_tokens,
        )?;
        b.origin_index = o;
        b.origin = labels.map_or_else(|| o.to_string(), |l| l[o].clone());
        if !cfg.keep_samples {
            b.samples = None;
        }
        out.push(b);
    }
    Ok(out)
}

impl TokenPredictor {
    fn train_or_empty(corpus: &[Vec<Token>], q: &Quantizer, cfg: &ForecastConfig) -> Result<Self> {
        let mut m = TokenPredictor::new(q.vocab_size(), q.pad(), cfg.order, cfg.gamma, cfg.smoothing)?;
        for s in corpus {
            m.add_sequence(s)?;
        }
        Ok(m)
    }
}

/// Per-step band table for plotting: `origin,step,index,level...`.
pub fn bands_csv(bundles: &[ForecastBundle]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let levels: Vec<f64> = bundles.first().map(|b| b.levels.clone()).unwrap_or_default();
    let mut header = vec!["origin".to_string(), "step".into(), "index".into()];
    header.extend(levels.iter().map(|l| format!("q{}", level_key(*l))));
    w.write_record(&header).map_err(csv_err)?;
    for b in bundles {
        if b.levels != levels {
            return Err(Error::Config("bundles carry different quantile levels".into()));
        }
        for h in 0..b.horizon {
            let mut rec = vec![b.origin.clone(), (h + 1).to_string(), (b.origin_index + h).to_string()];
            rec.extend(b.quantiles.iter().map(|q| format!("{}", q[h])));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

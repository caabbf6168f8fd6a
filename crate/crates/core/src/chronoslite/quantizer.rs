use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Token = u32;

/// Uniform binning of the scaled axis into `B` bins, plus `PAD = B + 1` and
/// `EOS = B + 2`. Bin tokens are `1..=B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    bins: usize,
    lo: f64,
    hi: f64,
    centers: Vec<f64>,
    edges: Vec<f64>,
}

impl Quantizer {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("invalid bin range [{lo}, {hi}]")));
        }
        let w = (hi - lo) / bins as f64;
        let centers: Vec<f64> = (0..bins).map(|i| lo + w * (i as f64 + 0.5)).collect();
        let edges = centers.windows(2).map(|c| (c[0] + c[1]) / 2.0).collect();
        Ok(Quantizer { bins, lo, hi, centers, edges })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn pad(&self) -> Token {
        self.bins as Token + 1
    }

    pub fn eos(&self) -> Token {
        self.bins as Token + 2
    }

    pub fn vocab_size(&self) -> usize {
        self.bins + 2
    }

    pub fn is_value_token(&self, t: Token) -> bool {
        t >= 1 && t as usize <= self.bins
    }

    /// Bin token of `v` after clamping into `[lo, hi]`. A value exactly on an
    /// edge goes to the upper bin.
    pub fn quantize(&self, v: f64) -> Token {
        let v = v.clamp(self.lo, self.hi);
        self.edges.partition_point(|e| *e <= v) as Token + 1
    }

    pub fn dequantize(&self, t: Token) -> Result<f64> {
        if self.is_value_token(t) {
            Ok(self.centers[t as usize - 1])
        } else {
            Err(Error::SpecialToken(t))
        }
    }

    /// Per-value tokens of an already scaled sequence.
    pub fn tokenize(&self, scaled: &[f64]) -> Vec<Token> {
        scaled.iter().map(|v| self.quantize(*v)).collect()
    }

    /// Tokens of a complete training sequence, terminated by `EOS`.
    pub fn training_sequence(&self, scaled: &[f64]) -> Vec<Token> {
        let mut t = self.tokenize(scaled);
        t.push(self.eos());
        t
    }

    /// Left-pads with `PAD` to `window` tokens, keeping the most recent
    /// tokens when the input is longer.
    pub fn pad_left(&self, tokens: &[Token], window: usize) -> Vec<Token> {
        if tokens.len() >= window {
            return tokens[tokens.len() - window..].to_vec();
        }
        let mut out = vec![self.pad(); window - tokens.len()];
        out.extend_from_slice(tokens);
        out
    }
}

/// Mean-scaled context: `x / s` with `s = mean(|x|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledContext {
    pub scale: f64,
    pub values: Vec<f64>,
}

impl ScaledContext {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn mean_scale(context: &[f64]) -> Result<ScaledContext> {
    if context.is_empty() {
        return Err(Error::Config("empty context".into()));
    }
    if context.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("context contains non-finite values".into()));
    }
    let s = context.iter().map(|v| v.abs()).sum::<f64>() / context.len() as f64;
    if !(s > 0.0) {
        return Err(Error::DegenerateScale("all-zero context".into()));
    }
    Ok(ScaledContext { scale: s, values: context.iter().map(|v| v / s).collect() })
}

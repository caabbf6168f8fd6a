use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::quantizer::Token;
use crate::error::{Error, Result};

/// How pseudo-counts are spread over the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// `(count + γ) / (total + γ|V|)` at the longest seen context, backing off
    /// to shorter contexts when unseen.
    #[default]
    Additive,
    /// Pseudo-counts `γ|V|` distributed by the next-shorter context's
    /// distribution instead of uniformly. Reduces to `Additive` at order 0.
    Hierarchical,
}

impl std::str::FromStr for Smoothing {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "additive" => Ok(Smoothing::Additive),
            "hierarchical" => Ok(Smoothing::Hierarchical),
            other => Err(format!("unknown smoothing {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Row {
    total: u64,
    counts: Vec<u64>,
}

/// Smoothed back-off k-gram model over token ids `1..=vocab`.
///
/// `tables[j]` holds counts for contexts of length `j`. Sequences are
/// left-padded with `pad` so every position has a full-length context.
#[derive(Debug, Clone)]
pub struct TokenPredictor {
    order: usize,
    gamma: f64,
    vocab: usize,
    pad: Token,
    smoothing: Smoothing,
    tables: Vec<HashMap<Vec<Token>, Row>>,
}

impl TokenPredictor {
    /// Untrained predictor; every conditional is uniform.
    pub fn new(vocab: usize, pad: Token, order: usize, gamma: f64, smoothing: Smoothing) -> Result<Self> {
        if order < 1 {
            return Err(Error::Config("order must be at least 1".into()));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("smoothing constant must be positive, got {gamma}")));
        }
        if vocab < 2 || pad == 0 || pad as usize > vocab {
            return Err(Error::Config(format!("invalid vocabulary size {vocab} / pad {pad}")));
        }
        Ok(TokenPredictor { order, gamma, vocab, pad, smoothing, tables: vec![HashMap::new(); order + 1] })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Number of training tokens seen.
    pub fn n_observed(&self) -> u64 {
        self.tables[0].get(&[][..]).map_or(0, |r| r.total)
    }

    pub fn add_sequence(&mut self, tokens: &[Token]) -> Result<()> {
        if let Some(bad) = tokens.iter().find(|t| **t == 0 || **t as usize > self.vocab) {
            return Err(Error::Config(format!("token {bad} outside vocabulary 1..={}", self.vocab)));
        }
        let k = self.order;
        let mut padded = vec![self.pad; k];
        padded.extend_from_slice(tokens);
        for i in k..padded.len() {
            let next = padded[i] as usize - 1;
            for (j, table) in self.tables.iter_mut().enumerate() {
                let row = table
                    .entry(padded[i - j..i].to_vec())
                    .or_insert_with(|| Row { total: 0, counts: vec![0; self.vocab] });
                row.total += 1;
                row.counts[next] += 1;
            }
        }
        Ok(())
    }

    /// Trains on every sequence of `corpus`.
    pub fn train(
        corpus: &[Vec<Token>],
        vocab: usize,
        pad: Token,
        order: usize,
        gamma: f64,
        smoothing: Smoothing,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Config("empty training corpus".into()));
        }
        let mut p = TokenPredictor::new(vocab, pad, order, gamma, smoothing)?;
        for seq in corpus {
            p.add_sequence(seq)?;
        }
        Ok(p)
    }

    /// Conditional distribution of the next token given `history`; entry `i`
    /// is the probability of token `i + 1`.
    pub fn distribution(&self, history: &[Token]) -> Vec<f64> {
        let k = self.order;
        let mut ctx = vec![self.pad; k.saturating_sub(history.len())];
        ctx.extend_from_slice(&history[history.len().saturating_sub(k)..]);
        let v = self.vocab as f64;
        let g = self.gamma;
        let mut probs = vec![1.0 / v; self.vocab];
        match self.smoothing {
            Smoothing::Additive => {
                for j in (0..=k).rev() {
                    if let Some(row) = self.tables[j].get(&ctx[k - j..]) {
                        let denom = row.total as f64 + g * v;
                        for (p, c) in probs.iter_mut().zip(&row.counts) {
                            *p = (*c as f64 + g) / denom;
                        }
                        break;
                    }
                }
            }
            Smoothing::Hierarchical => {
                for j in 0..=k {
                    let Some(row) = self.tables[j].get(&ctx[k - j..]) else { break };
                    let denom = row.total as f64 + g * v;
                    for (p, c) in probs.iter_mut().zip(&row.counts) {
                        *p = (*c as f64 + g * v * *p) / denom;
                    }
                }
            }
        }
        probs
    }

    pub fn prob(&self, history: &[Token], next: Token) -> f64 {
        self.distribution(history)[next as usize - 1]
    }
}

/// Summed negative log-likelihood of every token after the first `context_len`
/// (the forecast tokens and the closing `EOS`), each conditioned on all
/// tokens before it.
pub fn cross_entropy(predictor: &TokenPredictor, tokens: &[Token], context_len: usize) -> Result<f64> {
    if tokens.len() < context_len + 2 {
        return Err(Error::Config(format!(
            "need at least context_len + 2 = {} tokens, got {}",
            context_len + 2,
            tokens.len()
        )));
    }
    let mut loss = 0.0;
    for i in context_len..tokens.len() {
        let t = tokens[i];
        if t == 0 || t as usize > predictor.vocab_size() {
            return Err(Error::Config(format!("token {t} outside vocabulary")));
        }
        loss -= predictor.prob(&tokens[..i], t).ln();
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn argmax(p: &[f64]) -> usize {
        (0..p.len()).max_by(|a, b| p[*a].partial_cmp(&p[*b]).unwrap()).unwrap() + 1
    }

    #[test]
    fn untrained_is_uniform() {
        let p = TokenPredictor::new(66, 65, 3, 0.5, Smoothing::Additive).unwrap();
        let tokens: Vec<Token> = vec![10, 11, 12, 13, 14, 66];
        let ce = cross_entropy(&p, &tokens, 2).unwrap();
        assert!((ce - 4.0 * 66f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_corpus_concentrates() {
        let g = 0.5;
        for smoothing in [Smoothing::Additive, Smoothing::Hierarchical] {
            let p = TokenPredictor::train(&[vec![2; 20]], 4, 3, 2, g, smoothing).unwrap();
            for hist in [vec![], vec![2], vec![2, 2, 2]] {
                assert!(p.prob(&hist, 2) >= (1.0 + g) / (1.0 + g * 4.0));
            }
        }
    }

    #[test]
    fn alternation_is_learned() {
        let seq: Vec<Token> = (0..40).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
        let p = TokenPredictor::train(&[seq], 4, 3, 1, 0.5, Smoothing::Additive).unwrap();
        assert_eq!(argmax(&p.distribution(&[1])), 2);
        assert_eq!(argmax(&p.distribution(&[2])), 1);
    }

    #[test]
    fn large_gamma_is_nearly_uniform() {
        let p = TokenPredictor::train(&[vec![1, 2, 1, 2, 4]], 4, 3, 2, 1e9, Smoothing::Additive).unwrap();
        for q in p.distribution(&[1, 2]) {
            assert!((q - 0.25).abs() < 1e-6);
        }
    }

    #[test]
    fn hand_computed_cross_entropy() {
        // vocab 4 (B = 2, PAD = 3, EOS = 4), order 1, one sequence 1 2 1 4
        let g = 1.0;
        let p = TokenPredictor::train(&[vec![1, 2, 1, 4]], 4, 3, 1, g, Smoothing::Additive).unwrap();
        // contexts: [3] -> 1, [1] -> 2, [2] -> 1, [1] -> 4
        // score tokens 2, 1, 4 of the sequence 1 2 1 4 with C = 1
        let p_2_given_1 = (1.0 + g) / (2.0 + 4.0 * g);
        let p_1_given_2 = (1.0 + g) / (1.0 + 4.0 * g);
        let p_4_given_1 = (1.0 + g) / (2.0 + 4.0 * g);
        let want = -(p_2_given_1.ln() + p_1_given_2.ln() + p_4_given_1.ln());
        let got = cross_entropy(&p, &[1, 2, 1, 4], 1).unwrap();
        assert!((got - want).abs() < 1e-12);
        // unseen context [4] backs off to unigram counts {1: 2, 2: 1, 4: 1}
        let u = p.distribution(&[4]);
        assert!((u[0] - 3.0 / 8.0).abs() < 1e-15);
        assert!((u[2] - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn short_sequences_are_rejected() {
        let p = TokenPredictor::new(4, 3, 1, 1.0, Smoothing::Additive).unwrap();
        assert!(cross_entropy(&p, &[1, 2], 1).is_err());
        assert!(TokenPredictor::new(4, 3, 0, 1.0, Smoothing::Additive).is_err());
        assert!(TokenPredictor::new(4, 3, 1, 0.0, Smoothing::Additive).is_err());
        assert!(TokenPredictor::train(&[], 4, 3, 1, 1.0, Smoothing::Additive).is_err());
    }

    #[test]
    fn concentration_lowers_loss() {
        let seq: Vec<Token> = vec![1, 2, 2, 1, 2, 4];
        let mut last = f64::INFINITY;
        for reps in [0, 1, 4, 16] {
            let mut p = TokenPredictor::new(4, 3, 2, 0.5, Smoothing::Additive).unwrap();
            for _ in 0..reps {
                p.add_sequence(&seq).unwrap();
            }
            let ce = cross_entropy(&p, &seq, 2).unwrap();
            assert!(ce <= last);
            last = ce;
        }
    }

    proptest! {
        #[test]
        fn conditionals_are_distributions(
            corpus in prop::collection::vec(prop::collection::vec(1u32..=6, 0..30), 1..5),
            hist in prop::collection::vec(1u32..=6, 0..5),
            gamma in 0.01f64..5.0,
            hier in any::<bool>(),
        ) {
            let smoothing = if hier { Smoothing::Hierarchical } else { Smoothing::Additive };
            let p = TokenPredictor::train(&corpus, 6, 5, 3, gamma, smoothing).unwrap();
            let d = p.distribution(&hist);
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(d.iter().all(|v| *v > 0.0));
        }
    }
}

//! Synthetic autoregressive logit models and a temperature sampler.
//!
//! A model of order `k` assigns every context (its last `k` tokens) a row of
//! `vocab` logits drawn from `N(0, logit_scale^2)`. Rows are never stored:
//! they are regenerated on demand from the seed and the context key using
//! the scheme in [`crate::rng`], so any order fits in constant memory.
//! Logits are rounded to `f32` so they survive the on-disk dump format
//! unchanged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{softmax_beta, InputError, LogitSequence, Temperature, TokenSequence};
use crate::rng::{self, CounterRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("vocabulary must have at least 2 tokens, got {0}")]
    VocabTooSmall(usize),
    #[error("vocabulary of {0} tokens does not fit 32-bit token ids")]
    VocabTooLarge(usize),
    #[error("logit scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("token id {token} is outside the model vocabulary of {vocab}")]
    TokenOutOfRange { token: u32, vocab: usize },
    #[error("text vocabulary {text} does not match model vocabulary {model}")]
    VocabMismatch { text: usize, model: usize },
    #[error("text needs at least 2 tokens to be scored, got {0}")]
    TooShort(usize),
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid generation config: {0}")]
    InvalidGeneration(String),
    #[error(transparent)]
    Input(#[from] InputError),
}

pub(crate) fn default_vocab() -> usize {
    128
}

pub(crate) fn default_order() -> usize {
    1
}

pub(crate) fn default_scale() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticModelSpec {
    #[serde(default = "default_vocab")]
    pub vocab: usize,
    /// Context length `k`; 0 makes every step share one logit row.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Standard deviation of the logit table entries.
    #[serde(default = "default_scale")]
    pub logit_scale: f64,
    pub seed: u64,
}

impl SyntheticModelSpec {
    /// Default vocabulary, order and scale with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        Self { vocab: default_vocab(), order: default_order(), logit_scale: default_scale(), seed }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.vocab < 2 {
            return Err(ModelError::VocabTooSmall(self.vocab));
        }
        if self.vocab > u32::MAX as usize {
            return Err(ModelError::VocabTooLarge(self.vocab));
        }
        if !(self.logit_scale > 0.0 && self.logit_scale.is_finite()) {
            return Err(ModelError::InvalidScale(self.logit_scale));
        }
        Ok(())
    }

    pub fn default_id(&self) -> String {
        format!("v{}-k{}-s{}-seed{}", self.vocab, self.order, self.logit_scale, self.seed)
    }
}

/// An immutable, shareable synthetic model.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    spec: SyntheticModelSpec,
    id: String,
    key: u64,
}

impl SyntheticModel {
    pub fn build(spec: SyntheticModelSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        let key = rng::derive(rng::derive(spec.seed, rng::domain::MODEL), spec.order as u64);
        Ok(Self { id: spec.default_id(), spec, key })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn spec(&self) -> &SyntheticModelSpec {
        &self.spec
    }

    pub fn vocab(&self) -> usize {
        self.spec.vocab
    }

    /// Logit row for the next token after `context`.
    pub fn logits_for_context(&self, context: &[u32]) -> Result<Vec<f64>, ModelError> {
        if let Some(&token) = context.iter().find(|&&t| t as usize >= self.spec.vocab) {
            return Err(ModelError::TokenOutOfRange { token, vocab: self.spec.vocab });
        }
        let mut row = vec![0.0; self.spec.vocab];
        self.fill_logits(context, &mut row);
        Ok(row)
    }

    /// Context hashing: the last `order` tokens, oldest first, left-padded
    /// with the reserved start symbol `vocab`.
    fn context_key(&self, context: &[u32]) -> u64 {
        let order = self.spec.order;
        let start = self.spec.vocab as u64;
        let pad = order.saturating_sub(context.len());
        let tail = &context[context.len().saturating_sub(order)..];
        let padded = std::iter::repeat_n(start, pad).chain(tail.iter().map(|&t| t as u64));
        padded.fold(self.key, rng::derive)
    }

    fn fill_logits(&self, context: &[u32], out: &mut [f64]) {
        let key = self.context_key(context);
        for (l, slot) in out.iter_mut().enumerate() {
            *slot = (self.spec.logit_scale * rng::normal(key, l as u64)) as f32 as f64;
        }
    }
}

/// Inverse-CDF sampling with an explicit uniform draw `u` in `[0, 1)`.
pub fn sample_token_at(probs: &[f64], u: f64) -> Result<u32, ModelError> {
    validate_distribution(probs)?;
    if !(0.0..1.0).contains(&u) {
        return Err(ModelError::InvalidDistribution(format!("uniform draw {u} outside [0, 1)")));
    }
    Ok(inverse_cdf(probs, u))
}

/// Samples one token, consuming exactly one draw from `rng`.
pub fn sample_token(probs: &[f64], rng: &mut CounterRng) -> Result<u32, ModelError> {
    validate_distribution(probs)?;
    Ok(inverse_cdf(probs, rng.next_f64()))
}

fn validate_distribution(probs: &[f64]) -> Result<(), ModelError> {
    if probs.is_empty() {
        return Err(ModelError::InvalidDistribution("empty".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(ModelError::InvalidDistribution(format!("entry {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ModelError::InvalidDistribution(format!("sums to {total}")));
    }
    Ok(())
}

fn inverse_cdf(probs: &[f64], u: f64) -> u32 {
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i as u32;
        }
    }
    // Rounding left the total just under `u`.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub n_tokens: usize,
    pub seed: u64,
}

impl GenerationConfig {
    pub fn new(temperature: f64, seed: u64) -> Self {
        Self { temperature, n_tokens: 200, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedText {
    /// Start token followed by `n_tokens` sampled continuation tokens.
    pub tokens: TokenSequence,
    /// One row per continuation token; the start token has none.
    pub logits: LogitSequence,
    pub gen_temperature: f64,
    pub gen_seed: u64,
    pub model_id: String,
}

impl GeneratedText {
    /// The tokens aligned with `logits`.
    pub fn observed(&self) -> TokenSequence {
        self.tokens.continuation()
    }
}

/// Start token uniform over the vocabulary, then `n_tokens` draws from the
/// tempered model without any truncation.
pub fn generate_text(model: &SyntheticModel, config: &GenerationConfig) -> Result<GeneratedText, ModelError> {
    let temperature = Temperature::new(config.temperature).map_err(|e| ModelError::InvalidGeneration(e.to_string()))?;
    if config.n_tokens == 0 {
        return Err(ModelError::InvalidGeneration("n_tokens must be at least 1".into()));
    }
    let vocab = model.vocab();
    let beta = temperature.beta();
    let mut rng = CounterRng::new(rng::derive(config.seed, rng::domain::SAMPLING));

    let mut tokens = Vec::with_capacity(config.n_tokens + 1);
    tokens.push(((rng.next_f64() * vocab as f64) as usize).min(vocab - 1) as u32);
    let mut logits = Vec::with_capacity(config.n_tokens * vocab);
    let mut row = vec![0.0; vocab];
    for _ in 0..config.n_tokens {
        model.fill_logits(&tokens, &mut row);
        let probs = softmax_beta(&row, beta);
        tokens.push(sample_token(&probs, &mut rng)?);
        logits.extend_from_slice(&row);
    }

    Ok(GeneratedText {
        tokens: TokenSequence::new(vocab, tokens)?,
        logits: LogitSequence::from_flat(vocab, logits)?,
        gen_temperature: config.temperature,
        gen_seed: config.seed,
        model_id: model.id().to_owned(),
    })
}

/// The scoring model's logits for every token after the first; row `i`
/// predicts `tokens[i + 1]`.
pub fn score_text(model: &SyntheticModel, tokens: &TokenSequence) -> Result<LogitSequence, ModelError> {
    if tokens.vocab() != model.vocab() {
        return Err(ModelError::VocabMismatch { text: tokens.vocab(), model: model.vocab() });
    }
    if tokens.len() < 2 {
        return Err(ModelError::TooShort(tokens.len()));
    }
    let vocab = model.vocab();
    let ids = tokens.tokens();
    let mut data = vec![0.0; (ids.len() - 1) * vocab];
    for (i, row) in data.chunks_exact_mut(vocab).enumerate() {
        model.fill_logits(&ids[..=i], row);
    }
    Ok(LogitSequence::from_flat(vocab, data)?)
}

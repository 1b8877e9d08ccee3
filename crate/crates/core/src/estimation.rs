//! Tempered-softmax kernels: probabilities, expected logits, log-likelihood
//! and the likelihood-equation residual whose root is the temperature
//! estimate.
//!
//! Every routine subtracts the per-step maximum logit before exponentiating
//! and accumulates in `f64`. Internally the natural variable is the reverse
//! temperature `beta = 1 / T`; in `beta` the expected logit of a step is
//! nondecreasing, with derivative equal to the logit variance under the
//! tempered distribution.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("logit vector is empty")]
    EmptyLogits,
    #[error("logit sequence has no steps")]
    NoSteps,
    #[error("vocabulary size must be positive")]
    ZeroVocab,
    #[error("non-finite logit {value} at step {step}, index {index}")]
    NonFiniteLogit { step: usize, index: usize, value: f64 },
    #[error("step {step} has {len} logits, expected {vocab}")]
    RaggedStep { step: usize, len: usize, vocab: usize },
    #[error("token id {token} at position {position} is outside vocabulary of size {vocab}")]
    TokenOutOfRange { position: usize, token: u32, vocab: usize },
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("reverse temperature must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("{logit_steps} logit steps but {tokens} tokens")]
    LengthMismatch { logit_steps: usize, tokens: usize },
    #[error("logit vocabulary {logits} differs from token vocabulary {tokens}")]
    VocabMismatch { logits: usize, tokens: usize },
}

/// Softmax temperature. Always positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(value: f64) -> Result<Self, InputError> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(InputError::InvalidTemperature(value))
        }
    }

    pub fn from_beta(beta: f64) -> Result<Self, InputError> {
        check_beta(beta)?;
        Self::new(1.0 / beta)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn beta(self) -> f64 {
        1.0 / self.0
    }
}

/// Per-step logit vectors of a scored token sequence, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitSequence {
    vocab: usize,
    data: Vec<f64>,
}

impl LogitSequence {
    /// Builds a sequence from a flat row-major buffer of `vocab`-wide rows.
    pub fn from_flat(vocab: usize, data: Vec<f64>) -> Result<Self, InputError> {
        if vocab == 0 {
            return Err(InputError::ZeroVocab);
        }
        if data.is_empty() {
            return Err(InputError::NoSteps);
        }
        if !data.len().is_multiple_of(vocab) {
            return Err(InputError::RaggedStep { step: data.len() / vocab, len: data.len() % vocab, vocab });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(InputError::NonFiniteLogit { step: pos / vocab, index: pos % vocab, value: data[pos] });
        }
        Ok(Self { vocab, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, InputError> {
        let first = rows.first().ok_or(InputError::NoSteps)?;
        let vocab = first.as_ref().len();
        if vocab == 0 {
            return Err(InputError::EmptyLogits);
        }
        let mut data = Vec::with_capacity(vocab * rows.len());
        for (step, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != vocab {
                return Err(InputError::RaggedStep { step, len: row.len(), vocab });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(vocab, data)
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn n_steps(&self) -> usize {
        self.data.len() / self.vocab
    }

    pub fn step(&self, i: usize) -> &[f64] {
        &self.data[i * self.vocab..(i + 1) * self.vocab]
    }

    pub fn steps(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.vocab)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Applies `f` to every logit; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, InputError> {
        Self::from_flat(self.vocab, self.data.iter().map(|&v| f(v)).collect())
    }

    /// True when every step has all-equal logits.
    pub fn all_degenerate(&self) -> bool {
        self.steps().all(is_degenerate)
    }
}

/// Observed token ids together with the vocabulary they index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    vocab: usize,
    tokens: Vec<u32>,
}

impl TokenSequence {
    pub fn new(vocab: usize, tokens: Vec<u32>) -> Result<Self, InputError> {
        if vocab == 0 {
            return Err(InputError::ZeroVocab);
        }
        if let Some(position) = tokens.iter().position(|&t| t as usize >= vocab) {
            return Err(InputError::TokenOutOfRange { position, token: tokens[position], vocab });
        }
        Ok(Self { vocab, tokens })
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The sequence without its first token, i.e. the tokens that have a
    /// preceding context to be predicted from.
    pub fn continuation(&self) -> TokenSequence {
        TokenSequence { vocab: self.vocab, tokens: self.tokens.get(1..).unwrap_or_default().to_vec() }
    }
}

/// Checks that `logits` and `tokens` describe the same steps.
pub fn check_aligned(logits: &LogitSequence, tokens: &TokenSequence) -> Result<(), InputError> {
    if logits.vocab() != tokens.vocab() {
        return Err(InputError::VocabMismatch { logits: logits.vocab(), tokens: tokens.vocab() });
    }
    if logits.n_steps() != tokens.len() {
        return Err(InputError::LengthMismatch { logit_steps: logits.n_steps(), tokens: tokens.len() });
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<(), InputError> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(InputError::InvalidBeta(beta))
    }
}

fn check_row(logits: &[f64]) -> Result<(), InputError> {
    if logits.is_empty() {
        return Err(InputError::EmptyLogits);
    }
    if let Some(index) = logits.iter().position(|v| !v.is_finite()) {
        return Err(InputError::NonFiniteLogit { step: 0, index, value: logits[index] });
    }
    Ok(())
}

fn max_of(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn is_degenerate(row: &[f64]) -> bool {
    row.iter().all(|&v| v == row[0])
}

/// `p_l = exp(u_l / T) / sum_k exp(u_k / T)`.
pub fn tempered_softmax(logits: &[f64], temperature: Temperature) -> Result<Vec<f64>, InputError> {
    check_row(logits)?;
    Ok(softmax_beta(logits, temperature.beta()))
}

pub(crate) fn softmax_beta(row: &[f64], beta: f64) -> Vec<f64> {
    let max = max_of(row);
    let mut p: Vec<f64> = row.iter().map(|&u| (beta * (u - max)).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

/// Mean logit under the tempered distribution.
pub fn expected_logit(logits: &[f64], temperature: Temperature) -> Result<f64, InputError> {
    check_row(logits)?;
    Ok(moments_beta(logits, temperature.beta()).0)
}

/// Variance of the logit under the tempered distribution; this is the
/// derivative of the expected logit with respect to `beta`.
pub fn step_variance(logits: &[f64], temperature: Temperature) -> Result<f64, InputError> {
    check_row(logits)?;
    Ok(moments_beta(logits, temperature.beta()).1)
}

/// Mean and variance of the logit at reverse temperature `beta`, both
/// computed relative to the row maximum.
pub(crate) fn moments_beta(row: &[f64], beta: f64) -> (f64, f64) {
    let max = max_of(row);
    let mut z = 0.0;
    let mut s1 = 0.0;
    for &u in row {
        let d = u - max;
        let w = (beta * d).exp();
        z += w;
        s1 += w * d;
    }
    let mean_d = s1 / z;
    let mut s2 = 0.0;
    for &u in row {
        let d = u - max;
        let w = (beta * d).exp();
        let c = d - mean_d;
        s2 += w * c * c;
    }
    (max + mean_d, (s2 / z).max(0.0))
}

/// `E[u] - u_obs` for one step, computed from logit differences so that the
/// observed token's own contribution cancels exactly.
pub(crate) fn step_residual(row: &[f64], observed: usize, beta: f64) -> f64 {
    let max = max_of(row);
    let obs = row[observed];
    let mut z = 0.0;
    let mut s = 0.0;
    for &u in row {
        let w = (beta * (u - max)).exp();
        z += w;
        s += w * (u - obs);
    }
    s / z
}

pub(crate) fn step_log_prob(row: &[f64], observed: usize, beta: f64) -> f64 {
    let max = max_of(row);
    let z: f64 = row.iter().map(|&u| (beta * (u - max)).exp()).sum();
    beta * (row[observed] - max) - z.ln()
}

pub(crate) fn residual_unchecked(logits: &LogitSequence, tokens: &TokenSequence, beta: f64) -> f64 {
    logits.steps().zip(tokens.tokens()).map(|(row, &t)| step_residual(row, t as usize, beta)).sum()
}

pub(crate) fn log_likelihood_unchecked(logits: &LogitSequence, tokens: &TokenSequence, beta: f64) -> f64 {
    logits.steps().zip(tokens.tokens()).map(|(row, &t)| step_log_prob(row, t as usize, beta)).sum()
}

/// Total log-probability of `tokens` under the tempered model.
pub fn log_likelihood(
    logits: &LogitSequence,
    tokens: &TokenSequence,
    temperature: Temperature,
) -> Result<f64, InputError> {
    check_aligned(logits, tokens)?;
    Ok(log_likelihood_unchecked(logits, tokens, temperature.beta()))
}

/// `R(beta) = sum_i E[u_i | 1/beta] - sum_i u_obs_i`.
///
/// Nondecreasing in `beta`; the maximum-likelihood temperature is `1 / beta`
/// at its root.
pub fn residual(logits: &LogitSequence, tokens: &TokenSequence, beta: f64) -> Result<f64, InputError> {
    check_aligned(logits, tokens)?;
    check_beta(beta)?;
    Ok(residual_unchecked(logits, tokens, beta))
}

#![allow(dead_code)]

use texttemp::estimation::{residual, LogitSequence, TokenSequence};
use texttemp::rng::{self, CounterRng};
use texttemp::tempered_softmax;
use texttemp::Temperature;

/// A random scoring problem: Gaussian logits of a random scale with tokens
/// sampled at a random temperature, so most instances have an interior root.
pub fn random_instance(seed: u64, max_vocab: usize, max_steps: usize) -> (LogitSequence, TokenSequence) {
    let mut rng = CounterRng::new(rng::mix64(seed));
    let vocab = 2 + (rng.next_u64() % (max_vocab as u64 - 1)) as usize;
    let steps = 1 + (rng.next_u64() % max_steps as u64) as usize;
    let scale = 0.5 + 4.0 * rng.next_f64();
    let temperature = Temperature::new(0.3 + 2.7 * rng.next_f64()).unwrap();
    let key = rng.next_u64();
    let mut rows = Vec::with_capacity(steps);
    let mut tokens = Vec::with_capacity(steps);
    for i in 0..steps {
        let row: Vec<f64> = (0..vocab).map(|l| scale * rng::normal(key, (i * vocab + l) as u64)).collect();
        let probs = tempered_softmax(&row, temperature).unwrap();
        tokens.push(texttemp::sample_token(&probs, &mut rng).unwrap());
        rows.push(row);
    }
    (LogitSequence::from_rows(&rows).unwrap(), TokenSequence::new(vocab, tokens).unwrap())
}

/// Plain 200-step bisection on the residual over the default bracket,
/// clamping to the edge the residual never crosses.
pub fn bisection_oracle(logits: &LogitSequence, tokens: &TokenSequence) -> f64 {
    let (mut lo, mut hi) = (1e-2, 1e4);
    let r = |b: f64| residual(logits, tokens, b).unwrap();
    if r(lo) >= 0.0 {
        return lo;
    }
    if r(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if r(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

//! Categorical action head over logits.

use rand::Rng;

/// `z - max(z) - ln Σ exp(z - max(z))`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let log_norm = max + sum.ln();
    logits.iter().map(|z| z - log_norm).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Log-probability of `action` and the entropy of the distribution.
pub fn log_prob_entropy(logits: &[f64], action: usize) -> (f64, f64) {
    let ls = log_softmax(logits);
    let entropy = -ls.iter().map(|l| l.exp() * l).sum::<f64>();
    (ls[action], entropy)
}

/// Inverse-CDF draw from the softmax distribution.
pub fn sample_action<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> (usize, f64) {
    let ls = log_softmax(logits);
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut chosen = None;
    for (i, l) in ls.iter().enumerate() {
        cum += l.exp();
        if u < cum {
            chosen = Some(i);
            break;
        }
    }
    // Rounding can leave cum slightly below 1; fall back to the last
    // action with nonzero mass.
    let a = chosen.unwrap_or_else(|| {
        ls.iter()
            .rposition(|l| l.exp() > 0.0)
            .expect("some action has mass")
    });
    (a, ls[a])
}

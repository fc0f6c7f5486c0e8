//! Categorical distribution over logits.

/// Log-softmax with max subtraction.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let (argmax, max) = logits
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, z)| if z > acc.1 { (i, z) } else { acc });
    // The max term contributes exactly 1; ln_1p keeps precision when the rest is tiny.
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != argmax)
        .map(|(_, z)| (z - max).exp())
        .sum();
    let tail = rest.ln_1p();
    logits.iter().map(|z| (z - max) - tail).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// `(log pi(action), entropy)` for the distribution given by `logits`.
pub fn log_prob_and_entropy(logits: &[f64], action: usize) -> (f64, f64) {
    let logp = log_softmax(logits);
    let entropy = -logp.iter().map(|&lp| lp.exp() * lp).sum::<f64>();
    (logp[action], entropy)
}

/// `d log pi(action) / d logits = onehot(action) - p`.
pub fn log_prob_grad(logits: &[f64], action: usize) -> Vec<f64> {
    softmax(logits)
        .into_iter()
        .enumerate()
        .map(|(j, p)| f64::from(u8::from(j == action)) - p)
        .collect()
}

/// `d H / d logits_j = -p_j (log p_j + H)`.
pub fn entropy_grad(logits: &[f64]) -> Vec<f64> {
    let logp = log_softmax(logits);
    let h = -logp.iter().map(|&lp| lp.exp() * lp).sum::<f64>();
    logp.iter().map(|&lp| -lp.exp() * (lp + h)).collect()
}

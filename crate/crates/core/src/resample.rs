use rand::Rng;

/// Systematic (low-variance) resampling: one uniform offset, `n` evenly spaced
/// pointers into the cumulative weights. Descendant counts differ from
/// `n * w_i / sum(w)` by less than one. Weights need not be normalised but
/// must have a positive finite sum.
pub fn systematic<R: Rng>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0 && total.is_finite(), "weights must have a positive sum");
    let step = total / n as f64;
    let mut u = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut acc = weights[0];
    let mut i = 0;
    for _ in 0..n {
        while u > acc && i + 1 < weights.len() {
            i += 1;
            acc += weights[i];
        }
        out.push(i);
        u += step;
    }
    out
}

/// Normalised softmin weights `exp(-beta (c - min c))`. Returns `None` when
/// they degenerate (non-finite costs or temperature).
pub fn softmin(costs: &[f64], beta: f64) -> Option<Vec<f64>> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() || !beta.is_finite() {
        return None;
    }
    let w: Vec<f64> = costs.iter().map(|c| (-beta * (c - min)).exp()).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    Some(w.into_iter().map(|x| x / total).collect())
}

//! Chebyshev series on [-1, 1].

/// Σ cₖ Tₖ(x) by Clenshaw's recurrence.
pub fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    match c.first() {
        Some(&c0) => x * b1 - b2 + c0,
        None => 0.0,
    }
}

/// Coefficients of the derivative series d/dx Σ cₖ Tₖ.
pub fn derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (0..n - 1).rev() {
        d[k] = d[k + 2] + 2.0 * (k + 1) as f64 * c[k + 1];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// T₀(x) … Tₙ(x).
pub fn basis(n: usize, x: f64) -> Vec<f64> {
    let mut t = vec![1.0; n + 1];
    if n >= 1 {
        t[1] = x;
    }
    for k in 2..=n {
        t[k] = 2.0 * x * t[k - 1] - t[k - 2];
    }
    t
}

/// Affine map of `xi` in `[lo, hi]` onto [-1, 1].
pub fn normalize(xi: f64, (lo, hi): (f64, f64)) -> f64 {
    (2.0 * (xi - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
}

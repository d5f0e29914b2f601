//! Central finite differences, used to validate analytic gradients.
//!
//! Only forward evaluation is involved, so these helpers are independent
//! of the backward rules they are meant to check.

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_difference<F>(x: &[f64], h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest violation of `|a - n| <= max(rel * max(|a|, |n|), abs)`,
/// reported as the ratio of the error to its allowance (`<= 1` passes).
pub fn worst_violation(analytic: &[f64], numeric: &[f64], rel: f64, abs: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let allowance = (rel * a.abs().max(n.abs())).max(abs);
            (a - n).abs() / allowance
        })
        .fold(0.0, f64::max)
}

pub fn gradients_agree(analytic: &[f64], numeric: &[f64], rel: f64, abs: f64) -> bool {
    worst_violation(analytic, numeric, rel, abs) <= 1.0
}

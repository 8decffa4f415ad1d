use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Composite Simpson approximation of `∫₀¹ f(t) e^{2ijπt} dt`, `j = 1…J`.
///
/// `sampled_values` holds `f(k/M)` for `k = 0…M`, so its length is `M + 1`
/// with `M` even and `M ≥ 4J`. For smooth integrands the error is
/// `O(M⁻⁴)` (with a constant growing like `j⁴`); a jump in `f` degrades it
/// to `O(M⁻¹)`.
pub fn quadrature_fourier_coeffs(sampled_values: &[f64], count: usize) -> Result<Vec<Complex64>> {
    if sampled_values.len() < 2 {
        return Err(Error::invalid("need at least one quadrature interval"));
    }
    let intervals = sampled_values.len() - 1;
    if !intervals.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "Simpson's rule needs an even number of intervals, got {intervals}"
        )));
    }
    if count == 0 || intervals < 4 * count {
        return Err(Error::invalid(format!(
            "grid of {intervals} intervals is too coarse for {count} coefficients (need ≥ {})",
            4 * count.max(1)
        )));
    }
    Ok((1..=count)
        .map(|j| simpson_sum(sampled_values, j, intervals))
        .collect())
}

fn simpson_sum(values: &[f64], j: usize, intervals: usize) -> Complex64 {
    let mut acc = Complex64::default();
    for (k, &v) in values.iter().enumerate() {
        let w = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        // Reduce j·k modulo M before forming the angle to keep the phase exact.
        let m = ((j as u128 * k as u128) % intervals as u128) as f64;
        acc += Complex64::from_polar(w * v, TAU * m / intervals as f64);
    }
    acc / (3.0 * intervals as f64)
}

/// Simpson approximation of `∫₀¹ f(t) e^{2ijπt} dt` on `intervals` panels.
pub fn simpson_fourier_coeff<F: Fn(f64) -> f64>(f: F, j: usize, intervals: usize) -> Complex64 {
    let intervals = intervals + intervals % 2;
    let values: Vec<f64> = (0..=intervals)
        .map(|k| f(k as f64 / intervals as f64))
        .collect();
    simpson_sum(&values, j, intervals)
}

//! Direct evaluation of `Δ` as a difference of penalized-likelihood minima.
//!
//! Kept deliberately separate from the FFT machinery: the penalized
//! negative log-likelihood is evaluated at its closed-form minimizers, and
//! the constrained minimum is searched over `τ` by direct summation on a
//! dense grid followed by golden-section refinement.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{check_pair, TestConfig};
use crate::error::{Error, Result};
use crate::spectral::SpectralObservation;

struct Penalized<'a> {
    y: &'a [Complex64],
    y_sharp: &'a [Complex64],
    s2: f64,
    s2_sharp: f64,
    /// `(index, ν_j, ω_j)` for every coordinate with `ν_j > 0`.
    coords: Vec<(usize, f64, f64)>,
}

impl Penalized<'_> {
    /// Negative penalized log-likelihood restricted to the kept
    /// coordinates; coordinates with `ν_j = 0` force `c_j = 0` in both
    /// minima and cancel from the difference.
    fn value(&self, c: &[Complex64], c_sharp: &[Complex64]) -> f64 {
        self.coords
            .iter()
            .zip(c.iter().zip(c_sharp))
            .map(|(&(i, _, omega), (ci, ei))| {
                (self.y[i] - ci).norm_sqr() / (2.0 * self.s2)
                    + (self.y_sharp[i] - ei).norm_sqr() / (2.0 * self.s2_sharp)
                    + omega * ci.norm_sqr() / (2.0 * self.s2)
                    + omega * ei.norm_sqr() / (2.0 * self.s2_sharp)
            })
            .sum()
    }

    /// Unconstrained minimum: `c_j = ν_j Y_j`, `c#_j = ν_j Y#_j`.
    fn free_minimum(&self) -> f64 {
        let c: Vec<_> = self.coords.iter().map(|&(i, v, _)| self.y[i] * v).collect();
        let e: Vec<_> = self.coords.iter().map(|&(i, v, _)| self.y_sharp[i] * v).collect();
        self.value(&c, &e)
    }

    /// Minimum under `c_j = e^{−ijτ} c#_j`, attained at
    /// `c_j = σ̄² ν_j Z_j` with `Z_j = Y_j/σ² + e^{−ijτ} Y#_j/σ#²`.
    fn constrained(&self, tau: f64) -> f64 {
        let bar = 1.0 / (1.0 / self.s2 + 1.0 / self.s2_sharp);
        let mut c = Vec::with_capacity(self.coords.len());
        let mut e = Vec::with_capacity(self.coords.len());
        for &(i, v, _) in &self.coords {
            let phase = Complex64::from_polar(1.0, -((i + 1) as f64) * tau);
            let z = self.y[i] / self.s2 + phase * self.y_sharp[i] / self.s2_sharp;
            let cj = z * (bar * v);
            c.push(cj);
            e.push(cj / phase);
        }
        self.value(&c, &e)
    }
}

/// `Δ` of a one-dimensional pair, computed from the definition as the
/// constrained minus the unconstrained penalized-likelihood minimum.
pub fn delta_via_definition(
    a: &SpectralObservation,
    b: &SpectralObservation,
    cfg: &TestConfig,
) -> Result<f64> {
    cfg.validate()?;
    if a.dims() != 1 || b.dims() != 1 {
        return Err(Error::DimensionMismatch(
            "delta_via_definition takes one-dimensional observations".into(),
        ));
    }
    check_pair(a, b, cfg.weights.support())?;
    let coords: Vec<_> = cfg
        .weights
        .nu()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (i, v, 1.0 / v - 1.0))
        .collect();
    let pl = Penalized {
        y: a.dim(0),
        y_sharp: b.dim(0),
        s2: a.sigma()[0].powi(2),
        s2_sharp: b.sigma()[0].powi(2),
        coords,
    };
    let free = pl.free_minimum();

    let grid = (64 * cfg.weights.support()).max(256);
    let h = TAU / grid as f64;
    let values: Vec<f64> = (0..grid).map(|k| pl.constrained(k as f64 * h)).collect();
    let mut minima: Vec<usize> = (0..grid)
        .filter(|&k| {
            values[k] <= values[(k + grid - 1) % grid] && values[k] <= values[(k + 1) % grid]
        })
        .collect();
    minima.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let constrained = minima
        .iter()
        .take(4)
        .map(|&k| {
            let centre = k as f64 * h;
            golden_min(|t| pl.constrained(t), centre - h, centre + h, 1e-13).min(values[k])
        })
        .fold(f64::INFINITY, f64::min);
    Ok((constrained - free).max(0.0))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift_test::statistic_delta;
    use crate::spectral::shift_coeffs;
    use crate::weights::WeightSequence;

    fn random_pair(n: usize, seed: u64) -> (SpectralObservation, SpectralObservation) {
        let mut rng = crate::rng::stream(seed, &[]);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Complex64> {
            (0..n).map(|_| crate::rng::complex_normal(rng)).collect()
        };
        let (ya, yb) = (draw(&mut rng), draw(&mut rng));
        (
            SpectralObservation::scalar(ya, 0.7).unwrap(),
            SpectralObservation::scalar(yb, 1.3).unwrap(),
        )
    }

    #[test]
    fn identical_is_zero() {
        let (a, _) = random_pair(8, 1);
        let cfg = TestConfig::new(WeightSequence::tikhonov(8, 0.5, 2.0).unwrap(), 0.05).unwrap();
        assert!(delta_via_definition(&a, &a, &cfg).unwrap() < 1e-12);
    }

    #[test]
    fn agrees_with_closed_form() {
        for seed in 0..10 {
            let (a, b) = random_pair(12, 40 + seed);
            for w in [
                WeightSequence::projection(12).unwrap(),
                WeightSequence::pinsker(12, 2.0).unwrap(),
                WeightSequence::tikhonov(12, 0.5, 2.0).unwrap(),
            ] {
                let cfg = TestConfig::new(w, 0.05).unwrap();
                let (d, _) = statistic_delta(&a, &b, &cfg).unwrap();
                let o = delta_via_definition(&a, &b, &cfg).unwrap();
                assert!((d - o).abs() < 1e-9, "seed {seed}: {d} vs {o}");
            }
        }
    }

    #[test]
    fn swap_with_conjugate_shift_is_symmetric() {
        // (Y, Y#, τ) → (Y#, Y, −τ) leaves the objective unchanged.
        let (a, b) = random_pair(10, 77);
        let b = SpectralObservation::scalar(shift_coeffs(b.dim(0), 0.9), 0.7).unwrap();
        let cfg = TestConfig::new(WeightSequence::pinsker(10, 2.0).unwrap(), 0.05).unwrap();
        let forward = delta_via_definition(&a, &b, &cfg).unwrap();
        let backward = delta_via_definition(&b, &a, &cfg).unwrap();
        assert!((forward - backward).abs() < 1e-9);
    }
}

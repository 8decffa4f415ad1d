//! Signals and noisy observations in the Fourier domain.
//!
//! Coefficients are indexed from `j = 1`; the constant term `c_0` never
//! enters the test and is not stored. Vectors hold `c_j` at position `j − 1`.
//! The Fourier convention follows `c_j = ∫₀¹ f(t) e^{+2ijπt} dt`.

mod io;
mod quadrature;
mod signals;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng;

pub use io::{format_observation, parse_observation, read_observation, write_observation};
pub use quadrature::{quadrature_fourier_coeffs, simpson_fourier_coeff};
pub use signals::{
    heavisine, heavisine_smoothed_coeffs, normalized_perturbation, perturbation_coeffs, SignalKind,
    SignalSpec,
};

/// Fourier coefficients `(c_1, …, c_J)` of a possibly vector-valued
/// 1-periodic function, one sequence per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignal {
    coeffs: Vec<Vec<Complex64>>,
}

impl SpectralSignal {
    pub fn new(coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("signal needs at least one dimension"));
        }
        let len = coeffs[0].len();
        if len == 0 {
            return Err(Error::invalid("signal needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| c.len() != len) {
            return Err(Error::DimensionMismatch(
                "all dimensions of a signal must have the same length".into(),
            ));
        }
        if coeffs.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("signal coefficients must be finite"));
        }
        Ok(Self { coeffs })
    }

    /// One-dimensional signal.
    pub fn scalar(coeffs: Vec<Complex64>) -> Result<Self> {
        Self::new(vec![coeffs])
    }

    /// Builds the signal and checks `Σ_j j^{2s} |c_j|² ≤ L²` in every dimension.
    pub fn with_sobolev_budget(coeffs: Vec<Vec<Complex64>>, s: f64, radius: f64) -> Result<Self> {
        let signal = Self::new(coeffs)?;
        for m in 0..signal.dims() {
            let norm = signal.sobolev_norm_sq(m, s);
            if norm > radius * radius {
                return Err(Error::invalid(format!(
                    "dimension {m} violates the Sobolev budget: {norm} > {}",
                    radius * radius
                )));
            }
        }
        Ok(signal)
    }

    pub fn dims(&self) -> usize {
        self.coeffs.len()
    }

    /// Number of stored coefficients `J`.
    pub fn len(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self, m: usize) -> &[Complex64] {
        &self.coeffs[m]
    }

    pub fn coeffs(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Vec<Complex64>> {
        self.coeffs
    }

    /// `Σ_j |c_j|²` over all dimensions.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ_j j^{2s} |c_j|²` for dimension `m`.
    pub fn sobolev_norm_sq(&self, m: usize, s: f64) -> f64 {
        self.coeffs[m]
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64).powf(2.0 * s) * c.norm_sqr())
            .sum()
    }

    /// Multiplies `c_j` by `e^{ij·tau_star}` in every dimension.
    pub fn apply_shift(&self, tau_star: f64) -> SpectralSignal {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|dim| shift_coeffs(dim, tau_star))
                .collect(),
        }
    }
}

/// `c_j ↦ e^{ij·tau} c_j`; phases are evaluated directly for each `j`.
pub fn shift_coeffs(coeffs: &[Complex64], tau: f64) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| c * Complex64::from_polar(1.0, (i + 1) as f64 * tau))
        .collect()
}

/// Noisy coefficients `Y_j = c_j + σ ε_j`, one sequence and one `σ` per
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralObservation {
    coeffs: Vec<Vec<Complex64>>,
    sigma: Vec<f64>,
}

impl SpectralObservation {
    pub fn new(coeffs: Vec<Vec<Complex64>>, sigma: Vec<f64>) -> Result<Self> {
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("noise levels must be positive and finite"));
        }
        Self::with_any_sigma(coeffs, sigma)
    }

    /// One-dimensional observation.
    pub fn scalar(coeffs: Vec<Complex64>, sigma: f64) -> Result<Self> {
        Self::new(vec![coeffs], vec![sigma])
    }

    fn with_any_sigma(coeffs: Vec<Vec<Complex64>>, sigma: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() != sigma.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient sequences for {} noise levels",
                coeffs.len(),
                sigma.len()
            )));
        }
        let len = coeffs[0].len();
        if len == 0 {
            return Err(Error::invalid("observation needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| c.len() != len) {
            return Err(Error::DimensionMismatch(
                "all dimensions of an observation must have the same length".into(),
            ));
        }
        if coeffs.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("observed coefficients must be finite"));
        }
        Ok(Self { coeffs, sigma })
    }

    pub fn dims(&self) -> usize {
        self.coeffs.len()
    }

    /// Number of observed coefficients `p`.
    pub fn len(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self, m: usize) -> &[Complex64] {
        &self.coeffs[m]
    }

    pub fn coeffs(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Same data with every coordinate of dimension `m` and `σ_m` scaled by
    /// `factors[m]`.
    pub fn rescaled(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.dims() {
            return Err(Error::DimensionMismatch("one factor per dimension".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(factors)
            .map(|(dim, &f)| dim.iter().map(|c| c * f).collect())
            .collect();
        let sigma = self.sigma.iter().zip(factors).map(|(s, f)| s * f.abs()).collect();
        Self::new(coeffs, sigma)
    }
}

/// Draws `Y_j = c_j + σ_m ξ_j` for `j = 1…p` with `ξ_j ~ N_C(0, 1)`.
///
/// Coefficients beyond the signal length count as zero. `σ = 0` is accepted
/// here (and only here) so that noiseless observations can be produced for
/// testing; such observations cannot be fed to the known-noise statistics.
pub fn synthesize_observation(
    signal: &SpectralSignal,
    sigma: &[f64],
    p: usize,
    seed: u64,
) -> Result<SpectralObservation> {
    if p == 0 {
        return Err(Error::invalid("p must be at least 1"));
    }
    if sigma.len() != signal.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{} noise levels for a {}-dimensional signal",
            sigma.len(),
            signal.dims()
        )));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::invalid("noise levels must be non-negative and finite"));
    }
    let mut rng = rng::stream(seed, &[]);
    let coeffs = signal
        .coeffs
        .iter()
        .zip(sigma)
        .map(|(dim, &s)| {
            (0..p)
                .map(|i| {
                    let c = dim.get(i).copied().unwrap_or_default();
                    c + rng::complex_normal(&mut rng) * s
                })
                .collect()
        })
        .collect();
    SpectralObservation::with_any_sigma(coeffs, sigma.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shift_by_pi() {
        let s = SpectralSignal::scalar(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let shifted = s.apply_shift(PI);
        assert!((shifted.dim(0)[0] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((shifted.dim(0)[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.apply_shift(0.0), s);
    }

    #[test]
    fn shift_group_property() {
        let s = SpectralSignal::scalar((1..=50).map(|j| c(1.0 / j as f64, 0.3)).collect()).unwrap();
        let back = s.apply_shift(1.234).apply_shift(2.0 * PI - 1.234);
        for (a, b) in back.dim(0).iter().zip(s.dim(0)) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((s.apply_shift(0.7).norm_sq() - s.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn sobolev_budget_enforced() {
        let coeffs = vec![vec![c(1.0, 0.0), c(0.5, 0.0)]];
        assert!(SpectralSignal::with_sobolev_budget(coeffs.clone(), 1.0, 1.5).is_ok());
        assert!(SpectralSignal::with_sobolev_budget(coeffs, 1.0, 1.2).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SpectralSignal::new(vec![]).is_err());
        assert!(SpectralSignal::scalar(vec![]).is_err());
        assert!(SpectralSignal::scalar(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(SpectralObservation::scalar(vec![c(1.0, 0.0)], 0.0).is_err());
        assert!(SpectralObservation::scalar(vec![c(1.0, 0.0)], -1.0).is_err());
        assert!(SpectralObservation::new(vec![vec![c(1.0, 0.0)]], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_noise_reproduces_signal_and_pads() {
        let s = SpectralSignal::scalar(vec![c(1.0, 2.0), c(3.0, 4.0)]).unwrap();
        let obs = synthesize_observation(&s, &[0.0], 4, 1).unwrap();
        assert_eq!(obs.dim(0), &[c(1.0, 2.0), c(3.0, 4.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn seeded_and_noise_variance() {
        let s = SpectralSignal::scalar(vec![Complex64::default(); 1]).unwrap();
        let a = synthesize_observation(&s, &[0.7], 100_000, 42).unwrap();
        let b = synthesize_observation(&s, &[0.7], 100_000, 42).unwrap();
        assert_eq!(a, b);
        let var_re = a.dim(0).iter().map(|y| y.re * y.re).sum::<f64>() / 1e5;
        let var_im = a.dim(0).iter().map(|y| y.im * y.im).sum::<f64>() / 1e5;
        assert!((var_re / 0.49 - 1.0).abs() < 0.03, "{var_re}");
        assert!((var_im / 0.49 - 1.0).abs() < 0.03, "{var_im}");
        let other = synthesize_observation(&s, &[0.7], 10, 43).unwrap();
        assert_ne!(other.dim(0), &a.dim(0)[..10]);
    }
}

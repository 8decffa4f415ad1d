//! Benchmark signals: the smoothed HeaviSine template and the
//! perturbations used to build alternatives `f# = f + γϕ`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::quadrature::simpson_fourier_coeff;
use super::SpectralSignal;
use crate::error::{Error, Result};

/// Donoho–Johnstone HeaviSine: `4 sin(4πt) − sign(t − 0.3) − sign(0.72 − t)`.
pub fn heavisine(t: f64) -> f64 {
    4.0 * (4.0 * PI * t).sin() - sign(t - 0.3) - sign(0.72 - t)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Exact `∫₀¹ h(t) e^{2ijπt} dt` for the HeaviSine `h`.
///
/// The jump part equals `−2·1{0.3 < t < 0.72}`, whose coefficient is
/// `i (e^{2ijπ·0.72} − e^{2ijπ·0.3}) / (jπ)`; the sinusoid only feeds `j = 2`.
fn heavisine_coeff(j: usize) -> Complex64 {
    let jf = j as f64;
    let jump = (cis(TAU * frac(jf * 0.72)) - cis(TAU * frac(jf * 0.3))) * Complex64::new(0.0, 1.0 / (jf * PI));
    if j == 2 {
        jump + Complex64::new(0.0, 2.0)
    } else {
        jump
    }
}

fn cis(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Coefficients `c_j = h_j / j`, `j = 1…J`, of the smoothed HeaviSine.
pub fn heavisine_smoothed_coeffs(count: usize) -> Result<SpectralSignal> {
    if count == 0 {
        return Err(Error::invalid("J must be at least 1"));
    }
    SpectralSignal::scalar((1..=count).map(|j| heavisine_coeff(j) / j as f64).collect())
}

/// The signals used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    /// The smoothed HeaviSine template itself.
    HeavisineSmoothed,
    /// `ϕ(t) = c cos(4t)` on `[0, 1]`.
    Cos4Perturbation,
    /// `ϕ(t) = c / (1 + t²)` on `[0, 1]`.
    RationalPerturbation,
    /// `ϕ_j = c · j · ψ_j` with `ψ(t) = 1 / (1 + t²)`.
    RationalUnsmoothed,
}

impl SignalKind {
    pub fn name(self) -> &'static str {
        match self {
            SignalKind::HeavisineSmoothed => "heavisine_smoothed",
            SignalKind::Cos4Perturbation => "cos4_perturbation",
            SignalKind::RationalPerturbation => "rational_perturbation",
            SignalKind::RationalUnsmoothed => "rational_unsmoothed",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "heavisine_smoothed" | "heavisine" => Some(SignalKind::HeavisineSmoothed),
            "cos4_perturbation" | "cos4" | "cos" => Some(SignalKind::Cos4Perturbation),
            "rational_perturbation" | "rational" => Some(SignalKind::RationalPerturbation),
            "rational_unsmoothed" | "nonsmooth" => Some(SignalKind::RationalUnsmoothed),
            _ => None,
        }
    }

    pub fn is_perturbation(self) -> bool {
        self != SignalKind::HeavisineSmoothed
    }
}

/// Which signal to build, with how many coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub gamma: f64,
    pub len: usize,
}

impl SignalSpec {
    pub fn base(len: usize) -> Self {
        Self {
            kind: SignalKind::HeavisineSmoothed,
            gamma: 0.0,
            len,
        }
    }

    pub fn perturbed(kind: SignalKind, gamma: f64, len: usize) -> Self {
        Self { kind, gamma, len }
    }

    /// Builds the described signal from scratch.
    pub fn build(&self) -> Result<SpectralSignal> {
        let base = heavisine_smoothed_coeffs(self.len)?;
        if self.kind.is_perturbation() {
            perturbation_coeffs(self, &base)
        } else if self.gamma != 0.0 {
            Err(Error::invalid("the base signal carries no perturbation amplitude"))
        } else {
            Ok(base)
        }
    }
}

fn cos4_coeff(j: usize) -> Complex64 {
    // ½ [ (e^{4i} − 1)/(i(ω + 4)) + (e^{−4i} − 1)/(i(ω − 4)) ], ω = 2πj.
    let w = TAU * j as f64;
    let i = Complex64::new(0.0, 1.0);
    let plus = (cis(4.0) - 1.0) / (i * (w + 4.0));
    let minus = (cis(-4.0) - 1.0) / (i * (w - 4.0));
    (plus + minus) * 0.5
}

const RATIONAL_QUADRATURE_BELOW: usize = 48;

/// `∫₀¹ e^{2ijπt} / (1 + t²) dt`.
///
/// Low frequencies use Simpson's rule on 2¹⁶ panels. From `j = 48` on, the
/// integration-by-parts expansion `Σ_k (−1)^k (ψ^{(k)}(1) − ψ^{(k)}(0)) / (iω)^{k+1}`
/// is used, with `(−1)^k ψ^{(k)}(t) = k! Im((t − i)^{−(k+1)})`; its terms
/// fall like `k!/ω^{k+1}`, far below double precision after a dozen terms.
pub(crate) fn rational_coeff(j: usize) -> Complex64 {
    if j < RATIONAL_QUADRATURE_BELOW {
        return simpson_fourier_coeff(|t| 1.0 / (1.0 + t * t), j, 1 << 16);
    }
    let omega = TAU * j as f64;
    let i_omega = Complex64::new(0.0, omega);
    let at_one = Complex64::new(1.0, -1.0).inv();
    let at_zero = Complex64::new(0.0, -1.0).inv();
    let mut pow_one = at_one;
    let mut pow_zero = at_zero;
    let mut scale = i_omega.inv();
    let mut sum = Complex64::default();
    for k in 0..64 {
        let term = scale * (pow_one.im - pow_zero.im);
        sum += term;
        if term.norm() < 1e-22 * (1.0 + sum.norm()) {
            break;
        }
        pow_one *= at_one;
        pow_zero *= at_zero;
        scale *= (k + 1) as f64 / i_omega;
    }
    sum
}

fn raw_perturbation(kind: SignalKind, count: usize) -> Vec<Complex64> {
    match kind {
        SignalKind::HeavisineSmoothed => vec![Complex64::default(); count],
        SignalKind::Cos4Perturbation => (1..=count).map(cos4_coeff).collect(),
        SignalKind::RationalPerturbation => (1..=count).map(rational_coeff).collect(),
        SignalKind::RationalUnsmoothed => (1..=count)
            .map(|j| rational_coeff(j) * j as f64)
            .collect(),
    }
}

/// Perturbation `ϕ` rescaled so that `Σ_{j≤J} |ϕ_j|² = Σ_{j≤J} |f_j|²`,
/// with `J` the length of `base`.
pub fn normalized_perturbation(kind: SignalKind, base: &SpectralSignal) -> Result<Vec<Complex64>> {
    if !kind.is_perturbation() {
        return Err(Error::invalid("the base signal is not a perturbation"));
    }
    let target = base.dim(0).iter().map(|c| c.norm_sqr()).sum::<f64>();
    if target <= 0.0 {
        return Err(Error::Degenerate("base signal has zero norm".into()));
    }
    let raw = raw_perturbation(kind, base.len());
    let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let scale = (target / norm).sqrt();
    Ok(raw.into_iter().map(|c| c * scale).collect())
}

/// Coefficients of `f + γϕ`, with `ϕ` normalized to the norm of `f` over
/// the retained range. `γ = 0` returns `base` unchanged.
pub fn perturbation_coeffs(spec: &SignalSpec, base: &SpectralSignal) -> Result<SpectralSignal> {
    if !spec.kind.is_perturbation() {
        return Err(Error::invalid("spec does not describe a perturbation"));
    }
    if base.dims() != 1 {
        return Err(Error::DimensionMismatch("perturbations apply to scalar signals".into()));
    }
    let phi = normalized_perturbation(spec.kind, base)?;
    if spec.gamma == 0.0 {
        return Ok(base.clone());
    }
    SpectralSignal::scalar(
        base.dim(0)
            .iter()
            .zip(&phi)
            .map(|(f, p)| f + p * spec.gamma)
            .collect(),
    )
}

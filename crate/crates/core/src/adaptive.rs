//! Shift test with a common unknown noise level, estimated from the
//! coefficients the weights discard.

use rand_distr::{Distribution, Exp, Gamma};

use crate::error::{Error, Result};
use crate::normal;
use crate::rng;
use crate::shift_test::{validate_alpha, Profile, TestConfig};
use crate::spectral::SpectralObservation;
use crate::weights::WeightSequence;
use num_complex::Complex64;

/// How the critical value for `T` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Calibration {
    /// Closed-form bound minimized over a β grid.
    Asymptotic,
    /// Empirical `(1 − α)` quantile of the two leading ξ-sums.
    MonteCarlo { reps: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub weights: WeightSequence,
    /// Number of coefficients used, `p ≥ 2N`.
    pub p: usize,
    pub alpha: f64,
    pub beta_grid: usize,
    pub calibration: Calibration,
}

impl AdaptiveConfig {
    pub const DEFAULT_BETA_GRID: usize = 999;

    pub fn new(weights: WeightSequence, p: usize, alpha: f64) -> Result<Self> {
        let cfg = Self {
            weights,
            p,
            alpha,
            beta_grid: Self::DEFAULT_BETA_GRID,
            calibration: Calibration::Asymptotic,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_calibration(mut self, calibration: Calibration) -> Result<Self> {
        self.calibration = calibration;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        let n = self.weights.support();
        if self.p < 2 * n {
            return Err(Error::invalid(format!("p = {} must be at least 2N = {}", self.p, 2 * n)));
        }
        if self.beta_grid == 0 {
            return Err(Error::invalid("beta_grid must be positive"));
        }
        if self.weights.l2_sq() == 0.0 {
            return Err(Error::Degenerate("all weights vanish".into()));
        }
        if let Calibration::MonteCarlo { reps, .. } = self.calibration {
            if reps == 0 {
                return Err(Error::invalid("Monte Carlo calibration needs reps >= 1"));
            }
        }
        Ok(())
    }

    /// `‖1 − ν‖₁` over `j = 1…p`.
    pub fn complement_l1(&self) -> f64 {
        let n = self.weights.support();
        self.weights.nu().iter().map(|v| 1.0 - v).sum::<f64>() + (self.p - n) as f64
    }

    /// `‖1 − ν‖₂` over `j = 1…p`.
    pub fn complement_l2(&self) -> f64 {
        let n = self.weights.support();
        (self.weights.nu().iter().map(|v| (1.0 - v).powi(2)).sum::<f64>() + (self.p - n) as f64).sqrt()
    }

    /// Coefficient `‖ν‖₁‖1−ν‖₂ / (√2 ‖ν‖₂ ‖1−ν‖₁)` of the second quantile.
    pub fn factor(&self) -> f64 {
        let (l1, l2) = self.weights.norms();
        l1 * self.complement_l2() / (2f64.sqrt() * l2 * self.complement_l1())
    }

    /// Smallest `c′` with `max_j j⁻²(1 − ν_j) ≤ c′ N⁻²`, over `j = 1…p`.
    pub fn smoothness_constant(&self) -> f64 {
        let n = self.weights.support();
        let inside = self
            .weights
            .nu()
            .iter()
            .enumerate()
            .map(|(i, v)| (1.0 - v) / ((i + 1) as f64).powi(2))
            .fold(0.0, f64::max);
        let outside = if self.p > n { 1.0 / ((n + 1) as f64).powi(2) } else { 0.0 };
        inside.max(outside) * (n as f64).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOutcome {
    pub delta_tilde: f64,
    pub t_stat: f64,
    pub critical: f64,
    pub reject: bool,
    /// `‖Y‖²_{2,1−ν} + ‖Y#‖²_{2,1−ν}`.
    pub noise_proxy: f64,
    pub tau_hat: f64,
    /// Diagnostic `p log(1 + dist / (2·noise_proxy))`.
    pub log_form: f64,
}

/// Computes `Δ̃`, `T` and the auxiliary quantities; `critical` and `reject`
/// are left at `NaN`/`false`.
pub fn statistic_tilde(
    a: &SpectralObservation,
    b: &SpectralObservation,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveOutcome> {
    cfg.validate()?;
    if a.dims() != 1 || b.dims() != 1 {
        return Err(Error::DimensionMismatch("the adaptive test is one-dimensional".into()));
    }
    let p = cfg.p;
    for obs in [a, b] {
        if obs.len() < p {
            return Err(Error::InsufficientCoefficients { needed: p, got: obs.len() });
        }
    }
    let (sa, sb) = (a.sigma()[0], b.sigma()[0]);
    if (sa - sb).abs() > 1e-12 * sa.max(sb) {
        return Err(Error::invalid("the adaptive test requires equal noise levels"));
    }
    let n = cfg.weights.support();
    let (ya, yb) = (&a.dim(0)[..p], &b.dim(0)[..p]);
    let high: f64 = (n..p).map(|i| ya[i].norm_sqr() + yb[i].norm_sqr()).sum();
    tilde_banded(&ya[..n], &yb[..n], high, cfg)
}

/// [`statistic_tilde`] from the weighted band `j ≤ N` and the energy
/// `Σ_{N<j≤p} (|Y_j|² + |Y#_j|²)` of the discarded band, which is all the
/// statistic uses of coefficients beyond the support.
pub fn statistic_tilde_banded(
    ya: &[Complex64],
    yb: &[Complex64],
    high_band_energy: f64,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveOutcome> {
    cfg.validate()?;
    let n = cfg.weights.support();
    if ya.len() != n || yb.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "weighted band needs {n} coefficients, got {} and {}",
            ya.len(),
            yb.len()
        )));
    }
    if !(high_band_energy >= 0.0 && high_band_energy.is_finite()) {
        return Err(Error::invalid("high-band energy must be non-negative"));
    }
    tilde_banded(ya, yb, high_band_energy, cfg)
}

fn tilde_banded(
    ya: &[Complex64],
    yb: &[Complex64],
    high: f64,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveOutcome> {
    let p = cfg.p;
    let complement = cfg.complement_l1();
    if complement == 0.0 {
        return Err(Error::Degenerate("no coefficient carries noise information".into()));
    }
    let nu = cfg.weights.nu();
    let noise_proxy: f64 = nu
        .iter()
        .enumerate()
        .map(|(i, v)| (1.0 - v) * (ya[i].norm_sqr() + yb[i].norm_sqr()))
        .sum::<f64>()
        + high;
    if noise_proxy == 0.0 {
        return Err(Error::Degenerate("both observations vanish on the noise band".into()));
    }
    let products = nu
        .iter()
        .enumerate()
        .map(|(i, &v)| ya[i] * yb[i].conj() * v)
        .collect();
    let best = Profile::new(products).maximize(
        TestConfig::DEFAULT_OVERSAMPLING,
        TestConfig::DEFAULT_REFINE_TOL,
    );
    let dist: f64 = nu
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let phase = Complex64::from_polar(1.0, -((i + 1) as f64) * best.tau);
            v * (ya[i] - phase * yb[i]).norm_sqr()
        })
        .sum();
    let delta_tilde = complement * dist / noise_proxy;
    let (l1, l2) = cfg.weights.norms();
    Ok(AdaptiveOutcome {
        delta_tilde,
        t_stat: (delta_tilde - l1) / l2,
        critical: f64::NAN,
        reject: false,
        noise_proxy,
        tau_hat: best.tau,
        log_form: p as f64 * (dist / (2.0 * noise_proxy)).ln_1p(),
    })
}

/// Critical value for `T` under the configured calibration.
pub fn critical_value(cfg: &AdaptiveConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(match cfg.calibration {
        Calibration::Asymptotic => asymptotic_critical(cfg.alpha, cfg.factor(), cfg.beta_grid),
        Calibration::MonteCarlo { reps, seed } => monte_carlo_critical(cfg, reps, seed),
    })
}

/// `min_β z_{1−β} + factor·z_{1−α+β}` over `β_i = α·i/(grid + 1)`.
pub fn asymptotic_critical(alpha: f64, factor: f64, grid: usize) -> f64 {
    (1..=grid)
        .map(|i| {
            let beta = alpha * i as f64 / (grid + 1) as f64;
            normal::quantile(1.0 - beta) + factor * normal::quantile(1.0 - alpha + beta)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Draws the leading terms of the upper bound on `T`:
/// `Σ ν_j(|ξ_j|² − 2)/(2‖ν‖₂) + ‖ν‖₁/(4‖ν‖₂) Σ (1−ν_j)/‖1−ν‖₁ (4 − |ξ_j|² − |ξ#_j|²)`.
fn monte_carlo_critical(cfg: &AdaptiveConfig, reps: usize, seed: u64) -> f64 {
    let (l1, l2) = cfg.weights.norms();
    let comp = cfg.complement_l1();
    let nu = cfg.weights.nu();
    let tail = cfg.p - nu.len();
    // |ξ|² ~ χ²₂; the tail sum over j > N of |ξ|² + |ξ#|² is χ²_{4(p−N)}.
    let chi2_2 = Exp::new(0.5).expect("valid rate");
    let tail_dist = (tail > 0).then(|| Gamma::new(2.0 * tail as f64, 2.0).expect("valid shape"));
    let mut rng = rng::stream(seed, &[]);
    let mut draws: Vec<f64> = (0..reps)
        .map(|_| {
            let mut first = 0.0;
            let mut second = 0.0;
            for &v in nu {
                let e: f64 = chi2_2.sample(&mut rng);
                let e_sharp: f64 = chi2_2.sample(&mut rng);
                first += v * (e - 2.0);
                second += (1.0 - v) * (4.0 - e - e_sharp);
            }
            if let Some(g) = &tail_dist {
                second += 4.0 * tail as f64 - g.sample(&mut rng);
            }
            first / (2.0 * l2) + l1 / (4.0 * l2) * second / comp
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    let idx = (((1.0 - cfg.alpha) * reps as f64).ceil() as usize).clamp(1, reps) - 1;
    draws[idx]
}

/// Full adaptive test.
pub fn adaptive_decide(
    a: &SpectralObservation,
    b: &SpectralObservation,
    cfg: &AdaptiveConfig,
) -> Result<AdaptiveOutcome> {
    let critical = critical_value(cfg)?;
    decide_with_critical(a, b, cfg, critical)
}

/// As [`adaptive_decide`] with a precomputed critical value, for loops
/// that reuse one configuration.
pub fn decide_with_critical(
    a: &SpectralObservation,
    b: &SpectralObservation,
    cfg: &AdaptiveConfig,
    critical: f64,
) -> Result<AdaptiveOutcome> {
    let mut out = statistic_tilde(a, b, cfg)?;
    out.critical = critical;
    out.reject = out.t_stat >= critical;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{synthesize_observation, SpectralSignal};

    fn proj(n: usize) -> WeightSequence {
        WeightSequence::projection(n).unwrap()
    }

    fn noise_pair(p: usize, seed: u64) -> (SpectralObservation, SpectralObservation) {
        let s = SpectralSignal::scalar(vec![Complex64::default(); 1]).unwrap();
        (
            synthesize_observation(&s, &[0.3], p, seed).unwrap(),
            synthesize_observation(&s, &[0.3], p, seed + 1).unwrap(),
        )
    }

    #[test]
    fn identical_observations() {
        let cfg = AdaptiveConfig::new(proj(16), 80, 0.05).unwrap();
        let (a, _) = noise_pair(80, 1);
        let out = adaptive_decide(&a, &a, &cfg).unwrap();
        assert_eq!(out.delta_tilde, 0.0);
        assert_eq!(out.t_stat, -16.0 / 4.0);
        assert!(!out.reject);
        assert!(out.critical > 0.0);
    }

    #[test]
    fn banded_form_matches_full_observations() {
        let cfg = AdaptiveConfig::new(WeightSequence::tikhonov(12, 0.5, 2.0).unwrap(), 50, 0.05).unwrap();
        let (a, b) = noise_pair(50, 8);
        let full = statistic_tilde(&a, &b, &cfg).unwrap();
        let high: f64 = (12..50).map(|i| a.dim(0)[i].norm_sqr() + b.dim(0)[i].norm_sqr()).sum();
        let banded = statistic_tilde_banded(&a.dim(0)[..12], &b.dim(0)[..12], high, &cfg).unwrap();
        assert!((full.delta_tilde - banded.delta_tilde).abs() < 1e-12 * full.delta_tilde);
        assert!(statistic_tilde_banded(&a.dim(0)[..11], &b.dim(0)[..12], high, &cfg).is_err());
        assert!(statistic_tilde_banded(&a.dim(0)[..12], &b.dim(0)[..12], -1.0, &cfg).is_err());
    }

    #[test]
    fn scale_invariance() {
        let cfg = AdaptiveConfig::new(WeightSequence::pinsker(16, 2.0).unwrap(), 80, 0.05).unwrap();
        let (a, b) = noise_pair(80, 3);
        let base = statistic_tilde(&a, &b, &cfg).unwrap();
        for lambda in [1e-3, 0.7, -2.0, 1e4] {
            let sa = a.rescaled(&[lambda]).unwrap();
            let sb = b.rescaled(&[lambda]).unwrap();
            let out = statistic_tilde(&sa, &sb, &cfg).unwrap();
            assert!((out.delta_tilde - base.delta_tilde).abs() < 1e-12 * (1.0 + base.delta_tilde));
            assert!((out.t_stat - base.t_stat).abs() < 1e-12 * (1.0 + base.t_stat.abs()));
        }
    }

    #[test]
    fn factor_and_critical_values() {
        let cfg = AdaptiveConfig::new(proj(16), 80, 0.05).unwrap();
        assert_eq!(cfg.complement_l1(), 64.0);
        assert_eq!(cfg.complement_l2(), 8.0);
        assert!((cfg.factor() - 16.0 * 8.0 / (2f64.sqrt() * 4.0 * 64.0)).abs() < 1e-15);
        assert!((cfg.factor() - 0.353_553).abs() < 1e-6);
        let c = critical_value(&cfg).unwrap();
        let z = normal::quantile(0.95);
        assert!(c >= z);
        // Golden value of the 999-point grid minimum.
        assert!((c - 2.572_122_827_166_455).abs() < 1e-9, "{c}");
        let tiny = asymptotic_critical(0.05, 1e-9, 999);
        assert!((tiny - normal::quantile(1.0 - 0.05 * 999.0 / 1000.0)).abs() < 1e-6);
        assert!(tiny - z < 2e-3);
    }

    #[test]
    fn critical_exceeds_plain_quantile() {
        for (n, p, alpha) in [(4, 8, 0.01), (16, 128, 0.05), (50, 708, 0.2), (3, 6, 0.5)] {
            let cfg = AdaptiveConfig::new(proj(n), p, alpha).unwrap();
            assert!(critical_value(&cfg).unwrap() >= normal::quantile(1.0 - alpha));
        }
    }

    #[test]
    fn monte_carlo_calibration_is_close_to_bound() {
        let cfg = AdaptiveConfig::new(proj(32), 512, 0.05)
            .unwrap()
            .with_calibration(Calibration::MonteCarlo { reps: 20_000, seed: 11 })
            .unwrap();
        let mc = critical_value(&cfg).unwrap();
        let asym = asymptotic_critical(0.05, cfg.factor(), 999);
        // A sum of two near-Gaussian terms: its quantile sits below the bound.
        assert!(mc < asym + 0.1, "{mc} vs {asym}");
        assert!(mc > normal::quantile(0.95) * 0.8);
        assert_eq!(mc, critical_value(&cfg).unwrap());
    }

    #[test]
    fn validation() {
        assert!(AdaptiveConfig::new(proj(16), 31, 0.05).is_err());
        assert!(AdaptiveConfig::new(proj(16), 32, 1.5).is_err());
        let cfg = AdaptiveConfig::new(proj(16), 64, 0.05).unwrap();
        let (a, b) = noise_pair(40, 3);
        assert!(matches!(
            statistic_tilde(&a, &b, &cfg),
            Err(Error::InsufficientCoefficients { .. })
        ));
        let zero = SpectralObservation::scalar(vec![Complex64::default(); 64], 1.0).unwrap();
        assert!(matches!(statistic_tilde(&zero, &zero, &cfg), Err(Error::Degenerate(_))));
        let other = SpectralObservation::scalar(vec![Complex64::new(1.0, 0.0); 64], 2.0).unwrap();
        let one = SpectralObservation::scalar(vec![Complex64::new(1.0, 0.0); 64], 1.0).unwrap();
        assert!(statistic_tilde(&one, &other, &cfg).is_err());
    }

    #[test]
    fn smoothness_constant_reported() {
        let cfg = AdaptiveConfig::new(proj(10), 20, 0.05).unwrap();
        assert!((cfg.smoothness_constant() - 100.0 / 121.0).abs() < 1e-15);
        let t = AdaptiveConfig::new(WeightSequence::tikhonov(10, 0.5, 2.0).unwrap(), 20, 0.05).unwrap();
        assert!(t.smoothness_constant() > 0.0 && t.smoothness_constant() < 5.0);
    }

    #[test]
    fn null_mean_with_signal() {
        // Under H0 with a template confined to j ≤ N the high band is pure
        // noise, the ratio estimates 1/(2σ²), and Δ̃/‖ν‖₁ sits near one.
        // (With c = 0 the free τ fit alone pulls the mean down to about 0.68.)
        let (n, p, reps) = (32, 512, 10_000);
        let cfg = AdaptiveConfig::new(proj(n), p, 0.05).unwrap();
        let signal =
            SpectralSignal::scalar((1..=n).map(|j| Complex64::new(5.0 / j as f64, 0.0)).collect()).unwrap();
        let mut total = 0.0;
        for r in 0..reps as u64 {
            let tau = 0.37 + r as f64 * 0.001;
            let a = synthesize_observation(&signal, &[0.1], p, rng::derive_seed(21, &[r, 0])).unwrap();
            let b = synthesize_observation(&signal.apply_shift(tau), &[0.1], p, rng::derive_seed(21, &[r, 1]))
                .unwrap();
            total += statistic_tilde(&a, &b, &cfg).unwrap().delta_tilde / n as f64;
        }
        let mean = total / reps as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }
}

//! Rotation-aware keypoint descriptors built from angular Fourier
//! coefficients of ring profiles, and descriptor matching by the
//! multidimensional shift test.
//!
//! Around an integer keypoint `x₀` the disc of radius `r` is cut into
//! equal-area rings with radii `√ℓ·r/2`. Each ring profile
//! `X_ℓ(t) = ∫ I(x₀ + u[sin t, cos t]) du` is a midpoint Riemann sum over
//! the ring's radial extent with bilinear interpolation, and the
//! descriptor keeps `Y_j(ℓ) = (2π)^{−1/2} ∫ X_ℓ(t) e^{ijt} dt` for
//! `j = 1…k`. A rotation of the image about the keypoint turns into the
//! phase shift `Y#_j = e^{ijτ*} Y_j`.
//!
//! Descriptors are linear in the image, so the noise level of every
//! coefficient is known exactly from the sampling weights; see
//! [`Whitening`].

mod descriptor_io;
mod image;
mod texture;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::shift_test::{multidim_statistic, TestConfig};
use crate::spectral::SpectralObservation;
use crate::weights::WeightSequence;

pub use descriptor_io::{format_descriptor, parse_descriptor, read_descriptor, write_descriptor};
pub use image::{add_gaussian_noise, estimate_noise, load_pgm, parse_pgm, GrayImage};
pub use texture::{
    bundled_texture_pair, sample_keypoints, synthetic_texture, BUNDLED_BLUR, BUNDLED_HEIGHT, BUNDLED_SEED,
    BUNDLED_WIDTH,
};

/// Normal 99% quantile, the default match threshold.
pub const DEFAULT_LAMBDA: f64 = 2.326_347_874_040_841;
/// Empirical 99% quantile reported for the photographic pair.
pub const EMPIRICAL_LAMBDA: f64 = 2.22;

/// How image noise is mapped to descriptor-coefficient noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Whitening {
    /// One factor for the whole descriptor (the plain single-σ statistic).
    Scalar,
    /// One factor per ring, i.e. one noise level per dimension.
    PerRing,
    /// One factor per ring and frequency.
    PerCoefficient,
}

impl Whitening {
    pub fn name(self) -> &'static str {
        match self {
            Whitening::Scalar => "scalar",
            Whitening::PerRing => "per-ring",
            Whitening::PerCoefficient => "per-coefficient",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "scalar" => Some(Whitening::Scalar),
            "per-ring" | "ring" => Some(Whitening::PerRing),
            "per-coefficient" | "coefficient" => Some(Whitening::PerCoefficient),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoftConfig {
    pub radius: usize,
    pub rings: usize,
    pub k: usize,
    pub angular_samples: usize,
    /// Midpoint samples along the radius within each ring.
    pub radial_samples: usize,
    pub whitening: Whitening,
}

impl Default for LoftConfig {
    fn default() -> Self {
        Self {
            radius: 32,
            rings: 4,
            k: 16,
            angular_samples: 512,
            radial_samples: 32,
            whitening: Whitening::PerRing,
        }
    }
}

impl LoftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 2 {
            return Err(Error::invalid("radius must be at least 2 pixels"));
        }
        if self.rings == 0 || self.k == 0 || self.radial_samples == 0 {
            return Err(Error::invalid("rings, k and radial_samples must be positive"));
        }
        if self.angular_samples < 2 * self.k + 1 {
            return Err(Error::invalid("angular_samples must exceed 2k"));
        }
        Ok(())
    }

    /// Inner and outer radius of ring `l` (0-based): `√l·r/2 … √(l+1)·r/2`
    /// for four rings, i.e. `r·√(l/L)` in general.
    pub fn ring_bounds(&self, l: usize) -> (f64, f64) {
        let r = self.radius as f64;
        let n = self.rings as f64;
        (r * (l as f64 / n).sqrt(), r * ((l + 1) as f64 / n).sqrt())
    }

    /// Number of real values in a descriptor.
    pub fn descriptor_len(&self) -> usize {
        2 * self.rings * self.k
    }
}

/// Descriptor of one keypoint: `rings × k` complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LoftDescriptor {
    pub coeffs: Vec<Vec<Complex64>>,
    pub center: Option<(usize, usize)>,
    pub radius: usize,
    /// Noise level attached at match time, if any.
    pub sigma_used: Option<f64>,
}

impl LoftDescriptor {
    pub fn rings(&self) -> usize {
        self.coeffs.len()
    }

    pub fn k(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    /// Multiplies `Y_j` by `e^{ijτ}`, the effect of rotating the image by `τ`.
    pub fn rotated(&self, tau: f64) -> LoftDescriptor {
        let mut out = self.clone();
        for ring in &mut out.coeffs {
            for (i, c) in ring.iter_mut().enumerate() {
                *c *= Complex64::from_polar(1.0, (i + 1) as f64 * tau);
            }
        }
        out
    }
}

/// Precomputed sampling plan and noise factors for one configuration.
#[derive(Debug, Clone)]
pub struct LoftSampler {
    cfg: LoftConfig,
    /// `plan[l][a]`: pixel offsets `(dx, dy)` and weights whose sum gives
    /// `X_l(t_a)`.
    plan: Vec<Vec<Vec<(i32, i32, f64)>>>,
    /// `(sin t_a, cos t_a)`, exactly quarter-turn symmetric when the angle
    /// count is a multiple of 4.
    trig: Vec<(f64, f64)>,
    /// Exact noise factors `κ_{l,j}`: coefficient noise `σ_coef = κ σ_img`
    /// with `E|noise|² = 2σ_coef²`.
    kappa: Vec<Vec<f64>>,
}

impl LoftSampler {
    pub fn new(cfg: LoftConfig) -> Result<Self> {
        cfg.validate()?;
        let trig = angle_table(cfg.angular_samples);
        let plan = (0..cfg.rings)
            .map(|l| {
                let (lo, hi) = cfg.ring_bounds(l);
                let du = (hi - lo) / cfg.radial_samples as f64;
                trig.iter()
                    .map(|&(s, c)| {
                        let mut cell: BTreeMap<(i32, i32), f64> = BTreeMap::new();
                        for m in 0..cfg.radial_samples {
                            let u = lo + (m as f64 + 0.5) * du;
                            let (x, y) = (u * s, u * c);
                            let (xf, yf) = (x.floor(), y.floor());
                            let (fx, fy) = (x - xf, y - yf);
                            let (xi, yi) = (xf as i32, yf as i32);
                            for (dx, dy, w) in [
                                (0, 0, (1.0 - fx) * (1.0 - fy)),
                                (1, 0, fx * (1.0 - fy)),
                                (0, 1, (1.0 - fx) * fy),
                                (1, 1, fx * fy),
                            ] {
                                *cell.entry((xi + dx, yi + dy)).or_default() += w * du;
                            }
                        }
                        cell.into_iter().map(|((dx, dy), w)| (dx, dy, w)).collect()
                    })
                    .collect()
            })
            .collect();
        let mut sampler = Self { cfg, plan, trig, kappa: Vec::new() };
        sampler.kappa = sampler.exact_noise_factors();
        Ok(sampler)
    }

    pub fn config(&self) -> &LoftConfig {
        &self.cfg
    }

    /// `e^{i·j·t_a}` from the symmetric table.
    fn phase(&self, j: usize, a: usize) -> Complex64 {
        let (s, c) = self.trig[(j * a) % self.cfg.angular_samples];
        Complex64::new(c, s)
    }

    fn exact_noise_factors(&self) -> Vec<Vec<f64>> {
        let r = self.cfg.radius as i32;
        let side = (2 * r + 2) as usize;
        let norm = (TAU).sqrt() / self.cfg.angular_samples as f64;
        (0..self.cfg.rings)
            .map(|l| {
                (1..=self.cfg.k)
                    .map(|j| {
                        let mut w = vec![Complex64::default(); side * side];
                        for (a, cell) in self.plan[l].iter().enumerate() {
                            let ph = self.phase(j, a) * norm;
                            for &(dx, dy, wt) in cell {
                                w[((dy + r) as usize) * side + (dx + r) as usize] += ph * wt;
                            }
                        }
                        (0.5 * w.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
                    })
                    .collect()
            })
            .collect()
    }

    /// Exact per-coefficient factors `κ_{l,j}` (unit image noise).
    pub fn coefficient_noise(&self) -> &[Vec<f64>] {
        &self.kappa
    }

    /// Factor applied to coefficient `(l, j)` under the configured whitening.
    pub fn noise_factor(&self, l: usize, j: usize) -> f64 {
        match self.cfg.whitening {
            Whitening::PerCoefficient => self.kappa[l][j - 1],
            Whitening::PerRing => {
                let ring = &self.kappa[l];
                (ring.iter().map(|v| v * v).sum::<f64>() / ring.len() as f64).sqrt()
            }
            Whitening::Scalar => {
                let all: Vec<f64> = self.kappa.iter().flatten().map(|v| v * v).collect();
                (all.iter().sum::<f64>() / all.len() as f64).sqrt()
            }
        }
    }

    fn check_center(&self, img: &GrayImage, (x, y): (usize, usize)) -> Result<()> {
        let r = self.cfg.radius;
        if x < r || y < r || x + r + 1 > img.width() || y + r + 1 > img.height() {
            return Err(Error::OutOfBounds {
                x,
                y,
                radius: r,
                width: img.width(),
                height: img.height(),
            });
        }
        Ok(())
    }

    /// `X_l(t_a)` for every ring and angle.
    pub fn ring_profiles(&self, img: &GrayImage, center: (usize, usize)) -> Result<Vec<Vec<f64>>> {
        self.check_center(img, center)?;
        let (x0, y0) = (center.0 as i64, center.1 as i64);
        let w = img.width() as i64;
        let px = img.pixels();
        Ok(self
            .plan
            .iter()
            .map(|ring| {
                ring.iter()
                    .map(|cell| {
                        cell.iter()
                            .map(|&(dx, dy, wt)| wt * px[((y0 + dy as i64) * w + x0 + dx as i64) as usize])
                            .sum()
                    })
                    .collect()
            })
            .collect())
    }

    /// Descriptor of the keypoint `center` (column, row).
    pub fn descriptor(&self, img: &GrayImage, center: (usize, usize)) -> Result<LoftDescriptor> {
        let profiles = self.ring_profiles(img, center)?;
        Ok(LoftDescriptor {
            coeffs: profiles.iter().map(|x| self.fourier(x)).collect(),
            center: Some(center),
            radius: self.cfg.radius,
            sigma_used: None,
        })
    }

    /// `Y_j = (2π)^{−1/2} Σ_a X(t_a) e^{ij t_a} (2π/A)` for `j = 1…k`.
    pub fn fourier(&self, profile: &[f64]) -> Vec<Complex64> {
        let norm = (TAU).sqrt() / self.cfg.angular_samples as f64;
        (1..=self.cfg.k)
            .map(|j| {
                profile
                    .iter()
                    .enumerate()
                    .map(|(a, &x)| self.phase(j, a) * x)
                    .sum::<Complex64>()
                    * norm
            })
            .collect()
    }

    fn whitened(&self, d: &LoftDescriptor, sigma: f64) -> Result<SpectralObservation> {
        if d.rings() != self.cfg.rings || d.k() != self.cfg.k || d.radius != self.cfg.radius {
            return Err(Error::DimensionMismatch(format!(
                "descriptor is {}x{} with r={}, configuration expects {}x{} with r={}",
                d.rings(),
                d.k(),
                d.radius,
                self.cfg.rings,
                self.cfg.k,
                self.cfg.radius
            )));
        }
        let coeffs = d
            .coeffs
            .iter()
            .enumerate()
            .map(|(l, ring)| {
                ring.iter()
                    .enumerate()
                    .map(|(i, c)| c / self.noise_factor(l, i + 1))
                    .collect()
            })
            .collect();
        SpectralObservation::new(coeffs, vec![sigma; self.cfg.rings])
    }

    /// Matching statistic with per-image noise levels; reduces to
    /// `Δ = (4σ²)⁻¹ min_τ Σ_j ‖Y_j − e^{−ijτ} Y#_j‖²` on whitened
    /// coefficients when both levels agree.
    pub fn match_statistic_unequal(
        &self,
        a: &LoftDescriptor,
        b: &LoftDescriptor,
        sigma_a: f64,
        sigma_b: f64,
    ) -> Result<MatchStatistic> {
        for s in [sigma_a, sigma_b] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("noise level must be positive"));
            }
        }
        let wa = self.whitened(a, sigma_a)?;
        let wb = self.whitened(b, sigma_b)?;
        let cfg = TestConfig::new(WeightSequence::projection(self.cfg.k)?, 0.01)?;
        let out = multidim_statistic(&wa, &wb, &cfg)?;
        Ok(MatchStatistic {
            delta: out.delta,
            tau_hat: out.tau_hat,
            t_normalized: out.t_normalized,
        })
    }

    pub fn match_statistic(
        &self,
        a: &LoftDescriptor,
        b: &LoftDescriptor,
        sigma: f64,
    ) -> Result<MatchStatistic> {
        self.match_statistic_unequal(a, b, sigma, sigma)
    }

    /// `is_match ⟺ T ≤ λ`.
    pub fn match_decide(
        &self,
        a: &LoftDescriptor,
        b: &LoftDescriptor,
        sigma: f64,
        lambda: f64,
    ) -> Result<MatchDecision> {
        Ok(self.match_statistic(a, b, sigma)?.decide(lambda))
    }
}

/// Quarter-turn symmetric `(sin, cos)` table on `A` equispaced angles.
fn angle_table(count: usize) -> Vec<(f64, f64)> {
    let step = TAU / count as f64;
    if !count.is_multiple_of(4) {
        return (0..count).map(|a| (a as f64 * step).sin_cos()).collect();
    }
    let quarter = count / 4;
    (0..count)
        .map(|a| {
            let (s, c) = ((a % quarter) as f64 * step).sin_cos();
            match a / quarter {
                0 => (s, c),
                1 => (c, -s),
                2 => (-s, -c),
                _ => (-c, s),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchStatistic {
    pub delta: f64,
    pub tau_hat: f64,
    pub t_normalized: f64,
}

impl MatchStatistic {
    pub fn decide(&self, lambda: f64) -> MatchDecision {
        MatchDecision {
            delta: self.delta,
            t_normalized: self.t_normalized,
            lambda,
            is_match: self.t_normalized <= lambda,
            tau_hat: self.tau_hat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchDecision {
    pub delta: f64,
    pub t_normalized: f64,
    pub lambda: f64,
    pub is_match: bool,
    pub tau_hat: f64,
}

/// Angle of a quarter turn, the rotation between the bundled images.
pub const QUARTER_TURN: f64 = PI / 2.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn sampler() -> LoftSampler {
        LoftSampler::new(LoftConfig::default()).unwrap()
    }

    fn texture() -> GrayImage {
        synthetic_texture(120, 100, 3.0, 5).unwrap()
    }

    #[test]
    fn ring_bounds_match_equal_areas() {
        let cfg = LoftConfig::default();
        let expect = [0.0, 16.0, 22.627_417, 27.712_813, 32.0];
        for l in 0..4 {
            let (lo, hi) = cfg.ring_bounds(l);
            assert!((lo - expect[l]).abs() < 1e-6 && (hi - expect[l + 1]).abs() < 1e-6);
        }
        assert_eq!(cfg.descriptor_len(), 128);
        // Pixel centres per annulus balance to within 2%.
        let counts: Vec<usize> = (0..4)
            .map(|l| {
                let (lo, hi) = cfg.ring_bounds(l);
                let r = 32i32;
                (-r..=r)
                    .flat_map(|y| (-r..=r).map(move |x| (x, y)))
                    .filter(|&(x, y)| {
                        let d = ((x * x + y * y) as f64).sqrt();
                        d >= lo && d < hi
                    })
                    .count()
            })
            .collect();
        let mean = counts.iter().sum::<usize>() as f64 / 4.0;
        for c in &counts {
            assert!((*c as f64 / mean - 1.0).abs() < 0.02, "{counts:?}");
        }
    }

    #[test]
    fn constant_image_profiles_and_descriptor() {
        let s = sampler();
        let img = GrayImage::new(80, 80, vec![7.5; 6400]).unwrap();
        let prof = s.ring_profiles(&img, (40, 40)).unwrap();
        for (l, ring) in prof.iter().enumerate() {
            let (lo, hi) = s.config().ring_bounds(l);
            for x in ring {
                assert!((x - 7.5 * (hi - lo)).abs() < 1e-10);
            }
        }
        let d = s.descriptor(&img, (40, 40)).unwrap();
        assert!(d.coeffs.iter().flatten().all(|c| c.norm() < 1e-10));
    }

    #[test]
    fn out_of_bounds_centre() {
        let s = sampler();
        let img = GrayImage::new(80, 80, vec![0.0; 6400]).unwrap();
        assert!(matches!(s.descriptor(&img, (31, 40)), Err(Error::OutOfBounds { .. })));
        assert!(s.descriptor(&img, (47, 47)).is_ok());
        assert!(s.descriptor(&img, (48, 40)).is_err());
    }

    #[test]
    fn radially_symmetric_image_gives_flat_profiles() {
        let s = sampler();
        let img = GrayImage::from_fn(80, 80, |x, y| {
            let d2 = (x as f64 - 40.0).powi(2) + (y as f64 - 40.0).powi(2);
            100.0 + 1e-4 * d2
        })
        .unwrap();
        let prof = s.ring_profiles(&img, (40, 40)).unwrap();
        for ring in &prof {
            let mean = ring.iter().sum::<f64>() / ring.len() as f64;
            let spread = ring.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
            assert!(spread / mean < 1e-6, "{spread} vs {mean}");
        }
    }

    #[test]
    fn cosine_pattern_lives_in_first_coefficient() {
        let s = sampler();
        let prof: Vec<f64> = (0..512).map(|a| (TAU * a as f64 / 512.0).cos()).collect();
        let y = s.fourier(&prof);
        // (2π)^{-1/2} ∫ cos t e^{it} dt = √(2π)/2.
        assert!((y[0] - Complex64::new((TAU).sqrt() / 2.0, 0.0)).norm() < 1e-12);
        assert!(y[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn quarter_turn_is_phase_shift() {
        let s = sampler();
        let a = texture();
        let b = a.rot90();
        for &p in &[(40usize, 40usize), (60, 50), (80, 60)] {
            let da = s.descriptor(&a, p).unwrap();
            let db = s.descriptor(&b, a.rot90_point(p)).unwrap();
            let predicted = da.rotated(QUARTER_TURN);
            for (ra, rb) in predicted.coeffs.iter().zip(&db.coeffs) {
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).norm() <= 0.02 * x.norm().max(1e-9), "{x} vs {y}");
                }
            }
            let m = s.match_statistic(&da, &db, 1.0).unwrap();
            assert!((m.tau_hat - QUARTER_TURN).abs() < 0.05);
            assert!(m.delta < 1e-12);
        }
    }

    #[test]
    fn linearity_in_intensity() {
        let s = sampler();
        let a = texture();
        let d = s.descriptor(&a, (50, 50)).unwrap();
        let e = s.descriptor(&a.map_affine(-2.5, 30.0), (50, 50)).unwrap();
        for (x, y) in d.coeffs.iter().flatten().zip(e.coeffs.iter().flatten()) {
            assert!((x * -2.5 - y).norm() < 1e-9 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn exact_noise_factors_match_monte_carlo() {
        let s = sampler();
        let reps = 2000;
        let mut acc = vec![vec![0.0; 16]; 4];
        for r in 0..reps as u64 {
            let img = add_gaussian_noise(&GrayImage::new(70, 70, vec![0.0; 4900]).unwrap(), 1.0, rng::derive_seed(9, &[r])).unwrap();
            let d = s.descriptor(&img, (35, 35)).unwrap();
            for (l, ring) in d.coeffs.iter().enumerate() {
                for (i, c) in ring.iter().enumerate() {
                    acc[l][i] += c.norm_sqr() / 2.0;
                }
            }
        }
        for l in 0..4 {
            for i in 0..16 {
                let emp = acc[l][i] / reps as f64;
                let exact = s.coefficient_noise()[l][i].powi(2);
                // Mean of 2000 χ²₂/2 draws: relative SE ≈ 2.2%.
                assert!((emp / exact - 1.0).abs() < 0.1, "ring {l} j {}: {emp} vs {exact}", i + 1);
            }
        }
    }

    #[test]
    fn coefficient_noise_whiteness() {
        // Outer rings are white across j within 10%; the innermost ring is
        // not, because interpolation near the centre suppresses high
        // angular frequencies.
        let s = sampler();
        let var: Vec<Vec<f64>> =
            s.coefficient_noise().iter().map(|r| r.iter().map(|k| k * k).collect()).collect();
        for ring in &var[1..] {
            let mean = ring.iter().sum::<f64>() / ring.len() as f64;
            assert!(ring.iter().all(|v| (v / mean - 1.0).abs() < 0.1));
        }
        assert!(var[0][0] / var[0][15] > 3.0);
    }

    #[test]
    fn matching_examples() {
        let s = sampler();
        let a = texture();
        let d = s.descriptor(&a, (50, 50)).unwrap();
        let m = s.match_statistic(&d, &d, 30.0).unwrap();
        assert_eq!(m.delta, 0.0);
        assert_eq!(m.t_normalized, -8.0);
        assert!(m.decide(-7.999).is_match);
        assert!(m.decide(-8.0).is_match);
        assert!(!m.decide(-8.001).is_match);
        let rot = d.rotated(1.1);
        let m = s.match_statistic(&d, &rot, 30.0).unwrap();
        assert!(m.delta < 1e-12);
        assert!((m.tau_hat - 1.1).abs() < 1e-8);
        assert!(s.match_statistic(&d, &d, 0.0).is_err());
        let other = LoftSampler::new(LoftConfig { k: 8, ..LoftConfig::default() }).unwrap();
        assert!(other.match_statistic(&d, &d, 1.0).is_err());
    }
}

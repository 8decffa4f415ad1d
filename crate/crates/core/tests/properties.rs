//! Property tests of the public API.

use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;
use shiftcurve::adaptive::{critical_value, statistic_tilde, AdaptiveConfig};
use shiftcurve::loft::{synthetic_texture, GrayImage, LoftConfig, LoftSampler};
use shiftcurve::normal;
use shiftcurve::spectral::{
    format_observation, heavisine_smoothed_coeffs, parse_observation, synthesize_observation, SpectralObservation,
    SpectralSignal,
};
use shiftcurve::weights::WeightSequence;

fn coeffs(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0).prop_map(|(re, im)| Complex64::new(re, im)), 1..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_preserves_moduli_and_energy(c in coeffs(64), tau in -10.0f64..10.0) {
        let s = SpectralSignal::scalar(c).unwrap();
        let shifted = s.apply_shift(tau);
        for (a, b) in s.dim(0).iter().zip(shifted.dim(0)) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-12 * (1.0 + a.norm()));
        }
        prop_assert!((s.norm_sq() - shifted.norm_sq()).abs() <= 1e-12 * (1.0 + s.norm_sq()));
    }

    #[test]
    fn seeded_generation_is_reproducible(c in coeffs(32), sigma in 0.0f64..3.0, seed in any::<u64>()) {
        let s = SpectralSignal::scalar(c).unwrap();
        let p = s.len() + 5;
        let a = synthesize_observation(&s, &[sigma], p, seed).unwrap();
        let b = synthesize_observation(&s, &[sigma], p, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn observation_text_round_trips(c in coeffs(40), sigma in 1e-3f64..10.0) {
        let obs = SpectralObservation::scalar(c, sigma).unwrap();
        prop_assert_eq!(parse_observation(&format_observation(&obs)).unwrap(), obs);
    }

    #[test]
    fn adaptive_statistic_is_scale_invariant(
        c in coeffs(8),
        seed in any::<u64>(),
        scale in prop::sample::select(vec![1e-3, 0.5, -3.0, 250.0]),
    ) {
        let n = 4;
        let p = 2 * n + 8;
        let s = SpectralSignal::scalar(c).unwrap();
        let a = synthesize_observation(&s, &[1.0], p, seed).unwrap();
        let b = synthesize_observation(&s.apply_shift(1.0), &[1.0], p, seed ^ 1).unwrap();
        let cfg = AdaptiveConfig::new(WeightSequence::projection(n).unwrap(), p, 0.05).unwrap();
        let base = statistic_tilde(&a, &b, &cfg).unwrap();
        let scaled = statistic_tilde(&a.rescaled(&[scale]).unwrap(), &b.rescaled(&[scale]).unwrap(), &cfg).unwrap();
        prop_assert!((scaled.t_stat - base.t_stat).abs() <= 1e-12 * (1.0 + base.t_stat.abs()));
    }

    #[test]
    fn adaptive_critical_value_exceeds_normal_quantile(alpha in 0.001f64..0.3, n in 2usize..40) {
        let cfg = AdaptiveConfig::new(WeightSequence::pinsker(n, 2.0).unwrap(), 4 * n, alpha).unwrap();
        prop_assert!(critical_value(&cfg).unwrap() >= normal::quantile(1.0 - alpha));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn descriptor_is_linear_in_intensity(a in 0.1f64..5.0, b in -100.0f64..100.0, x in 40usize..70, y in 40usize..60) {
        let img = synthetic_texture(110, 100, 4.0, 9).unwrap();
        let sampler = LoftSampler::new(LoftConfig::default()).unwrap();
        let base = sampler.descriptor(&img, (x, y)).unwrap();
        let mapped = sampler.descriptor(&img.map_affine(a, b), (x, y)).unwrap();
        for (r0, r1) in base.coeffs.iter().zip(&mapped.coeffs) {
            for (c0, c1) in r0.iter().zip(r1) {
                prop_assert!((c0 * a - c1).norm() <= 1e-9 * (1.0 + c1.norm()));
            }
        }
    }
}

#[test]
fn template_sobolev_norm_converges() {
    let sob = |len: usize| {
        heavisine_smoothed_coeffs(len)
            .unwrap()
            .dim(0)
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64).powi(2) * c.norm_sqr())
            .sum::<f64>()
    };
    let (a, b, c) = (sob(1_000), sob(10_000), sob(100_000));
    assert!(a <= b && b <= c);
    // The tail of Σ j²|c_j|² decays like 1/J.
    assert!(c - b < (b - a) * 0.2);
}

#[test]
fn quarter_turns_recover_the_angle() {
    let img = synthetic_texture(120, 120, 5.0, 4).unwrap();
    let sampler = LoftSampler::new(LoftConfig::default()).unwrap();
    let p = (50, 60);
    let base = sampler.descriptor(&img, p).unwrap();
    let mut rotated: GrayImage = img.clone();
    let mut q = p;
    for turn in 1..=3 {
        q = rotated.rot90_point(q);
        rotated = rotated.rot90();
        let d = sampler.descriptor(&rotated, q).unwrap();
        let m = sampler.match_statistic(&base, &d, 1.0).unwrap();
        let target = (turn as f64 * TAU / 4.0) % TAU;
        let err = (m.tau_hat - target).rem_euclid(TAU);
        assert!(err.min(TAU - err) < 0.05, "turn {turn}: {} vs {target}", m.tau_hat);
    }
}

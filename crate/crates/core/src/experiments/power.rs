//! Power against `f# = f + γϕ`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use super::plot::{LinePlot, Series};
use super::{
    adaptive_p, binomial_se, cutoff_for_n, fmt_f64, noncentral_chi2, par_map, ExperimentKind, ExperimentSpec,
    Report, Table,
};
use crate::adaptive::{critical_value, statistic_tilde_banded, AdaptiveConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::shift_test::{run_test, TestConfig};
use crate::spectral::{heavisine_smoothed_coeffs, normalized_perturbation, SpectralObservation};
use crate::weights::WeightSequence;

/// Template `f` and normalized perturbation `ϕ` on `j = 1…len`, with `ϕ`
/// scaled so that its norm over the first `norm_len` coefficients equals
/// that of `f`.
fn template_and_perturbation(spec: &ExperimentSpec, len: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let total = spec.norm_len.max(len);
    let base = heavisine_smoothed_coeffs(total)?;
    let phi = normalized_perturbation(spec.perturbation, &base)?;
    let f = base.into_coeffs().remove(0);
    Ok((f[..len].to_vec(), phi[..len].to_vec()))
}

/// Power surface for the known-noise kinds and the adaptive kind.
///
/// CSV columns: `n,N,gamma,perturbation,reps,rejected,power,se`.
pub fn run_power(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let adaptive = match spec.kind {
        ExperimentKind::PowerSmoothCos | ExperimentKind::PowerSmoothRational | ExperimentKind::PowerNonsmooth => false,
        ExperimentKind::PowerAdaptive => true,
        other => return Err(Error::invalid(format!("{} is not a power experiment", other.name()))),
    };
    let tag = spec.kind.tag();
    let mut table = Table::new(&["n", "N", "gamma", "perturbation", "reps", "rejected", "power", "se"]);
    for (point, &n) in spec.n_ladder.iter().enumerate() {
        let big_n = cutoff_for_n(n);
        let p = if adaptive { adaptive_p(big_n) } else { big_n };
        let (f, phi) = template_and_perturbation(spec, p)?;
        let weights = WeightSequence::projection(big_n)?;
        let known = TestConfig::new(weights.clone(), spec.alpha)?;
        let adaptive_cfg = if adaptive {
            let cfg = AdaptiveConfig::new(weights, p, spec.alpha)?;
            let crit = critical_value(&cfg)?;
            Some((cfg, crit))
        } else {
            None
        };
        for (gi, &gamma) in spec.gamma_ladder.iter().enumerate() {
            let g: Vec<Complex64> = f.iter().zip(&phi).map(|(a, b)| a + b * gamma).collect();
            let tail_f: f64 = f[big_n..].iter().map(|z| z.norm_sqr()).sum();
            let tail_g: f64 = g[big_n..].iter().map(|z| z.norm_sqr()).sum();
            let decisions = par_map(spec.reps, |r| -> Result<bool> {
                let mut rng = rng::stream(spec.seed, &[tag, point as u64, gi as u64, r as u64]);
                let sigma = if adaptive {
                    spec.s_fixed.unwrap_or_else(|| rng.gen_range(1.0..4.0)) / (n as f64).sqrt()
                } else {
                    (n as f64).powf(-0.5)
                };
                let tau = if spec.with_shift { rng.gen::<f64>() * TAU } else { 0.0 };
                let noise = sigma * spec.noise_scale;
                let ya: Vec<Complex64> =
                    f[..big_n].iter().map(|&c| c + rng::complex_normal(&mut rng) * noise).collect();
                let yb: Vec<Complex64> = g[..big_n]
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        c * Complex64::from_polar(1.0, (i + 1) as f64 * tau) + rng::complex_normal(&mut rng) * noise
                    })
                    .collect();
                match &adaptive_cfg {
                    None => {
                        let a = SpectralObservation::scalar(ya, sigma)?;
                        let b = SpectralObservation::scalar(yb, sigma)?;
                        Ok(run_test(&a, &b, &known)?.reject)
                    }
                    Some((cfg, crit)) => {
                        let high = if noise > 0.0 {
                            let lambda = (tail_f + tail_g) / (noise * noise);
                            noise * noise * noncentral_chi2(&mut rng, 4.0 * (p - big_n) as f64, lambda)
                        } else {
                            tail_f + tail_g
                        };
                        Ok(statistic_tilde_banded(&ya, &yb, high, cfg)?.t_stat >= *crit)
                    }
                }
            })
            .into_iter()
            .collect::<Result<Vec<bool>>>()?;
            let rejected = decisions.iter().filter(|&&d| d).count();
            table.push(vec![
                n.to_string(),
                big_n.to_string(),
                fmt_f64(gamma),
                spec.perturbation.name().into(),
                spec.reps.to_string(),
                rejected.to_string(),
                fmt_f64(rejected as f64 / spec.reps as f64),
                fmt_f64(binomial_se(rejected, spec.reps)),
            ]);
        }
    }
    let ns = table.column_f64("n")?;
    let gs = table.column_f64("gamma")?;
    let pw = table.column_f64("power")?;
    let series = spec
        .n_ladder
        .iter()
        .map(|&n| Series {
            label: format!("n = {n}"),
            points: (0..ns.len()).filter(|&i| ns[i] == n as f64).map(|i| (gs[i], pw[i])).collect(),
        })
        .collect();
    let svg = LinePlot {
        title: format!("Power, {}", spec.kind.name()),
        x_label: "gamma".into(),
        y_label: "proportion of true positives".into(),
        log_x: false,
        y_range: Some((0.0, 1.0)),
        reference: Some(spec.alpha),
        series,
    }
    .render()?;
    let mut report = Report::new(spec.kind);
    report.plots.push((format!("{}.svg", spec.kind.name()), svg));
    report.tables.push((format!("{}.csv", spec.kind.name()), table));
    Ok(report)
}

/// Smallest `γ` at which the tabulated power reaches `level`, linearly
/// interpolated between ladder points; `None` if it never does.
pub fn crossing_gamma(gammas: &[f64], power: &[f64], level: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = gammas.iter().copied().zip(power.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.first()?.1 >= level {
        return Some(pts[0].0);
    }
    pts.windows(2).find(|w| w[0].1 < level && w[1].1 >= level).map(|w| {
        let t = (level - w[0].1) / (w[1].1 - w[0].1);
        w[0].0 + t * (w[1].0 - w[0].0)
    })
}

//! Type-I error under the null: the shifted template plus independent noise.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use super::plot::{LinePlot, Series};
use super::spec::family_text;
use super::{
    adaptive_p, binomial_se, cutoff_for_n, fmt_f64, mean_sd, noncentral_chi2, par_map, ExperimentKind,
    ExperimentSpec, Report, Table,
};
use crate::adaptive::{critical_value, statistic_tilde_banded, AdaptiveConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::shift_test::{run_test, TestConfig};
use crate::spectral::{heavisine_smoothed_coeffs, SpectralObservation};

fn require(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(Error::invalid(format!("spec kind {} is not {}", spec.kind.name(), kind.name())));
    }
    Ok(())
}

/// Draws `(Y, Y#)` on `j = 1…c.len()` with `Y#_j = e^{ijτ*} c_j + noise`.
pub(crate) fn null_pair<R: Rng>(
    rng: &mut R,
    c: &[Complex64],
    tau: f64,
    noise: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let a = c.iter().map(|&cj| cj + rng::complex_normal(rng) * noise).collect();
    let b = c
        .iter()
        .enumerate()
        .map(|(i, &cj)| cj * Complex64::from_polar(1.0, (i + 1) as f64 * tau) + rng::complex_normal(rng) * noise)
        .collect();
    (a, b)
}

fn acceptance_plot(table: &Table, title: &str, column: &str) -> Result<String> {
    let families = table.column("family")?;
    let mut order: Vec<&str> = Vec::new();
    for f in &families {
        if !order.contains(f) {
            order.push(f);
        }
    }
    let n = table.column_f64("n")?;
    let y = table.column_f64(column)?;
    let series = order
        .iter()
        .map(|f| Series {
            label: f.split(':').next().unwrap_or(f).to_string(),
            points: families
                .iter()
                .enumerate()
                .filter(|(_, g)| *g == f)
                .map(|(i, _)| ((n[i] / 20.0).log2(), y[i]))
                .collect(),
        })
        .collect();
    LinePlot {
        title: title.into(),
        x_label: "k (n = 20·2^k)".into(),
        y_label: "proportion of true negatives".into(),
        log_x: false,
        y_range: None,
        reference: Some(1.0 - 0.05),
        series,
    }
    .render()
}

/// Known-noise test under the null for every `n` and weight family.
///
/// CSV columns: `n,sigma,N,family,reps,accepted,p_accept,se,mean_t,sd_t`.
pub fn run_type1_known(spec: &ExperimentSpec) -> Result<Report> {
    require(spec, ExperimentKind::Type1Known)?;
    let mut table = Table::new(&["n", "sigma", "N", "family", "reps", "accepted", "p_accept", "se", "mean_t", "sd_t"]);
    for (point, &n) in spec.n_ladder.iter().enumerate() {
        let sigma = (n as f64).powf(-0.5);
        let big_n = cutoff_for_n(n);
        let c = heavisine_smoothed_coeffs(big_n)?.into_coeffs().remove(0);
        let cfgs = spec
            .families
            .iter()
            .map(|f| TestConfig::new(f.build(big_n)?, spec.alpha))
            .collect::<Result<Vec<_>>>()?;
        let results = par_map(spec.reps, |r| -> Result<Vec<(bool, f64)>> {
            let mut rng = rng::stream(spec.seed, &[ExperimentKind::Type1Known.tag(), point as u64, r as u64]);
            let tau: f64 = rng.gen::<f64>() * TAU;
            let (ya, yb) = null_pair(&mut rng, &c, tau, sigma * spec.noise_scale);
            let a = SpectralObservation::scalar(ya, sigma)?;
            let b = SpectralObservation::scalar(yb, sigma)?;
            cfgs.iter()
                .map(|cfg| {
                    let out = run_test(&a, &b, cfg)?;
                    Ok((!out.reject, out.t_normalized))
                })
                .collect()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for (fi, fam) in spec.families.iter().enumerate() {
            let accepted = results.iter().filter(|r| r[fi].0).count();
            let t: Vec<f64> = results.iter().map(|r| r[fi].1).collect();
            let (mt, st) = mean_sd(&t);
            table.push(vec![
                n.to_string(),
                fmt_f64(sigma),
                big_n.to_string(),
                family_text(fam),
                spec.reps.to_string(),
                accepted.to_string(),
                fmt_f64(accepted as f64 / spec.reps as f64),
                fmt_f64(binomial_se(accepted, spec.reps)),
                fmt_f64(mt),
                fmt_f64(st),
            ]);
        }
    }
    let mut report = Report::new(ExperimentKind::Type1Known);
    report.plots.push((
        "type1_known.svg".into(),
        acceptance_plot(&table, "Type I, known noise level", "p_accept")?,
    ));
    report.tables.push(("type1_known.csv".into(), table));
    Ok(report)
}

/// Adaptive test under the null with `σ* = s/√n`, `s ~ U[1, 4]` (or
/// fixed), `N = ⌈50 n^{1/4}⌉` and `p = ⌈2N^{3/2}⌉`.
///
/// Coefficients beyond the support enter the statistic only through their
/// total energy, which is drawn exactly as `σ*² · χ²_{4(p−N)}(λ)` with
/// `λ = 2 Σ_{N<j≤p} |c_j|² / σ*²`.
///
/// CSV columns: `n,N,p,family,s,reps,rejected,p_reject,p_accept,se,critical`.
pub fn run_type1_adaptive(spec: &ExperimentSpec) -> Result<Report> {
    require(spec, ExperimentKind::Type1Adaptive)?;
    let mut table = Table::new(&["n", "N", "p", "family", "s", "reps", "rejected", "p_reject", "p_accept", "se", "critical"]);
    for (point, &n) in spec.n_ladder.iter().enumerate() {
        let big_n = cutoff_for_n(n);
        let p = adaptive_p(big_n);
        let full = heavisine_smoothed_coeffs(p)?.into_coeffs().remove(0);
        let c = &full[..big_n];
        let tail_energy: f64 = full[big_n..].iter().map(|z| z.norm_sqr()).sum();
        let cfgs = spec
            .families
            .iter()
            .map(|f| {
                let cfg = AdaptiveConfig::new(f.build(big_n)?, p, spec.alpha)?;
                let crit = critical_value(&cfg)?;
                Ok((cfg, crit))
            })
            .collect::<Result<Vec<_>>>()?;
        let results = par_map(spec.reps, |r| -> Result<Vec<bool>> {
            let mut rng = rng::stream(spec.seed, &[ExperimentKind::Type1Adaptive.tag(), point as u64, r as u64]);
            let s = spec.s_fixed.unwrap_or_else(|| rng.gen_range(1.0..4.0));
            let sigma = s / (n as f64).sqrt();
            let tau: f64 = rng.gen::<f64>() * TAU;
            let noise = sigma * spec.noise_scale;
            let (ya, yb) = null_pair(&mut rng, c, tau, noise);
            let high = if noise > 0.0 {
                noise * noise * noncentral_chi2(&mut rng, 4.0 * (p - big_n) as f64, 2.0 * tail_energy / (noise * noise))
            } else {
                2.0 * tail_energy
            };
            cfgs.iter()
                .map(|(cfg, crit)| Ok(statistic_tilde_banded(&ya, &yb, high, cfg)?.t_stat >= *crit))
                .collect()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for (fi, fam) in spec.families.iter().enumerate() {
            let rejected = results.iter().filter(|r| r[fi]).count();
            let pr = rejected as f64 / spec.reps as f64;
            table.push(vec![
                n.to_string(),
                big_n.to_string(),
                p.to_string(),
                family_text(fam),
                spec.s_fixed.map_or("uniform:1:4".into(), fmt_f64),
                spec.reps.to_string(),
                rejected.to_string(),
                fmt_f64(pr),
                fmt_f64(1.0 - pr),
                fmt_f64(binomial_se(rejected, spec.reps)),
                fmt_f64(cfgs[fi].1),
            ]);
        }
    }
    let mut report = Report::new(ExperimentKind::Type1Adaptive);
    report.plots.push((
        "type1_adaptive.svg".into(),
        acceptance_plot(&table, "Type I, adaptive test", "p_accept")?,
    ));
    report.tables.push(("type1_adaptive.csv".into(), table));
    Ok(report)
}

//! Accuracy of the shift estimate `τ̂` as the noise level shrinks.

use std::f64::consts::TAU;

use rand::Rng;

use super::plot::{LinePlot, Series};
use super::type1::null_pair;
use super::{circular_distance, cutoff_for_sigma, fmt_f64, par_map, quantile_sorted, sorted, Check, ExperimentKind, ExperimentSpec, Report, Table};
use crate::error::{Error, Result};
use crate::rng;
use crate::shift_test::{statistic_delta, TestConfig};
use crate::spectral::{heavisine_smoothed_coeffs, SpectralObservation};
use crate::weights::WeightSequence;

/// Median circular error `|τ̂ − τ*|` under the null for each `σ*`, with
/// `N = ⌈50 σ*^{−1/2}⌉` and projection weights.
///
/// CSV columns: `sigma,N,reps,median_err,q90_err,max_err`.
pub fn run_tau_rate(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    if spec.kind != ExperimentKind::TauRate {
        return Err(Error::invalid("spec kind is not tau_rate"));
    }
    let mut report = Report::new(ExperimentKind::TauRate);
    let mut table = Table::new(&["sigma", "N", "reps", "median_err", "q90_err", "max_err"]);
    let mut medians = Vec::new();
    for (point, &sigma) in spec.sigma_ladder.iter().enumerate() {
        let big_n = cutoff_for_sigma(sigma);
        let c = heavisine_smoothed_coeffs(big_n)?.into_coeffs().remove(0);
        if c[0].norm() == 0.0 {
            report.warnings.push(format!("c_1 = 0 at sigma = {sigma}: the rate requires |c_1| > 0"));
        }
        let cfg = TestConfig::new(WeightSequence::projection(big_n)?, spec.alpha)?;
        let errors = par_map(spec.reps, |r| -> Result<f64> {
            let mut rng = rng::stream(spec.seed, &[ExperimentKind::TauRate.tag(), point as u64, r as u64]);
            let tau: f64 = rng.gen::<f64>() * TAU;
            let (ya, yb) = null_pair(&mut rng, &c, tau, sigma * spec.noise_scale);
            let a = SpectralObservation::scalar(ya, sigma)?;
            let b = SpectralObservation::scalar(yb, sigma)?;
            let (_, tau_hat) = statistic_delta(&a, &b, &cfg)?;
            Ok(circular_distance(tau_hat, tau))
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let s = sorted(&errors);
        let med = quantile_sorted(&s, 0.5);
        medians.push((sigma, med));
        table.push(vec![
            fmt_f64(sigma),
            big_n.to_string(),
            spec.reps.to_string(),
            fmt_f64(med),
            fmt_f64(quantile_sorted(&s, 0.9)),
            fmt_f64(*s.last().expect("reps >= 1")),
        ]);
    }
    let mut order = medians.clone();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = order.windows(2).all(|w| w[1].1 < w[0].1);
    report.checks.push(Check {
        name: "median error strictly decreases with sigma".into(),
        passed: decreasing,
        detail: order.iter().map(|(s, m)| format!("{s}:{m:.3e}")).collect::<Vec<_>>().join(" "),
    });
    report.plots.push((
        "tau_rate.svg".into(),
        LinePlot {
            title: "Median shift error".into(),
            x_label: "sigma (log scale)".into(),
            y_label: "median |tau_hat - tau|".into(),
            log_x: true,
            y_range: None,
            reference: None,
            series: vec![Series { label: "median".into(), points: medians }],
        }
        .render()?,
    ));
    report.tables.push(("tau_rate.csv".into(), table));
    Ok(report)
}

//! Keypoint matching on a noisy image pair related by a quarter turn.

use super::plot::{BoxPlot, BoxStats};
use super::{binomial_se, fmt_f64, mean_sd, par_map, quantile_sorted, sorted, Check, ExperimentKind, ExperimentSpec, Report, Table};
use crate::error::{Error, Result};
use crate::loft::{add_gaussian_noise, estimate_noise, sample_keypoints, GrayImage, LoftConfig, LoftSampler};
use crate::rng;

/// Offset of the false partner from the true one.
pub const FALSE_OFFSET: usize = 10;
/// Minimum distance between keypoints, in pixels.
pub const MIN_SEPARATION: f64 = 5.0;

const PAIRS: [&str; 2] = ["true", "false"];
const PATHS: [&str; 2] = ["known", "estimated"];

#[derive(Debug, Clone, Copy)]
struct Sample {
    x: usize,
    y: usize,
    rep: usize,
    /// Indexed by `[pair][path]`: `(Δ, τ̂, T)`.
    stats: [[(f64, f64, f64); 2]; 2],
}

/// Keypoint region of `a` for which the disc, its true partner and its
/// false partner all lie inside the images.
fn keypoint_region(a: &GrayImage, r: usize) -> Result<((usize, usize), (usize, usize))> {
    let (w, h) = (a.width(), a.height());
    let margin = r + FALSE_OFFSET;
    if w < margin + r + 1 || h < margin + r + 1 {
        return Err(Error::invalid("images too small for the keypoint discs"));
    }
    Ok(((margin, w - r - 1), (r, h - margin - 1)))
}

struct Group {
    t: Vec<f64>,
    delta: Vec<f64>,
    accepted: usize,
}

/// For each noise level and noise replicate: adds independent noise to
/// both images, samples keypoints in `a`, and tests each against its
/// quarter-turn partner in `b` (true pair) and that partner moved by
/// `(10, 10)` (false pair), once with the known σ and once with
/// Immerkær's estimate from each noisy image.
///
/// Tables: `loft_eval.csv` with columns
/// `sigma,pair,path,count,mean_t,sd_t,q05_t,q25_t,median_t,q75_t,q95_t,accepted,p_accept,se,median_delta`,
/// and `loft_samples_sigma_{σ}.csv` with one row per keypoint.
pub fn run_loft_eval(spec: &ExperimentSpec, a: &GrayImage, b: &GrayImage) -> Result<Report> {
    spec.validate()?;
    if spec.kind != ExperimentKind::LoftEval {
        return Err(Error::invalid("spec kind is not loft_eval"));
    }
    if b.width() != a.height() || b.height() != a.width() {
        return Err(Error::invalid("second image must have the transposed dimensions of the first"));
    }
    let cfg = LoftConfig::default();
    let sampler = LoftSampler::new(cfg)?;
    let (xr, yr) = keypoint_region(a, cfg.radius)?;
    let tag = ExperimentKind::LoftEval.tag();
    let mut report = Report::new(ExperimentKind::LoftEval);
    let mut summary = Table::new(&[
        "sigma", "pair", "path", "count", "mean_t", "sd_t", "q05_t", "q25_t", "median_t", "q75_t", "q95_t",
        "accepted", "p_accept", "se", "median_delta",
    ]);
    let mut sample_tables = Vec::new();
    let mut boxes = Vec::new();
    let mut groups_at = Vec::new();

    for (si, &sigma) in spec.sigma_ladder.iter().enumerate() {
        let mut samples: Vec<Sample> = Vec::new();
        for rep in 0..spec.noise_reps {
            let path = |leaf: u64| rng::derive_seed(spec.seed, &[tag, si as u64, rep as u64, leaf]);
            let na = add_gaussian_noise(a, sigma, path(0))?;
            let nb = add_gaussian_noise(b, sigma, path(1))?;
            let est = (estimate_noise(&na)?, estimate_noise(&nb)?);
            let points = sample_keypoints(xr, yr, spec.keypoints, MIN_SEPARATION, path(2))?;
            if points.len() < spec.keypoints {
                report.warnings.push(format!(
                    "sigma = {sigma}, replicate {rep}: only {} of {} keypoints fit at {MIN_SEPARATION} px separation",
                    points.len(),
                    spec.keypoints
                ));
            }
            let rows = par_map(points.len(), |i| -> Result<Sample> {
                let p = points[i];
                let da = sampler.descriptor(&na, p)?;
                let q = a.rot90_point(p);
                let partners = [q, (q.0 + FALSE_OFFSET, q.1 + FALSE_OFFSET)];
                let mut stats = [[(0.0, 0.0, 0.0); 2]; 2];
                for (pi, &c) in partners.iter().enumerate() {
                    let db = sampler.descriptor(&nb, c)?;
                    let known = sampler.match_statistic(&da, &db, sigma)?;
                    let estimated = sampler.match_statistic_unequal(&da, &db, est.0, est.1)?;
                    for (k, m) in [known, estimated].into_iter().enumerate() {
                        stats[pi][k] = (m.delta, m.tau_hat, m.t_normalized);
                    }
                }
                Ok(Sample { x: p.0, y: p.1, rep, stats })
            });
            samples.extend(rows.into_iter().collect::<Result<Vec<_>>>()?);
        }

        let mut detail = Table::new(&["rep", "x", "y", "pair", "path", "delta", "tau_hat", "t"]);
        for s in &samples {
            for (pi, pair) in PAIRS.iter().enumerate() {
                for (k, path) in PATHS.iter().enumerate() {
                    let (d, tau, t) = s.stats[pi][k];
                    detail.push(vec![
                        s.rep.to_string(),
                        s.x.to_string(),
                        s.y.to_string(),
                        (*pair).into(),
                        (*path).into(),
                        fmt_f64(d),
                        fmt_f64(tau),
                        fmt_f64(t),
                    ]);
                }
            }
        }
        sample_tables.push((format!("loft_samples_sigma_{}.csv", fmt_f64(sigma)), detail));

        let mut groups = Vec::new();
        for (pi, pair) in PAIRS.iter().enumerate() {
            for (k, path) in PATHS.iter().enumerate() {
                let t: Vec<f64> = samples.iter().map(|s| s.stats[pi][k].2).collect();
                let delta: Vec<f64> = samples.iter().map(|s| s.stats[pi][k].0).collect();
                let accepted = t.iter().filter(|&&v| v <= spec.lambda).count();
                let st = sorted(&t);
                let (m, sd) = mean_sd(&t);
                let q = [0.05, 0.25, 0.5, 0.75, 0.95].map(|p| quantile_sorted(&st, p));
                let med_delta = quantile_sorted(&sorted(&delta), 0.5);
                summary.push(vec![
                    fmt_f64(sigma),
                    (*pair).into(),
                    (*path).into(),
                    t.len().to_string(),
                    fmt_f64(m),
                    fmt_f64(sd),
                    fmt_f64(q[0]),
                    fmt_f64(q[1]),
                    fmt_f64(q[2]),
                    fmt_f64(q[3]),
                    fmt_f64(q[4]),
                    accepted.to_string(),
                    fmt_f64(accepted as f64 / t.len() as f64),
                    fmt_f64(binomial_se(accepted, t.len())),
                    fmt_f64(med_delta),
                ]);
                if *path == "known" {
                    boxes.push(BoxStats { label: format!("σ={} {pair}", fmt_f64(sigma)), q });
                }
                groups.push(Group { t, delta, accepted });
            }
        }
        groups_at.push((sigma, groups));
    }

    // Group order within a noise level: true/known, true/estimated,
    // false/known, false/estimated.
    for (sigma, g) in &groups_at {
        if (*sigma - 30.0).abs() < 1e-12 {
            let (m, sd) = mean_sd(&g[0].t);
            report.checks.push(Check {
                name: "true_match_mean".into(),
                passed: m.abs() <= 0.1,
                detail: format!("sigma 30 true-match mean T {m:.4}"),
            });
            report.checks.push(Check {
                name: "true_match_sd".into(),
                passed: (sd - 1.0).abs() <= 0.1,
                detail: format!("sigma 30 true-match SD of T {sd:.4}"),
            });
            let rejected = 1.0 - g[2].accepted as f64 / g[2].t.len() as f64;
            report.checks.push(Check {
                name: "false_match_rejection".into(),
                passed: rejected >= 0.99,
                detail: format!("sigma 30 false matches rejected at lambda {}: {rejected:.4}", spec.lambda),
            });
            let known = quantile_sorted(&sorted(&g[0].delta), 0.5);
            let est = quantile_sorted(&sorted(&g[1].delta), 0.5);
            let change = (est - known).abs() / known.abs();
            report.checks.push(Check {
                name: "estimated_sigma_median".into(),
                passed: change <= 0.05,
                detail: format!("true-match median delta {known:.3} known vs {est:.3} estimated ({:.2}%)", 100.0 * change),
            });
        }
        if (*sigma - 60.0).abs() < 1e-12 {
            let acc = g[2].accepted as f64 / g[2].t.len() as f64;
            report.checks.push(Check {
                name: "false_match_acceptance_60".into(),
                passed: (0.02..=0.09).contains(&acc),
                detail: format!("sigma 60 false-match acceptance {acc:.4}"),
            });
        }
    }

    report.tables.push(("loft_eval.csv".into(), summary));
    report.tables.extend(sample_tables);
    let plot = BoxPlot {
        title: "LoFT normalized match statistic".into(),
        y_label: "T".into(),
        reference: Some(spec.lambda),
        boxes,
    }
    .render()?;
    report.plots.push(("loft_eval.svg".into(), plot));
    Ok(report)
}

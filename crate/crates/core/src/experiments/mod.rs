//! Monte Carlo harness: Type-I error, power, descriptor matching, tail
//! bounds and the shift-estimation rate.
//!
//! Every random draw comes from a stream addressed by
//! `(seed, kind, ladder point, replicate, …)` (see [`crate::rng`]), and
//! per-replicate results are collected in replicate order before being
//! reduced, so results do not depend on the worker count.

mod bounds;
mod loft_eval;
pub mod plot;
mod power;
mod spec;
mod table;
mod tau_rate;
mod type1;

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loft::GrayImage;

pub use bounds::{run_tail_bounds, BoundCase, BoundKind};
pub use loft_eval::run_loft_eval;
pub use power::{crossing_gamma, run_power};
pub use spec::{family_text, parse_family, ExperimentKind, ExperimentSpec};
pub use table::{fmt_f64, Table};
pub use tau_rate::run_tau_rate;
pub use type1::{run_type1_adaptive, run_type1_known};

/// A named pass/fail assertion evaluated by an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Output of one experiment: tables, plots, warnings and checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub kind: ExperimentKind,
    pub tables: Vec<(String, Table)>,
    pub plots: Vec<(String, String)>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(kind: ExperimentKind) -> Self {
        Self { kind, tables: Vec::new(), plots: Vec::new(), warnings: Vec::new(), checks: Vec::new() }
    }

    /// The table written under `name`.
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// The first (summary) table.
    pub fn summary(&self) -> &Table {
        &self.tables[0].1
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Writes every table and plot into `dir`, returning the paths.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for (name, table) in &self.tables {
            let p = dir.join(name);
            table.write(&p)?;
            paths.push(p);
        }
        for (name, svg) in &self.plots {
            let p = dir.join(name);
            fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Runs `spec`. LoFT evaluation uses `images` when given and the bundled
/// texture pair otherwise.
pub fn run(spec: &ExperimentSpec, images: Option<(&GrayImage, &GrayImage)>) -> Result<Report> {
    use ExperimentKind::*;
    match spec.kind {
        Type1Known => run_type1_known(spec),
        Type1Adaptive => run_type1_adaptive(spec),
        PowerSmoothCos | PowerSmoothRational | PowerNonsmooth | PowerAdaptive => run_power(spec),
        LoftEval => match images {
            Some((a, b)) => run_loft_eval(spec, a, b),
            None => {
                let (a, b) = crate::loft::bundled_texture_pair();
                run_loft_eval(spec, &a, &b)
            }
        },
        TailBounds => run_tail_bounds(spec),
        TauRate => run_tau_rate(spec),
    }
}

/// Cutoff `N = ⌈50 n^{1/4}⌉`, i.e. `⌈50 σ*^{−1/2}⌉` for `σ* = n^{−1/2}`.
pub fn cutoff_for_n(n: u64) -> usize {
    (50.0 * (n as f64).powf(0.25)).ceil() as usize
}

/// Cutoff `⌈50 σ^{−1/2}⌉`.
pub fn cutoff_for_sigma(sigma: f64) -> usize {
    (50.0 / sigma.sqrt()).ceil() as usize
}

/// Number of coefficients of the adaptive test, `p = ⌈2N^{3/2}⌉`.
pub fn adaptive_p(n: usize) -> usize {
    (2.0 * (n as f64).powf(1.5)).ceil() as usize
}

/// Binomial standard error of a proportion `k / n`.
pub fn binomial_se(k: usize, n: usize) -> f64 {
    let p = k as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sorted copy of `v` (NaNs last).
pub fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Mean and sample standard deviation.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Evaluates `f(0..reps)` in parallel and returns results in index order.
pub(crate) fn par_map<T: Send>(reps: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..reps).into_par_iter().map(f).collect()
}

/// Noncentral `χ²_k(λ)` as `(Z + √λ)² + χ²_{k−1}`.
pub(crate) fn noncentral_chi2<R: Rng + ?Sized>(rng: &mut R, dof: f64, lambda: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    let lead = (z + lambda.sqrt()).powi(2);
    if dof > 1.0 {
        lead + Gamma::new((dof - 1.0) / 2.0, 2.0).expect("positive shape").sample(rng)
    } else {
        lead
    }
}

/// Distance on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn ladder_helpers() {
        assert_eq!(cutoff_for_n(16), 100);
        assert_eq!(cutoff_for_n(655_360), 1423);
        assert_eq!(cutoff_for_sigma(0.25), 100);
        assert_eq!(adaptive_p(16), 128);
        assert_eq!(adaptive_p(2), 6);
        assert!((binomial_se(5, 100) - (0.05f64 * 0.95 / 100.0).sqrt()).abs() < 1e-15);
        assert!((circular_distance(0.1, 6.2) - (0.1 + std::f64::consts::TAU - 6.2)).abs() < 1e-12);
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noncentral_chi2_moments() {
        // Mean k + λ, variance 2(k + 2λ).
        let mut r = rng::stream(3, &[]);
        let (k, lam) = (12.0, 7.5);
        let draws: Vec<f64> = (0..200_000).map(|_| noncentral_chi2(&mut r, k, lam)).collect();
        let (m, s) = mean_sd(&draws);
        assert!((m - (k + lam)).abs() < 0.05, "{m}");
        assert!((s * s / (2.0 * (k + 2.0 * lam)) - 1.0).abs() < 0.02, "{s}");
    }

    #[test]
    fn par_map_keeps_order() {
        let v = par_map(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}

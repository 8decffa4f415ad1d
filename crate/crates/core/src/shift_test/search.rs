//! Global maximization of the profile `M(τ) = Re Σ_j P_j e^{ijτ}`.
//!
//! `M` is a trigonometric polynomial of degree `N`. It is tabulated on
//! `G = oversampling·N` equispaced points by one inverse FFT, then the
//! promising grid maxima are refined locally: Newton's method inside the
//! bracket `[τ_{k−1}, τ_{k+1}]`, with golden-section search as a fallback
//! whenever Newton leaves the bracket or meets non-negative curvature.

use std::cell::RefCell;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// At most this many grid maxima are refined.
const MAX_CANDIDATES: usize = 8;
/// Phases are recomputed exactly every this many recurrence steps.
const RESYNC: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Maximum {
    pub tau: f64,
    pub value: f64,
}

/// Coefficient products `P_j`, stored at index `j − 1`.
#[derive(Debug, Clone)]
pub(crate) struct Profile {
    p: Vec<Complex64>,
}

impl Profile {
    pub fn new(p: Vec<Complex64>) -> Self {
        Self { p }
    }

    pub fn degree(&self) -> usize {
        self.p.len()
    }

    /// `M(τ)`.
    pub fn value(&self, tau: f64) -> f64 {
        self.with_derivatives(tau).0
    }

    /// `(M, M', M'')` at `τ`, with `M' = −Im Σ j P_j e^{ijτ}` and
    /// `M'' = −Re Σ j² P_j e^{ijτ}`.
    pub fn with_derivatives(&self, tau: f64) -> (f64, f64, f64) {
        let step = Complex64::from_polar(1.0, tau);
        let mut phase = step;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (i, &p) in self.p.iter().enumerate() {
            let j = (i + 1) as f64;
            if i > 0 {
                phase = if i % RESYNC == 0 {
                    Complex64::from_polar(1.0, j * tau)
                } else {
                    phase * step
                };
            }
            let term = p * phase;
            m0 += term.re;
            m1 -= j * term.im;
            m2 -= j * j * term.re;
        }
        (m0, m1, m2)
    }

    /// `M(2πk/G)` for `k = 0…G−1`.
    pub fn grid_values(&self, grid: usize) -> Vec<f64> {
        debug_assert!(grid > self.p.len());
        let mut buf = vec![Complex64::default(); grid];
        buf[1..=self.p.len()].copy_from_slice(&self.p);
        let fft = PLANNER.with(|pl| pl.borrow_mut().plan_fft_inverse(grid));
        fft.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// `Σ j² |P_j|`, a bound on `|M''|`.
    fn curvature_bound(&self) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(i, p)| ((i + 1) as f64).powi(2) * p.norm())
            .sum()
    }

    fn scale(&self) -> f64 {
        self.p.iter().map(|p| p.norm()).sum()
    }

    /// Global maximizer with `τ ∈ [0, 2π)`; among numerically tied maxima
    /// the smallest `τ` wins.
    pub fn maximize(&self, oversampling: usize, tol: f64) -> Maximum {
        let n = self.degree();
        if n == 0 || self.scale() == 0.0 {
            return Maximum { tau: 0.0, value: 0.0 };
        }
        let grid = oversampling.max(4) * n;
        let h = TAU / grid as f64;
        let values = self.grid_values(grid);
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // A grid point lies within h/2 of the true maximizer, so the grid
        // underestimates the maximum by at most |M''|·h²/8.
        let slack = self.curvature_bound() * h * h / 8.0;
        let mut cands: Vec<usize> = (0..grid)
            .filter(|&k| {
                let v = values[k];
                v >= best - slack
                    && v >= values[(k + grid - 1) % grid]
                    && v >= values[(k + 1) % grid]
            })
            .collect();
        cands.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        cands.truncate(MAX_CANDIDATES);

        let refined: Vec<Maximum> = cands
            .iter()
            .map(|&k| {
                let centre = k as f64 * h;
                let exact = Maximum { tau: centre, value: self.value(centre) };
                let local = self.refine(centre, h, tol);
                let chosen = if local.value > exact.value { local } else { exact };
                Maximum { tau: wrap(chosen.tau, tol), value: chosen.value }
            })
            .collect();
        let top = refined.iter().map(|m| m.value).fold(f64::NEG_INFINITY, f64::max);
        let tie = 1e-12 * self.scale();
        refined
            .into_iter()
            .filter(|m| m.value >= top - tie)
            .min_by(|a, b| a.tau.total_cmp(&b.tau))
            .expect("at least one candidate")
    }

    fn refine(&self, centre: f64, h: f64, tol: f64) -> Maximum {
        let (lo, hi) = (centre - h, centre + h);
        if let Some(m) = self.newton(centre, lo, hi, tol) {
            return m;
        }
        let tau = self.golden(lo, hi, tol);
        self.newton(tau, lo, hi, tol)
            .unwrap_or(Maximum { tau, value: self.value(tau) })
    }

    fn newton(&self, start: f64, lo: f64, hi: f64, tol: f64) -> Option<Maximum> {
        let mut tau = start;
        for _ in 0..60 {
            let (_, d1, d2) = self.with_derivatives(tau);
            if !(d2 < 0.0) {
                return None;
            }
            let step = -d1 / d2;
            let next = tau + step;
            if !(lo..=hi).contains(&next) {
                return None;
            }
            tau = next;
            if step.abs() <= tol {
                return Some(Maximum { tau, value: self.value(tau) });
            }
        }
        None
    }

    fn golden(&self, mut a: f64, mut b: f64, tol: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let mut f1 = self.value(x1);
        let mut f2 = self.value(x2);
        while b - a > tol {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = self.value(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = self.value(x2);
            }
        }
        0.5 * (a + b)
    }
}

/// Maps `τ` into `[0, 2π)`, snapping values within `tol` of `2π` to 0.
pub(crate) fn wrap(tau: f64, tol: f64) -> f64 {
    let t = tau.rem_euclid(TAU);
    if TAU - t <= tol {
        0.0
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_profile(n: usize, seed: u64) -> Profile {
        let mut rng = crate::rng::stream(seed, &[]);
        Profile::new(
            (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    }

    fn direct(p: &Profile, tau: f64) -> f64 {
        p.p.iter()
            .enumerate()
            .map(|(i, c)| (c * Complex64::from_polar(1.0, (i + 1) as f64 * tau)).re)
            .sum()
    }

    #[test]
    fn fft_grid_matches_direct_sum() {
        for (n, seed) in [(1, 1), (7, 2), (64, 3), (1423, 4)] {
            let p = random_profile(n, seed);
            let g = 8 * n;
            let vals = p.grid_values(g);
            for k in (0..g).step_by((g / 97).max(1)) {
                let d = direct(&p, TAU * k as f64 / g as f64);
                assert!((vals[k] - d).abs() < 1e-10, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = random_profile(300, 9);
        let tau = 1.234;
        let (m, d1, d2) = p.with_derivatives(tau);
        assert!((m - direct(&p, tau)).abs() < 1e-11);
        let e = 1e-5;
        let fd1 = (direct(&p, tau + e) - direct(&p, tau - e)) / (2.0 * e);
        let fd2 = (direct(&p, tau + e) - 2.0 * m + direct(&p, tau - e)) / (e * e);
        assert!((d1 - fd1).abs() < 1e-4 * (1.0 + d1.abs()));
        assert!((d2 - fd2).abs() < 1e-2 * (1.0 + d2.abs()));
    }

    #[test]
    fn symmetric_double_maximum_takes_smallest() {
        // M = cos τ − cos 2τ peaks at cos τ = 1/4, twice.
        let p = Profile::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let m = p.maximize(8, 1e-12);
        assert!((m.tau - 0.25f64.acos()).abs() < 1e-10);
        assert!((m.value - 1.125).abs() < 1e-14);
    }

    #[test]
    fn flat_profile_returns_zero() {
        let p = Profile::new(vec![Complex64::default(); 5]);
        assert_eq!(p.maximize(8, 1e-12), Maximum { tau: 0.0, value: 0.0 });
    }

    #[test]
    fn beats_dense_grid() {
        for seed in 0..20 {
            let p = random_profile(1 + seed as usize, 100 + seed);
            let m = p.maximize(8, 1e-12);
            let dense = (0..200_000)
                .map(|k| direct(&p, TAU * k as f64 / 200_000.0))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(m.value >= dense - 1e-12, "seed {seed}");
            assert!(m.value - dense < 1e-6);
        }
    }

    #[test]
    fn golden_finds_interior_peak() {
        let p = Profile::new(vec![Complex64::new(0.0, -1.0)]); // M = sin τ
        let t = p.golden(1.0, 2.0, 1e-12);
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn wrap_snaps_near_full_turn() {
        assert_eq!(wrap(-1e-14, 1e-12), 0.0);
        assert!((wrap(-1.0, 1e-12) - (TAU - 1.0)).abs() < 1e-15);
        assert!((wrap(7.0, 1e-12) - (7.0 - TAU)).abs() < 1e-15);
    }
}

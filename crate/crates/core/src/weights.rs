//! Shrinkage weights `ν_j ∈ [0, 1]` with finite support.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// How a weight sequence was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFamily {
    Projection,
    Tikhonov { kappa: f64, mu: f64 },
    Pinsker { mu: f64 },
    Custom,
}

impl WeightFamily {
    pub fn name(&self) -> &'static str {
        match self {
            WeightFamily::Projection => "projection",
            WeightFamily::Tikhonov { .. } => "tikhonov",
            WeightFamily::Pinsker { .. } => "pinsker",
            WeightFamily::Custom => "custom",
        }
    }

    /// Builds the family's weights for cutoff `n`. Custom weights cannot be
    /// rebuilt from a cutoff.
    pub fn build(&self, n: usize) -> Result<WeightSequence> {
        match *self {
            WeightFamily::Projection => WeightSequence::projection(n),
            WeightFamily::Tikhonov { kappa, mu } => WeightSequence::tikhonov(n, kappa, mu),
            WeightFamily::Pinsker { mu } => WeightSequence::pinsker(n, mu),
            WeightFamily::Custom => Err(Error::invalid("custom weights need explicit values")),
        }
    }
}

impl fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Weights `(ν_1, …, ν_N)`; `ν_j = 0` for every `j > N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    nu: Vec<f64>,
    family: WeightFamily,
}

/// Outcome of [`WeightSequence::check_conditions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// `ν_1 = 1` and `ν_j = 0` beyond the support.
    pub a_holds: bool,
    /// `Σ ν_j² ≥ c·N`.
    pub b_holds: bool,
    /// `min{j : ν_j < c̄}`, or `N + 1` if every stored weight is at least `c̄`.
    pub c_index: usize,
}

impl WeightSequence {
    /// `ν_j = 1{j ≤ N}`.
    pub fn projection(n: usize) -> Result<Self> {
        positive_cutoff(n)?;
        Ok(Self {
            nu: vec![1.0; n],
            family: WeightFamily::Projection,
        })
    }

    /// `ν_j = [1 + (j/(κN))^μ]⁻¹ · 1{j ≤ N}`.
    pub fn tikhonov(n: usize, kappa: f64, mu: f64) -> Result<Self> {
        positive_cutoff(n)?;
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("Tikhonov kappa must be positive, got {kappa}")));
        }
        if !(mu > 1.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("Tikhonov mu must exceed 1, got {mu}")));
        }
        let scale = kappa * n as f64;
        let nu = (1..=n)
            .map(|j| 1.0 / (1.0 + (j as f64 / scale).powf(mu)))
            .collect();
        Ok(Self {
            nu,
            family: WeightFamily::Tikhonov { kappa, mu },
        })
    }

    /// `ν_j = max(0, 1 − (j/N)^μ)`. `N = 1` gives only zeros and is rejected.
    pub fn pinsker(n: usize, mu: f64) -> Result<Self> {
        positive_cutoff(n)?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("Pinsker mu must be positive, got {mu}")));
        }
        if n == 1 {
            return Err(Error::Degenerate("Pinsker weights with N = 1 vanish identically".into()));
        }
        let nf = n as f64;
        let nu = (1..=n)
            .map(|j| (1.0 - (j as f64 / nf).powf(mu)).max(0.0))
            .collect();
        Ok(Self {
            nu,
            family: WeightFamily::Pinsker { mu },
        })
    }

    /// Arbitrary weights; the support is the stored length.
    pub fn custom(nu: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = nu
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::invalid(format!("weight nu_{} = {v} lies outside [0, 1]", i + 1)));
        }
        Ok(Self {
            nu,
            family: WeightFamily::Custom,
        })
    }

    /// Support cutoff `N`.
    pub fn support(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// `ν_j` with `j` counted from 1; zero beyond the support.
    pub fn get(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.nu.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    pub fn l1(&self) -> f64 {
        self.nu.iter().sum()
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    /// `Σ ν_j²`, without the rounding of squaring [`Self::l2`].
    pub fn l2_sq(&self) -> f64 {
        self.nu.iter().map(|v| v * v).sum()
    }

    /// `(‖ν‖₁, ‖ν‖₂)`.
    pub fn norms(&self) -> (f64, f64) {
        (self.l1(), self.l2())
    }

    /// Checks conditions (A) and (B) and reports the finite-`N` proxy for (C).
    pub fn check_conditions(&self, c_lower: f64, c_bar: f64) -> Result<ConditionReport> {
        if !(c_lower > 0.0) {
            return Err(Error::invalid("c_lower must be positive"));
        }
        if !(c_bar > 0.0 && c_bar < 1.0) {
            return Err(Error::invalid("c_bar must lie in (0, 1)"));
        }
        let n = self.support();
        let sum_sq = self.l2_sq();
        let c_index = self
            .nu
            .iter()
            .position(|&v| v < c_bar)
            .map_or(n + 1, |i| i + 1);
        Ok(ConditionReport {
            a_holds: self.nu.first() == Some(&1.0),
            b_holds: sum_sq >= c_lower * n as f64,
            c_index,
        })
    }

    /// Remark-1 degrees of freedom `2‖ν‖₁²/‖ν‖₂²`.
    pub fn chi2_dof(&self) -> Result<f64> {
        let sum_sq = self.l2_sq();
        if sum_sq == 0.0 {
            return Err(Error::Degenerate("all weights vanish".into()));
        }
        Ok(2.0 * self.l1().powi(2) / sum_sq)
    }

    /// One `j,nu` line per stored index.
    pub fn to_file_string(&self) -> String {
        self.nu
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{},{v:.16e}\n", i + 1))
            .collect()
    }

    /// Parses `j,nu` lines with strictly ascending `j`; gaps are zero and
    /// the support ends at the last listed index.
    pub fn parse(text: &str) -> Result<Self> {
        let mut nu = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let (j, v) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(lineno, "expected j,nu"))?;
            let j: usize = j
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad index {j:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad weight {v:?}")))?;
            if j <= nu.len() {
                return Err(Error::parse(lineno, "indices must be positive and ascending"));
            }
            nu.resize(j - 1, 0.0);
            nu.push(v);
        }
        Self::custom(nu)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }
}

fn positive_cutoff(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("support cutoff N must be at least 1"))
    } else {
        Ok(())
    }
}

//! Experiment descriptions and their `key = value` text form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::loft::EMPIRICAL_LAMBDA;
use crate::spectral::SignalKind;
use crate::weights::WeightFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Type1Known,
    Type1Adaptive,
    PowerSmoothCos,
    PowerSmoothRational,
    PowerNonsmooth,
    PowerAdaptive,
    LoftEval,
    TailBounds,
    TauRate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Type1Known,
        ExperimentKind::Type1Adaptive,
        ExperimentKind::PowerSmoothCos,
        ExperimentKind::PowerSmoothRational,
        ExperimentKind::PowerNonsmooth,
        ExperimentKind::PowerAdaptive,
        ExperimentKind::LoftEval,
        ExperimentKind::TailBounds,
        ExperimentKind::TauRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Type1Known => "type1_known",
            ExperimentKind::Type1Adaptive => "type1_adaptive",
            ExperimentKind::PowerSmoothCos => "power_smooth_cos",
            ExperimentKind::PowerSmoothRational => "power_smooth_rational",
            ExperimentKind::PowerNonsmooth => "power_nonsmooth",
            ExperimentKind::PowerAdaptive => "power_adaptive",
            ExperimentKind::LoftEval => "loft_eval",
            ExperimentKind::TailBounds => "tail_bounds",
            ExperimentKind::TauRate => "tau_rate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Stream tag separating the random streams of different kinds.
    pub(crate) fn tag(self) -> u64 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u64 + 1
    }

    /// Perturbation used by the power kinds.
    pub fn default_perturbation(self) -> SignalKind {
        match self {
            ExperimentKind::PowerSmoothRational => SignalKind::RationalPerturbation,
            ExperimentKind::PowerNonsmooth => SignalKind::RationalUnsmoothed,
            _ => SignalKind::Cos4Perturbation,
        }
    }
}

/// Everything an experiment run depends on besides the worker count.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub reps: usize,
    pub n_ladder: Vec<u64>,
    pub gamma_ladder: Vec<f64>,
    /// Image noise levels (LoFT) or noise levels `σ*` (τ rate).
    pub sigma_ladder: Vec<f64>,
    pub alpha: f64,
    pub seed: u64,
    pub families: Vec<WeightFamily>,
    /// Power runs: additionally rotate `f#` by a uniform random shift.
    pub with_shift: bool,
    /// Adaptive runs: fix the noise scale `s` instead of drawing it from
    /// `U[1, 4]`.
    pub s_fixed: Option<f64>,
    /// Multiplies the simulated noise; the statistics keep the nominal level.
    pub noise_scale: f64,
    pub perturbation: SignalKind,
    /// Number of coefficients over which `ϕ` is normalized to the norm of `f`.
    pub norm_len: usize,
    /// LoFT: keypoints per noise draw.
    pub keypoints: usize,
    /// LoFT: independent noise draws pooled per level.
    pub noise_reps: usize,
    pub lambda: f64,
}

fn ladder(k: std::ops::RangeInclusive<u32>, scale: u64) -> Vec<u64> {
    k.map(|k| scale << k).collect()
}

impl ExperimentSpec {
    /// Desk-scale defaults.
    pub fn defaults(kind: ExperimentKind) -> Self {
        use ExperimentKind::*;
        let protocol_gammas: Vec<f64> = (0..=15).map(|l| l as f64 / 10.0).collect();
        let mut spec = Self {
            kind,
            reps: 10_000,
            n_ladder: Vec::new(),
            gamma_ladder: Vec::new(),
            sigma_ladder: Vec::new(),
            alpha: 0.05,
            seed: 1,
            families: vec![WeightFamily::Projection],
            with_shift: false,
            s_fixed: None,
            noise_scale: 1.0,
            perturbation: kind.default_perturbation(),
            norm_len: 1_000_000,
            keypoints: 2000,
            noise_reps: 1,
            lambda: EMPIRICAL_LAMBDA,
        };
        match kind {
            Type1Known | Type1Adaptive => {
                spec.n_ladder = ladder(1..=15, 20);
                spec.families = vec![
                    WeightFamily::Projection,
                    WeightFamily::Tikhonov { kappa: 0.5, mu: 2.0 },
                    WeightFamily::Pinsker { mu: 2.0 },
                ];
            }
            PowerSmoothCos | PowerSmoothRational | PowerNonsmooth => {
                spec.reps = 2000;
                spec.n_ladder = ladder(1..=4, 1);
                spec.gamma_ladder = protocol_gammas;
            }
            PowerAdaptive => {
                spec.reps = 2000;
                spec.n_ladder = ladder(1..=4, 10);
                spec.gamma_ladder = protocol_gammas;
            }
            LoftEval => {
                spec.sigma_ladder = vec![5.0, 10.0, 30.0, 60.0];
            }
            TailBounds => spec.reps = 100_000,
            TauRate => {
                spec.reps = 2000;
                spec.sigma_ladder = vec![0.2, 0.05, 0.0125, 0.003125];
            }
        }
        spec
    }

    /// The replicate counts of the original study.
    pub fn full_scale(kind: ExperimentKind) -> Self {
        let mut spec = Self::defaults(kind);
        spec.apply_full_scale();
        spec
    }

    pub fn apply_full_scale(&mut self) {
        use ExperimentKind::*;
        match self.kind {
            Type1Known | Type1Adaptive => self.reps = 100_000,
            PowerSmoothCos | PowerSmoothRational | PowerNonsmooth | PowerAdaptive => self.reps = 5000,
            LoftEval => self.keypoints = 10_000,
            TailBounds => self.reps = 100_000,
            TauRate => self.reps = 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        crate::shift_test::validate_alpha(self.alpha)?;
        let needs_n = matches!(
            self.kind,
            Type1Known | Type1Adaptive | PowerSmoothCos | PowerSmoothRational | PowerNonsmooth | PowerAdaptive
        );
        if needs_n && (self.n_ladder.is_empty() || self.n_ladder.contains(&0)) {
            return Err(Error::invalid("n_ladder must be a nonempty list of positive integers"));
        }
        let needs_gamma = matches!(self.kind, PowerSmoothCos | PowerSmoothRational | PowerNonsmooth | PowerAdaptive);
        if needs_gamma && (self.gamma_ladder.is_empty() || self.gamma_ladder.iter().any(|g| !g.is_finite())) {
            return Err(Error::invalid("gamma_ladder must be a nonempty list of finite values"));
        }
        if matches!(self.kind, LoftEval | TauRate)
            && (self.sigma_ladder.is_empty() || self.sigma_ladder.iter().any(|s| !(*s > 0.0 && s.is_finite())))
        {
            return Err(Error::invalid("sigma_ladder must be a nonempty list of positive values"));
        }
        if matches!(self.kind, Type1Known | Type1Adaptive) && self.families.is_empty() {
            return Err(Error::invalid("at least one weight family is required"));
        }
        if self.families.contains(&WeightFamily::Custom) {
            return Err(Error::invalid("custom weights cannot be rebuilt per cutoff"));
        }
        if let Some(s) = self.s_fixed {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("s_fixed must be positive"));
            }
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid("noise_scale must be non-negative"));
        }
        if !self.perturbation.is_perturbation() {
            return Err(Error::invalid("perturbation must name a perturbation signal"));
        }
        if self.norm_len == 0 || self.keypoints == 0 || self.noise_reps == 0 {
            return Err(Error::invalid("norm_len, keypoints and noise_reps must be positive"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::invalid("lambda must be finite"));
        }
        Ok(())
    }

    /// Parses the `key = value` format. `kind` is required; other keys
    /// override that kind's defaults. Blank lines and `#` comments are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(idx + 1, format!("expected key = value, got {line:?}")))?;
            pairs.push((idx + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let kind_value = pairs
            .iter()
            .find(|(_, k, _)| k == "kind")
            .ok_or_else(|| Error::parse(0, "missing kind"))?;
        let kind = ExperimentKind::from_name(&kind_value.2)
            .ok_or_else(|| Error::parse(kind_value.0, format!("unknown kind {:?}", kind_value.2)))?;
        let mut spec = Self::defaults(kind);
        let mut seen = std::collections::HashSet::new();
        for (line, key, value) in &pairs {
            if !seen.insert(key.clone()) {
                return Err(Error::parse(*line, format!("duplicate key {key:?}")));
            }
            spec.set(key, value).map_err(|msg| Error::parse(*line, msg))?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str, key: &str) -> std::result::Result<T, String> {
            v.trim().parse().map_err(|_| format!("cannot parse {key} from {v:?}"))
        }
        fn list<T: std::str::FromStr>(v: &str, key: &str) -> std::result::Result<Vec<T>, String> {
            v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(s, key)).collect()
        }
        match key {
            "kind" => {
                if ExperimentKind::from_name(value) != Some(self.kind) {
                    return Err(format!("kind cannot change to {value:?}"));
                }
            }
            "reps" => self.reps = num(value, key)?,
            "n_ladder" => self.n_ladder = list(value, key)?,
            "gamma_ladder" => self.gamma_ladder = list(value, key)?,
            "sigma_ladder" => self.sigma_ladder = list(value, key)?,
            "alpha" => self.alpha = num(value, key)?,
            "seed" => self.seed = num(value, key)?,
            "families" => {
                self.families = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_family(s.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "with_shift" => self.with_shift = num(value, key)?,
            "s_fixed" => {
                self.s_fixed = match value {
                    "none" | "" => None,
                    v => Some(num(v, key)?),
                }
            }
            "noise_scale" => self.noise_scale = num(value, key)?,
            "perturbation" => {
                self.perturbation =
                    SignalKind::from_name(value).ok_or_else(|| format!("unknown perturbation {value:?}"))?
            }
            "norm_len" => self.norm_len = num(value, key)?,
            "keypoints" => self.keypoints = num(value, key)?,
            "noise_reps" => self.noise_reps = num(value, key)?,
            "lambda" => self.lambda = num(value, key)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Text form accepted by [`ExperimentSpec::parse`].
    pub fn to_text(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        }
        let mut out = String::new();
        let _ = writeln!(out, "kind = {}", self.kind.name());
        let _ = writeln!(out, "reps = {}", self.reps);
        let _ = writeln!(out, "n_ladder = {}", join(&self.n_ladder));
        let _ = writeln!(out, "gamma_ladder = {}", join(&self.gamma_ladder));
        let _ = writeln!(out, "sigma_ladder = {}", join(&self.sigma_ladder));
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "seed = {}", self.seed);
        let fams: Vec<String> = self.families.iter().map(family_text).collect();
        let _ = writeln!(out, "families = {}", fams.join(","));
        let _ = writeln!(out, "with_shift = {}", self.with_shift);
        let _ = writeln!(out, "s_fixed = {}", self.s_fixed.map_or("none".into(), |s| s.to_string()));
        let _ = writeln!(out, "noise_scale = {}", self.noise_scale);
        let _ = writeln!(out, "perturbation = {}", self.perturbation.name());
        let _ = writeln!(out, "norm_len = {}", self.norm_len);
        let _ = writeln!(out, "keypoints = {}", self.keypoints);
        let _ = writeln!(out, "noise_reps = {}", self.noise_reps);
        let _ = writeln!(out, "lambda = {}", self.lambda);
        out
    }
}

/// `projection`, `tikhonov:<κ>:<μ>` or `pinsker:<μ>`; bare `tikhonov` and
/// `pinsker` take κ = 1/2, μ = 2.
pub fn parse_family(s: &str) -> std::result::Result<WeightFamily, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |v: &str| v.parse::<f64>().map_err(|_| format!("bad weight parameter {v:?}"));
    match parts.as_slice() {
        ["projection"] => Ok(WeightFamily::Projection),
        ["tikhonov"] => Ok(WeightFamily::Tikhonov { kappa: 0.5, mu: 2.0 }),
        ["tikhonov", k, m] => Ok(WeightFamily::Tikhonov { kappa: num(k)?, mu: num(m)? }),
        ["pinsker"] => Ok(WeightFamily::Pinsker { mu: 2.0 }),
        ["pinsker", m] => Ok(WeightFamily::Pinsker { mu: num(m)? }),
        _ => Err(format!("unknown weight family {s:?}")),
    }
}

pub fn family_text(f: &WeightFamily) -> String {
    match *f {
        WeightFamily::Projection => "projection".into(),
        WeightFamily::Tikhonov { kappa, mu } => format!("tikhonov:{kappa}:{mu}"),
        WeightFamily::Pinsker { mu } => format!("pinsker:{mu}"),
        WeightFamily::Custom => "custom".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_protocols() {
        let t = ExperimentSpec::defaults(ExperimentKind::Type1Known);
        assert_eq!(t.n_ladder.first(), Some(&40));
        assert_eq!(t.n_ladder.last(), Some(&655_360));
        assert_eq!(t.n_ladder.len(), 15);
        assert_eq!(t.families.len(), 3);
        let p = ExperimentSpec::defaults(ExperimentKind::PowerSmoothCos);
        assert_eq!(p.n_ladder, vec![2, 4, 8, 16]);
        assert_eq!(p.gamma_ladder.len(), 16);
        assert!((p.gamma_ladder[15] - 1.5).abs() < 1e-15);
        assert_eq!(ExperimentSpec::defaults(ExperimentKind::PowerAdaptive).n_ladder, vec![20, 40, 80, 160]);
        assert_eq!(ExperimentSpec::full_scale(ExperimentKind::Type1Known).reps, 100_000);
        assert_eq!(ExperimentSpec::full_scale(ExperimentKind::PowerNonsmooth).reps, 5000);
        assert_eq!(ExperimentSpec::full_scale(ExperimentKind::LoftEval).keypoints, 10_000);
        for k in ExperimentKind::ALL {
            ExperimentSpec::defaults(k).validate().unwrap();
            assert_eq!(ExperimentKind::from_name(k.name()), Some(k));
        }
    }

    #[test]
    fn text_round_trip() {
        for k in ExperimentKind::ALL {
            let mut spec = ExperimentSpec::defaults(k);
            spec.seed = 99;
            spec.s_fixed = Some(2.5);
            assert_eq!(ExperimentSpec::parse(&spec.to_text()).unwrap(), spec);
        }
    }

    #[test]
    fn parse_overrides_and_errors() {
        let spec = ExperimentSpec::parse(
            "# ladder\nkind = type1_known\nreps = 100\nn_ladder = 40, 80\nfamilies = pinsker:3,projection\n",
        )
        .unwrap();
        assert_eq!(spec.reps, 100);
        assert_eq!(spec.n_ladder, vec![40, 80]);
        assert_eq!(spec.families, vec![WeightFamily::Pinsker { mu: 3.0 }, WeightFamily::Projection]);
        for bad in [
            "reps = 3\n",
            "kind = nope\n",
            "kind = type1_known\nbogus = 1\n",
            "kind = type1_known\nreps = 0\n",
            "kind = type1_known\nreps = 1\nreps = 2\n",
            "kind = type1_known\nn_ladder = \n",
            "kind = power_nonsmooth\ngamma_ladder = x\n",
            "kind = type1_known\nfamilies = custom\n",
            "kind = tau_rate\nsigma_ladder = -1\n",
            "kind = type1_known\nalpha = 1.5\n",
        ] {
            assert!(ExperimentSpec::parse(bad).is_err(), "{bad:?}");
        }
    }
}

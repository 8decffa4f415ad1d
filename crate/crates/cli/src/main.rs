//! Command-line front end: shift tests on coefficient files, LoFT
//! descriptors, and the Monte Carlo experiments.

use std::collections::hash_map::RandomState;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shiftcurve::adaptive::{adaptive_decide, AdaptiveConfig, Calibration};
use shiftcurve::experiments::{self, parse_family, ExperimentKind, ExperimentSpec, Report};
use shiftcurve::loft::{
    load_pgm, read_descriptor, write_descriptor, format_descriptor, LoftConfig, LoftSampler, Whitening,
    DEFAULT_LAMBDA,
};
use shiftcurve::shift_test::{run_test, TestConfig};
use shiftcurve::spectral::read_observation;
use shiftcurve::weights::{WeightFamily, WeightSequence};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] shiftcurve::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Failed(_) => 3,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "shiftcurve", version, about = "Goodness-of-fit tests for shifted curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Known-noise shift test on two coefficient files.
    Test(TestArgs),
    /// Noise-adaptive shift test (equal unknown noise levels).
    TestAdaptive(AdaptiveArgs),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Simulate(Simulate),
    /// LoFT keypoint descriptors.
    #[command(subcommand)]
    Loft(Loft),
    /// Monte Carlo check of the tail bounds; exits with 3 if any fails.
    VerifyBounds(RunArgs),
}

#[derive(Args)]
struct WeightArgs {
    /// Weight family: projection, tikhonov[:kappa:mu] or pinsker[:mu].
    #[arg(long, default_value = "projection", conflicts_with = "weights_file")]
    weights: String,
    /// Cutoff N.
    #[arg(long = "N", short = 'N', required_unless_present = "weights_file")]
    n: Option<usize>,
    /// Explicit weights file (`j,nu` rows) instead of a family.
    #[arg(long)]
    weights_file: Option<PathBuf>,
}

impl WeightArgs {
    fn build(&self) -> CliResult<WeightSequence> {
        if let Some(path) = &self.weights_file {
            return Ok(WeightSequence::read(path)?);
        }
        let family: WeightFamily = parse_family(&self.weights).map_err(CliError::Usage)?;
        let n = self.n.ok_or_else(|| CliError::Usage("--N is required".into()))?;
        Ok(family.build(n)?)
    }
}

#[derive(Args)]
struct TestArgs {
    /// First observation file.
    #[arg(long)]
    a: PathBuf,
    /// Second observation file.
    #[arg(long)]
    b: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum CalibrationArg {
    Asymptotic,
    MonteCarlo,
}

#[derive(Args)]
struct AdaptiveArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    /// Number of coefficients used; defaults to ⌈2N^{3/2}⌉.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "asymptotic")]
    calibration: CalibrationArg,
    /// Replicates for Monte Carlo calibration.
    #[arg(long, default_value_t = 100_000)]
    calibration_reps: usize,
    /// Seed for Monte Carlo calibration; printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

/// Options shared by every experiment run.
#[derive(Args, Clone)]
struct RunArgs {
    /// Key = value ladder file mirroring the experiment fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Use the full-size replicate counts.
    #[arg(long = "paper-scale")]
    full_scale: bool,
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed; a fresh one is chosen and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "shiftcurve-out")]
    out: PathBuf,
    /// Override any experiment field, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Clone)]
struct LadderArgs {
    /// Ladder of sample sizes n (comma separated).
    #[arg(long)]
    n: Option<String>,
    /// Ladder of perturbation amplitudes (comma separated).
    #[arg(long)]
    gamma: Option<String>,
    /// Weight families (comma separated).
    #[arg(long)]
    families: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Also rotate the second curve by a random shift (power experiments).
    #[arg(long)]
    with_shift: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PowerCase {
    SmoothCos,
    SmoothRational,
    Nonsmooth,
}

#[derive(Subcommand)]
enum Simulate {
    /// Type-I error of the known-noise test.
    Type1 {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        ladder: LadderArgs,
    },
    /// Type-I error of the adaptive test.
    Type1Adaptive {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        ladder: LadderArgs,
    },
    /// Power curves of the known-noise test.
    Power {
        #[arg(long, value_enum, default_value = "smooth-cos")]
        case: PowerCase,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        ladder: LadderArgs,
    },
    /// Power curves of the adaptive test.
    PowerAdaptive {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        ladder: LadderArgs,
    },
    /// Accuracy of the shift estimate along a noise ladder.
    TauRate {
        #[command(flatten)]
        run: RunArgs,
        /// Noise levels (comma separated).
        #[arg(long)]
        sigma: Option<String>,
    },
}

#[derive(Args)]
struct LoftShape {
    #[arg(long, default_value_t = 32)]
    radius: usize,
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, default_value_t = 512)]
    angular_samples: usize,
    /// scalar, per-ring or per-coefficient.
    #[arg(long, default_value = "per-ring")]
    whitening: String,
}

impl LoftShape {
    fn config(&self) -> CliResult<LoftConfig> {
        let whitening = Whitening::from_name(&self.whitening)
            .ok_or_else(|| CliError::Usage(format!("unknown whitening {:?}", self.whitening)))?;
        Ok(LoftConfig {
            radius: self.radius,
            k: self.k,
            angular_samples: self.angular_samples,
            whitening,
            ..LoftConfig::default()
        })
    }
}

#[derive(Subcommand)]
enum Loft {
    /// Descriptor of one keypoint of a PGM image.
    Describe {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        y: usize,
        #[command(flatten)]
        shape: LoftShape,
        /// Descriptor file to write; printed when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Match test between two descriptor files.
    Match {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Image noise level of both images.
        #[arg(long)]
        sigma: f64,
        /// Noise level of the second image, if different.
        #[arg(long)]
        sigma_b: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = 512)]
        angular_samples: usize,
        #[arg(long, default_value = "per-ring")]
        whitening: String,
    },
    /// Matching experiment on a rotated image pair (bundled texture by default).
    Evaluate {
        /// First image; requires --b.
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        /// Second image, the quarter-turn rotation of the first.
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        /// Noise levels (comma separated).
        #[arg(long)]
        sigma: Option<String>,
        #[arg(long)]
        keypoints: Option<usize>,
        #[arg(long)]
        noise_reps: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn fresh_seed() -> u64 {
    let mut h = RandomState::new().build_hasher();
    h.write_u128(std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_nanos()));
    h.write_u32(std::process::id());
    h.finish()
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = fresh_seed();
        println!("seed={s}");
        s
    })
}

fn set(spec: &mut ExperimentSpec, key: &str, value: &str) -> CliResult<()> {
    spec.set(key, value).map_err(|e| CliError::Usage(format!("{key}: {e}")))
}

/// Defaults, then the spec file, full scale, `--set` overrides and flags.
fn build_spec(kind: ExperimentKind, run: &RunArgs, flags: &[(&str, Option<String>)]) -> CliResult<ExperimentSpec> {
    let mut spec = match &run.spec {
        Some(path) => {
            let s = ExperimentSpec::read(path)?;
            if s.kind != kind {
                return Err(CliError::Usage(format!(
                    "spec file is for {}, expected {}",
                    s.kind.name(),
                    kind.name()
                )));
            }
            s
        }
        None => ExperimentSpec::defaults(kind),
    };
    if run.full_scale {
        spec.apply_full_scale();
    }
    for o in &run.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {o:?}")))?;
        set(&mut spec, k.trim(), v.trim())?;
    }
    for (key, value) in flags {
        if let Some(v) = value {
            set(&mut spec, key, v)?;
        }
    }
    if let Some(r) = run.reps {
        spec.reps = r;
    }
    let seed_given = run.spec.is_some() || run.overrides.iter().any(|o| o.trim_start().starts_with("seed"));
    spec.seed = match run.seed {
        Some(seed) => seed,
        None if seed_given => spec.seed,
        None => seed_or_fresh(None),
    };
    spec.validate()?;
    Ok(spec)
}

fn pool(workers: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        b = b.num_threads(w);
    }
    b.build().map_err(|e| CliError::Usage(e.to_string()))
}

fn finish(report: &Report, spec: &ExperimentSpec, out: &Path) -> CliResult<()> {
    let paths = report.write(out)?;
    let spec_path = out.join("spec.txt");
    std::fs::write(&spec_path, spec.to_text()).map_err(|source| shiftcurve::Error::Io { path: spec_path.clone(), source })?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.checks {
        println!("check {}: {} ({})", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run_experiment(kind: ExperimentKind, run: &RunArgs, flags: &[(&str, Option<String>)]) -> CliResult<Report> {
    let spec = build_spec(kind, run, flags)?;
    let report = pool(run.workers)?.install(|| experiments::run(&spec, None))?;
    finish(&report, &spec, &run.out)?;
    Ok(report)
}

fn ladder_flags(l: &LadderArgs) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("n_ladder", l.n.clone()),
        ("gamma_ladder", l.gamma.clone()),
        ("families", l.families.clone()),
        ("alpha", l.alpha.map(|a| a.to_string())),
        ("with_shift", l.with_shift.then(|| "true".to_string())),
    ]
}

fn print_kv(pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        println!("{k}={v}");
    }
}

fn execute(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Test(args) => {
            let a = read_observation(&args.a)?;
            let b = read_observation(&args.b)?;
            let cfg = TestConfig::new(args.weights.build()?, args.alpha)?;
            let o = run_test(&a, &b, &cfg)?;
            print_kv(&[
                ("delta", o.delta.to_string()),
                ("t_normalized", o.t_normalized.to_string()),
                ("tau_hat", o.tau_hat.to_string()),
                ("threshold", o.threshold.to_string()),
                ("p_value", o.p_value.to_string()),
                ("reject", o.reject.to_string()),
            ]);
        }
        Command::TestAdaptive(args) => {
            let a = read_observation(&args.a)?;
            let b = read_observation(&args.b)?;
            let w = args.weights.build()?;
            let p = args.p.unwrap_or_else(|| experiments::adaptive_p(w.support()));
            let mut cfg = AdaptiveConfig::new(w, p, args.alpha)?;
            if let CalibrationArg::MonteCarlo = args.calibration {
                let seed = seed_or_fresh(args.seed);
                cfg = cfg.with_calibration(Calibration::MonteCarlo { reps: args.calibration_reps, seed })?;
            }
            let o = adaptive_decide(&a, &b, &cfg)?;
            print_kv(&[
                ("delta_tilde", o.delta_tilde.to_string()),
                ("t_stat", o.t_stat.to_string()),
                ("critical", o.critical.to_string()),
                ("reject", o.reject.to_string()),
                ("tau_hat", o.tau_hat.to_string()),
                ("p", p.to_string()),
            ]);
        }
        Command::Simulate(sim) => match sim {
            Simulate::Type1 { run, ladder } => {
                run_experiment(ExperimentKind::Type1Known, &run, &ladder_flags(&ladder))?;
            }
            Simulate::Type1Adaptive { run, ladder } => {
                run_experiment(ExperimentKind::Type1Adaptive, &run, &ladder_flags(&ladder))?;
            }
            Simulate::Power { case, run, ladder } => {
                let kind = match case {
                    PowerCase::SmoothCos => ExperimentKind::PowerSmoothCos,
                    PowerCase::SmoothRational => ExperimentKind::PowerSmoothRational,
                    PowerCase::Nonsmooth => ExperimentKind::PowerNonsmooth,
                };
                run_experiment(kind, &run, &ladder_flags(&ladder))?;
            }
            Simulate::PowerAdaptive { run, ladder } => {
                run_experiment(ExperimentKind::PowerAdaptive, &run, &ladder_flags(&ladder))?;
            }
            Simulate::TauRate { run, sigma } => {
                run_experiment(ExperimentKind::TauRate, &run, &[("sigma_ladder", sigma)])?;
            }
        },
        Command::Loft(l) => loft(l)?,
        Command::VerifyBounds(run) => {
            let report = run_experiment(ExperimentKind::TailBounds, &run, &[])?;
            if !report.all_checks_pass() {
                return Err(CliError::Failed("tail-bound verification failed".into()));
            }
        }
    }
    Ok(())
}

fn loft(cmd: Loft) -> CliResult<()> {
    match cmd {
        Loft::Describe { image, x, y, shape, out } => {
            let img = load_pgm(&image)?;
            let d = LoftSampler::new(shape.config()?)?.descriptor(&img, (x, y))?;
            match out {
                Some(path) => {
                    write_descriptor(&d, &path)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{}", format_descriptor(&d)),
            }
        }
        Loft::Match { a, b, sigma, sigma_b, lambda, angular_samples, whitening } => {
            let da = read_descriptor(&a)?;
            let db = read_descriptor(&b)?;
            let whitening = Whitening::from_name(&whitening)
                .ok_or_else(|| CliError::Usage(format!("unknown whitening {whitening:?}")))?;
            let cfg = LoftConfig {
                radius: da.radius,
                rings: da.rings(),
                k: da.k(),
                angular_samples,
                whitening,
                ..LoftConfig::default()
            };
            let sampler = LoftSampler::new(cfg)?;
            let m = sampler.match_statistic_unequal(&da, &db, sigma, sigma_b.unwrap_or(sigma))?.decide(lambda);
            print_kv(&[
                ("delta", m.delta.to_string()),
                ("t_normalized", m.t_normalized.to_string()),
                ("tau_hat", m.tau_hat.to_string()),
                ("lambda", m.lambda.to_string()),
                ("is_match", m.is_match.to_string()),
            ]);
        }
        Loft::Evaluate { a, b, sigma, keypoints, noise_reps, lambda, run } => {
            let flags = [
                ("sigma_ladder", sigma),
                ("keypoints", keypoints.map(|v| v.to_string())),
                ("noise_reps", noise_reps.map(|v| v.to_string())),
                ("lambda", lambda.map(|v| v.to_string())),
            ];
            let spec = build_spec(ExperimentKind::LoftEval, &run, &flags)?;
            let images = match (a, b) {
                (Some(a), Some(b)) => Some((load_pgm(a)?, load_pgm(b)?)),
                _ => None,
            };
            let report = pool(run.workers)?
                .install(|| experiments::run(&spec, images.as_ref().map(|(a, b)| (a, b))))?;
            finish(&report, &spec, &run.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

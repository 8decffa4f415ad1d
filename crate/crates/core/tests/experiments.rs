//! End-to-end runs of the experiment harness at small sizes.

use shiftcurve::experiments::{self, ExperimentKind, ExperimentSpec, Table};

fn small(kind: ExperimentKind) -> ExperimentSpec {
    let mut s = ExperimentSpec::defaults(kind);
    s.reps = 40;
    match kind {
        ExperimentKind::Type1Known | ExperimentKind::Type1Adaptive => s.n_ladder = vec![40, 80],
        ExperimentKind::PowerAdaptive => s.n_ladder = vec![20],
        ExperimentKind::LoftEval => {
            s.sigma_ladder = vec![30.0];
            s.keypoints = 20;
        }
        _ => {}
    }
    if !s.gamma_ladder.is_empty() {
        s.gamma_ladder = vec![0.0, 1.0];
    }
    s
}

#[test]
fn every_kind_runs_and_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ExperimentKind::ALL {
        let spec = small(kind);
        let report = experiments::run(&spec, None).unwrap();
        assert_eq!(report.kind, kind);
        let out = dir.path().join(kind.name());
        let paths = report.write(&out).unwrap();
        assert!(paths.iter().any(|p| p.extension().is_some_and(|e| e == "csv")), "{kind:?}");
        assert!(paths.iter().any(|p| p.extension().is_some_and(|e| e == "svg")) || kind == ExperimentKind::TailBounds);
        for (name, table) in &report.tables {
            assert_eq!(&Table::read(out.join(name)).unwrap(), table, "{name}");
        }
    }
}

#[test]
fn spec_text_round_trips_for_every_kind() {
    for kind in ExperimentKind::ALL {
        for spec in [ExperimentSpec::defaults(kind), ExperimentSpec::full_scale(kind)] {
            assert_eq!(ExperimentSpec::parse(&spec.to_text()).unwrap(), spec);
        }
    }
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    for kind in [ExperimentKind::Type1Known, ExperimentKind::PowerNonsmooth, ExperimentKind::TauRate, ExperimentKind::TailBounds] {
        let mut spec = small(kind);
        spec.reps = 60;
        let with = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| experiments::run(&spec, None).unwrap())
        };
        assert_eq!(with(1).tables, with(3).tables, "{kind:?}");
    }
}

#[test]
fn seeds_change_results() {
    let mut a = small(ExperimentKind::TauRate);
    let b = a.clone();
    a.seed = 99;
    let ra = experiments::run(&a, None).unwrap();
    let rb = experiments::run(&b, None).unwrap();
    assert_ne!(ra.summary(), rb.summary());
}

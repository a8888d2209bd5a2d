use noisy_vqo::experiments::config::{self, Value};
use noisy_vqo::experiments::{self, CheckKind, ExperimentKind, RunOptions, RunOutput};
use noisy_vqo::Error;
use serde_json::json;

fn run(kind: ExperimentKind, user: Value, seed: Option<u64>) -> noisy_vqo::Result<RunOutput> {
    experiments::run(kind, user, &RunOptions { seed, ..RunOptions::default() })
}

fn small(kind: ExperimentKind) -> Value {
    match kind {
        ExperimentKind::QfiScan => json!({
            "circuit": {"nqubits": 3, "layers": 2},
            "noise": {"etas": [0.0, 0.1, 0.2]},
            "probes": {"count": 8, "include_optima": true},
            "minimize": {"restarts": 1, "max_iterations": 200}
        }),
        ExperimentKind::Landscape => json!({"circuit": {"nqubits": 3}, "grid": {"resolution": 7}}),
        ExperimentKind::Convergence => json!({
            "circuit": {"nqubits": 3, "layers": 1},
            "optimizer": {"iterations": 20, "shots": 50},
            "trials": 3,
            "analysis": {"tail_window": 5}
        }),
        ExperimentKind::BoundsAudit => json!({
            "random": {"instances": 6, "nqubits": [3, 3], "max_layers": 1, "probes": 2},
            "depth_sweep": {"layers": [1, 2]},
            "report": {"probes": 4}
        }),
        ExperimentKind::ChannelValidate => json!({"fluctuation": {"mc_samples": 2000, "mc_tol": 0.1}}),
    }
}

#[test]
fn every_experiment_runs_small_and_keeps_its_invariants() {
    for kind in ExperimentKind::ALL {
        let out = run(kind, small(kind), Some(3)).unwrap();
        assert!(out.failed_invariants().is_empty(), "{kind}: {:?}", out.failed_invariants());
        assert_eq!(out.manifest.experiment, kind);
        assert_eq!(out.manifest.seed, 3);
        assert_eq!(out.manifest.outputs.len(), out.files.len());
        for entry in &out.manifest.outputs {
            let body = out.file(&entry.file).unwrap();
            if entry.file.ends_with(".csv") {
                assert_eq!(body.lines().count(), entry.rows + 1, "{kind}: {}", entry.file);
            }
        }
    }
}

#[test]
fn runs_are_reproducible_and_manifests_rerun_identically() {
    for kind in [ExperimentKind::Convergence, ExperimentKind::BoundsAudit, ExperimentKind::Landscape] {
        let a = run(kind, small(kind), Some(11)).unwrap();
        let b = run(kind, small(kind), Some(11)).unwrap();
        assert_eq!(a.files, b.files, "{kind}");
        assert_eq!(a.manifest_json(), b.manifest_json(), "{kind}");

        let echoed = config::parse(&a.manifest_json()).unwrap();
        let c = run(kind, echoed, None).unwrap();
        assert_eq!(a.files, c.files, "{kind}");
        assert_eq!(a.manifest_json(), c.manifest_json(), "{kind}");
    }
}

#[test]
fn seed_override_changes_sampled_results() {
    let kind = ExperimentKind::Convergence;
    let a = run(kind, small(kind), Some(1)).unwrap();
    let b = run(kind, small(kind), Some(2)).unwrap();
    assert_ne!(a.file("convergence.csv"), b.file("convergence.csv"));
}

#[test]
fn written_outputs_match_the_manifest() {
    let dir = std::env::temp_dir().join(format!("noisy-vqo-it-{}", std::process::id()));
    let out = run(ExperimentKind::ChannelValidate, small(ExperimentKind::ChannelValidate), None).unwrap();
    let paths = out.write_to(&dir).unwrap();
    assert_eq!(paths.len(), out.files.len() + 1);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(experiments::MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["tool"], experiments::TOOL_NAME);
    assert!(manifest["environment"]["os"].is_string());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn small_qfi_scan_rows_are_consistent() {
    let out = run(ExperimentKind::QfiScan, small(ExperimentKind::QfiScan), None).unwrap();
    let csv = out.file("qfi_scan.csv").unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let (ld, sld, bound) = (r[1], r[2], r[3]);
        assert!(ld <= bound + 1e-9 && sld <= bound + 1e-9);
    }
    assert!(rows[0][4].abs() < 1e-6, "noiseless optimum shift {}", rows[0][4]);
    assert!(rows[2][4] > 0.0);
    assert!(out.check("qfi_bound_dominates").is_some_and(|c| c.passed && c.kind == CheckKind::Invariant));
}

#[test]
fn config_errors_are_reported_as_such() {
    let bad = [
        (ExperimentKind::Landscape, json!({"grid": {"resolution": 5, "extra": true}})),
        (ExperimentKind::Landscape, json!({"circuit": {"nqubits": 2}})),
        (ExperimentKind::QfiScan, json!({"noise": {"etas": []}})),
        (ExperimentKind::QfiScan, json!({"noise": {"etas": [1.5]}})),
        (ExperimentKind::Convergence, json!({"trials": 1})),
        (ExperimentKind::Convergence, json!({"noise": {"scales": [0.0]}})),
        (ExperimentKind::ChannelValidate, json!({"experiment": "qfi-scan"})),
    ];
    for (kind, user) in bad {
        let r = run(kind, user.clone(), None);
        assert!(matches!(r, Err(Error::Config(_))), "{kind} {user}: {r:?}", r = r.as_ref().map(|_| ()));
    }
}

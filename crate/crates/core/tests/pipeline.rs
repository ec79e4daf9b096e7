mod common;

use std::collections::HashSet;

use logenc::attack::{scope_baseline, split_truth, worst_case_split, SplitTarget};
use logenc::corrector::{build_cc_with_key, KeyRole, KeyVector};
use logenc::flow::{lock, run_matrix, write_artifacts, Overrides, RunConfig, ARTIFACT_FILES};
use logenc::integrator::KeyFile;
use logenc::netlist::{parse_bench, write_bench};
use logenc::optimizer::{optimize, OptEffort};
use logenc::verifier::{check_equiv, Budget, Equivalence};
use logenc::NetlistParts;

fn quick() -> RunConfig {
    RunConfig {
        runs_encrypt: 1,
        runs_e2e_per_encrypt: 1,
        ..RunConfig::default()
    }
}

#[test]
fn corpus_round_trips_through_bench_text() {
    for name in common::ISCAS85.iter().chain(&common::SMALL) {
        let n = if common::ISCAS85.contains(name) {
            common::iscas(name)
        } else {
            common::small(name)
        };
        let n = logenc::integrator::lower_mux(&n).unwrap();
        let back = parse_bench(name, &write_bench(&n).unwrap()).unwrap();
        let v = check_equiv(&n, &back, &Budget::default()).unwrap();
        assert!(v.is_equivalent(), "{name}");
        assert_eq!(n.stats().gate_count, back.stats().gate_count, "{name}");
    }
}

#[test]
fn iscas_interfaces_match_the_reference_counts() {
    let want = [
        ("c17", 5, 2),
        ("c432", 36, 7),
        ("c499", 41, 32),
        ("c880", 60, 26),
        ("c1355", 41, 32),
        ("c1908", 33, 25),
        ("c2670", 233, 140),
        ("c3540", 50, 22),
        ("c5315", 178, 123),
        ("c6288", 32, 32),
        ("c7552", 207, 108),
    ];
    for (name, pi, po) in want {
        let n = common::iscas(name);
        assert_eq!((n.num_inputs(), n.num_outputs()), (pi, po), "{name}");
    }
}

#[test]
fn small_circuits_lock_and_stay_sensitive() {
    for name in common::SMALL {
        let oc = common::small(name);
        let art = lock(&oc, &quick(), 5, Overrides::default()).unwrap();
        assert_eq!(art.fc.k_fc.len(), 2 * oc.num_outputs(), "{name}");
        assert!(art.report.verification.iter().all(|o| o.verdict.is_equivalent()));
        common::check_sensitivity(&art.stage.oc, &art.fc).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn multi_run_matrix_is_reproducible_and_ordered() {
    let oc = common::small("adder4");
    let cfg = RunConfig {
        runs_encrypt: 3,
        runs_e2e_per_encrypt: 2,
        ..RunConfig::default()
    };
    let a = run_matrix(&oc, &cfg, 42).unwrap();
    let b = run_matrix(&oc, &cfg, 42).unwrap();
    assert_eq!(a.len(), 6);
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        assert_eq!((x.report.encrypt_run, x.report.e2e_run), (i / 2, i % 2));
        assert_eq!(x.key_file, y.key_file);
        assert_eq!(x.fc.netlist, y.fc.netlist);
    }
    // Runs sharing an encryption run share the basic EC.
    assert_eq!(a[0].stage.basic_ec, a[1].stage.basic_ec);
    let c = run_matrix(&oc, &cfg, 43).unwrap();
    assert!(a.iter().zip(&c).any(|(x, y)| x.key_file != y.key_file));
}

#[test]
fn artifacts_are_written_and_parse_back() {
    let dir = tempfile_dir("artifacts");
    let oc = common::iscas("c17");
    let art = lock(&oc, &quick(), 9, Overrides::default()).unwrap();
    write_artifacts(&dir, &art).unwrap();
    for f in ARTIFACT_FILES {
        let text = std::fs::read_to_string(dir.join(f)).unwrap();
        assert!(text.ends_with('\n'), "{f}");
    }
    let key: KeyFile = serde_json::from_str(&std::fs::read_to_string(dir.join("key.json")).unwrap()).unwrap();
    assert_eq!(key, art.key_file);
    let parts: NetlistParts = serde_json::from_str(&std::fs::read_to_string(dir.join("fc.json")).unwrap()).unwrap();
    let fc_json = logenc::Netlist::from_parts(parts).unwrap();
    let fc_bench = parse_bench("fc", &std::fs::read_to_string(dir.join("fc.bench")).unwrap()).unwrap();
    assert!(check_equiv(&fc_json, &fc_bench, &Budget::default()).unwrap().is_equivalent());
    let restored = logenc::integrator::apply_key(&fc_bench, &key.key_ports(), &key.final_key().unwrap()).unwrap();
    assert!(check_equiv(&art.stage.oc, &restored, &Budget::default()).unwrap().is_equivalent());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn optimizer_preserves_iscas_functions_at_every_effort() {
    let efforts = [OptEffort::light(), OptEffort::standard(), OptEffort::heavy(5)];
    for name in ["c432", "c499", "c880", "c1908"] {
        let n = common::iscas(name);
        for e in &efforts {
            let o = optimize(&n, e, &HashSet::new()).unwrap();
            let v = check_equiv(&n, &o, &Budget::default()).unwrap();
            assert_eq!(v.result, Equivalence::Equivalent, "{name} at {e}");
        }
    }
}

#[test]
fn degenerate_cc_bits_are_all_resolved() {
    let oc = common::small("mul2");
    let zeros = KeyVector::new(KeyRole::Cc, vec![false; oc.num_outputs()]);
    let cc = build_cc_with_key(&oc, &oc, &zeros, &OptEffort::standard()).unwrap();
    // OC ^ OC ^ 0 collapses to constants.
    assert!(cc
        .cc
        .gates()
        .iter()
        .all(|g| matches!(g.kind, logenc::GateKind::Const0 | logenc::GateKind::Const1)));
    let k_ec = KeyVector::new(KeyRole::Ec, vec![true, false, true, false]);
    let ec_final = logenc::corrector::randomize_ec_with_key(&oc, &k_ec, &OptEffort::standard()).unwrap();
    let guesses = worst_case_split(&ec_final, &cc.cc, SplitTarget::Cc).unwrap();
    let truth = split_truth(SplitTarget::Cc, &k_ec, &zeros).unwrap();
    assert!(guesses.guesses().iter().all(|g| g.value().is_some()));
    let report = guesses.score(&truth).unwrap();
    assert_eq!(report.kpa, Some(report.ac));
}

#[test]
fn locked_small_circuit_yields_an_attack_report() {
    let oc = common::small("adder4");
    let art = lock(&oc, &quick(), 3, Overrides::default()).unwrap();
    let guesses = scope_baseline(&art.fc.netlist, &art.fc.key_ports()).unwrap();
    let report = guesses.score(&art.fc.k_fc.bits).unwrap();
    assert_eq!(report.per_bit.len(), 10);
    assert!((0.0..=100.0).contains(&report.ac));
    for target in [SplitTarget::Ec, SplitTarget::Cc] {
        let guesses = worst_case_split(&art.ec_final, &art.cc, target).unwrap();
        let truth = split_truth(target, &art.k_ec, &art.k_cc).unwrap();
        assert_eq!(guesses.score(&truth).unwrap().per_bit.len(), 5);
    }
}

fn tempfile_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("logenc-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

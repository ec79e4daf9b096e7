use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const AND_OR: &str = "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(po)\nt = AND(a, b)\npo = OR(t, c)\n";

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

fn logenc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logenc"))
        .args(args)
        .current_dir(dir)
        .env_remove("LOGENC_OUT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_owned()
}

#[test]
fn golden_example_yields_k_fc_11() {
    let tmp = TempDir::new().unwrap();
    let oc = write(tmp.path(), "and_or.bench", AND_OR);
    let o = logenc(
        &[
            "encrypt", &oc, "--out", "g", "--test-cipher", "101", "--k-cc", "1", "--k-ec", "0", "--k-mux", "10",
            "--gate-order", "0,2,1", "--nand-bit", "0",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let key = read_json(&tmp.path().join("g/key.json"));
    assert_eq!(key["k_fc"], "11");
    let v = logenc(&["verify", "g/fc.bench", "g/key.json", &oc], tmp.path());
    assert_eq!(code(&v), 0);
    assert_eq!(stdout_json(&v)["result"], "equivalent");
}

#[test]
fn c1355_has_64_key_bits() {
    let tmp = TempDir::new().unwrap();
    let input = corpus("iscas85/c1355.bench");
    let o = logenc(&["encrypt", input.to_str().unwrap(), "--seed", "1", "--out", "o"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let key = read_json(&tmp.path().join("o/key.json"));
    assert_eq!(key["k_fc"].as_str().unwrap().len(), 64);
    let report = read_json(&tmp.path().join("o/report.json"));
    assert_eq!(report["key_bits"], 64);
    assert!(report["overhead"]["gate_count_pct"].as_f64().is_some());
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = TempDir::new().unwrap();
    let input = corpus("iscas85/c432.bench");
    for out in ["a", "b"] {
        let o = logenc(&["encrypt", input.to_str().unwrap(), "--seed", "99", "--out", out], tmp.path());
        assert_eq!(code(&o), 0);
    }
    for f in ["fc.bench", "fc.json", "key.json", "trace.json", "report.json"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn run_matrix_goes_to_run_directories() {
    let tmp = TempDir::new().unwrap();
    let oc = write(tmp.path(), "and_or.bench", AND_OR);
    let o = Command::new(env!("CARGO_BIN_EXE_logenc"))
        .args(["encrypt", &oc, "--seed", "3", "--runs", "2x2"])
        .current_dir(tmp.path())
        .env("LOGENC_OUT", "env_out")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let report = read_json(&tmp.path().join(format!("env_out/run_{i}_{j}/report.json")));
        assert_eq!((report["encrypt_run"].as_u64(), report["e2e_run"].as_u64()), (Some(i), Some(j)));
    }
}

#[test]
fn flipped_or_truncated_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let input = corpus("iscas85/c17.bench");
    let input = input.to_str().unwrap();
    assert_eq!(code(&logenc(&["encrypt", input, "--seed", "5", "--out", "o"], tmp.path())), 0);
    let mut key = read_json(&tmp.path().join("o/key.json"));
    let k_fc = key["k_fc"].as_str().unwrap().to_owned();

    let flipped: String = k_fc
        .char_indices()
        .map(|(i, c)| if i == 0 { if c == '0' { '1' } else { '0' } } else { c })
        .collect();
    key["k_fc"] = json!(flipped);
    write(tmp.path(), "flipped.json", &key.to_string());
    let v = logenc(&["verify", "o/fc.bench", "flipped.json", input], tmp.path());
    assert_eq!(code(&v), 2);
    let verdict = stdout_json(&v);
    assert_eq!(verdict["result"], "inequivalent");
    assert!(verdict["witness"].is_array());
    assert_eq!(verdict["differing_outputs"].as_array().unwrap().len(), 1);

    key["k_fc"] = json!(k_fc[1..]);
    write(tmp.path(), "short.json", &key.to_string());
    let v = logenc(&["verify", "o/fc.bench", "short.json", input], tmp.path());
    assert_eq!(code(&v), 3);
}

fn leaky(tmp: &Path, truth: &[bool]) -> (String, String) {
    let (n, ports) = logenc::attack::leaky_scheme("leaky", truth).unwrap();
    let fc = write(tmp, "leaky.bench", &logenc::netlist::write_bench(&n).unwrap());
    let bits: String = truth.iter().map(|&b| if b { '1' } else { '0' }).collect();
    let map: Vec<Value> = ports
        .iter()
        .enumerate()
        .map(|(i, p)| json!({"key_port": p, "po_name": format!("y{i}"), "side": "EC"}))
        .collect();
    let key = json!({
        "benchmark": "leaky",
        "po_order": [],
        "k_ec": "",
        "k_cc": "",
        "k_mux": "",
        "k_fc": bits,
        "key_port_map": map,
    });
    (fc, write(tmp, "leaky_key.json", &key.to_string()))
}

#[test]
fn baseline_attack_breaks_the_leaky_scheme() {
    let tmp = TempDir::new().unwrap();
    let (fc, key) = leaky(tmp.path(), &[true, false, false, true, false, true, true, true]);
    let o = logenc(&["attack", &fc, "--key", &key, "--out", "r"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&tmp.path().join("r/attack_baseline.json"));
    assert_eq!(report["ac"], 100.0);
    assert_eq!(report["mode"], "baseline");
    assert_eq!(report["per_bit"].as_array().unwrap().len(), 8);

    let one = logenc(&["attack", &fc, "--mode", "resynthesis", "--recipes", "standard"], tmp.path());
    assert_eq!(code(&one), 4);
    let many = logenc(&["attack", &fc, "--mode", "resynthesis", "--key", &key], tmp.path());
    assert_eq!(code(&many), 0);
    assert_eq!(stdout_json(&many)["ac"], 100.0);
}

#[test]
fn attacks_on_a_locked_circuit_emit_reports() {
    let tmp = TempDir::new().unwrap();
    let input = corpus("small/adder4.bench");
    let o = logenc(
        &["encrypt", input.to_str().unwrap(), "--seed", "8", "--out", "o", "--intermediates"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let blind = logenc(&["attack", "o/fc.bench", "--out", "o"], tmp.path());
    assert_eq!(code(&blind), 0);
    let guesses = stdout_json(&blind);
    assert!(guesses.get("ac").is_none());
    assert_eq!(guesses["per_bit"].as_array().unwrap().len(), 10);
    for mode in ["baseline", "worst-case-ec", "worst-case-cc"] {
        let o = logenc(
            &["attack", "o/cc.bench", "--mode", mode, "--ec-final", "o/ec_final.bench", "--key", "o/key.json", "--out", "o"],
            tmp.path(),
        );
        if mode == "baseline" {
            // The CC has no key ports.
            assert_eq!(code(&o), 4);
            continue;
        }
        assert_eq!(code(&o), 0, "{mode}: {}", String::from_utf8_lossy(&o.stderr));
        let r = read_json(&tmp.path().join(format!("o/attack_{mode}.json")));
        assert_eq!(r["per_bit"].as_array().unwrap().len(), 5);
    }
    let missing = logenc(&["attack", "o/cc.bench", "--mode", "worst-case-ec"], tmp.path());
    assert_eq!(code(&missing), 4);
}

#[test]
fn stats_report_overheads() {
    let tmp = TempDir::new().unwrap();
    let oc = write(tmp.path(), "one.bench", "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n");
    let same = logenc(&["stats", &oc, &oc], tmp.path());
    assert_eq!(code(&same), 0);
    let r = stdout_json(&same);
    assert_eq!(r["gate_count_pct"], 0.0);
    assert_eq!(r["depth_pct"], 0.0);
    assert_eq!(code(&logenc(&["encrypt", &oc, "--seed", "2", "--out", "o"], tmp.path())), 0);
    let r = stdout_json(&logenc(&["stats", &oc, "o/fc.json"], tmp.path()));
    assert!(r["gate_count_pct"].as_f64().unwrap() > 0.0);
}

#[test]
fn map_writes_nand_nor_only() {
    let tmp = TempDir::new().unwrap();
    let input = corpus("small/mux4.bench");
    let o = logenc(&["map", input.to_str().unwrap(), "--out", "m"], tmp.path());
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(tmp.path().join("m/mux4_nandnor.bench")).unwrap();
    for line in text.lines().filter(|l| l.contains('=')) {
        assert!(line.contains("NAND(") || line.contains("NOR(") || line.contains("BUFF("), "{line}");
    }
}

#[test]
fn error_classes_map_to_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.bench", "INPUT(a)\nOUTPUT(y)\ny = FOO(a)\n");
    assert_eq!(code(&logenc(&["encrypt", &bad], tmp.path())), 3);
    let oc = write(tmp.path(), "ok.bench", AND_OR);
    assert_eq!(code(&logenc(&["encrypt", &oc, "--runs", "0x4"], tmp.path())), 4);
    assert_eq!(code(&logenc(&["encrypt", &oc, "--runs", "four"], tmp.path())), 4);
    assert_eq!(code(&logenc(&["encrypt", &oc, "--exhaustive-threshold", "30"], tmp.path())), 4);
    assert_eq!(code(&logenc(&["encrypt", &oc, "--runs", "2x1", "--k-cc", "1"], tmp.path())), 4);
    assert_eq!(code(&logenc(&["encrypt", "missing.bench"], tmp.path())), 1);
    assert_eq!(code(&logenc(&["--help"], tmp.path())), 0);
}

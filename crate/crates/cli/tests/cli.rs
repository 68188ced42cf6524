use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use qrc_core::linearity::LinearityReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrc-lab")).args(args).output().expect("binary runs")
}

fn run_config(cmd: &str, config: &Value, dir: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, serde_json::to_vec_pretty(config).unwrap()).unwrap();
    let out = dir.join("out");
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (run(&args), out)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn affine(bias: f64, w: f64) -> Value {
    json!({ "bias": bias, "weights": [w] })
}

fn report(out: &Path) -> LinearityReport {
    serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn catalog_lists_expected_verdicts() {
    let o = run(&["catalog", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let entries: Vec<Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!entries.is_empty());
    let expected = |name: &str| entries.iter().find(|e| e["name"] == name).map(|e| e["expected"].clone());
    assert_eq!(expected("reinit-pure-sqrt"), Some(json!("expected-nonlinear(X)")));
    assert_eq!(expected("channel-mixture"), Some(json!("expected-linear")));
    assert!(stdout(&run(&["catalog"])).contains("reinit-mixed"));
}

#[test]
fn analyze_mixed_reinit_is_linear_everywhere() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "encoding": { "kind": "reinit-mixed" },
        "system": { "kind": "qubits", "count": 1 },
        "probe": { "seed": 3 }
    });
    let (o, out) = run_config("analyze", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = report(&out);
    assert!(rep.nodes.iter().all(|n| n.verdict == qrc_core::linearity::Verdict::Linear));
    // round trip
    let again: LinearityReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
    assert_eq!(again, rep);

    let csv = std::fs::read_to_string(out.join("nodes.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("u_0,node_index,value,residual"));
    // 20 priors × 21 inputs × 4 nodes
    assert_eq!(lines.count(), 20 * 21 * 4);
}

#[test]
fn analyze_sqrt_reinit_flags_x_only() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "encoding": { "kind": "reinit-pure-sqrt" },
        "system": { "kind": "qubits", "count": 1 },
        "probe": { "seed": 1, "priors": { "count": 5 } },
        "output": { "formats": "json" }
    });
    let (o, out) = run_config("analyze", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0);
    let rep = report(&out);
    let v: Vec<String> = rep.nodes.iter().map(|n| format!("{:?}", n.verdict)).collect();
    assert_eq!(v, ["Linear", "Nonlinear", "Linear", "Linear"]);
    assert!(!out.join("nodes.csv").exists());
}

#[test]
fn analyze_qubit_hamiltonian_drive_is_nonlinear_on_z() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "encoding": {
            "kind": "hamiltonian-drive",
            "drives": [{ "op": { "kind": "pauli", "label": "X" }, "coefficient": affine(0.0, 1.0) }],
            "jumps": [{ "op": { "kind": "lowering", "site": 0 }, "rate": 0.3 }]
        },
        "system": { "kind": "qubits", "count": 1 },
        "probe": { "seed": 0, "grid_points": 11, "read_times": [1.0, 2.0], "dt": 0.005 }
    });
    let (o, out) = run_config("analyze", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = report(&out);
    assert_eq!(rep.node("Z").unwrap().verdict, qrc_core::linearity::Verdict::Nonlinear);
    assert!(stdout(&o).contains("overall: nonlinear"));
}

#[test]
fn malformed_config_fails_without_outputs() {
    let dir = TempDir::new().unwrap();
    let bad = [
        json!({ "encoding": { "kind": "reinit-mixed" }, "system": { "kind": "qubits", "count": 1 }, "probe": {} }),
        json!({
            "encoding": { "kind": "reinit-mixed" },
            "system": { "kind": "qubits", "count": 1 },
            "probe": { "seed": 1 },
            "extra": true
        }),
        json!({ "encoding": { "kind": "displacement", "beta_re": affine(0.0, 1.0), "beta_im": affine(0.0, 0.0) },
                "system": { "kind": "qubits", "count": 1 }, "probe": { "seed": 1 } }),
    ];
    for cfg in &bad {
        let (o, out) = run_config("analyze", cfg, dir.path(), &[]);
        assert_eq!(code(&o), 1, "{cfg}");
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
        assert!(!out.exists());
    }
}

fn stm_config() -> Value {
    json!({
        "encoding": { "kind": "reinit-mixed" },
        "system": { "kind": "qubits", "count": 2 },
        "probe": { "seed": 11 },
        "reservoir": { "internal": { "kind": "random-unitary" } },
        "task": { "kind": "stm", "length": 600, "delays": [0, 1, 2, 3] }
    })
}

#[test]
fn stm_benchmark_has_one_row_per_delay_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_config("benchmark", &stm_config(), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(out.join("benchmark.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "delay,r2");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,"));

    let dir2 = TempDir::new().unwrap();
    let (o2, out2) = run_config("benchmark", &stm_config(), dir2.path(), &[]);
    assert_eq!(code(&o2), 0);
    assert_eq!(std::fs::read(out2.join("benchmark.csv")).unwrap(), first);

    // thread count does not change the output
    let dir3 = TempDir::new().unwrap();
    let (o3, out3) = run_config("benchmark", &stm_config(), dir3.path(), &["--threads", "3"]);
    assert_eq!(code(&o3), 0);
    assert_eq!(std::fs::read(out3.join("benchmark.csv")).unwrap(), first);

    // a different seed does
    let dir4 = TempDir::new().unwrap();
    let (_, out4) = run_config("benchmark", &stm_config(), dir4.path(), &["--seed", "12"]);
    assert_ne!(std::fs::read(out4.join("benchmark.csv")).unwrap(), first);
}

#[test]
fn sine_amplitude_nodes_are_linear() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "encoding": { "kind": "displacement-drive", "force_x": affine(0.0, 1.0), "force_p": affine(0.0, 0.0), "gamma": 0.5 },
        "system": { "kind": "mode" },
        "probe": { "seed": 5, "dt": 0.01 },
        "task": { "kind": "sine-estimation", "omega": 1.3, "amplitude": 1.0, "phase": 0.0,
                  "read_times": [2.0, 4.0, 6.0], "params": 30 }
    });
    let (o, out) = run_config("benchmark", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let amp = text.lines().find(|l| l.starts_with("amplitude")).unwrap();
    let phase = text.lines().find(|l| l.starts_with("phase")).unwrap();
    assert!(amp.ends_with("node linearity linear"), "{amp}");
    assert!(phase.ends_with("node linearity nonlinear"), "{phase}");
    let csv = std::fs::read_to_string(out.join("benchmark.csv")).unwrap();
    assert!(csv.starts_with("param,nmse\namplitude,"));
}

fn drive_config(encoding: Value, system: Value) -> Value {
    json!({
        "encoding": encoding,
        "system": system,
        "probe": { "seed": 21, "dt": 0.001 },
        "task": { "kind": "crosscheck", "u": [0.4], "t": 1.5 }
    })
}

#[test]
fn crosscheck_random_damped_qubit_agrees() {
    let dir = TempDir::new().unwrap();
    let cfg = drive_config(json!({ "kind": "random-drive" }), json!({ "kind": "qubits", "count": 1 }));
    let (o, out) = run_config("crosscheck", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_slice(&std::fs::read(out.join("crosscheck.json")).unwrap()).unwrap();
    assert!(rep["max_deviation"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn crosscheck_zero_generator_has_zero_deviation() {
    let dir = TempDir::new().unwrap();
    let mut cfg = drive_config(
        json!({ "kind": "hamiltonian-drive", "drives": [] }),
        json!({ "kind": "qubits", "count": 1 }),
    );
    cfg["task"]["u"] = json!([]);
    let (o, out) = run_config("crosscheck", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_slice(&std::fs::read(out.join("crosscheck.json")).unwrap()).unwrap();
    assert_eq!(rep["max_deviation"].as_f64().unwrap(), 0.0);
}

#[test]
fn crosscheck_refuses_defective_cascade() {
    let dir = TempDir::new().unwrap();
    let mut cfg = drive_config(
        json!({
            "kind": "hamiltonian-drive",
            "drives": [],
            "jumps": [
                { "op": { "kind": "transition", "from": 2, "to": 1 }, "rate": 1.0 },
                { "op": { "kind": "transition", "from": 1, "to": 0 }, "rate": 1.0 }
            ]
        }),
        json!({ "kind": "register", "dims": [3], "basis": { "kind": "gell-mann", "dim": 3 } }),
    );
    cfg["task"]["u"] = json!([]);
    let (o, out) = run_config("crosscheck", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not safely diagonalizable"));
    assert!(!out.exists());
}

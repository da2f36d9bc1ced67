use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lpvssa::io::{model_to_json, parse_model, read_hankel_dump, ThetaTable};
use lpvssa::reduce::minimality_test;
use lpvssa::{InitialState, LpvSsa, TimeDomain};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

const TWO_STATE: &str = r#"{"np":1,"nx":2,"nu":1,"ny":1,"time_domain":"dt",
 "A":[[[0.5,0.1],[0.0,0.3]],[[0.1,0.0],[0.2,-0.1]]],
 "B":[[[1.0],[0.5]],[[0.0],[0.2]]],
 "C":[[[1.0,0.0]],[[0.0,0.5]]],
 "x0":[1.0,-0.5]}"#;

fn lpvssa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpvssa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn random_minimal(seed: u64, np: usize, nx: usize, td: TimeDomain) -> (LpvSsa, InitialState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut mat = |r: usize, c: usize, scale: f64| DMatrix::from_fn(r, c, |_, _| scale * rng.random_range(-1.0..=1.0));
        let a = (0..=np).map(|_| mat(nx, nx, 0.8 / nx as f64)).collect();
        let b = (0..=np).map(|_| mat(nx, 1, 1.0)).collect();
        let c = (0..=np).map(|_| mat(1, nx, 1.0)).collect();
        let x0 = InitialState(DVector::from_fn(nx, |_, _| rng.random_range(-1.0..=1.0)));
        let m = LpvSsa::new(a, b, c, td).unwrap();
        if minimality_test(&m, &x0, 1e-6).unwrap().minimal {
            return (m, x0);
        }
    }
}

#[test]
fn realize_from_theta_table_recovers_state_dimension() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "m.json", TWO_STATE);
    let table = dir.path().join("t.json");
    let out = lpvssa(&["markov", s(&model), "--max-len", "5", "-o", s(&table)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let parsed = ThetaTable::parse(&fs::read_to_string(&table).unwrap()).unwrap();
    assert_eq!(parsed.max_len(), 5);

    let realized = dir.path().join("r.json");
    let out = lpvssa(&["realize", s(&table), "--n", "2", "-o", s(&realized)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (m, x0) = parse_model(&fs::read_to_string(&realized).unwrap()).unwrap();
    assert_eq!(m.nx(), 2);
    assert!(x0.is_some());

    let out = lpvssa(&["isomorph", s(&model), s(&realized)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["success"], Value::Bool(true));
}

#[test]
fn check_passes_on_random_minimal_models() {
    let dir = TempDir::new().unwrap();
    for (seed, np, nx) in [(1, 1, 3), (2, 2, 2), (3, 0, 4)] {
        let (m, x0) = random_minimal(seed, np, nx, TimeDomain::Discrete);
        let p = write(&dir, "m.json", &model_to_json(&m, Some(&x0)));
        let out = lpvssa(&["check", s(&p), "--seed", "7"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn check_passes_on_continuous_time_model() {
    let dir = TempDir::new().unwrap();
    let (m, x0) = random_minimal(11, 1, 2, TimeDomain::Continuous);
    let p = write(&dir, "m.json", &model_to_json(&m, Some(&x0)));
    let out = lpvssa(&["check", s(&p), "--runs", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn check_json_is_reproducible_and_reports_non_minimal_models() {
    let dir = TempDir::new().unwrap();
    // a third state copied from the first is unobservable on its own
    let text = r#"{"np":1,"nx":3,"nu":1,"ny":1,"time_domain":"dt",
     "A":[[[0.5,0.1,0],[0.0,0.3,0],[0,0,0.2]],[[0.1,0.0,0],[0.2,-0.1,0],[0,0,0.1]]],
     "B":[[[1.0],[0.5],[0.0]],[[0.0],[0.2],[0.0]]],
     "C":[[[1.0,0.0,0.0]],[[0.0,0.5,0.0]]],
     "x0":[1.0,-0.5,0.0]}"#;
    let p = write(&dir, "m.json", text);
    let a = lpvssa(&["check", s(&p), "--json", "--seed", "3"]);
    let b = lpvssa(&["check", s(&p), "--json", "--seed", "3"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let report = stdout_json(&a);
    assert_eq!(report["minimality"]["minimal"], Value::Bool(false));
    assert_eq!(report["minimal_dim"], 2);
    assert_eq!(report["pass"], Value::Bool(true));
}

#[test]
fn mismatched_dimensions_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let bad = TWO_STATE.replace(r#""nx":2"#, r#""nx":3"#);
    let p = write(&dir, "bad.json", &bad);
    let out = lpvssa(&["hankel", s(&p)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("A[0]"));
}

#[test]
fn malformed_json_reports_position() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "broken.json", "{\"np\":1,\n \"nx\": }");
    let out = lpvssa(&["minimize", s(&p)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn missing_file_is_an_input_error() {
    let out = lpvssa(&["validate", "/nonexistent/model.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn validate_reports_deficient_scheduling_set() {
    let dir = TempDir::new().unwrap();
    let text = TWO_STATE.replace(r#""x0""#, r#""P":[[0.5],[0.5]],"x0""#);
    let p = write(&dir, "m.json", &text);
    let out = lpvssa(&["validate", s(&p)]);
    assert_eq!(code(&out), 2);
    assert_eq!(stdout_json(&out)["span"], "deficient");

    let p = write(&dir, "ok.json", TWO_STATE);
    let out = lpvssa(&["validate", s(&p)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["valid"], Value::Bool(true));
}

#[test]
fn hankel_reports_rank_and_dumps_matrix() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "m.json", TWO_STATE);
    let dump = dir.path().join("h.bin");
    let out = lpvssa(&["hankel", s(&p), "--n", "2", "--m", "1", "--dump", s(&dump)]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["rank"], 2);
    // car(1, 2) = 7 row words of 2 rows, car(1, 1) = 3 column words of 3 columns
    assert_eq!(report["rows"], 14);
    assert_eq!(report["cols"], 9);
    let h = read_hankel_dump(&fs::read(&dump).unwrap()).unwrap();
    assert_eq!((h.n, h.m), (2, 1));
    assert_eq!(h.matrix.shape(), (14, 9));
}

#[test]
fn hankel_block_ceiling_is_enforced() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "m.json", TWO_STATE);
    let out = lpvssa(&["hankel", s(&p), "--n", "3", "--max-blocks", "10"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--max-blocks"));
}

#[test]
fn minimize_and_decompose_report_block_sizes() {
    let dir = TempDir::new().unwrap();
    // state 3 is neither reachable (zero B, zero x0, not driven) nor observed
    let text = r#"{"np":0,"nx":3,"nu":1,"ny":1,"time_domain":"dt",
     "A":[[[0.5,0.1,0.0],[0.0,0.3,0.0],[0.0,0.0,0.7]]],
     "B":[[[1.0],[0.5],[0.0]]],
     "C":[[[1.0,0.0,0.0]]],
     "x0":[0.0,0.0,0.0]}"#;
    let p = write(&dir, "m.json", text);
    let out = lpvssa(&["decompose", s(&p)]);
    assert_eq!(code(&out), 0);
    let d = stdout_json(&out);
    assert_eq!(d["nx"], 3);
    assert_eq!(d["r"], 2);
    assert_eq!(d["r_m"], 2);
    assert_eq!(d["minimal"]["nx"], 2);

    let min = dir.path().join("min.json");
    let out = lpvssa(&["minimize", s(&p), "-o", s(&min)]);
    assert_eq!(code(&out), 0);
    let (m, _) = parse_model(&fs::read_to_string(&min).unwrap()).unwrap();
    assert_eq!(m.nx(), 2);
}

#[test]
fn isomorph_fails_for_different_models() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", TWO_STATE);
    let b = write(&dir, "b.json", &TWO_STATE.replace("0.5,0.1", "0.4,0.1"));
    let out = lpvssa(&["isomorph", s(&a), s(&b)]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["success"], Value::Bool(false));

    let (m, x0) = random_minimal(5, 1, 3, TimeDomain::Discrete);
    let c = write(&dir, "c.json", &model_to_json(&m, Some(&x0)));
    let out = lpvssa(&["isomorph", s(&a), s(&c)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulate_discrete_and_continuous() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "m.json", TWO_STATE);
    let sig = write(&dir, "s.json", r#"{"time_domain":"dt","u":[[1],[0],[0.5]],"p":[[0.2],[-0.3],[1]]}"#);
    let out = lpvssa(&["simulate", s(&p), s(&sig)]);
    assert_eq!(code(&out), 0);
    let traj = stdout_json(&out);
    // y(0) = C(p(0)) x0 = 1.0 - 0.2 * 0.5 * 0.5
    let y0 = traj["y"][0][0].as_f64().unwrap();
    assert!((y0 - 0.95).abs() < 1e-15);
    assert_eq!(traj["x"].as_array().unwrap().len(), 3);

    let ct_sig = write(&dir, "c.json", r#"{"time_domain":"ct","step":0.5,"u":[[1],[1],[1]],"p":[[0],[0],[0]]}"#);
    let out = lpvssa(&["simulate", s(&p), s(&ct_sig)]);
    assert_eq!(code(&out), 2, "time domains differ");

    let ct_model = write(&dir, "ct.json", &TWO_STATE.replace(r#""dt""#, r#""ct""#));
    let out = lpvssa(&["simulate", s(&ct_model), s(&ct_sig), "--step", "0.01"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["t"].as_array().unwrap().len(), 101);
}

#[test]
fn help_lists_every_subcommand() {
    let out = lpvssa(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["validate", "markov", "hankel", "realize", "minimize", "decompose", "isomorph", "simulate", "check"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

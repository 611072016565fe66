use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wignerlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wignerlab"))
        .args(args)
        .env_remove("WIGNERLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn real_matrix(v: &Value) -> Vec<Vec<f64>> {
    v["rho"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(|z| z[0].as_f64().unwrap()).collect())
        .collect()
}

#[test]
fn quaternion_pair_has_one_dimensional_fixed_space() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"schema_version":1,"group":"q8","elements":["i","k"]}"#);
    let out = wignerlab(&["wigner-verify", "--config", &cfg]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let p = &v["problems"][0];
    assert_eq!(p["intersection_dim"], 1);
    assert_eq!(p["averaged_dim"], 1);
    assert_eq!(v["all_verified"], true);
}

#[test]
fn identity_element_fixes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"schema_version":1,"group":"z3","elements":["0"]}"#);
    let out = wignerlab(&["wigner-verify", "--config", &cfg, "--dim", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["problems"][0]["intersection_dim"], 9);
}

#[test]
fn malformed_cayley_table_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(dir.path(), "g.json", r#"{"labels":["e","a"],"table":[[0,1],[1,1]],"identity":0}"#);
    let out = wignerlab(&["wigner-verify", "--group", &format!("file:{table}")]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
}

#[test]
fn group_file_with_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(
        dir.path(),
        "g.json",
        r#"{"labels":["e","s"],"table":[[0,1],[1,0]],"identity":0,
            "matrices":[[[[1,0],[0,0]],[[0,0],[1,0]]],[[[0,0],[1,0]],[[1,0],[0,0]]]]}"#,
    );
    let cfg = write(dir.path(), "c.json", r#"{"schema_version":1,"elements":["s"]}"#);
    let out = wignerlab(&["wigner-verify", "--config", &cfg, "--group", &format!("file:{table}")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    // matrices commuting with the swap
    assert_eq!(json(&out)["problems"][0]["intersection_dim"], 2);
}

#[test]
fn mixed_batch_csv() {
    let out = wignerlab(&["wigner-verify", "--format", "csv", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("index,group,d,n,"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn entropy_sweep_matches_log_n() {
    let out = wignerlab(&["entropy", "--dim", "8"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,entropy"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 8);
    for (i, row) in rows.iter().enumerate() {
        let (n, h) = row.split_once(',').unwrap();
        assert_eq!(n.parse::<usize>().unwrap(), i + 1);
        assert!((h.parse::<f64>().unwrap() - ((i + 1) as f64).ln()).abs() <= 1e-12);
    }
}

#[test]
fn entropy_base_two_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"schema_version":1,"base":"two","n_max":4}"#);
    let out = wignerlab(&["entropy", "--config", &cfg, "--format", "json"]);
    assert_eq!(code(&out), 0);
    let rows = json(&out)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 4);
    assert!((rows[3]["entropy"].as_f64().unwrap() - 2.0).abs() <= 1e-12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["wigner-verify", "--seed", "11"],
        vec!["invariant-state", "--group", "su3", "--seed", "3"],
        vec!["bundle", "--group", "z2", "--seed", "5"],
    ] {
        let path = dir.path().join("out.json");
        let mut full = args.clone();
        full.extend(["--out", path.to_str().unwrap()]);
        assert_eq!(code(&wignerlab(&full)), 0);
        let first = std::fs::read(&path).unwrap();
        assert_eq!(code(&wignerlab(&full)), 0);
        assert_eq!(first, std::fs::read(&path).unwrap(), "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_wignerlab"))
            .args(["wigner-verify", "--seed", "2"])
            .env("WIGNERLAB_THREADS", threads)
            .output()
            .unwrap()
    };
    let (one, four) = (run("1"), run("4"));
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(code(&run("zero")), 1);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"schema_version":1,"seed":1,"group":"su2","dim":2}"#);
    let out = wignerlab(&["invariant-state", "--config", &cfg, "--seed", "9", "--dim", "3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["config"]["dim"], 3);
    assert_eq!(v["state"]["d"], 3);
}

#[test]
fn config_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"schema_version":2}"#,
        r#"{"seed":1}"#,
        r#"{"schema_version":1,"tol":-1}"#,
        r#"{"schema_version":1,"group":"z2","unknown_key":3}"#,
        r#"{"schema_version":1,"group":"z2","dim":1000}"#,
        "not json",
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.json"), body);
        let out = wignerlab(&["wigner-verify", "--config", &cfg]);
        assert_eq!(code(&out), 1, "{body}");
    }
    assert_eq!(code(&wignerlab(&["wigner-verify", "--group", "sl2"])), 1);
    assert_eq!(code(&wignerlab(&["crossed", "--format", "csv"])), 1);
    assert_eq!(code(&wignerlab(&["crossed", "--group", "su2"])), 1);
    assert_eq!(code(&wignerlab(&["no-such-command"])), 1);
    assert_eq!(code(&wignerlab(&["--help"])), 0);
}

#[test]
fn su2_average_is_maximally_mixed() {
    let out = wignerlab(&["invariant-state", "--group", "su2", "--seed", "4"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let rho = real_matrix(&v["state"]);
    for (i, row) in rho.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let want = if i == j { 0.5 } else { 0.0 };
            assert!((x - want).abs() <= 1e-8);
        }
    }
    assert!(v["invariance_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["separating"]["separating"], true);
}

#[test]
fn dephasing_keeps_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"schema_version":1,"group":"z2",
            "state":{"d":2,"rho":[[[0.7,0],[0.2,0.1]],[[0.2,-0.1],[0.3,0]]]}}"#,
    );
    let out = wignerlab(&["invariant-state", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rho = real_matrix(&json(&out)["state"]);
    assert!((rho[0][0] - 0.7).abs() <= 1e-14);
    assert!((rho[1][1] - 0.3).abs() <= 1e-14);
    assert!(rho[0][1].abs() <= 1e-14);
}

#[test]
fn trivial_group_echoes_the_seed() {
    let out = wignerlab(&["invariant-state", "--group", "trivial", "--dim", "3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["state"], v["seed_state"]);
}

#[test]
fn cesaro_method_reports_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"schema_version":1,"group":"q8","method":"cesaro","generators":["i","j"]}"#,
    );
    let out = wignerlab(&["invariant-state", "--config", &cfg]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!(v["cesaro"]["per_element_residual"].as_f64().unwrap() <= 1e-9);
    let rho = real_matrix(&v["state"]);
    assert!((rho[0][0] - 0.5).abs() <= 1e-8);
}

#[test]
fn cesaro_exhaustion_is_a_contract_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"schema_version":1,"group":"su2","method":"cesaro","max_iter":1}"#,
    );
    let out = wignerlab(&["invariant-state", "--config", &cfg]);
    assert_eq!(code(&out), 2);
}

#[test]
fn crossed_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let trivial = write(dir.path(), "t.json", r#"{"schema_version":1,"action":"trivial"}"#);
    let out = wignerlab(&["crossed", "--group", "z2", "--config", &trivial]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["crossed"]["closure_dim"], 8);
    assert_eq!(v["crossed"]["double_commutant_dim"], 8);

    let out = wignerlab(&["crossed", "--group", "q8"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["crossed"]["closure_dim"], 32);

    let tensor = write(dir.path(), "x.json", r#"{"schema_version":1,"tensor":2}"#);
    let out = wignerlab(&["crossed", "--group", "z2", "--config", &tensor]);
    assert_eq!(code(&out), 0);
    let t = &json(&out)["tensor"];
    assert_eq!(t["tensor_dim"], t["product_dim"]);

    let capped = write(dir.path(), "y.json", r#"{"schema_version":1,"tensor":3,"cap":16}"#);
    assert_eq!(code(&wignerlab(&["crossed", "--group", "z2", "--config", &capped])), 1);
}

#[test]
fn bundle_fibres_are_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"schema_version":1,"points":["p","q","r"]}"#);
    let out = wignerlab(&["bundle", "--group", "su2", "--config", &cfg]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let comps = v["field"]["components"].as_array().unwrap();
    assert_eq!(comps.len(), 3);
    for c in comps {
        let rho = real_matrix(&c["state"]);
        assert!((rho[0][0] - 0.5).abs() <= 1e-8 && (rho[1][1] - 0.5).abs() <= 1e-8);
        assert!(c["invariance_residual"].as_f64().unwrap() <= 1e-7);
    }
}

#[test]
fn explicit_bundle_document_round_trips() {
    let first = wignerlab(&["bundle", "--group", "z3", "--dim", "3"]);
    assert_eq!(code(&first), 0);
    let doc = json(&first)["bundle"].clone();
    let dir = tempfile::tempdir().unwrap();
    let bundle = write(dir.path(), "b.json", &doc.to_string());
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(r#"{{"schema_version":1,"bundle_file":{:?}}}"#, bundle),
    );
    let second = wignerlab(&["bundle", "--config", &cfg]);
    assert_eq!(code(&second), 0, "{}", String::from_utf8_lossy(&second.stderr));
    assert_eq!(json(&first)["field"], json(&second)["field"]);
    // an explicit bundle excludes --group
    assert_eq!(code(&wignerlab(&["bundle", "--config", &cfg, "--group", "z2"])), 1);
}

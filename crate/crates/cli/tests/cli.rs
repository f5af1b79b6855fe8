use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hlmt() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hlmt"));
    cmd.env_remove("HLMT_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    hlmt().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

/// Small deterministic pseudo-random generator for test data.
struct Lcg(u64);

impl Lcg {
    fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / (1u64 << 53) as f64 - 0.5
    }
}

fn write_csv(dir: &Path, name: &str, rows: usize, shifts: &[f64], seed: u64) -> PathBuf {
    let mut g = Lcg(seed);
    let mut text = (1..=shifts.len()).map(|j| format!("v{j}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for _ in 0..rows {
        let row: Vec<String> = shifts.iter().map(|s| (s + g.uniform()).to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_small_column() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "1\n2\n3\n").unwrap();
    let v = stdout_json(&run(&["estimate", s(&path)]));
    assert_eq!(v["schema_version"], "hlmt.estimate/1");
    assert_eq!(v["columns"][0]["estimate"], 2.0);
    assert_eq!(v["columns"][0]["pair_count"], 3);
}

#[test]
fn estimate_constant_column() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "c\n4.5\n4.5\n4.5\n4.5\n").unwrap();
    let v = stdout_json(&run(&["estimate", s(&path)]));
    assert_eq!(v["columns"][0]["estimate"], 4.5);
    assert_eq!(v["columns"][0]["name"], "c");
}

#[test]
fn malformed_cell_names_row_and_column() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "a,b\n1,2\n3,oops\n").unwrap();
    let out = run(&["estimate", s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["schema_version"], "hlmt.error/1");
    assert_eq!(e["error"]["kind"], "parse");
    assert_eq!(e["error"]["row"], 3);
    assert_eq!(e["error"]["column"], 2);
}

#[test]
fn missing_input_is_data_error() {
    let out = run(&["estimate", "/nonexistent/file.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "io");
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["estimate"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "usage");

    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 20, &[0.0], 1);
    let out = run(&["ci", s(&x), "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["estimate", s(&x), "--mode", "two"]);
    assert_eq!(out.status.code(), Some(1));

    let out = hlmt().args(["ci", s(&x)]).env("HLMT_SEED", "not-a-number").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
}

#[test]
fn too_small_sample_is_data_error() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 3, &[0.0, 0.0], 1);
    let out = run(&["global-test", s(&x), "--boot", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn two_sample_inputs_agree() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 12, &[1.0, 0.0], 3);
    let y = write_csv(dir.path(), "y.csv", 9, &[0.0, 0.0], 4);
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    let mut grouped = String::from("g,v1,v2\n");
    for line in read(&x).lines().skip(1) {
        grouped.push_str(&format!("0,{line}\n"));
    }
    for line in read(&y).lines().skip(1) {
        grouped.push_str(&format!("1,{line}\n"));
    }
    let gpath = dir.path().join("g.csv");
    std::fs::write(&gpath, grouped).unwrap();

    let a = stdout_json(&run(&["estimate", s(&x), "--y", s(&y)]));
    let b = stdout_json(&run(&["estimate", s(&gpath), "--group-column", "1"]));
    assert_eq!(a["mode"], "two");
    assert_eq!(a["columns"], b["columns"]);
    assert_eq!(a["columns"][0]["pair_count"], 108);
}

#[test]
fn ci_constant_column_has_zero_width() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "7\n7\n7\n7\n7\n7\n").unwrap();
    let v = stdout_json(&run(&["ci", s(&path), "--boot", "50"]));
    let c = &v["columns"][0];
    assert_eq!(c["lower"], 7.0);
    assert_eq!(c["upper"], 7.0);
}

#[test]
fn seed_flag_env_and_default() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 40, &[0.0, 0.3], 11);
    let a = run(&["ci", s(&x), "--boot", "100", "--seed", "99"]);
    let b = hlmt().args(["ci", s(&x), "--boot", "100"]).env("HLMT_SEED", "99").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["ci", s(&x), "--boot", "100", "--seed", "100"]);
    assert_ne!(a.stdout, c.stdout);
    let d1 = run(&["ci", s(&x), "--boot", "100"]);
    let d2 = run(&["ci", s(&x), "--boot", "100"]);
    assert_eq!(d1.stdout, d2.stdout);
    assert_eq!(stdout_json(&a)["seed"], 99);
}

#[test]
fn global_test_strong_signal_rejects() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 40, &[0.0, 0.0, 3.0, 0.0], 5);
    let v = stdout_json(&run(&["global-test", s(&x), "--boot", "100"]));
    assert_eq!(v["reject"], true);
    assert_eq!(v["schema_version"], "hlmt.global-test/1");
}

#[test]
fn global_test_mean_method_keeps_schema() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 40, &[0.0, 0.0, 0.0], 6);
    let hl = stdout_json(&run(&["global-test", s(&x), "--boot", "100"]));
    let mean = stdout_json(&run(&["global-test", s(&x), "--boot", "100", "--method", "mean"]));
    let keys = |v: &Value| v.as_object().unwrap().keys().cloned().collect::<Vec<_>>();
    assert_eq!(keys(&hl), keys(&mean));
    assert_eq!(mean["method"], "mean");
}

#[test]
fn fdp_with_and_without_truth() {
    let dir = TempDir::new().unwrap();
    let mut shifts = vec![0.0; 12];
    shifts[..3].iter_mut().for_each(|v| *v = 2.0);
    let x = write_csv(dir.path(), "x.csv", 40, &shifts, 8);
    let truth = dir.path().join("truth.txt");
    std::fs::write(&truth, (4..=12).map(|i| i.to_string()).collect::<Vec<_>>().join("\n")).unwrap();

    let plain = stdout_json(&run(&["fdp", s(&x), "--boot", "100"]));
    assert!(plain.get("report").is_none());
    assert_eq!(plain["rejected"], serde_json::json!([1, 2, 3]));

    let v = stdout_json(&run(&["fdp", s(&x), "--boot", "100", "--truth", s(&truth)]));
    assert_eq!(v["report"]["fdp"], 0.0);
    assert_eq!(v["report"]["tpp"], 1.0);
    assert_eq!(v["pvalues"], plain["pvalues"]);

    let csv = run(&["fdp", s(&x), "--boot", "100", "--truth", s(&truth), "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("column,name,pvalue,rejected,null\n"), "{text}");
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn truth_out_of_range() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 20, &[0.0, 0.0], 9);
    let truth = dir.path().join("truth.txt");
    std::fs::write(&truth, "1 3\n").unwrap();
    let out = run(&["fdp", s(&x), "--boot", "20", "--truth", s(&truth)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "truth-dimension-mismatch");
}

#[test]
fn student_t_fdp() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 50, &[1.0, 0.0, 0.0], 10);
    let v = stdout_json(&run(&["fdp", s(&x), "--method", "student-t"]));
    assert_eq!(v["method"], "student-t");
    assert_eq!(v["rejected"], serde_json::json!([1]));
}

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/table1_case1.json")
}

#[test]
fn bundled_config_runs() {
    let cfg = bundled_config();
    let out = run(&["simulate", "--config", s(&cfg), "--n", "30", "--p", "60", "--boot", "20", "--reps", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("case,method,test,n,m,p,mu,alpha,replicates,reps,seed,rejection_rate,mean_fdp,mean_tpp"));
    assert!(lines.next().unwrap().starts_with("1,hl,global,30,,60,0,0.05,20,3,20240601,"));
}

#[test]
fn bundled_config_is_valid_as_is() {
    let text = std::fs::read_to_string(bundled_config()).unwrap();
    let cfg: hlmt_core::simlab::SimulationConfig = serde_json::from_str(&text).unwrap();
    cfg.validate().unwrap();
}

#[test]
fn simulate_config_errors_name_field() {
    let out = run(&["simulate", "--case", "1", "--p", "10", "--method", "hl", "--test", "global", "--alpha", "0.05"]);
    assert_eq!(out.status.code(), Some(1));
    let e = stderr_json(&out);
    assert_eq!(e["error"]["kind"], "config");
    assert_eq!(e["error"]["field"], "n");

    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"case_id":1,"n":20,"p":10,"mu":0,"alphas":[0.05],"seed":1,"method":"hl","test":"global","bogus":3}"#).unwrap();
    let e = stderr_json(&run(&["simulate", "--config", s(&cfg)]));
    assert_eq!(e["error"]["field"], "bogus");

    std::fs::write(&cfg, r#"{"case_id":4,"n":20,"p":10,"mu":0,"alphas":[0.05],"seed":1,"method":"hl","test":"global","signal_count":5}"#).unwrap();
    let e = stderr_json(&run(&["simulate", "--config", s(&cfg)]));
    assert_eq!(e["error"]["field"], "m");

    std::fs::write(&cfg, "{ not json").unwrap();
    let out = run(&["simulate", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_json_format() {
    let v = stdout_json(&run(&[
        "simulate", "--case", "2", "--n", "20", "--p", "8", "--signal-count", "2", "--mu", "0.5", "--alpha", "0.1",
        "--alpha", "0.2", "--boot", "20", "--reps", "2", "--method", "hl", "--test", "fdp", "--format", "json",
    ]));
    assert_eq!(v["schema_version"], "hlmt.simulate/1");
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn are_nu4() {
    let v = stdout_json(&run(&["are", "--nu", "4", "--reps", "20000"]));
    let are = v["results"][0]["are"].as_f64().unwrap();
    assert!((are - 1.25).abs() <= 0.08, "ARE {are}");
    assert_eq!(v["results"][0]["nu"], "4");
}

#[test]
fn manifest_replay_round_trip() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 30, &[0.0, 0.5, 0.0], 12);
    let out_path = dir.path().join("out.json");
    let manifest = dir.path().join("run.json");
    let out = run(&["fdp", s(&x), "--boot", "50", "--seed", "5", "--out", s(&out_path), "--manifest", s(&manifest)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let m: Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    assert_eq!(m["schema_version"], "hlmt.manifest/1");
    assert_eq!(m["command"], "fdp");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);

    let replay = run(&["replay", s(&manifest)]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    assert_eq!(replay.stdout, std::fs::read(&out_path).unwrap());

    // A tampered digest is a reproduction failure.
    let mut bad = m.clone();
    bad["output_sha256"] = Value::from("00");
    let bad_path = dir.path().join("bad.json");
    std::fs::write(&bad_path, serde_json::to_vec(&bad).unwrap()).unwrap();
    let out = run(&["replay", s(&bad_path)]);
    assert_eq!(out.status.code(), Some(3));

    // Changed input data is a data error.
    std::fs::write(&x, "v1,v2,v3\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n").unwrap();
    let out = run(&["replay", s(&manifest)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_manifest_replay() {
    let dir = TempDir::new().unwrap();
    let manifest = dir.path().join("run.json");
    let out = run(&[
        "simulate", "--config", s(&bundled_config()), "--n", "24", "--p", "55", "--boot", "20", "--reps", "3",
        "--manifest", s(&manifest),
    ]);
    assert!(out.status.success());
    let replay = run(&["replay", s(&manifest)]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    assert_eq!(replay.stdout, out.stdout);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(dir.path(), "x.csv", 30, &[0.0, 0.4, 0.0, 0.1], 13);
    let y = write_csv(dir.path(), "y.csv", 25, &[0.0, 0.0, 0.0, 0.0], 14);
    let cases: Vec<Vec<&str>> = vec![
        vec!["ci", s(&x), "--boot", "80"],
        vec!["ci", s(&x), "--y", s(&y), "--boot", "80"],
        vec!["global-test", s(&x), "--boot", "80"],
        vec!["global-test", s(&x), "--y", s(&y), "--boot", "80", "--method", "mean"],
        vec!["fdp", s(&x), "--boot", "80"],
        vec!["fdp", s(&x), "--y", s(&y), "--boot", "80"],
        vec!["simulate", "--case", "5", "--n", "16", "--m", "12", "--p", "6", "--signal-count", "2", "--mu", "0.3", "--alpha", "0.1",
             "--boot", "20", "--reps", "4", "--method", "hl", "--test", "fdp"],
        vec!["are", "--nu", "2", "--n", "20", "--reps", "1000"],
    ];
    for args in cases {
        let one = hlmt().args(&args).args(["--threads", "1"]).output().unwrap();
        let four = hlmt().args(&args).args(["--threads", "4"]).output().unwrap();
        assert!(one.status.success(), "{args:?}: {}", String::from_utf8_lossy(&one.stderr));
        assert_eq!(one.stdout, four.stdout, "{args:?}");
    }
}

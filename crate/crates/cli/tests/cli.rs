use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn esslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esslab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

#[test]
fn free_structural_is_the_interval() {
    let free = scenario("free.json");
    let out = esslab(&["spectrum", "--scenario", free.to_str().unwrap(), "--method", "structural"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let iv = v["intervals"].as_array().unwrap();
    assert_eq!(iv.len(), 1);
    assert!((iv[0][0].as_f64().unwrap() + 2.0).abs() < 1e-10);
    assert!((iv[0][1].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert_eq!(v["report"]["approximate"], false);
}

#[test]
fn missing_scenario_is_a_usage_error() {
    let out = esslab(&["spectrum", "--scenario", "nosuch.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuch.json"));
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(code(&esslab(&["bogus"])), 2);
    assert_eq!(code(&esslab(&["verify", "nosuch"])), 2);
    let free = scenario("free.json");
    assert_eq!(code(&esslab(&["criteria", "chihara", "--scenario", free.to_str().unwrap(), "--targets", "1"])), 2);
    assert_eq!(code(&esslab(&["spectrum", "--scenario", free.to_str().unwrap(), "--method", "truncation", "--N", "10"])), 2);
}

#[test]
fn decaying_witness_verifies() {
    let out = esslab(&["verify", "thm-7-2", "--budget", "2000,4000"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["passed"], true);
    let sizes: Vec<u64> = v["distances"].as_array().unwrap().iter().map(|r| r["N"].as_u64().unwrap()).collect();
    assert_eq!(sizes, vec![2000, 4000]);
}

#[test]
fn failing_criterion_exits_one() {
    // period-2 has two bands, so no polynomial in J is compact
    let p2 = scenario("period-2.json");
    let out = esslab(&["criteria", "chihara", "--scenario", p2.to_str().unwrap(), "--targets", "-1,1"]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["verdict"], "fails");
}

#[test]
fn sweep_rows_ascend_in_n() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let p2 = scenario("period-2.json");
    let out = esslab(&[
        "sweep",
        "--scenario",
        p2.to_str().unwrap(),
        "--sizes",
        "1000,300,600",
        "--reference",
        "structural",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text, stdout(&out));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,hausdorff"));
    let ns: Vec<usize> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ns, vec![300, 600, 1000]);
}

#[test]
fn circle_cloud_is_sorted_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("zeros.csv");
    let cmv = scenario("cmv-constant-0.5.json");
    let out = esslab(&[
        "spectrum",
        "--scenario",
        cmv.to_str().unwrap(),
        "--method",
        "truncation",
        "--N",
        "300",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,zero"));
    let theta: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(!theta.is_empty());
    assert!(theta.windows(2).all(|w| w[0] <= w[1]));
    assert!(theta.iter().all(|t| (0.0..std::f64::consts::TAU).contains(t)));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("zeros.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["scenario"]["id"], "cmv-constant-0.5");
    assert!(meta["seeds"].as_array().unwrap().is_empty());
    assert!(meta["git_describe"].as_str().is_some_and(|s| !s.is_empty()));
    assert_eq!(meta["tolerances"]["persist"], 0.02);
}

#[test]
fn empty_result_gives_header_only_csv() {
    // alpha_n -> 0 fast does not approach the circle, so the tail of
    // -conj(alpha_{j+1}) alpha_j has only zero products and no limit points
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("zero.json");
    fs::write(&spec, r#"{"family":"cmv","kind":"periodic","params":{"alpha":[[0.0,0.0]]}}"#).unwrap();
    let csv = dir.path().join("g.csv");
    let out = esslab(&["criteria", "golinskii", "--scenario", spec.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "the tail stays away from the circle");
    assert_eq!(fs::read_to_string(&csv).unwrap(), "kind,start,end\n");

    let free = scenario("free.json");
    let csv = dir.path().join("rl.csv");
    let out = esslab(&["rightlimits", "--scenario", free.to_str().unwrap(), "--detect", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(fs::read_to_string(&csv).unwrap().starts_with("cluster,radius,late_density,transient,centers\n"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let qp = scenario("cos-slipped.json");
    let run = |name: &str, threads: &str| {
        let csv = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_esslab"))
            .env("ESSLAB_THREADS", threads)
            .args(["spectrum", "--scenario", qp.to_str().unwrap(), "--method", "structural", "--out", csv.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        let meta = fs::read(dir.path().join(format!("{name}.meta.json"))).unwrap();
        (out.stdout, fs::read(&csv).unwrap(), meta)
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "4");
    assert_eq!(a, b);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let free = scenario("free.json");
    let out = Command::new(env!("CARGO_BIN_EXE_esslab"))
        .env("ESSLAB_THREADS", "zero")
        .args(["spectrum", "--scenario", free.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn unwritable_output_is_exit_three() {
    let free = scenario("free.json");
    let out = esslab(&["spectrum", "--scenario", free.to_str().unwrap(), "--out", "/nonexistent-dir/x/out.csv"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn localization_table_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("loc.csv");
    let out = esslab(&["verify", "localization", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("L,c_L,norm_C,norm_C_L2\n"));
    assert_eq!(text.lines().count(), 8);
}

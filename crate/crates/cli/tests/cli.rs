use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_causalcast"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// 208 quarters of a two-variable AR system starting 1970Q1.
fn fixture(dir: &Path) -> PathBuf {
    let path = dir.join("macro.csv");
    let mut text = String::from("date,gdp,unemp\n");
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for t in 0..208usize {
        let e1 = ((t * 7919 % 1000) as f64 / 1000.0 - 0.5) * 2.0;
        let e2 = ((t * 104_729 % 997) as f64 / 997.0 - 0.5) * 2.0;
        a = 0.7 * a + e1;
        b = 0.5 * b + 0.4 * a + e2;
        text.push_str(&format!("{}Q{},{a},{b}\n", 1970 + t / 4, t % 4 + 1));
    }
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_data_file_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["forecast", "--data", "no/such/file.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no/such/file.csv"));
}

#[test]
fn help_lists_flags() {
    let o = bin().args(["forecast", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--context-len", "--horizon", "--step", "--bins", "--n-samples", "--seed", "--threads", "--out"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    let o = bin().args(["discover", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--tau-max", "--alpha-pc", "--alpha-mci", "--test", "--mode"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn forecast_writes_42_bundles_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let out = tmp.path().join("fc");
    let o = run(&["forecast", "--data", data.to_str().unwrap(), "--var", "gdp", "--n-samples", "50"], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = json(out.join("forecast.json"));
    let bundles = f["bundles"].as_array().unwrap();
    assert_eq!(bundles.len(), 42);
    assert_eq!(bundles[0]["origin"], "1980Q1");
    assert_eq!(bundles[0]["quantiles"].as_object().unwrap().len(), 3);
    let bands = std::fs::read_to_string(out.join("bands.csv")).unwrap();
    // hash line, header, 42 origins x 4 steps
    assert_eq!(bands.lines().count(), 2 + 42 * 4);
    let m = json(out.join("manifest.json"));
    assert_eq!(m["config_hash"], f["config_hash"]);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn evaluate_reads_forecast_output() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let d = data.to_str().unwrap();
    let fc = tmp.path().join("fc");
    assert!(run(&["forecast", "--data", d, "--var", "unemp"], &fc).status.success());
    let ev = tmp.path().join("ev");
    let b = fc.join("forecast.json");
    let o = run(&["evaluate", "--bundles", b.to_str().unwrap(), "--actuals", d], &ev);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(ev.join("report.json"));
    assert_eq!(r["n_origins"], 42);
    assert_eq!(r["proportions"].as_array().unwrap().len(), 4);
    assert_eq!(r["anomalies"].as_array().unwrap().len(), 42 * 4);
    for f in ["errors.csv", "widths.csv", "posteriors.csv", "anomalies.csv", "manifest.json"] {
        assert!(ev.join(f).exists(), "{f}");
    }
}

#[test]
fn empty_bundle_list_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let b = tmp.path().join("empty.json");
    std::fs::write(&b, r#"{"var": "gdp", "bundles": []}"#).unwrap();
    let o = run(&["evaluate", "--bundles", b.to_str().unwrap(), "--actuals", data.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no forecast bundles"));
}

#[test]
fn counts_mode_reproduces_posteriors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["evaluate", "--counts", "39,35,31,32", "--n", "42"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(tmp.path().join("report.json"));
    assert_eq!(r["posteriors"][0]["a"], 39.5);
    assert_eq!(r["posteriors"][0]["b"], 3.5);
    let p = r["proportions"][0].as_f64().unwrap();
    assert!((p - 0.929).abs() < 0.001);
}

#[test]
fn discover_labels_reduced_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let o = run(&["discover", "--data", data.to_str().unwrap(), "--mode", "lpcmci", "--tau-max", "2"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(tmp.path().join("graph.json"))["mode"], "lpcmci-lite");
    let dot = std::fs::read_to_string(tmp.path().join("graph.dot")).unwrap();
    assert!(dot.starts_with("// config_hash="));
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 3, "augment": {"n": 2, "length": 32}}"#).unwrap();
    let out = tmp.path().join("a");
    let o = bin().args(["--config", cfg.to_str().unwrap(), "augment", "--n", "3", "--out"]).arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("augment.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "series_0,series_1,series_2");
    assert_eq!(lines.count(), 32);
    assert_eq!(json(out.join("manifest.json"))["config"]["seed"], 3);

    std::fs::write(&cfg, r#"{"sede": 3}"#).unwrap();
    let o = bin().args(["--config", cfg.to_str().unwrap(), "augment", "--out"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn citest_reports_lagged_dependence() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let o = run(
        &["citest", "--data", data.to_str().unwrap(), "--x", "gdp:1", "--y", "unemp", "--z", "unemp:1"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(tmp.path().join("citest.json"));
    assert_eq!(r["result"]["sample_size"], 207);
    assert_eq!(r["result"]["dof"], 204);
    assert!(r["result"]["p_value"].as_f64().unwrap() < 0.01);
}

fn golden(name: &str, produced: &Path) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let bytes = std::fs::read(produced).unwrap();
    if std::env::var_os("CAUSALCAST_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &bytes).unwrap();
    }
    let want = std::fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert!(want == bytes, "{name} differs from its golden file");
}

#[test]
fn outputs_match_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let run_in = |args: &[&str]| {
        let o = bin().current_dir(tmp.path()).args(args).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    };
    run_in(&["discover", "--data", "macro.csv", "--tau-max", "2", "--seed", "5", "--out", "g"]);
    run_in(&["forecast", "--data", "macro.csv", "--var", "unemp", "--n-samples", "60", "--seed", "5", "--out", "fc"]);
    run_in(&["evaluate", "--bundles", "fc/forecast.json", "--actuals", "macro.csv", "--out", "ev"]);
    golden("graph.json", &tmp.path().join("g/graph.json"));
    golden("report.json", &tmp.path().join("ev/report.json"));
}

#[test]
fn library_errors_name_their_module() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("short.csv");
    std::fs::write(&data, "date,a\n2000Q1,1\n2000Q2,2\n2000Q3,3\n").unwrap();
    let o = run(&["forecast", "--data", data.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: chronoslite: insufficient history"), "{}", stderr(&o));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn corruga(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corruga")).args(args).env("CORRUGA_THREADS", "2").output().unwrap()
}

fn surface(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "surfaces", &format!("{name}.json")].iter().collect();
    p.display().to_string()
}

fn analyze(name: &str, out: &Path, extra: &[&str]) -> (Output, Value) {
    let path = surface(name);
    let mut args = vec!["analyze", "--surface", &path, "--resolution", "16", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = corruga(&args);
    let report = fs::read_to_string(out.join("report.json")).map(|t| serde_json::from_str(&t).unwrap()).unwrap_or(Value::Null);
    (o, report)
}

#[test]
fn shipped_surfaces_match_the_builtins() {
    for name in corruga::config::BUILTIN_NAMES {
        let cfg = corruga::config::SurfaceConfig::load(Path::new(&surface(name))).unwrap();
        assert_eq!(cfg, corruga::config::builtin(name).unwrap(), "{name}");
    }
}

#[test]
fn eggbox_report() {
    let dir = tempfile::tempdir().unwrap();
    let (o, r) = analyze("eggbox", dir.path(), &["--export-obj"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(r["dims"], serde_json::json!([1, 2]));
    assert_eq!(r["surface"]["family"], "double-corrugation");
    assert_eq!(r["sigma_spectrum_ref"], "spectrum.csv");
    for p in r["pairs"].as_array().unwrap() {
        assert!(p["relative"].as_f64().unwrap() < 1e-2);
    }
    assert!(r["export"]["obj_amplitude"].as_f64().unwrap() > 0.0);
    let files = r["export"]["files"].as_array().unwrap();
    assert_eq!(files.len(), 1 + r["modes"].as_array().unwrap().iter().filter(|m| m["class"] != "constant").count());
    for f in files {
        let text = fs::read_to_string(dir.path().join(f.as_str().unwrap())).unwrap();
        assert!(text.lines().any(|l| l.starts_with("f ")));
    }
    let spectrum = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("index,kind,sigma,sigma_over_cut,residual,accepted,d11,d12,d22"));
}

#[test]
fn plane_and_miura_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (o, r) = analyze("plane", dir.path(), &[]);
    assert!(o.status.success());
    assert_eq!(r["dims"], serde_json::json!([0, 3]));
    assert!(!dir.path().join("modes").exists());

    let (o, r) = analyze("miura", dir.path(), &[]);
    assert!(o.status.success());
    for m in r["modes"].as_array().unwrap() {
        if m["class"] == "bending" || m["class"] == "mixed" {
            let chi = &m["chi"];
            let det = chi[0][0].as_f64().unwrap() * chi[1][1].as_f64().unwrap() - chi[0][1].as_f64().unwrap().powi(2);
            assert!(det < 0.0, "{chi}");
        }
    }
}

#[test]
fn reports_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (_, mut ra) = analyze("hybrid", a.path(), &["--seed", "7"]);
    let (_, mut rb) = analyze("hybrid", b.path(), &["--seed", "7"]);
    ra["timings"] = Value::Null;
    rb["timings"] = Value::Null;
    assert_eq!(ra, rb);
    assert_eq!(fs::read(a.path().join("spectrum.csv")).unwrap(), fs::read(b.path().join("spectrum.csv")).unwrap());
}

#[test]
fn ambiguous_threshold_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // no spectrum has a gap this large
    let (o, r) = analyze("eggbox", dir.path(), &["--threshold", "auto:1e300"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(r["solver"]["ambiguous"][0], "solver");
    assert!(r["dims"].is_null());
    let spectrum = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(spectrum.lines().count() > 1);
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"family": "torus"}"#).unwrap();
    assert_eq!(corruga(&["analyze", "--surface", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(corruga(&["analyze", "--surface", "missing.json"]).status.code(), Some(1));
    assert_eq!(corruga(&["analyze", "--resolution", "x"]).status.code(), Some(1));
    assert_eq!(corruga(&["analyze", "--surface", &surface("plane"), "--threshold", "auto:-1"]).status.code(), Some(1));
    assert_eq!(corruga(&["verify", "everything"]).status.code(), Some(1));
    assert_eq!(corruga(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let o = corruga(&["verify", "warping", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("criterion 11 PASS"));
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);

    let o = corruga(&["verify", "lemma", "--json"]);
    assert!(o.status.success());
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["criteria"][0]["id"], 9);
}

#[test]
fn warping_command() {
    let dir = tempfile::tempdir().unwrap();
    let square = dir.path().join("square.csv");
    fs::write(&square, "x,y\n0,0\n1,0\n1,1\n0,1\n").unwrap();
    let o = corruga(&["warping", "--section", square.to_str().unwrap(), "--alpha", "1", "--closed"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim().parse::<f64>().unwrap(), -2.0);

    let out = dir.path().join("w.csv");
    let o = corruga(&["warping", "--section", square.to_str().unwrap(), "--alpha", "-0.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out).unwrap();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // s = 3 at (0,1); w = α Σ (x_{k+1} y_k − x_k y_{k+1}) = −0.5 · −2
    assert_eq!(last, vec![3.0, 1.0]);
}

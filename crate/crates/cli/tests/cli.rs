use std::fs;
use std::path::Path;

use assert_cmd::Command;
use photostat_cli::schema;
use serde_json::{json, Value};
use tempfile::TempDir;

/// Small enough for a test run, large enough for the fits to converge.
fn quick_config() -> Value {
    json!({
        "ramsey_sweep": {"state": "all", "n_points": 5, "shots": 10000, "tau_points": 201},
        "dualpath_sweep": {"n_points": 4, "samples": 100000, "batches": 10, "export_record": true},
        "planck_calibration": {"n_points": 40, "jpa_points": 40},
        "quadrature_check": {"samples": 100000, "batches": 10}
    })
}

fn photostat() -> Command {
    let mut c = Command::cargo_bin("photostat").unwrap();
    c.env_remove("PHOTOSTAT_OUT");
    c
}

fn write_config(dir: &Path, value: &Value) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

fn run(exp: &str, out: &Path, config: &Path, extra: &[&str]) {
    photostat()
        .args(["run", exp, "--seed", "11", "--threads", "2", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .assert()
        .success();
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn validate(schema_name: &str, instance: &Value, file: &Path) {
    let schema: Value = serde_json::from_str(schema::get(schema_name).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{}: {errors:?}", file.display());
}

const EXPERIMENTS: [&str; 6] = [
    "variance_curves",
    "ramsey_sweep",
    "dualpath_sweep",
    "jpa_sweep",
    "planck_calibration",
    "quadrature_check",
];

#[test]
fn every_artifact_has_a_header_and_validates() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &quick_config());
    let root = tmp.path().join("runs");
    for exp in EXPERIMENTS {
        run(exp, &root.join(exp), &cfg, &[]);
    }
    photostat().arg("report").arg(&root).assert().success();
    validate("summary", &read_json(&root.join("summary.json")), &root);

    for exp in EXPERIMENTS {
        let dir = root.join(exp);
        let manifest = read_json(&dir.join("manifest.json"));
        let mut listed: Vec<String> = manifest["files"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect();
        let mut present: Vec<String> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        present.sort();
        listed.sort();
        assert_eq!(listed, present, "{exp}");
        for f in &present {
            let path = dir.join(f);
            if f.ends_with(".csv") {
                let text = fs::read_to_string(&path).unwrap();
                let header = text.lines().next().unwrap();
                assert!(
                    header
                        .split(',')
                        .all(|h| h.chars().next().is_some_and(|c| c.is_ascii_alphabetic())),
                    "{f}: {header}"
                );
                assert!(text.lines().count() > 1, "{f} has no rows");
            } else if f.ends_with(".json") {
                let name =
                    schema::for_artifact(f, exp).unwrap_or_else(|| panic!("no schema for {f}"));
                validate(&name, &read_json(&path), &path);
            }
        }
    }
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &quick_config());
    for exp in ["quadrature_check", "ramsey_sweep", "planck_calibration"] {
        let (a, b) = (
            tmp.path().join(format!("{exp}_a")),
            tmp.path().join(format!("{exp}_b")),
        );
        run(exp, &a, &cfg, &[]);
        run(exp, &b, &cfg, &[]);
        photostat().arg("report").arg(&a).assert().success();
        photostat().arg("report").arg(&b).assert().success();
        for e in fs::read_dir(&a).unwrap() {
            let name = e.unwrap().file_name();
            let (x, y) = (
                fs::read(a.join(&name)).unwrap(),
                fs::read(b.join(&name)).unwrap(),
            );
            assert!(x == y, "{exp}/{}", name.to_string_lossy());
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &quick_config());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run("ramsey_sweep", &a, &cfg, &[]);
    photostat()
        .args([
            "run",
            "ramsey_sweep",
            "--seed",
            "11",
            "--threads",
            "1",
            "--config",
        ])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .assert()
        .success();
    for f in ["ramsey_sweep.csv", "results.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn other_seeds_differ() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &quick_config());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run("quadrature_check", &a, &cfg, &[]);
    photostat()
        .args(["run", "quadrature_check", "--seed", "12", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .assert()
        .success();
    assert_ne!(
        fs::read(a.join("quadrature_check.csv")).unwrap(),
        fs::read(b.join("quadrature_check.csv")).unwrap()
    );
}

#[test]
fn variance_curves_table() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("vc");
    photostat()
        .args(["run", "variance_curves", "--out"])
        .arg(&out)
        .assert()
        .success();
    let text = fs::read_to_string(out.join("variance_curves.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("state,n,sqrt_var"));
    let rows: Vec<(String, f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 3 * 101);
    for (state, n, s) in rows {
        assert!((0.0..=10.0).contains(&n));
        let want = if state == "thermal" {
            (n * n + n).sqrt()
        } else {
            n.sqrt()
        };
        assert!(
            (s - want).abs() <= 1e-12 * want.max(1.0),
            "{state} {n}: {s} vs {want}"
        );
    }
}

#[test]
fn jpa_thermal_xi_column() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("jpa");
    photostat()
        .args([
            "run",
            "jpa_sweep",
            "--noise-statistics",
            "thermal",
            "--n-n",
            "0.66",
            "--out",
        ])
        .arg(&out)
        .assert()
        .success();
    let r = read_json(&out.join("results.json"));
    assert!((r["closed_form"]["xi"].as_f64().unwrap() - 6.64).abs() < 1e-12);
    assert!((r["fit"]["parameters"]["xi"].as_f64().unwrap() - 6.64).abs() < 1e-9);
    assert!((r["fit"]["parameters"]["rho"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    let table = fs::read_to_string(out.join("comparison_table.csv")).unwrap();
    assert!(table.starts_with(
        "label,noise_statistics,noise_photons,rho,xi,offset,measured_xi,measured_offset"
    ));
    assert_eq!(table.lines().count(), 1 + 9);
}

#[test]
fn dualpath_report_band() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &quick_config());
    let out = tmp.path().join("dp");
    run("dualpath_sweep", &out, &cfg, &[]);
    let assert = photostat().arg("report").arg(&out).assert().success();
    let text = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    assert!(text.contains("rho"), "{text}");
    let s = read_json(&out.join("summary.json"));
    let rho = s["runs"][0]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["quantity"] == "rho")
        .unwrap()
        .clone();
    assert_eq!(rho["criterion"], 4);
    assert_eq!(rho["lower"], 1.9);
    assert_eq!(rho["upper"], 2.1);
}

#[test]
fn report_on_empty_dir_lists_expected_files() {
    let tmp = TempDir::new().unwrap();
    let assert = photostat().arg("report").arg(tmp.path()).assert().code(1);
    let err = String::from_utf8(assert.get_output().stderr.clone()).unwrap();
    for f in [
        "manifest.json",
        "results.json",
        "dualpath_sweep.csv",
        "variance_curves.csv",
    ] {
        assert!(err.contains(f), "{err}");
    }
    assert!(!tmp.path().join("summary.json").exists());
}

#[test]
fn report_names_missing_tables() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("jpa");
    photostat()
        .args(["run", "jpa_sweep", "--out"])
        .arg(&out)
        .assert()
        .success();
    fs::remove_file(out.join("comparison_table.csv")).unwrap();
    let assert = photostat().arg("report").arg(&out).assert().code(1);
    let err = String::from_utf8(assert.get_output().stderr.clone()).unwrap();
    assert!(
        err.contains("comparison_table.csv") && !err.contains("jpa_sweep.csv,"),
        "{err}"
    );
}

#[test]
fn config_errors_exit_one_with_location() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        "{\n  \"seed\": 1,\n  \"device\": {\"kappa_x\": 8.5}\n}\n",
    )
    .unwrap();
    let a = photostat()
        .args(["run", "variance_curves", "--config"])
        .arg(&bad)
        .assert()
        .code(1);
    let err = String::from_utf8(a.get_output().stderr.clone()).unwrap();
    assert!(err.contains("kappa_x") && err.contains("line 3"), "{err}");

    let cfg = write_config(tmp.path(), &json!({"jpa_sweep": {"n_n": -1.0}}));
    let out = tmp.path().join("never");
    let a = photostat()
        .args(["run", "jpa_sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .assert()
        .code(1);
    let err = String::from_utf8(a.get_output().stderr.clone()).unwrap();
    assert!(err.contains("jpa_sweep.n_n"), "{err}");
    assert!(!out.exists());

    photostat()
        .args(["run", "no_such_experiment"])
        .assert()
        .code(1);
    photostat()
        .args(["run", "jpa_sweep", "--n-n", "abc"])
        .assert()
        .code(1);
    photostat().args(["run"]).assert().code(1);
}

#[test]
fn numerical_failure_exits_two_without_output() {
    let tmp = TempDir::new().unwrap();
    // 0.05 K to 0.12 K is too narrow a span for the chain fit
    let cfg = write_config(
        tmp.path(),
        &json!({"planck_calibration": {"t_max_k": 0.12}}),
    );
    let out = tmp.path().join("pc");
    photostat()
        .args(["run", "planck_calibration", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .assert()
        .code(2);
    let left: Vec<_> = fs::read_dir(&out).unwrap().collect();
    assert!(left.is_empty(), "partial output left behind");
}

#[test]
fn busy_output_dir_is_refused() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("busy");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(photostat_cli::LOCK_FILE), "").unwrap();
    photostat()
        .args(["run", "jpa_sweep", "--out"])
        .arg(&out)
        .assert()
        .code(1);
    assert!(!out.join("results.json").exists());
}

#[test]
fn output_root_from_environment() {
    let tmp = TempDir::new().unwrap();
    photostat()
        .env("PHOTOSTAT_OUT", tmp.path())
        .args(["run", "jpa_sweep"])
        .assert()
        .success();
    assert!(tmp.path().join("jpa_sweep").join("results.json").exists());
    assert!(!tmp
        .path()
        .join("jpa_sweep")
        .join(photostat_cli::LOCK_FILE)
        .exists());
}

#[test]
fn schema_subcommand() {
    let a = photostat().arg("schema").assert().success();
    let listed = String::from_utf8(a.get_output().stdout.clone()).unwrap();
    assert_eq!(listed.lines().count(), schema::SCHEMAS.len());
    let a = photostat().args(["schema", "summary"]).assert().success();
    let v: Value = serde_json::from_slice(&a.get_output().stdout).unwrap();
    assert_eq!(v["title"], "summary");
    photostat().args(["schema", "nope"]).assert().code(1);
    let tmp = TempDir::new().unwrap();
    photostat()
        .args(["schema", "--write"])
        .arg(tmp.path())
        .assert()
        .success();
    for (name, _) in schema::SCHEMAS {
        let v = read_json(&tmp.path().join(schema::file_name(name)));
        jsonschema::validator_for(&v).unwrap();
    }
}

//! Consolidated pass/fail summary over one run directory or a directory of runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::Experiment;
use crate::error::{CliError, Result};
use crate::experiments::expected_tables;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    /// Acceptance criterion number; `None` for closed-form sanity checks.
    pub criterion: Option<u32>,
    pub quantity: String,
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub reference: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// A measured value quoted for comparison only; never graded.
#[derive(Debug, Clone, Serialize)]
pub struct Comparator {
    pub quantity: String,
    pub value: Option<f64>,
    pub measured: f64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run: String,
    pub experiment: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub comparators: Vec<Comparator>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub runs: Vec<RunSummary>,
    pub all_pass: bool,
}

/// Files every completed run directory holds.
pub fn expected_files(exp: Option<Experiment>) -> Vec<String> {
    let mut v = vec!["manifest.json".to_string(), "results.json".to_string()];
    match exp {
        Some(e) => v.extend(expected_tables(e).iter().map(|s| s.to_string())),
        None => {
            for e in Experiment::ALL {
                v.extend(expected_tables(e).iter().map(|s| format!("{s} ({e})")));
            }
        }
    }
    v
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })
}

fn run_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(CliError::MissingArtifacts {
            dir: dir.display().to_string(),
            missing: expected_files(None),
        });
    }
    if dir.join("manifest.json").exists() || dir.join("results.json").exists() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut subs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("manifest.json").exists() || p.join("results.json").exists())
        .collect();
    subs.sort();
    if subs.is_empty() {
        return Err(CliError::MissingArtifacts {
            dir: dir.display().to_string(),
            missing: expected_files(None),
        });
    }
    Ok(subs)
}

pub fn report(dir: &Path) -> Result<Summary> {
    let mut runs = Vec::new();
    for run in run_dirs(dir)? {
        let manifest = run.join("manifest.json");
        let exp = if manifest.exists() {
            read_json(&manifest)?
                .get("experiment")
                .and_then(Value::as_str)
                .and_then(Experiment::from_name)
        } else {
            None
        };
        let missing: Vec<String> = expected_files(exp)
            .into_iter()
            .filter(|f| exp.is_none() || !run.join(f).exists())
            .collect();
        if !missing.is_empty() {
            return Err(CliError::MissingArtifacts {
                dir: run.display().to_string(),
                missing,
            });
        }
        let exp = exp.expect("checked above");
        let seed = read_json(&manifest)?
            .get("seed")
            .and_then(Value::as_u64)
            .unwrap_or(0);
        let results = read_json(&run.join("results.json"))?;
        let (checks, comparators) = grade(exp, &results);
        let name = run
            .strip_prefix(dir)
            .ok()
            .map(|p| p.display().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| ".".into());
        runs.push(RunSummary {
            run: name,
            experiment: exp.name().to_string(),
            seed,
            checks,
            comparators,
        });
    }
    let all_pass = runs.iter().all(|r| r.checks.iter().all(|c| c.pass));
    Ok(Summary { runs, all_pass })
}

fn num(v: &Value, path: &[&str]) -> Option<f64> {
    path.iter().try_fold(v, |v, k| v.get(k))?.as_f64()
}

struct Grader {
    checks: Vec<Check>,
    comparators: Vec<Comparator>,
}

impl Grader {
    #[allow(clippy::too_many_arguments)]
    fn band(
        &mut self,
        criterion: u32,
        quantity: &str,
        value: Option<f64>,
        se: Option<f64>,
        reference: f64,
        lower: f64,
        upper: f64,
    ) {
        let pass = value.is_some_and(|v| v >= lower && v <= upper);
        self.checks.push(Check {
            criterion: (criterion > 0).then_some(criterion),
            quantity: quantity.into(),
            value,
            std_error: se,
            reference,
            lower,
            upper,
            pass,
        });
    }

    fn relative(
        &mut self,
        criterion: u32,
        quantity: &str,
        value: Option<f64>,
        reference: f64,
        tol: f64,
    ) {
        let d = reference.abs() * tol;
        self.band(
            criterion,
            quantity,
            value,
            None,
            reference,
            reference - d,
            reference + d,
        );
    }

    fn compare(&mut self, quantity: &str, value: Option<f64>, measured: f64, note: &str) {
        self.comparators.push(Comparator {
            quantity: quantity.into(),
            value,
            measured,
            note: note.into(),
        });
    }
}

fn grade(exp: Experiment, r: &Value) -> (Vec<Check>, Vec<Comparator>) {
    let mut g = Grader {
        checks: Vec::new(),
        comparators: Vec::new(),
    };
    match exp {
        Experiment::VarianceCurves => {
            let f = |k| num(r, &["fano_factor_at_unit_occupation", k]);
            g.relative(0, "fano_thermal", f("thermal"), 2.0, 1e-12);
            g.relative(0, "fano_coherent", f("coherent"), 1.0, 1e-12);
            g.relative(0, "fano_shot_noise", f("shot_noise"), 1.0, 1e-12);
        }
        Experiment::RamseySweep => {
            if r["slope_ratio_coherent_to_shot"].is_object() {
                let v = num(r, &["slope_ratio_coherent_to_shot", "value"]);
                let se = num(r, &["slope_ratio_coherent_to_shot", "std_error"]);
                g.band(2, "slope_ratio_coherent_to_shot", v, se, 2.0, 1.95, 2.05);
                g.compare(
                    "slope_ratio_coherent_to_shot",
                    v,
                    9.3 / 4.6,
                    "measured 9.3 MHz / 4.6 MHz",
                );
            }
            if let Some(th) = r["states"].get("thermal") {
                let rho = num(th, &["fit", "parameters", "rho"]);
                let xi = num(th, &["fit", "parameters", "xi"]);
                let ratio = rho.zip(xi).map(|(a, b)| a / b);
                g.band(3, "rho_over_xi", ratio, None, 1.0, 0.95, 1.05);
                let mc = &th["model_comparison"];
                if mc.is_object() {
                    // Δχ² of 25 is a 5σ preference for one extra parameter
                    for key in [
                        "delta_chi_squared_pure_quadratic",
                        "delta_chi_squared_linear",
                    ] {
                        g.band(3, key, num(mc, &[key]), None, 25.0, 25.0, f64::INFINITY);
                    }
                }
                let slope = rho.map(|v| v / 1e6);
                g.compare(
                    "thermal_slope_mhz",
                    slope,
                    3.9,
                    "device value includes background photons",
                );
            }
        }
        Experiment::DualpathSweep => {
            let rho = num(r, &["rho"]);
            g.band(4, "rho", rho, num(r, &["rho_std_error"]), 2.0, 1.9, 2.1);
            g.band(
                4,
                "chain_noise_shift_sigma",
                num(r, &["chain_noise_invariance", "shift_sigma"]),
                None,
                0.0,
                0.0,
                4.0,
            );
            g.compare("rho", rho, 2.07, "measured dual-path value");
        }
        Experiment::JpaSweep => {
            let cf = |k| num(r, &["closed_form", k]).unwrap_or(f64::NAN);
            let fit = |k| num(r, &["fit", "parameters", k]);
            let tol = 1e-9;
            g.band(
                5,
                "rho",
                fit("rho"),
                None,
                cf("rho"),
                cf("rho") - tol,
                cf("rho") + tol,
            );
            g.band(
                5,
                "xi",
                fit("xi"),
                None,
                cf("xi"),
                cf("xi") - tol,
                cf("xi") + tol,
            );
            if r["reference"].is_object() {
                for k in ["rho", "xi", "offset"] {
                    let measured =
                        num(r, &["reference", &format!("measured_{k}")]).unwrap_or(f64::NAN);
                    let value = if k == "offset" {
                        Some(cf("offset"))
                    } else {
                        fit(k)
                    };
                    g.compare(k, value, measured, "measured amplifier table entry");
                }
            }
        }
        Experiment::PlanckCalibration => {
            let gain = num(r, &["chain_fit", "chain_gain_db"]);
            let injected_db = num(r, &["injected_chain_gain_db"]).unwrap_or(f64::NAN);
            // 2% in linear gain
            let (lo, hi) = (
                injected_db + 10.0 * 0.98f64.log10(),
                injected_db + 10.0 * 1.02f64.log10(),
            );
            g.band(6, "chain_gain_db", gain, None, injected_db, lo, hi);
            let t = num(r, &["injected_chain_noise_temperature_k"]).unwrap_or(f64::NAN);
            g.relative(
                6,
                "chain_noise_temperature_k",
                num(r, &["chain_fit", "chain_noise_temperature_k"]),
                t,
                0.02,
            );
            for a in r["amplifiers"].as_array().into_iter().flatten() {
                let label = a["label"].as_str().unwrap_or("?");
                let nn = num(a, &["injected_noise_photons"]).unwrap_or(f64::NAN);
                g.relative(
                    6,
                    &format!("{label}_noise_photons"),
                    num(a, &["fit", "noise_photons"]),
                    nn,
                    0.05,
                );
                let p = num(a, &["fit", "compression", "power", "dbm"]);
                let reference = num(a, &["reference_p_1db_dbm"]).unwrap_or(f64::NAN);
                g.compare(
                    &format!("{label}_p_1db_dbm"),
                    p,
                    reference,
                    "measured compression power",
                );
            }
        }
        Experiment::QuadratureCheck => {
            for pt in r["points"].as_array().into_iter().flatten() {
                let n = num(pt, &["n"]).unwrap_or(f64::NAN);
                let expected = num(pt, &["expected"]).unwrap_or(f64::NAN);
                for q in ["var_p", "var_q"] {
                    let se = num(pt, &[&format!("{q}_se")]).unwrap_or(f64::NAN);
                    g.band(
                        7,
                        &format!("{q}_n{n}"),
                        num(pt, &[q]),
                        Some(se),
                        expected,
                        expected - 4.0 * se,
                        expected + 4.0 * se,
                    );
                }
                let c = num(pt, &["contour_expected"]).unwrap_or(f64::NAN);
                g.relative(
                    7,
                    &format!("contour_ratio_n{n}"),
                    num(pt, &["contour_ratio"]),
                    c,
                    1e-12,
                );
            }
        }
    }
    (g.checks, g.comparators)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

pub fn text_table(s: &Summary) -> String {
    let mut out = String::new();
    for run in &s.runs {
        let _ = writeln!(out, "{} ({}, seed {})", run.run, run.experiment, run.seed);
        for c in &run.checks {
            let _ = writeln!(
                out,
                "  [{}] {:<4} {:<36} {:>14}  band [{:.6}, {:.6}]",
                if c.pass { "PASS" } else { "FAIL" },
                c.criterion.map_or_else(|| "-".into(), |k| format!("c{k}")),
                c.quantity,
                fmt_opt(c.value),
                c.lower,
                c.upper
            );
        }
        for c in &run.comparators {
            let _ = writeln!(
                out,
                "  [info] {:<38} {:>14}  measured {:.4} ({})",
                c.quantity,
                fmt_opt(c.value),
                c.measured,
                c.note
            );
        }
    }
    let _ = writeln!(out, "overall: {}", if s.all_pass { "PASS" } else { "FAIL" });
    out
}

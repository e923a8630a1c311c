//! The six experiment runners. Each returns its tables and results in
//! memory; nothing touches the output directory until all of them succeed.

use photostat::analysis::{
    fit_variance_law, ramsey_dephasing, ramsey_model, FitResult, RamseyDephasing, VarianceLaw,
};
use photostat::chains::{
    db_to_linear, g2_jpa_referred, g2_jpa_referred_finite, jpa_referred_coefficients,
    noise_comparison_table, JPA_REFERENCES,
};
use photostat::dualpath::io::moments_to_json;
use photostat::dualpath::{
    cross_moments, cross_moments_batched, jpa_planck_fit, jpa_sweep, planck_fit, planck_power,
    planck_sweep, quadrature_variances, reconstruct_batched, reconstruct_with_port,
    simulate_detection, simulate_detection_with, wigner_gaussian_contour, DetectionSetup,
    Saturation,
};
use photostat::states::{bose_einstein, photon_variance};
use photostat::stats::{batch_mean_error, linspace};
use photostat::{
    DetectionRecord, JpaStage, LinearChain, MicrowaveState, ModeSpec, MomentSet, StateKind,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Config, Experiment};
use crate::error::Result;

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub results: Value,
    /// Record to export in the binary format, with its file stem.
    pub record: Option<(String, DetectionRecord)>,
}

/// CSV files each experiment must leave behind, besides the JSON files.
pub fn expected_tables(exp: Experiment) -> &'static [&'static str] {
    match exp {
        Experiment::VarianceCurves => &["variance_curves.csv"],
        Experiment::RamseySweep => &["ramsey_sweep.csv", "ramsey_traces.csv"],
        Experiment::DualpathSweep => &["dualpath_sweep.csv", "moments.json"],
        Experiment::JpaSweep => &["jpa_sweep.csv", "comparison_table.csv"],
        Experiment::PlanckCalibration => &["planck_points.csv", "jpa_points.csv"],
        Experiment::QuadratureCheck => &["quadrature_check.csv"],
    }
}

fn table<R: Serialize>(name: &str, rows: &[R]) -> Result<Artifact> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| crate::error::CliError::config(format!("{name}: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::CliError::config(format!("{name}: {e}")))?;
    Ok(Artifact {
        name: name.to_string(),
        bytes,
    })
}

fn json_artifact(name: &str, value: &Value) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("json values serialize");
    bytes.push(b'\n');
    Artifact {
        name: name.to_string(),
        bytes,
    }
}

/// Decorrelated per-task seed.
fn sub_seed(seed: u64, group: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (group << 40) ^ index
}

pub fn run(exp: Experiment, cfg: &Config) -> Result<RunOutput> {
    match exp {
        Experiment::VarianceCurves => variance_curves(cfg),
        Experiment::RamseySweep => ramsey(cfg),
        Experiment::DualpathSweep => dualpath(cfg),
        Experiment::JpaSweep => jpa(cfg),
        Experiment::PlanckCalibration => planck(cfg),
        Experiment::QuadratureCheck => quadrature(cfg),
    }
}

#[derive(Serialize)]
struct VarianceRow {
    state: &'static str,
    n: f64,
    sqrt_var: f64,
}

fn variance_curves(cfg: &Config) -> Result<RunOutput> {
    let c = &cfg.variance_curves;
    let kinds = [
        StateKind::Thermal,
        StateKind::Coherent,
        StateKind::ShotNoise,
    ];
    let mut rows = Vec::new();
    for kind in kinds {
        for n in linspace(0.0, c.n_max, c.n_points) {
            let st = MicrowaveState::with_photons(kind, n)?;
            rows.push(VarianceRow {
                state: kind.name(),
                n,
                sqrt_var: photon_variance(&st, false).sqrt(),
            });
        }
    }
    let mut fano = serde_json::Map::new();
    for kind in kinds {
        let st = MicrowaveState::with_photons(kind, 1.0)?;
        fano.insert(
            kind.name().into(),
            json!(photon_variance(&st, false) / st.mean_photons),
        );
    }
    Ok(RunOutput {
        artifacts: vec![table("variance_curves.csv", &rows)?],
        results: json!({
            "experiment": "variance_curves",
            "n_max": c.n_max,
            "n_points": c.n_points,
            "fano_factor_at_unit_occupation": fano,
        }),
        record: None,
    })
}

#[derive(Serialize)]
struct RamseyRow {
    state: &'static str,
    n_r: f64,
    gamma2_hz: f64,
    gamma2_std_hz: f64,
    gamma_phi_hz: f64,
    gamma_phi_std_hz: f64,
    model_gamma_phi_hz: f64,
    negative: bool,
    converged: bool,
    iterations: usize,
}

#[derive(Serialize)]
struct TraceRow {
    state: &'static str,
    n_r: f64,
    tau_s: f64,
    p_e: f64,
    fit_p_e: f64,
}

fn law_fit(points: &[RamseyDephasing], law: VarianceLaw, weighted: bool) -> Result<FitResult> {
    let n: Vec<f64> = points.iter().map(|p| p.n_r).collect();
    let g: Vec<f64> = points.iter().map(|p| p.dephasing.rate).collect();
    let s: Vec<f64> = points.iter().map(|p| p.dephasing.std_error).collect();
    Ok(fit_variance_law(&n, &g, weighted.then_some(&s[..]), law)?)
}

fn ramsey(cfg: &Config) -> Result<RunOutput> {
    let c = &cfg.ramsey_sweep;
    let sys = cfg.device.system()?;
    let grid = linspace(c.n_min, c.n_max, c.n_points);
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut states = serde_json::Map::new();
    let mut slopes = Vec::new();
    for (k, kind) in c.state.kinds().into_iter().enumerate() {
        let points: Vec<RamseyDephasing> = grid
            .par_iter()
            .enumerate()
            .map(|(i, &n)| {
                ramsey_dephasing(
                    &sys,
                    kind,
                    n,
                    c.tau_points,
                    c.shots,
                    sub_seed(cfg.seed, k as u64 + 1, i as u64),
                    c.envelope,
                )
            })
            .collect::<photostat::Result<_>>()?;
        for p in &points {
            rows.push(RamseyRow {
                state: kind.name(),
                n_r: p.n_r,
                gamma2_hz: p.gamma2,
                gamma2_std_hz: p.gamma2_std,
                gamma_phi_hz: p.dephasing.rate,
                gamma_phi_std_hz: p.dephasing.std_error,
                model_gamma_phi_hz: p.expected,
                negative: p.dephasing.negative,
                converged: p.fit.converged,
                iterations: p.fit.iterations,
            });
            let par: [f64; 5] = p.fit.parameters[..]
                .try_into()
                .expect("five Ramsey parameters");
            for t in &p.trace {
                traces.push(TraceRow {
                    state: kind.name(),
                    n_r: p.n_r,
                    tau_s: t.tau,
                    p_e: t.p_e,
                    fit_p_e: ramsey_model(&par, t.tau),
                });
            }
        }
        let model_slope = match kind {
            StateKind::Coherent => 2.0 * sys.thermal_slope(),
            _ => sys.thermal_slope(),
        };
        let entry = if kind == StateKind::Thermal {
            let fit = law_fit(&points, VarianceLaw::QuadraticPlusLinear, c.weighted_fits)?;
            // model discrimination always uses the Ramsey error bars
            let low: Vec<RamseyDephasing> =
                points.iter().filter(|p| p.n_r < 0.5).cloned().collect();
            let comparison = if low.len() > 2 {
                let chi2 = |law| law_fit(&low, law, true).map(|f| f.chi_squared);
                let base = chi2(VarianceLaw::QuadraticPlusLinear)?;
                json!({
                    "subset_max_n": 0.5,
                    "points": low.len(),
                    "chi_squared_quadratic_plus_linear": base,
                    "delta_chi_squared_pure_quadratic": chi2(VarianceLaw::PureQuadratic)? - base,
                    "delta_chi_squared_linear": chi2(VarianceLaw::Linear)? - base,
                })
            } else {
                Value::Null
            };
            json!({
                "law": "quadratic_plus_linear",
                "fit": fit.to_json(),
                "model_slope_hz": model_slope,
                "model_comparison": comparison,
            })
        } else {
            let fit = law_fit(&points, VarianceLaw::Linear, c.weighted_fits)?;
            slopes.push((
                kind,
                fit.parameters[0],
                fit.std_error("slope").unwrap_or(f64::NAN),
            ));
            json!({
                "law": "linear",
                "fit": fit.to_json(),
                "model_slope_hz": model_slope,
            })
        };
        states.insert(kind.name().into(), entry);
    }
    let find = |k: StateKind| slopes.iter().find(|s| s.0 == k).map(|s| (s.1, s.2));
    let ratio = match (find(StateKind::Coherent), find(StateKind::ShotNoise)) {
        (Some((a, ea)), Some((b, eb))) => {
            let r = a / b;
            json!({"value": r, "std_error": r * ((ea / a).powi(2) + (eb / b).powi(2)).sqrt()})
        }
        _ => Value::Null,
    };
    Ok(RunOutput {
        artifacts: vec![
            table("ramsey_sweep.csv", &rows)?,
            table("ramsey_traces.csv", &traces)?,
        ],
        results: json!({
            "experiment": "ramsey_sweep",
            "envelope": c.envelope,
            "weighting": if c.weighted_fits { "inverse_variance" } else { "none" },
            "shots": c.shots,
            "states": states,
            "slope_ratio_coherent_to_shot": ratio,
        }),
        record: None,
    })
}

#[derive(Serialize)]
struct DualpathRow {
    temperature_k: f64,
    n_be: f64,
    n_rec: f64,
    n_rec_se: f64,
    g2_tilde: f64,
    g2_tilde_se: f64,
}

/// Per-batch and full-record reconstructions with a known fourth-port occupation.
fn reconstruct(
    rec: &DetectionRecord,
    batches: usize,
    port: f64,
) -> Result<(MomentSet, Vec<MomentSet>)> {
    let per = cross_moments_batched(rec, batches)?
        .iter()
        .map(|cm| reconstruct_with_port(cm, rec.chain_gains, port))
        .collect::<photostat::Result<Vec<_>>>()?;
    let mean = reconstruct_with_port(&cross_moments(rec), rec.chain_gains, port)?;
    Ok((mean, per))
}

fn stat(per: &[MomentSet], p: usize, q: usize) -> (f64, f64) {
    let v: Vec<f64> = per
        .iter()
        .map(|m| m.get(p, q).map_or(f64::NAN, |e| e.re))
        .collect();
    batch_mean_error(&v)
}

fn dualpath(cfg: &Config) -> Result<RunOutput> {
    let c = &cfg.dualpath_sweep;
    let mode = ModeSpec::new(c.mode_frequency_ghz * 1e9)?;
    let setup = |noise: f64| DetectionSetup {
        vacuum_port_photons: c.vacuum_port_photons,
        ..DetectionSetup::new((noise, noise), (1.0, 1.0))
    };
    let mut rows = Vec::new();
    let mut moments = Vec::new();
    let mut record = None;
    for (i, t) in linspace(c.t_min_k, c.t_max_k, c.n_points)
        .into_iter()
        .enumerate()
    {
        let n_be = bose_einstein(mode, t)?;
        let st = MicrowaveState::thermal(n_be)?;
        let rec = simulate_detection_with(
            &st,
            &setup(c.chain_noise_photons),
            c.samples,
            sub_seed(cfg.seed, 1, i as u64),
        )?;
        let (mean, per) = reconstruct(&rec, c.batches, c.vacuum_port_photons)?;
        let (n_rec, n_se) = stat(&per, 1, 1);
        let (g2, g2_se) = stat(&per, 2, 2);
        rows.push(DualpathRow {
            temperature_k: t,
            n_be,
            n_rec,
            n_rec_se: n_se,
            g2_tilde: g2,
            g2_tilde_se: g2_se,
        });
        moments.push(json!({"temperature_k": t, "normal_moments": moments_to_json(&mean)}));
        if i == 0 && c.export_record {
            record = Some(("record_000".to_string(), rec));
        }
    }
    let n: Vec<f64> = rows.iter().map(|r| r.n_rec).collect();
    let g: Vec<f64> = rows.iter().map(|r| r.g2_tilde).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.g2_tilde_se).collect();
    let fit = fit_variance_law(&n, &g, Some(&s), VarianceLaw::PureQuadratic)?;

    let st = MicrowaveState::thermal(c.invariance_photons)?;
    let photons = |noise: f64| -> Result<(f64, f64)> {
        let rec = simulate_detection_with(&st, &setup(noise), c.samples, sub_seed(cfg.seed, 2, 0))?;
        let (_, per) = reconstruct(&rec, c.batches, c.vacuum_port_photons)?;
        Ok(stat(&per, 1, 1))
    };
    let (m0, e0) = photons(0.0)?;
    let (m1, e1) = photons(c.invariance_chain_noise_photons)?;
    Ok(RunOutput {
        artifacts: vec![
            table("dualpath_sweep.csv", &rows)?,
            json_artifact("moments.json", &Value::Array(moments)),
        ],
        results: json!({
            "experiment": "dualpath_sweep",
            "samples": c.samples,
            "batches": c.batches,
            "chain_noise_photons": c.chain_noise_photons,
            "fit": fit.to_json(),
            "rho": fit.parameters[0],
            "rho_std_error": fit.std_error("rho"),
            "chain_noise_invariance": {
                "photons": c.invariance_photons,
                "chain_noise_low": 0.0,
                "chain_noise_high": c.invariance_chain_noise_photons,
                "mean_photons_low": m0,
                "mean_photons_low_se": e0,
                "mean_photons_high": m1,
                "mean_photons_high_se": e1,
                "shift_sigma": (m1 - m0).abs() / e0.hypot(e1),
            },
        }),
        record,
    })
}

#[derive(Serialize)]
struct JpaRow {
    n_jpa: f64,
    g2_tilde: f64,
    offset: f64,
    g2_minus_offset: f64,
    g2_finite_gain: f64,
}

#[derive(Serialize)]
struct ComparisonRow {
    label: String,
    noise_statistics: String,
    noise_photons: f64,
    rho: f64,
    xi: f64,
    offset: f64,
    measured_xi: f64,
    measured_offset: f64,
}

fn jpa(cfg: &Config) -> Result<RunOutput> {
    let c = &cfg.jpa_sweep;
    let stage = JpaStage::from_db(c.gain_db, c.n_n, c.noise_statistics.into())?;
    let mut rows = Vec::new();
    let mut large_gain = true;
    for n in linspace(0.0, c.n_max, c.n_points) {
        let r = g2_jpa_referred(n, &stage);
        large_gain &= r.large_gain;
        rows.push(JpaRow {
            n_jpa: n,
            g2_tilde: r.g2,
            offset: r.offset,
            g2_minus_offset: r.g2 - r.offset,
            g2_finite_gain: g2_jpa_referred_finite(n, &stage)?,
        });
    }
    let n: Vec<f64> = rows.iter().map(|r| r.n_jpa).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.g2_minus_offset).collect();
    let fit = fit_variance_law(&n, &y, None, VarianceLaw::QuadraticPlusLinear)?;
    let (rho, xi, offset) = jpa_referred_coefficients(&stage);
    let table_rows: Vec<ComparisonRow> = noise_comparison_table()
        .into_iter()
        .map(|r| ComparisonRow {
            label: r.label,
            noise_statistics: serde_json::to_value(r.noise_statistics)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            noise_photons: r.noise_photons,
            rho: r.rho,
            xi: r.xi,
            offset: r.offset,
            measured_xi: r.measured_xi,
            measured_offset: r.measured_offset,
        })
        .collect();
    let reference = JPA_REFERENCES
        .iter()
        .find(|r| r.gain_db == c.gain_db && r.noise_photons == c.n_n)
        .map(|r| json!({"label": r.label, "measured_rho": r.rho, "measured_xi": r.xi, "measured_offset": r.offset}));
    Ok(RunOutput {
        artifacts: vec![
            table("jpa_sweep.csv", &rows)?,
            table("comparison_table.csv", &table_rows)?,
        ],
        results: json!({
            "experiment": "jpa_sweep",
            "noise_statistics": stage.noise_statistics,
            "n_n": c.n_n,
            "gain_db": c.gain_db,
            "large_gain": large_gain,
            "closed_form": {"rho": rho, "xi": xi, "offset": offset},
            "fit": fit.to_json(),
            "reference": reference,
        }),
        record: None,
    })
}

#[derive(Serialize)]
struct PlanckRow {
    temperature_k: f64,
    n_be: f64,
    power_w: f64,
    model_power_w: f64,
}

#[derive(Serialize)]
struct JpaPointRow {
    label: &'static str,
    temperature_k: f64,
    n_be: f64,
    power_w: f64,
}

fn planck(cfg: &Config) -> Result<RunOutput> {
    let c = &cfg.planck_calibration;
    let mode = ModeSpec::new(c.mode_frequency_ghz * 1e9)?;
    let bandwidth = c.bandwidth_khz * 1e3;
    let chain = LinearChain::from_db(c.chain_gain_db, c.chain_noise_temperature_k, bandwidth)?;
    let temps = linspace(c.t_min_k, c.t_max_k, c.n_points);
    let sweep = planck_sweep(
        &chain,
        mode,
        &temps,
        c.relative_noise,
        sub_seed(cfg.seed, 1, 0),
    )?;
    let fit = planck_fit(&sweep)?;
    let fitted_chain = fit.chain(bandwidth)?;
    let rows = sweep
        .points
        .iter()
        .map(|&(t, p)| {
            let n_be = bose_einstein(mode, t)?;
            Ok(PlanckRow {
                temperature_k: t,
                n_be,
                power_w: p,
                model_power_w: planck_power(&fitted_chain, &mode, n_be),
            })
        })
        .collect::<photostat::Result<Vec<_>>>()?;

    let jpa_temps = linspace(c.t_min_k.min(0.03), c.jpa_t_max_k, c.jpa_points);
    let mut jpa_rows = Vec::new();
    let mut amplifiers = Vec::new();
    for (k, r) in JPA_REFERENCES.iter().enumerate() {
        let sat = Saturation::compressing_at(bose_einstein(mode, r.t_1db)?, c.saturation_sharpness);
        let js = jpa_sweep(
            &chain,
            mode,
            &jpa_temps,
            db_to_linear(r.gain_db),
            r.noise_photons,
            Some(sat),
            0.0,
            sub_seed(cfg.seed, 2, k as u64),
        )?;
        let jf = jpa_planck_fit(&js, c.jpa_fit_max_t_k, &fitted_chain, r.kappa_x)?;
        for &(t, p) in &js.points {
            jpa_rows.push(JpaPointRow {
                label: r.label,
                temperature_k: t,
                n_be: bose_einstein(mode, t)?,
                power_w: p,
            });
        }
        amplifiers.push(json!({
            "label": r.label,
            "injected_gain_db": r.gain_db,
            "injected_noise_photons": r.noise_photons,
            "injected_t_1db_k": r.t_1db,
            "reference_p_1db_dbm": r.p_1db_dbm,
            "fit": jf,
        }));
    }
    Ok(RunOutput {
        artifacts: vec![
            table("planck_points.csv", &rows)?,
            table("jpa_points.csv", &jpa_rows)?,
        ],
        results: json!({
            "experiment": "planck_calibration",
            "relative_noise": c.relative_noise,
            "injected_chain_gain_db": c.chain_gain_db,
            "injected_chain_noise_temperature_k": c.chain_noise_temperature_k,
            "chain_fit": {
                "chain_gain_db": fit.chain_gain_db,
                "chain_gain": fit.chain_gain,
                "gain_std": fit.gain_std,
                "chain_noise_temperature_k": fit.chain_noise_temperature,
                "noise_temperature_std_k": fit.noise_temperature_std,
                "chain_noise_photons": fit.chain_noise_photons,
            },
            "amplifiers": amplifiers,
        }),
        record: None,
    })
}

#[derive(Serialize)]
struct QuadratureRow {
    n: f64,
    var_p: f64,
    var_p_se: f64,
    var_q: f64,
    var_q_se: f64,
    expected: f64,
    contour_ratio: f64,
    contour_expected: f64,
}

fn quadrature(cfg: &Config) -> Result<RunOutput> {
    let c = &cfg.quadrature_check;
    let mut rows = Vec::new();
    for (i, &n) in c.photons.iter().enumerate() {
        let st = MicrowaveState::thermal(n)?;
        let noise = c.chain_noise_photons;
        let rec = simulate_detection(
            &st,
            (noise, noise),
            (1.0, 1.0),
            c.samples,
            sub_seed(cfg.seed, 1, i as u64),
        )?;
        let b = reconstruct_batched(&rec, c.batches)?;
        let (var_p, var_p_se) = b.statistic(|m| quadrature_variances(m).map_or(f64::NAN, |v| v.0));
        let (var_q, var_q_se) = b.statistic(|m| quadrature_variances(m).map_or(f64::NAN, |v| v.1));
        rows.push(QuadratureRow {
            n,
            var_p,
            var_p_se,
            var_q,
            var_q_se,
            expected: n / 2.0 + 0.25,
            contour_ratio: wigner_gaussian_contour(n)? / wigner_gaussian_contour(0.0)?,
            contour_expected: (2.0 * n + 1.0).sqrt(),
        });
    }
    let points: Vec<Value> = rows
        .iter()
        .map(|r| serde_json::to_value(r).expect("rows serialize"))
        .collect();
    Ok(RunOutput {
        artifacts: vec![table("quadrature_check.csv", &rows)?],
        results: json!({
            "experiment": "quadrature_check",
            "samples": c.samples,
            "batches": c.batches,
            "chain_noise_photons": c.chain_noise_photons,
            "points": points,
        }),
        record: None,
    })
}

pub(crate) fn json_bytes(value: &Value) -> Vec<u8> {
    json_artifact("", value).bytes
}

use photostat::analysis::{
    extract_dephasing, fano_factor, fit_ramsey, fit_stark_temperature_sweep, fit_variance_law,
    linear_least_squares, ramsey_dephasing, ramsey_model, stark_model, FitResult, VarianceLaw,
    Weighting,
};
use photostat::qubit::{dephasing_rate, EnvelopeForm};
use photostat::random::{chunk_rng, stream};
use photostat::states::bose_einstein;
use photostat::stats::linspace;
use photostat::{DispersiveSystem, ModeSpec, StateKind};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

const TRIALS: u64 = 500;

fn covers(fit: &FitResult, name: &str, truth: f64) -> bool {
    let (v, s) = (fit.value(name).unwrap(), fit.std_error(name).unwrap());
    (v - truth).abs() <= 3.0 * s
}

/// Fraction of trials whose 3σ interval holds the truth, per parameter.
fn coverage<F>(names: &[&str], truths: &[f64], trial: F) -> Vec<f64>
where
    F: Fn(u64) -> FitResult + Sync,
{
    let hits: Vec<Vec<bool>> = (0..TRIALS)
        .into_par_iter()
        .map(|t| {
            let fit = trial(t);
            names
                .iter()
                .zip(truths)
                .map(|(n, &v)| fit.converged && covers(&fit, n, v))
                .collect()
        })
        .collect();
    (0..names.len())
        .map(|k| hits.iter().filter(|h| h[k]).count() as f64 / TRIALS as f64)
        .collect()
}

fn gaussian_noise(seed: u64, trial: u64, sigma: &[f64]) -> Vec<f64> {
    let mut rng = chunk_rng(seed, stream::FIT_NOISE, trial);
    sigma
        .iter()
        .map(|&s| Normal::new(0.0, s).unwrap().sample(&mut rng))
        .collect()
}

#[test]
fn variance_law_is_affine_invariant() {
    let n: Vec<f64> = linspace(0.05, 1.5, 12);
    let y: Vec<f64> = n
        .iter()
        .map(|x| 2.07 * x * x + 0.9 * x + 0.01 * (7.0 * x).sin())
        .collect();
    let base = fit_variance_law(&n, &y, None, VarianceLaw::QuadraticPlusLinear).unwrap();
    for a in [1e-4, 3.7, 1e5] {
        let scaled: Vec<f64> = n.iter().map(|x| a * x).collect();
        let f = fit_variance_law(&scaled, &y, None, VarianceLaw::QuadraticPlusLinear).unwrap();
        let (rho, xi) = (f.parameters[0] * a * a, f.parameters[1] * a);
        assert!((rho / base.parameters[0] - 1.0).abs() < 1e-10, "a={a}");
        assert!((xi / base.parameters[1] - 1.0).abs() < 1e-10, "a={a}");
        assert!((f.residual_norm / base.residual_norm - 1.0).abs() < 1e-10);
    }
}

#[test]
fn linear_fit_predictions_are_affine_invariant() {
    let x = linspace(-1.0, 2.0, 15);
    let y: Vec<f64> = x
        .iter()
        .map(|v| 0.3 - 1.1 * v + 0.5 * v * v + 0.02 * (5.0 * v).cos())
        .collect();
    let design =
        |xs: &[f64]| -> Vec<Vec<f64>> { xs.iter().map(|v| vec![1.0, *v, v * v]).collect() };
    let base = linear_least_squares(&design(&x), &y, Weighting::None).unwrap();
    // shifts of a few spans keep [1, x, x²] well conditioned; far larger
    // ones make the columns collinear and are rejected as rank deficient
    for (a, b) in [(1e3, -3.0), (1e-3, 2.0), (-2.5, 4.0), (1e6, 0.0)] {
        let xs: Vec<f64> = x.iter().map(|v| a * (v + b)).collect();
        let f = linear_least_squares(&design(&xs), &y, Weighting::None).unwrap();
        for (r0, r1) in base.residuals.iter().zip(&f.residuals) {
            assert!((r0 - r1).abs() < 1e-10, "a={a} b={b}: {r0} vs {r1}");
        }
        // the curvature maps back as c₂/a²
        assert!((f.coefficients[2] * a * a / base.coefficients[2] - 1.0).abs() < 1e-10);
    }
    let far: Vec<f64> = x.iter().map(|v| v + 1e5).collect();
    assert!(linear_least_squares(&design(&far), &y, Weighting::None).is_err());
}

#[test]
fn thermal_law_points_recovered_exactly() {
    let sys = DispersiveSystem::sample();
    let s = sys.thermal_slope();
    let n = linspace(0.05, 1.5, 12);
    let g: Vec<f64> = n
        .iter()
        .map(|&x| dephasing_rate(StateKind::Thermal, x, &sys))
        .collect();
    let f = fit_variance_law(&n, &g, None, VarianceLaw::QuadraticPlusLinear).unwrap();
    assert!((f.value("rho").unwrap() / s - 1.0).abs() < 1e-12);
    assert!((f.value("xi").unwrap() / s - 1.0).abs() < 1e-12);
}

#[test]
fn rank_deficient_law_is_an_error() {
    let n = [0.5, 0.5, 0.5, 0.5];
    assert!(fit_variance_law(
        &n,
        &[1.0, 1.1, 0.9, 1.0],
        None,
        VarianceLaw::QuadraticPlusLinear
    )
    .is_err());
}

#[test]
fn dephasing_arithmetic() {
    assert_eq!(extract_dephasing(2e6, 4e6, 0.0).rate, 0.0);
    assert_eq!(extract_dephasing(3e6, 4e6, 0.0).rate, 1e6);
    assert!(!extract_dephasing(3e6, 4e6, 0.0).negative);
}

#[test]
fn fano_factors() {
    assert_eq!(fano_factor(0.7, 0.7).unwrap(), 1.0);
    assert_eq!(fano_factor(1.0, 2.0).unwrap(), 2.0);
    assert!(fano_factor(0.0, 1.0).is_err());
}

#[test]
fn ramsey_coverage() {
    let truth = [0.48, 2.5e6, 2.1e6, 0.5, 0.1];
    let tau = linspace(0.0, 3.0 / (std::f64::consts::TAU * truth[2]), 101);
    let shots = 10_000u64;
    let p: Vec<f64> = tau.iter().map(|&t| ramsey_model(&truth, t)).collect();
    let sigma: Vec<f64> = p
        .iter()
        .map(|p| (p * (1.0 - p) / shots as f64).sqrt())
        .collect();
    let cov = coverage(
        &["gamma2", "frequency", "amplitude"],
        &[truth[2], truth[1], truth[0]],
        |t| {
            let mut rng = chunk_rng(77, stream::FIT_NOISE, t);
            let y: Vec<f64> = p
                .iter()
                .map(|&p| {
                    rand_distr::Binomial::new(shots, p)
                        .unwrap()
                        .sample(&mut rng) as f64
                        / shots as f64
                })
                .collect();
            fit_ramsey(&tau, &y, Some(&sigma)).unwrap()
        },
    );
    for c in cov {
        assert!(c >= 0.99, "coverage {c}");
    }
}

#[test]
fn variance_law_coverage() {
    let n = linspace(0.05, 1.5, 12);
    let sigma: Vec<f64> = n.iter().map(|x| 0.02 * (1.0 + x)).collect();
    for law in [
        VarianceLaw::QuadraticPlusLinear,
        VarianceLaw::PureQuadratic,
        VarianceLaw::Linear,
    ] {
        let (names, truths): (Vec<&str>, Vec<f64>) = match law {
            VarianceLaw::QuadraticPlusLinear => (vec!["rho", "xi"], vec![2.0, 1.0]),
            VarianceLaw::PureQuadratic => (vec!["rho"], vec![2.0]),
            VarianceLaw::Linear => (vec!["slope"], vec![1.3]),
        };
        let clean: Vec<f64> = n
            .iter()
            .map(|x| match law {
                VarianceLaw::QuadraticPlusLinear => 2.0 * x * x + x,
                VarianceLaw::PureQuadratic => 2.0 * x * x,
                VarianceLaw::Linear => 1.3 * x,
            })
            .collect();
        let cov = coverage(&names, &truths, |t| {
            let e = gaussian_noise(5, t, &sigma);
            let y: Vec<f64> = clean.iter().zip(e).map(|(c, e)| c + e).collect();
            fit_variance_law(&n, &y, Some(&sigma), law).unwrap()
        });
        for c in cov {
            assert!(c >= 0.99, "{law:?}: coverage {c}");
        }
    }
}

#[test]
fn stark_coverage_and_background_precision() {
    let f = 6.07e9;
    let chi = -3.11e6;
    let mode = ModeSpec::new(f).unwrap();
    let temps = linspace(0.05, 1.0, 16);
    let clean: Vec<f64> = temps
        .iter()
        .map(|&t| stark_model(0.55, 0.15, bose_einstein(mode, t).unwrap(), chi))
        .collect();
    // 1% frequency noise
    let sigma: Vec<f64> = clean.iter().map(|y| 0.01 * y.abs()).collect();
    let fits: Vec<FitResult> = (0..TRIALS)
        .into_par_iter()
        .map(|t| {
            let e = gaussian_noise(9, t, &sigma);
            let y: Vec<f64> = clean.iter().zip(e).map(|(c, e)| c + e).collect();
            fit_stark_temperature_sweep(&temps, &y, f, chi, Some(&sigma)).unwrap()
        })
        .collect();
    for (name, truth) in [("eta", 0.55), ("n_n", 0.15)] {
        let c = fits
            .iter()
            .filter(|r| r.converged && covers(r, name, truth))
            .count() as f64
            / TRIALS as f64;
        assert!(c >= 0.99, "{name}: coverage {c}");
    }
    let within = fits
        .iter()
        .filter(|r| (r.value("n_n").unwrap() - 0.15).abs() <= 0.02)
        .count();
    assert!(within as f64 >= 0.95 * TRIALS as f64, "{within}");
}

#[test]
fn stark_fit_is_monotone_in_temperature() {
    let f = 6.07e9;
    let mode = ModeSpec::new(f).unwrap();
    let chi = 2.0e6;
    let temps = linspace(0.05, 0.8, 10);
    let y: Vec<f64> = temps
        .iter()
        .map(|&t| stark_model(1.0, 0.0, bose_einstein(mode, t).unwrap(), chi))
        .collect();
    let fit = fit_stark_temperature_sweep(&temps, &y, f, chi, None).unwrap();
    assert!((fit.value("eta").unwrap() - 1.0).abs() < 1e-9);
    assert!(fit.value("n_n").unwrap().abs() < 1e-6 || fit.std_error("n_n").unwrap().is_finite());
    let curve: Vec<f64> = linspace(0.02, 1.2, 50)
        .iter()
        .map(|&t| {
            stark_model(
                fit.parameters[0],
                fit.parameters[1],
                bose_einstein(mode, t).unwrap(),
                chi,
            )
        })
        .collect();
    assert!(curve.windows(2).all(|w| w[1] > w[0]));
    assert!(fit_stark_temperature_sweep(&temps[..3], &y[..3], f, chi, None).is_err());
}

fn closed_loop(sys: &DispersiveSystem, kind: StateKind, n: f64, seed: u64) -> (f64, f64) {
    let r = ramsey_dephasing(
        sys,
        kind,
        n,
        401,
        10_000,
        seed,
        EnvelopeForm::AsymptoticRate,
    )
    .unwrap();
    (r.dephasing.rate, r.expected)
}

#[test]
fn ramsey_closed_loop_recovers_dephasing() {
    let sys = DispersiveSystem::sample();
    for kind in [
        StateKind::Thermal,
        StateKind::Coherent,
        StateKind::ShotNoise,
    ] {
        for (i, n) in linspace(0.05, 1.5, 12).into_iter().enumerate() {
            let (got, want) = closed_loop(&sys, kind, n, 1000 + i as u64);
            assert!(
                (got / want - 1.0).abs() < 0.05,
                "{kind:?} n={n}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn coherent_to_shot_slope_ratio() {
    let sys = DispersiveSystem::sample();
    let n = linspace(0.05, 1.5, 12);
    let slope = |kind: StateKind, seed: u64| {
        let g: Vec<f64> = n
            .iter()
            .enumerate()
            .map(|(i, &x)| closed_loop(&sys, kind, x, seed + i as u64).0)
            .collect();
        fit_variance_law(&n, &g, None, VarianceLaw::Linear)
            .unwrap()
            .parameters[0]
    };
    let r = slope(StateKind::Coherent, 300) / slope(StateKind::ShotNoise, 400);
    assert!((r - 2.0).abs() < 0.05, "{r}");
}

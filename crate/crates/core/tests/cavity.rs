use std::f64::consts::TAU;

use num_complex::Complex64;
use photostat::cavity::{
    amplitude_autocovariance, autocovariance, correlator, correlator_value, correlator_with,
    decay_rate_from_acf, dephasing_gaussian, dephasing_gaussian_closed, dephasing_master,
    simulate_mode_trajectory, DecayConvention, GAUSSIAN_TRUNCATION_BOUND,
};
use photostat::states::photon_variance;
use photostat::{MicrowaveState, Resonator, StateKind};
use proptest::prelude::*;

proptest! {
    #[test]
    fn correlator_variance_is_photon_variance(n in 0.0f64..10.0, kind in prop::sample::select(StateKind::ALL.to_vec())) {
        let r = Resonator::sample();
        let st = MicrowaveState::with_photons(kind, n).unwrap();
        prop_assert_eq!(correlator(kind, st.mean_photons, &r).variance, photon_variance(&st, false));
    }

    #[test]
    fn gaussian_quadrature_matches_closed_form(theta0 in 0.0f64..0.7, var in 0.01f64..20.0) {
        let r = Resonator::sample();
        let q = dephasing_gaussian(var, &r, theta0).unwrap();
        let c = dephasing_gaussian_closed(var, &r, theta0);
        prop_assert!((q - c).abs() <= 1e-6 * c.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn correlator_decays_exponentially(tau in 0.0f64..1e-6, n in 0.1f64..3.0) {
        let r = Resonator::sample();
        let c = correlator(StateKind::Thermal, n, &r);
        let v = correlator_value(&c, tau).unwrap();
        let expected = c.variance * (-TAU * c.decay_rate * tau).exp();
        prop_assert!((v - expected).abs() <= 1e-14 * c.variance);
    }
}

#[test]
fn decay_rate_contract() {
    let r = Resonator::sample();
    let th = correlator(StateKind::Thermal, 0.5, &r).decay_rate;
    let sh = correlator(StateKind::ShotNoise, 0.5, &r).decay_rate;
    let co = correlator(StateKind::Coherent, 0.5, &r).decay_rate;
    assert_eq!(th, r.external_rate);
    assert_eq!(th, sh);
    assert_eq!(th / co, 2.0);
}

#[test]
fn total_rate_toggle() {
    let r = Resonator::sample();
    let c = correlator_with(StateKind::Thermal, 0.5, &r, DecayConvention::Total);
    assert_eq!(c.decay_rate, r.external_rate + r.internal_rate);
}

#[test]
fn truncation_bound_below_tolerance() {
    const { assert!(GAUSSIAN_TRUNCATION_BOUND < 1e-6) };
}

#[test]
fn master_correction_vanishes_for_weak_pull() {
    let r = Resonator::sample();
    let chi = 1e-4 * r.external_rate;
    let theta0 = (2.0 * chi / r.external_rate).atan();
    let g = dephasing_gaussian(1.0, &r, theta0).unwrap();
    let m = dephasing_master(1.0, &r, chi).unwrap();
    assert!((g - m).abs() < 1e-6 * g);
}

fn langevin_rate(kind: StateKind, steps: usize, seed: u64) -> f64 {
    let r = Resonator::sample();
    let kappa = TAU * r.external_rate;
    let dt = 0.01 / kappa;
    match kind {
        StateKind::Thermal => {
            let a = simulate_mode_trajectory(&r, Complex64::new(0.0, 0.0), 0.8, dt, steps, seed);
            let n: Vec<f64> = a.iter().map(|v| v.norm_sqr()).collect();
            let acf = autocovariance(&n, 250);
            decay_rate_from_acf(&acf, dt, 0.2).unwrap()
        }
        StateKind::Coherent => {
            let a = simulate_mode_trajectory(&r, Complex64::new(1.1, 0.3), 0.5, dt, steps, seed);
            let acf = amplitude_autocovariance(&a, 450);
            decay_rate_from_acf(&acf, dt, 0.2).unwrap()
        }
        _ => unreachable!(),
    }
}

#[test]
fn langevin_thermal_intensity_decays_at_kappa() {
    let r = Resonator::sample();
    let rate = langevin_rate(StateKind::Thermal, 2_000_000, 11) / TAU;
    let expected = correlator(StateKind::Thermal, 0.8, &r).decay_rate;
    assert!((rate / expected - 1.0).abs() < 0.05, "{rate} vs {expected}");
}

#[test]
fn langevin_coherent_amplitude_decays_at_half_kappa() {
    let r = Resonator::sample();
    let rate = langevin_rate(StateKind::Coherent, 2_000_000, 12) / TAU;
    let expected = correlator(StateKind::Coherent, 1.3, &r).decay_rate;
    assert!((rate / expected - 1.0).abs() < 0.05, "{rate} vs {expected}");
}

#[test]
fn langevin_stationary_occupation() {
    let r = Resonator::sample();
    let dt = 0.01 / (TAU * r.external_rate);
    let a = simulate_mode_trajectory(&r, Complex64::new(0.0, 0.0), 1.2, dt, 1_000_000, 3);
    let n = a.iter().map(|v| v.norm_sqr()).sum::<f64>() / a.len() as f64;
    assert!((n - 1.2).abs() < 0.05 * 1.2, "{n}");
}

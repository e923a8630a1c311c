use photostat::cavity::Resonator as GenericResonator;
use photostat::qubit::{
    default_fringe_detuning, default_tau_grid, dephasing_rate, phase_variance, ramsey_envelope,
    simulate_ramsey, EnvelopeForm, QubitParams as GenericQubit,
};
use photostat::{DispersiveSystem, QubitParams, Resonator, StateKind};
use proptest::prelude::*;

fn system(g: f64, detuning: f64, alpha: f64, kappa: f64) -> DispersiveSystem {
    let qubit = QubitParams {
        coupling: g,
        anharmonicity: alpha,
        ..QubitParams::sample()
    };
    let res = Resonator::new(6.07e9, kappa, 50e3).unwrap();
    DispersiveSystem::with_detuning(qubit, res, detuning).unwrap()
}

proptest! {
    #[test]
    fn thermal_excess_is_quadratic(n in 0.0f64..5.0) {
        let sys = DispersiveSystem::sample();
        let d = dephasing_rate(StateKind::Thermal, n, &sys) - dephasing_rate(StateKind::ShotNoise, n, &sys);
        let expected = sys.thermal_slope() * n * n;
        prop_assert!((d - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn coherent_is_twice_shot(
        n in 0.0f64..5.0,
        g in 20e6f64..150e6,
        detuning in 500e6f64..2e9,
        alpha in -400e6f64..-150e6,
        kappa in 1e6f64..20e6,
    ) {
        let sys = system(g, detuning, alpha, kappa);
        let c = dephasing_rate(StateKind::Coherent, n, &sys);
        let s = dephasing_rate(StateKind::ShotNoise, n, &sys);
        prop_assert_eq!(c, 2.0 * s);
    }

    #[test]
    fn gaussian_envelope_dominates_asymptotic(tau in 0.0f64..2e-6, n in 0.01f64..1.5, kind in prop::sample::select(vec![StateKind::Thermal, StateKind::Coherent, StateKind::ShotNoise])) {
        let sys = DispersiveSystem::sample();
        let g = ramsey_envelope(&sys, kind, n, tau, EnvelopeForm::GaussianIntegral).unwrap();
        let a = ramsey_envelope(&sys, kind, n, tau, EnvelopeForm::AsymptoticRate).unwrap();
        prop_assert!(g >= a * (1.0 - 1e-12));
    }
}

#[test]
fn gaussian_phase_variance_approaches_asymptotic_rate() {
    let sys = DispersiveSystem::sample();
    for kind in [
        StateKind::Thermal,
        StateKind::Coherent,
        StateKind::ShotNoise,
    ] {
        let mut prev = f64::INFINITY;
        for tau in [1e-8, 1e-7, 1e-6, 1e-5, 1e-4] {
            let g = phase_variance(&sys, kind, 0.7, tau, EnvelopeForm::GaussianIntegral);
            let a = phase_variance(&sys, kind, 0.7, tau, EnvelopeForm::AsymptoticRate);
            let rel = (a - g) / a;
            assert!(rel >= 0.0 && rel < prev, "{kind:?} τ={tau}: {rel}");
            prev = rel;
        }
        assert!(prev < 1e-3, "{kind:?}: {prev}");
    }
}

#[test]
fn single_integral_form_saturates() {
    let sys = DispersiveSystem::sample();
    let a = phase_variance(
        &sys,
        StateKind::Thermal,
        0.5,
        1e-5,
        EnvelopeForm::SingleIntegral,
    );
    let b = phase_variance(
        &sys,
        StateKind::Thermal,
        0.5,
        1e-4,
        EnvelopeForm::SingleIntegral,
    );
    assert!((a - b).abs() < 1e-9 * a);
}

#[test]
fn ramsey_simulation_is_deterministic() {
    let sys = DispersiveSystem::sample();
    let grid = default_tau_grid(&sys, StateKind::Thermal, 0.4, 64);
    let f = default_fringe_detuning(&grid);
    let run = |seed| {
        simulate_ramsey(
            &sys,
            StateKind::Thermal,
            0.4,
            &grid,
            f,
            10_000,
            seed,
            EnvelopeForm::AsymptoticRate,
        )
        .unwrap()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    assert_eq!(pool.install(|| run(3)), run(3));
}

#[test]
fn ramsey_simulation_tracks_probability() {
    let sys = DispersiveSystem::sample();
    let grid = default_tau_grid(&sys, StateKind::Coherent, 0.6, 50);
    let f = default_fringe_detuning(&grid);
    let pts = simulate_ramsey(
        &sys,
        StateKind::Coherent,
        0.6,
        &grid,
        f,
        1_000_000,
        8,
        EnvelopeForm::AsymptoticRate,
    )
    .unwrap();
    for p in &pts {
        let exact = photostat::qubit::ramsey_probability(
            &sys,
            StateKind::Coherent,
            0.6,
            p.tau,
            f,
            EnvelopeForm::AsymptoticRate,
        )
        .unwrap();
        assert!((p.p_e - exact).abs() < 5.0 * (exact * (1.0 - exact) / 1e6).sqrt() + 1e-6);
    }
}

#[test]
fn single_precision_system() {
    let sys = DispersiveSystem::sample();
    let sys32 = photostat::DispersiveSystem32::new(
        GenericQubit::<f32>::sample(),
        GenericResonator::<f32>::sample(),
    )
    .unwrap();
    let a = dephasing_rate(StateKind::Thermal, 0.5, &sys);
    let b = dephasing_rate(StateKind::Thermal, 0.5f32, &sys32);
    assert!(((b as f64) - a).abs() < 1e-5 * a);
}

#[test]
fn relaxation_depends_on_kind() {
    let q = QubitParams::sample();
    assert_eq!(q.relaxation_rate(StateKind::Thermal, 1.0), 3.9e6 + 800e3);
    assert_eq!(q.relaxation_rate(StateKind::Coherent, 1.0), 3.9e6 - 30e3);
    assert_eq!(q.relaxation_rate(StateKind::Vacuum, 1.0), 3.9e6);
}

//! Resonator filtering of propagating fields.
//!
//! Rates are ordinary frequencies (Hz); factors of 2π are applied inside the
//! formulas that need angular units.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::sample;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::random::{self, stream};
use crate::scalar::Real;
use crate::states::{photon_variance, MicrowaveState, StateKind};

/// Quadrature window half-width in units of the linewidth.
pub const WINDOW_LINEWIDTHS: f64 = 40.0;

/// Relative truncation error of the Lorentzian-squared integral over
/// `|δ| <= 40 κ`: the dropped tail is `4 / (3π 80³)`.
pub const GAUSSIAN_TRUNCATION_BOUND: f64 = 4.0 / (3.0 * std::f64::consts::PI * 512_000.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonator<T> {
    pub resonance_frequency: T,
    pub external_rate: T,
    pub internal_rate: T,
}

impl<T: Real> Resonator<T> {
    pub fn new(resonance_frequency: T, external_rate: T, internal_rate: T) -> Result<Self> {
        if !(resonance_frequency > T::zero()) {
            return Err(Error::domain(
                "resonance_frequency",
                resonance_frequency.as_f64(),
                "must be positive",
            ));
        }
        if !(external_rate > T::zero()) {
            return Err(Error::domain(
                "external_rate",
                external_rate.as_f64(),
                "must be positive",
            ));
        }
        if !(internal_rate >= T::zero()) {
            return Err(Error::domain(
                "internal_rate",
                internal_rate.as_f64(),
                "must be >= 0",
            ));
        }
        Ok(Self {
            resonance_frequency,
            external_rate,
            internal_rate,
        })
    }

    /// The measured readout resonator.
    pub fn sample() -> Self {
        Self {
            resonance_frequency: T::c(sample::RESONATOR_FREQUENCY),
            external_rate: T::c(sample::KAPPA_EXTERNAL),
            internal_rate: T::c(sample::KAPPA_INTERNAL),
        }
    }

    pub fn total_rate(&self) -> T {
        self.external_rate + self.internal_rate
    }
}

/// Which linewidth sets the correlator decay. Internal loss is negligible
/// for the sample (κ_i/κ_x ≈ 0.006), so `External` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayConvention {
    #[default]
    External,
    Total,
}

/// `C(τ) = variance · exp(-2π decay_rate τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlator<T> {
    pub variance: T,
    /// Hz.
    pub decay_rate: T,
}

pub fn correlator<T: Real>(kind: StateKind, n_r: T, res: &Resonator<T>) -> Correlator<T> {
    correlator_with(kind, n_r, res, DecayConvention::External)
}

pub fn correlator_with<T: Real>(
    kind: StateKind,
    n_r: T,
    res: &Resonator<T>,
    convention: DecayConvention,
) -> Correlator<T> {
    let kappa = match convention {
        DecayConvention::External => res.external_rate,
        DecayConvention::Total => res.total_rate(),
    };
    let variance = match kind {
        StateKind::Vacuum => T::zero(),
        _ => photon_variance(
            &MicrowaveState {
                kind,
                mean_photons: n_r,
                amplitude: Complex::new(n_r.sqrt(), T::zero()),
            },
            false,
        ),
    };
    let decay_rate = match kind {
        StateKind::Coherent => kappa * T::half(),
        _ => kappa,
    };
    Correlator {
        variance,
        decay_rate,
    }
}

pub fn correlator_value<T: Real>(c: &Correlator<T>, tau: T) -> Result<T> {
    if !(tau >= T::zero()) {
        return Err(Error::domain("tau", tau.as_f64(), "must be >= 0"));
    }
    Ok(c.variance * (-T::TAU() * c.decay_rate * tau).exp())
}

fn lorentz<T: Real>(half_width: T, detuning: T) -> T {
    half_width / (half_width * half_width + detuning * detuning)
}

/// Lorentzian filter function `F = (κ/2)/((κ/2)² + δ_r²)` with
/// `δ_r = ω_r − ω`. `frequency` in Hz; result in s/rad.
pub fn lorentzian_dos<T: Real>(frequency: T, res: &Resonator<T>) -> T {
    let delta = T::TAU() * (res.resonance_frequency - frequency);
    lorentz(T::PI() * res.external_rate, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitState {
    Ground,
    Excited,
}

/// Density of states with the qubit-dependent pull:
/// `D± = (κ/2)/(κ²/4 + (δ_r ± χ)²)`, `+` for the excited state. With
/// `δ_r = ω_r − ω` the excited-state line sits at `ω_r + χ`.
pub fn shifted_dos<T: Real>(frequency: T, res: &Resonator<T>, chi: T, state: QubitState) -> T {
    let delta = T::TAU() * (res.resonance_frequency - frequency);
    let shift = T::TAU() * chi;
    let d = match state {
        QubitState::Excited => delta + shift,
        QubitState::Ground => delta - shift,
    };
    lorentz(T::PI() * res.external_rate, d)
}

fn window<T: Real>() -> (T, T) {
    // ±40 κ in units of the half-width κ/2
    let w = T::c(2.0 * WINDOW_LINEWIDTHS);
    (-w, w)
}

/// Steady-state calibrated occupation `(n₊ + n₋)/2` relative to the
/// unshifted `n_r`, integrated over the quadrature window.
pub fn calibration_ratio<T: Real>(res: &Resonator<T>, chi: T) -> Result<T> {
    let p = T::two() * chi / res.external_rate;
    let (a, b) = window::<T>();
    let pulled = integrate(
        |x: T| T::half() * (lorentz(T::one(), x + p) + lorentz(T::one(), x - p)),
        a,
        b,
        Tolerance::default(),
    )?;
    let bare = integrate(|x: T| lorentz(T::one(), x), a, b, Tolerance::default())?;
    Ok(pulled.value / bare.value)
}

/// Closed form of the Gaussian dephasing rate, `Var · κ_x · θ₀²` (Hz).
pub fn dephasing_gaussian_closed<T: Real>(var_n: T, res: &Resonator<T>, theta0: T) -> T {
    var_n * res.external_rate * theta0 * theta0
}

/// Gaussian dephasing rate by quadrature of `θ₀² (4/π) ∫ δn_r²(ω) dω` with
/// `δn_r² = (κ/2)² F² Var` (Hz).
pub fn dephasing_gaussian<T: Real>(var_n: T, res: &Resonator<T>, theta0: T) -> Result<T> {
    if !(var_n >= T::zero()) {
        return Err(Error::domain("var_n", var_n.as_f64(), "must be >= 0"));
    }
    let (a, b) = window::<T>();
    // x = δ_r / (κ/2); (κ/2)² F² dδ = (κ/2) dx / (1 + x²)²
    let r = integrate(
        |x: T| {
            let l = T::one() / (T::one() + x * x);
            l * l
        },
        a,
        b,
        Tolerance::default(),
    )?;
    let half_kappa = res.external_rate * T::half();
    Ok(theta0 * theta0 * T::c(4.0) / T::PI() * half_kappa * r.value * var_n)
}

/// Dephasing rate with the qubit-state-dependent resonator line (Hz).
///
/// `γ = (2χ/κ)² (κ/π) ∫ dδ (κ²/4)[D₊ + D₋]/(κ²/4 + δ² + χ²) · Var`,
/// normalised so that χ → 0 reproduces the Gaussian result.
pub fn dephasing_master<T: Real>(var_n: T, res: &Resonator<T>, chi: T) -> Result<T> {
    if !(chi.abs() < res.external_rate) {
        return Err(Error::domain(
            "chi",
            chi.as_f64(),
            "|chi| must be below kappa_x",
        ));
    }
    let p = T::two() * chi / res.external_rate;
    let (a, b) = window::<T>();
    let r = integrate(
        |x: T| (lorentz(T::one(), x + p) + lorentz(T::one(), x - p)) / (T::one() + x * x + p * p),
        a,
        b,
        Tolerance::default(),
    )?;
    Ok(p * p * res.external_rate / T::PI() * r.value * var_n)
}

/// `(γ_gauss − γ_master)/γ_gauss` with `θ₀ = atan(2χ/κ_x)`.
pub fn dephasing_master_correction<T: Real>(res: &Resonator<T>, chi: T) -> Result<T> {
    if chi == T::zero() {
        return Ok(T::zero());
    }
    let theta0 = (T::two() * chi / res.external_rate).atan();
    let gauss = dephasing_gaussian(T::one(), res, theta0)?;
    let master = dephasing_master(T::one(), res, chi)?;
    Ok((gauss - master) / gauss)
}

/// Stationary damped-mode trajectory `a(t)` sampled every `dt` seconds.
///
/// Exact Ornstein–Uhlenbeck update for `da = -(κ/2)(a − ā) dt + sqrt(κ n) dW`,
/// so `<|a − ā|²> = noise_photons` and the amplitude correlation decays at
/// `κ/2`. Starts in the stationary distribution.
pub fn simulate_mode_trajectory<T: Real>(
    res: &Resonator<T>,
    mean_field: Complex<T>,
    noise_photons: T,
    dt: T,
    steps: usize,
    seed: u64,
) -> Vec<Complex<T>> {
    let kappa = (T::TAU() * res.external_rate).as_f64();
    let decay = (-0.5 * kappa * dt.as_f64()).exp();
    let n = noise_photons.as_f64();
    let kick = (n * (1.0 - decay * decay) / 2.0).sqrt();
    let kicks: Vec<(f64, f64)> = random::generate(steps, seed, stream::MODE_TRAJECTORY, |rng| {
        (rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mean = Complex::new(mean_field.re.as_f64(), mean_field.im.as_f64());
    let mut out = Vec::with_capacity(steps);
    let s0 = (n / 2.0).sqrt();
    let mut fluct = Complex::new(
        s0 * kicks.first().map_or(0.0, |k| k.0),
        s0 * kicks.first().map_or(0.0, |k| k.1),
    );
    for (i, k) in kicks.iter().enumerate() {
        if i > 0 {
            fluct = fluct * decay + Complex::new(kick * k.0, kick * k.1);
        }
        let a = mean + fluct;
        out.push(Complex::new(T::c(a.re), T::c(a.im)));
    }
    out
}

/// Autocovariance of a real series for lags `0..=max_lag`.
pub fn autocovariance(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|lag| {
            let m = n - lag;
            (0..m)
                .map(|i| (series[i] - mean) * (series[i + lag] - mean))
                .sum::<f64>()
                / m as f64
        })
        .collect()
}

/// Complex amplitude autocovariance `Re <δa*(t) δa(t+τ)>`.
pub fn amplitude_autocovariance(series: &[Complex<f64>], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<Complex<f64>>() / n as f64;
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|lag| {
            let m = n - lag;
            (0..m)
                .map(|i| ((series[i] - mean).conj() * (series[i + lag] - mean)).re)
                .sum::<f64>()
                / m as f64
        })
        .collect()
}

/// Exponential decay rate (1/s) from a log-linear fit of `acf[lag]` while it
/// stays above `floor` times its zero-lag value.
pub fn decay_rate_from_acf(acf: &[f64], dt: f64, floor: f64) -> Result<f64> {
    let c0 = acf.first().copied().unwrap_or(0.0);
    if !(c0 > 0.0) {
        return Err(Error::Fit(
            "autocovariance has no positive zero-lag value".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = acf
        .iter()
        .enumerate()
        .take_while(|(_, &c)| c > floor * c0)
        .map(|(i, &c)| (i as f64 * dt, (c / c0).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: pts.len(),
        });
    }
    // Slope through the origin: ln C(τ)/C(0) = −Γ τ.
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    Ok(-sxy / sxx)
}

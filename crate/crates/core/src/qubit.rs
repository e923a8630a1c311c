//! Dispersive transmon–resonator model and Ramsey dephasing.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{correlator, Resonator};
use crate::constants::{sample, FLUX_QUANTUM};
use crate::error::{Error, Result};
use crate::random::{chunk_rng, stream};
use crate::scalar::Real;
use crate::states::StateKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams<T> {
    pub max_frequency: T,
    pub coupling: T,
    /// Negative for a transmon.
    pub anharmonicity: T,
    pub intrinsic_relaxation: T,
    /// Extra relaxation per thermal photon.
    pub relaxation_per_thermal_photon: T,
    /// Extra relaxation per coherent or shot-noise photon; may be negative.
    pub relaxation_per_poisson_photon: T,
    pub intrinsic_dephasing: T,
    /// Wb.
    pub flux_quantum: T,
}

impl<T: Real> QubitParams<T> {
    pub fn sample() -> Self {
        Self {
            max_frequency: T::c(sample::QUBIT_MAX_FREQUENCY),
            coupling: T::c(sample::COUPLING),
            anharmonicity: T::c(sample::ANHARMONICITY),
            intrinsic_relaxation: T::c(sample::RELAXATION),
            relaxation_per_thermal_photon: T::c(sample::RELAXATION_PER_THERMAL_PHOTON),
            relaxation_per_poisson_photon: T::c(sample::RELAXATION_PER_POISSON_PHOTON),
            intrinsic_dephasing: T::c(sample::INTRINSIC_DEPHASING),
            flux_quantum: T::c(FLUX_QUANTUM),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling > T::zero()) {
            return Err(Error::domain(
                "coupling",
                self.coupling.as_f64(),
                "must be positive",
            ));
        }
        if !(self.anharmonicity < T::zero()) {
            return Err(Error::domain(
                "anharmonicity",
                self.anharmonicity.as_f64(),
                "must be negative",
            ));
        }
        if !(self.intrinsic_relaxation >= T::zero()) {
            return Err(Error::domain(
                "intrinsic_relaxation",
                self.intrinsic_relaxation.as_f64(),
                "must be >= 0",
            ));
        }
        if !(self.intrinsic_dephasing >= T::zero()) {
            return Err(Error::domain(
                "intrinsic_dephasing",
                self.intrinsic_dephasing.as_f64(),
                "must be >= 0",
            ));
        }
        if !(self.flux_quantum > T::zero()) {
            return Err(Error::domain(
                "flux_quantum",
                self.flux_quantum.as_f64(),
                "must be positive",
            ));
        }
        Ok(())
    }

    /// `γ₁ + γ₁^d n_r` for the given field kind.
    pub fn relaxation_rate(&self, kind: StateKind, n_r: T) -> T {
        let per_photon = match kind {
            StateKind::Thermal => self.relaxation_per_thermal_photon,
            StateKind::Coherent | StateKind::ShotNoise => self.relaxation_per_poisson_photon,
            StateKind::Vacuum => T::zero(),
        };
        self.intrinsic_relaxation + per_photon * n_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveSystem<T> {
    pub qubit: QubitParams<T>,
    pub resonator: Resonator<T>,
    /// `ω_q − ω_r`, Hz.
    pub detuning: T,
    pub chi: T,
    /// `atan(2χ/κ_x)`.
    pub theta0: T,
}

impl<T: Real> DispersiveSystem<T> {
    /// Qubit at its flux sweet spot.
    pub fn new(qubit: QubitParams<T>, resonator: Resonator<T>) -> Result<Self> {
        let detuning = qubit.max_frequency - resonator.resonance_frequency;
        Self::with_detuning(qubit, resonator, detuning)
    }

    pub fn with_detuning(
        qubit: QubitParams<T>,
        resonator: Resonator<T>,
        detuning: T,
    ) -> Result<Self> {
        qubit.validate()?;
        let chi = dispersive_shift(qubit.coupling, detuning, qubit.anharmonicity)?;
        let theta0 = accumulated_phase(chi, resonator.external_rate)?;
        Ok(Self {
            qubit,
            resonator,
            detuning,
            chi,
            theta0,
        })
    }

    pub fn sample() -> Self {
        Self::new(QubitParams::sample(), Resonator::sample()).expect("sample parameters are valid")
    }

    /// `κ_x θ₀²`, the small-occupation slope of the thermal dephasing rate.
    pub fn thermal_slope(&self) -> T {
        self.resonator.external_rate * self.theta0 * self.theta0
    }

    /// Dispersive approximation flag: `|χ| < |δ|/10`.
    pub fn is_dispersive(&self) -> bool {
        self.chi.abs() < self.detuning.abs() * T::c(0.1)
    }

    /// Decoherence rate `γ₂ = γ₁(n)/2 + γ_φ0 + γ_φn(n)` (Hz).
    pub fn ramsey_rate(&self, kind: StateKind, n_r: T) -> T {
        self.qubit.relaxation_rate(kind, n_r) * T::half()
            + self.qubit.intrinsic_dephasing
            + dephasing_rate(kind, n_r, self)
    }
}

/// `χ = (g²/δ)·α/(δ + α)`.
pub fn dispersive_shift<T: Real>(g: T, delta: T, alpha: T) -> Result<T> {
    if delta == T::zero() {
        return Err(Error::Singular(
            "delta = 0: qubit resonant with the resonator",
        ));
    }
    if delta + alpha == T::zero() {
        return Err(Error::Singular("delta + alpha = 0: straddling point"));
    }
    Ok(g * g / delta * alpha / (delta + alpha))
}

pub fn accumulated_phase<T: Real>(chi: T, kappa_x: T) -> Result<T> {
    if !(kappa_x > T::zero()) {
        return Err(Error::domain(
            "kappa_x",
            kappa_x.as_f64(),
            "must be positive",
        ));
    }
    Ok((T::two() * chi / kappa_x).atan())
}

/// `ω_q,0 sqrt|cos(πΦ/Φ₀)|`.
pub fn flux_tuned_frequency<T: Real>(params: &QubitParams<T>, flux: T) -> T {
    params.max_frequency * (T::PI() * flux / params.flux_quantum).cos().abs().sqrt()
}

pub fn critical_photons<T: Real>(delta: T, g: T) -> Result<T> {
    if !(g > T::zero()) {
        return Err(Error::domain("g", g.as_f64(), "must be positive"));
    }
    Ok(delta * delta / (T::c(4.0) * g * g))
}

pub fn purcell_rate<T: Real>(kappa_tot: T, g: T, delta: T) -> Result<T> {
    if delta == T::zero() {
        return Err(Error::Singular(
            "delta = 0: qubit resonant with the resonator",
        ));
    }
    Ok(kappa_tot * g * g / (delta * delta))
}

/// `δω_q = 2χ n_r`.
pub fn ac_stark_shift<T: Real>(chi: T, n_r: T) -> Result<T> {
    if !(n_r >= T::zero()) {
        return Err(Error::domain("n_r", n_r.as_f64(), "must be >= 0"));
    }
    Ok(T::two() * chi * n_r)
}

/// Photon number from a measured Stark shift, `δω_q / 2χ`.
pub fn stark_photons<T: Real>(chi: T, shift: T) -> Result<T> {
    if chi == T::zero() {
        return Err(Error::domain("chi", 0.0, "must be nonzero"));
    }
    Ok(shift / (T::two() * chi))
}

/// Field-induced dephasing rate (Hz).
pub fn dephasing_rate<T: Real>(kind: StateKind, n_r: T, sys: &DispersiveSystem<T>) -> T {
    let s = sys.thermal_slope();
    match kind {
        StateKind::Thermal => s * (n_r * n_r + n_r),
        StateKind::Coherent => T::two() * s * n_r,
        StateKind::ShotNoise => s * n_r,
        StateKind::Vacuum => T::zero(),
    }
}

/// Thermal dephasing on top of a thermal background `n_b`, relative to the
/// background alone. Slope at `n_r → 0` is `κ_x θ₀² (1 + 2 n_b)`.
pub fn thermal_dephasing_over_background<T: Real>(n_r: T, n_b: T, sys: &DispersiveSystem<T>) -> T {
    let tot = n_r + n_b;
    sys.thermal_slope() * (tot * tot + tot - n_b * n_b - n_b)
}

/// Background occupation implied by a measured-to-expected slope ratio,
/// with the background entering through a beam splitter of transmissivity `eta`.
pub fn background_from_slope_ratio<T: Real>(ratio: T, eta: T) -> Result<T> {
    if !(eta >= T::zero() && eta < T::one()) {
        return Err(Error::domain("eta", eta.as_f64(), "must lie in [0, 1)"));
    }
    Ok((ratio - T::one()) / (T::two() * (T::one() - eta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeForm {
    /// `<δφ²>/2 = γ_φn τ`.
    #[default]
    AsymptoticRate,
    /// Double-time cumulant `<δφ²> = 8 χ_eff² ∫₀^τ (τ−s) C(s) ds`.
    GaussianIntegral,
    /// `<δφ²>/2 = 2χ² ∫₀^τ C(s) ds`. Saturates; kept for comparison only.
    SingleIntegral,
}

/// Accumulated phase variance `<δφ²>(τ)` (rad²).
///
/// The double-time form uses `χ_eff = κ_x θ₀ / 2` so that its long-time slope
/// equals the closed-form dephasing rates for all three decay constants.
pub fn phase_variance<T: Real>(
    sys: &DispersiveSystem<T>,
    kind: StateKind,
    n_r: T,
    tau: T,
    form: EnvelopeForm,
) -> T {
    let c = correlator(kind, n_r, &sys.resonator);
    let k = T::TAU() * c.decay_rate;
    match form {
        EnvelopeForm::AsymptoticRate => T::two() * T::TAU() * dephasing_rate(kind, n_r, sys) * tau,
        EnvelopeForm::GaussianIntegral => {
            let chi_eff = T::PI() * sys.resonator.external_rate * sys.theta0;
            let x = k * tau;
            // τ/k − (1 − e^{−kτ})/k², written to keep precision at small kτ
            let shape = if x < T::c(1e-4) {
                tau * tau * (T::half() - x / T::c(6.0) + x * x / T::c(24.0))
            } else {
                (x + (-x).exp_m1()) / (k * k)
            };
            T::c(8.0) * chi_eff * chi_eff * c.variance * shape
        }
        EnvelopeForm::SingleIntegral => {
            let chi = T::TAU() * sys.chi;
            let integral = if k > T::zero() {
                -(-k * tau).exp_m1() / k
            } else {
                tau
            };
            T::c(4.0) * chi * chi * c.variance * integral
        }
    }
}

/// Ramsey coherence envelope `exp[−γ₁(n)τ/2 − γ_φ0 τ − <δφ²>/2]`.
pub fn ramsey_envelope<T: Real>(
    sys: &DispersiveSystem<T>,
    kind: StateKind,
    n_r: T,
    tau: T,
    form: EnvelopeForm,
) -> Result<T> {
    if !(tau >= T::zero()) {
        return Err(Error::domain("tau", tau.as_f64(), "must be >= 0"));
    }
    let bare = sys.qubit.relaxation_rate(kind, n_r) * T::half() + sys.qubit.intrinsic_dephasing;
    let exponent = T::TAU() * bare * tau + phase_variance(sys, kind, n_r, tau, form) * T::half();
    Ok((-exponent).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyPoint<T> {
    pub tau: T,
    pub p_e: T,
}

/// Excited-state probability `½[1 + cos(2π f τ)·envelope]`.
pub fn ramsey_probability<T: Real>(
    sys: &DispersiveSystem<T>,
    kind: StateKind,
    n_r: T,
    tau: T,
    fringe_detuning: T,
    form: EnvelopeForm,
) -> Result<T> {
    let env = ramsey_envelope(sys, kind, n_r, tau, form)?;
    Ok(T::half() * (T::one() + (T::TAU() * fringe_detuning * tau).cos() * env))
}

/// Binomially sampled Ramsey trace; point `i` draws from its own stream chunk.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ramsey<T: Real>(
    sys: &DispersiveSystem<T>,
    kind: StateKind,
    n_r: T,
    tau_grid: &[T],
    fringe_detuning: T,
    shots: u64,
    seed: u64,
    form: EnvelopeForm,
) -> Result<Vec<RamseyPoint<T>>> {
    if shots == 0 {
        return Err(Error::domain("shots", 0.0, "must be >= 1"));
    }
    if tau_grid.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    tau_grid
        .par_iter()
        .enumerate()
        .map(|(i, &tau)| {
            let p = ramsey_probability(sys, kind, n_r, tau, fringe_detuning, form)?;
            let p = p.as_f64().clamp(0.0, 1.0);
            let mut rng = chunk_rng(seed, stream::RAMSEY, i as u64);
            let hits = Binomial::new(shots, p)
                .map_err(|e| Error::Fit(format!("binomial: {e}")))?
                .sample(&mut rng);
            Ok(RamseyPoint {
                tau,
                p_e: T::c(hits as f64 / shots as f64),
            })
        })
        .collect()
}

/// Uniform delay grid out to three decoherence times, `τ_max = 3/(2π γ₂)`.
pub fn default_tau_grid<T: Real>(
    sys: &DispersiveSystem<T>,
    kind: StateKind,
    n_r: T,
    points: usize,
) -> Vec<T> {
    let tau_max = T::c(3.0) / (T::TAU() * sys.ramsey_rate(kind, n_r));
    let n = points.max(2);
    (0..n)
        .map(|i| tau_max * T::c(i as f64) / T::c((n - 1) as f64))
        .collect()
}

/// Five fringes across the grid.
pub fn default_fringe_detuning<T: Real>(tau_grid: &[T]) -> T {
    let max = tau_grid.iter().copied().fold(T::zero(), T::max);
    T::c(5.0) / max
}

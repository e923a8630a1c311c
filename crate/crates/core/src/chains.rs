//! Attenuation and amplification of photon statistics.
//!
//! The photon-number polynomials only need field arithmetic, so they accept any
//! [`Scalar`], including exact rationals.

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, MILLIWATT};
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};
use crate::states::StateKind;

pub fn db_to_linear<T: Real>(db: T) -> T {
    T::c(10.0).powf(db / T::c(10.0))
}

pub fn linear_to_db<T: Real>(linear: T) -> T {
    T::c(10.0) * linear.log10()
}

pub fn watts_to_dbm<T: Real>(watts: T) -> T {
    linear_to_db(watts / T::c(MILLIWATT))
}

/// Beam splitter `a = sqrt(η) b + sqrt(1−η) c` with thermal background `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterStage<T> {
    pub transmissivity: T,
    pub background_photons: T,
}

impl<T: Scalar> BeamSplitterStage<T> {
    pub fn new(transmissivity: T, background_photons: T) -> Result<Self> {
        let s = Self {
            transmissivity,
            background_photons,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.transmissivity.is_negative() || self.transmissivity > T::one() {
            return Err(Error::domain(
                "transmissivity",
                f64::NAN,
                "must lie in [0, 1]",
            ));
        }
        if self.background_photons.is_negative() {
            return Err(Error::domain(
                "background_photons",
                f64::NAN,
                "must be >= 0",
            ));
        }
        Ok(())
    }

    /// Single stage equivalent to `self` followed by `next`, for mean photon
    /// numbers. Undefined when both stages are lossless.
    pub fn then(&self, next: &Self) -> Self {
        let eta = self.transmissivity * next.transmissivity;
        let loss = T::one() - eta;
        let mixed = if loss == T::zero() {
            T::zero()
        } else {
            (next.transmissivity * (T::one() - self.transmissivity) * self.background_photons
                + (T::one() - next.transmissivity) * next.background_photons)
                / loss
        };
        Self {
            transmissivity: eta,
            background_photons: mixed,
        }
    }
}

/// Mean photon number and photon-number variance behind a lossy stage.
///
/// Thermal input gives `η²n_b² + ηn_b + 2η(1−η)n_b n_n + (1−η)²n_n² + (1−η)n_n`;
/// Poissonian input (coherent, shot noise) drops the `η²n_b²` term.
pub fn attenuate<T: Scalar>(
    kind: StateKind,
    n_b: T,
    stage: &BeamSplitterStage<T>,
) -> Result<(T, T)> {
    stage.validate()?;
    if n_b.is_negative() {
        return Err(Error::domain("n_b", f64::NAN, "must be >= 0"));
    }
    let eta = stage.transmissivity;
    let loss = T::one() - eta;
    let nn = stage.background_photons;
    let n_tot = eta * n_b + loss * nn;
    let common = eta * n_b + T::two() * eta * loss * n_b * nn + loss * loss * nn * nn + loss * nn;
    let variance = match kind {
        StateKind::Thermal | StateKind::Vacuum => eta * eta * n_b * n_b + common,
        StateKind::Coherent | StateKind::ShotNoise => common,
    };
    Ok((n_tot, variance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseStatistics {
    /// Idler in a thermal state: `Var(n_n) = n_n² + n_n`.
    #[default]
    QuantumThermal,
    /// Idler variance `n_n²`: the `(G−1)² n_n` term is dropped, commutator
    /// terms kept.
    Classical,
    /// Signal and idler both treated as commuting classical Gaussian fields,
    /// `<c c†> = <c† c> = n_n`; no vacuum contributions at all.
    CommutatorFree,
}

/// Phase-preserving amplifier `a = sqrt(G) b + sqrt(G−1) c†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JpaStage<T> {
    /// Linear power gain.
    pub gain: T,
    pub added_noise_photons: T,
    pub noise_statistics: NoiseStatistics,
}

impl<T: Scalar> JpaStage<T> {
    pub fn new(gain: T, added_noise_photons: T, noise_statistics: NoiseStatistics) -> Result<Self> {
        if gain < T::one() {
            return Err(Error::domain("gain", f64::NAN, "linear gain must be >= 1"));
        }
        if added_noise_photons.is_negative() {
            return Err(Error::domain(
                "added_noise_photons",
                f64::NAN,
                "must be >= 0",
            ));
        }
        Ok(Self {
            gain,
            added_noise_photons,
            noise_statistics,
        })
    }
}

impl<T: Real> JpaStage<T> {
    pub fn from_db(
        gain_db: T,
        added_noise_photons: T,
        noise_statistics: NoiseStatistics,
    ) -> Result<Self> {
        Self::new(db_to_linear(gain_db), added_noise_photons, noise_statistics)
    }

    pub fn gain_db(&self) -> T {
        linear_to_db(self.gain)
    }
}

/// Mean photon number and variance at the amplifier output.
pub fn amplify<T: Scalar>(n_jpa: T, stage: &JpaStage<T>) -> Result<(T, T)> {
    if n_jpa.is_negative() {
        return Err(Error::domain("n_jpa", f64::NAN, "must be >= 0"));
    }
    let g = stage.gain;
    let gm = g - T::one();
    let nn = stage.added_noise_photons;
    if stage.noise_statistics == NoiseStatistics::CommutatorFree {
        let n = g * n_jpa + gm * nn;
        return Ok((n, n * n + n));
    }
    let n_bs = g * n_jpa + gm * (nn + T::one());
    let mut variance = g * g * n_jpa * n_jpa
        + g * g * n_jpa
        + g * gm * n_jpa
        + T::two() * g * gm * n_jpa * nn
        + gm * gm * nn * nn
        + g * gm * nn
        + g * gm;
    if stage.noise_statistics == NoiseStatistics::QuantumThermal {
        variance = variance + gm * gm * nn;
    }
    Ok((n_bs, variance))
}

/// `g̃²(0) = Var(n) − n + n²`.
pub fn g2_unnormalized<T: Scalar>(n: T, variance: T) -> T {
    variance - n + n * n
}

/// Fano factor `Var(n)/n`.
pub fn fano_factor<T: Real>(n: T, variance: T) -> Result<T> {
    if !(n > T::zero()) {
        return Err(Error::domain("n", n.as_f64(), "must be positive"));
    }
    Ok(variance / n)
}

/// Input-referred correlation in the large-gain limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JpaReferred<T> {
    pub g2: T,
    /// Value at `n_jpa = 0`.
    pub offset: T,
    /// False when `G < 10`, where the large-gain form is only indicative.
    pub large_gain: bool,
}

/// Coefficients of `g2 − offset = ρ n_jpa² + ξ n_jpa` and the offset.
pub fn jpa_referred_coefficients<T: Scalar>(stage: &JpaStage<T>) -> (T, T, T) {
    let two = T::two();
    let four = two * two;
    let nn = stage.added_noise_photons;
    match stage.noise_statistics {
        NoiseStatistics::QuantumThermal => (
            two,
            four + four * nn,
            two * (nn + T::one()) * (nn + T::one()),
        ),
        NoiseStatistics::Classical => (
            two,
            four + four * nn,
            two * (nn + T::one()) * (nn + T::one()) - nn,
        ),
        NoiseStatistics::CommutatorFree => (two, four * nn, two * nn * nn),
    }
}

/// `g̃²(0)/G²` for `G → ∞`: `2(n_jpa + n_n + 1)²` for thermal idler noise.
pub fn g2_jpa_referred<T: Scalar>(n_jpa: T, stage: &JpaStage<T>) -> JpaReferred<T> {
    let (rho, xi, offset) = jpa_referred_coefficients(stage);
    let ten = T::two() * T::two() * T::two() + T::two();
    JpaReferred {
        g2: rho * n_jpa * n_jpa + xi * n_jpa + offset,
        offset,
        large_gain: stage.gain >= ten,
    }
}

/// Exact `g̃²_out(0)/G²` at finite gain; tends to [`g2_jpa_referred`].
pub fn g2_jpa_referred_finite<T: Scalar>(n_jpa: T, stage: &JpaStage<T>) -> Result<T> {
    let (n, var) = amplify(n_jpa, stage)?;
    Ok(g2_unnormalized(n, var) / (stage.gain * stage.gain))
}

/// Measured amplifier characterisation used as a comparator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JpaReference {
    pub label: &'static str,
    pub gain_db: f64,
    pub noise_photons: f64,
    pub rho: f64,
    pub xi: f64,
    pub offset: f64,
    pub t_1db: f64,
    pub p_1db_dbm: f64,
    pub kappa_x: f64,
    /// Compression point lies outside the measured temperature range.
    pub estimated_compression: bool,
}

pub const JPA_REFERENCES: [JpaReference; 3] = [
    JpaReference {
        label: "jpa1",
        gain_db: 14.3,
        noise_photons: 1.47,
        rho: 2.24,
        xi: 8.14,
        offset: 7.1,
        t_1db: 0.70,
        p_1db_dbm: -127.0,
        kappa_x: 18.7e6,
        estimated_compression: true,
    },
    JpaReference {
        label: "jpa2a",
        gain_db: 15.8,
        noise_photons: 0.66,
        rho: 2.23,
        xi: 3.29,
        offset: 1.1,
        t_1db: 0.59,
        p_1db_dbm: -129.0,
        kappa_x: 14.9e6,
        estimated_compression: false,
    },
    JpaReference {
        label: "jpa2b",
        gain_db: 15.2,
        noise_photons: 0.97,
        rho: 2.21,
        xi: 3.29,
        offset: 1.8,
        t_1db: 0.44,
        p_1db_dbm: -130.0,
        kappa_x: 14.6e6,
        estimated_compression: false,
    },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseComparisonRow {
    pub label: String,
    pub noise_statistics: NoiseStatistics,
    pub noise_photons: f64,
    pub rho: f64,
    pub xi: f64,
    pub offset: f64,
    pub measured_xi: f64,
    pub measured_offset: f64,
}

/// Model ρ, ξ and offset for every reference amplifier under each noise convention.
pub fn noise_comparison_table() -> Vec<NoiseComparisonRow> {
    let mut rows = Vec::new();
    for r in &JPA_REFERENCES {
        for stats in [
            NoiseStatistics::QuantumThermal,
            NoiseStatistics::Classical,
            NoiseStatistics::CommutatorFree,
        ] {
            let stage = JpaStage::from_db(r.gain_db, r.noise_photons, stats)
                .expect("reference gains valid");
            let (rho, xi, offset) = jpa_referred_coefficients(&stage);
            rows.push(NoiseComparisonRow {
                label: r.label.to_string(),
                noise_statistics: stats,
                noise_photons: r.noise_photons,
                rho,
                xi,
                offset,
                measured_xi: r.xi,
                measured_offset: r.offset,
            });
        }
    }
    rows
}

/// Power at the 1 dB compression point, `κ_x k_B T₁dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Power<T> {
    pub watts: T,
    pub dbm: T,
}

pub fn compression_power<T: Real>(kappa_x: T, t_1db: T) -> Result<Power<T>> {
    if !(kappa_x > T::zero()) {
        return Err(Error::domain(
            "kappa_x",
            kappa_x.as_f64(),
            "must be positive",
        ));
    }
    if !(t_1db > T::zero()) {
        return Err(Error::domain("t_1db", t_1db.as_f64(), "must be positive"));
    }
    let watts = kappa_x * T::c(BOLTZMANN) * t_1db;
    Ok(Power {
        watts,
        dbm: watts_to_dbm(watts),
    })
}

/// Output amplification chain characterised by its input-referred noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearChain<T> {
    /// Linear power gain.
    pub gain: T,
    /// K.
    pub noise_temperature: T,
    /// Hz.
    pub bandwidth: T,
}

impl<T: Real> LinearChain<T> {
    pub fn new(gain: T, noise_temperature: T, bandwidth: T) -> Result<Self> {
        if !(gain > T::zero()) {
            return Err(Error::domain("gain", gain.as_f64(), "must be positive"));
        }
        if !(noise_temperature >= T::zero()) {
            return Err(Error::domain(
                "noise_temperature",
                noise_temperature.as_f64(),
                "must be >= 0",
            ));
        }
        if !(bandwidth > T::zero()) {
            return Err(Error::domain(
                "bandwidth",
                bandwidth.as_f64(),
                "must be positive",
            ));
        }
        Ok(Self {
            gain,
            noise_temperature,
            bandwidth,
        })
    }

    pub fn from_db(gain_db: T, noise_temperature: T, bandwidth: T) -> Result<Self> {
        Self::new(db_to_linear(gain_db), noise_temperature, bandwidth)
    }

    pub fn gain_db(&self) -> T {
        linear_to_db(self.gain)
    }
}

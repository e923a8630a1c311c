//! Physical constants (SI, exact 2019 definitions) and the sample defaults
//! used throughout the crate. Frequencies and rates are ordinary frequencies
//! in Hz, i.e. the "/2π" values.

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// h / k_B in K/Hz. Keeps `hf/k_BT` inside f32 range.
pub const PLANCK_OVER_BOLTZMANN: f64 = PLANCK / BOLTZMANN;
/// Superconducting flux quantum h / 2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

/// Reference power for dBm.
pub const MILLIWATT: f64 = 1e-3;

/// Sample parameters of the qubit-resonator device.
pub mod sample {
    pub const QUBIT_MAX_FREQUENCY: f64 = 6.92e9;
    pub const RESONATOR_FREQUENCY: f64 = 6.07e9;
    pub const COUPLING: f64 = 67e6;
    pub const ANHARMONICITY: f64 = -315e6;
    pub const KAPPA_EXTERNAL: f64 = 8.5e6;
    pub const KAPPA_INTERNAL: f64 = 50e3;
    pub const RELAXATION: f64 = 3.9e6;
    pub const RELAXATION_PER_THERMAL_PHOTON: f64 = 800e3;
    pub const RELAXATION_PER_POISSON_PHOTON: f64 = -30e3;
    /// gamma_2(0) = 2 MHz with gamma_1 = 3.9 MHz leaves 50 kHz of bare dephasing.
    pub const INTRINSIC_DEPHASING: f64 = 50e3;
}

/// Dual-path detection setup.
pub mod detection {
    pub const IF_FREQUENCY: f64 = 11e6;
    pub const SAMPLE_RATE: f64 = 250e6;
    pub const JPA_FREQUENCY: f64 = 5.35e9;
    pub const MEASUREMENT_BANDWIDTH: f64 = 400e3;
    pub const CHAIN_GAIN_DB: f64 = 145.0;
    pub const CHAIN_NOISE_TEMPERATURE: f64 = 3.0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_quantum_value() {
        assert!((FLUX_QUANTUM - 2.067_833_848e-15).abs() < 1e-23);
    }

    #[test]
    fn h_over_kb_value() {
        assert!((PLANCK_OVER_BOLTZMANN - 4.799_243_073e-11).abs() < 1e-19);
    }
}

//! Run configuration: defaults, JSON file, then command-line overrides.
//!
//! Every physical key carries its unit in the name. Unknown keys are errors.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use photostat::chains::NoiseStatistics;
use photostat::constants::{detection, sample, FLUX_QUANTUM};
use photostat::qubit::EnvelopeForm;
use photostat::{DispersiveSystem, QubitParams, Resonator, StateKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    VarianceCurves,
    RamseySweep,
    DualpathSweep,
    JpaSweep,
    PlanckCalibration,
    QuadratureCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::VarianceCurves,
        Experiment::RamseySweep,
        Experiment::DualpathSweep,
        Experiment::JpaSweep,
        Experiment::PlanckCalibration,
        Experiment::QuadratureCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::VarianceCurves => "variance_curves",
            Experiment::RamseySweep => "ramsey_sweep",
            Experiment::DualpathSweep => "dualpath_sweep",
            Experiment::JpaSweep => "jpa_sweep",
            Experiment::PlanckCalibration => "planck_calibration",
            Experiment::QuadratureCheck => "quadrature_check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StateChoice {
    Thermal,
    Coherent,
    ShotNoise,
    All,
}

impl StateChoice {
    pub fn kinds(self) -> Vec<StateKind> {
        match self {
            StateChoice::Thermal => vec![StateKind::Thermal],
            StateChoice::Coherent => vec![StateKind::Coherent],
            StateChoice::ShotNoise => vec![StateKind::ShotNoise],
            StateChoice::All => vec![
                StateKind::Thermal,
                StateKind::Coherent,
                StateKind::ShotNoise,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum NoiseChoice {
    #[serde(alias = "quantum_thermal")]
    Thermal,
    Classical,
    CommutatorFree,
}

impl From<NoiseChoice> for NoiseStatistics {
    fn from(c: NoiseChoice) -> Self {
        match c {
            NoiseChoice::Thermal => NoiseStatistics::QuantumThermal,
            NoiseChoice::Classical => NoiseStatistics::Classical,
            NoiseChoice::CommutatorFree => NoiseStatistics::CommutatorFree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    pub qubit_max_frequency_ghz: f64,
    pub resonator_frequency_ghz: f64,
    pub coupling_mhz: f64,
    pub anharmonicity_mhz: f64,
    pub kappa_x_mhz: f64,
    pub kappa_i_khz: f64,
    pub gamma1_mhz: f64,
    pub gamma1_per_thermal_photon_khz: f64,
    pub gamma1_per_poisson_photon_khz: f64,
    pub gamma_phi0_khz: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            qubit_max_frequency_ghz: sample::QUBIT_MAX_FREQUENCY / 1e9,
            resonator_frequency_ghz: sample::RESONATOR_FREQUENCY / 1e9,
            coupling_mhz: sample::COUPLING / 1e6,
            anharmonicity_mhz: sample::ANHARMONICITY / 1e6,
            kappa_x_mhz: sample::KAPPA_EXTERNAL / 1e6,
            kappa_i_khz: sample::KAPPA_INTERNAL / 1e3,
            gamma1_mhz: sample::RELAXATION / 1e6,
            gamma1_per_thermal_photon_khz: sample::RELAXATION_PER_THERMAL_PHOTON / 1e3,
            gamma1_per_poisson_photon_khz: sample::RELAXATION_PER_POISSON_PHOTON / 1e3,
            gamma_phi0_khz: sample::INTRINSIC_DEPHASING / 1e3,
        }
    }
}

impl DeviceConfig {
    pub fn system(&self) -> photostat::Result<DispersiveSystem> {
        let qubit = QubitParams {
            max_frequency: self.qubit_max_frequency_ghz * 1e9,
            coupling: self.coupling_mhz * 1e6,
            anharmonicity: self.anharmonicity_mhz * 1e6,
            intrinsic_relaxation: self.gamma1_mhz * 1e6,
            relaxation_per_thermal_photon: self.gamma1_per_thermal_photon_khz * 1e3,
            relaxation_per_poisson_photon: self.gamma1_per_poisson_photon_khz * 1e3,
            intrinsic_dephasing: self.gamma_phi0_khz * 1e3,
            flux_quantum: FLUX_QUANTUM,
        };
        let res = Resonator::new(
            self.resonator_frequency_ghz * 1e9,
            self.kappa_x_mhz * 1e6,
            self.kappa_i_khz * 1e3,
        )?;
        DispersiveSystem::new(qubit, res)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VarianceCurvesConfig {
    pub n_max: f64,
    pub n_points: usize,
}

impl Default for VarianceCurvesConfig {
    fn default() -> Self {
        Self {
            n_max: 10.0,
            n_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseySweepConfig {
    pub state: StateChoice,
    pub n_min: f64,
    pub n_max: f64,
    pub n_points: usize,
    pub shots: u64,
    pub tau_points: usize,
    pub envelope: EnvelopeForm,
    /// Inverse-variance weights in the photon-number law fits.
    pub weighted_fits: bool,
}

impl Default for RamseySweepConfig {
    fn default() -> Self {
        Self {
            state: StateChoice::All,
            n_min: 0.05,
            n_max: 1.5,
            n_points: 12,
            shots: 10_000,
            tau_points: 401,
            envelope: EnvelopeForm::AsymptoticRate,
            weighted_fits: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualpathConfig {
    pub mode_frequency_ghz: f64,
    pub t_min_k: f64,
    pub t_max_k: f64,
    pub n_points: usize,
    pub samples: usize,
    pub batches: usize,
    pub chain_noise_photons: f64,
    /// Second chain-noise level for the invariance check.
    pub invariance_chain_noise_photons: f64,
    pub invariance_photons: f64,
    pub vacuum_port_photons: f64,
    /// Also write the lowest-temperature record in the binary format.
    pub export_record: bool,
}

impl Default for DualpathConfig {
    fn default() -> Self {
        Self {
            mode_frequency_ghz: detection::JPA_FREQUENCY / 1e9,
            t_min_k: 0.05,
            t_max_k: 0.45,
            n_points: 10,
            samples: 1_000_000,
            batches: 20,
            chain_noise_photons: 1.0,
            invariance_chain_noise_photons: 12.0,
            invariance_photons: 0.5,
            vacuum_port_photons: 0.0,
            export_record: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JpaSweepConfig {
    pub noise_statistics: NoiseChoice,
    pub n_n: f64,
    pub gain_db: f64,
    pub n_max: f64,
    pub n_points: usize,
}

impl Default for JpaSweepConfig {
    fn default() -> Self {
        Self {
            noise_statistics: NoiseChoice::Thermal,
            n_n: 0.66,
            gain_db: 15.8,
            n_max: 2.0,
            n_points: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanckConfig {
    pub mode_frequency_ghz: f64,
    pub bandwidth_khz: f64,
    pub chain_gain_db: f64,
    pub chain_noise_temperature_k: f64,
    pub t_min_k: f64,
    pub t_max_k: f64,
    pub n_points: usize,
    /// Relative Gaussian power noise, e.g. 0.01 for 1%.
    pub relative_noise: f64,
    pub jpa_t_max_k: f64,
    pub jpa_points: usize,
    pub jpa_fit_max_t_k: f64,
    pub saturation_sharpness: f64,
}

impl Default for PlanckConfig {
    fn default() -> Self {
        Self {
            mode_frequency_ghz: detection::JPA_FREQUENCY / 1e9,
            bandwidth_khz: detection::MEASUREMENT_BANDWIDTH / 1e3,
            chain_gain_db: detection::CHAIN_GAIN_DB,
            chain_noise_temperature_k: detection::CHAIN_NOISE_TEMPERATURE,
            t_min_k: 0.05,
            t_max_k: 1.5,
            n_points: 600,
            relative_noise: 0.01,
            jpa_t_max_k: 1.0,
            jpa_points: 40,
            jpa_fit_max_t_k: 0.2,
            saturation_sharpness: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub photons: Vec<f64>,
    pub samples: usize,
    pub batches: usize,
    pub chain_noise_photons: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            photons: vec![0.1, 1.0],
            samples: 1_000_000,
            batches: 20,
            chain_noise_photons: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub device: DeviceConfig,
    pub variance_curves: VarianceCurvesConfig,
    pub ramsey_sweep: RamseySweepConfig,
    pub dualpath_sweep: DualpathConfig,
    pub jpa_sweep: JpaSweepConfig,
    pub planck_calibration: PlanckConfig,
    pub quadrature_check: QuadratureConfig,
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub state: Option<StateChoice>,
    pub n_points: Option<usize>,
    pub shots: Option<u64>,
    pub samples: Option<usize>,
    pub noise_statistics: Option<NoiseChoice>,
    pub n_n: Option<f64>,
    pub gain_db: Option<f64>,
    pub chain_noise_photons: Option<f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Apply overrides to the sections they name. `n_points` goes to the
    /// selected experiment only.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(e) = o.experiment {
            self.experiment = Some(e);
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = Some(d.clone());
        }
        if let Some(s) = o.state {
            self.ramsey_sweep.state = s;
        }
        if let Some(s) = o.shots {
            self.ramsey_sweep.shots = s;
        }
        if let Some(n) = o.samples {
            self.dualpath_sweep.samples = n;
            self.quadrature_check.samples = n;
        }
        if let Some(c) = o.noise_statistics {
            self.jpa_sweep.noise_statistics = c;
        }
        if let Some(v) = o.n_n {
            self.jpa_sweep.n_n = v;
        }
        if let Some(v) = o.gain_db {
            self.jpa_sweep.gain_db = v;
        }
        if let Some(v) = o.chain_noise_photons {
            self.dualpath_sweep.chain_noise_photons = v;
            self.quadrature_check.chain_noise_photons = v;
        }
        if let (Some(n), Some(e)) = (o.n_points, self.experiment) {
            match e {
                Experiment::VarianceCurves => self.variance_curves.n_points = n,
                Experiment::RamseySweep => self.ramsey_sweep.n_points = n,
                Experiment::DualpathSweep => self.dualpath_sweep.n_points = n,
                Experiment::JpaSweep => self.jpa_sweep.n_points = n,
                Experiment::PlanckCalibration => self.planck_calibration.n_points = n,
                Experiment::QuadratureCheck => {}
            }
        }
    }

    /// Check the section of the selected experiment and the device.
    pub fn validate(&self) -> Result<Experiment> {
        let exp = self.experiment.ok_or_else(|| {
            CliError::config("no experiment given on the command line or in the config file")
        })?;
        self.device
            .system()
            .map_err(|e| CliError::config(format!("device: {e}")))?;
        let mut v = Validator::default();
        match exp {
            Experiment::VarianceCurves => {
                let c = &self.variance_curves;
                v.positive("variance_curves.n_max", c.n_max);
                v.at_least("variance_curves.n_points", c.n_points, 2);
            }
            Experiment::RamseySweep => {
                let c = &self.ramsey_sweep;
                v.non_negative("ramsey_sweep.n_min", c.n_min);
                v.require(c.n_max > c.n_min, "ramsey_sweep.n_max", "must exceed n_min");
                v.at_least("ramsey_sweep.n_points", c.n_points, 4);
                v.require(c.shots >= 1, "ramsey_sweep.shots", "must be >= 1");
                v.at_least("ramsey_sweep.tau_points", c.tau_points, 8);
            }
            Experiment::DualpathSweep => {
                let c = &self.dualpath_sweep;
                v.positive("dualpath_sweep.mode_frequency_ghz", c.mode_frequency_ghz);
                v.positive("dualpath_sweep.t_min_k", c.t_min_k);
                v.require(
                    c.t_max_k > c.t_min_k,
                    "dualpath_sweep.t_max_k",
                    "must exceed t_min_k",
                );
                v.at_least("dualpath_sweep.n_points", c.n_points, 2);
                v.at_least("dualpath_sweep.batches", c.batches, 2);
                v.require(
                    c.samples >= 2 * c.batches,
                    "dualpath_sweep.samples",
                    "must be >= 2 x batches",
                );
                v.non_negative("dualpath_sweep.chain_noise_photons", c.chain_noise_photons);
                v.non_negative(
                    "dualpath_sweep.invariance_chain_noise_photons",
                    c.invariance_chain_noise_photons,
                );
                v.non_negative("dualpath_sweep.invariance_photons", c.invariance_photons);
                v.non_negative("dualpath_sweep.vacuum_port_photons", c.vacuum_port_photons);
            }
            Experiment::JpaSweep => {
                let c = &self.jpa_sweep;
                v.non_negative("jpa_sweep.n_n", c.n_n);
                v.non_negative("jpa_sweep.gain_db", c.gain_db);
                v.positive("jpa_sweep.n_max", c.n_max);
                v.at_least("jpa_sweep.n_points", c.n_points, 3);
            }
            Experiment::PlanckCalibration => {
                let c = &self.planck_calibration;
                v.positive(
                    "planck_calibration.mode_frequency_ghz",
                    c.mode_frequency_ghz,
                );
                v.positive("planck_calibration.bandwidth_khz", c.bandwidth_khz);
                v.non_negative(
                    "planck_calibration.chain_noise_temperature_k",
                    c.chain_noise_temperature_k,
                );
                v.positive("planck_calibration.t_min_k", c.t_min_k);
                v.require(
                    c.t_max_k > c.t_min_k,
                    "planck_calibration.t_max_k",
                    "must exceed t_min_k",
                );
                v.at_least("planck_calibration.n_points", c.n_points, 3);
                v.non_negative("planck_calibration.relative_noise", c.relative_noise);
                v.require(
                    c.jpa_t_max_k > c.jpa_fit_max_t_k && c.jpa_fit_max_t_k > c.t_min_k,
                    "planck_calibration.jpa_fit_max_t_k",
                    "must lie between t_min_k and jpa_t_max_k",
                );
                v.at_least("planck_calibration.jpa_points", c.jpa_points, 4);
                v.positive(
                    "planck_calibration.saturation_sharpness",
                    c.saturation_sharpness,
                );
            }
            Experiment::QuadratureCheck => {
                let c = &self.quadrature_check;
                v.require(
                    !c.photons.is_empty(),
                    "quadrature_check.photons",
                    "must not be empty",
                );
                for &n in &c.photons {
                    v.non_negative("quadrature_check.photons", n);
                }
                v.at_least("quadrature_check.batches", c.batches, 2);
                v.require(
                    c.samples >= 2 * c.batches,
                    "quadrature_check.samples",
                    "must be >= 2 x batches",
                );
                v.non_negative(
                    "quadrature_check.chain_noise_photons",
                    c.chain_noise_photons,
                );
            }
        }
        v.finish()?;
        Ok(exp)
    }
}

#[derive(Default)]
struct Validator {
    problems: Vec<String>,
}

impl Validator {
    fn require(&mut self, ok: bool, field: &str, msg: &str) {
        if !ok {
            self.problems.push(format!("{field}: {msg}"));
        }
    }

    fn positive(&mut self, field: &str, v: f64) {
        self.require(
            v.is_finite() && v > 0.0,
            field,
            "must be positive and finite",
        );
    }

    fn non_negative(&mut self, field: &str, v: f64) {
        self.require(v.is_finite() && v >= 0.0, field, "must be >= 0 and finite");
    }

    fn at_least(&mut self, field: &str, v: usize, min: usize) {
        if v < min {
            self.problems
                .push(format!("{field}: must be >= {min}, got {v}"));
        }
    }

    fn finish(self) -> Result<()> {
        if self.problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::config(self.problems.join("; ")))
        }
    }
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{finish, levenberg_marquardt, linear_least_squares, FitResult, LmOptions, Weighting};
use crate::error::{Error, Result};
use crate::states::{bose_einstein, ModeSpec};

/// Photon-variance law `Var(n)` fitted against mean photon number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceLaw {
    /// `ρ n² + ξ n`
    QuadraticPlusLinear,
    /// `ρ n²`
    PureQuadratic,
    /// `s n`
    Linear,
}

impl VarianceLaw {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            VarianceLaw::QuadraticPlusLinear => &["rho", "xi"],
            VarianceLaw::PureQuadratic => &["rho"],
            VarianceLaw::Linear => &["slope"],
        }
    }

    fn row(self, n: f64) -> Vec<f64> {
        match self {
            VarianceLaw::QuadraticPlusLinear => vec![n * n, n],
            VarianceLaw::PureQuadratic => vec![n * n],
            VarianceLaw::Linear => vec![n],
        }
    }
}

/// Linear least squares of `variance` against `photons`. With `sigma` the
/// covariance is absolute (`1/σ²` weights).
pub fn fit_variance_law(
    photons: &[f64],
    variance: &[f64],
    sigma: Option<&[f64]>,
    law: VarianceLaw,
) -> Result<FitResult> {
    if photons.len() != variance.len() {
        return Err(Error::LengthMismatch(photons.len(), variance.len()));
    }
    let names = law.names();
    if photons.len() <= names.len() {
        return Err(Error::InsufficientData {
            needed: names.len() + 1,
            got: photons.len(),
        });
    }
    let rows: Vec<Vec<f64>> = photons.iter().map(|&n| law.row(n)).collect();
    let w: Option<Vec<f64>> = sigma.map(|s| s.iter().map(|s| 1.0 / (s * s)).collect());
    let weighting = match &w {
        Some(w) => Weighting::Absolute(w),
        None => Weighting::None,
    };
    let fit = linear_least_squares(&rows, variance, weighting)?;
    let p = names.len();
    Ok(FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        parameters: fit.coefficients,
        covariance: (0..p)
            .map(|i| (0..p).map(|j| fit.covariance[(i, j)]).collect())
            .collect(),
        residual_norm: fit.chi_squared.sqrt(),
        chi_squared: fit.chi_squared,
        dof: fit.dof,
        converged: true,
        iterations: 0,
        message: "linear solve".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dephasing {
    /// `γ_φn = γ₂ − γ₁/2 − γ_φ0` (Hz), unclipped.
    pub rate: f64,
    pub std_error: f64,
    /// Set when the extracted rate is below zero.
    pub negative: bool,
}

pub fn extract_dephasing(gamma2: f64, gamma1: f64, gamma_phi0: f64) -> Dephasing {
    extract_dephasing_with_error(gamma2, 0.0, gamma1, 0.0, gamma_phi0, 0.0)
}

/// Uncorrelated propagation: `σ² = σ₂² + σ₁²/4 + σ_φ0²`.
pub fn extract_dephasing_with_error(
    gamma2: f64,
    sigma2: f64,
    gamma1: f64,
    sigma1: f64,
    gamma_phi0: f64,
    sigma_phi0: f64,
) -> Dephasing {
    let rate = gamma2 - 0.5 * gamma1 - gamma_phi0;
    Dephasing {
        rate,
        std_error: (sigma2 * sigma2 + 0.25 * sigma1 * sigma1 + sigma_phi0 * sigma_phi0).sqrt(),
        negative: rate < 0.0,
    }
}

/// Qubit shift `2χ[η n_BE + (1 − η) n_n]` for a thermal source seen through
/// a beam splitter with a noise floor `n_n`.
pub fn stark_model(eta: f64, noise_photons: f64, n_be: f64, chi: f64) -> f64 {
    2.0 * chi * (eta * n_be + (1.0 - eta) * noise_photons)
}

/// Fit `(η, n_n)` to Stark shifts measured against source temperature.
/// Starts from the linear solution in `n_BE`; the covariance comes from a
/// pseudo-inverse, so `η → 1` (where `n_n` is unconstrained) stays finite.
pub fn fit_stark_temperature_sweep(
    temperatures: &[f64],
    shifts: &[f64],
    mode_frequency: f64,
    chi: f64,
    sigma: Option<&[f64]>,
) -> Result<FitResult> {
    let n = temperatures.len();
    if n != shifts.len() {
        return Err(Error::LengthMismatch(n, shifts.len()));
    }
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    if chi == 0.0 {
        return Err(Error::domain("chi", 0.0, "must be nonzero"));
    }
    let mode = ModeSpec::new(mode_frequency)?;
    let n_be: Vec<f64> = temperatures
        .iter()
        .map(|&t| bose_einstein(mode, t))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = n_be.iter().map(|&x| vec![x, 1.0]).collect();
    let lin = linear_least_squares(&rows, shifts, Weighting::None)?;
    let eta0 = lin.coefficients[0] / (2.0 * chi);
    let nn0 = if (1.0 - eta0).abs() > 1e-6 {
        lin.coefficients[1] / (2.0 * chi * (1.0 - eta0))
    } else {
        0.0
    };
    let sw: Vec<f64> = match sigma {
        Some(s) if s.len() != n => return Err(Error::LengthMismatch(s.len(), n)),
        Some(s) => s.iter().map(|s| 1.0 / s).collect(),
        None => vec![1.0; n],
    };
    let resid = |p: &[f64]| {
        let r = DVector::from_fn(n, |i, _| {
            sw[i] * (stark_model(p[0], p[1], n_be[i], chi) - shifts[i])
        });
        let j = DMatrix::from_fn(n, 2, |i, k| {
            sw[i] * 2.0 * chi * if k == 0 { n_be[i] - p[1] } else { 1.0 - p[0] }
        });
        (r, j)
    };
    let out = levenberg_marquardt(resid, &[eta0, nn0], LmOptions::default())?;
    Ok(finish(&["eta", "n_n"], out, sigma.is_some(), &[1.0, 1.0]))
}

//! Planck spectroscopy: chain gain and noise from detected power versus
//! emitter temperature, with and without the parametric amplifier.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::{linear_least_squares, Weighting};
use crate::chains::{compression_power, linear_to_db, LinearChain, Power};
use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{Error, Result};
use crate::random::{chunk_rng, stream};
use crate::states::{bose_einstein, ModeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanckSweep {
    /// `(temperature K, detected power W)`, temperatures strictly increasing.
    pub points: Vec<(f64, f64)>,
    pub mode: ModeSpec<f64>,
    pub bandwidth: f64,
}

impl PlanckSweep {
    pub fn new(points: Vec<(f64, f64)>, mode: ModeSpec<f64>, bandwidth: f64) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Fit(
                "sweep temperatures must be strictly increasing".into(),
            ));
        }
        if let Some(p) = points.iter().find(|p| !(p.0 > 0.0) || !(p.1 > 0.0)) {
            return Err(Error::domain(
                "sweep point",
                p.0,
                "temperatures and powers must be positive",
            ));
        }
        if !(bandwidth > 0.0) {
            return Err(Error::domain("bandwidth", bandwidth, "must be positive"));
        }
        Ok(Self {
            points,
            mode,
            bandwidth,
        })
    }
}

fn photon_energy(mode: &ModeSpec<f64>) -> f64 {
    PLANCK * mode.frequency
}

/// Chain noise in photons, `k_B T_chain / (h f)`.
pub fn chain_photons(mode: &ModeSpec<f64>, noise_temperature: f64) -> f64 {
    BOLTZMANN * noise_temperature / photon_energy(mode)
}

/// `P = G B h f [n(T) + 1/2 + n_chain]`.
pub fn planck_power(chain: &LinearChain<f64>, mode: &ModeSpec<f64>, photons: f64) -> f64 {
    chain.gain
        * chain.bandwidth
        * photon_energy(mode)
        * (photons + 0.5 + chain_photons(mode, chain.noise_temperature))
}

/// Forward model over a temperature list, with optional multiplicative
/// Gaussian power noise of relative size `relative_noise`.
pub fn planck_sweep(
    chain: &LinearChain<f64>,
    mode: ModeSpec<f64>,
    temperatures: &[f64],
    relative_noise: f64,
    seed: u64,
) -> Result<PlanckSweep> {
    let mut rng = chunk_rng(seed, stream::FIT_NOISE, 0);
    let points = temperatures
        .iter()
        .map(|&t| {
            let p = planck_power(chain, &mode, bose_einstein(mode, t)?);
            let eps: f64 = rng.sample(StandardNormal);
            Ok((t, p * (1.0 + relative_noise * eps)))
        })
        .collect::<Result<Vec<_>>>()?;
    PlanckSweep::new(points, mode, chain.bandwidth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanckFit {
    pub chain_gain: f64,
    pub chain_gain_db: f64,
    pub chain_noise_temperature: f64,
    pub chain_noise_photons: f64,
    pub gain_std: f64,
    pub noise_temperature_std: f64,
    /// Relative residuals `(P − model)/model`.
    pub residuals: Vec<f64>,
}

impl PlanckFit {
    pub fn chain(&self, bandwidth: f64) -> Result<LinearChain<f64>> {
        LinearChain::new(self.chain_gain, self.chain_noise_temperature, bandwidth)
    }
}

fn check_span(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: points.len(),
        });
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if !(hi >= 3.0 * lo) {
        return Err(Error::Fit(format!(
            "sweep spans {lo} K to {hi} K; need a factor of at least 3"
        )));
    }
    Ok(())
}

/// Weighted fit of `P = c₁ n(T) + c₂`, `c₁ = G B h f`, `c₂ = c₁ (1/2 + n_chain)`,
/// weights `1/P²` for multiplicative noise.
pub fn planck_fit(sweep: &PlanckSweep) -> Result<PlanckFit> {
    check_span(&sweep.points)?;
    let rows: Vec<Vec<f64>> = sweep
        .points
        .iter()
        .map(|&(t, _)| Ok(vec![bose_einstein(sweep.mode, t)?, 1.0]))
        .collect::<Result<_>>()?;
    let y: Vec<f64> = sweep.points.iter().map(|p| p.1).collect();
    let w: Vec<f64> = y.iter().map(|p| 1.0 / (p * p)).collect();
    let fit = linear_least_squares(&rows, &y, Weighting::Relative(&w))?;
    let (c1, c2) = (fit.coefficients[0], fit.coefficients[1]);
    if !(c1 > 0.0) {
        return Err(Error::Fit(format!("non-positive Planck slope {c1:e}")));
    }
    let hf = photon_energy(&sweep.mode);
    let gain = c1 / (sweep.bandwidth * hf);
    let n_chain = c2 / c1 - 0.5;
    let t_chain = n_chain * hf / BOLTZMANN;
    // d(gain)/dc1; d(T)/dc = (hf/k)(−c2/c1², 1/c1)
    let cov = &fit.covariance;
    let gain_std = cov[(0, 0)].sqrt() / (sweep.bandwidth * hf);
    let j = [-c2 / (c1 * c1), 1.0 / c1];
    let var_n =
        j[0] * j[0] * cov[(0, 0)] + 2.0 * j[0] * j[1] * cov[(0, 1)] + j[1] * j[1] * cov[(1, 1)];
    let residuals = rows
        .iter()
        .zip(&y)
        .map(|(r, p)| {
            let m = c1 * r[0] + c2;
            (p - m) / m
        })
        .collect();
    Ok(PlanckFit {
        chain_gain: gain,
        chain_gain_db: linear_to_db(gain),
        chain_noise_temperature: t_chain,
        chain_noise_photons: n_chain,
        gain_std,
        noise_temperature_std: var_n.max(0.0).sqrt() * hf / BOLTZMANN,
        residuals,
    })
}

/// Soft gain compression driven by the input occupation:
/// the output is scaled by `1 / (1 + (n_in/n_sat)^p)^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    /// Input photons.
    pub saturation_photons: f64,
    pub sharpness: f64,
}

impl Saturation {
    pub fn factor(&self, n_in: f64) -> f64 {
        let x = n_in / self.saturation_photons;
        1.0 / (1.0 + x.powf(self.sharpness)).powf(1.0 / self.sharpness)
    }

    /// Saturation that compresses by exactly 1 dB at input occupation `n_in`.
    pub fn compressing_at(n_in: f64, sharpness: f64) -> Self {
        let x = (10f64.powf(0.1 * sharpness) - 1.0).powf(1.0 / sharpness);
        Self {
            saturation_photons: n_in / x,
            sharpness,
        }
    }
}

/// Amplifier output occupation `G n + (G−1)(n_n + 1)`.
pub fn jpa_output_photons(gain: f64, noise_photons: f64, n_in: f64) -> f64 {
    gain * n_in + (gain - 1.0) * (noise_photons + 1.0)
}

/// Forward model of a sweep with the amplifier on.
#[allow(clippy::too_many_arguments)]
pub fn jpa_sweep(
    chain: &LinearChain<f64>,
    mode: ModeSpec<f64>,
    temperatures: &[f64],
    jpa_gain: f64,
    noise_photons: f64,
    saturation: Option<Saturation>,
    relative_noise: f64,
    seed: u64,
) -> Result<PlanckSweep> {
    let mut rng = chunk_rng(seed, stream::FIT_NOISE, 1);
    let points = temperatures
        .iter()
        .map(|&t| {
            let n_in = bose_einstein(mode, t)?;
            let out = jpa_output_photons(jpa_gain, noise_photons, n_in)
                * saturation.map_or(1.0, |s| s.factor(n_in));
            let eps: f64 = rng.sample(StandardNormal);
            Ok((
                t,
                planck_power(chain, &mode, out) * (1.0 + relative_noise * eps),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    PlanckSweep::new(points, mode, chain.bandwidth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Compression {
    Found { t_1db: f64, power: Power<f64> },
    OutsideRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JpaPlanckFit {
    pub jpa_gain: f64,
    pub jpa_gain_db: f64,
    pub noise_photons: f64,
    pub noise_photons_std: f64,
    pub compression: Compression,
}

/// Fit amplifier gain and added noise on the points at or below
/// `fit_range_max_t`, with the output chain known from a prior [`planck_fit`].
/// The 1 dB point is the first temperature where the photon number falls
/// 1 dB below the fitted line, linearly interpolated.
pub fn jpa_planck_fit(
    sweep: &PlanckSweep,
    fit_range_max_t: f64,
    chain: &LinearChain<f64>,
    kappa_x: f64,
) -> Result<JpaPlanckFit> {
    let last = sweep.points.last().map_or(0.0, |p| p.0);
    if !(last > fit_range_max_t) {
        return Err(Error::Fit(format!(
            "sweep ends at {last} K, not beyond the fit range {fit_range_max_t} K"
        )));
    }
    let scale = chain.gain * chain.bandwidth * photon_energy(&sweep.mode);
    let n_chain = chain_photons(&sweep.mode, chain.noise_temperature);
    let data: Vec<(f64, f64, f64)> = sweep
        .points
        .iter()
        .map(|&(t, p)| Ok((t, bose_einstein(sweep.mode, t)?, p / scale - 0.5 - n_chain)))
        .collect::<Result<_>>()?;
    let low: Vec<&(f64, f64, f64)> = data.iter().filter(|d| d.0 <= fit_range_max_t).collect();
    if low.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: low.len(),
        });
    }
    let rows: Vec<Vec<f64>> = low.iter().map(|d| vec![d.1, 1.0]).collect();
    let y: Vec<f64> = low.iter().map(|d| d.2).collect();
    let w: Vec<f64> = y.iter().map(|v| 1.0 / (v * v)).collect();
    let fit = linear_least_squares(&rows, &y, Weighting::Relative(&w))?;
    let (gain, intercept) = (fit.coefficients[0], fit.coefficients[1]);
    if !(gain > 1.0) {
        return Err(Error::Fit(format!(
            "fitted amplifier gain {gain} is not above unity"
        )));
    }
    let noise = intercept / (gain - 1.0) - 1.0;
    let cov = &fit.covariance;
    let j = [
        -intercept / ((gain - 1.0) * (gain - 1.0)),
        1.0 / (gain - 1.0),
    ];
    let var =
        j[0] * j[0] * cov[(0, 0)] + 2.0 * j[0] * j[1] * cov[(0, 1)] + j[1] * j[1] * cov[(1, 1)];

    let threshold = 10f64.powf(-0.1);
    let ratio = |d: &(f64, f64, f64)| d.2 / (gain * d.1 + intercept);
    let mut compression = Compression::OutsideRange;
    for pair in data.windows(2) {
        let (r0, r1) = (ratio(&pair[0]), ratio(&pair[1]));
        if pair[1].0 > fit_range_max_t && r0 > threshold && r1 <= threshold {
            let t = pair[0].0 + (threshold - r0) / (r1 - r0) * (pair[1].0 - pair[0].0);
            compression = Compression::Found {
                t_1db: t,
                power: compression_power(kappa_x, t)?,
            };
            break;
        }
    }
    Ok(JpaPlanckFit {
        jpa_gain: gain,
        jpa_gain_db: linear_to_db(gain),
        noise_photons: noise,
        noise_photons_std: var.max(0.0).sqrt(),
        compression,
    })
}

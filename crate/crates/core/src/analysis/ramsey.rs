use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use serde::Serialize;

use super::{
    extract_dephasing_with_error, finish, levenberg_marquardt, Dephasing, FitResult, LmOptions,
};
use crate::error::{Error, Result};
use crate::qubit::{
    default_fringe_detuning, default_tau_grid, dephasing_rate, simulate_ramsey, DispersiveSystem,
    EnvelopeForm, RamseyPoint,
};
use crate::states::StateKind;

pub(crate) const NAMES: [&str; 5] = ["amplitude", "frequency", "gamma2", "offset", "phase"];

/// `offset + amplitude·cos(2π f τ + phase)·exp(−2π γ₂ τ)` with parameters in
/// the order `[amplitude, frequency, gamma2, offset, phase]`.
pub fn ramsey_model(p: &[f64; 5], tau: f64) -> f64 {
    let [a, f, g, c, phi] = *p;
    c + a * (TAU * f * tau + phi).cos() * (-TAU * g * tau).exp()
}

fn wrap(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Best linear projection onto `{1, e^{−2πΓt} cos 2πft, e^{−2πΓt} sin 2πft}`.
fn project(t: &[f64], y: &[f64], w: &[f64], f: f64, g: f64) -> Option<(f64, Vector3<f64>)> {
    let mut m = Matrix3::zeros();
    let mut b = Vector3::zeros();
    let basis: Vec<Vector3<f64>> = t
        .iter()
        .map(|&t| {
            let e = (-TAU * g * t).exp();
            let (s, c) = (TAU * f * t).sin_cos();
            Vector3::new(1.0, e * c, e * s)
        })
        .collect();
    for ((v, y), w) in basis.iter().zip(y).zip(w) {
        m += v * v.transpose() * *w;
        b += v * (w * y);
    }
    let x = m.cholesky()?.solve(&b);
    let ssr = basis
        .iter()
        .zip(y)
        .zip(w)
        .map(|((v, y), w)| {
            let d = *y - v.dot(&x);
            w * d * d
        })
        .sum::<f64>();
    Some((ssr, x))
}

fn initial_guess(t: &[f64], y: &[f64], w: &[f64]) -> Result<[f64; 5]> {
    let n = t.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let nyquist = (n - 1) as f64 / 2.0;
    // periodogram peak, in cycles over the normalised span
    let mut best = (0.0, 1.0);
    let mut f = 0.25;
    while f <= nyquist {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, y) in t.iter().zip(y) {
            let (s, c) = (TAU * f * t).sin_cos();
            re += (y - mean) * c;
            im += (y - mean) * s;
        }
        let p = re * re + im * im;
        if p > best.0 {
            best = (p, f);
        }
        f += 0.02;
    }
    let f0 = best.1;
    let mut choice: Option<(f64, f64, f64, Vector3<f64>)> = None;
    for i in 0..=80 {
        let g = 1e-3 * 10f64.powf(i as f64 * 5.0 / 80.0);
        for j in -10..=10 {
            let f = (f0 + 0.03 * j as f64).max(0.05);
            if let Some((ssr, x)) = project(t, y, w, f, g) {
                if choice.as_ref().is_none_or(|c| ssr < c.0) {
                    choice = Some((ssr, f, g, x));
                }
            }
        }
    }
    let (_, f, g, x) =
        choice.ok_or_else(|| Error::Fit("no usable starting point for the Ramsey fit".into()))?;
    let amp = x[1].hypot(x[2]);
    let phi = (-x[2]).atan2(x[1]);
    Ok([amp, f, g, x[0], phi])
}

/// Fit a Ramsey fringe. With `sigma`, residuals are weighted by `1/σ²` and
/// the covariance is absolute; otherwise it is scaled by the residual variance.
pub fn fit_ramsey(tau: &[f64], p_e: &[f64], sigma: Option<&[f64]>) -> Result<FitResult> {
    let n = tau.len();
    if n != p_e.len() {
        return Err(Error::LengthMismatch(n, p_e.len()));
    }
    if n < 8 {
        return Err(Error::InsufficientData { needed: 8, got: n });
    }
    if let Some(s) = sigma {
        if s.len() != n {
            return Err(Error::LengthMismatch(s.len(), n));
        }
        if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Fit("sigma must be positive and finite".into()));
        }
    }
    let span = tau.iter().copied().fold(0.0, f64::max);
    if !(span > 0.0) || tau.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Fit(
            "delays must be finite, non-negative and not all zero".into(),
        ));
    }
    let t: Vec<f64> = tau.iter().map(|x| x / span).collect();
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; n],
    };
    let sw: Vec<f64> = w.iter().map(|w| w.sqrt()).collect();
    let p0 = initial_guess(&t, p_e, &w)?;
    let resid = |p: &[f64]| {
        let r = DVector::from_fn(n, |i, _| {
            sw[i] * (ramsey_model(&[p[0], p[1], p[2], p[3], p[4]], t[i]) - p_e[i])
        });
        let jac = DMatrix::from_fn(n, 5, |i, k| {
            let e = (-TAU * p[2] * t[i]).exp();
            let (s, c) = (TAU * p[1] * t[i] + p[4]).sin_cos();
            sw[i]
                * match k {
                    0 => c * e,
                    1 => -p[0] * s * e * TAU * t[i],
                    2 => -p[0] * c * e * TAU * t[i],
                    3 => 1.0,
                    _ => -p[0] * s * e,
                }
        });
        (r, jac)
    };
    let out = levenberg_marquardt(resid, &p0, LmOptions::default())?;
    let mut fit = finish(
        &NAMES,
        out,
        sigma.is_some(),
        &[1.0, 1.0 / span, 1.0 / span, 1.0, 1.0],
    );
    if fit.parameters[0] < 0.0 {
        fit.parameters[0] = -fit.parameters[0];
        fit.parameters[4] += PI;
        for (i, row) in fit.covariance.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if (i == 0) != (j == 0) {
                    *v = -*v;
                }
            }
        }
    }
    fit.parameters[4] = wrap(fit.parameters[4]);
    Ok(fit)
}

/// One simulated Ramsey measurement reduced to a dephasing rate.
#[derive(Debug, Clone, Serialize)]
pub struct RamseyDephasing {
    pub kind: StateKind,
    pub n_r: f64,
    pub gamma2: f64,
    pub gamma2_std: f64,
    pub dephasing: Dephasing,
    /// Model rate the trace was generated from.
    pub expected: f64,
    pub fit: FitResult,
    pub fringe_detuning: f64,
    pub trace: Vec<RamseyPoint<f64>>,
}

/// Simulate a binomial Ramsey trace on the default grid, fit it with
/// `sqrt(p(1−p)/shots)` errors from the observed probabilities, and subtract
/// the known relaxation and bare dephasing.
#[allow(clippy::too_many_arguments)]
pub fn ramsey_dephasing(
    sys: &DispersiveSystem<f64>,
    kind: StateKind,
    n_r: f64,
    points: usize,
    shots: u64,
    seed: u64,
    form: EnvelopeForm,
) -> Result<RamseyDephasing> {
    let tau = default_tau_grid(sys, kind, n_r, points);
    let fringe = default_fringe_detuning(&tau);
    let trace = simulate_ramsey(sys, kind, n_r, &tau, fringe, shots, seed, form)?;
    let y: Vec<f64> = trace.iter().map(|p| p.p_e).collect();
    let floor = 1.0 / shots as f64;
    let sigma: Vec<f64> = y
        .iter()
        .map(|p| (p * (1.0 - p)).max(floor) / shots as f64)
        .map(f64::sqrt)
        .collect();
    let fit = fit_ramsey(&tau, &y, Some(&sigma))?;
    if !fit.converged {
        return Err(Error::Fit(format!(
            "Ramsey fit at n_r = {n_r}: {}",
            fit.message
        )));
    }
    let gamma2 = fit.parameters[2];
    let gamma2_std = fit.covariance[2][2].max(0.0).sqrt();
    let gamma1 = sys.qubit.relaxation_rate(kind, n_r);
    let dephasing = extract_dephasing_with_error(
        gamma2,
        gamma2_std,
        gamma1,
        0.0,
        sys.qubit.intrinsic_dephasing,
        0.0,
    );
    Ok(RamseyDephasing {
        kind,
        n_r,
        gamma2,
        gamma2_std,
        dephasing,
        expected: dephasing_rate(kind, n_r, sys),
        fit,
        fringe_detuning: fringe,
        trace,
    })
}

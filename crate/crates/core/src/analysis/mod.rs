//! Fitting layer: damped Gauss–Newton for nonlinear models, scaled normal
//! equations for models linear in their parameters.

mod laws;
mod ramsey;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub use crate::chains::fano_factor;
pub use laws::{
    extract_dephasing, extract_dephasing_with_error, fit_stark_temperature_sweep, fit_variance_law,
    stark_model, Dephasing, VarianceLaw,
};
pub use ramsey::{fit_ramsey, ramsey_dephasing, ramsey_model, RamseyDephasing};

/// How residuals are weighted and how the covariance is scaled.
#[derive(Debug, Clone, Copy)]
pub enum Weighting<'a> {
    /// Unit weights; covariance scaled by the residual variance.
    None,
    /// Weights known up to a common factor; covariance scaled by the
    /// weighted residual variance.
    Relative(&'a [f64]),
    /// Inverse variances; covariance `(JᵀWJ)⁻¹`.
    Absolute(&'a [f64]),
}

impl Weighting<'_> {
    fn weights(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Weighting::None => Ok(vec![1.0; n]),
            Weighting::Relative(w) | Weighting::Absolute(w) => {
                if w.len() != n {
                    return Err(Error::LengthMismatch(w.len(), n));
                }
                if w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                    return Err(Error::Fit("weights must be positive and finite".into()));
                }
                Ok(w.to_vec())
            }
        }
    }

    fn is_absolute(&self) -> bool {
        matches!(self, Weighting::Absolute(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub parameters: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// `sqrt(Σ w r²)`.
    pub residual_norm: f64,
    pub chi_squared: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    pub message: String,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.parameters[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name)
            .map(|i| self.covariance[i][i].max(0.0).sqrt())
    }

    pub fn correlation(&self) -> Vec<Vec<f64>> {
        let n = self.parameters.len();
        let sd: Vec<f64> = (0..n)
            .map(|i| self.covariance[i][i].max(0.0).sqrt())
            .collect();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = sd[i] * sd[j];
                        if d > 0.0 {
                            self.covariance[i][j] / d
                        } else if i == j {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// `{parameters, standard_errors, correlation, residual_norm, converged, iterations}`.
    pub fn to_json(&self) -> serde_json::Value {
        let params: serde_json::Map<String, serde_json::Value> = self
            .names
            .iter()
            .zip(&self.parameters)
            .map(|(n, v)| (n.clone(), serde_json::json!(v)))
            .collect();
        let errors: serde_json::Map<String, serde_json::Value> = self
            .names
            .iter()
            .map(|n| {
                (
                    n.clone(),
                    serde_json::json!(self.std_error(n).unwrap_or(f64::NAN)),
                )
            })
            .collect();
        serde_json::json!({
            "parameters": params,
            "standard_errors": errors,
            "correlation": self.correlation(),
            "residual_norm": self.residual_norm,
            "chi_squared": self.chi_squared,
            "dof": self.dof,
            "converged": self.converged,
            "iterations": self.iterations,
        })
    }
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Moore–Penrose inverse of a symmetric matrix, dropping singular values
/// below `1e-12` of the largest.
fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = smax * 1e-12;
    let inv = svd
        .singular_values
        .map(|s| if s > cut { 1.0 / s } else { 0.0 });
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    vt.transpose() * DMatrix::from_diagonal(&inv) * u.transpose()
}

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub chi_squared: f64,
    pub dof: usize,
}

/// Weighted linear least squares `y ≈ rows · c` via normal equations on a
/// column-scaled design.
pub fn linear_least_squares(
    rows: &[Vec<f64>],
    y: &[f64],
    weighting: Weighting<'_>,
) -> Result<LinearFit> {
    let n = rows.len();
    if n != y.len() {
        return Err(Error::LengthMismatch(n, y.len()));
    }
    let p = rows.first().map_or(0, |r| r.len());
    if p == 0 || n < p {
        return Err(Error::InsufficientData {
            needed: p.max(1),
            got: n,
        });
    }
    let w = weighting.weights(n)?;
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let a = DMatrix::from_fn(n, p, |i, j| rows[i][j] * sw[i]);
    let b = DVector::from_fn(n, |i, _| y[i] * sw[i]);
    let scale: Vec<f64> = (0..p).map(|j| a.column(j).norm()).collect();
    if let Some(j) = scale.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::RankDeficient(format!("design column {j} is zero")));
    }
    let a_s = DMatrix::from_fn(n, p, |i, j| a[(i, j)] / scale[j]);
    let normal = a_s.transpose() * &a_s;
    let eig = normal.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > hi * 1e-13) {
        return Err(Error::RankDeficient(format!(
            "scaled normal matrix condition {:.3e}",
            hi / lo.max(f64::MIN_POSITIVE)
        )));
    }
    let chol = normal
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("normal matrix not positive definite".into()))?;
    let x_s = chol.solve(&(a_s.transpose() * &b));
    let coefficients: Vec<f64> = (0..p).map(|j| x_s[j] / scale[j]).collect();
    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            y[i] - rows[i]
                .iter()
                .zip(&coefficients)
                .map(|(r, c)| r * c)
                .sum::<f64>()
        })
        .collect();
    let chi_squared: f64 = residuals.iter().zip(&w).map(|(r, w)| w * r * r).sum();
    let dof = n - p;
    let inv_s = chol.inverse();
    let mut covariance = DMatrix::from_fn(p, p, |i, j| inv_s[(i, j)] / (scale[i] * scale[j]));
    if !weighting.is_absolute() {
        let s2 = if dof > 0 {
            chi_squared / dof as f64
        } else {
            0.0
        };
        covariance *= s2;
    }
    Ok(LinearFit {
        coefficients,
        covariance,
        residuals,
        chi_squared,
        dof,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative step tolerance per parameter.
    pub step_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub parameters: Vec<f64>,
    pub residuals: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub message: String,
}

/// Levenberg–Marquardt on weighted residuals `r(p)` with Jacobian `J(p)`.
pub fn levenberg_marquardt<F>(f: F, p0: &[f64], options: LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let np = p0.len();
    let mut p = p0.to_vec();
    let (mut r, mut j) = f(&p);
    if r.len() < np {
        return Err(Error::InsufficientData {
            needed: np,
            got: r.len(),
        });
    }
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::Fit(
            "non-finite residuals at the initial guess".into(),
        ));
    }
    let jtj = j.transpose() * &j;
    let mut lambda = 1e-3 * jtj.diagonal().max().max(f64::MIN_POSITIVE);
    let mut converged = false;
    let mut message = String::from("iteration limit reached");
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        if g.amax() <= 1e-15 * (1.0 + cost) {
            converged = true;
            message = "gradient vanished".into();
            break;
        }
        let diag = jtj.diagonal().map(|d| d.max(1e-300));
        let mut stepped = false;
        while lambda < 1e32 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * diag[k];
            }
            let delta = match a.cholesky() {
                Some(c) => c.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            let (r_new, j_new) = f(&trial);
            let cost_new = r_new.norm_squared();
            if cost_new.is_finite() && cost_new <= cost {
                let small = p.iter().zip(delta.iter()).all(|(x, d)| {
                    d.abs() <= options.step_tolerance * (x.abs() + options.step_tolerance)
                });
                let flat = cost - cost_new <= 1e-15 * cost;
                p = trial;
                r = r_new;
                j = j_new;
                cost = cost_new;
                lambda = (lambda / 10.0).max(1e-20);
                stepped = true;
                if small || flat {
                    converged = true;
                    message = if small {
                        "step below tolerance"
                    } else {
                        "cost stationary"
                    }
                    .into();
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !stepped {
            // No downhill step at any damping: a numerical minimum if the
            // gradient is negligible relative to the cost scale.
            let gtol = 1e-8 * (cost.sqrt() + 1e-300) * j.norm();
            converged = g.norm() <= gtol;
            message = if converged {
                "no further descent; gradient negligible".into()
            } else {
                "damping diverged without descent".into()
            };
            break;
        }
    }
    Ok(LmOutcome {
        parameters: p,
        residuals: r,
        jacobian: j,
        iterations,
        converged,
        message,
    })
}

/// Assemble a [`FitResult`] from an LM outcome; `absolute` selects
/// `(JᵀWJ)⁻¹` versus residual-variance scaling.
pub(crate) fn finish(names: &[&str], out: LmOutcome, absolute: bool, scale: &[f64]) -> FitResult {
    let n = out.residuals.len();
    let np = out.parameters.len();
    let chi2 = out.residuals.norm_squared();
    let dof = n.saturating_sub(np);
    let mut cov = pseudo_inverse(&(out.jacobian.transpose() * &out.jacobian));
    if !absolute {
        cov *= if dof > 0 { chi2 / dof as f64 } else { 0.0 };
    }
    let cov = DMatrix::from_fn(np, np, |i, j| cov[(i, j)] * scale[i] * scale[j]);
    FitResult {
        names: names.iter().map(|s| s.to_string()).collect(),
        parameters: out
            .parameters
            .iter()
            .zip(scale)
            .map(|(p, s)| p * s)
            .collect(),
        covariance: to_rows(&cov),
        residual_norm: chi2.sqrt(),
        chi_squared: chi2,
        dof,
        converged: out.converged,
        iterations: out.iterations,
        message: out.message,
    }
}

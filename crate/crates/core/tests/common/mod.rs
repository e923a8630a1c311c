//! Independent Fock-basis oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use photostat::states::{moment_indices, MomentOrdering};
use photostat::MomentSet;

pub const THERMAL_TRUNCATION: usize = 60;
pub const TWO_MODE_TRUNCATION: usize = 80;

fn annihilation(dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Truncated thermal density matrix with Boltzmann weights `(n/(n+1))^k`.
pub fn thermal_density(n: f64, cutoff: usize) -> DMatrix<Complex64> {
    let dim = cutoff + 1;
    let r = n / (n + 1.0);
    let w: Vec<f64> = (0..dim).map(|k| r.powi(k as i32)).collect();
    let z: f64 = w.iter().sum();
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(w[i] / z, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Truncated, renormalised coherent projector `|α><α|`.
pub fn coherent_density(alpha: Complex64, cutoff: usize) -> DMatrix<Complex64> {
    let dim = cutoff + 1;
    let mut c = vec![Complex64::new(1.0, 0.0); dim];
    for k in 1..dim {
        c[k] = c[k - 1] * alpha / (k as f64).sqrt();
    }
    let norm: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    DMatrix::from_fn(dim, dim, |i, j| c[i] * c[j].conj() / norm)
}

/// `Tr[ρ (a†)^p a^q]` for all `p + q <= 4`, by explicit matrix products.
pub fn fock_normal_moments(rho: &DMatrix<Complex64>) -> MomentSet {
    let dim = rho.nrows();
    let a = annihilation(dim);
    let ad = a.adjoint();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let pow = |m: &DMatrix<Complex64>, k: usize| (0..k).fold(id.clone(), |acc, _| acc * m);
    let mut set = MomentSet::empty(MomentOrdering::Normal);
    for (p, q) in moment_indices() {
        let op = pow(&ad, p) * pow(&a, q);
        set.insert(p, q, (rho * op).trace());
    }
    set
}

type TwoModeKet = BTreeMap<(usize, usize), f64>;

fn apply(ket: &TwoModeKet, mode: usize, create: bool) -> TwoModeKet {
    let mut out = TwoModeKet::new();
    for (&(j, k), &amp) in ket {
        let occ = if mode == 0 { j } else { k };
        let (new_occ, factor) = if create {
            (occ + 1, ((occ + 1) as f64).sqrt())
        } else if occ == 0 {
            continue;
        } else {
            (occ - 1, (occ as f64).sqrt())
        };
        let key = if mode == 0 {
            (new_occ, k)
        } else {
            (j, new_occ)
        };
        *out.entry(key).or_insert(0.0) += amp * factor;
    }
    out
}

fn axpy(acc: &mut TwoModeKet, scale: f64, ket: &TwoModeKet) {
    for (k, v) in ket {
        *acc.entry(*k).or_insert(0.0) += scale * v;
    }
}

/// Mean and variance of `b†b` with `b = √G a + √(G−1) c†`, signal and idler
/// in thermal states, evaluated in the product Fock basis.
pub fn amplifier_fock(gain: f64, n_signal: f64, n_idler: f64, cutoff: usize) -> (f64, f64) {
    let dim = cutoff + 1;
    let weights = |n: f64| -> Vec<f64> {
        let r = n / (n + 1.0);
        let w: Vec<f64> = (0..dim).map(|k| r.powi(k as i32)).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    };
    let (ps, pi) = (weights(n_signal), weights(n_idler));
    let (sg, sgm) = (gain.sqrt(), (gain - 1.0).sqrt());
    // b|ψ> and b†b|ψ> built from ladder actions
    let b = |ket: &TwoModeKet| {
        let mut out = TwoModeKet::new();
        axpy(&mut out, sg, &apply(ket, 0, false));
        axpy(&mut out, sgm, &apply(ket, 1, true));
        out
    };
    let bdag = |ket: &TwoModeKet| {
        let mut out = TwoModeKet::new();
        axpy(&mut out, sg, &apply(ket, 0, true));
        axpy(&mut out, sgm, &apply(ket, 1, false));
        out
    };
    let (mut mean, mut second) = (0.0, 0.0);
    for (j, &pj) in ps.iter().enumerate().take(dim) {
        if pj < 1e-300 {
            continue;
        }
        for (k, &pk) in pi.iter().enumerate().take(dim) {
            let w = pj * pk;
            if w < 1e-300 {
                continue;
            }
            let ket: TwoModeKet = [((j, k), 1.0)].into_iter().collect();
            let nb = bdag(&b(&ket));
            mean += w * nb.get(&(j, k)).copied().unwrap_or(0.0);
            second += w * nb.values().map(|v| v * v).sum::<f64>();
        }
    }
    (mean, second - mean * mean)
}

/// Relative difference guarded for zero references.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

//! Dual-path detection: a hybrid ring splits the signal, two independent
//! chains amplify it, and cross-path moments recover the signal moments
//! with the chain noise cancelled.

pub mod io;
pub mod planck;

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::detection;
use crate::error::{Error, Result};
use crate::random::{self, stream, CHUNK};
use crate::scalar::Real;
use crate::states::{
    moment_indices, ordering_convert, sample_envelopes_on, MicrowaveState, MomentOrdering,
    MomentSet, MAX_ORDER,
};
use crate::stats::{batch_mean_error, CompensatedSum};

pub use planck::{
    jpa_planck_fit, jpa_sweep, planck_fit, planck_power, planck_sweep, Compression, JpaPlanckFit,
    PlanckFit, PlanckSweep, Saturation,
};

/// Number of batches used for statistical error bars.
pub const BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord<T> {
    pub envelopes_1: Vec<Complex<T>>,
    pub envelopes_2: Vec<Complex<T>>,
    pub chain_gains: (T, T),
    /// Hz, metadata only.
    pub if_frequency: T,
    pub seed: u64,
}

impl<T: Real> DetectionRecord<T> {
    pub fn new(
        envelopes_1: Vec<Complex<T>>,
        envelopes_2: Vec<Complex<T>>,
        chain_gains: (T, T),
        if_frequency: T,
        seed: u64,
    ) -> Result<Self> {
        if envelopes_1.len() != envelopes_2.len() {
            return Err(Error::LengthMismatch(envelopes_1.len(), envelopes_2.len()));
        }
        if envelopes_1.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: envelopes_1.len(),
            });
        }
        Ok(Self {
            envelopes_1,
            envelopes_2,
            chain_gains,
            if_frequency,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.envelopes_1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envelopes_1.is_empty()
    }
}

/// Envelopes of the two detection paths.
pub type PathPair<T> = (Vec<Complex<T>>, Vec<Complex<T>>);

/// 50:50 hybrid: `((s+v)/√2, (s−v)/√2)`.
pub fn hybrid_split<T: Real>(signal: &[Complex<T>], vacuum: &[Complex<T>]) -> Result<PathPair<T>> {
    if signal.len() != vacuum.len() {
        return Err(Error::LengthMismatch(signal.len(), vacuum.len()));
    }
    let r = T::FRAC_1_SQRT_2();
    Ok(signal
        .iter()
        .zip(vacuum)
        .map(|(s, v)| ((s + v) * r, (s - v) * r))
        .unzip())
}

/// Detector configuration beyond the signal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionSetup<T> {
    /// Input-referred noise photons of each chain, `<|ξ|²> = n_chain`.
    pub chain_noise_photons: (T, T),
    pub gains: (T, T),
    /// Thermal occupation of the hybrid's fourth port; zero by default.
    pub vacuum_port_photons: T,
    pub if_frequency: T,
}

impl<T: Real> DetectionSetup<T> {
    pub fn new(chain_noise_photons: (T, T), gains: (T, T)) -> Self {
        Self {
            chain_noise_photons,
            gains,
            vacuum_port_photons: T::zero(),
            if_frequency: T::c(detection::IF_FREQUENCY),
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("chain_noise_photons", self.chain_noise_photons.0),
            ("chain_noise_photons", self.chain_noise_photons.1),
            ("vacuum_port_photons", self.vacuum_port_photons),
        ] {
            if !(v >= T::zero()) {
                return Err(Error::domain(name, v.as_f64(), "must be >= 0"));
            }
        }
        for g in [self.gains.0, self.gains.1] {
            if !(g > T::zero()) {
                return Err(Error::domain("gain", g.as_f64(), "must be positive"));
            }
        }
        Ok(())
    }
}

pub fn simulate_detection<T: Real>(
    state: &MicrowaveState<T>,
    chain_noise_photons: (T, T),
    gains: (T, T),
    n: usize,
    seed: u64,
) -> Result<DetectionRecord<T>> {
    simulate_detection_with(
        state,
        &DetectionSetup::new(chain_noise_photons, gains),
        n,
        seed,
    )
}

/// Envelope-level record: signal and fourth-port samples are split on the
/// hybrid, each path gets independent circular chain noise of
/// `n_chain/2` per quadrature and is scaled by `sqrt(gain)`.
pub fn simulate_detection_with<T: Real>(
    state: &MicrowaveState<T>,
    setup: &DetectionSetup<T>,
    n: usize,
    seed: u64,
) -> Result<DetectionRecord<T>> {
    setup.validate()?;
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let signal = sample_envelopes_on(state, n, seed, stream::SIGNAL);
    let port = MicrowaveState::thermal(setup.vacuum_port_photons)?;
    let vacuum = sample_envelopes_on(&port, n, seed, stream::VACUUM_PORT);
    let (o1, o2) = hybrid_split(&signal, &vacuum)?;
    let path = |out: Vec<Complex<T>>, noise: T, gain: T, tag: u64| -> Vec<Complex<T>> {
        let sigma = (noise.as_f64() / 2.0).sqrt();
        let xi: Vec<(f64, f64)> = random::generate(n, seed, tag, |rng| {
            (rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let amp = gain.sqrt();
        out.into_iter()
            .zip(xi)
            .map(|(o, (a, b))| (o + Complex::new(T::c(sigma * a), T::c(sigma * b))) * amp)
            .collect()
    };
    let z1 = path(
        o1,
        setup.chain_noise_photons.0,
        setup.gains.0,
        stream::CHAIN_1,
    );
    let z2 = path(
        o2,
        setup.chain_noise_photons.1,
        setup.gains.1,
        stream::CHAIN_2,
    );
    DetectionRecord::new(z1, z2, setup.gains, setup.if_frequency, seed)
}

/// `<I₁ⁿ I₂ᵐ Q₁ᵏ Q₂ˡ>` for `n+m+k+l <= 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossMomentSet<T> {
    pub entries: BTreeMap<(usize, usize, usize, usize), T>,
    pub samples: usize,
}

/// All `(n, m, k, l)` with total order at most 4 (70 of them).
pub fn cross_indices() -> Vec<(usize, usize, usize, usize)> {
    let mut v = Vec::with_capacity(70);
    for n in 0..=MAX_ORDER {
        for m in 0..=MAX_ORDER - n {
            for k in 0..=MAX_ORDER - n - m {
                for l in 0..=MAX_ORDER - n - m - k {
                    v.push((n, m, k, l));
                }
            }
        }
    }
    v
}

impl<T: Real> CrossMomentSet<T> {
    pub fn get(&self, key: (usize, usize, usize, usize)) -> Option<T> {
        self.entries.get(&key).copied()
    }

    pub fn missing(&self) -> Vec<String> {
        cross_indices()
            .into_iter()
            .filter(|k| !self.entries.contains_key(k))
            .map(|(n, m, k, l)| format!("{n},{m},{k},{l}"))
            .collect()
    }
}

fn accumulate<T: Real>(
    z1: &[Complex<T>],
    z2: &[Complex<T>],
    keys: &[(usize, usize, usize, usize)],
) -> Vec<CompensatedSum<T>> {
    let parts: Vec<Vec<CompensatedSum<T>>> = z1
        .par_chunks(CHUNK)
        .zip(z2.par_chunks(CHUNK))
        .map(|(a, b)| {
            let mut acc = vec![CompensatedSum::default(); keys.len()];
            for (x, y) in a.iter().zip(b) {
                let mut p = [[T::one(); MAX_ORDER + 1]; 4];
                for j in 1..=MAX_ORDER {
                    p[0][j] = p[0][j - 1] * x.re;
                    p[1][j] = p[1][j - 1] * y.re;
                    p[2][j] = p[2][j - 1] * x.im;
                    p[3][j] = p[3][j - 1] * y.im;
                }
                for (s, &(n, m, k, l)) in acc.iter_mut().zip(keys) {
                    s.add(p[0][n] * p[1][m] * p[2][k] * p[3][l]);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![CompensatedSum::default(); keys.len()];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

fn cross_moments_of<T: Real>(z1: &[Complex<T>], z2: &[Complex<T>]) -> CrossMomentSet<T> {
    let keys = cross_indices();
    let sums = accumulate(z1, z2, &keys);
    let count = T::c(z1.len() as f64);
    CrossMomentSet {
        entries: keys
            .into_iter()
            .zip(sums)
            .map(|(k, s)| (k, s.value() / count))
            .collect(),
        samples: z1.len(),
    }
}

pub fn cross_moments<T: Real>(rec: &DetectionRecord<T>) -> CrossMomentSet<T> {
    cross_moments_of(&rec.envelopes_1, &rec.envelopes_2)
}

/// Cross moments of `batches` contiguous, near-equal slices of the record.
pub fn cross_moments_batched<T: Real>(
    rec: &DetectionRecord<T>,
    batches: usize,
) -> Result<Vec<CrossMomentSet<T>>> {
    let n = rec.len();
    if batches == 0 || n < 2 * batches {
        return Err(Error::InsufficientData {
            needed: 2 * batches.max(1),
            got: n,
        });
    }
    Ok((0..batches)
        .map(|b| {
            let lo = b * n / batches;
            let hi = (b + 1) * n / batches;
            cross_moments_of(&rec.envelopes_1[lo..hi], &rec.envelopes_2[lo..hi])
        })
        .collect())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Noise-free path moment `E[y₁^a conj(y₂)^d]` with `y = z/sqrt(g)`,
/// assembled from the real cross moments.
fn path_moment<T: Real>(
    cm: &CrossMomentSet<T>,
    gains: (T, T),
    a: usize,
    d: usize,
) -> Result<Complex<T>> {
    let i = Complex::new(T::zero(), T::one());
    let mut acc = Complex::new(T::zero(), T::zero());
    for p in 0..=a {
        for q in 0..=d {
            let key = (a - p, d - q, p, q);
            let v = cm.get(key).ok_or_else(|| Error::IncompleteMoments {
                missing: vec![format!("{},{},{},{}", key.0, key.1, key.2, key.3)],
            })?;
            let phase = i.powi(p as i32) * (-i).powi(q as i32);
            acc = acc + phase * T::c(binomial(a, p) * binomial(d, q)) * v;
        }
    }
    let scale = gains.0.powf(T::c(a as f64 / 2.0)) * gains.1.powf(T::c(d as f64 / 2.0));
    Ok(acc / scale)
}

/// Signal moments from cross-path moments, normally ordered and referred to
/// the hybrid input.
pub fn reconstruct_signal_moments<T: Real>(
    cm: &CrossMomentSet<T>,
    gains: (T, T),
) -> Result<MomentSet<T>> {
    reconstruct_with_port(cm, gains, T::zero())
}

/// As [`reconstruct_signal_moments`] with a thermal fourth-port occupation.
///
/// Only products `y₁^a conj(y₂)^d` enter; circular chain noise averages out of
/// them exactly. Expanding `y₁ = (s+v)/√2`, `conj(y₂) = (s̄−v̄)/√2` gives
/// `2^{(a+d)/2} M(a,d) = Σ_k C(a,k) C(d,k) (−1)^k k! σ^k W(d−k, a−k)` with
/// `σ = n_port + 1/2` and `W` the symmetrized signal moments, which is solved
/// order by order.
pub fn reconstruct_with_port<T: Real>(
    cm: &CrossMomentSet<T>,
    gains: (T, T),
    port_photons: T,
) -> Result<MomentSet<T>> {
    if !(gains.0 > T::zero() && gains.1 > T::zero()) {
        return Err(Error::Singular("chain gains must be positive"));
    }
    let missing = cm.missing();
    if !missing.is_empty() {
        return Err(Error::IncompleteMoments { missing });
    }
    let sigma = port_photons.as_f64() + 0.5;
    let mut w = MomentSet::empty(MomentOrdering::Symmetrized);
    let mut order: Vec<(usize, usize)> = moment_indices().collect();
    order.sort_by_key(|&(n, m)| n + m);
    for (d, a) in order {
        let mut v = path_moment(cm, gains, a, d)? * T::c(2f64.powf((a + d) as f64 / 2.0));
        for k in 1..=a.min(d) {
            let c = binomial(a, k) * binomial(d, k) * factorial(k) * (-sigma).powi(k as i32);
            v = v - w.entry(d - k, a - k)? * T::c(c);
        }
        w.insert(d, a, v);
    }
    ordering_convert(&w, MomentOrdering::Normal)
}

/// Per-batch reconstructions with batch statistics of derived quantities.
#[derive(Debug, Clone)]
pub struct BatchedMoments<T> {
    pub mean: MomentSet<T>,
    pub batches: Vec<MomentSet<T>>,
}

impl<T: Real> BatchedMoments<T> {
    /// Mean and standard error of `f` across batches.
    pub fn statistic(&self, f: impl Fn(&MomentSet<T>) -> f64) -> (f64, f64) {
        let v: Vec<f64> = self.batches.iter().map(f).collect();
        batch_mean_error(&v)
    }

    pub fn mean_photons(&self) -> (f64, f64) {
        self.statistic(|m| m.get(1, 1).map_or(f64::NAN, |e| e.re.as_f64()))
    }

    /// `<(a†)² a²>`.
    pub fn g2(&self) -> (f64, f64) {
        self.statistic(|m| m.get(2, 2).map_or(f64::NAN, |e| e.re.as_f64()))
    }
}

pub fn reconstruct_batched<T: Real>(
    rec: &DetectionRecord<T>,
    batches: usize,
) -> Result<BatchedMoments<T>> {
    let sets = cross_moments_batched(rec, batches)?;
    let recon: Vec<MomentSet<T>> = sets
        .iter()
        .map(|cm| reconstruct_signal_moments(cm, rec.chain_gains))
        .collect::<Result<_>>()?;
    let mean = reconstruct_signal_moments(&cross_moments(rec), rec.chain_gains)?;
    Ok(BatchedMoments {
        mean,
        batches: recon,
    })
}

/// `(Var p, Var q)` with `q = (a† + a)/2`, `p = i(a† − a)/2`, from normally
/// ordered moments.
pub fn quadrature_variances<T: Real>(m: &MomentSet<T>) -> Result<(T, T)> {
    if m.ordering != MomentOrdering::Normal {
        return Err(Error::Ordering { expected: "normal" });
    }
    let four = T::c(4.0);
    let e20 = m.entry(2, 0)?;
    let e02 = m.entry(0, 2)?;
    let e11 = m.entry(1, 1)?.re;
    let mean = m.entry(0, 1)?;
    let sum = (e20 + e02).re;
    let var_q = (sum + T::two() * e11 + T::one()) / four - mean.re * mean.re;
    let var_p = (-sum + T::two() * e11 + T::one()) / four - mean.im * mean.im;
    Ok((var_p, var_q))
}

/// 1/e contour radius of a circular Gaussian Wigner function, `sqrt(n + 1/2)`.
pub fn wigner_gaussian_contour<T: Real>(n: T) -> Result<T> {
    if !(n >= T::zero()) {
        return Err(Error::domain("n", n.as_f64(), "must be >= 0"));
    }
    Ok((n + T::half()).sqrt())
}

//! Single-mode microwave field states: occupation, photon statistics,
//! normally ordered moments and Wigner-distributed envelope samples.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PLANCK_OVER_BOLTZMANN;
use crate::error::{Error, Result};
use crate::random::{self, CHUNK};
use crate::scalar::Real;
use crate::stats::CompensatedSum;

/// Highest total order `n + m` carried by a [`MomentSet`].
pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec<T> {
    /// Ordinary frequency in Hz.
    pub frequency: T,
}

impl<T: Real> ModeSpec<T> {
    pub fn new(frequency: T) -> Result<Self> {
        if !(frequency > T::zero()) || !frequency.is_finite() {
            return Err(Error::domain(
                "frequency",
                frequency.as_f64(),
                "must be positive",
            ));
        }
        Ok(Self { frequency })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Thermal,
    Coherent,
    ShotNoise,
    Vacuum,
}

impl StateKind {
    pub const ALL: [StateKind; 4] = [
        StateKind::Thermal,
        StateKind::Coherent,
        StateKind::ShotNoise,
        StateKind::Vacuum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StateKind::Thermal => "thermal",
            StateKind::Coherent => "coherent",
            StateKind::ShotNoise => "shot_noise",
            StateKind::Vacuum => "vacuum",
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrowaveState<T> {
    pub kind: StateKind,
    pub mean_photons: T,
    /// Complex amplitude; zero unless `kind` is coherent.
    pub amplitude: Complex<T>,
}

impl<T: Real> MicrowaveState<T> {
    /// Validating constructor for states read from external input.
    pub fn new(kind: StateKind, mean_photons: T, amplitude: Complex<T>) -> Result<Self> {
        if !(mean_photons >= T::zero()) || !mean_photons.is_finite() {
            return Err(Error::domain(
                "mean_photons",
                mean_photons.as_f64(),
                "must be >= 0",
            ));
        }
        match kind {
            StateKind::Vacuum if mean_photons != T::zero() => Err(Error::domain(
                "mean_photons",
                mean_photons.as_f64(),
                "vacuum has zero photons",
            )),
            StateKind::Coherent => {
                let tol = T::c(1e-12).max(T::epsilon() * T::c(8.0));
                if (amplitude.norm_sqr() - mean_photons).abs() > tol * T::one().max(mean_photons) {
                    return Err(Error::domain(
                        "amplitude",
                        amplitude.norm().as_f64(),
                        "|amplitude|^2 must equal mean_photons",
                    ));
                }
                Ok(Self {
                    kind,
                    mean_photons,
                    amplitude,
                })
            }
            _ => Ok(Self {
                kind,
                mean_photons,
                amplitude: Complex::new(T::zero(), T::zero()),
            }),
        }
    }

    pub fn thermal(n: T) -> Result<Self> {
        Self::new(StateKind::Thermal, n, Complex::new(T::zero(), T::zero()))
    }

    pub fn shot_noise(n: T) -> Result<Self> {
        Self::new(StateKind::ShotNoise, n, Complex::new(T::zero(), T::zero()))
    }

    pub fn coherent(alpha: Complex<T>) -> Self {
        Self {
            kind: StateKind::Coherent,
            mean_photons: alpha.norm_sqr(),
            amplitude: alpha,
        }
    }

    pub fn vacuum() -> Self {
        Self {
            kind: StateKind::Vacuum,
            mean_photons: T::zero(),
            amplitude: Complex::new(T::zero(), T::zero()),
        }
    }

    /// Same kind, given mean photon number. Coherent states keep their phase.
    pub fn with_photons(kind: StateKind, n: T) -> Result<Self> {
        match kind {
            StateKind::Coherent => {
                if !(n >= T::zero()) {
                    return Err(Error::domain("mean_photons", n.as_f64(), "must be >= 0"));
                }
                Ok(Self::coherent(Complex::new(n.sqrt(), T::zero())))
            }
            StateKind::Vacuum => Ok(Self::vacuum()),
            _ => Self::new(kind, n, Complex::new(T::zero(), T::zero())),
        }
    }
}

/// Mean Bose–Einstein occupation of a mode at temperature `temperature` (K).
pub fn bose_einstein<T: Real>(mode: ModeSpec<T>, temperature: T) -> Result<T> {
    if !(temperature > T::zero()) {
        return Err(Error::domain(
            "temperature",
            temperature.as_f64(),
            "must be positive",
        ));
    }
    if !(mode.frequency > T::zero()) {
        return Err(Error::domain(
            "frequency",
            mode.frequency.as_f64(),
            "must be positive",
        ));
    }
    let x = T::c(PLANCK_OVER_BOLTZMANN) * mode.frequency / temperature;
    Ok(T::one() / x.exp_m1())
}

/// Inverse of [`bose_einstein`].
pub fn effective_temperature<T: Real>(mode: ModeSpec<T>, n: T) -> Result<T> {
    if !(n > T::zero()) {
        return Err(Error::domain("n", n.as_f64(), "must be positive"));
    }
    if !(mode.frequency > T::zero()) {
        return Err(Error::domain(
            "frequency",
            mode.frequency.as_f64(),
            "must be positive",
        ));
    }
    Ok(T::c(PLANCK_OVER_BOLTZMANN) * mode.frequency / (T::one() / n).ln_1p())
}

/// Photon-number variance. `classical_limit` gives the n² reference curve.
pub fn photon_variance<T: Real>(state: &MicrowaveState<T>, classical_limit: bool) -> T {
    let n = state.mean_photons;
    if classical_limit {
        return n * n;
    }
    match state.kind {
        StateKind::Thermal => n * n + n,
        StateKind::Coherent | StateKind::ShotNoise => n,
        StateKind::Vacuum => T::zero(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentOrdering {
    Normal,
    Symmetrized,
}

/// Moments `<(a†)^n a^m>` for `n + m <= 4` under one operator ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet<T> {
    pub ordering: MomentOrdering,
    entries: BTreeMap<(usize, usize), Complex<T>>,
}

/// All `(n, m)` with `n + m <= MAX_ORDER`, in lexicographic order.
pub fn moment_indices() -> impl Iterator<Item = (usize, usize)> {
    (0..=MAX_ORDER).flat_map(|n| (0..=MAX_ORDER - n).map(move |m| (n, m)))
}

impl<T: Real> MomentSet<T> {
    pub fn empty(ordering: MomentOrdering) -> Self {
        Self {
            ordering,
            entries: BTreeMap::new(),
        }
    }

    /// All entries zero except `(0,0) = 1`.
    pub fn unit(ordering: MomentOrdering) -> Self {
        let mut s = Self::empty(ordering);
        for (n, m) in moment_indices() {
            s.insert(n, m, Complex::new(T::zero(), T::zero()));
        }
        s.insert(0, 0, Complex::new(T::one(), T::zero()));
        s
    }

    pub fn insert(&mut self, n: usize, m: usize, value: Complex<T>) {
        assert!(
            n + m <= MAX_ORDER,
            "moment order {} exceeds {MAX_ORDER}",
            n + m
        );
        self.entries.insert((n, m), value);
    }

    pub fn get(&self, n: usize, m: usize) -> Option<Complex<T>> {
        self.entries.get(&(n, m)).copied()
    }

    /// Entry that must be present.
    pub fn entry(&self, n: usize, m: usize) -> Result<Complex<T>> {
        self.get(n, m).ok_or_else(|| Error::IncompleteMoments {
            missing: vec![format!("{n},{m}")],
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), Complex<T>)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn missing(&self) -> Vec<String> {
        moment_indices()
            .filter(|k| !self.entries.contains_key(k))
            .map(|(n, m)| format!("{n},{m}"))
            .collect()
    }

    pub fn require_complete(&self) -> Result<()> {
        let missing = self.missing();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::IncompleteMoments { missing })
        }
    }

    /// `<n>` read from the (1,1) entry, converting from symmetrized if needed.
    pub fn mean_photons(&self) -> Result<T> {
        let e = self.entry(1, 1)?.re;
        Ok(match self.ordering {
            MomentOrdering::Normal => e,
            MomentOrdering::Symmetrized => e - T::half(),
        })
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> MomentSet<U> {
        MomentSet {
            ordering: self.ordering,
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (*k, Complex::new(f(v.re), f(v.im))))
                .collect(),
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        0.0
    } else {
        factorial(n) / (factorial(k) * factorial(n - k))
    }
}

/// Normally ordered moments of the state.
pub fn analytic_moments<T: Real>(state: &MicrowaveState<T>) -> MomentSet<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut set = MomentSet::empty(MomentOrdering::Normal);
    let n = state.mean_photons;
    for (i, j) in moment_indices() {
        let value = match state.kind {
            StateKind::Thermal if i == j => {
                Complex::new(T::c(factorial(i)) * n.powi(i as i32), T::zero())
            }
            // Phase-averaged Poissonian field: factorial moments n^k.
            StateKind::ShotNoise if i == j => Complex::new(n.powi(i as i32), T::zero()),
            StateKind::Coherent => {
                state.amplitude.conj().powi(i as i32) * state.amplitude.powi(j as i32)
            }
            StateKind::Vacuum if i == 0 && j == 0 => Complex::new(T::one(), T::zero()),
            _ => zero,
        };
        set.insert(i, j, value);
    }
    set
}

/// Exact map between normal and symmetrized ordering up to fourth order.
///
/// `sym(n,m) = Σ_k k! C(n,k) C(m,k) (1/2)^k normal(n-k, m-k)`; the inverse
/// uses `(-1/2)^k`.
pub fn ordering_convert<T: Real>(m: &MomentSet<T>, target: MomentOrdering) -> Result<MomentSet<T>> {
    m.require_complete()?;
    if m.ordering == target {
        return Ok(m.clone());
    }
    let step: f64 = match target {
        MomentOrdering::Symmetrized => 0.5,
        MomentOrdering::Normal => -0.5,
    };
    let mut out = MomentSet::empty(target);
    for (n, k) in moment_indices() {
        let mut acc = Complex::new(T::zero(), T::zero());
        for j in 0..=n.min(k) {
            let w = factorial(j) * binomial(n, j) * binomial(k, j) * step.powi(j as i32);
            acc = acc + m.entry(n - j, k - j)? * T::c(w);
        }
        out.insert(n, k, acc);
    }
    Ok(out)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Draw `count` Wigner samples of the field envelope on the signal stream.
pub fn sample_envelopes<T: Real>(
    state: &MicrowaveState<T>,
    count: usize,
    seed: u64,
) -> Vec<Complex<T>> {
    sample_envelopes_on(state, count, seed, random::stream::SIGNAL)
}

/// As [`sample_envelopes`], on an explicit stream tag.
///
/// Thermal and vacuum samples are circular Gaussians with per-quadrature
/// variance `(2n+1)/4`. Coherent samples add vacuum noise to the amplitude.
/// Shot-noise samples carry amplitude `sqrt(n)` with a fresh uniform phase
/// per sample plus vacuum noise, so `<(a†)^2 a^2> = n^2`.
pub fn sample_envelopes_on<T: Real>(
    state: &MicrowaveState<T>,
    count: usize,
    seed: u64,
    stream: u64,
) -> Vec<Complex<T>> {
    let n = state.mean_photons.as_f64();
    let kind = state.kind;
    let alpha = Complex::new(state.amplitude.re.as_f64(), state.amplitude.im.as_f64());
    let sigma = match kind {
        StateKind::Thermal => ((2.0 * n + 1.0) / 4.0).sqrt(),
        _ => 0.5,
    };
    random::generate(count, seed, stream, move |rng| {
        let noise = Complex::new(sigma * gaussian(rng), sigma * gaussian(rng));
        let z = match kind {
            StateKind::Coherent => alpha + noise,
            StateKind::ShotNoise => {
                let phi = rng.random::<f64>() * std::f64::consts::TAU;
                Complex::from_polar(n.sqrt(), phi) + noise
            }
            _ => noise,
        };
        Complex::new(T::c(z.re), T::c(z.im))
    })
}

/// Symmetrized moments `<conj(z)^n z^m>` averaged over the samples.
pub fn empirical_moments<T: Real>(samples: &[Complex<T>]) -> Result<MomentSet<T>> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    let keys: Vec<(usize, usize)> = moment_indices().collect();
    let partial: Vec<Vec<(CompensatedSum<T>, CompensatedSum<T>)>> = samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![(CompensatedSum::default(), CompensatedSum::default()); keys.len()];
            for z in chunk {
                let mut zc = [Complex::new(T::one(), T::zero()); MAX_ORDER + 1];
                let mut zp = zc;
                for p in 1..=MAX_ORDER {
                    zc[p] = zc[p - 1] * z.conj();
                    zp[p] = zp[p - 1] * z;
                }
                for (slot, &(n, m)) in acc.iter_mut().zip(&keys) {
                    let v = zc[n] * zp[m];
                    slot.0.add(v.re);
                    slot.1.add(v.im);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![(CompensatedSum::default(), CompensatedSum::default()); keys.len()];
    for part in &partial {
        for (t, p) in total.iter_mut().zip(part) {
            t.0.merge(&p.0);
            t.1.merge(&p.1);
        }
    }
    let count = T::c(samples.len() as f64);
    let mut set = MomentSet::empty(MomentOrdering::Symmetrized);
    for (&(n, m), (re, im)) in keys.iter().zip(total) {
        set.insert(n, m, Complex::new(re.value() / count, im.value() / count));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mode() -> ModeSpec<f64> {
        ModeSpec::new(6.07e9).unwrap()
    }

    #[test]
    fn occupation_at_unit_exponent() {
        // hf/kT = 1.0001 at 0.2914 K; independent evaluation via the SI constants
        let x: f64 = 6.626_070_15e-34 * 6.07e9 / (1.380_649e-23 * 0.2914);
        let oracle = 1.0 / (x.exp() - 1.0);
        let n = bose_einstein(mode(), 0.2914).unwrap();
        assert_relative_eq!(n, oracle, max_relative = 1e-12);
        assert!((n - 0.582).abs() < 5e-4);
    }

    #[test]
    fn occupation_vanishes_when_cold() {
        assert!(bose_einstein(mode(), 1e-3).unwrap() < 1e-100);
    }

    #[test]
    fn background_temperatures() {
        let t = effective_temperature(mode(), 0.15).unwrap();
        assert!((t - 0.143).abs() < 1e-3, "{t}");
        // 0.159 K at 6.07 GHz; quoted as roughly 150 mK
        let t = effective_temperature(mode(), 0.19).unwrap();
        assert!((t - 0.15).abs() < 0.01, "{t}");
    }

    #[test]
    fn round_trip_temperature() {
        for n in [0.05, 0.5, 1.5] {
            let t = effective_temperature(mode(), n).unwrap();
            assert_relative_eq!(bose_einstein(mode(), t).unwrap(), n, max_relative = 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bose_einstein(mode(), 0.0).is_err());
        assert!(bose_einstein(mode(), -1.0).is_err());
        assert!(effective_temperature(mode(), 0.0).is_err());
        assert!(ModeSpec::new(0.0).is_err());
        assert!(MicrowaveState::thermal(-0.1).is_err());
        assert!(MicrowaveState::new(StateKind::Vacuum, 0.2, Complex::new(0.0, 0.0)).is_err());
        assert!(MicrowaveState::new(StateKind::Coherent, 2.0, Complex::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn variances() {
        let th = MicrowaveState::thermal(1.0).unwrap();
        assert_eq!(photon_variance(&th, false), 2.0);
        let coh = MicrowaveState::coherent(Complex::new(1.0, 0.0));
        assert_eq!(photon_variance(&coh, false), 1.0);
        let th = MicrowaveState::thermal(0.5).unwrap();
        assert_eq!(photon_variance(&th, true), 0.25);
        assert_eq!(
            photon_variance(&MicrowaveState::<f64>::vacuum(), false),
            0.0
        );
    }

    #[test]
    fn analytic_examples() {
        let th = analytic_moments(&MicrowaveState::thermal(1.0).unwrap());
        assert_eq!(th.get(2, 2).unwrap().re, 2.0);
        assert_eq!(th.get(2, 0).unwrap(), Complex::new(0.0, 0.0));
        let coh = analytic_moments(&MicrowaveState::coherent(Complex::new(1.0, 0.0)));
        assert_eq!(coh.get(2, 2).unwrap().re, 1.0);
        let vac = analytic_moments(&MicrowaveState::<f64>::vacuum());
        assert_eq!(vac.get(1, 1).unwrap().re, 0.0);
        assert_eq!(vac.get(0, 0).unwrap().re, 1.0);
        let shot = analytic_moments(&MicrowaveState::shot_noise(0.7).unwrap());
        assert_relative_eq!(shot.get(2, 2).unwrap().re, 0.49);
        assert_eq!(shot.get(1, 0).unwrap().norm(), 0.0);
    }

    #[test]
    fn ordering_examples() {
        let vac = analytic_moments(&MicrowaveState::<f64>::vacuum());
        let s = ordering_convert(&vac, MomentOrdering::Symmetrized).unwrap();
        assert_eq!(s.get(1, 1).unwrap().re, 0.5);
        // vacuum |z|^4 for an exponential |z|^2 with mean 1/2
        assert_eq!(s.get(2, 2).unwrap().re, 0.5);
        let th = analytic_moments(&MicrowaveState::thermal(0.8).unwrap());
        let s = ordering_convert(&th, MomentOrdering::Symmetrized).unwrap();
        assert_relative_eq!(s.get(1, 1).unwrap().re, 1.3);
        assert_relative_eq!(s.mean_photons().unwrap(), 0.8);
    }

    #[test]
    fn incomplete_set_names_missing_entries() {
        let mut m = MomentSet::<f64>::empty(MomentOrdering::Normal);
        m.insert(0, 0, Complex::new(1.0, 0.0));
        match ordering_convert(&m, MomentOrdering::Symmetrized) {
            Err(Error::IncompleteMoments { missing }) => {
                assert_eq!(missing.len(), 14);
                assert!(missing.contains(&"2,2".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn index_count() {
        assert_eq!(moment_indices().count(), 15);
    }

    #[test]
    fn empirical_constant_sequence() {
        let m = empirical_moments(&[Complex::new(1.0, 0.0); 4]).unwrap();
        assert_eq!(m.get(1, 1).unwrap().re, 1.0);
        assert_eq!(m.ordering, MomentOrdering::Symmetrized);
        assert!(empirical_moments(&[Complex::new(1.0f64, 0.0)]).is_err());
    }

    #[test]
    fn samples_are_seeded() {
        let st = MicrowaveState::thermal(0.4).unwrap();
        assert_eq!(sample_envelopes(&st, 100, 9), sample_envelopes(&st, 100, 9));
        assert_ne!(
            sample_envelopes(&st, 100, 9),
            sample_envelopes(&st, 100, 10)
        );
        assert!(sample_envelopes(&st, 0, 9).is_empty());
    }

    #[test]
    fn single_precision_sampling() {
        let st = MicrowaveState::<f32>::thermal(1.0).unwrap();
        let z = sample_envelopes(&st, 200_000, 3);
        let m = empirical_moments(&z).unwrap();
        assert!((m.get(1, 1).unwrap().re - 1.5).abs() < 0.02);
    }
}

//! Record and moment file formats.
//!
//! Binary records are little-endian f64 quadruples `(I1, Q1, I2, Q2)` with a
//! JSON sidecar. CSV records carry the header `index,I1,Q1,I2,Q2`. Moment
//! tables are JSON objects mapping `"n,m"` (or `"n,m,k,l"`) to `[re, im]`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{CrossMomentSet, DetectionRecord};
use crate::constants::detection;
use crate::error::{Error, Result};
use crate::states::{MomentOrdering, MomentSet, MAX_ORDER};

pub const CSV_HEADER: &str = "index,I1,Q1,I2,Q2";
pub const BINARY_LAYOUT: &str = "f64le:I1,Q1,I2,Q2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordSidecar {
    pub layout: String,
    pub samples: usize,
    pub gains: [f64; 2],
    pub if_frequency_hz: f64,
    pub seed: u64,
}

impl RecordSidecar {
    pub fn of(rec: &DetectionRecord<f64>) -> Self {
        Self {
            layout: BINARY_LAYOUT.to_string(),
            samples: rec.len(),
            gains: [rec.chain_gains.0, rec.chain_gains.1],
            if_frequency_hz: rec.if_frequency,
            seed: rec.seed,
        }
    }
}

/// Write `data` and its sidecar `sidecar` (JSON).
pub fn write_record_binary(rec: &DetectionRecord<f64>, data: &Path, sidecar: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(data)?);
    for (a, b) in rec.envelopes_1.iter().zip(&rec.envelopes_2) {
        for v in [a.re, a.im, b.re, b.im] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    fs::write(
        sidecar,
        serde_json::to_string_pretty(&RecordSidecar::of(rec))? + "\n",
    )?;
    Ok(())
}

pub fn read_record_binary(data: &Path, sidecar: &Path) -> Result<DetectionRecord<f64>> {
    let meta: RecordSidecar = serde_json::from_str(&fs::read_to_string(sidecar)?)?;
    if meta.layout != BINARY_LAYOUT {
        return Err(Error::Record(format!("unknown layout {:?}", meta.layout)));
    }
    let mut bytes = Vec::new();
    BufReader::new(fs::File::open(data)?).read_to_end(&mut bytes)?;
    if bytes.len() != meta.samples * 32 {
        return Err(Error::Record(format!(
            "sidecar announces {} samples but data holds {} bytes",
            meta.samples,
            bytes.len()
        )));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let (z1, z2) = vals
        .chunks_exact(4)
        .map(|q| (Complex::new(q[0], q[1]), Complex::new(q[2], q[3])))
        .unzip();
    DetectionRecord::new(
        z1,
        z2,
        (meta.gains[0], meta.gains[1]),
        meta.if_frequency_hz,
        meta.seed,
    )
}

pub fn write_record_csv(rec: &DetectionRecord<f64>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for (i, (a, b)) in rec.envelopes_1.iter().zip(&rec.envelopes_2).enumerate() {
        writeln!(w, "{i},{},{},{},{}", a.re, a.im, b.re, b.im)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV carries no metadata: gains default to unity, IF to 11 MHz.
pub fn read_record_csv(path: &Path, gains: (f64, f64), seed: u64) -> Result<DetectionRecord<f64>> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(Error::Record(format!(
            "expected header {CSV_HEADER:?}, found {header:?}"
        )));
    }
    let mut z1 = Vec::new();
    let mut z2 = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Record(format!("line {}: {e}", line_no + 2)))?;
        if f.len() != 4 {
            return Err(Error::Record(format!(
                "line {}: expected 5 columns",
                line_no + 2
            )));
        }
        z1.push(Complex::new(f[0], f[1]));
        z2.push(Complex::new(f[2], f[3]));
    }
    DetectionRecord::new(z1, z2, gains, detection::IF_FREQUENCY, seed)
}

pub fn moments_to_json(m: &MomentSet<f64>) -> serde_json::Value {
    let map: BTreeMap<String, [f64; 2]> = m
        .iter()
        .map(|((n, k), v)| (format!("{n},{k}"), [v.re, v.im]))
        .collect();
    serde_json::to_value(map).expect("string-keyed map serializes")
}

fn parse_key(key: &str, arity: usize) -> Result<Vec<usize>> {
    let idx: Vec<usize> = key
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Record(format!("bad moment key {key:?}")))?;
    if idx.len() != arity || idx.iter().sum::<usize>() > MAX_ORDER {
        return Err(Error::Record(format!("bad moment key {key:?}")));
    }
    Ok(idx)
}

/// The ordering is not stored in the file and must be supplied.
pub fn moments_from_json(
    value: &serde_json::Value,
    ordering: MomentOrdering,
) -> Result<MomentSet<f64>> {
    let map: BTreeMap<String, [f64; 2]> = serde_json::from_value(value.clone())?;
    let mut m = MomentSet::empty(ordering);
    for (k, v) in map {
        let i = parse_key(&k, 2)?;
        m.insert(i[0], i[1], Complex::new(v[0], v[1]));
    }
    Ok(m)
}

pub fn cross_moments_to_json(cm: &CrossMomentSet<f64>) -> serde_json::Value {
    let map: BTreeMap<String, [f64; 2]> = cm
        .entries
        .iter()
        .map(|((n, m, k, l), v)| (format!("{n},{m},{k},{l}"), [*v, 0.0]))
        .collect();
    serde_json::to_value(map).expect("string-keyed map serializes")
}

pub fn cross_moments_from_json(
    value: &serde_json::Value,
    samples: usize,
) -> Result<CrossMomentSet<f64>> {
    let map: BTreeMap<String, [f64; 2]> = serde_json::from_value(value.clone())?;
    let mut entries = BTreeMap::new();
    for (k, v) in map {
        let i = parse_key(&k, 4)?;
        entries.insert((i[0], i[1], i[2], i[3]), v[0]);
    }
    Ok(CrossMomentSet { entries, samples })
}

/// Real IF samples `I cos(ω t) − Q sin(ω t)` for both paths.
pub fn if_waveform(rec: &DetectionRecord<f64>, sample_rate: f64) -> (Vec<f64>, Vec<f64>) {
    let w = std::f64::consts::TAU * rec.if_frequency / sample_rate;
    let mix = |z: &[Complex<f64>]| -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, v)| {
                let (s, c) = (w * i as f64).sin_cos();
                v.re * c - v.im * s
            })
            .collect()
    };
    (mix(&rec.envelopes_1), mix(&rec.envelopes_2))
}

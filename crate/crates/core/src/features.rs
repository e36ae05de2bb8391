//! Lag-product features.
//!
//! `w[k] = s[k] conj(s[k-1])`. With the received signal centered at 0:
//!
//! * `f1` = sample mean of `Re(w)`, i.e. of `Im(w)` after a `pi/2` shift,
//! * `f2` = sample variance of `Im(w)`,
//! * `f3` = sample variance of `Re(w)`, i.e. of `Im(w)` after a `pi/2` shift.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::Modulation;

/// Lag-one product of a sequence. `w[i]` pairs samples `i+1` and `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagProduct {
    pub w: Vec<Complex64>,
}

impl LagProduct {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

pub fn lag_product(s: &[Complex64]) -> Result<LagProduct> {
    if s.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: s.len() });
    }
    let w = s.windows(2).map(|p| p[1] * p[0].conj()).collect();
    Ok(LagProduct { w })
}

/// `out[k] = s[k] exp(i phi k)`.
pub fn shift_center(s: &[Complex64], phi: f64) -> Vec<Complex64> {
    if phi == 0.0 {
        return s.to_vec();
    }
    s.iter().enumerate().map(|(k, &x)| x * Complex64::from_polar(1.0, phi * k as f64)).collect()
}

/// Sample mean and unbiased sample variance.
pub fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = xs.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    let mean = sum / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = xs.map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1) as f64)
}

/// The three feature values of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl Features {
    pub fn as_array(&self) -> [f64; 3] {
        [self.f1, self.f2, self.f3]
    }
}

/// Features of a realization whose spectrum is centered at 0.
pub fn extract_features(s0: &[Complex64]) -> Result<Features> {
    let w = lag_product(s0)?.w;
    let (f1, f3) = mean_var(w.iter().map(|c| c.re));
    let (_, f2) = mean_var(w.iter().map(|c| c.im));
    let f = Features { f1, f2, f3 };
    if !f.as_array().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("features"));
    }
    Ok(f)
}

/// One labeled dataset row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub label: u8,
    pub modulation: Modulation,
    pub snr_db: f64,
    pub seed: u64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl FeatureVector {
    pub fn new(features: Features, modulation: Modulation, snr_db: f64, seed: u64) -> Self {
        FeatureVector {
            label: modulation.label(),
            modulation,
            snr_db,
            seed,
            f1: features.f1,
            f2: features.f2,
            f3: features.f3,
        }
    }

    pub fn x(&self) -> [f64; 3] {
        [self.f1, self.f2, self.f3]
    }
}

pub const CSV_HEADER: [&str; 7] = ["label", "modulation", "snr_db", "seed", "f1", "f2", "f3"];

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(rows: &[FeatureVector], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.label.to_string(),
            r.modulation.name().to_string(),
            fmt_real(r.snr_db),
            r.seed.to_string(),
            fmt_real(r.f1),
            fmt_real(r.f2),
            fmt_real(r.f3),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<FeatureVector>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Format(format!(
            "unexpected feature CSV header: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: FeatureVector = rec?;
        if row.label != row.modulation.label() {
            return Err(Error::Format(format!("label {} does not match modulation {}", row.label, row.modulation)));
        }
        rows.push(row);
    }
    Ok(rows)
}

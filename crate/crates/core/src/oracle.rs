//! Closed-form per-sample mean and variance of `Im(w[k])` for noiseless,
//! fading-free signals.
//!
//! Sample indices here are indices into the clean modulator output, so the
//! delay is just the fractional part `eps0`. `w[k]` pairs samples `k` and
//! `k-1`; `delta_prime` is the carrier offset seen by the lag product.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{sample_overlap, LinearKind, LinearScheme, RrcPulse, SymbolTiming};

/// Clamp threshold for closed-form variances that come out slightly negative.
pub const NEGATIVE_VARIANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstellationMoments {
    /// `E[a^2]`
    pub m2: f64,
    /// `E[a^4]`
    pub m4: f64,
}

pub fn constellation_moments(scheme: &LinearScheme) -> ConstellationMoments {
    let n = scheme.constellation.len() as f64;
    let m2 = scheme.constellation.iter().map(|c| c.norm_sqr()).sum::<f64>() / n;
    let m4 = scheme.constellation.iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>() / n;
    ConstellationMoments { m2, m4 }
}

/// Pulse products at one sample index, with `P_n = p((k - eps0)/T - n)` and
/// `Pm_n = p((k - 1 - eps0)/T - n)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseCorrSums {
    /// `sum P_n Pm_n`
    pub s_pp: f64,
    /// `sum P_n^2`
    pub s_p2: f64,
    /// `sum Pm_n^2`
    pub s_pm2: f64,
    /// `sum (P_n Pm_n)^2`
    pub s_sq: f64,
}

pub fn pulse_corr_sums(pulse: &RrcPulse, timing: &SymbolTiming, k: i64) -> PulseCorrSums {
    let period = timing.symbol_period();
    let span = pulse.span_symbols as f64;
    let u = (k as f64 - timing.eps0) / period;
    let um = (k as f64 - 1.0 - timing.eps0) / period;
    let lo = (um - span).ceil() as i64;
    let hi = (u + span).floor() as i64;
    let mut sums = PulseCorrSums::default();
    for n in lo..=hi {
        let p = pulse.eval(u - n as f64);
        let pm = pulse.eval(um - n as f64);
        sums.s_pp += p * pm;
        sums.s_p2 += p * p;
        sums.s_pm2 += pm * pm;
        sums.s_sq += (p * pm).powi(2);
    }
    sums
}

/// Mean of `Im(w[k])` for any of the four linear schemes.
pub fn mean_im_linear(delta_prime: f64, sums: &PulseCorrSums, moments: &ConstellationMoments) -> f64 {
    delta_prime.sin() * sums.s_pp * moments.m2
}

fn clamp_variance(v: f64) -> Result<f64> {
    if v < -NEGATIVE_VARIANCE_TOLERANCE || !v.is_finite() {
        Err(Error::NegativeVariance(v))
    } else {
        Ok(v.max(0.0))
    }
}

/// Variance of `Im(w[k])` for BPSK.
pub fn var_im_bpsk(delta_prime: f64, sums: &PulseCorrSums) -> Result<f64> {
    let s = delta_prime.sin();
    clamp_variance(s * s * (sums.s_pp.powi(2) + sums.s_p2 * sums.s_pm2 - 2.0 * sums.s_sq))
}

/// Variance of `Im(w[k])` for constellations invariant to a quarter turn
/// (4-PSK, 8-PSK, 16-QAM).
pub fn var_im_qampsk(delta_prime: f64, sums: &PulseCorrSums, moments: &ConstellationMoments) -> Result<f64> {
    let s2 = delta_prime.sin().powi(2);
    let m2sq = moments.m2 * moments.m2;
    let rotating = (moments.m4 - 2.0 * m2sq) * sums.s_sq + m2sq * sums.s_pp.powi(2);
    let quadrature = 0.5 * m2sq * (sums.s_p2 * sums.s_pm2 - sums.s_pp.powi(2));
    clamp_variance(s2 * rotating + quadrature)
}

/// `Q_m[k]`: integral of a rectangular frequency pulse of height
/// `tone_increment` per sample over `(k-1-eps0, k-eps0]`, restricted to
/// symbol `m`.
pub fn q_integral(m: i64, k: i64, timing: &SymbolTiming, tone_increment: f64) -> f64 {
    let (n, a, b) = sample_overlap(k, timing);
    if m == n {
        tone_increment * a
    } else if m == n + 1 {
        tone_increment * b
    } else {
        0.0
    }
}

/// All nonzero `Q_m[k]` at sample `k` (one or two symbols).
pub fn bfsk_q_values(k: i64, timing: &SymbolTiming, tone_increment: f64) -> Vec<f64> {
    let (n, _, b) = sample_overlap(k, timing);
    let mut q = vec![q_integral(n, k, timing, tone_increment)];
    if b > 0.0 {
        q.push(q_integral(n + 1, k, timing, tone_increment));
    }
    q
}

pub fn mean_im_bfsk(delta_prime: f64, q: &[f64]) -> f64 {
    delta_prime.sin() * q.iter().map(|x| x.cos()).product::<f64>()
}

pub fn var_im_bfsk(delta_prime: f64, q: &[f64]) -> f64 {
    let c2: f64 = q.iter().map(|x| (2.0 * x).cos()).product();
    let csq: f64 = q.iter().map(|x| x.cos().powi(2)).product();
    0.5 - 0.5 * c2 + delta_prime.sin().powi(2) * (c2 - csq)
}

/// Signal family for which closed forms exist.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSignal {
    Linear {
        kind: LinearKind,
        moments: ConstellationMoments,
        pulse: RrcPulse,
    },
    /// BFSK with per-sample tone deviation `+-tone_increment`.
    Bfsk {
        tone_increment: f64,
    },
}

impl OracleSignal {
    pub fn linear(kind: LinearKind, pulse: RrcPulse) -> Self {
        OracleSignal::Linear { kind, moments: constellation_moments(&LinearScheme::new(kind)), pulse }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OracleSignal::Linear { kind, .. } => match kind {
                LinearKind::Bpsk => "BPSK",
                LinearKind::Psk4 => "4PSK",
                LinearKind::Psk8 => "8PSK",
                LinearKind::Qam16 => "16QAM",
            },
            OracleSignal::Bfsk { .. } => "BFSK",
        }
    }
}

/// Closed-form `(mean, variance)` of `Im(w[k])`.
pub fn per_sample_stats(signal: &OracleSignal, timing: &SymbolTiming, delta_prime: f64, k: i64) -> Result<(f64, f64)> {
    match signal {
        OracleSignal::Linear { kind, moments, pulse } => {
            let sums = pulse_corr_sums(pulse, timing, k);
            let mean = mean_im_linear(delta_prime, &sums, moments);
            let var = match kind {
                LinearKind::Bpsk => var_im_bpsk(delta_prime, &sums)?,
                _ => var_im_qampsk(delta_prime, &sums, moments)?,
            };
            Ok((mean, var))
        }
        OracleSignal::Bfsk { tone_increment } => {
            let q = bfsk_q_values(k, timing, *tone_increment);
            Ok((mean_im_bfsk(delta_prime, &q), var_im_bfsk(delta_prime, &q)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Expected sample mean of `Im(w)` over the realization.
    Mean,
    /// Expected sample variance of `Im(w)` over the realization.
    Variance,
}

/// Predict a per-realization statistic from the per-sample closed forms by
/// averaging over `ks` with uniform weight. The variance prediction is
/// `mean_k(var_k) + var_k(mean_k)`.
pub fn time_average_prediction(
    signal: &OracleSignal,
    quantity: Quantity,
    timing: &SymbolTiming,
    delta_prime: f64,
    ks: Range<i64>,
) -> Result<f64> {
    if ks.is_empty() {
        return Err(Error::InvalidArgument("empty sample range".into()));
    }
    let stats = ks.map(|k| per_sample_stats(signal, timing, delta_prime, k)).collect::<Result<Vec<_>>>()?;
    let n = stats.len() as f64;
    let mean_of_means = stats.iter().map(|s| s.0).sum::<f64>() / n;
    Ok(match quantity {
        Quantity::Mean => mean_of_means,
        Quantity::Variance => {
            let mean_var = stats.iter().map(|s| s.1).sum::<f64>() / n;
            let spread = stats.iter().map(|s| (s.0 - mean_of_means).powi(2)).sum::<f64>() / n;
            mean_var + spread
        }
    })
}

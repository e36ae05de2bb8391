//! Clean transmitted waveforms.
//!
//! Linear schemes (BPSK, 4-PSK, 8-PSK, 16-QAM) are shaped with a truncated
//! root-raised-cosine pulse. CPFSK uses a rectangular frequency pulse, so the
//! phase is piecewise linear and continuous across symbol boundaries.
//!
//! Time runs in samples. The symbol period is `Ns + eps` samples and symbol
//! `n` starts at sample time `n * (Ns + eps)`. Sample `k` is taken at sample
//! time `k - eps0`; the integer part `k0` of the delay is applied by the
//! channel, not here.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default RRC truncation half-width in symbol periods.
pub const DEFAULT_SPAN_SYMBOLS: usize = 8;

/// The seven modulations in the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "4PSK")]
    Psk4,
    #[serde(rename = "8PSK")]
    Psk8,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "BFSK")]
    Bfsk,
    #[serde(rename = "4FSK")]
    Fsk4,
    #[serde(rename = "8FSK")]
    Fsk8,
}

impl Modulation {
    pub const ALL: [Modulation; 7] = [
        Modulation::Bfsk,
        Modulation::Fsk4,
        Modulation::Fsk8,
        Modulation::Bpsk,
        Modulation::Psk4,
        Modulation::Psk8,
        Modulation::Qam16,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Psk4 => "4PSK",
            Modulation::Psk8 => "8PSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Bfsk => "BFSK",
            Modulation::Fsk4 => "4FSK",
            Modulation::Fsk8 => "8FSK",
        }
    }

    /// Stable numeric id, used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            Modulation::Bfsk => 0,
            Modulation::Fsk4 => 1,
            Modulation::Fsk8 => 2,
            Modulation::Bpsk => 3,
            Modulation::Psk4 => 4,
            Modulation::Psk8 => 5,
            Modulation::Qam16 => 6,
        }
    }

    pub fn is_cpfsk(self) -> bool {
        self.cpfsk_order().is_some()
    }

    /// Binary class: 1 for CPFSK, 0 for linear modulations.
    pub fn label(self) -> u8 {
        u8::from(self.is_cpfsk())
    }

    pub fn cpfsk_order(self) -> Option<usize> {
        match self {
            Modulation::Bfsk => Some(2),
            Modulation::Fsk4 => Some(4),
            Modulation::Fsk8 => Some(8),
            _ => None,
        }
    }

    pub fn linear_kind(self) -> Option<LinearKind> {
        match self {
            Modulation::Bpsk => Some(LinearKind::Bpsk),
            Modulation::Psk4 => Some(LinearKind::Psk4),
            Modulation::Psk8 => Some(LinearKind::Psk8),
            Modulation::Qam16 => Some(LinearKind::Qam16),
            _ => None,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_uppercase();
        match norm.as_str() {
            "BPSK" | "2PSK" => Ok(Modulation::Bpsk),
            "4PSK" | "QPSK" | "PSK4" => Ok(Modulation::Psk4),
            "8PSK" | "PSK8" => Ok(Modulation::Psk8),
            "16QAM" | "QAM16" => Ok(Modulation::Qam16),
            "BFSK" | "2FSK" | "FSK2" => Ok(Modulation::Bfsk),
            "4FSK" | "FSK4" => Ok(Modulation::Fsk4),
            "8FSK" | "FSK8" => Ok(Modulation::Fsk8),
            _ => Err(Error::InvalidArgument(format!("unknown modulation '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinearKind {
    Bpsk,
    Psk4,
    Psk8,
    Qam16,
}

/// A unit-average-power linear constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScheme {
    pub kind: LinearKind,
    pub constellation: Vec<Complex64>,
}

impl LinearScheme {
    pub fn new(kind: LinearKind) -> Self {
        let constellation = match kind {
            LinearKind::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            LinearKind::Psk4 => psk_points(4),
            LinearKind::Psk8 => psk_points(8),
            LinearKind::Qam16 => {
                let levels = [-3.0, -1.0, 1.0, 3.0];
                let norm = 10f64.sqrt();
                levels.iter().flat_map(|&i| levels.iter().map(move |&q| Complex64::new(i / norm, q / norm))).collect()
            }
        };
        LinearScheme { kind, constellation }
    }

    pub fn for_modulation(modulation: Modulation) -> Option<Self> {
        modulation.linear_kind().map(Self::new)
    }

    /// Draw `n` i.i.d. equiprobable constellation points.
    pub fn draw_symbols<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Complex64> {
        let m = self.constellation.len();
        (0..n).map(|_| self.constellation[rng.random_range(0..m)]).collect()
    }
}

// Phases (2n+1)pi/M; for M = 2 the points sit on the real axis instead.
fn psk_points(m: usize) -> Vec<Complex64> {
    (0..m).map(|n| Complex64::from_polar(1.0, (2 * n + 1) as f64 * PI / m as f64)).collect()
}

/// Integer/fractional timing of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolTiming {
    /// Nominal oversampling factor.
    pub ns: u32,
    /// Fractional part of the symbol period, in samples.
    pub eps: f64,
    /// Fractional part of the delay, in samples.
    pub eps0: f64,
    /// Integer part of the delay, in samples.
    pub k0: usize,
}

impl SymbolTiming {
    pub fn new(ns: u32, eps: f64, eps0: f64, k0: usize) -> Result<Self> {
        let timing = SymbolTiming { ns, eps, eps0, k0 };
        timing.validate()?;
        Ok(timing)
    }

    /// Draw `eps`, `eps0` uniform on [0, 1) and `k0` uniform on
    /// `0..ceil(Ns + eps)`.
    pub fn draw<R: Rng + ?Sized>(ns: u32, rng: &mut R) -> Self {
        let eps: f64 = rng.random();
        let eps0: f64 = rng.random();
        let k0 = rng.random_range(0..max_integer_delay(ns, eps) + 1);
        SymbolTiming { ns, eps, eps0, k0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns < 1 {
            return Err(Error::InvalidArgument("oversampling Ns must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.eps) {
            return Err(Error::InvalidArgument(format!("eps {} not in [0,1)", self.eps)));
        }
        if !(0.0..1.0).contains(&self.eps0) {
            return Err(Error::InvalidArgument(format!("eps0 {} not in [0,1)", self.eps0)));
        }
        if self.k0 > max_integer_delay(self.ns, self.eps) {
            return Err(Error::InvalidArgument(format!("k0 {} exceeds ceil(Ns+eps)-1", self.k0)));
        }
        Ok(())
    }

    /// Symbol period in samples, `Ns + eps`.
    pub fn symbol_period(&self) -> f64 {
        self.ns as f64 + self.eps
    }
}

/// Largest allowed integer delay, `ceil(Ns + eps) - 1`.
pub fn max_integer_delay(ns: u32, eps: f64) -> usize {
    (ns as f64 + eps).ceil() as usize - 1
}

/// Truncated root-raised-cosine pulse with unit symbol period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrcPulse {
    pub rolloff: f64,
    pub amplitude_scale: f64,
    pub span_symbols: usize,
}

impl RrcPulse {
    /// Unscaled pulse with the default span.
    pub fn new(rolloff: f64) -> Result<Self> {
        Self::with_span(rolloff, DEFAULT_SPAN_SYMBOLS)
    }

    pub fn with_span(rolloff: f64, span_symbols: usize) -> Result<Self> {
        if !(rolloff > 0.0 && rolloff <= 1.0) {
            return Err(Error::InvalidArgument(format!("rolloff {rolloff} not in (0,1]")));
        }
        if span_symbols < 1 {
            return Err(Error::InvalidArgument("span_symbols must be >= 1".into()));
        }
        Ok(RrcPulse { rolloff, amplitude_scale: 1.0, span_symbols })
    }

    /// Pulse scaled so that a unit-power i.i.d. symbol stream gives unit
    /// long-run average power at any sampling phase distribution.
    pub fn normalized(rolloff: f64) -> Result<Self> {
        let mut pulse = Self::new(rolloff)?;
        pulse.amplitude_scale = 1.0 / pulse.energy().sqrt();
        Ok(pulse)
    }

    /// `integral p(t)^2 dt` over the truncated support, with unit scale.
    ///
    /// For i.i.d. unit-power symbols this is the long-run average of
    /// `sum_n p(u - n)^2` over the sampling phase `u`, for every symbol
    /// period that makes the phases equidistribute.
    pub fn energy(&self) -> f64 {
        static CACHE: OnceLock<Mutex<HashMap<(u64, usize), f64>>> = OnceLock::new();
        let key = (self.rolloff.to_bits(), self.span_symbols);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(&e) = cache.lock().expect("pulse energy cache").get(&key) {
            return e;
        }
        let unit = RrcPulse { amplitude_scale: 1.0, ..*self };
        let energy = simpson(
            |t| unit.eval(t).powi(2),
            -(self.span_symbols as f64),
            self.span_symbols as f64,
            4096 * self.span_symbols,
        );
        cache.lock().expect("pulse energy cache").insert(key, energy);
        energy
    }

    /// Pulse value at `t` symbol periods; `t` must be finite.
    #[inline]
    pub(crate) fn eval(&self, t: f64) -> f64 {
        let at = t.abs();
        if at > self.span_symbols as f64 {
            return 0.0;
        }
        let b = self.rolloff;
        let v = if at < 1e-9 {
            1.0 - b + 4.0 * b / PI
        } else if (4.0 * b * at - 1.0).abs() < 1e-9 {
            let x = PI / (4.0 * b);
            b * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * x.sin() + (1.0 - 2.0 / PI) * x.cos())
        } else {
            let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
            let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
            num / den
        };
        self.amplitude_scale * v
    }
}

/// Evaluate the RRC pulse at `t` symbol periods.
pub fn rrc_eval(t: f64, pulse: &RrcPulse) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    if !(pulse.rolloff > 0.0 && pulse.rolloff <= 1.0) {
        return Err(Error::InvalidArgument(format!("rolloff {} not in (0,1]", pulse.rolloff)));
    }
    Ok(pulse.eval(t))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Number of symbols `modulate_linear` needs for `n_samples` output samples.
///
/// The slice starts `span_symbols` symbols before symbol 0.
pub fn linear_symbols_needed(n_samples: usize, pulse: &RrcPulse, timing: &SymbolTiming) -> usize {
    let lead = pulse.span_symbols as i64;
    if n_samples == 0 {
        return 0;
    }
    let u_max = (n_samples as f64 - 1.0 - timing.eps0) / timing.symbol_period();
    let n_max = (u_max + pulse.span_symbols as f64).floor() as i64;
    (n_max + 1 + lead) as usize
}

/// Linear modulation: `x[k] = sum_n c_n p((k - eps0)/T - n)`.
///
/// `symbols[j]` is symbol `n = j - span_symbols`, so the first retained
/// sample already sees its full pulse sum.
pub fn modulate_linear(
    symbols: &[Complex64],
    pulse: &RrcPulse,
    timing: &SymbolTiming,
    n_samples: usize,
) -> Result<Vec<Complex64>> {
    timing.validate()?;
    let needed = linear_symbols_needed(n_samples, pulse, timing);
    if symbols.len() < needed {
        return Err(Error::InsufficientSymbols { needed, got: symbols.len() });
    }
    let period = timing.symbol_period();
    let span = pulse.span_symbols as f64;
    let lead = pulse.span_symbols as i64;
    let out = (0..n_samples)
        .map(|k| {
            let u = (k as f64 - timing.eps0) / period;
            let lo = (u - span).ceil() as i64;
            let hi = (u + span).floor() as i64;
            (lo..=hi).fold(Complex64::new(0.0, 0.0), |acc, n| {
                let c = symbols[(n + lead) as usize];
                acc + c * pulse.eval(u - n as f64)
            })
        })
        .collect();
    Ok(out)
}

/// M-ary CPFSK with rectangular frequency pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpfskScheme {
    pub order: usize,
    pub modulation_index: f64,
    /// Per-sample phase increment of each tone, relative to the carrier
    /// offset (radians/sample). Index 0 is tone 1.
    pub tone_increments: Vec<f64>,
}

impl CpfskScheme {
    /// Tones `(2i - (m+1)) h pi / ((m-1) T)` for `i = 1..=m`, `T` the symbol
    /// period in samples.
    pub fn new(order: usize, modulation_index: f64, symbol_period: f64) -> Result<Self> {
        if !matches!(order, 2 | 4 | 8) {
            return Err(Error::InvalidArgument(format!("CPFSK order {order} not in {{2,4,8}}")));
        }
        if !(modulation_index > 0.0 && modulation_index.is_finite()) {
            return Err(Error::InvalidArgument(format!("modulation index {modulation_index} must be positive")));
        }
        if !(symbol_period > 1.0 && symbol_period.is_finite()) {
            return Err(Error::InvalidArgument(format!("symbol period {symbol_period} must exceed one sample")));
        }
        let m = order as f64;
        let step = modulation_index * PI / ((m - 1.0) * symbol_period);
        let tone_increments = (1..=order).map(|i| (2.0 * i as f64 - (m + 1.0)) * step).collect();
        Ok(CpfskScheme { order, modulation_index, tone_increments })
    }

    /// Draw `n` equiprobable 1-based tone indices.
    pub fn draw_tones<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| rng.random_range(1..=self.order)).collect()
    }
}

/// Number of tone indices `modulate_cpfsk` needs; the slice starts one
/// symbol before symbol 0.
pub fn cpfsk_symbols_needed(n_samples: usize, timing: &SymbolTiming) -> usize {
    if n_samples == 0 {
        return 0;
    }
    let t_last = n_samples as f64 - 1.0 - timing.eps0;
    (t_last / timing.symbol_period()).floor() as usize + 2
}

/// Fraction of the sample interval `(k-1-eps0, k-eps0]` that falls inside
/// each symbol it touches, as `(n_first, frac_first, frac_second)`.
///
/// Because the symbol period exceeds one sample, at most two symbols
/// overlap; `frac_second` is zero when only one does.
pub fn sample_overlap(k: i64, timing: &SymbolTiming) -> (i64, f64, f64) {
    let period = timing.symbol_period();
    let start = k as f64 - 1.0 - timing.eps0;
    let end = k as f64 - timing.eps0;
    let n_lo = (start / period).floor() as i64;
    let n_hi = (end / period).floor() as i64;
    if n_lo == n_hi {
        (n_lo, 1.0, 0.0)
    } else {
        let boundary = n_hi as f64 * period;
        (n_lo, boundary - start, end - boundary)
    }
}

/// Continuous-phase FSK: phase accumulates the integral of a rectangular
/// frequency pulse sampled over `(k-1-eps0, k-eps0]`.
///
/// `tone_indices[j]` (1-based) drives symbol `n = j - 1`. Sample 0 has
/// phase 0.
pub fn modulate_cpfsk(
    tone_indices: &[usize],
    scheme: &CpfskScheme,
    timing: &SymbolTiming,
    n_samples: usize,
) -> Result<Vec<Complex64>> {
    timing.validate()?;
    if let Some(&bad) = tone_indices.iter().find(|&&i| i < 1 || i > scheme.order) {
        return Err(Error::ToneIndexOutOfRange { index: bad, order: scheme.order });
    }
    let needed = cpfsk_symbols_needed(n_samples, timing);
    if tone_indices.len() < needed {
        return Err(Error::InsufficientSymbols { needed, got: tone_indices.len() });
    }
    let tone = |n: i64| scheme.tone_increments[tone_indices[(n + 1) as usize] - 1];
    let mut out = Vec::with_capacity(n_samples);
    let mut phase = 0.0f64;
    for k in 0..n_samples {
        if k > 0 {
            let (n, a, b) = sample_overlap(k as i64, timing);
            phase += if b == 0.0 { tone(n) } else { a * tone(n) + b * tone(n + 1) };
        }
        out.push(Complex64::from_polar(1.0, phase));
    }
    Ok(out)
}

/// `h = (Ns + eps) * delta / pi` for per-sample deviation `delta`.
pub fn modulation_index(ns: u32, eps: f64, delta: f64) -> f64 {
    (ns as f64 + eps) * delta / PI
}

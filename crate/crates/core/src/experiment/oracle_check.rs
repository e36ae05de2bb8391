use std::f64::consts::PI;
use std::io::Write;
use std::ops::Range;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, ChannelParams};
use crate::error::{Error, Result};
use crate::features::{fmt_real, lag_product};
use crate::oracle::{bfsk_q_values, mean_im_bfsk, per_sample_stats, time_average_prediction, OracleSignal, Quantity};
use crate::waveform::{
    cpfsk_symbols_needed, linear_symbols_needed, modulate_cpfsk, modulate_linear, CpfskScheme, LinearKind,
    LinearScheme, RrcPulse, SymbolTiming,
};

const NS: u32 = 6;
const EPS: f64 = 0.37;
const EPS0: f64 = 0.62;
const ROLLOFF: f64 = 0.35;
const H: f64 = 0.5;
const SAMPLE_INDICES: [i64; 4] = [5, 6, 7, 8];
const WINDOW: Range<i64> = 1..25;
const SIGMAS: f64 = 3.0;
const ABS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckOptions {
    /// Independent symbol draws per signal.
    pub draws: usize,
    pub seed: u64,
    /// Deliberately corrupt the BFSK variance formula (sign of the
    /// `prod cos 2Q` term) to prove the check can fail.
    pub inject_fault: bool,
}

impl Default for OracleCheckOptions {
    fn default() -> Self {
        OracleCheckOptions { draws: 100_000, seed: 0x0AC1E, inject_fault: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub formula: String,
    pub signal: String,
    pub delta_prime: f64,
    /// Sample index, or `a-b` for a time average over `a..b`.
    pub k: String,
    pub analytic: f64,
    pub monte_carlo: f64,
    pub std_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["formula", "signal", "delta_prime", "k", "analytic", "monte_carlo", "std_err", "pass"])?;
        for r in &self.rows {
            w.write_record([
                r.formula.clone(),
                r.signal.clone(),
                fmt_real(r.delta_prime),
                r.k.clone(),
                fmt_real(r.analytic),
                fmt_real(r.monte_carlo),
                fmt_real(r.std_err),
                if r.pass { "pass" } else { "fail" }.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Shifted power sums, for a mean and a variance with their standard errors.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    shift: f64,
    s: [f64; 4],
}

impl Moments {
    fn new(shift: f64) -> Self {
        Moments { shift, ..Default::default() }
    }

    fn push(&mut self, x: f64) {
        let d = x - self.shift;
        let d2 = d * d;
        self.n += 1.0;
        self.s[0] += d;
        self.s[1] += d2;
        self.s[2] += d2 * d;
        self.s[3] += d2 * d2;
    }

    fn mean(&self) -> (f64, f64) {
        let (_, var, _) = self.central();
        (self.shift + self.s[0] / self.n, (var / self.n).sqrt())
    }

    fn variance(&self) -> (f64, f64) {
        let (_, var, mu4) = self.central();
        let unbiased = var * self.n / (self.n - 1.0);
        (unbiased, ((mu4 - var * var).max(0.0) / self.n).sqrt())
    }

    // (mean offset, second and fourth central moments)
    fn central(&self) -> (f64, f64, f64) {
        let n = self.n;
        let m1 = self.s[0] / n;
        let r2 = self.s[1] / n;
        let r3 = self.s[2] / n;
        let r4 = self.s[3] / n;
        let var = (r2 - m1 * m1).max(0.0);
        let mu4 = r4 - 4.0 * m1 * r3 + 6.0 * m1 * m1 * r2 - 3.0 * m1.powi(4);
        (m1, var, mu4)
    }
}

/// Pooled variance over a window, `mean(b) - mean(a)^2` with `a_r`, `b_r`
/// the per-draw window means of `x` and `x^2`; delta-method standard error.
#[derive(Debug, Clone, Default)]
struct PooledVariance {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PooledVariance {
    fn push(&mut self, xs: &[f64]) {
        let n = xs.len() as f64;
        self.a.push(xs.iter().sum::<f64>() / n);
        self.b.push(xs.iter().map(|x| x * x).sum::<f64>() / n);
    }

    fn estimate(&self) -> (f64, f64) {
        let n = self.a.len() as f64;
        let ma = self.a.iter().sum::<f64>() / n;
        let mb = self.b.iter().sum::<f64>() / n;
        let d: Vec<f64> = self.a.iter().zip(&self.b).map(|(a, b)| b - 2.0 * ma * a).collect();
        let md = d.iter().sum::<f64>() / n;
        let vd = d.iter().map(|x| (x - md).powi(2)).sum::<f64>() / (n - 1.0);
        (mb - ma * ma, (vd / n).sqrt())
    }
}

fn timing() -> SymbolTiming {
    SymbolTiming::new(NS, EPS, EPS0, 0).expect("fixed oracle timing")
}

fn row(formula: &str, signal: &str, dp: f64, k: String, analytic: f64, (mc, se): (f64, f64)) -> OracleRow {
    OracleRow {
        formula: formula.to_string(),
        signal: signal.to_string(),
        delta_prime: dp,
        k,
        analytic,
        monte_carlo: mc,
        std_err: se,
        pass: (analytic - mc).abs() <= SIGMAS * se + ABS_SLACK,
    }
}

enum Source {
    Linear(LinearScheme, RrcPulse),
    Bfsk(CpfskScheme),
}

impl Source {
    fn draw(&self, n_samples: usize, timing: &SymbolTiming, rng: &mut ChaCha8Rng) -> Result<Vec<Complex64>> {
        match self {
            Source::Linear(scheme, pulse) => {
                let symbols = scheme.draw_symbols(linear_symbols_needed(n_samples, pulse, timing), rng);
                modulate_linear(&symbols, pulse, timing, n_samples)
            }
            Source::Bfsk(scheme) => {
                let tones = scheme.draw_tones(cpfsk_symbols_needed(n_samples, timing), rng);
                modulate_cpfsk(&tones, scheme, timing, n_samples)
            }
        }
    }
}

fn variance_formula(signal: &OracleSignal) -> &'static str {
    match signal {
        OracleSignal::Linear { kind: LinearKind::Bpsk, .. } => "var_bpsk",
        OracleSignal::Linear { .. } => "var_qampsk",
        OracleSignal::Bfsk { .. } => "var_bfsk",
    }
}

// BFSK variance with the sign of the `prod cos 2Q` term flipped.
fn faulty_var_bfsk(dp: f64, q: &[f64]) -> f64 {
    let c2: f64 = q.iter().map(|x| (2.0 * x).cos()).product();
    let csq: f64 = q.iter().map(|x| x.cos().powi(2)).product();
    0.5 + 0.5 * c2 + dp.sin().powi(2) * (c2 - csq)
}

/// Compare every closed form against Monte-Carlo estimates from the real
/// modulators and lag product, with a fixed timing and an identity channel
/// apart from the carrier offset.
pub fn oracle_check(options: &OracleCheckOptions) -> Result<OracleReport> {
    if options.draws < 2 {
        return Err(Error::InvalidArgument("oracle check needs at least 2 draws".into()));
    }
    let timing = timing();
    let pulse = RrcPulse::normalized(ROLLOFF)?;
    let offsets = [0.0, PI / 20.0, PI / 2.0];
    let n_samples = (WINDOW.end as usize).max(SAMPLE_INDICES[3] as usize + 1);
    let mut rows = Vec::new();

    let bfsk = CpfskScheme::new(2, H, timing.symbol_period())?;
    let bfsk_tone = bfsk.tone_increments[1];
    let mut cases: Vec<(OracleSignal, Source)> =
        [LinearKind::Bpsk, LinearKind::Psk4, LinearKind::Psk8, LinearKind::Qam16]
            .into_iter()
            .map(|kind| (OracleSignal::linear(kind, pulse), Source::Linear(LinearScheme::new(kind), pulse)))
            .collect();
    cases.push((OracleSignal::Bfsk { tone_increment: bfsk_tone }, Source::Bfsk(bfsk)));

    // per-sample (mean, variance), with the optional fault applied
    let stats = |signal: &OracleSignal, dp: f64, k: i64| -> Result<(f64, f64)> {
        match signal {
            OracleSignal::Bfsk { tone_increment } if options.inject_fault => {
                let q = bfsk_q_values(k, &timing, *tone_increment);
                Ok((mean_im_bfsk(dp, &q), faulty_var_bfsk(dp, &q)))
            }
            _ => per_sample_stats(signal, &timing, dp, k),
        }
    };

    for (case_index, (signal, source)) in cases.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ ((case_index as u64 + 1) << 32));
        let grid: Vec<(usize, f64, i64)> =
            offsets.iter().enumerate().flat_map(|(oi, &dp)| SAMPLE_INDICES.iter().map(move |&k| (oi, dp, k))).collect();
        let predicted = grid.iter().map(|&(_, dp, k)| stats(signal, dp, k)).collect::<Result<Vec<_>>>()?;
        let mut per_k: Vec<Moments> = predicted.iter().map(|p| Moments::new(p.0)).collect();
        let mut window_mean = vec![Moments::default(); offsets.len()];
        let mut window_var = vec![PooledVariance::default(); offsets.len()];
        let mut window_vals = Vec::with_capacity((WINDOW.end - WINDOW.start) as usize);

        for _ in 0..options.draws {
            let clean = source.draw(n_samples, &timing, &mut rng)?;
            for (oi, &dp) in offsets.iter().enumerate() {
                let channel = ChannelParams { delta_prime: dp, ..ChannelParams::identity() };
                let received = apply_channel(&clean, &channel, &mut rng)?;
                // lag product index i is oracle index k = i + 1
                let w = lag_product(&received)?.w;
                for (ki, &k) in SAMPLE_INDICES.iter().enumerate() {
                    per_k[oi * SAMPLE_INDICES.len() + ki].push(w[(k - 1) as usize].im);
                }
                window_vals.clear();
                window_vals.extend(WINDOW.map(|k| w[(k - 1) as usize].im));
                window_mean[oi].push(window_vals.iter().sum::<f64>() / window_vals.len() as f64);
                window_var[oi].push(&window_vals);
            }
        }

        let mean_formula = match signal {
            OracleSignal::Bfsk { .. } => "mean_bfsk",
            _ => "mean_linear",
        };
        for ((&(_, dp, k), p), m) in grid.iter().zip(&predicted).zip(&per_k) {
            rows.push(row(mean_formula, signal.name(), dp, k.to_string(), p.0, m.mean()));
            rows.push(row(variance_formula(signal), signal.name(), dp, k.to_string(), p.1, m.variance()));
        }
        let window = format!("{}-{}", WINDOW.start, WINDOW.end - 1);
        for (oi, &dp) in offsets.iter().enumerate() {
            let (mean, var) = if options.inject_fault {
                let window_stats = WINDOW.map(|k| stats(signal, dp, k)).collect::<Result<Vec<_>>>()?;
                let n = window_stats.len() as f64;
                let mean = window_stats.iter().map(|s| s.0).sum::<f64>() / n;
                let spread = window_stats.iter().map(|s| s.1 + (s.0 - mean).powi(2)).sum::<f64>() / n;
                (mean, spread)
            } else {
                (
                    time_average_prediction(signal, Quantity::Mean, &timing, dp, WINDOW)?,
                    time_average_prediction(signal, Quantity::Variance, &timing, dp, WINDOW)?,
                )
            };
            rows.push(row("time_average_mean", signal.name(), dp, window.clone(), mean, window_mean[oi].mean()));
            rows.push(row("time_average_variance", signal.name(), dp, window.clone(), var, window_var[oi].estimate()));
        }
    }
    Ok(OracleReport { rows })
}

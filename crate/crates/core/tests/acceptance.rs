//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use modrec::channel::{apply_channel, ChannelParams};
use modrec::classifiers::{log_likelihood, log_likelihood_gradient, ClassifierKind, LogRegModel, MlpModel};
use modrec::experiment::{
    oracle_check, run_sweep_with_workers, ExperimentConfig, OracleCheckOptions, Preset, SweepResult,
};
use modrec::features::{extract_features, lag_product, shift_center};
use modrec::waveform::{
    cpfsk_symbols_needed, linear_symbols_needed, modulate_cpfsk, modulate_linear, CpfskScheme, LinearScheme,
    Modulation, RrcPulse, SymbolTiming,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DESK_SEED: u64 = 2024;
const TREND_SLACK: f64 = 0.02;
const NN_SLACK: f64 = 0.01;

struct Gate {
    failed: Vec<String>,
}

impl Gate {
    fn report(&mut self, id: &str, pass: bool, detail: String) {
        println!("criterion {id}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.to_string());
        }
    }
}

fn oracle_equivalence(gate: &mut Gate) {
    let start = Instant::now();
    let report = oracle_check(&OracleCheckOptions::default()).expect("oracle check runs");
    let elapsed = start.elapsed();
    let worst = report
        .rows
        .iter()
        .filter(|r| r.std_err > 1e-9)
        .map(|r| (r.analytic - r.monte_carlo).abs() / r.std_err)
        .fold(0.0, f64::max);
    gate.report(
        "1 oracle equivalence",
        report.all_pass() && elapsed <= Duration::from_secs(300),
        format!(
            "{} checks, {} failed, worst |z| {worst:.2}, {} draws, {:.1}s",
            report.rows.len(),
            report.failures(),
            OracleCheckOptions::default().draws,
            elapsed.as_secs_f64()
        ),
    );
}

fn clean(modulation: Modulation, timing: &SymbolTiming, n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    match modulation.cpfsk_order() {
        Some(order) => {
            let scheme = CpfskScheme::new(order, 0.5, timing.symbol_period()).unwrap();
            let tones = scheme.draw_tones(cpfsk_symbols_needed(n, timing), rng);
            modulate_cpfsk(&tones, &scheme, timing, n).unwrap()
        }
        None => {
            let scheme = LinearScheme::for_modulation(modulation).unwrap();
            let pulse = RrcPulse::normalized(rng.random_range(1..=10) as f64 / 10.0).unwrap();
            let symbols = scheme.draw_symbols(linear_symbols_needed(n, &pulse, timing), rng);
            modulate_linear(&symbols, &pulse, timing, n).unwrap()
        }
    }
}

fn exact_invariances(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut phase_dev, mut quarter_dev, mut modulus_dev) = (0.0f64, 0.0f64, 0.0f64);
    for modulation in Modulation::ALL {
        for _ in 0..20 {
            let timing = SymbolTiming::draw(6, &mut rng);
            let s = clean(modulation, &timing, 1200, &mut rng);
            if modulation.is_cpfsk() {
                for x in &s {
                    modulus_dev = modulus_dev.max((x.norm() - 1.0).abs());
                }
            }
            let base = ChannelParams {
                alpha: rng.random_range(0.1..3.0),
                delta_prime: rng.random_range(-0.15..0.15),
                k0: timing.k0,
                ..ChannelParams::identity()
            };
            let turned = ChannelParams { theta_c: rng.random_range(-PI..PI), psi: rng.random_range(-PI..PI), ..base };
            let a = apply_channel(&s, &base, &mut rng).unwrap();
            let b = apply_channel(&s, &turned, &mut rng).unwrap();
            let fa = extract_features(&a).unwrap().as_array();
            let fb = extract_features(&b).unwrap().as_array();
            for (x, y) in fa.iter().zip(fb) {
                phase_dev = phase_dev.max((x - y).abs() / x.abs().max(1.0));
            }
            let w = lag_product(&b).unwrap().w;
            let wq = lag_product(&shift_center(&b, PI / 2.0)).unwrap().w;
            for (x, y) in w.iter().zip(&wq) {
                quarter_dev = quarter_dev.max((x.re - y.im).abs());
            }
        }
    }
    gate.report(
        "2 exact invariances",
        phase_dev <= 1e-12 && quarter_dev <= 1e-12 && modulus_dev <= 1e-12,
        format!("theta_c/psi {phase_dev:.1e}, quarter-turn {quarter_dev:.1e}, CPFSK modulus {modulus_dev:.1e}"),
    );
}

fn gradient_checks(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<[f64; 3]> = (0..120).map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0))).collect();
    let y: Vec<u8> = x.iter().map(|p| u8::from(p[0] - 0.5 * p[2] + rng.random_range(-0.5..0.5) > 0.0)).collect();
    let rel = |a: f64, b: f64, floor: f64| (a - b).abs() / a.abs().max(b.abs()).max(floor);
    let h = 1e-5;

    let mut lr_worst = 0.0f64;
    for _ in 0..20 {
        let p: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let model = |q: [f64; 4]| LogRegModel { theta0: q[0], theta: [q[1], q[2], q[3]] };
        let g = log_likelihood_gradient(&model(p), &x, &y);
        for j in 0..4 {
            let (mut up, mut dn) = (p, p);
            up[j] += h;
            dn[j] -= h;
            let fd = (log_likelihood(&model(up), &x, &y) - log_likelihood(&model(dn), &x, &y)) / (2.0 * h);
            lr_worst = lr_worst.max(rel(g[j], fd, 1e-8));
        }
    }

    let mut nn_worst = 0.0f64;
    let n_params = MlpModel::init(&mut rng).to_params().len();
    for _ in 0..20 {
        let p: Vec<f64> = (0..n_params).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = MlpModel::from_params(&p).unwrap().gradient(&x, &y);
        for j in 0..n_params {
            let (mut up, mut dn) = (p.clone(), p.clone());
            up[j] += h;
            dn[j] -= h;
            let fd = (MlpModel::from_params(&up).unwrap().loss(&x, &y)
                - MlpModel::from_params(&dn).unwrap().loss(&x, &y))
                / (2.0 * h);
            nn_worst = nn_worst.max(rel(g[j], fd, 1e-7));
        }
    }
    gate.report(
        "3 gradient checks",
        lr_worst <= 1e-5 && nn_worst <= 1e-4,
        format!("20 points each, worst relative error LR {lr_worst:.1e}, NN {nn_worst:.1e}"),
    );
}

fn accuracy(r: &SweepResult, c: ClassifierKind, size: usize, snr: f64) -> f64 {
    r.get(c, size, snr).expect("grid point present").accuracy
}

fn desk_trends(gate: &mut Gate, r: &SweepResult, cfg: &ExperimentConfig, elapsed: Duration) {
    let snrs = &cfg.snr_grid_db;
    let all = ClassifierKind::ALL;
    let (svm, lr, nn) = (ClassifierKind::Svm, ClassifierKind::LogReg, ClassifierKind::Mlp);

    // (a) non-decreasing in SNR at size 1000
    let mut worst_drop = 0.0f64;
    for c in all {
        for w in snrs.windows(2) {
            worst_drop = worst_drop.max(accuracy(r, c, 1000, w[0]) - accuracy(r, c, 1000, w[1]));
        }
    }
    gate.report("4a SNR trend at size 1000", worst_drop <= TREND_SLACK, format!("largest drop {worst_drop:.4}"));

    // (b) classifiers agree at high SNR
    let mut spread_b = 0.0f64;
    for &s in snrs.iter().filter(|&&s| s >= 10.0) {
        let a: Vec<f64> = all.iter().map(|&c| accuracy(r, c, 1000, s)).collect();
        spread_b =
            spread_b.max(a.iter().cloned().fold(f64::MIN, f64::max) - a.iter().cloned().fold(f64::MAX, f64::min));
    }
    gate.report("4b agreement at SNR >= 10 dB", spread_b <= TREND_SLACK, format!("largest spread {spread_b:.4}"));

    // (c) 1000 vs 2000 training realizations
    let mut gap_c = 0.0f64;
    for c in all {
        for &s in snrs {
            gap_c = gap_c.max((accuracy(r, c, 1000, s) - accuracy(r, c, 2000, s)).abs());
        }
    }
    gate.report("4c size 1000 vs 2000", gap_c <= TREND_SLACK, format!("largest gap {gap_c:.4}"));

    // (d) NN weak at size 50, low SNR
    let mut excess_d = f64::MIN;
    let mut detail_d = Vec::new();
    for &s in snrs.iter().filter(|&&s| s <= 5.0) {
        let floor = accuracy(r, svm, 50, s).min(accuracy(r, lr, 50, s));
        let e = accuracy(r, nn, 50, s) - floor;
        excess_d = excess_d.max(e);
        detail_d.push(format!("{s}dB {e:+.3}"));
    }
    gate.report(
        "4d NN <= min(SVM, LR) + 0.01 at size 50, SNR <= 5 dB",
        excess_d <= NN_SLACK,
        format!("NN minus min: {}", detail_d.join(", ")),
    );

    // (e) NN best at size 1000, low SNR
    let mut short_e = f64::MIN;
    let mut detail_e = Vec::new();
    for &s in snrs.iter().filter(|&&s| s <= 5.0) {
        let ceil = accuracy(r, svm, 1000, s).max(accuracy(r, lr, 1000, s));
        let e = ceil - accuracy(r, nn, 1000, s);
        short_e = short_e.max(e);
        detail_e.push(format!("{s}dB {:+.3}", -e));
    }
    gate.report(
        "4e NN >= max(SVM, LR) - 0.01 at size 1000, SNR <= 5 dB",
        short_e <= NN_SLACK,
        format!("NN minus max: {}", detail_e.join(", ")),
    );
    gate.report(
        "4 desk sweep runtime",
        elapsed <= Duration::from_secs(1800),
        format!("{:.0}s on {} worker(s)", elapsed.as_secs_f64(), workers()),
    );
}

fn determinism(gate: &mut Gate) {
    let mut cfg = ExperimentConfig::preset(Preset::Ci);
    cfg.master_seed = Some(77);
    let csv = |workers: usize| {
        let mut buf = Vec::new();
        run_sweep_with_workers(&cfg, workers).unwrap().write_csv(&mut buf).unwrap();
        buf
    };
    let reference = csv(1);
    let same = [1, 4, 16].iter().all(|&w| csv(w) == reference);
    gate.report("5 determinism", same, format!("ci preset, workers 1/1/4/16, {} bytes", reference.len()));
}

fn separability(gate: &mut Gate, r: &SweepResult) {
    let accs: Vec<String> =
        ClassifierKind::ALL.iter().map(|&c| format!("{c} {:.4}", accuracy(r, c, 1000, 20.0))).collect();
    let ok = ClassifierKind::ALL.iter().all(|&c| accuracy(r, c, 1000, 20.0) >= 0.85);
    gate.report("6 separability at 20 dB", ok, accs.join(", "));
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn main() {
    let mut gate = Gate { failed: Vec::new() };
    oracle_equivalence(&mut gate);
    exact_invariances(&mut gate);
    gradient_checks(&mut gate);

    let mut cfg = ExperimentConfig::preset(Preset::Desk);
    cfg.master_seed = Some(DESK_SEED);
    let start = Instant::now();
    let sweep = run_sweep_with_workers(&cfg, workers()).expect("desk sweep runs");
    let elapsed = start.elapsed();
    let mut table = Vec::new();
    sweep.write_csv(&mut table).unwrap();
    println!("desk sweep results:\n{}", String::from_utf8_lossy(&table));
    desk_trends(&mut gate, &sweep, &cfg, elapsed);
    determinism(&mut gate);
    separability(&mut gate, &sweep);

    if gate.failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: {} failing: {}", gate.failed.len(), gate.failed.join("; "));
        std::process::exit(1);
    }
}

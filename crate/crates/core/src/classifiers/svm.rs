//! Soft-margin linear SVM trained on the primal hinge objective
//! `0.5 |w|^2 + C sum_i max(0, 1 - y_i (w.x_i + b))`.
//!
//! Each epoch is one full pass: compute the minimum-norm subgradient over
//! the points within `tie` of the margin, then minimize exactly along its
//! negative (the objective restricted to a ray is a convex piecewise
//! quadratic). The objective therefore never increases. When progress
//! stalls the tie band is narrowed, down to `MIN_TIE`.

use serde::{Deserialize, Serialize};

use super::{check_training_set, TrainConfig, TrainingReport};
use crate::error::Result;

const INITIAL_TIE: f64 = 1e-1;
const MIN_TIE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: [f64; 3],
    pub bias: f64,
    pub c: f64,
}

impl LinearSvmModel {
    pub fn decision(&self, x: &[f64; 3]) -> f64 {
        dot3(&self.weights, x) + self.bias
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sign(y: u8) -> f64 {
    if y == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Primal objective for labels in {0, 1} (0 maps to -1).
pub fn svm_objective(weights: &[f64; 3], bias: f64, c: f64, x: &[[f64; 3]], y: &[u8]) -> f64 {
    let hinge: f64 = x.iter().zip(y).map(|(xi, &yi)| (1.0 - sign(yi) * (dot3(weights, xi) + bias)).max(0.0)).sum();
    0.5 * dot3(weights, weights) + c * hinge
}

// Augmented parameter vector [w0, w1, w2, b].
type Params = [f64; 4];

fn norm_sq(v: &Params) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Minimum-norm element of `g0 - sum_T beta_i a_i` over `beta_i in [0, c]`,
/// by cyclic projected coordinate descent.
fn min_norm_subgradient(g0: Params, ties: &[Params], c: f64) -> Params {
    let mut g = g0;
    if ties.is_empty() {
        return g;
    }
    let mut beta = vec![0.0; ties.len()];
    let norms: Vec<f64> = ties.iter().map(norm_sq).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for (i, a) in ties.iter().enumerate() {
            if norms[i] == 0.0 {
                continue;
            }
            let proj = (0..4).map(|j| a[j] * g[j]).sum::<f64>() / norms[i];
            let nb = (beta[i] + proj).clamp(0.0, c);
            let d = nb - beta[i];
            if d != 0.0 {
                for j in 0..4 {
                    g[j] -= d * a[j];
                }
                beta[i] = nb;
                moved = moved.max(d.abs());
            }
        }
        if moved <= 1e-14 * c {
            break;
        }
    }
    g
}

/// Exact minimizer over `t >= 0` of the objective along `dir`.
fn line_search(w: &[f64; 3], dir: &Params, r: &[f64], s: &[f64], c: f64) -> f64 {
    let dw = [dir[0], dir[1], dir[2]];
    let a = dot3(w, &dw);
    let q = dot3(&dw, &dw);

    // slope(t) = a + q t - c * sum_{active(t)} s_i; collect the kinks where
    // points enter or leave the active set for t > 0.
    let mut base = 0.0;
    let mut kinks: Vec<(f64, f64)> = Vec::new();
    for (&ri, &si) in r.iter().zip(s) {
        if si == 0.0 {
            if ri > 0.0 {
                base += si;
            }
            continue;
        }
        let t = ri / si;
        if si > 0.0 {
            // active while t < ri/si
            if ri > 0.0 {
                base += si;
                kinks.push((t, c * si));
            }
        } else if ri > 0.0 {
            base += si;
        } else {
            // becomes active after ri/si >= 0
            kinks.push((t.max(0.0), -c * si));
        }
    }
    kinks.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut slope0 = a - c * base;
    let mut t_prev = 0.0;
    for &(tk, jump) in &kinks {
        // slope at t in [t_prev, tk): slope0 + q t
        let at_end = slope0 + q * tk;
        if at_end >= 0.0 {
            if q > 0.0 {
                return (-slope0 / q).max(t_prev);
            }
            return t_prev;
        }
        slope0 += jump;
        t_prev = tk;
        if slope0 + q * tk >= 0.0 {
            return tk;
        }
    }
    if q > 0.0 {
        (-slope0 / q).max(t_prev)
    } else {
        t_prev
    }
}

/// Train a linear SVM on standardized inputs; labels in {0, 1}.
pub fn train_svm(x: &[[f64; 3]], y: &[u8], config: &TrainConfig) -> Result<(LinearSvmModel, TrainingReport)> {
    check_training_set(x, y)?;
    let c = config.svm_c;
    let ys: Vec<f64> = y.iter().map(|&l| sign(l)).collect();
    let aug: Vec<Params> = x.iter().zip(&ys).map(|(xi, &yi)| [yi * xi[0], yi * xi[1], yi * xi[2], yi]).collect();

    let mut theta: Params = [0.0; 4];
    let mut obj = svm_objective(&[0.0; 3], 0.0, c, x, y);
    let mut history = vec![obj];
    let mut tie = INITIAL_TIE;
    let mut converged = false;
    let mut epochs = 0;
    let mut r = vec![0.0; x.len()];
    let mut s = vec![0.0; x.len()];

    while epochs < config.svm_max_epochs {
        epochs += 1;
        for (ri, a) in r.iter_mut().zip(&aug) {
            *ri = 1.0 - (0..4).map(|j| a[j] * theta[j]).sum::<f64>();
        }
        let mut g0: Params = [theta[0], theta[1], theta[2], 0.0];
        let mut ties = Vec::new();
        for (&ri, a) in r.iter().zip(&aug) {
            if ri > tie {
                for j in 0..4 {
                    g0[j] -= c * a[j];
                }
            } else if ri >= -tie {
                ties.push(*a);
            }
        }
        let g = min_norm_subgradient(g0, &ties, c);
        if norm_sq(&g) <= 1e-24 {
            if tie <= MIN_TIE {
                converged = true;
                break;
            }
            tie *= 0.1;
            continue;
        }
        let dir: Params = std::array::from_fn(|j| -g[j]);
        for (si, a) in s.iter_mut().zip(&aug) {
            *si = (0..4).map(|j| a[j] * dir[j]).sum();
        }
        let t = line_search(&[theta[0], theta[1], theta[2]], &dir, &r, &s, c);
        let cand: Params = std::array::from_fn(|j| theta[j] + t * dir[j]);
        let cand_obj = svm_objective(&[cand[0], cand[1], cand[2]], cand[3], c, x, y);
        let decrease = obj - cand_obj;
        if decrease > 0.0 {
            theta = cand;
            obj = cand_obj;
            history.push(obj);
        }
        if decrease < config.svm_tolerance {
            if tie <= MIN_TIE {
                converged = true;
                break;
            }
            tie *= 0.1;
        }
    }

    Ok((
        LinearSvmModel { weights: [theta[0], theta[1], theta[2]], bias: theta[3], c },
        TrainingReport { iterations: epochs, converged, objective: obj, history },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_pair() {
        let x = [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let y = [0, 1];
        let (m, _) = train_svm(&x, &y, &TrainConfig::default()).unwrap();
        let crossing = -m.bias / m.weights[0];
        assert!(crossing.abs() < 1e-6, "boundary at {crossing}");
        assert!(m.decision(&x[0]) < 0.0 && m.decision(&x[1]) > 0.0);
        assert!((m.weights[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn objective_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: Vec<[f64; 3]> = (0..400).map(|_| std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0)).collect();
        let y: Vec<u8> =
            x.iter().map(|p| u8::from(p[0] + 0.5 * p[1] + 0.3 * (rng.random::<f64>() - 0.5) > 0.1)).collect();
        let (m, report) = train_svm(&x, &y, &TrainConfig::default()).unwrap();
        for w in report.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!((svm_objective(&m.weights, m.bias, m.c, &x, &y) - report.objective).abs() < 1e-9);
    }

    #[test]
    fn line_search_finds_piecewise_minimum() {
        // objective along a ray, checked against dense sampling
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let w: [f64; 3] = std::array::from_fn(|_| rng.random::<f64>() - 0.5);
            let dir: Params = std::array::from_fn(|_| rng.random::<f64>() - 0.5);
            let r: Vec<f64> = (0..30).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let s: Vec<f64> = (0..30).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let c = 0.7;
            let f = |t: f64| {
                let wt: [f64; 3] = std::array::from_fn(|j| w[j] + t * dir[j]);
                0.5 * dot3(&wt, &wt) + c * r.iter().zip(&s).map(|(a, b)| (a - t * b).max(0.0)).sum::<f64>()
            };
            let t = line_search(&w, &dir, &r, &s, c);
            let best = (0..20_000).map(|i| f(i as f64 * 1e-3)).fold(f64::INFINITY, f64::min);
            assert!(f(t) <= best + 1e-9, "t {t}: {} vs {best}", f(t));
        }
    }
}

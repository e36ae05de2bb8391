use serde::{Deserialize, Serialize};

use super::{check_training_set, TrainConfig, TrainingReport};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub theta0: f64,
    pub theta: [f64; 3],
}

impl LogRegModel {
    pub fn logit(&self, x: &[f64; 3]) -> f64 {
        self.theta0 + self.theta[0] * x[0] + self.theta[1] * x[1] + self.theta[2] * x[2]
    }

    fn params(&self) -> [f64; 4] {
        [self.theta0, self.theta[0], self.theta[1], self.theta[2]]
    }

    fn from_params(p: [f64; 4]) -> Self {
        LogRegModel { theta0: p[0], theta: [p[1], p[2], p[3]] }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// log(1 + e^z) without overflow
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

// Both the likelihood and its gradient are written in terms of the signed
// margin t = (2y - 1) z. Flipping every label and negating theta leaves t,
// and hence every intermediate value, bit-identical.
fn signed(y: u8) -> f64 {
    if y == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `sum_i y_i log h(x_i) + (1 - y_i) log(1 - h(x_i))`.
pub fn log_likelihood(model: &LogRegModel, x: &[[f64; 3]], y: &[u8]) -> f64 {
    x.iter().zip(y).map(|(xi, &yi)| -softplus(-signed(yi) * model.logit(xi))).sum()
}

/// Gradient of [`log_likelihood`] as `[d/dtheta0, d/dtheta1..3]`.
pub fn log_likelihood_gradient(model: &LogRegModel, x: &[[f64; 3]], y: &[u8]) -> [f64; 4] {
    let mut g = [0.0; 4];
    for (xi, &yi) in x.iter().zip(y) {
        let s = signed(yi);
        // y - h(x) = s * sigmoid(-t)
        let r = s * sigmoid(-s * model.logit(xi));
        g[0] += r;
        g[1] += r * xi[0];
        g[2] += r * xi[1];
        g[3] += r * xi[2];
    }
    g
}

/// Maximize the log-likelihood by full-batch gradient ascent with
/// backtracking (Armijo) step control, starting from zero.
pub fn train_logreg(x: &[[f64; 3]], y: &[u8], config: &TrainConfig) -> Result<(LogRegModel, TrainingReport)> {
    check_training_set(x, y)?;
    let mut model = LogRegModel::from_params([0.0; 4]);
    let mut ll = log_likelihood(&model, x, y);
    let mut step = 1.0 / x.len() as f64;
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.lr_max_iterations {
        let g = log_likelihood_gradient(&model, x, y);
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gmax <= config.lr_gradient_tolerance {
            converged = true;
            break;
        }
        let gsq: f64 = g.iter().map(|v| v * v).sum();
        let p = model.params();
        let mut accepted = false;
        while step > 1e-300 {
            let cand = LogRegModel::from_params(std::array::from_fn(|i| p[i] + step * g[i]));
            let cand_ll = log_likelihood(&cand, x, y);
            if cand_ll >= ll + 1e-4 * step * gsq {
                model = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        history.push(ll);
        step *= 2.0;
    }

    Ok((model, TrainingReport { iterations, converged, objective: ll, history }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<[f64; 3]>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = (i % 2) as u8;
            let c = if label == 1 { sep } else { -sep };
            x.push([c + rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5]);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn separable_set_is_fit_exactly() {
        let (x, y) = blobs(60, 1.0, 1);
        let (m, report) = train_logreg(&x, &y, &TrainConfig::default()).unwrap();
        let correct = x.iter().zip(&y).filter(|(xi, &yi)| u8::from(m.logit(xi) > 0.0) == yi).count();
        assert_eq!(correct, 60);
        assert!(!report.converged || report.iterations > 0);
    }

    #[test]
    fn likelihood_never_decreases() {
        let (x, y) = blobs(200, 0.3, 2);
        let (_, report) = train_logreg(&x, &y, &TrainConfig::default()).unwrap();
        assert!(report.converged);
        for w in report.history.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn flipped_labels_negate_parameters_exactly() {
        let (x, y) = blobs(300, 0.2, 3);
        let flipped: Vec<u8> = y.iter().map(|l| 1 - l).collect();
        let cfg = TrainConfig::default();
        let (a, _) = train_logreg(&x, &y, &cfg).unwrap();
        let (b, _) = train_logreg(&x, &flipped, &cfg).unwrap();
        assert_eq!(a.theta0, -b.theta0);
        for j in 0..3 {
            assert_eq!(a.theta[j], -b.theta[j]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = blobs(100, 0.4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        for _ in 0..20 {
            let p: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 4.0 - 2.0);
            let m = LogRegModel::from_params(p);
            let g = log_likelihood_gradient(&m, &x, &y);
            for i in 0..4 {
                let mut up = p;
                let mut dn = p;
                up[i] += h;
                dn[i] -= h;
                let fd = (log_likelihood(&LogRegModel::from_params(up), &x, &y)
                    - log_likelihood(&LogRegModel::from_params(dn), &x, &y))
                    / (2.0 * h);
                let rel = (fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-5, "component {i}: analytic {} fd {fd}", g[i]);
            }
        }
    }

    #[test]
    fn single_label_is_rejected() {
        let x = [[0.0; 3], [1.0; 3]];
        assert!(train_logreg(&x, &[1, 1], &TrainConfig::default()).is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) == 1.0);
        assert!((softplus(-800.0)).abs() < 1e-300 + f64::MIN_POSITIVE);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
    }
}

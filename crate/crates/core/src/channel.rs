//! Block-fading channel with carrier offset, integer delay and unit AWGN.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::max_integer_delay;

/// Half-width of the carrier-offset draw around its nominal center.
pub const OFFSET_HALF_WIDTH: f64 = PI / 20.0;

/// Per-realization channel draws. All of them stay fixed over the block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Rayleigh fading magnitude, `E[alpha^2] = 1`.
    pub alpha: f64,
    /// Fading phase.
    pub psi: f64,
    /// Initial carrier phase.
    pub theta_c: f64,
    /// Carrier offset in radians/sample.
    pub delta_prime: f64,
    /// Integer delay in samples.
    pub k0: usize,
    /// Average SNR against unit noise. `+inf` means noiseless with unit gain.
    pub snr_db: f64,
}

impl ChannelParams {
    /// Unit-gain, zero-phase, zero-offset, noiseless channel.
    pub fn identity() -> Self {
        ChannelParams { alpha: 1.0, psi: 0.0, theta_c: 0.0, delta_prime: 0.0, k0: 0, snr_db: f64::INFINITY }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    /// Amplitude applied to a unit-power clean signal before fading.
    pub fn signal_gain(&self) -> f64 {
        if self.is_noiseless() {
            1.0
        } else {
            snr_amplitude(self.snr_db)
        }
    }
}

/// `sqrt(10^(snr_db/10))`.
pub fn snr_amplitude(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 20.0)
}

/// Draw one realization's channel.
///
/// `gamma_prime` is the nominal spectral center; the offset is uniform on
/// `gamma_prime +- pi/20`. The integer delay comes from `k0`, which the
/// caller draws together with the symbol timing.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, gamma_prime: f64, k0: usize, snr_db: f64) -> ChannelParams {
    let delta_prime = gamma_prime + OFFSET_HALF_WIDTH * (2.0 * rng.random::<f64>() - 1.0);
    let theta_c = TAU * rng.random::<f64>();
    let psi = TAU * rng.random::<f64>();
    let alpha = draw_rayleigh(rng);
    ChannelParams { alpha, psi, theta_c, delta_prime, k0, snr_db }
}

/// Same as [`draw_channel`] but also draws `k0` on `0..ceil(Ns+eps)`.
pub fn draw_channel_with_delay<R: Rng + ?Sized>(
    rng: &mut R,
    gamma_prime: f64,
    ns: u32,
    eps: f64,
    snr_db: f64,
) -> ChannelParams {
    let k0 = rng.random_range(0..max_integer_delay(ns, eps) + 1);
    draw_channel(rng, gamma_prime, k0, snr_db)
}

/// Rayleigh magnitude with unit mean square (scale `1/sqrt(2)`).
pub fn draw_rayleigh<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // inverse CDF; 1 - u keeps the log argument in (0, 1]
    let u: f64 = rng.random();
    (-(1.0 - u).ln()).sqrt()
}

/// Unit-variance circular complex Gaussian sample.
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

/// Received signal from a clean unit-power signal.
///
/// Output sample `j` is absolute sample `k = j + k0`:
/// `g * clean[j] * exp(i(delta' k + theta_c)) * alpha exp(i psi) + v[j]`.
/// The output is `k0` samples shorter than the input.
pub fn apply_channel<R: Rng + ?Sized>(
    clean: &[Complex64],
    params: &ChannelParams,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if params.k0 >= clean.len() {
        return Err(Error::DelayTooLong { k0: params.k0, len: clean.len() });
    }
    if !(params.delta_prime.is_finite() && params.alpha.is_finite()) {
        return Err(Error::NonFinite("channel parameters"));
    }
    let n = clean.len() - params.k0;
    let gain = Complex64::from_polar(params.signal_gain() * params.alpha, params.psi + params.theta_c);
    let noisy = !params.is_noiseless();
    let out = (0..n)
        .map(|j| {
            let k = (j + params.k0) as f64;
            let rot = Complex64::from_polar(1.0, params.delta_prime * k);
            let s = clean[j] * gain * rot;
            if noisy {
                s + complex_noise(rng)
            } else {
                s
            }
        })
        .collect();
    Ok(out)
}

/// `10 log10(mean|signal|^2 / mean|noise|^2)`.
pub fn measure_snr(signal_part: &[Complex64], noise_part: &[Complex64]) -> Result<f64> {
    if signal_part.is_empty() || noise_part.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    if signal_part.len() != noise_part.len() {
        return Err(Error::LengthMismatch { left: signal_part.len(), right: noise_part.len() });
    }
    let ps = mean_power(signal_part);
    let pn = mean_power(noise_part);
    Ok(10.0 * (ps / pn).log10())
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>() / x.len() as f64
}

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, draw_channel, ChannelParams};
use crate::error::{Error, Result};
use crate::waveform::{
    cpfsk_symbols_needed, linear_symbols_needed, modulate_cpfsk, modulate_linear, CpfskScheme, LinearScheme,
    Modulation, RrcPulse, SymbolTiming,
};

/// Everything needed to regenerate one received burst.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizationSpec {
    pub modulation: Modulation,
    pub seed: u64,
    pub snr_db: f64,
    pub n_symbols: usize,
    pub ns: u32,
    pub h: f64,
}

/// All random draws of one realization, plus what they were drawn for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationParams {
    pub modulation: Modulation,
    pub seed: u64,
    pub snr_db: f64,
    pub n_symbols: usize,
    pub ns: u32,
    pub h: f64,
    /// RRC roll-off; drawn for every realization, used by linear schemes.
    pub rolloff: f64,
    /// RRC amplitude scale (linear schemes only).
    pub pulse_scale: Option<f64>,
    pub timing: SymbolTiming,
    pub channel: ChannelParams,
    /// Received samples after the integer-delay trim.
    pub n_samples: usize,
}

impl RealizationParams {
    pub fn spec(&self) -> RealizationSpec {
        RealizationSpec {
            modulation: self.modulation,
            seed: self.seed,
            snr_db: self.snr_db,
            n_symbols: self.n_symbols,
            ns: self.ns,
            h: self.h,
        }
    }
}

/// Synthesize, impair and return one received burst centered at 0.
///
/// Draw order from the seeded stream: roll-off index, timing
/// (`eps`, `eps0`, `k0`), channel, symbols, noise.
pub fn realize(spec: &RealizationSpec) -> Result<(RealizationParams, Vec<Complex64>)> {
    if spec.n_symbols < 1 {
        return Err(Error::InvalidArgument("n_symbols must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rolloff = rng.random_range(1..=10) as f64 / 10.0;
    let timing = SymbolTiming::draw(spec.ns, &mut rng);
    let channel = draw_channel(&mut rng, 0.0, timing.k0, spec.snr_db);

    let n_samples = (spec.n_symbols as f64 * timing.symbol_period()).floor() as usize;
    let clean_len = n_samples + timing.k0;

    let (clean, pulse_scale) = if let Some(order) = spec.modulation.cpfsk_order() {
        let scheme = CpfskScheme::new(order, spec.h, timing.symbol_period())?;
        let tones = scheme.draw_tones(cpfsk_symbols_needed(clean_len, &timing), &mut rng);
        (modulate_cpfsk(&tones, &scheme, &timing, clean_len)?, None)
    } else {
        let scheme = LinearScheme::for_modulation(spec.modulation).expect("linear modulation");
        let pulse = RrcPulse::normalized(rolloff)?;
        let symbols = scheme.draw_symbols(linear_symbols_needed(clean_len, &pulse, &timing), &mut rng);
        (modulate_linear(&symbols, &pulse, &timing, clean_len)?, Some(pulse.amplitude_scale))
    };
    let received = apply_channel(&clean, &channel, &mut rng)?;

    let params = RealizationParams {
        modulation: spec.modulation,
        seed: spec.seed,
        snr_db: spec.snr_db,
        n_symbols: spec.n_symbols,
        ns: spec.ns,
        h: spec.h,
        rolloff,
        pulse_scale,
        timing,
        channel,
        n_samples: received.len(),
    };
    Ok((params, received))
}

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::realization::{realize, RealizationSpec};
use crate::classifiers::ClassifierKind;
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector};
use crate::waveform::Modulation;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0u64, |acc, &p| splitmix64(acc ^ p))
}

const REALIZATION_STREAM: u64 = 0x5245_414c; // "REAL"
const TRAINING_STREAM: u64 = 0x5452_4149; // "TRAI"

/// Seed of one realization; any realization can be replayed from it alone.
pub fn child_seed(master: u64, modulation: Modulation, index: usize, snr_index: usize) -> u64 {
    mix(&[REALIZATION_STREAM, master, modulation.id(), snr_index as u64, index as u64])
}

/// Seed handed to a trainer at one sweep grid point.
pub fn training_seed(master: u64, classifier: ClassifierKind, training_size: usize, snr_index: usize) -> u64 {
    let cid = ClassifierKind::ALL.iter().position(|&c| c == classifier).unwrap_or(0) as u64;
    mix(&[TRAINING_STREAM, master, cid, training_size as u64, snr_index as u64])
}

/// Feature rows for every configured modulation at one grid SNR, ordered by
/// modulation (config order) then realization index.
pub fn generate_dataset(config: &ExperimentConfig, snr_index: usize) -> Result<Vec<FeatureVector>> {
    let snr_db = *config
        .snr_grid_db
        .get(snr_index)
        .ok_or_else(|| Error::InvalidArgument(format!("SNR index {snr_index} outside the grid")))?;
    generate_dataset_at(config, snr_index, snr_db)
}

/// As [`generate_dataset`] with an explicit SNR value.
pub fn generate_dataset_at(config: &ExperimentConfig, snr_index: usize, snr_db: f64) -> Result<Vec<FeatureVector>> {
    let master = config.require_seed()?;
    let jobs: Vec<(Modulation, usize)> =
        config.modulations.iter().flat_map(|&m| (0..config.n_per_modulation).map(move |i| (m, i))).collect();
    jobs.par_iter()
        .map(|&(modulation, index)| {
            let spec = RealizationSpec {
                modulation,
                seed: child_seed(master, modulation, index, snr_index),
                snr_db,
                n_symbols: config.n_symbols,
                ns: config.ns,
                h: config.h,
            };
            realize(&spec)
                .and_then(|(_, s)| extract_features(&s))
                .map(|f| FeatureVector::new(f, modulation, snr_db, spec.seed))
                .map_err(|e| Error::Realization { modulation, index, source: Box::new(e) })
        })
        .collect()
}

/// First `training_size` rows of each modulation train; the rest test.
pub fn split_train_test(
    rows: &[FeatureVector],
    training_size: usize,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>)> {
    let mut seen: Vec<(Modulation, usize)> = Vec::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in rows {
        let count = match seen.iter_mut().find(|(m, _)| *m == r.modulation) {
            Some((_, c)) => c,
            None => {
                seen.push((r.modulation, 0));
                &mut seen.last_mut().expect("just pushed").1
            }
        };
        if *count < training_size {
            train.push(*r);
        } else {
            test.push(*r);
        }
        *count += 1;
    }
    if let Some((m, c)) = seen.iter().find(|(_, c)| *c <= training_size) {
        return Err(Error::InvalidArgument(format!(
            "training size {training_size} leaves no test rows for {m} ({c} available)"
        )));
    }
    Ok((train, test))
}

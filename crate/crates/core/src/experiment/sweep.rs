use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::dataset::{generate_dataset, split_train_test, training_seed};
use crate::classifiers::{ClassifierKind, ModelFile};
use crate::error::{Error, Result};
use crate::features::{fmt_real, FeatureVector};

pub const SWEEP_CSV_HEADER: [&str; 6] = ["classifier", "training_size", "snr_db", "accuracy", "n_test", "seed"];

/// One grid point. `seed` is the trainer seed used there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub classifier: ClassifierKind,
    pub training_size: usize,
    pub snr_db: f64,
    pub accuracy: f64,
    pub n_test: usize,
    pub seed: u64,
}

/// Rows in canonical order: classifier, then training size, then SNR, each
/// in config order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn get(&self, classifier: ClassifierKind, training_size: usize, snr_db: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.classifier == classifier && r.training_size == training_size && r.snr_db == snr_db)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.classifier.name().to_string(),
                r.training_size.to_string(),
                fmt_real(r.snr_db),
                fmt_real(r.accuracy),
                r.n_test.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != SWEEP_CSV_HEADER {
            return Err(Error::Format(format!("unexpected sweep header {header:?}")));
        }
        let rows = rd
            .records()
            .map(|rec| {
                let rec = rec?;
                let field = |i: usize| rec.get(i).unwrap_or("");
                let bad =
                    |name: &str| Error::Format(format!("bad {name} '{}'", rec.iter().collect::<Vec<_>>().join(",")));
                Ok(SweepRow {
                    classifier: field(0).parse().map_err(|_| bad("classifier"))?,
                    training_size: field(1).parse().map_err(|_| bad("training_size"))?,
                    snr_db: field(2).parse().map_err(|_| bad("snr_db"))?,
                    accuracy: field(3).parse().map_err(|_| bad("accuracy"))?,
                    n_test: field(4).parse().map_err(|_| bad("n_test"))?,
                    seed: field(5).parse().map_err(|_| bad("seed"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepResult { rows })
    }
}

/// Run the sweep on the current rayon pool.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let master = config.require_seed()?;
    let datasets: Vec<Vec<FeatureVector>> =
        (0..config.snr_grid_db.len()).map(|si| generate_dataset(config, si)).collect::<Result<_>>()?;

    let mut grid = Vec::new();
    for &classifier in &config.classifiers {
        for &size in &config.training_sizes {
            for si in 0..config.snr_grid_db.len() {
                grid.push((classifier, size, si));
            }
        }
    }
    let rows = grid
        .par_iter()
        .map(|&(classifier, size, si)| {
            let (train, test) = split_train_test(&datasets[si], size)?;
            let seed = training_seed(master, classifier, size, si);
            let model = ModelFile::fit(classifier, &train, &config.train, seed)?;
            Ok(SweepRow {
                classifier,
                training_size: size,
                snr_db: config.snr_grid_db[si],
                accuracy: model.accuracy_on(&test)?,
                n_test: test.len(),
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// Run the sweep on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(config: &ExperimentConfig, workers: usize) -> Result<SweepResult> {
    if workers == 0 {
        return Err(Error::InvalidArgument("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::Preset;
    use crate::waveform::Modulation;

    fn tiny() -> ExperimentConfig {
        let mut c = ExperimentConfig::preset(Preset::Ci);
        c.modulations = vec![Modulation::Bpsk, Modulation::Bfsk];
        c.n_per_modulation = 30;
        c.n_symbols = 60;
        c.training_sizes = vec![10];
        c.snr_grid_db = vec![0.0, 10.0, 20.0];
        c.classifiers = vec![ClassifierKind::LogReg];
        c.master_seed = Some(3);
        c
    }

    #[test]
    fn one_row_per_grid_point() {
        let r = run_sweep(&tiny()).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.n_test == 40 && (0.0..=1.0).contains(&row.accuracy)));
        assert!(r.get(ClassifierKind::LogReg, 10, 10.0).is_some());
    }

    #[test]
    fn csv_round_trip() {
        let r = run_sweep(&tiny()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("classifier,training_size,snr_db,accuracy,n_test,seed\n"));
        assert_eq!(SweepResult::read_csv(buf.as_slice()).unwrap(), r);
    }

    #[test]
    fn oversized_training_set_is_an_error() {
        let mut c = tiny();
        c.training_sizes = vec![30];
        assert!(run_sweep(&c).is_err());
    }
}

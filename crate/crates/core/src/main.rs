use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modrec::classifiers::{ClassifierKind, ModelFile, TrainConfig};
use modrec::experiment::{
    export_iq, generate_dataset, oracle_check, run_sweep_with_workers, ConfigOverrides, ExperimentConfig,
    OracleCheckOptions, Preset, RealizationSpec,
};
use modrec::features::{read_csv, write_csv};
use modrec::waveform::Modulation;
use modrec::{Error, Result};

#[derive(Parser)]
#[command(name = "modrec", version, about = "CPFSK vs PSK/QAM recognition from lag-product features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate realizations and write their features as CSV.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Only this grid SNR (default: every grid point).
        #[arg(long = "snr-db", alias = "snr_db", allow_negative_numbers = true)]
        snr_db: Option<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Fit a classifier on a features CSV.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        classifier: ClassifierKind,
        #[arg(long, short)]
        out: PathBuf,
        /// Trainer seed (network initialization and batching).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML file; only trainer keys are used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Accuracy of a model file on a features CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Accuracy over the classifier x training size x SNR grid.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check the closed-form statistics against Monte-Carlo.
    OracleCheck {
        #[arg(long, default_value_t = OracleCheckOptions::default().draws)]
        draws: usize,
        #[arg(long, default_value_t = OracleCheckOptions::default().seed)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Write one realization as raw IQ plus a JSON sidecar.
    ExportIq {
        #[arg(long)]
        modulation: Modulation,
        #[arg(long)]
        seed: u64,
        #[arg(long = "snr-db", alias = "snr_db", allow_negative_numbers = true)]
        snr_db: f64,
        #[arg(long = "n-symbols", alias = "n_symbols", default_value_t = 600)]
        n_symbols: usize,
        #[arg(long, default_value_t = 6)]
        ns: u32,
        #[arg(long, default_value_t = 0.5)]
        h: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Flags mirroring the config file keys.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    /// Comma-separated, e.g. BPSK,BFSK.
    #[arg(long, value_delimiter = ',')]
    modulations: Option<Vec<String>>,
    #[arg(long = "n-per-modulation", alias = "n_per_modulation")]
    n_per_modulation: Option<usize>,
    #[arg(long = "n-symbols", alias = "n_symbols")]
    n_symbols: Option<usize>,
    #[arg(long)]
    ns: Option<u32>,
    #[arg(long)]
    h: Option<f64>,
    /// Comma-separated dB values.
    #[arg(long = "snr-grid-db", alias = "snr_grid_db", value_delimiter = ',', allow_negative_numbers = true)]
    snr_grid_db: Option<Vec<f64>>,
    #[arg(long = "training-sizes", alias = "training_sizes", value_delimiter = ',')]
    training_sizes: Option<Vec<usize>>,
    /// Comma-separated: SVM,LR,NN.
    #[arg(long, value_delimiter = ',')]
    classifiers: Option<Vec<String>>,
    /// Master seed.
    #[arg(long, aliases = ["master-seed", "master_seed"])]
    seed: Option<u64>,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args, Debug, Default)]
struct TrainArgs {
    #[arg(long = "svm-c", alias = "svm_c")]
    svm_c: Option<f64>,
    #[arg(long = "svm-max-epochs", alias = "svm_max_epochs")]
    svm_max_epochs: Option<usize>,
    #[arg(long = "svm-tolerance", alias = "svm_tolerance")]
    svm_tolerance: Option<f64>,
    #[arg(long = "lr-max-iterations", alias = "lr_max_iterations")]
    lr_max_iterations: Option<usize>,
    #[arg(long = "lr-gradient-tolerance", alias = "lr_gradient_tolerance")]
    lr_gradient_tolerance: Option<f64>,
    #[arg(long = "nn-epochs", alias = "nn_epochs")]
    nn_epochs: Option<usize>,
    #[arg(long = "nn-batch-size", alias = "nn_batch_size")]
    nn_batch_size: Option<usize>,
    #[arg(long = "nn-learning-rate", alias = "nn_learning_rate")]
    nn_learning_rate: Option<f64>,
    #[arg(long = "nn-validation-fraction", alias = "nn_validation_fraction")]
    nn_validation_fraction: Option<f64>,
}

impl TrainArgs {
    fn fill(&self, o: &mut ConfigOverrides) {
        o.svm_c = self.svm_c;
        o.svm_max_epochs = self.svm_max_epochs;
        o.svm_tolerance = self.svm_tolerance;
        o.lr_max_iterations = self.lr_max_iterations;
        o.lr_gradient_tolerance = self.lr_gradient_tolerance;
        o.nn_epochs = self.nn_epochs;
        o.nn_batch_size = self.nn_batch_size;
        o.nn_learning_rate = self.nn_learning_rate;
        o.nn_validation_fraction = self.nn_validation_fraction;
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut o = ConfigOverrides {
            preset: self.preset,
            modulations: self.modulations.clone(),
            n_per_modulation: self.n_per_modulation,
            n_symbols: self.n_symbols,
            ns: self.ns,
            h: self.h,
            snr_grid_db: self.snr_grid_db.clone(),
            training_sizes: self.training_sizes.clone(),
            classifiers: self.classifiers.clone(),
            master_seed: self.seed,
            ..Default::default()
        };
        self.train.fill(&mut o);
        for m in o.modulations.iter().flatten() {
            m.parse::<Modulation>()?;
        }
        for c in o.classifiers.iter().flatten() {
            c.parse::<ClassifierKind>()?;
        }
        ExperimentConfig::resolve(self.config.as_deref(), &o)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| io_err(path, e))?))
}

fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

enum Outcome {
    Ok,
    OracleFailure,
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Generate { config, snr_db, out } => {
            let cfg = config.resolve()?;
            cfg.require_seed()?;
            let indices: Vec<usize> = match snr_db {
                Some(s) => vec![cfg.snr_grid_db.iter().position(|&g| g == s).ok_or_else(|| {
                    Error::InvalidArgument(format!("SNR {s} dB is not on the grid {:?}", cfg.snr_grid_db))
                })?],
                None => (0..cfg.snr_grid_db.len()).collect(),
            };
            let mut rows = Vec::new();
            for i in indices {
                rows.extend(generate_dataset(&cfg, i)?);
            }
            let mut w = output(out.as_deref())?;
            write_csv(&rows, &mut w)?;
            w.flush().map_err(|e| io_err(Path::new("<output>"), e))?;
        }
        Command::Train { features, classifier, out, seed, config, train } => {
            let mut o = match &config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
                    ConfigOverrides::from_toml(&text)?
                }
                None => ConfigOverrides::default(),
            };
            let mut flags = ConfigOverrides::default();
            train.fill(&mut flags);
            let mut cfg = ExperimentConfig::preset(Preset::Desk);
            o.master_seed = None;
            o.apply(&mut cfg);
            flags.apply(&mut cfg);
            let tc: TrainConfig = cfg.train;
            let rows = read_csv(open(&features)?)?;
            let model = ModelFile::fit(classifier, &rows, &tc, seed)?;
            std::fs::write(&out, model.to_json()?).map_err(|e| io_err(&out, e))?;
            eprintln!(
                "{}: trained on {} rows, converged={}, objective={:.6}",
                classifier, model.training.n_train, model.training.converged, model.training.objective
            );
        }
        Command::Evaluate { model, features } => {
            let text = std::fs::read_to_string(&model).map_err(|e| io_err(&model, e))?;
            let m = ModelFile::from_json(&text)?;
            let rows = read_csv(open(&features)?)?;
            let acc = m.accuracy_on(&rows)?;
            println!("classifier={} n={} accuracy={acc:.6}", m.classifier, rows.len());
        }
        Command::Sweep { config, workers, out } => {
            let cfg = config.resolve()?;
            cfg.require_seed()?;
            let result = run_sweep_with_workers(&cfg, workers)?;
            let mut w = output(out.as_deref())?;
            result.write_csv(&mut w)?;
            w.flush().map_err(|e| io_err(Path::new("<output>"), e))?;
        }
        Command::OracleCheck { draws, seed, out, inject_fault } => {
            let report = oracle_check(&OracleCheckOptions { draws, seed, inject_fault })?;
            let mut w = output(out.as_deref())?;
            report.write_csv(&mut w)?;
            w.flush().map_err(|e| io_err(Path::new("<output>"), e))?;
            if !report.all_pass() {
                eprintln!("oracle check: {} of {} rows failed", report.failures(), report.rows.len());
                return Ok(Outcome::OracleFailure);
            }
        }
        Command::ExportIq { modulation, seed, snr_db, n_symbols, ns, h, out } => {
            let spec = RealizationSpec { modulation, seed, snr_db, n_symbols, ns, h };
            let params = export_iq(&spec, &out)?;
            eprintln!("wrote {} samples to {}", params.n_samples, out.display());
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::OracleFailure) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}

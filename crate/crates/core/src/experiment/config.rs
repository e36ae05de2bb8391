use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, TrainConfig};
use crate::error::{Error, Result};
use crate::waveform::Modulation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 10000 realizations per modulation, 600 symbols.
    Paper,
    /// 3000 realizations per modulation, 600 symbols.
    Desk,
    /// 200 realizations per modulation, 150 symbols.
    Ci,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            "ci" => Ok(Preset::Ci),
            _ => Err(Error::Config(format!("unknown preset '{s}'"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
            Preset::Ci => "ci",
        })
    }
}

pub const DEFAULT_SNR_GRID_DB: [f64; 7] = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub modulations: Vec<Modulation>,
    pub n_per_modulation: usize,
    pub n_symbols: usize,
    pub ns: u32,
    pub h: f64,
    pub snr_grid_db: Vec<f64>,
    /// Training realizations per modulation.
    pub training_sizes: Vec<usize>,
    pub classifiers: Vec<ClassifierKind>,
    pub master_seed: Option<u64>,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let (n_per_modulation, n_symbols, training_sizes) = match preset {
            Preset::Paper => (10_000, 600, vec![50, 100, 200, 500, 1000, 2000]),
            Preset::Desk => (3000, 600, vec![50, 100, 200, 500, 1000, 2000]),
            Preset::Ci => (200, 150, vec![50, 100]),
        };
        ExperimentConfig {
            preset,
            modulations: Modulation::ALL.to_vec(),
            n_per_modulation,
            n_symbols,
            ns: 6,
            h: 0.5,
            snr_grid_db: DEFAULT_SNR_GRID_DB.to_vec(),
            training_sizes,
            classifiers: ClassifierKind::ALL.to_vec(),
            master_seed: None,
            train: TrainConfig::default(),
        }
    }

    /// Preset defaults, then the TOML file (if any), then `overrides`.
    pub fn resolve(file: Option<&Path>, overrides: &ConfigOverrides) -> Result<Self> {
        let from_file = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                ConfigOverrides::from_toml(&text)?
            }
            None => ConfigOverrides::default(),
        };
        let preset = overrides.preset.or(from_file.preset).unwrap_or(Preset::Desk);
        let mut cfg = ExperimentConfig::preset(preset);
        from_file.apply(&mut cfg);
        overrides.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.modulations.is_empty() {
            return fail("modulations must not be empty".into());
        }
        if self.n_per_modulation < 1 || self.n_symbols < 1 {
            return fail("n_per_modulation and n_symbols must be >= 1".into());
        }
        if self.ns < 1 {
            return fail("ns must be >= 1".into());
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return fail(format!("h = {} must be positive", self.h));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| s.is_nan()) {
            return fail("snr_grid_db must be a non-empty list of numbers".into());
        }
        if self.classifiers.is_empty() {
            return fail("classifiers must not be empty".into());
        }
        for &t in &self.training_sizes {
            if t < 1 || t >= self.n_per_modulation {
                return fail(format!("training size {t} must be in 1..{} (n_per_modulation)", self.n_per_modulation));
            }
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.master_seed.ok_or_else(|| Error::Config("a master seed is required (--seed or master_seed)".into()))
    }
}

/// Optional value for every config key; used for both the TOML file and
/// the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub preset: Option<Preset>,
    pub modulations: Option<Vec<String>>,
    pub n_per_modulation: Option<usize>,
    pub n_symbols: Option<usize>,
    pub ns: Option<u32>,
    pub h: Option<f64>,
    pub snr_grid_db: Option<Vec<f64>>,
    pub training_sizes: Option<Vec<usize>>,
    pub classifiers: Option<Vec<String>>,
    pub master_seed: Option<u64>,
    pub svm_c: Option<f64>,
    pub svm_max_epochs: Option<usize>,
    pub svm_tolerance: Option<f64>,
    pub lr_max_iterations: Option<usize>,
    pub lr_gradient_tolerance: Option<f64>,
    pub nn_epochs: Option<usize>,
    pub nn_batch_size: Option<usize>,
    pub nn_learning_rate: Option<f64>,
    pub nn_validation_fraction: Option<f64>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        let parsed: ConfigOverrides = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        parsed.check_names()?;
        Ok(parsed)
    }

    fn check_names(&self) -> Result<()> {
        for m in self.modulations.iter().flatten() {
            m.parse::<Modulation>().map_err(|e| Error::Config(e.to_string()))?;
        }
        for c in self.classifiers.iter().flatten() {
            c.parse::<ClassifierKind>().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.preset {
            cfg.preset = v;
        }
        if let Some(v) = &self.modulations {
            cfg.modulations = v.iter().filter_map(|m| m.parse().ok()).collect();
        }
        if let Some(v) = self.n_per_modulation {
            cfg.n_per_modulation = v;
        }
        if let Some(v) = self.n_symbols {
            cfg.n_symbols = v;
        }
        if let Some(v) = self.ns {
            cfg.ns = v;
        }
        if let Some(v) = self.h {
            cfg.h = v;
        }
        if let Some(v) = &self.snr_grid_db {
            cfg.snr_grid_db = v.clone();
        }
        if let Some(v) = &self.training_sizes {
            cfg.training_sizes = v.clone();
        }
        if let Some(v) = &self.classifiers {
            cfg.classifiers = v.iter().filter_map(|c| c.parse().ok()).collect();
        }
        if let Some(v) = self.master_seed {
            cfg.master_seed = Some(v);
        }
        let t = &mut cfg.train;
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { t.$f = v; } )* };
        }
        set!(
            svm_c,
            svm_max_epochs,
            svm_tolerance,
            lr_max_iterations,
            lr_gradient_tolerance,
            nn_epochs,
            nn_batch_size,
            nn_learning_rate,
            nn_validation_fraction
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for p in [Preset::Paper, Preset::Desk, Preset::Ci] {
            ExperimentConfig::preset(p).validate().unwrap();
        }
        let paper = ExperimentConfig::preset(Preset::Paper);
        assert_eq!((paper.n_per_modulation, paper.n_symbols, paper.ns, paper.h), (10_000, 600, 6, 0.5));
        assert_eq!(paper.modulations.len(), 7);
    }

    #[test]
    fn file_then_flags() {
        let toml = r#"
            preset = "ci"
            modulations = ["BPSK", "BFSK"]
            n_per_modulation = 30
            training_sizes = [10]
            snr_grid_db = [0.0, 10.0]
            master_seed = 5
            nn_epochs = 3
        "#;
        let file = ConfigOverrides::from_toml(toml).unwrap();
        let mut cfg = ExperimentConfig::preset(file.preset.unwrap());
        file.apply(&mut cfg);
        let flags = ConfigOverrides { master_seed: Some(9), n_symbols: Some(40), ..Default::default() };
        flags.apply(&mut cfg);
        cfg.validate().unwrap();
        assert_eq!(cfg.modulations, vec![Modulation::Bpsk, Modulation::Bfsk]);
        assert_eq!(cfg.master_seed, Some(9));
        assert_eq!(cfg.n_symbols, 40);
        assert_eq!(cfg.train.nn_epochs, 3);
        assert_eq!(cfg.snr_grid_db, vec![0.0, 10.0]);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(ConfigOverrides::from_toml("bogus_key = 1").is_err());
        assert!(ConfigOverrides::from_toml("modulations = [\"64QAM\"]").is_err());
        let mut cfg = ExperimentConfig::preset(Preset::Ci);
        cfg.training_sizes = vec![200];
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::preset(Preset::Ci).require_seed().is_err());
    }
}

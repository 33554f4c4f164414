//! Resolution of the effective experiment configuration: built-in defaults,
//! then the TOML config file, then command-line overrides. Everything is
//! validated before any computation starts.

use std::path::{Path, PathBuf};

use skewid::harness::ExperimentConfig;
use skewid::{Error, Result};

use crate::CommonArgs;

/// The fully-resolved invocation of one subcommand.
pub struct RunManifest {
    pub subcommand: &'static str,
    pub config_path: Option<PathBuf>,
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
}

impl RunManifest {
    pub fn resolve(subcommand: &'static str, common: &CommonArgs) -> Result<Self> {
        let mut config = match &common.config {
            Some(path) => parse_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = common.seed {
            config.master_seed = seed;
        }
        if let Some(steps) = common.steps {
            config.steps = steps;
        }
        if let Some(gamma) = common.gamma {
            config.gamma = gamma;
        }
        if let Some(iters) = common.vb_iters {
            config.vb_iterations = iters;
        }
        config.validate()?;
        Ok(Self {
            subcommand,
            config_path: common.config.clone(),
            config,
            out_dir: common.out.clone(),
        })
    }

    /// Comment line embedding the resolved config into CSV outputs.
    pub fn config_comment(&self) -> String {
        format!(
            "# skewid {} config_hash={} config={}",
            self.subcommand,
            self.config.hash(),
            serde_json::to_string(&self.config).expect("config serializes")
        )
    }

    pub fn ensure_out_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(())
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_of_defaults() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn partial_toml_takes_defaults() {
        let cfg: ExperimentConfig =
            toml::from_str("steps = 50\nreplications = 2\n").unwrap();
        assert_eq!(cfg.steps, 50);
        assert_eq!(cfg.replications, 2);
        assert_eq!(cfg.n_ar, 25);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<ExperimentConfig>("stepz = 50\n");
        assert!(err.is_err());
    }
}

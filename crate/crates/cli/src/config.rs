//! Pipeline defaults and their override chain: command-line flags beat
//! the TOML config file, which beats the `PPT_SEED` environment variable
//! (seed only), which beats the built-in defaults.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Shared pipeline settings. Defaults are the 16 kHz / 50 fps operating
/// point: hop 320, 200 clusters, batch 10000, order-5 LM, temperature
/// 0.7, 90 generated sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub hop: u32,
    pub sample_rate: u32,
    pub k: usize,
    pub kmeans_batch: usize,
    pub lm_order: usize,
    pub temperature: f64,
    pub gen_count: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            hop: 320,
            sample_rate: 16000,
            k: 200,
            kmeans_batch: 10_000,
            lm_order: 5,
            temperature: 0.7,
            gen_count: 90,
            seed: 0,
        }
    }
}

/// TOML overlay; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    hop: Option<u32>,
    sample_rate: Option<u32>,
    k: Option<usize>,
    kmeans_batch: Option<usize>,
    lm_order: Option<usize>,
    temperature: Option<f64>,
    gen_count: Option<usize>,
    seed: Option<u64>,
}

impl PipelineConfig {
    /// Resolve the effective configuration from an optional config file
    /// and an optional `--seed` flag.
    pub fn resolve(config_path: Option<&Path>, cli_seed: Option<u64>) -> Result<Self, CliError> {
        let mut cfg = PipelineConfig::default();

        let file = match config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str::<ConfigFile>(&text)
                    .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };

        macro_rules! overlay {
            ($($field:ident),*) => {
                $(if let Some(v) = file.$field { cfg.$field = v; })*
            };
        }
        overlay!(
            hop,
            sample_rate,
            k,
            kmeans_batch,
            lm_order,
            temperature,
            gen_count,
            seed
        );

        // Seed precedence: flag, then file, then PPT_SEED, then default.
        if let Some(seed) = cli_seed {
            cfg.seed = seed;
        } else if file.seed.is_none() {
            if let Ok(env_seed) = std::env::var("PPT_SEED") {
                cfg.seed = env_seed.parse().map_err(|_| {
                    CliError::Config(format!("PPT_SEED is not an integer: {env_seed:?}"))
                })?;
            }
        }

        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("hop", self.hop as f64),
            ("sample_rate", self.sample_rate as f64),
            ("k", self.k as f64),
            ("kmeans_batch", self.kmeans_batch as f64),
            ("lm_order", self.lm_order as f64),
            ("temperature", self.temperature),
            ("gen_count", self.gen_count as f64),
        ];
        for (name, value) in positive {
            if value <= 0.0 || !value.is_finite() {
                return Err(CliError::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

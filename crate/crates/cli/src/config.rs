//! Run parameters: command-line flags over a TOML file over defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use logent::ingest::DEFAULT_WINDOW_BYTES;
use logent::HampelConfig;
use serde::Deserialize;

/// Parameters shared by every command. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML file of `key = value` parameters
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Model order n
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Additive smoothing constant; 0 trains a maximum-likelihood model
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Target window size in bytes
    #[arg(long, global = true)]
    pub window_bytes: Option<u64>,
    #[arg(long, global = true)]
    pub hampel_half_width: Option<usize>,
    #[arg(long, global = true)]
    pub hampel_k: Option<f64>,
    /// Flag only windows above the local median
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub one_sided: Option<bool>,
    /// Join flagged runs separated by at most this many windows
    #[arg(long, global = true)]
    pub gap_bridge: Option<usize>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    #[serde(alias = "n")]
    order: Option<usize>,
    alpha: Option<f64>,
    #[serde(alias = "window_bytes")]
    window_bytes: Option<u64>,
    #[serde(alias = "hampel_half_width")]
    hampel_half_width: Option<usize>,
    #[serde(alias = "hampel_k")]
    hampel_k: Option<f64>,
    #[serde(alias = "one_sided")]
    one_sided: Option<bool>,
    #[serde(alias = "gap_bridge")]
    gap_bridge: Option<usize>,
    folds: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub order: usize,
    pub alpha: f64,
    pub window_bytes: u64,
    pub hampel: HampelConfig,
    pub gap_bridge: usize,
    pub folds: usize,
    /// `None` when neither flag nor file sets a seed.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            order: 5,
            alpha: 1.0,
            window_bytes: DEFAULT_WINDOW_BYTES,
            hampel: HampelConfig::default(),
            gap_bridge: 0,
            folds: 10,
            seed: None,
        }
    }
}

impl RunConfig {
    /// Resolves and validates the effective configuration.
    pub fn resolve(flags: &Overrides) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let d = RunConfig::default();
        let cfg = RunConfig {
            order: flags.order.or(file.order).unwrap_or(d.order),
            alpha: flags.alpha.or(file.alpha).unwrap_or(d.alpha),
            window_bytes: flags
                .window_bytes
                .or(file.window_bytes)
                .unwrap_or(d.window_bytes),
            hampel: HampelConfig {
                half_width: flags
                    .hampel_half_width
                    .or(file.hampel_half_width)
                    .unwrap_or(d.hampel.half_width),
                k: flags.hampel_k.or(file.hampel_k).unwrap_or(d.hampel.k),
                one_sided: flags
                    .one_sided
                    .or(file.one_sided)
                    .unwrap_or(d.hampel.one_sided),
                ..d.hampel
            },
            gap_bridge: flags.gap_bridge.or(file.gap_bridge).unwrap_or(d.gap_bridge),
            folds: flags.folds.or(file.folds).unwrap_or(d.folds),
            seed: flags.seed.or(file.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.order == 0 {
            bail!("order must be at least 1");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            bail!(
                "alpha must be a finite non-negative number, got {}",
                self.alpha
            );
        }
        if self.window_bytes == 0 {
            bail!("window-bytes must be positive");
        }
        if self.folds < 2 {
            bail!("folds must be at least 2, got {}", self.folds);
        }
        self.hampel.validate().map_err(anyhow::Error::msg)
    }
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("bad config {}", path.display()))
}

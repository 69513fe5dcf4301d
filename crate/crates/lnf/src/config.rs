//! Declarative experiment configuration.
//!
//! A config file plus the code version fully determines a run. Unknown
//! keys are rejected so typos fail loudly instead of silently using a
//! default.

use std::path::{Path, PathBuf};

use lnf_core::data::{ShapeFamily, SyntheticSpec};
use lnf_core::features::AugmentationMode;
use lnf_core::neighborhood::BallQueryConfig;
use lnf_core::network::{ModelConfig, StageConfig};
use lnf_core::training::{OptimizerKind, TrainRecipe};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "LNF_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "source", rename_all = "snake_case")]
pub enum DatasetConfig {
    /// Generated shape dataset.
    Synthetic {
        #[serde(default = "default_classes")]
        classes: Vec<String>,
        #[serde(default = "default_clouds_per_class")]
        clouds_per_class: usize,
        #[serde(default = "default_points_per_cloud")]
        points_per_cloud: usize,
        #[serde(default = "default_noise_sigma")]
        noise_sigma: f64,
        #[serde(default = "default_data_seed")]
        seed: u64,
    },
    /// `<root>/<class_name>/<split>/<file>` directory of .xyz / .off files.
    Directory {
        root: PathBuf,
        #[serde(default = "default_points_per_cloud")]
        points_per_cloud: usize,
    },
}

fn default_classes() -> Vec<String> {
    ShapeFamily::ALL.iter().map(|f| f.name().to_string()).collect()
}
fn default_clouds_per_class() -> usize {
    50
}
fn default_points_per_cloud() -> usize {
    512
}
fn default_noise_sigma() -> f64 {
    0.02
}
fn default_data_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSection {
    pub anchors: usize,
    pub radius: f64,
    pub k_max: usize,
    pub lift: Vec<usize>,
    #[serde(default)]
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub stages: Option<Vec<StageSection>>,
    #[serde(default)]
    pub head: Option<Vec<usize>>,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_true")]
    pub normalize_distance: bool,
}

fn default_mode() -> String {
    "both".to_string()
}
fn default_true() -> bool {
    true
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            stages: None,
            head: None,
            mode: default_mode(),
            normalize_distance: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_lr_min")]
    pub lr_min: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

fn default_optimizer() -> String {
    "adamw".to_string()
}
fn default_lr() -> f64 {
    1e-3
}
fn default_lr_min() -> f64 {
    1e-5
}
fn default_epochs() -> usize {
    100
}
fn default_batch_size() -> usize {
    16
}
fn default_weight_decay() -> f64 {
    1e-4
}
fn default_momentum() -> f64 {
    0.9
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

impl Default for TrainSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

pub fn parse_mode(s: &str) -> Result<AugmentationMode, ConfigError> {
    match s {
        "base" => Ok(AugmentationMode::Base),
        "distance" => Ok(AugmentationMode::Distance),
        "vectors" => Ok(AugmentationMode::Vectors),
        "both" => Ok(AugmentationMode::Both),
        other => Err(ConfigError::Schema(format!(
            "unknown augmentation mode {other:?} (expected base|distance|vectors|both)"
        ))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Schema(e.to_string()))
    }

    pub fn synthetic_spec(&self) -> Result<Option<SyntheticSpec>, ConfigError> {
        match &self.dataset {
            DatasetConfig::Synthetic {
                classes,
                clouds_per_class,
                points_per_cloud,
                noise_sigma,
                seed,
            } => {
                let families = classes
                    .iter()
                    .map(|name| {
                        ShapeFamily::from_name(name).ok_or_else(|| {
                            ConfigError::Schema(format!("unknown shape class {name:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Some(SyntheticSpec {
                    classes: families,
                    clouds_per_class: *clouds_per_class,
                    points_per_cloud: *points_per_cloud,
                    noise_sigma: *noise_sigma,
                    seed: *seed,
                }))
            }
            DatasetConfig::Directory { .. } => Ok(None),
        }
    }

    pub fn model_config(&self, num_classes: usize) -> Result<ModelConfig, ConfigError> {
        let mode = parse_mode(&self.model.mode)?;
        let mut cfg = ModelConfig::desk_scale(num_classes, mode);
        cfg.normalize_distance = self.model.normalize_distance;
        if let Some(stages) = &self.model.stages {
            cfg.stages = stages
                .iter()
                .map(|s| {
                    Ok(StageConfig {
                        anchors: s.anchors,
                        ball: BallQueryConfig { radius: s.radius, k_max: s.k_max },
                        lift_widths: s.lift.clone(),
                        mode_override: s.mode.as_deref().map(parse_mode).transpose()?,
                    })
                })
                .collect::<Result<Vec<_>, ConfigError>>()?;
        }
        if let Some(head) = &self.model.head {
            cfg.head_hidden = head.clone();
        }
        Ok(cfg)
    }

    pub fn recipe(&self) -> Result<TrainRecipe, ConfigError> {
        let optimizer = match self.train.optimizer.as_str() {
            "adamw" => OptimizerKind::AdamW,
            "sgd" => OptimizerKind::Sgd,
            other => {
                return Err(ConfigError::Schema(format!(
                    "unknown optimizer {other:?} (expected adamw|sgd)"
                )))
            }
        };
        Ok(TrainRecipe {
            optimizer,
            lr: self.train.lr,
            lr_min: self.train.lr_min,
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            weight_decay: self.train.weight_decay,
            momentum: self.train.momentum,
            seed: *self.train.seeds.first().unwrap_or(&1),
        })
    }

    /// Output directory: explicit config value, else `LNF_OUTPUT_ROOT`,
    /// else `./runs`.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(d) = &self.output.dir {
            return d.clone();
        }
        std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
    }
}

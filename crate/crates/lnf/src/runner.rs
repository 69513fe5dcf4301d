//! Experiment orchestration shared by the CLI commands.

use std::fs;
use std::path::{Path, PathBuf};

use lnf_core::data::{generate, sample_surface, DatasetSplit};
use lnf_core::training::{
    self, additive_ablation, distance_ablation, evaluate, soup_params, soup_sweep, Checkpoint,
    CheckpointStore, EvalResult, TrainOutcome, SOUP_SWEEP_KS,
};
use lnf_core::{normalize_unit_sphere, PointCloud, Rng};
use thiserror::Error;

use crate::checkpoint_io::{self, CheckpointError};
use crate::config::{ConfigError, DatasetConfig, RunConfig};
use crate::formats::{self, FormatError};
use crate::report::{self, RunSummary};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(lnf_core::Error),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<lnf_core::Error> for RunnerError {
    fn from(e: lnf_core::Error) -> Self {
        RunnerError::Core(e)
    }
}

impl RunnerError {
    /// Process exit code: 2 config/usage, 3 numeric failure, 4 incompatible
    /// artifacts.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunnerError::Core(lnf_core::Error::Diverged { .. }) => 3,
            RunnerError::Core(lnf_core::Error::IncompatibleCheckpoints) => 4,
            _ => 2,
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), RunnerError> {
    fs::write(path, contents).map_err(|source| RunnerError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), RunnerError> {
    fs::create_dir_all(path).map_err(|source| RunnerError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load the dataset a config describes; returns the splits and class count.
pub fn load_dataset(config: &RunConfig) -> Result<(DatasetSplit, usize), RunnerError> {
    match &config.dataset {
        DatasetConfig::Synthetic { .. } => {
            let spec = config.synthetic_spec()?.expect("synthetic");
            let split = generate(&spec)?;
            Ok((split, spec.classes.len()))
        }
        DatasetConfig::Directory { root, points_per_cloud } => {
            load_directory(root, *points_per_cloud)
        }
    }
}

/// Directory layout: `<root>/<class_name>/<split>/<file>` with class names
/// mapped to ids in sorted order. Files may be .xyz or .off (surface
/// sampled to `points_per_cloud`).
fn load_directory(root: &Path, points_per_cloud: usize) -> Result<(DatasetSplit, usize), RunnerError> {
    let io = |source| RunnerError::Io { path: root.to_path_buf(), source };
    let mut class_names: Vec<String> = fs::read_dir(root)
        .map_err(io)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    class_names.sort();
    if class_names.is_empty() {
        return Err(ConfigError::Schema(format!("no class directories under {}", root.display())).into());
    }

    let mut split = DatasetSplit { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (class_id, name) in class_names.iter().enumerate() {
        for part in ["train", "val", "test"] {
            let dir = root.join(name).join(part);
            if !dir.is_dir() {
                continue;
            }
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|source| RunnerError::Io { path: dir.clone(), source })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            for (fi, file) in files.iter().enumerate() {
                let cloud = load_cloud_file(file, points_per_cloud, (class_id * 1009 + fi) as u64)?
                    .with_label(class_id);
                match part {
                    "train" => split.train.push(cloud),
                    "val" => split.val.push(cloud),
                    _ => split.test.push(cloud),
                }
            }
        }
    }
    Ok((split, class_names.len()))
}

pub fn load_cloud_file(path: &Path, points: usize, seed: u64) -> Result<PointCloud, RunnerError> {
    let text = fs::read_to_string(path).map_err(|source| RunnerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let cloud = if ext.eq_ignore_ascii_case("off") {
        let mesh = formats::parse_off(&text)?;
        sample_surface(&mesh, points, &mut Rng::new(seed))?
    } else {
        formats::load_xyz(&text)?.0
    };
    Ok(normalize_unit_sphere(&cloud)?)
}

pub struct TrainArtifacts {
    pub outcome: TrainOutcome,
    pub summary: RunSummary,
    pub out_dir: PathBuf,
}

/// Train per the config and write checkpoints, per-epoch metrics log and a
/// final summary under the output directory.
pub fn run_train(config: &RunConfig, seed_override: Option<u64>) -> Result<TrainArtifacts, RunnerError> {
    let (split, num_classes) = load_dataset(config)?;
    let model_cfg = config.model_config(num_classes)?;
    let mut recipe = config.recipe()?;
    if let Some(s) = seed_override {
        recipe.seed = s;
    }

    let out_dir = config.output_dir();
    create_dir(&out_dir)?;

    let outcome = training::train(&model_cfg, &split, &recipe)?;

    for ckpt in outcome.store.entries() {
        let path = out_dir.join(format!("ckpt_epoch{:04}.lnfc", ckpt.epoch));
        checkpoint_io::save_checkpoint(&path, &model_cfg, ckpt)?;
    }
    write(&out_dir.join("history.jsonl"), report::history_jsonl(&outcome.history))?;

    let best = outcome.store.best().expect("training kept a checkpoint");
    let test_eval = if split.test.is_empty() {
        None
    } else {
        Some(evaluate(&model_cfg, &best.params, &split.test)?)
    };
    let summary = RunSummary {
        config_fingerprint: format!("{:016x}", model_cfg.fingerprint()),
        seed: recipe.seed,
        epochs: recipe.epochs,
        best_val_oa: best.val_oa,
        best_val_macc: best.val_macc,
        best_epoch: best.epoch,
        test_oa: test_eval.as_ref().map(|e| e.metrics.overall_accuracy),
        test_macc: test_eval.as_ref().map(|e| e.metrics.mean_class_accuracy),
        checkpoints_kept: outcome.store.len(),
    };
    write(
        &out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("serializable"),
    )?;

    Ok(TrainArtifacts { outcome, summary, out_dir })
}

/// Evaluate a checkpoint file on the config's test split.
pub fn run_eval(config: &RunConfig, checkpoint: &Path) -> Result<EvalResult, RunnerError> {
    let (split, num_classes) = load_dataset(config)?;
    let model_cfg = config.model_config(num_classes)?;
    let ckpt = checkpoint_io::load_checkpoint(checkpoint)?;
    if ckpt.fingerprint != model_cfg.fingerprint() {
        return Err(lnf_core::Error::IncompatibleCheckpoints.into());
    }
    Ok(evaluate(&model_cfg, &ckpt.params, &split.test)?)
}

pub struct AblateArtifacts {
    pub additive: lnf_core::training::AblationReport,
    pub soup: lnf_core::training::AblationReport,
    pub distance: lnf_core::training::AblationReport,
    pub out_dir: PathBuf,
}

/// Run the additive-feature study, the weight-averaging sweep, and the
/// distance-normalization comparison; write human and JSONL reports.
pub fn run_ablate(config: &RunConfig) -> Result<AblateArtifacts, RunnerError> {
    let (split, num_classes) = load_dataset(config)?;
    let model_cfg = config.model_config(num_classes)?;
    let recipe = config.recipe()?;
    let seeds = if config.train.seeds.is_empty() {
        vec![recipe.seed]
    } else {
        config.train.seeds.clone()
    };

    let out_dir = config.output_dir();
    create_dir(&out_dir)?;

    let additive = additive_ablation(&model_cfg, &split, &recipe, &seeds)?;

    // soup sweep over a single training run's checkpoint store
    let mut soup_cfg = model_cfg.clone();
    soup_cfg.mode = lnf_core::features::AugmentationMode::Both;
    let outcome = training::train(&soup_cfg, &split, &recipe)?;
    let soup = soup_sweep(&soup_cfg, &outcome.store, &SOUP_SWEEP_KS, &split.val)?;

    let distance = distance_ablation(&model_cfg, &split, &recipe)?;

    for (name, rep) in [
        ("additive", &additive),
        ("soup_sweep", &soup),
        ("distance", &distance),
    ] {
        write(&out_dir.join(format!("ablation_{name}.jsonl")), report::ablation_jsonl(rep))?;
        write(&out_dir.join(format!("ablation_{name}.txt")), report::ablation_table(rep))?;
    }

    Ok(AblateArtifacts { additive, soup, distance, out_dir })
}

pub struct SoupArtifacts {
    pub checkpoint: Checkpoint,
    pub eval: Option<EvalResult>,
    pub out_path: PathBuf,
}

/// Average the top-k checkpoints in a directory, write the soup checkpoint
/// and evaluate it on the config's test split when a config is given.
pub fn run_soup(
    ckpt_dir: &Path,
    k: usize,
    out_path: Option<PathBuf>,
    config: Option<&RunConfig>,
) -> Result<SoupArtifacts, RunnerError> {
    let ckpts = checkpoint_io::load_checkpoint_dir(ckpt_dir)?;
    if ckpts.is_empty() {
        return Err(ConfigError::Schema(format!(
            "no .lnfc checkpoints in {}",
            ckpt_dir.display()
        ))
        .into());
    }
    if ckpts.iter().any(|c| c.fingerprint != ckpts[0].fingerprint) {
        return Err(lnf_core::Error::IncompatibleCheckpoints.into());
    }
    let store = CheckpointStore::from_checkpoints(ckpts);
    let params = soup_params(&store, k)?;
    let best = store.best().unwrap();

    let mut context = None;
    if let Some(cfg) = config {
        let (split, num_classes) = load_dataset(cfg)?;
        let model_cfg = cfg.model_config(num_classes)?;
        if model_cfg.fingerprint() != best.fingerprint {
            return Err(lnf_core::Error::IncompatibleCheckpoints.into());
        }
        let eval = evaluate(&model_cfg, &params, &split.test)?;
        context = Some((model_cfg, eval));
    }

    let checkpoint = Checkpoint {
        params,
        epoch: best.epoch,
        val_oa: context.as_ref().map(|(_, e)| e.metrics.overall_accuracy).unwrap_or(best.val_oa),
        val_macc: context
            .as_ref()
            .map(|(_, e)| e.metrics.mean_class_accuracy)
            .unwrap_or(best.val_macc),
        fingerprint: best.fingerprint,
    };

    let out_path = out_path.unwrap_or_else(|| ckpt_dir.join(format!("soup_top{k}.lnfc")));
    if let Some((model_cfg, _)) = &context {
        checkpoint_io::save_checkpoint(&out_path, model_cfg, &checkpoint)?;
    } else {
        // no config: rebuild array boundaries is impossible, store flat
        save_flat_checkpoint(&out_path, &checkpoint)?;
    }

    Ok(SoupArtifacts {
        checkpoint,
        eval: context.map(|(_, e)| e),
        out_path,
    })
}

/// Checkpoint with a single unnamed array, for when no model config is
/// available to name the layout.
fn save_flat_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), RunnerError> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(b"LNFC");
    buf.extend_from_slice(&1u32.to_le_bytes());
    buf.extend_from_slice(&ckpt.fingerprint.to_le_bytes());
    buf.extend_from_slice(&(ckpt.epoch as u64).to_le_bytes());
    buf.extend_from_slice(&ckpt.val_oa.to_le_bytes());
    buf.extend_from_slice(&ckpt.val_macc.to_le_bytes());
    buf.extend_from_slice(&1u32.to_le_bytes());
    let name = b"params";
    buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
    buf.extend_from_slice(name);
    buf.extend_from_slice(&(ckpt.params.len() as u32).to_le_bytes());
    for &p in &ckpt.params {
        buf.extend_from_slice(&(p as f32).to_le_bytes());
    }
    write(path, buf)
}

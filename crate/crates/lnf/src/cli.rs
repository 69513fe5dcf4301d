//! Command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lnf_core::features::{directional_vectors, normalized_distance};
use lnf_core::neighborhood::{ball_query, farthest_point_sample_from, BallQueryConfig};
use serde::Serialize;

use lnf::config::RunConfig;
use lnf::report;
use lnf::runner::{self, RunnerError};
use lnf::bench;

#[derive(Parser)]
#[command(name = "lnf", about = "Local neighborhood features for point-cloud classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier from a config file, writing checkpoints, a
    /// per-epoch metrics log and a summary.
    Train {
        #[arg(short, long)]
        config: PathBuf,
        /// Override the first training seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on the config's test split.
    Eval {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run the additive-feature, weight-averaging and distance-normalization
    /// studies.
    Ablate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Average the top-k checkpoints in a directory into a new checkpoint.
    Soup {
        /// Directory of .lnfc checkpoints.
        #[arg(long)]
        dir: PathBuf,
        #[arg(short)]
        k: usize,
        /// Output checkpoint path (default: <dir>/soup_top<k>.lnfc).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Config providing the test set for re-evaluation.
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Dump the grouping, directional vectors and normalized distances for
    /// one cloud to JSONL.
    Extract {
        /// Input .xyz or .off file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        radius: f64,
        #[arg(long, default_value_t = 16)]
        k_max: usize,
        #[arg(long, default_value_t = 32)]
        anchors: usize,
        /// Points to sample when the input is a mesh.
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the pipeline kernels.
    Bench {
        /// Cloud sizes to benchmark.
        #[arg(long, value_delimiter = ',', default_value = "1024")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 7)]
        reps: usize,
    },
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Serialize)]
struct ExtractRecord {
    anchor_row: usize,
    anchor_index: usize,
    slot: usize,
    neighbor_index: usize,
    padded: bool,
    raw_distance: f64,
    d: f64,
    dv: [f64; 3],
}

fn dispatch(cmd: Command) -> Result<(), RunnerError> {
    match cmd {
        Command::Train { config, seed } => {
            let cfg = RunConfig::load(&config)?;
            let artifacts = runner::run_train(&cfg, seed)?;
            println!(
                "trained {} epochs; best val OA {:.2}% (epoch {}); artifacts in {}",
                artifacts.summary.epochs,
                100.0 * artifacts.summary.best_val_oa,
                artifacts.summary.best_epoch,
                artifacts.out_dir.display()
            );
            if let Some(oa) = artifacts.summary.test_oa {
                println!("test OA {:.2}%", 100.0 * oa);
            }
            Ok(())
        }
        Command::Eval { config, checkpoint } => {
            let cfg = RunConfig::load(&config)?;
            let result = runner::run_eval(&cfg, &checkpoint)?;
            print!("{}", report::eval_text(&result));
            Ok(())
        }
        Command::Ablate { config } => {
            let cfg = RunConfig::load(&config)?;
            let artifacts = runner::run_ablate(&cfg)?;
            println!("{}", report::ablation_table(&artifacts.additive));
            println!("{}", report::ablation_table(&artifacts.soup));
            println!("{}", report::ablation_table(&artifacts.distance));
            println!("reports written to {}", artifacts.out_dir.display());
            Ok(())
        }
        Command::Soup { dir, k, out, config } => {
            let cfg = config.map(|p| RunConfig::load(&p)).transpose()?;
            let artifacts = runner::run_soup(&dir, k, out, cfg.as_ref())?;
            println!("soup checkpoint written to {}", artifacts.out_path.display());
            if let Some(eval) = &artifacts.eval {
                print!("{}", report::eval_text(eval));
            }
            Ok(())
        }
        Command::Extract { input, radius, k_max, anchors, points, out } => {
            let cloud = runner::load_cloud_file(&input, points, 0)?;
            let m = anchors.min(cloud.len());
            let anchor_set = farthest_point_sample_from(&cloud, m, 0)?;
            let cfg = BallQueryConfig { radius, k_max };
            let grouping = ball_query(&cloud, &anchor_set, &cfg)?;
            let dv = directional_vectors(&cloud, &grouping, radius)?;
            let d = normalized_distance(&grouping, radius, true)?;
            let mut text = String::new();
            for row in 0..m {
                for slot in 0..k_max {
                    let rec = ExtractRecord {
                        anchor_row: row,
                        anchor_index: anchor_set.indices[row],
                        slot,
                        neighbor_index: grouping.slot(row, slot),
                        padded: grouping.row_pad(row)[slot],
                        raw_distance: grouping.row_distances(row)[slot],
                        d: d.slot(row, slot),
                        dv: dv.slot(row, slot),
                    };
                    text.push_str(&serde_json::to_string(&rec).expect("serializable"));
                    text.push('\n');
                }
            }
            std::fs::write(&out, text).map_err(|source| RunnerError::Io {
                path: out.clone(),
                source,
            })?;
            println!("wrote {} records to {}", m * k_max, out.display());
            Ok(())
        }
        Command::Bench { sizes, reps } => {
            let report = bench::run(&sizes, reps);
            print!("{}", bench::table(&report));
            Ok(())
        }
    }
}

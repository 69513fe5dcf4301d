//! Human tables and line-delimited machine-readable records.
//!
//! Every number printed in a human table comes from the same struct that is
//! serialized to JSONL, so the two can never drift apart.

use lnf_core::training::{AblationReport, EpochRecord, EvalResult};
use serde::{Deserialize, Serialize};

/// One ablation row as serialized to JSONL. Accuracies in percent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRecord {
    pub variant: String,
    pub oa: f64,
    pub oa_std: f64,
    pub macc: f64,
    pub macc_std: f64,
    pub delta_oa: f64,
    pub delta_macc: f64,
}

pub fn ablation_records(report: &AblationReport) -> Vec<AblationRecord> {
    report
        .rows
        .iter()
        .map(|r| AblationRecord {
            variant: r.name.clone(),
            oa: 100.0 * r.oa_mean,
            oa_std: 100.0 * r.oa_std,
            macc: 100.0 * r.macc_mean,
            macc_std: 100.0 * r.macc_std,
            delta_oa: 100.0 * r.delta_oa,
            delta_macc: 100.0 * r.delta_macc,
        })
        .collect()
}

pub fn ablation_jsonl(report: &AblationReport) -> String {
    let mut out = String::new();
    for rec in ablation_records(report) {
        out.push_str(&serde_json::to_string(&rec).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn ablation_table(report: &AblationReport) -> String {
    let records = ablation_records(report);
    let name_w = records
        .iter()
        .map(|r| r.variant.len())
        .chain(["Improvements".len()])
        .max()
        .unwrap_or(12);
    let mut out = String::new();
    out.push_str(&format!("{}\n", report.title));
    out.push_str(&format!(
        "{:name_w$}  {:>16}  {:>7}  {:>16}  {:>7}\n",
        "Improvements", "Overall Acc (%)", "dOA", "Mean Acc (%)", "dmAcc"
    ));
    for (i, r) in records.iter().enumerate() {
        let (doa, dmacc) = if i == 0 {
            ("-".to_string(), "-".to_string())
        } else {
            (format!("{:+.2}", r.delta_oa), format!("{:+.2}", r.delta_macc))
        };
        out.push_str(&format!(
            "{:name_w$}  {:>9.2} ± {:4.2}  {:>7}  {:>9.2} ± {:4.2}  {:>7}\n",
            r.variant, r.oa, r.oa_std, doa, r.macc, r.macc_std, dmacc
        ));
    }
    out
}

/// Per-epoch training log record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLogRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_oa: f64,
    pub val_macc: f64,
}

impl From<&EpochRecord> for EpochLogRecord {
    fn from(r: &EpochRecord) -> Self {
        EpochLogRecord {
            epoch: r.epoch,
            lr: r.lr,
            train_loss: r.train_loss,
            val_oa: r.val_oa,
            val_macc: r.val_macc,
        }
    }
}

pub fn history_jsonl(history: &[EpochRecord]) -> String {
    let mut out = String::new();
    for r in history {
        out.push_str(&serde_json::to_string(&EpochLogRecord::from(r)).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Final run summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_fingerprint: String,
    pub seed: u64,
    pub epochs: usize,
    pub best_val_oa: f64,
    pub best_val_macc: f64,
    pub best_epoch: usize,
    pub test_oa: Option<f64>,
    pub test_macc: Option<f64>,
    pub checkpoints_kept: usize,
}

pub fn eval_text(result: &EvalResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "OA: {:.2}%  mAcc: {:.2}%\n",
        100.0 * result.metrics.overall_accuracy,
        100.0 * result.metrics.mean_class_accuracy
    ));
    out.push_str("per-class recall:\n");
    for (c, r) in result.per_class_recall.iter().enumerate() {
        match r {
            Some(r) => out.push_str(&format!("  class {c}: {:.2}%\n", 100.0 * r)),
            None => out.push_str(&format!("  class {c}: (no samples)\n")),
        }
    }
    for w in &result.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

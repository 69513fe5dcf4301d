//! Training loop, metrics, top-k checkpoint retention and weight-averaged
//! ("soup") inference, plus the ablation report harnesses.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::features::AugmentationMode;
use crate::math;
use crate::network::{
    backward_from_tape, compute_geometry, forward_with_tape, ClassifierModel, Geometry,
    ModelConfig,
};
use crate::rng::Rng;

/// Checkpoints rank by validation overall accuracy; only this many are kept.
pub const STORE_CAPACITY: usize = 15;

/// Seed base for evaluation-time farthest point sampling, fixed so that
/// `evaluate` is a pure function of (config, params, dataset).
const EVAL_SEED: u64 = 0x5eed_ea17;

/// Per-sample FPS seed, derived so neighboring indices get unrelated streams.
pub fn sample_seed(base: u64, index: usize) -> u64 {
    let mut s = base ^ (index as u64).wrapping_mul(0x9e3779b97f4a7c15);
    s = (s ^ (s >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    s ^ (s >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub overall_accuracy: f64,
    pub mean_class_accuracy: f64,
}

/// Evaluation output: metrics plus the confusion matrix they were counted
/// from (rows = true class, columns = prediction).
#[derive(Debug, Clone)]
pub struct EvalResult {
    pub metrics: Metrics,
    pub num_classes: usize,
    pub confusion: Vec<usize>,
    /// Per-class recall; `None` where the class has no samples.
    pub per_class_recall: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

/// A saved model state with the validation metrics that ranked it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: Vec<f64>,
    pub epoch: usize,
    pub val_oa: f64,
    pub val_macc: f64,
    pub fingerprint: u64,
}

/// Up to [`STORE_CAPACITY`] checkpoints, sorted by val OA descending, ties
/// broken by val mAcc, then by later epoch.
#[derive(Debug, Clone, Default)]
pub struct CheckpointStore {
    entries: Vec<Checkpoint>,
}

impl CheckpointStore {
    pub fn new() -> Self {
        CheckpointStore { entries: Vec::new() }
    }

    pub fn insert(&mut self, ckpt: Checkpoint) {
        self.entries.push(ckpt);
        self.entries.sort_by(|a, b| {
            b.val_oa
                .total_cmp(&a.val_oa)
                .then(b.val_macc.total_cmp(&a.val_macc))
                .then(b.epoch.cmp(&a.epoch))
        });
        self.entries.truncate(STORE_CAPACITY);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Checkpoint] {
        &self.entries
    }

    pub fn best(&self) -> Option<&Checkpoint> {
        self.entries.first()
    }

    pub fn from_checkpoints(mut ckpts: Vec<Checkpoint>) -> Self {
        let mut store = CheckpointStore::new();
        for c in ckpts.drain(..) {
            store.insert(c);
        }
        store
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    AdamW,
    Sgd,
}

/// Training recipe. The learning rate follows cosine decay from `lr` to
/// `lr_min` over the epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecipe {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub lr_min: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainRecipe {
    fn default() -> Self {
        TrainRecipe {
            optimizer: OptimizerKind::AdamW,
            lr: 1e-3,
            lr_min: 1e-5,
            epochs: 100,
            batch_size: 16,
            weight_decay: 1e-4,
            momentum: 0.9,
            seed: 1,
        }
    }
}

impl TrainRecipe {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.lr;
        }
        let t = epoch as f64 / (self.epochs - 1) as f64;
        self.lr_min + 0.5 * (self.lr - self.lr_min) * (1.0 + math::cos(math::PI * t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_oa: f64,
    pub val_macc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    pub store: CheckpointStore,
    pub history: Vec<EpochRecord>,
}

struct Optimizer {
    kind: OptimizerKind,
    weight_decay: f64,
    momentum: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Optimizer {
    fn new(kind: OptimizerKind, n: usize, weight_decay: f64, momentum: f64) -> Self {
        Optimizer {
            kind,
            weight_decay,
            momentum,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn apply(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        match self.kind {
            OptimizerKind::AdamW => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                let bc1 = 1.0 - libm::pow(B1, self.step as f64);
                let bc2 = 1.0 - libm::pow(B2, self.step as f64);
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = B1 * self.m[i] + (1.0 - B1) * g;
                    self.v[i] = B2 * self.v[i] + (1.0 - B2) * g * g;
                    let mhat = self.m[i] / bc1;
                    let vhat = self.v[i] / bc2;
                    params[i] -=
                        lr * (mhat / (math::sqrt(vhat) + EPS) + self.weight_decay * params[i]);
                }
            }
            OptimizerKind::Sgd => {
                for i in 0..params.len() {
                    self.m[i] = self.momentum * self.m[i] + grad[i];
                    params[i] -= lr * (self.m[i] + self.weight_decay * params[i]);
                }
            }
        }
    }
}

fn check_split(name: &str, samples: &[PointCloud], num_classes: usize) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidDataset(format!("{name} split is empty")));
    }
    for (i, s) in samples.iter().enumerate() {
        match s.label {
            Some(l) if l < num_classes => {}
            Some(l) => {
                return Err(Error::InvalidDataset(format!(
                    "{name}[{i}] has label {l} >= num_classes {num_classes}"
                )))
            }
            None => {
                return Err(Error::InvalidDataset(format!("{name}[{i}] is unlabeled")))
            }
        }
    }
    Ok(())
}

fn precompute_geometry(
    config: &ModelConfig,
    samples: &[PointCloud],
    seed_base: u64,
) -> Result<Vec<Geometry>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, c)| compute_geometry(config, c, sample_seed(seed_base, i)))
        .collect()
}

fn evaluate_cached(
    model: &ClassifierModel,
    samples: &[PointCloud],
    geos: &[Geometry],
) -> Result<EvalResult> {
    let k = model.config.num_classes;
    let mut confusion = vec![0usize; k * k];
    for (sample, geo) in samples.iter().zip(geos) {
        let tape = forward_with_tape(model, geo)?;
        let logits = tape.logits();
        let mut pred = 0;
        for (c, &l) in logits.iter().enumerate() {
            if l > logits[pred] {
                pred = c;
            }
        }
        let truth = sample.label.expect("validated label");
        confusion[truth * k + pred] += 1;
    }
    Ok(result_from_confusion(confusion, k))
}

fn result_from_confusion(confusion: Vec<usize>, k: usize) -> EvalResult {
    let total: usize = confusion.iter().sum();
    let correct: usize = (0..k).map(|c| confusion[c * k + c]).sum();
    let mut per_class_recall = Vec::with_capacity(k);
    let mut warnings = Vec::new();
    let mut recall_sum = 0.0;
    let mut present = 0usize;
    for c in 0..k {
        let row: usize = confusion[c * k..(c + 1) * k].iter().sum();
        if row == 0 {
            warnings.push(format!("class {c} absent from dataset; excluded from mAcc"));
            per_class_recall.push(None);
        } else {
            let r = confusion[c * k + c] as f64 / row as f64;
            per_class_recall.push(Some(r));
            recall_sum += r;
            present += 1;
        }
    }
    EvalResult {
        metrics: Metrics {
            overall_accuracy: correct as f64 / total as f64,
            mean_class_accuracy: if present > 0 { recall_sum / present as f64 } else { 0.0 },
        },
        num_classes: k,
        confusion,
        per_class_recall,
        warnings,
    }
}

/// Evaluate a parameter vector on a labeled dataset. Deterministic: the
/// evaluation FPS seeds are fixed, not taken from any training state.
pub fn evaluate(config: &ModelConfig, params: &[f64], samples: &[PointCloud]) -> Result<EvalResult> {
    check_split("eval", samples, config.num_classes)?;
    let mut model = ClassifierModel::init(config.clone(), &mut Rng::new(0))?;
    model.set_from_flat(params)?;
    let geos = precompute_geometry(config, samples, EVAL_SEED)?;
    evaluate_cached(&model, samples, &geos)
}

/// Train a classifier, retaining the top checkpoints by validation OA.
pub fn train(config: &ModelConfig, split: &DatasetSplit, recipe: &TrainRecipe) -> Result<TrainOutcome> {
    config.validate()?;
    check_split("train", &split.train, config.num_classes)?;
    check_split("val", &split.val, config.num_classes)?;
    if recipe.batch_size == 0 || recipe.epochs == 0 {
        return Err(Error::InvalidConfig("epochs and batch_size must be >= 1".into()));
    }

    let mut rng = Rng::new(recipe.seed);
    let mut model = ClassifierModel::init(config.clone(), &mut rng.split(0xbeef))?;
    let fingerprint = config.fingerprint();

    let train_geos = precompute_geometry(config, &split.train, recipe.seed)?;
    let val_geos = precompute_geometry(config, &split.val, EVAL_SEED)?;

    let n_params = model.param_count();
    let mut opt = Optimizer::new(recipe.optimizer, n_params, recipe.weight_decay, recipe.momentum);
    let mut params = model.flatten();
    let mut order: Vec<usize> = (0..split.train.len()).collect();
    let mut store = CheckpointStore::new();
    let mut history = Vec::with_capacity(recipe.epochs);
    let mut grad_acc = vec![0.0; n_params];

    for epoch in 0..recipe.epochs {
        let lr = recipe.lr_at(epoch);
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(recipe.batch_size) {
            grad_acc.iter_mut().for_each(|g| *g = 0.0);
            for &idx in batch {
                let geo = &train_geos[idx];
                let tape = forward_with_tape(&model, geo)?;
                let target = split.train[idx].label.expect("validated label");
                let (loss, grad) = backward_from_tape(&model, geo, &tape, target)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                loss_sum += loss;
                for (a, g) in grad_acc.iter_mut().zip(&grad) {
                    *a += g;
                }
            }
            let inv = 1.0 / batch.len() as f64;
            grad_acc.iter_mut().for_each(|g| *g *= inv);
            opt.apply(&mut params, &grad_acc, lr);
            model.set_from_flat(&params)?;
        }
        let train_loss = loss_sum / split.train.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }

        let val = evaluate_cached(&model, &split.val, &val_geos)?;
        store.insert(Checkpoint {
            params: params.clone(),
            epoch,
            val_oa: val.metrics.overall_accuracy,
            val_macc: val.metrics.mean_class_accuracy,
            fingerprint,
        });
        history.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            val_oa: val.metrics.overall_accuracy,
            val_macc: val.metrics.mean_class_accuracy,
        });
    }

    Ok(TrainOutcome { model, store, history })
}

/// Elementwise mean of the top-k checkpoints' parameters.
///
/// `k == 1` is a bitwise copy of the best checkpoint. For `k > 1` the
/// metrics are re-evaluated through the supplied closure, never averaged.
pub fn soup_average<F>(store: &CheckpointStore, k: usize, reevaluate: F) -> Result<Checkpoint>
where
    F: FnOnce(&[f64]) -> Result<Metrics>,
{
    let params = soup_params(store, k)?;
    let best = store.best().expect("store non-empty");
    if k == 1 {
        return Ok(best.clone());
    }
    let metrics = reevaluate(&params)?;
    Ok(Checkpoint {
        params,
        epoch: best.epoch,
        val_oa: metrics.overall_accuracy,
        val_macc: metrics.mean_class_accuracy,
        fingerprint: best.fingerprint,
    })
}

/// The averaged parameter vector alone.
pub fn soup_params(store: &CheckpointStore, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > store.len() {
        return Err(Error::InvalidRequest(format!(
            "soup of top-{k} from a store of {}",
            store.len()
        )));
    }
    let top = &store.entries()[..k];
    let fp = top[0].fingerprint;
    if top.iter().any(|c| c.fingerprint != fp) {
        return Err(Error::IncompatibleCheckpoints);
    }
    let n = top[0].params.len();
    if top.iter().any(|c| c.params.len() != n) {
        return Err(Error::IncompatibleCheckpoints);
    }
    if k == 1 {
        return Ok(top[0].params.clone());
    }
    let inv = 1.0 / k as f64;
    let mut mean = vec![0.0; n];
    for c in top {
        for (m, p) in mean.iter_mut().zip(&c.params) {
            *m += p;
        }
    }
    mean.iter_mut().for_each(|m| *m *= inv);
    Ok(mean)
}

/// One row of an ablation table: metrics (mean and stddev over seeds) and
/// the delta of the means against the report's first row.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub name: String,
    pub oa_mean: f64,
    pub oa_std: f64,
    pub macc_mean: f64,
    pub macc_std: f64,
    pub delta_oa: f64,
    pub delta_macc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub title: String,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    /// Build rows from per-variant metric samples, computing mean, stddev
    /// and deltas against the first variant.
    pub fn from_samples(title: &str, variants: Vec<(String, Vec<Metrics>)>) -> Self {
        let stats: Vec<(String, f64, f64, f64, f64)> = variants
            .into_iter()
            .map(|(name, ms)| {
                let (oa_m, oa_s) = mean_std(ms.iter().map(|m| m.overall_accuracy));
                let (ma_m, ma_s) = mean_std(ms.iter().map(|m| m.mean_class_accuracy));
                (name, oa_m, oa_s, ma_m, ma_s)
            })
            .collect();
        let base_oa = stats.first().map(|s| s.1).unwrap_or(0.0);
        let base_ma = stats.first().map(|s| s.3).unwrap_or(0.0);
        let rows = stats
            .into_iter()
            .map(|(name, oa_mean, oa_std, macc_mean, macc_std)| AblationRow {
                name,
                oa_mean,
                oa_std,
                macc_mean,
                macc_std,
                delta_oa: oa_mean - base_oa,
                delta_macc: macc_mean - base_ma,
            })
            .collect();
        AblationReport { title: String::from(title), rows }
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, math::sqrt(var))
}

/// Weight-averaging sweep: evaluate the best single checkpoint, then the
/// top-k soup for each requested k that the store can satisfy.
pub fn soup_sweep(
    config: &ModelConfig,
    store: &CheckpointStore,
    ks: &[usize],
    val: &[PointCloud],
) -> Result<AblationReport> {
    if store.is_empty() {
        return Err(Error::InvalidRequest("empty checkpoint store".into()));
    }
    let best = store.best().unwrap();
    let base = evaluate(config, &best.params, val)?.metrics;
    let mut variants = vec![(String::from("best checkpoint"), vec![base])];
    for &k in ks {
        if k < 2 || k > store.len() {
            continue;
        }
        let params = soup_params(store, k)?;
        let m = evaluate(config, &params, val)?.metrics;
        variants.push((format!("+ top-{k}"), vec![m]));
    }
    Ok(AblationReport::from_samples(
        "Weight averaging of checkpoints (same training session)",
        variants,
    ))
}

/// The ks swept in the weight-averaging study.
pub const SOUP_SWEEP_KS: [usize; 5] = [2, 3, 5, 10, 15];

/// Additive feature study: train base, +distance, +directional vectors
/// (distance and vectors together), then add top-2 weight averaging, over
/// the given seeds. Metrics come from the test split.
pub fn additive_ablation(
    base_config: &ModelConfig,
    split: &DatasetSplit,
    recipe: &TrainRecipe,
    seeds: &[u64],
) -> Result<AblationReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidRequest("need at least one seed".into()));
    }
    let variants: [(&str, AugmentationMode, bool); 4] = [
        ("base", AugmentationMode::Base, false),
        ("+distance", AugmentationMode::Distance, false),
        ("+directional vectors", AugmentationMode::Both, false),
        ("+best-two-average", AugmentationMode::Both, true),
    ];
    let mut collected: Vec<(String, Vec<Metrics>)> = variants
        .iter()
        .map(|(n, _, _)| (String::from(*n), Vec::new()))
        .collect();
    for &seed in seeds {
        for (vi, (_, mode, soup)) in variants.iter().enumerate() {
            let mut config = base_config.clone();
            config.mode = *mode;
            let outcome = train(&config, split, &recipe.clone().with_seed(seed))?;
            let params = if *soup && outcome.store.len() >= 2 {
                soup_params(&outcome.store, 2)?
            } else {
                outcome.store.best().unwrap().params.clone()
            };
            let m = evaluate(&config, &params, &split.test)?.metrics;
            collected[vi].1.push(m);
        }
    }
    Ok(AblationReport::from_samples(
        "Additive study of feature strategies",
        collected,
    ))
}

/// Raw distance vs radius-normalized distance as the appended feature.
pub fn distance_ablation(
    base_config: &ModelConfig,
    split: &DatasetSplit,
    recipe: &TrainRecipe,
) -> Result<AblationReport> {
    let mut variants = Vec::new();
    for (name, normalize) in [("distance", false), ("r-normalized distance", true)] {
        let mut config = base_config.clone();
        config.mode = AugmentationMode::Distance;
        config.normalize_distance = normalize;
        let outcome = train(&config, split, recipe)?;
        let params = outcome.store.best().unwrap().params.clone();
        let m = evaluate(&config, &params, &split.test)?.metrics;
        variants.push((String::from(name), vec![m]));
    }
    Ok(AblationReport::from_samples(
        "Distance vs r-normalized distance",
        variants,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ckpt(oa: f64, macc: f64, epoch: usize, seed: u64) -> Checkpoint {
        let mut rng = Rng::new(seed);
        Checkpoint {
            params: (0..8).map(|_| rng.range_f64(-1.0, 1.0)).collect(),
            epoch,
            val_oa: oa,
            val_macc: macc,
            fingerprint: 42,
        }
    }

    #[test]
    fn store_sorts_and_caps() {
        let mut store = CheckpointStore::new();
        for i in 0..20 {
            store.insert(ckpt(i as f64 / 20.0, 0.5, i, i as u64));
        }
        assert_eq!(store.len(), STORE_CAPACITY);
        let oas: Vec<f64> = store.entries().iter().map(|c| c.val_oa).collect();
        let mut sorted = oas.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(oas, sorted);
        assert!((store.best().unwrap().val_oa - 19.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn store_tie_breaks_by_macc_then_recency() {
        let mut store = CheckpointStore::new();
        store.insert(ckpt(0.9, 0.5, 3, 1));
        store.insert(ckpt(0.9, 0.7, 1, 2));
        store.insert(ckpt(0.9, 0.7, 5, 3));
        let e = store.entries();
        assert_eq!(e[0].epoch, 5);
        assert_eq!(e[1].epoch, 1);
        assert_eq!(e[2].epoch, 3);
    }

    #[test]
    fn soup_k1_is_bitwise_identity() {
        let mut store = CheckpointStore::new();
        store.insert(ckpt(0.9, 0.5, 1, 7));
        store.insert(ckpt(0.8, 0.5, 2, 8));
        let best = store.best().unwrap().clone();
        let souped = soup_average(&store, 1, |_| unreachable!()).unwrap();
        assert_eq!(souped, best);
    }

    #[test]
    fn soup_mean_of_two() {
        let mut a = ckpt(0.9, 0.5, 1, 1);
        let mut b = ckpt(0.8, 0.5, 2, 2);
        a.params = alloc::vec![1.0];
        b.params = alloc::vec![3.0];
        let store = CheckpointStore::from_checkpoints(alloc::vec![a, b]);
        assert_eq!(soup_params(&store, 2).unwrap(), alloc::vec![2.0]);
    }

    #[test]
    fn soup_matches_independent_mean_oracle() {
        let store = CheckpointStore::from_checkpoints(alloc::vec![
            ckpt(0.9, 0.5, 1, 11),
            ckpt(0.8, 0.5, 2, 12),
            ckpt(0.7, 0.5, 3, 13),
        ]);
        let got = soup_params(&store, 3).unwrap();
        for i in 0..8 {
            // oracle: explicit sum in a different association order
            let mut sum = 0.0;
            for c in store.entries().iter().take(3).rev() {
                sum += c.params[i];
            }
            assert!((got[i] - sum / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn soup_order_invariant() {
        let a = ckpt(0.9, 0.5, 1, 21);
        let b = ckpt(0.8, 0.5, 2, 22);
        let c = ckpt(0.7, 0.5, 3, 23);
        let s1 = CheckpointStore::from_checkpoints(alloc::vec![a.clone(), b.clone(), c.clone()]);
        let s2 = CheckpointStore::from_checkpoints(alloc::vec![c, a, b]);
        assert_eq!(soup_params(&s1, 3).unwrap(), soup_params(&s2, 3).unwrap());
    }

    #[test]
    fn soup_rejects_mixed_fingerprints() {
        let a = ckpt(0.9, 0.5, 1, 31);
        let mut b = ckpt(0.8, 0.5, 2, 32);
        b.fingerprint = 43;
        let store = CheckpointStore::from_checkpoints(alloc::vec![a, b]);
        assert!(matches!(soup_params(&store, 2), Err(Error::IncompatibleCheckpoints)));
    }

    #[test]
    fn soup_rejects_out_of_range_k() {
        let store = CheckpointStore::from_checkpoints(alloc::vec![ckpt(0.9, 0.5, 1, 41)]);
        assert!(matches!(soup_params(&store, 0), Err(Error::InvalidRequest(_))));
        assert!(matches!(soup_params(&store, 2), Err(Error::InvalidRequest(_))));
    }

    #[test]
    fn metrics_definitional_example() {
        // 2 classes, sizes 9 and 1, always predict class 0
        let mut confusion = alloc::vec![0usize; 4];
        confusion[0] = 9; // true 0 -> pred 0
        confusion[2] = 1; // true 1 -> pred 0
        let r = result_from_confusion(confusion, 2);
        assert!((r.metrics.overall_accuracy - 0.9).abs() < 1e-15);
        assert!((r.metrics.mean_class_accuracy - 0.5).abs() < 1e-15);
    }

    #[test]
    fn metrics_all_correct() {
        let mut confusion = alloc::vec![0usize; 9];
        confusion[0] = 3;
        confusion[4] = 2;
        confusion[8] = 5;
        let r = result_from_confusion(confusion, 3);
        assert_eq!(r.metrics.overall_accuracy, 1.0);
        assert_eq!(r.metrics.mean_class_accuracy, 1.0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn metrics_absent_class_warns() {
        let mut confusion = alloc::vec![0usize; 9];
        confusion[0] = 4;
        confusion[4] = 4;
        let r = result_from_confusion(confusion, 3);
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.per_class_recall[2], None);
        assert_eq!(r.metrics.mean_class_accuracy, 1.0);
    }

    #[test]
    fn report_deltas_vs_first_row() {
        let report = AblationReport::from_samples(
            "t",
            alloc::vec![
                (String::from("a"), alloc::vec![
                    Metrics { overall_accuracy: 0.8, mean_class_accuracy: 0.7 },
                    Metrics { overall_accuracy: 0.9, mean_class_accuracy: 0.8 },
                ]),
                (String::from("b"), alloc::vec![
                    Metrics { overall_accuracy: 0.95, mean_class_accuracy: 0.85 },
                ]),
            ],
        );
        assert!((report.rows[0].oa_mean - 0.85).abs() < 1e-12);
        assert!((report.rows[0].oa_std - 0.05).abs() < 1e-12);
        assert_eq!(report.rows[0].delta_oa, 0.0);
        assert!((report.rows[1].delta_oa - 0.1).abs() < 1e-12);
        // single-sample variant has zero stddev
        assert_eq!(report.rows[1].oa_std, 0.0);
    }
}

//! Minimal set-abstraction classifier.
//!
//! Each stage runs farthest point sampling, ball query, the per-neighbor
//! MLP lift on radius-normalized offsets, feature augmentation, and an
//! elementwise max over neighbor slots. Stage i+1 treats stage i's anchors
//! as its input cloud, consuming their pooled features alongside the new
//! offsets. A global max over the last stage's anchors feeds the dense
//! classification head.
//!
//! Geometry (sampling, grouping, offsets, distances) does not depend on any
//! parameter, so it is computed once per cloud and reused across epochs;
//! `backward` differentiates only through the lift MLPs, pooling and head.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::features::{
    assemble_features, directional_vectors, normalized_distance, AugmentationMode, ChannelLayout,
    DirectionalVectors, FeatureTensor, NormalizedDistances,
};
use crate::math;
use crate::neighborhood::{ball_query, farthest_point_sample, BallQueryConfig, NeighborhoodGrouping};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// A dense layer, weight stored row-major (out x in).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub input_dim: usize,
    pub output_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        DenseLayer {
            input_dim,
            output_dim,
            weight: vec![0.0; input_dim * output_dim],
            bias: vec![0.0; output_dim],
            activation,
        }
    }

    /// He initialization, biases zero.
    pub fn init(input_dim: usize, output_dim: usize, activation: Activation, rng: &mut Rng) -> Self {
        let scale = math::sqrt(2.0 / input_dim as f64);
        let weight = (0..input_dim * output_dim)
            .map(|_| rng.normal() * scale)
            .collect();
        DenseLayer {
            input_dim,
            output_dim,
            weight,
            bias: vec![0.0; output_dim],
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// Apply to `rows` row-major input rows, appending to `out`.
    fn forward_rows(&self, input: &[f64], rows: usize, out: &mut Vec<f64>) {
        debug_assert_eq!(input.len(), rows * self.input_dim);
        let (ni, no) = (self.input_dim, self.output_dim);
        out.clear();
        out.reserve(rows * no);
        for r in 0..rows {
            let x = &input[r * ni..(r + 1) * ni];
            for o in 0..no {
                let w = &self.weight[o * ni..(o + 1) * ni];
                let mut acc = self.bias[o];
                for (wi, xi) in w.iter().zip(x) {
                    acc += wi * xi;
                }
                if self.activation == Activation::Relu && acc < 0.0 {
                    acc = 0.0;
                }
                out.push(acc);
            }
        }
    }
}

/// One set-abstraction stage: anchor count, ball query, lift widths, and an
/// optional per-stage augmentation override.
#[derive(Debug, Clone, PartialEq)]
pub struct StageConfig {
    pub anchors: usize,
    pub ball: BallQueryConfig,
    pub lift_widths: Vec<usize>,
    pub mode_override: Option<AugmentationMode>,
}

/// Full classifier description. `mode` applies to every stage unless a
/// stage overrides it; `normalize_distance` toggles the raw-distance
/// ablation (the directional vectors fed to the lift stay radius-normalized
/// either way).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub stages: Vec<StageConfig>,
    pub head_hidden: Vec<usize>,
    pub num_classes: usize,
    pub mode: AugmentationMode,
    pub normalize_distance: bool,
}

impl ModelConfig {
    /// The default desk-scale architecture: two stages and a small head.
    pub fn desk_scale(num_classes: usize, mode: AugmentationMode) -> Self {
        ModelConfig {
            stages: vec![
                StageConfig {
                    anchors: 128,
                    ball: BallQueryConfig { radius: 0.2, k_max: 16 },
                    lift_widths: vec![32, 32],
                    mode_override: None,
                },
                StageConfig {
                    anchors: 32,
                    ball: BallQueryConfig { radius: 0.4, k_max: 16 },
                    lift_widths: vec![64, 64],
                    mode_override: None,
                },
            ],
            head_hidden: vec![32],
            num_classes,
            mode,
            normalize_distance: true,
        }
    }

    pub fn stage_mode(&self, stage: usize) -> AugmentationMode {
        self.stages[stage].mode_override.unwrap_or(self.mode)
    }

    /// Pooled feature width produced by the given stage.
    pub fn stage_out_width(&self, stage: usize) -> usize {
        let c0 = *self.stages[stage].lift_widths.last().expect("lift has layers");
        c0 + self.stage_mode(stage).extra_channels()
    }

    /// Lift input width: previous stage's pooled features plus the 3 offset
    /// channels.
    pub fn lift_in_width(&self, stage: usize) -> usize {
        if stage == 0 {
            3
        } else {
            self.stage_out_width(stage - 1) + 3
        }
    }

    pub fn head_in_width(&self) -> usize {
        self.stage_out_width(self.stages.len() - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidConfig("model needs at least one stage".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig("need at least two classes".into()));
        }
        for (i, s) in self.stages.iter().enumerate() {
            s.ball.validate()?;
            if s.anchors == 0 {
                return Err(Error::InvalidConfig(format!("stage {i}: zero anchors")));
            }
            if s.lift_widths.is_empty() {
                return Err(Error::InvalidConfig(format!("stage {i}: empty lift")));
            }
            if i > 0 && s.anchors > self.stages[i - 1].anchors {
                return Err(Error::InvalidConfig(format!(
                    "stage {i} samples more anchors than stage {} provides",
                    i - 1
                )));
            }
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical config encoding. Checkpoints carry this
    /// so incompatible parameter vectors are never averaged.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.write_usize(self.stages.len());
        for s in &self.stages {
            h.write_usize(s.anchors);
            h.write_u64(s.ball.radius.to_bits());
            h.write_usize(s.ball.k_max);
            h.write_usize(s.lift_widths.len());
            for &w in &s.lift_widths {
                h.write_usize(w);
            }
            h.write_usize(match s.mode_override {
                None => 0,
                Some(m) => 1 + mode_tag(m),
            });
        }
        h.write_usize(self.head_hidden.len());
        for &w in &self.head_hidden {
            h.write_usize(w);
        }
        h.write_usize(self.num_classes);
        h.write_usize(mode_tag(self.mode));
        h.write_usize(self.normalize_distance as usize);
        h.finish()
    }
}

fn mode_tag(m: AugmentationMode) -> usize {
    match m {
        AugmentationMode::Base => 0,
        AugmentationMode::Distance => 1,
        AugmentationMode::Vectors => 2,
        AugmentationMode::Both => 3,
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }
    fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// Parameters of one stage: the lift MLP layers.
#[derive(Debug, Clone, PartialEq)]
pub struct StageParams {
    pub lift: Vec<DenseLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub config: ModelConfig,
    pub stages: Vec<StageParams>,
    pub head: Vec<DenseLayer>,
}

impl ClassifierModel {
    pub fn init(config: ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut stages = Vec::with_capacity(config.stages.len());
        for (i, sc) in config.stages.iter().enumerate() {
            let mut lift = Vec::with_capacity(sc.lift_widths.len());
            let mut w_in = config.lift_in_width(i);
            for &w_out in &sc.lift_widths {
                lift.push(DenseLayer::init(w_in, w_out, Activation::Relu, rng));
                w_in = w_out;
            }
            stages.push(StageParams { lift });
        }
        let mut head = Vec::with_capacity(config.head_hidden.len() + 1);
        let mut w_in = config.head_in_width();
        for &w_out in &config.head_hidden {
            head.push(DenseLayer::init(w_in, w_out, Activation::Relu, rng));
            w_in = w_out;
        }
        head.push(DenseLayer::init(w_in, config.num_classes, Activation::Identity, rng));
        Ok(ClassifierModel { config, stages, head })
    }

    fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.stages
            .iter()
            .flat_map(|s| s.lift.iter())
            .chain(self.head.iter())
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(|l| l.param_count()).sum()
    }

    /// Flatten every parameter array in declared order (stage lifts, then
    /// head; per layer: weight row-major, then bias).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            out.extend_from_slice(&l.weight);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of `flatten`.
    pub fn set_from_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "parameter vector has {} entries, model needs {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for s in &mut self.stages {
            for l in &mut s.lift {
                take_layer(l, params, &mut off);
            }
        }
        for l in &mut self.head {
            take_layer(l, params, &mut off);
        }
        Ok(())
    }

    /// Named views of every parameter array, in flatten order. Used by the
    /// checkpoint file format.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (si, s) in self.stages.iter().enumerate() {
            for li in 0..s.lift.len() {
                names.push(format!("stage{si}.lift{li}.weight"));
                names.push(format!("stage{si}.lift{li}.bias"));
            }
        }
        for hi in 0..self.head.len() {
            names.push(format!("head{hi}.weight"));
            names.push(format!("head{hi}.bias"));
        }
        names
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        let mut lens = Vec::new();
        for l in self.layers() {
            lens.push(l.weight.len());
            lens.push(l.bias.len());
        }
        lens
    }
}

fn take_layer(l: &mut DenseLayer, params: &[f64], off: &mut usize) {
    let wn = l.weight.len();
    l.weight.copy_from_slice(&params[*off..*off + wn]);
    *off += wn;
    let bn = l.bias.len();
    l.bias.copy_from_slice(&params[*off..*off + bn]);
    *off += bn;
}

/// Geometry of one stage: anchors over the previous level's points, the
/// grouping, and the normalized offsets/distances.
#[derive(Debug, Clone)]
pub struct StageGeometry {
    pub anchor_coords: Vec<Point3>,
    pub grouping: NeighborhoodGrouping,
    pub dv: DirectionalVectors,
    pub d: NormalizedDistances,
}

/// Parameter-independent geometry for a whole forward pass. Computing it
/// once per cloud and reusing it across epochs is the main training-speed
/// lever.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub stages: Vec<StageGeometry>,
}

pub fn compute_geometry(config: &ModelConfig, cloud: &PointCloud, fps_seed: u64) -> Result<Geometry> {
    config.validate()?;
    let root = Rng::new(fps_seed);
    let mut level = cloud.clone();
    let mut stages = Vec::with_capacity(config.stages.len());
    for (i, sc) in config.stages.iter().enumerate() {
        let mut rng = root.split(i as u64);
        let anchors = farthest_point_sample(&level, sc.anchors, &mut rng)?;
        let grouping = ball_query(&level, &anchors, &sc.ball)?;
        let dv = directional_vectors(&level, &grouping, sc.ball.radius)?;
        let d = normalized_distance(&grouping, sc.ball.radius, config.normalize_distance)?;
        let anchor_coords: Vec<Point3> =
            anchors.indices.iter().map(|&a| level.points[a]).collect();
        level = PointCloud::new(anchor_coords.clone())?;
        stages.push(StageGeometry { anchor_coords, grouping, dv, d });
    }
    Ok(Geometry { stages })
}

/// Intermediate activations retained for the backward pass.
pub struct Tape {
    /// Per stage: lift layer inputs (slot-rows x width), one entry per layer,
    /// plus the final lift output as the last entry.
    stage_acts: Vec<Vec<Vec<f64>>>,
    /// Per stage: argmax slot per (anchor, channel).
    stage_argmax: Vec<Vec<usize>>,
    /// Argmax anchor per channel for the global pool.
    global_argmax: Vec<usize>,
    /// Head activations: input vector, then each layer's output.
    head_acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn logits(&self) -> &[f64] {
        self.head_acts.last().expect("head ran")
    }
}

fn pool_max(values: &[f64], rows: usize, slots: usize, channels: usize) -> (Vec<f64>, Vec<usize>) {
    let mut pooled = Vec::with_capacity(rows * channels);
    let mut argmax = Vec::with_capacity(rows * channels);
    for r in 0..rows {
        let base = r * slots * channels;
        for c in 0..channels {
            let mut best = values[base + c];
            let mut best_s = 0;
            for s in 1..slots {
                let v = values[base + s * channels + c];
                if v > best {
                    best = v;
                    best_s = s;
                }
            }
            pooled.push(best);
            argmax.push(best_s);
        }
    }
    (pooled, argmax)
}

/// Run one stage: gather per-slot lift inputs, lift, augment, max-pool.
/// `in_features` holds one row per point of the stage's input level
/// (empty with `c_in == 0` for the first stage).
pub fn stage_forward(
    config: &ModelConfig,
    stage: usize,
    params: &StageParams,
    geo: &StageGeometry,
    in_features: &[f64],
    c_in: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<usize>)> {
    let sc = &config.stages[stage];
    let m = geo.grouping.num_anchors();
    let k = sc.ball.k_max;
    let rows = m * k;
    let lift_in = c_in + 3;
    if params.lift[0].input_dim != lift_in {
        return Err(Error::Shape(format!(
            "stage {stage} lift expects input width {}, got {lift_in}",
            params.lift[0].input_dim
        )));
    }

    // Per-slot lift input: [neighbor features | dv].
    let mut input = Vec::with_capacity(rows * lift_in);
    for row in 0..m {
        for slot in 0..k {
            let nb = geo.grouping.slot(row, slot);
            if c_in > 0 {
                input.extend_from_slice(&in_features[nb * c_in..(nb + 1) * c_in]);
            }
            let v = geo.dv.slot(row, slot);
            input.extend_from_slice(&v);
        }
    }

    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(params.lift.len() + 1);
    acts.push(input);
    for l in &params.lift {
        let mut out = Vec::new();
        l.forward_rows(acts.last().unwrap(), rows, &mut out);
        acts.push(out);
    }

    let c0 = params.lift.last().unwrap().output_dim;
    let lifted = FeatureTensor {
        num_anchors: m,
        k_max: k,
        layout: ChannelLayout::base(c0),
        values: acts.last().unwrap().clone(),
    };
    let assembled = assemble_features(&lifted, &geo.dv, &geo.d, config.stage_mode(stage))?;
    let c = assembled.channels();
    let (pooled, argmax) = pool_max(&assembled.values, m, k, c);
    Ok((pooled, acts, argmax))
}

/// Full forward pass over precomputed geometry, retaining the tape.
pub fn forward_with_tape(model: &ClassifierModel, geo: &Geometry) -> Result<Tape> {
    let cfg = &model.config;
    if geo.stages.len() != cfg.stages.len() {
        return Err(Error::Shape("geometry/stage count mismatch".into()));
    }
    let mut stage_acts = Vec::with_capacity(cfg.stages.len());
    let mut stage_argmax = Vec::with_capacity(cfg.stages.len());
    let mut stage_pooled: Vec<Vec<f64>> = Vec::with_capacity(cfg.stages.len());
    let mut c_in = 0usize;
    for (i, sp) in model.stages.iter().enumerate() {
        let empty: Vec<f64> = Vec::new();
        let feats = if i == 0 { &empty } else { &stage_pooled[i - 1] };
        let (pooled, acts, argmax) = stage_forward(cfg, i, sp, &geo.stages[i], feats, c_in)?;
        c_in = cfg.stage_out_width(i);
        stage_acts.push(acts);
        stage_argmax.push(argmax);
        stage_pooled.push(pooled);
    }

    // Global max over the last stage's anchors.
    let last = stage_pooled.last().unwrap();
    let m_last = cfg.stages.last().unwrap().anchors;
    let c_last = cfg.head_in_width();
    let (global, global_argmax) = pool_max(last, 1, m_last, c_last);

    let mut head_acts = Vec::with_capacity(model.head.len() + 1);
    head_acts.push(global);
    for l in &model.head {
        let mut out = Vec::new();
        l.forward_rows(head_acts.last().unwrap(), 1, &mut out);
        head_acts.push(out);
    }

    Ok(Tape { stage_acts, stage_argmax, global_argmax, head_acts })
}

/// Forward pass from a raw cloud; logits only.
pub fn forward(model: &ClassifierModel, cloud: &PointCloud, fps_seed: u64) -> Result<Vec<f64>> {
    let geo = compute_geometry(&model.config, cloud, fps_seed)?;
    Ok(forward_with_tape(model, &geo)?.logits().to_vec())
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = logits.iter().map(|&l| math::exp(l - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of softmax(logits) against a class id, with
/// max-subtraction for stability.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::InvalidRequest(format!(
            "target class {target} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let log_sum: f64 = math::ln(logits.iter().map(|&l| math::exp(l - max)).sum::<f64>());
    Ok(log_sum - (logits[target] - max))
}

fn dense_backward(
    layer: &DenseLayer,
    input: &[f64],
    output: &[f64],
    dout: &mut [f64],
    rows: usize,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    dinput: &mut [f64],
) {
    let (ni, no) = (layer.input_dim, layer.output_dim);
    for r in 0..rows {
        let x = &input[r * ni..(r + 1) * ni];
        let y = &output[r * no..(r + 1) * no];
        let dy = &mut dout[r * no..(r + 1) * no];
        let dx = &mut dinput[r * ni..(r + 1) * ni];
        for o in 0..no {
            if layer.activation == Activation::Relu && y[o] <= 0.0 {
                dy[o] = 0.0;
            }
            let g = dy[o];
            if g == 0.0 {
                continue;
            }
            grad_b[o] += g;
            let gw = &mut grad_w[o * ni..(o + 1) * ni];
            let w = &layer.weight[o * ni..(o + 1) * ni];
            for i in 0..ni {
                gw[i] += g * x[i];
                dx[i] += g * w[i];
            }
        }
    }
}

/// Loss and exact gradients of cross-entropy w.r.t. every parameter,
/// flattened in the same order as `ClassifierModel::flatten`.
pub fn backward(
    model: &ClassifierModel,
    geo: &Geometry,
    target: usize,
) -> Result<(f64, Vec<f64>)> {
    let tape = forward_with_tape(model, geo)?;
    backward_from_tape(model, geo, &tape, target)
}

pub fn backward_from_tape(
    model: &ClassifierModel,
    geo: &Geometry,
    tape: &Tape,
    target: usize,
) -> Result<(f64, Vec<f64>)> {
    let cfg = &model.config;
    let logits = tape.logits();
    let loss = softmax_cross_entropy(logits, target)?;

    // Gradient buffers in flatten order.
    let shapes = model.param_shapes();
    let mut grads: Vec<Vec<f64>> = shapes.iter().map(|&n| vec![0.0; n]).collect();
    let n_stage_layers: usize = model.stages.iter().map(|s| s.lift.len()).sum();

    // d loss / d logits = softmax - onehot.
    let mut dvec = softmax(logits);
    dvec[target] -= 1.0;

    // Head, last layer to first.
    for (li, l) in model.head.iter().enumerate().rev() {
        let gi = (n_stage_layers + li) * 2;
        let input = &tape.head_acts[li];
        let output = &tape.head_acts[li + 1];
        let mut dx = vec![0.0; l.input_dim];
        let (gw, gb) = {
            let (a, b) = grads.split_at_mut(gi + 1);
            (&mut a[gi], &mut b[0])
        };
        let mut dy = dvec;
        dense_backward(l, input, output, &mut dy, 1, gw, gb, &mut dx);
        dvec = dx;
    }

    // Global pool: route each channel's gradient to its argmax anchor.
    let m_last = cfg.stages.last().unwrap().anchors;
    let c_last = cfg.head_in_width();
    let mut dpooled = vec![0.0; m_last * c_last];
    for c in 0..c_last {
        dpooled[tape.global_argmax[c] * c_last + c] += dvec[c];
    }

    // Stages, last to first.
    let mut layer_base: usize = n_stage_layers;
    for (si, sp) in model.stages.iter().enumerate().rev() {
        layer_base -= sp.lift.len();
        let sc = &cfg.stages[si];
        let m = sc.anchors;
        let k = sc.ball.k_max;
        let rows = m * k;
        let c = cfg.stage_out_width(si);
        let c0 = sp.lift.last().unwrap().output_dim;
        let acts = &tape.stage_acts[si];
        let argmax = &tape.stage_argmax[si];

        // Un-pool into per-slot gradients on the lift output (augmentation
        // channels are geometry constants and stop here).
        let mut dy = vec![0.0; rows * c0];
        for row in 0..m {
            for ch in 0..c {
                let slot = argmax[row * c + ch];
                if ch < c0 {
                    dy[(row * k + slot) * c0 + ch] += dpooled[row * c + ch];
                }
            }
        }

        // Lift layers, last to first.
        let mut dcur = dy;
        for (li, l) in sp.lift.iter().enumerate().rev() {
            let gi = (layer_base + li) * 2;
            let mut dx = vec![0.0; rows * l.input_dim];
            let (gw, gb) = {
                let (a, b) = grads.split_at_mut(gi + 1);
                (&mut a[gi], &mut b[0])
            };
            dense_backward(l, &acts[li], &acts[li + 1], &mut dcur, rows, gw, gb, &mut dx);
            dcur = dx;
        }

        // Scatter the feature part of the lift-input gradient back to the
        // previous stage's pooled features (offset channels are constants).
        if si > 0 {
            let c_prev = cfg.stage_out_width(si - 1);
            let lift_in = c_prev + 3;
            let m_prev = cfg.stages[si - 1].anchors;
            let mut dprev = vec![0.0; m_prev * c_prev];
            for row in 0..m {
                for slot in 0..k {
                    let nb = geo.stages[si].grouping.slot(row, slot);
                    let src = &dcur[(row * k + slot) * lift_in..][..c_prev];
                    let dst = &mut dprev[nb * c_prev..(nb + 1) * c_prev];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
            dpooled = dprev;
        }
    }

    Ok((loss, grads.concat()))
}

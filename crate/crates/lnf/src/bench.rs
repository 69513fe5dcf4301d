//! Wall-time measurements for the pipeline kernels.

use std::time::Instant;

use lnf_core::data::{generate_cloud, ShapeFamily};
use lnf_core::features::{assemble_features, directional_vectors, normalized_distance,
    AugmentationMode, ChannelLayout, FeatureTensor};
use lnf_core::neighborhood::{ball_query, farthest_point_sample_from, BallQueryConfig};
use lnf_core::network::{backward, compute_geometry, stage_forward, ClassifierModel, ModelConfig};
use lnf_core::{PointCloud, Rng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub k_max: usize,
    pub kernel: String,
    pub median_us: f64,
    pub min_us: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// (t_both - t_base) / t_base for stage_forward at each size.
    pub overhead_ratio: Vec<(usize, f64)>,
}

fn time_us<F: FnMut()>(reps: usize, mut f: F) -> (f64, f64) {
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        f();
        samples.push(t.elapsed().as_secs_f64() * 1e6);
    }
    samples.sort_by(f64::total_cmp);
    let median = samples[samples.len() / 2];
    (median, samples[0])
}

fn bench_cloud(n: usize) -> PointCloud {
    let mut rng = Rng::new(0xbe7c);
    generate_cloud(ShapeFamily::Torus, 0, n, 0.02, &mut rng).expect("bench cloud")
}

/// Time each kernel at the given sizes. `reps` must be >= 5 so the median
/// is meaningful.
pub fn run(sizes: &[usize], reps: usize) -> BenchReport {
    let reps = reps.max(5);
    let mut rows = Vec::new();
    let mut overhead_ratio = Vec::new();

    for &n in sizes {
        let m = (n / 8).max(1);
        let k_max = 16;
        let radius = 0.2;
        let cloud = bench_cloud(n);
        let cfg = BallQueryConfig { radius, k_max };

        let push = |rows: &mut Vec<BenchRow>, kernel: &str, median_us: f64, min_us: f64| {
            rows.push(BenchRow {
                n,
                m,
                k_max,
                kernel: kernel.to_string(),
                median_us,
                min_us,
                reps,
            });
        };

        let (med, min) = time_us(reps, || {
            farthest_point_sample_from(&cloud, m, 0).unwrap();
        });
        push(&mut rows, "fps", med, min);

        let anchors = farthest_point_sample_from(&cloud, m, 0).unwrap();
        let (med, min) = time_us(reps, || {
            ball_query(&cloud, &anchors, &cfg).unwrap();
        });
        push(&mut rows, "ball_query", med, min);

        let grouping = ball_query(&cloud, &anchors, &cfg).unwrap();
        let lifted = FeatureTensor::zeros(m, k_max, ChannelLayout::base(32));
        let (med, min) = time_us(reps, || {
            let dv = directional_vectors(&cloud, &grouping, radius).unwrap();
            let d = normalized_distance(&grouping, radius, true).unwrap();
            assemble_features(&lifted, &dv, &d, AugmentationMode::Both).unwrap();
        });
        push(&mut rows, "feature_assembly", med, min);

        // stage_forward: base vs +both on identically sized lifts
        let mut stage_times = [0.0f64; 2];
        for (slot, mode) in [AugmentationMode::Base, AugmentationMode::Both].iter().enumerate() {
            let mut mc = ModelConfig::desk_scale(8, *mode);
            mc.stages.truncate(1);
            mc.stages[0].anchors = m;
            mc.stages[0].ball = cfg;
            let mut rng = Rng::new(1);
            let model = ClassifierModel::init(mc.clone(), &mut rng).unwrap();
            let geo = compute_geometry(&mc, &cloud, 3).unwrap();
            let (med, min) = time_us(reps, || {
                stage_forward(&mc, 0, &model.stages[0], &geo.stages[0], &[], 0).unwrap();
            });
            push(&mut rows, &format!("stage_forward_{}", mode.name()), med, min);
            stage_times[slot] = med;
        }
        overhead_ratio.push((n, (stage_times[1] - stage_times[0]) / stage_times[0]));

        // full forward + backward on the two-stage model (when n allows)
        let mc = ModelConfig::desk_scale(8, AugmentationMode::Both);
        if n >= mc.stages[0].anchors {
            let mut rng = Rng::new(2);
            let model = ClassifierModel::init(mc.clone(), &mut rng).unwrap();
            let geo = compute_geometry(&mc, &cloud, 3).unwrap();
            let (med, min) = time_us(reps, || {
                backward(&model, &geo, 0).unwrap();
            });
            push(&mut rows, "forward_backward", med, min);
        }
    }

    BenchReport { rows, overhead_ratio }
}

pub fn table(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>8} {:>6} {:>6}  {:<22} {:>12} {:>12}\n",
        "n", "m", "k", "kernel", "median (us)", "min (us)"
    ));
    for r in &report.rows {
        out.push_str(&format!(
            "{:>8} {:>6} {:>6}  {:<22} {:>12.1} {:>12.1}\n",
            r.n, r.m, r.k_max, r.kernel, r.median_us, r.min_us
        ));
    }
    for (n, ratio) in &report.overhead_ratio {
        out.push_str(&format!(
            "n={n}: +both stage_forward overhead (t_both - t_base) / t_base = {:.3}\n",
            ratio
        ));
    }
    out
}

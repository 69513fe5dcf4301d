//! Farthest point sampling and neighborhood querying.
//!
//! Both query kernels are brute force. Rows (anchors) are independent, so
//! the output never depends on evaluation order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Indices of anchor points selected from a cloud.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorSet {
    pub indices: Vec<usize>,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Ball-query parameters: radius in normalized cloud space and the slot
/// count per anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallQueryConfig {
    pub radius: f64,
    pub k_max: usize,
}

impl BallQueryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ball radius must be positive and finite, got {}",
                self.radius
            )));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("k_max must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-anchor neighbor table. Rows shorter than `k_max` are padded by
/// repeating the first qualifying neighbor; `pad_mask` marks those slots.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodGrouping {
    pub anchors: AnchorSet,
    pub k_max: usize,
    /// m x k_max, row-major.
    pub neighbor_indices: Vec<usize>,
    /// Euclidean distances before any radius normalization, m x k_max.
    pub raw_distances: Vec<f64>,
    /// True where a slot repeats the first qualifying neighbor.
    pub pad_mask: Vec<bool>,
}

impl NeighborhoodGrouping {
    pub fn num_anchors(&self) -> usize {
        self.anchors.len()
    }

    #[inline]
    pub fn slot(&self, anchor_row: usize, slot: usize) -> usize {
        self.neighbor_indices[anchor_row * self.k_max + slot]
    }

    pub fn row_indices(&self, anchor_row: usize) -> &[usize] {
        let s = anchor_row * self.k_max;
        &self.neighbor_indices[s..s + self.k_max]
    }

    pub fn row_distances(&self, anchor_row: usize) -> &[f64] {
        let s = anchor_row * self.k_max;
        &self.raw_distances[s..s + self.k_max]
    }

    pub fn row_pad(&self, anchor_row: usize) -> &[bool] {
        let s = anchor_row * self.k_max;
        &self.pad_mask[s..s + self.k_max]
    }
}

fn validate_anchors(cloud: &PointCloud, anchors: &AnchorSet) -> Result<()> {
    for &a in &anchors.indices {
        if a >= cloud.len() {
            return Err(Error::InvalidRequest(format!(
                "anchor index {a} out of range for cloud of {} points",
                cloud.len()
            )));
        }
    }
    Ok(())
}

/// Greedy farthest point sampling.
///
/// The first anchor is drawn from `rng`; each subsequent anchor maximizes
/// the minimum distance to all previously chosen anchors, ties broken by
/// lowest index.
pub fn farthest_point_sample(cloud: &PointCloud, m: usize, rng: &mut Rng) -> Result<AnchorSet> {
    let start = rng.below(cloud.len());
    farthest_point_sample_from(cloud, m, start)
}

/// Deterministic farthest point sampling with an explicit first index.
pub fn farthest_point_sample_from(
    cloud: &PointCloud,
    m: usize,
    start: usize,
) -> Result<AnchorSet> {
    let n = cloud.len();
    if m == 0 || m > n {
        return Err(Error::InvalidRequest(format!(
            "cannot sample {m} anchors from {n} points"
        )));
    }
    if start >= n {
        return Err(Error::InvalidRequest(format!(
            "start index {start} out of range for {n} points"
        )));
    }
    let pts = &cloud.points;
    let mut indices = Vec::with_capacity(m);
    indices.push(start);
    // min squared distance from each point to the chosen set
    let mut min_d2: Vec<f64> = pts.iter().map(|p| p.dist_sq(&pts[start])).collect();
    for _ in 1..m {
        let mut best = 0;
        let mut best_d2 = f64::NEG_INFINITY;
        for (i, &d2) in min_d2.iter().enumerate() {
            if d2 > best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        indices.push(best);
        let bp = pts[best];
        for (i, d2) in min_d2.iter_mut().enumerate() {
            let nd = pts[i].dist_sq(&bp);
            if nd < *d2 {
                *d2 = nd;
            }
        }
    }
    Ok(AnchorSet { indices })
}

/// Ball query: per anchor, scan the cloud in ascending index order and keep
/// the first `k_max` points with distance <= r. Boundary points (distance
/// exactly r) are included. Short rows repeat the first qualifying index
/// with `pad_mask` set.
pub fn ball_query(
    cloud: &PointCloud,
    anchors: &AnchorSet,
    cfg: &BallQueryConfig,
) -> Result<NeighborhoodGrouping> {
    cfg.validate()?;
    validate_anchors(cloud, anchors)?;
    let m = anchors.len();
    let k = cfg.k_max;
    let r2 = cfg.radius * cfg.radius;
    let pts = &cloud.points;
    let mut neighbor_indices = vec![0usize; m * k];
    let mut raw_distances = vec![0.0f64; m * k];
    let mut pad_mask = vec![false; m * k];

    for (row, &a) in anchors.indices.iter().enumerate() {
        let ap = pts[a];
        let base = row * k;
        let mut filled = 0;
        for (i, p) in pts.iter().enumerate() {
            let d2 = p.dist_sq(&ap);
            if d2 <= r2 {
                neighbor_indices[base + filled] = i;
                raw_distances[base + filled] = crate::math::sqrt(d2);
                filled += 1;
                if filled == k {
                    break;
                }
            }
        }
        // The anchor itself always qualifies at distance 0, so filled >= 1.
        debug_assert!(filled >= 1);
        let pad_idx = neighbor_indices[base];
        let pad_dist = raw_distances[base];
        for s in filled..k {
            neighbor_indices[base + s] = pad_idx;
            raw_distances[base + s] = pad_dist;
            pad_mask[base + s] = true;
        }
    }

    Ok(NeighborhoodGrouping {
        anchors: anchors.clone(),
        k_max: k,
        neighbor_indices,
        raw_distances,
        pad_mask,
    })
}

/// k-nearest-neighbor query: per anchor, the k nearest points, ties broken
/// by lowest index. No padding is ever needed.
pub fn knn_query(cloud: &PointCloud, anchors: &AnchorSet, k: usize) -> Result<NeighborhoodGrouping> {
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(Error::InvalidRequest(format!(
            "knn with k={k} on a cloud of {n} points"
        )));
    }
    validate_anchors(cloud, anchors)?;
    let m = anchors.len();
    let pts = &cloud.points;
    let mut neighbor_indices = Vec::with_capacity(m * k);
    let mut raw_distances = Vec::with_capacity(m * k);

    let mut order: Vec<usize> = Vec::with_capacity(n);
    for &a in &anchors.indices {
        let ap = pts[a];
        order.clear();
        order.extend(0..n);
        order.sort_unstable_by(|&i, &j| {
            let di = pts[i].dist_sq(&ap);
            let dj = pts[j].dist_sq(&ap);
            di.partial_cmp(&dj).unwrap().then(i.cmp(&j))
        });
        for &i in order.iter().take(k) {
            neighbor_indices.push(i);
            raw_distances.push(pts[i].dist(&ap));
        }
    }

    Ok(NeighborhoodGrouping {
        anchors: anchors.clone(),
        k_max: k,
        neighbor_indices,
        raw_distances,
        pad_mask: vec![false; m * k],
    })
}

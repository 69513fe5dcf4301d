//! Radius-normalized neighborhood features.
//!
//! Two per-neighbor quantities are computed at the grouping stage and kept
//! as features instead of being discarded after querying: the anchor-to-
//! neighbor distance divided by the query radius, and the neighbor-minus-
//! anchor offset divided by the radius. The normalized distance is exactly
//! the Euclidean norm of the normalized offset.

use alloc::format;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::neighborhood::NeighborhoodGrouping;

/// Which augmentation blocks are appended to the lifted features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentationMode {
    /// Lifted features only.
    Base,
    /// Append the normalized distance (1 channel).
    Distance,
    /// Append the normalized directional vector (3 channels).
    Vectors,
    /// Append both (4 channels).
    Both,
}

impl AugmentationMode {
    pub fn has_distance(self) -> bool {
        matches!(self, AugmentationMode::Distance | AugmentationMode::Both)
    }

    pub fn has_vectors(self) -> bool {
        matches!(self, AugmentationMode::Vectors | AugmentationMode::Both)
    }

    /// Channels added on top of the base width.
    pub fn extra_channels(self) -> usize {
        3 * self.has_vectors() as usize + self.has_distance() as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            AugmentationMode::Base => "base",
            AugmentationMode::Distance => "distance",
            AugmentationMode::Vectors => "vectors",
            AugmentationMode::Both => "both",
        }
    }
}

/// Radius-normalized anchor-to-neighbor offsets, m x k_max x 3, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalVectors {
    pub num_anchors: usize,
    pub k_max: usize,
    pub dv: Vec<f64>,
}

impl DirectionalVectors {
    pub fn slot(&self, anchor_row: usize, slot: usize) -> [f64; 3] {
        let s = (anchor_row * self.k_max + slot) * 3;
        [self.dv[s], self.dv[s + 1], self.dv[s + 2]]
    }
}

/// Radius-normalized distances, m x k_max, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDistances {
    pub num_anchors: usize,
    pub k_max: usize,
    pub d: Vec<f64>,
}

impl NormalizedDistances {
    pub fn slot(&self, anchor_row: usize, slot: usize) -> f64 {
        self.d[anchor_row * self.k_max + slot]
    }
}

/// Channel layout of a feature tensor: the base width plus which
/// augmentation blocks follow it. Channel order is [base | dv | d].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelLayout {
    pub base_channels: usize,
    pub has_vectors: bool,
    pub has_distance: bool,
}

impl ChannelLayout {
    pub fn base(c0: usize) -> Self {
        ChannelLayout { base_channels: c0, has_vectors: false, has_distance: false }
    }

    pub fn total(&self) -> usize {
        self.base_channels + 3 * self.has_vectors as usize + self.has_distance as usize
    }
}

/// Per-anchor, per-neighbor channel vectors, m x k_max x C row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub num_anchors: usize,
    pub k_max: usize,
    pub layout: ChannelLayout,
    pub values: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(num_anchors: usize, k_max: usize, layout: ChannelLayout) -> Self {
        let c = layout.total();
        FeatureTensor {
            num_anchors,
            k_max,
            layout,
            values: alloc::vec![0.0; num_anchors * k_max * c],
        }
    }

    pub fn channels(&self) -> usize {
        self.layout.total()
    }

    pub fn slot(&self, anchor_row: usize, slot: usize) -> &[f64] {
        let c = self.channels();
        let s = (anchor_row * self.k_max + slot) * c;
        &self.values[s..s + c]
    }

    pub fn slot_mut(&mut self, anchor_row: usize, slot: usize) -> &mut [f64] {
        let c = self.channels();
        let s = (anchor_row * self.k_max + slot) * c;
        &mut self.values[s..s + c]
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "normalization radius must be positive and finite, got {r}"
        )));
    }
    Ok(())
}

/// Neighbor-minus-anchor offsets divided by the radius. Padded slots repeat
/// the pad point's vector, so pooling over duplicates is a no-op.
pub fn directional_vectors(
    cloud: &PointCloud,
    grouping: &NeighborhoodGrouping,
    r: f64,
) -> Result<DirectionalVectors> {
    check_radius(r)?;
    let m = grouping.num_anchors();
    let k = grouping.k_max;
    let inv_r = 1.0 / r;
    let pts = &cloud.points;
    let mut dv = Vec::with_capacity(m * k * 3);
    for (row, &a) in grouping.anchors.indices.iter().enumerate() {
        let ap = pts[a];
        for slot in 0..k {
            let nb = pts[grouping.slot(row, slot)];
            dv.push((nb.x - ap.x) * inv_r);
            dv.push((nb.y - ap.y) * inv_r);
            dv.push((nb.z - ap.z) * inv_r);
        }
    }
    Ok(DirectionalVectors { num_anchors: m, k_max: k, dv })
}

/// Anchor-to-neighbor distances, divided by the radius when `normalize` is
/// on. The raw variant backs the distance-vs-normalized-distance ablation.
pub fn normalized_distance(
    grouping: &NeighborhoodGrouping,
    r: f64,
    normalize: bool,
) -> Result<NormalizedDistances> {
    check_radius(r)?;
    let scale = if normalize { 1.0 / r } else { 1.0 };
    Ok(NormalizedDistances {
        num_anchors: grouping.num_anchors(),
        k_max: grouping.k_max,
        d: grouping.raw_distances.iter().map(|&d| d * scale).collect(),
    })
}

/// Per-anchor maximum raw neighbor distance, the normalization radius used
/// in kNN mode where no ball radius exists. Anchors whose every neighbor
/// coincides with them get radius 1 so normalization stays a no-op.
pub fn knn_radii(grouping: &NeighborhoodGrouping) -> Vec<f64> {
    (0..grouping.num_anchors())
        .map(|row| {
            let max = grouping
                .row_distances(row)
                .iter()
                .fold(0.0_f64, |a, &b| a.max(b));
            if max > 0.0 {
                max
            } else {
                1.0
            }
        })
        .collect()
}

/// Concatenate the enabled augmentation blocks onto the lifted features.
/// Output channel order is [lifted C0 | dv 3 | d 1]; values are copied.
pub fn assemble_features(
    lifted: &FeatureTensor,
    dv: &DirectionalVectors,
    d: &NormalizedDistances,
    mode: AugmentationMode,
) -> Result<FeatureTensor> {
    let (m, k) = (lifted.num_anchors, lifted.k_max);
    if dv.num_anchors != m || dv.k_max != k || d.num_anchors != m || d.k_max != k {
        return Err(Error::Shape(format!(
            "lifted {}x{}, dv {}x{}, d {}x{}",
            m, k, dv.num_anchors, dv.k_max, d.num_anchors, d.k_max
        )));
    }
    if lifted.layout.has_vectors || lifted.layout.has_distance {
        return Err(Error::Shape("lifted tensor is already augmented".into()));
    }
    let c0 = lifted.layout.base_channels;
    let layout = ChannelLayout {
        base_channels: c0,
        has_vectors: mode.has_vectors(),
        has_distance: mode.has_distance(),
    };
    let c = layout.total();
    let mut values = Vec::with_capacity(m * k * c);
    for row in 0..m {
        for slot in 0..k {
            values.extend_from_slice(lifted.slot(row, slot));
            if layout.has_vectors {
                values.extend_from_slice(&dv.slot(row, slot));
            }
            if layout.has_distance {
                values.push(d.slot(row, slot));
            }
        }
    }
    Ok(FeatureTensor { num_anchors: m, k_max: k, layout, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{Point3, PointCloud};
    use crate::neighborhood::{ball_query, AnchorSet, BallQueryConfig};
    use alloc::vec;

    fn cloud(pts: &[(f64, f64, f64)]) -> PointCloud {
        PointCloud::new(pts.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect()).unwrap()
    }

    #[test]
    fn dv_examples() {
        let c = cloud(&[(1.0, 1.0, 1.0), (1.2, 1.0, 1.0)]);
        let anchors = AnchorSet { indices: vec![0] };
        let g = ball_query(&c, &anchors, &BallQueryConfig { radius: 0.4, k_max: 2 }).unwrap();
        let dv = directional_vectors(&c, &g, 0.4).unwrap();
        assert_eq!(dv.slot(0, 0), [0.0, 0.0, 0.0]);
        let v = dv.slot(0, 1);
        assert!((v[0] - 0.5).abs() < 1e-12 && v[1] == 0.0 && v[2] == 0.0);
    }

    #[test]
    fn dv_rejects_nonpositive_radius() {
        let c = cloud(&[(0.0, 0.0, 0.0)]);
        let anchors = AnchorSet { indices: vec![0] };
        let g = ball_query(&c, &anchors, &BallQueryConfig { radius: 1.0, k_max: 1 }).unwrap();
        assert!(directional_vectors(&c, &g, 0.0).is_err());
        assert!(normalized_distance(&g, -1.0, true).is_err());
    }

    #[test]
    fn normalized_distance_examples() {
        let c = cloud(&[(0.0, 0.0, 0.0), (0.3, 0.4, 0.0)]);
        let anchors = AnchorSet { indices: vec![0] };
        let g = ball_query(&c, &anchors, &BallQueryConfig { radius: 1.0, k_max: 2 }).unwrap();
        let d = normalized_distance(&g, 1.0, true).unwrap();
        assert_eq!(d.slot(0, 0), 0.0);
        assert!((d.slot(0, 1) - 0.5).abs() < 1e-12);
        // point exactly on the ball
        let c2 = cloud(&[(0.0, 0.0, 0.0), (0.5, 0.0, 0.0)]);
        let g2 = ball_query(&c2, &anchors, &BallQueryConfig { radius: 0.5, k_max: 2 }).unwrap();
        let d2 = normalized_distance(&g2, 0.5, true).unwrap();
        assert!((d2.slot(0, 1) - 1.0).abs() < 1e-12);
        // ablation: normalize off keeps the raw distance
        let raw = normalized_distance(&g2, 0.5, false).unwrap();
        assert!((raw.slot(0, 1) - 0.5).abs() < 1e-12);
    }

    fn tiny_inputs() -> (FeatureTensor, DirectionalVectors, NormalizedDistances) {
        let c0 = 4;
        let (m, k) = (1, 2);
        let lifted = FeatureTensor {
            num_anchors: m,
            k_max: k,
            layout: ChannelLayout::base(c0),
            values: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        };
        let dv = DirectionalVectors {
            num_anchors: m,
            k_max: k,
            dv: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
        };
        let d = NormalizedDistances { num_anchors: m, k_max: k, d: vec![0.9, 0.8] };
        (lifted, dv, d)
    }

    #[test]
    fn assemble_base_is_identity() {
        let (lifted, dv, d) = tiny_inputs();
        let out = assemble_features(&lifted, &dv, &d, AugmentationMode::Base).unwrap();
        assert_eq!(out, lifted);
    }

    #[test]
    fn assemble_both_exact_layout() {
        let (lifted, dv, d) = tiny_inputs();
        let out = assemble_features(&lifted, &dv, &d, AugmentationMode::Both).unwrap();
        assert_eq!(out.channels(), 8);
        assert_eq!(out.slot(0, 0), &[1.0, 2.0, 3.0, 4.0, 0.1, 0.2, 0.3, 0.9]);
        assert_eq!(out.slot(0, 1), &[5.0, 6.0, 7.0, 8.0, 0.4, 0.5, 0.6, 0.8]);
    }

    #[test]
    fn assemble_channel_arithmetic() {
        let (m, k, c0) = (3, 2, 32);
        let lifted = FeatureTensor::zeros(m, k, ChannelLayout::base(c0));
        let dv = DirectionalVectors { num_anchors: m, k_max: k, dv: vec![0.0; m * k * 3] };
        let d = NormalizedDistances { num_anchors: m, k_max: k, d: vec![0.0; m * k] };
        for (mode, extra) in [
            (AugmentationMode::Base, 0),
            (AugmentationMode::Distance, 1),
            (AugmentationMode::Vectors, 3),
            (AugmentationMode::Both, 4),
        ] {
            let out = assemble_features(&lifted, &dv, &d, mode).unwrap();
            assert_eq!(out.channels(), c0 + extra);
        }
    }

    #[test]
    fn assemble_rejects_shape_mismatch() {
        let (lifted, dv, _) = tiny_inputs();
        let bad_d = NormalizedDistances { num_anchors: 2, k_max: 2, d: vec![0.0; 4] };
        assert!(matches!(
            assemble_features(&lifted, &dv, &bad_d, AugmentationMode::Both),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn assemble_preserves_block_sums() {
        let (lifted, dv, d) = tiny_inputs();
        let out = assemble_features(&lifted, &dv, &d, AugmentationMode::Both).unwrap();
        let total: f64 = out.values.iter().sum();
        let expect: f64 = lifted.values.iter().sum::<f64>()
            + dv.dv.iter().sum::<f64>()
            + d.d.iter().sum::<f64>();
        assert!((total - expect).abs() < 1e-9);
    }
}

//! Brute-force reference implementations for anchor sampling and grouping,
//! checked against the library versions on randomized inputs.

use lnf_core::neighborhood::{
    ball_query, farthest_point_sample_from, knn_query, AnchorSet, BallQueryConfig,
};
use lnf_core::{PointCloud, Point3, Rng};

fn random_cloud(rng: &mut Rng, n: usize) -> PointCloud {
    let points = (0..n)
        .map(|_| {
            Point3::new(
                rng.range_f64(-1.0, 1.0),
                rng.range_f64(-1.0, 1.0),
                rng.range_f64(-1.0, 1.0),
            )
        })
        .collect();
    PointCloud::new(points).unwrap()
}

/// Greedy max-min reference: recompute every candidate's distance to the
/// whole selected set each round. O(n^2 * m), no incremental state.
fn fps_reference(cloud: &PointCloud, m: usize, start: usize) -> Vec<usize> {
    let n = cloud.len();
    let mut selected = vec![start];
    while selected.len() < m {
        let mut best_idx = usize::MAX;
        let mut best_d2 = f64::NEG_INFINITY;
        for cand in 0..n {
            if selected.contains(&cand) {
                continue;
            }
            let d2 = selected
                .iter()
                .map(|&s| cloud.points[cand].dist_sq(&cloud.points[s]))
                .fold(f64::INFINITY, f64::min);
            if d2 > best_d2 {
                best_d2 = d2;
                best_idx = cand;
            }
        }
        selected.push(best_idx);
    }
    selected
}

/// Per-anchor reference for the ball query: scan all points in ascending
/// index order, keep the first k_max within the radius, pad with the first
/// qualifying index.
fn ball_reference(
    cloud: &PointCloud,
    anchors: &[usize],
    r: f64,
    k_max: usize,
) -> (Vec<usize>, Vec<f64>, Vec<bool>) {
    let mut indices = Vec::new();
    let mut distances = Vec::new();
    let mut pad = Vec::new();
    for &a in anchors {
        let ap = cloud.points[a];
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (i, p) in cloud.points.iter().enumerate() {
            if row.len() == k_max {
                break;
            }
            let d = ap.dist(p);
            if d <= r {
                row.push((i, d));
            }
        }
        assert!(!row.is_empty(), "anchor is always within its own ball");
        let first = row[0];
        for slot in 0..k_max {
            if let Some(&(i, d)) = row.get(slot) {
                indices.push(i);
                distances.push(d);
                pad.push(false);
            } else {
                indices.push(first.0);
                distances.push(first.1);
                pad.push(true);
            }
        }
    }
    (indices, distances, pad)
}

#[test]
fn fps_matches_greedy_reference() {
    let mut rng = Rng::new(11);
    for trial in 0..30 {
        let n = 4 + rng.below(60) as usize;
        let cloud = random_cloud(&mut rng, n);
        let m = 1 + rng.below(n);
        let start = rng.below(n);
        let got = farthest_point_sample_from(&cloud, m, start).unwrap();
        let want = fps_reference(&cloud, m, start);
        assert_eq!(got.indices, want, "trial {trial}, n={n}, m={m}");
    }
}

#[test]
fn fps_selects_distinct_valid_indices() {
    let mut rng = Rng::new(12);
    let cloud = random_cloud(&mut rng, 100);
    let anchors = farthest_point_sample_from(&cloud, 100, 3).unwrap();
    let mut seen = anchors.indices.clone();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), 100, "all indices distinct when m == n");
}

#[test]
fn ball_query_matches_bruteforce_on_200_random_clouds() {
    let start = std::time::Instant::now();
    let mut rng = Rng::new(20);
    for trial in 0..200 {
        let n = 8 + rng.below(249) as usize; // n <= 256
        let cloud = random_cloud(&mut rng, n);
        let m = 1 + rng.below(n.min(32));
        let anchors = farthest_point_sample_from(&cloud, m, 0).unwrap();
        let r = rng.range_f64(0.05, 0.5);
        let k_max = [4usize, 16, 32][rng.below(3) as usize];
        let cfg = BallQueryConfig { radius: r, k_max };
        let got = ball_query(&cloud, &anchors, &cfg).unwrap();
        let (idx, dist, pad) = ball_reference(&cloud, &anchors.indices, r, k_max);
        assert_eq!(got.neighbor_indices, idx, "trial {trial}");
        assert_eq!(got.pad_mask, pad, "trial {trial}");
        for (g, w) in got.raw_distances.iter().zip(&dist) {
            assert!((g - w).abs() <= 1e-12, "trial {trial}: {g} vs {w}");
        }
    }
    assert!(
        start.elapsed().as_secs_f64() < 10.0,
        "oracle comparison exceeded its time budget"
    );
}

#[test]
fn knn_matches_full_sort_reference() {
    let mut rng = Rng::new(21);
    for _ in 0..50 {
        let n = 5 + rng.below(120) as usize;
        let cloud = random_cloud(&mut rng, n);
        let m = 1 + rng.below(8) as usize;
        let anchors = farthest_point_sample_from(&cloud, m, 0).unwrap();
        let k = 1 + rng.below(n);
        let got = knn_query(&cloud, &anchors, k).unwrap();
        for (row, &a) in anchors.indices.iter().enumerate() {
            let mut all: Vec<(f64, usize)> = cloud
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| (cloud.points[a].dist(p), i))
                .collect();
            all.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let want: Vec<usize> = all[..k].iter().map(|&(_, i)| i).collect();
            assert_eq!(got.row_indices(row), &want[..]);
            assert!(got.row_pad(row).iter().all(|&p| !p), "knn rows are never padded");
        }
    }
}

#[test]
fn knn_and_unbounded_ball_agree_as_sets() {
    // With a radius covering the whole cloud and k_max == n, both queries
    // must return the same index set per anchor (orderings differ: kNN is
    // distance-sorted, ball query is index-ordered).
    let mut rng = Rng::new(22);
    let cloud = random_cloud(&mut rng, 64);
    let anchors = farthest_point_sample_from(&cloud, 6, 0).unwrap();
    let ball = ball_query(&cloud, &anchors, &BallQueryConfig { radius: 100.0, k_max: 64 }).unwrap();
    let knn = knn_query(&cloud, &anchors, 64).unwrap();
    for row in 0..6 {
        let mut b: Vec<usize> = ball.row_indices(row).to_vec();
        let mut k: Vec<usize> = knn.row_indices(row).to_vec();
        b.sort_unstable();
        k.sort_unstable();
        assert_eq!(b, k);
    }
}

#[test]
fn ball_query_ignores_point_order_when_rows_do_not_truncate() {
    // The first-k-ascending rule makes truncated rows depend on point order,
    // so the permutation property is stated for rows where every in-radius
    // point fits. k_max == n guarantees that.
    let mut rng = Rng::new(23);
    for _ in 0..25 {
        let n = 6 + rng.below(40) as usize;
        let cloud = random_cloud(&mut rng, n);
        let r = rng.range_f64(0.3, 1.0);
        let cfg = BallQueryConfig { radius: r, k_max: n };

        // A permutation and its inverse to relabel the cloud.
        let mut perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut perm);
        let permuted =
            PointCloud::new(perm.iter().map(|&i| cloud.points[i]).collect()).unwrap();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let anchor_old = rng.below(n);
        let a = AnchorSet { indices: vec![anchor_old] };
        let a_perm = AnchorSet { indices: vec![inv[anchor_old]] };

        let base = ball_query(&cloud, &a, &cfg).unwrap();
        let moved = ball_query(&permuted, &a_perm, &cfg).unwrap();

        let set_base: std::collections::BTreeSet<usize> = base
            .row_indices(0)
            .iter()
            .zip(base.row_pad(0))
            .filter(|&(_, &p)| !p)
            .map(|(&i, _)| i)
            .collect();
        let set_moved: std::collections::BTreeSet<usize> = moved
            .row_indices(0)
            .iter()
            .zip(moved.row_pad(0))
            .filter(|&(_, &p)| !p)
            .map(|(&i, _)| perm[i])
            .collect();
        assert_eq!(set_base, set_moved);
    }
}

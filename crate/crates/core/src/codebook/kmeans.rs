use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::patches::PatchMatrix;
use crate::error::{FameError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// `k x d`, row-major.
    pub centroids: Vec<f64>,
    pub k: usize,
    pub d: usize,
    /// Cluster index of every input row after the last assignment step.
    pub assignments: Vec<usize>,
    /// Rows assigned to each centroid.
    pub counts: Vec<usize>,
    /// Within-cluster SSE of each assignment step, against the centroids used for it.
    pub sse_history: Vec<f64>,
}

impl KMeansResult {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.d..(j + 1) * self.d]
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid (lowest index on ties) and its squared distance.
fn nearest(x: &[f64], centroids: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(d).enumerate() {
        let dist = sq_dist(x, c);
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best
}

/// Distance-weighted seeding: first centroid uniform, each next one drawn
/// with probability proportional to squared distance from the chosen set.
fn seed_centroids(patches: &PatchMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (n, d) = (patches.n(), patches.d());
    let mut centroids = Vec::with_capacity(k * d);
    centroids.extend_from_slice(patches.row(rng.random_range(0..n)));
    let mut closest: Vec<f64> = patches.rows().map(|r| sq_dist(r, &centroids[..d])).collect();
    for _ in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, w) in closest.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(patches.row(pick));
        for (c, r) in closest.iter_mut().zip(patches.rows()) {
            *c = c.min(sq_dist(r, &centroids[start..]));
        }
    }
    centroids
}

/// Lloyd's algorithm with seeded distance-weighted initialization. Empty
/// clusters are moved onto the points farthest from their current centroid.
pub fn kmeans(patches: &PatchMatrix, k: usize, max_iters: usize, seed: u64) -> Result<KMeansResult> {
    let (n, d) = (patches.n(), patches.d());
    if k == 0 || n < k {
        return Err(FameError::Argument(format!(
            "k-means needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(patches, k, &mut rng);
    let mut assignments = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    let mut sse_history = Vec::new();

    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        let mut sse = 0.0;
        for (i, r) in patches.rows().enumerate() {
            let (j, dist) = nearest(r, &centroids, d);
            if assignments[i] != j {
                assignments[i] = j;
                changed = true;
            }
            dists[i] = dist;
            sse += dist;
        }
        sse_history.push(sse);
        if !changed {
            break;
        }

        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (r, &j) in patches.rows().zip(&assignments) {
            counts[j] += 1;
            for (s, v) in sums[j * d..(j + 1) * d].iter_mut().zip(r) {
                *s += v;
            }
        }
        let mut taken = vec![false; n];
        for j in 0..k {
            if counts[j] > 0 {
                let inv = 1.0 / counts[j] as f64;
                for (c, s) in centroids[j * d..(j + 1) * d].iter_mut().zip(&sums[j * d..]) {
                    *c = s * inv;
                }
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("n >= k leaves a free point");
                taken[far] = true;
                centroids[j * d..(j + 1) * d].copy_from_slice(patches.row(far));
            }
        }
    }

    let mut counts = vec![0usize; k];
    for &j in &assignments {
        counts[j] += 1;
    }
    Ok(KMeansResult {
        centroids,
        k,
        d,
        assignments,
        counts,
        sse_history,
    })
}

/// Which tail of the assignment-count distribution marks an outlier centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierRule {
    /// Counts above the 99th-percentile upper whisker.
    #[default]
    High,
    /// Counts below the 1st-percentile lower whisker.
    Low,
    Both,
}

impl std::str::FromStr for OutlierRule {
    type Err = FameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high" => Ok(OutlierRule::High),
            "low" => Ok(OutlierRule::Low),
            "both" => Ok(OutlierRule::Both),
            _ => Err(FameError::Argument(format!("unknown outlier rule {s:?}"))),
        }
    }
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Flags centroids whose assignment counts fall outside the 1%/99% whiskers.
/// At least one centroid always stays unflagged.
pub fn flag_outlier_centroids(counts: &[usize], rule: OutlierRule) -> Vec<bool> {
    if counts.len() < 2 {
        return vec![false; counts.len()];
    }
    let mut sorted: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let upper = percentile(&sorted, 99.0);
    let lower = percentile(&sorted, 1.0);
    let mask: Vec<bool> = counts
        .iter()
        .map(|&c| {
            let c = c as f64;
            match rule {
                OutlierRule::High => c > upper,
                OutlierRule::Low => c < lower,
                OutlierRule::Both => c > upper || c < lower,
            }
        })
        .collect();
    if mask.iter().all(|&m| m) {
        return vec![false; counts.len()];
    }
    mask
}

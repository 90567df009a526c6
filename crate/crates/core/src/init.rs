//! Latent-state initialization for the concave-convex training loop.
//!
//! Three strategies: uniform random draws, k-means over the pooled
//! segment features, and k-means over 1-of-N encodings of side-channel
//! categorical labels. All are pure functions of their inputs and the
//! seed; k-means uses k-means++ seeding per restart and keeps the restart
//! with the smallest within-cluster sum of squared distances.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sequence::SegmentSequence;
use crate::util::{map_collect, squared_distance};

/// Restarts used by the latent initializers.
pub const KMEANS_RESTARTS: usize = 10;
/// Lloyd iteration cap per restart.
pub const KMEANS_MAX_ITERS: usize = 100;

/// Output of one k-means run: per-point cluster ids, the centers, and the
/// within-cluster sum of squared distances.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub sse: f64,
}

/// Side-channel per-segment categorical labels (for example object-use
/// annotations), aligned with a dataset sequence by sequence.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CategoryLabels {
    pub n_categories: usize,
    /// One list per sequence, one category id per segment.
    pub labels: Vec<Vec<usize>>,
}

impl CategoryLabels {
    /// Checks alignment against a dataset: one list per sequence with one
    /// id per segment, all ids in range.
    pub fn validate_against(&self, dataset: &[SegmentSequence]) -> Result<()> {
        if self.labels.len() != dataset.len() {
            return Err(Error::LengthMismatch {
                what: "categorical label lists",
                expected: dataset.len(),
                actual: self.labels.len(),
            });
        }
        for (seq, labels) in dataset.iter().zip(&self.labels) {
            if labels.len() != seq.len() {
                return Err(Error::LengthMismatch {
                    what: "per-segment categorical labels",
                    expected: seq.len(),
                    actual: labels.len(),
                });
            }
        }
        for &c in self.labels.iter().flatten() {
            if c >= self.n_categories {
                return Err(Error::LabelOutOfRange {
                    what: "categorical label",
                    value: c,
                    limit: self.n_categories,
                });
            }
        }
        Ok(())
    }
}

/// Uniform i.i.d. latent states, one per segment, deterministic per seed.
pub fn init_random(dataset: &[SegmentSequence], n_latent: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dataset
        .iter()
        .map(|seq| {
            (0..seq.len())
                .map(|_| rng.random_range(0..n_latent))
                .collect()
        })
        .collect()
}

/// Lloyd's algorithm with k-means++ seeding, restarted `restarts` times;
/// returns the restart with the smallest SSE.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KmeansResult> {
    if points.is_empty() {
        return Err(Error::EmptyInput { what: "points" });
    }
    if k == 0 || restarts == 0 {
        return Err(Error::InvalidConfig("k and restarts must be >= 1".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            what: "clustering points",
            expected: dim,
            actual: points
                .iter()
                .map(Vec::len)
                .find(|&l| l != dim)
                .unwrap_or(dim),
        });
    }
    if count_distinct(points, k) < k {
        return Err(Error::DegenerateInput(format!(
            "need at least {k} distinct points"
        )));
    }

    // Restart seeds are drawn up front so restarts can run in parallel
    // without changing the result.
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let restart_seeds: Vec<u64> = (0..restarts).map(|_| master.random()).collect();
    let runs = map_collect(&restart_seeds, |&rs| {
        let mut rng = ChaCha8Rng::seed_from_u64(rs);
        let centers = kmeans_pp_seed(points, k, &mut rng);
        lloyd(points, centers, KMEANS_MAX_ITERS).result
    });
    let best = runs
        .into_iter()
        .min_by(|a, b| a.sse.partial_cmp(&b.sse).expect("finite SSE"))
        .expect("restarts >= 1");
    Ok(best)
}

/// Counts distinct points, stopping once `needed` have been seen.
fn count_distinct(points: &[Vec<f64>], needed: usize) -> usize {
    let mut distinct: Vec<&[f64]> = Vec::new();
    for p in points {
        if !distinct.contains(&p.as_slice()) {
            distinct.push(p);
            if distinct.len() >= needed {
                break;
            }
        }
    }
    distinct.len()
}

fn kmeans_pp_seed(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = 0;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = i;
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick
        } else {
            // All points coincide with existing centers; the distinct-point
            // precondition makes this unreachable, but stay safe.
            rng.random_range(0..points.len())
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, centers.last().expect("nonempty"));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

struct LloydRun {
    result: KmeansResult,
    /// SSE after each assignment step, for the monotonicity tests.
    #[cfg_attr(not(test), allow(dead_code))]
    sse_history: Vec<f64>,
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iters: usize) -> LloydRun {
    let k = centers.len();
    let mut assignments = vec![0usize; points.len()];
    let mut sse_history = Vec::new();
    for _ in 0..max_iters {
        // Assignment step.
        let mut changed = false;
        let mut sse = 0.0;
        for (i, p) in points.iter().enumerate() {
            let mut best = squared_distance(p, &centers[0]);
            let mut best_c = 0;
            for (c, center) in centers.iter().enumerate().skip(1) {
                let d = squared_distance(p, center);
                if d < best {
                    best = d;
                    best_c = c;
                }
            }
            sse += best;
            if assignments[i] != best_c {
                assignments[i] = best_c;
                changed = true;
            }
        }
        sse_history.push(sse);
        if !changed && sse_history.len() > 1 {
            break;
        }
        // Update step.
        let mut counts = vec![0usize; k];
        for c in centers.iter_mut() {
            c.fill(0.0);
        }
        for (i, p) in points.iter().enumerate() {
            counts[assignments[i]] += 1;
            for (acc, x) in centers[assignments[i]].iter_mut().zip(p) {
                *acc += x;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            if counts[c] > 0 {
                for x in center.iter_mut() {
                    *x /= counts[c] as f64;
                }
            }
        }
        // Empty-cluster repair: move the center onto the point farthest
        // from its current center. Strictly decreases the SSE.
        for c in 0..k {
            if counts[c] == 0 {
                let mut far_i = 0;
                let mut far_d = -1.0;
                for (i, p) in points.iter().enumerate() {
                    let d = squared_distance(p, &centers[assignments[i]]);
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                centers[c] = points[far_i].clone();
                assignments[far_i] = c;
                counts[c] = 1;
            }
        }
    }
    // Final consistent assignment and SSE against the final centers.
    let mut sse = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = squared_distance(p, &centers[0]);
        let mut best_c = 0;
        for (c, center) in centers.iter().enumerate().skip(1) {
            let d = squared_distance(p, center);
            if d < best {
                best = d;
                best_c = c;
            }
        }
        assignments[i] = best_c;
        sse += best;
    }
    LloydRun {
        result: KmeansResult {
            assignments,
            centers,
            sse,
        },
        sse_history,
    }
}

/// Pools every segment feature vector across the dataset, clusters them
/// into `n_latent` groups ([`KMEANS_RESTARTS`] restarts), and assigns
/// each segment its cluster id as the initial latent state.
pub fn init_kmeans_features(
    dataset: &[SegmentSequence],
    n_latent: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let pooled: Vec<Vec<f64>> = dataset
        .iter()
        .flat_map(|seq| seq.segments.iter().cloned())
        .collect();
    let result = kmeans(&pooled, n_latent, KMEANS_RESTARTS, seed)?;
    Ok(unpool(dataset, &result.assignments))
}

/// Encodes each segment's categorical id as a 1-of-N binary vector and
/// clusters as in [`init_kmeans_features`].
pub fn init_kmeans_categorical(
    labels: &[Vec<usize>],
    n_categories: usize,
    n_latent: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if n_categories == 0 {
        return Err(Error::InvalidConfig("n_categories must be >= 1".into()));
    }
    let mut pooled = Vec::new();
    for &c in labels.iter().flatten() {
        if c >= n_categories {
            return Err(Error::LabelOutOfRange {
                what: "categorical label",
                value: c,
                limit: n_categories,
            });
        }
        let mut one_hot = vec![0.0; n_categories];
        one_hot[c] = 1.0;
        pooled.push(one_hot);
    }
    if pooled.is_empty() {
        return Err(Error::EmptyInput {
            what: "categorical labels",
        });
    }
    let result = kmeans(&pooled, n_latent, KMEANS_RESTARTS, seed)?;
    let mut out = Vec::with_capacity(labels.len());
    let mut offset = 0;
    for l in labels {
        out.push(result.assignments[offset..offset + l.len()].to_vec());
        offset += l.len();
    }
    Ok(out)
}

fn unpool(dataset: &[SegmentSequence], flat: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(dataset.len());
    let mut offset = 0;
    for seq in dataset {
        out.push(flat[offset..offset + seq.len()].to_vec());
        offset += seq.len();
    }
    out
}

//! Random small instances shared by the oracle and property tests.

use hcrf_core::{LabelSpace, SegmentSequence, WeightPack};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Not every test binary touches every field.
#[allow(dead_code)]
pub struct Instance {
    pub space: LabelSpace,
    pub weights: WeightPack,
    pub seq: SegmentSequence,
    pub gold_actions: Vec<usize>,
    pub gold_activity: usize,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>() * 2.0 - 1.0
}

/// A random instance small enough for exhaustive enumeration:
/// K <= 5, N_y <= 3, N_z <= 2, N_A <= 2, D <= 4. Roughly one instance in
/// ten carries all-zero weights to exercise the tie rule.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let space = LabelSpace::new(
        rng.random_range(1..=3),
        rng.random_range(1..=2),
        rng.random_range(1..=2),
        rng.random_range(1..=4),
        rng.random_range(1..=3),
    )
    .unwrap();
    let k = rng.random_range(1..=5);
    let zero_weights = rng.random_range(0..10) == 0;
    let flat: Vec<f64> = (0..space.total_dim())
        .map(|_| if zero_weights { 0.0 } else { uniform(rng) })
        .collect();
    let weights = WeightPack::unflatten(space, &flat).unwrap();
    let seq = SegmentSequence {
        id: "rand".into(),
        subject: "s".into(),
        activity: None,
        actions: None,
        segments: (0..k)
            .map(|_| (0..space.dim_segment).map(|_| uniform(rng)).collect())
            .collect(),
        global: (0..space.dim_global).map(|_| uniform(rng)).collect(),
    };
    let gold_actions = (0..k)
        .map(|_| rng.random_range(0..space.n_actions))
        .collect();
    let gold_activity = rng.random_range(0..space.n_activities);
    Instance {
        space,
        weights,
        seq,
        gold_actions,
        gold_activity,
    }
}

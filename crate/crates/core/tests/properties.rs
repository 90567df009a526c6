//! Structural properties: the total-dimension formula, exact
//! flatten/unflatten round-trips, linearity of the score in the
//! parameters, and invariance of the decoded labels under a constant
//! shift of the bias block.

mod common;

use common::{random_instance, rng, uniform};
use hcrf_core::{decode, joint_feature_map, joint_score, LabelSpace, WeightPack};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Every module derives its sizes from `total_dim`; the zero pack and
    /// the flattened vector must agree with the closed-form count.
    #[test]
    fn total_dim_formula_holds(
        ny in 1usize..6,
        nz in 1usize..4,
        na in 1usize..5,
        d in 1usize..9,
        d0 in 1usize..7,
    ) {
        let space = LabelSpace::new(ny, nz, na, d, d0).unwrap();
        let expected = ny * nz * d + ny * nz + (ny * nz) * (ny * nz) + ny * ny * na + na * d0;
        prop_assert_eq!(space.total_dim(), expected);
        prop_assert_eq!(WeightPack::zeros(space).flatten().len(), expected);
    }

    /// flatten(unflatten(v)) is bitwise identical to v.
    #[test]
    fn flatten_round_trip_is_exact(
        ny in 1usize..4,
        nz in 1usize..3,
        na in 1usize..4,
        d in 1usize..5,
        d0 in 1usize..4,
        seed in any::<u64>(),
    ) {
        let space = LabelSpace::new(ny, nz, na, d, d0).unwrap();
        let mut r = rng(seed);
        let v: Vec<f64> = (0..space.total_dim()).map(|_| uniform(&mut r)).collect();
        let pack = WeightPack::unflatten(space, &v).unwrap();
        let round = pack.flatten();
        let bits: Vec<u64> = round.iter().map(|x| x.to_bits()).collect();
        let expect: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        prop_assert_eq!(bits, expect);
    }
}

#[test]
fn score_is_linear_in_the_parameters() {
    let mut rng = rng(0x11FE);
    for case in 0..300 {
        let inst = random_instance(&mut rng);
        let assignment = random_assignment(&mut rng, &inst);
        let score = joint_score(&inst.weights, &inst.seq, &assignment).unwrap();
        let psi = joint_feature_map(&inst.seq, &assignment, &inst.space).unwrap();
        let flat = inst.weights.flatten();
        let dot: f64 = flat.iter().zip(&psi).map(|(a, b)| a * b).sum();
        assert!(
            (score - dot).abs() <= 1e-9 * (1.0 + score.abs()),
            "case {case}: {score} vs {dot}"
        );
    }
}

fn random_assignment(
    rng: &mut rand_chacha::ChaCha8Rng,
    inst: &common::Instance,
) -> hcrf_core::JointAssignment {
    hcrf_core::JointAssignment {
        activity: rng.random_range(0..inst.space.n_activities),
        actions: (0..inst.seq.len())
            .map(|_| rng.random_range(0..inst.space.n_actions))
            .collect(),
        latents: (0..inst.seq.len())
            .map(|_| rng.random_range(0..inst.space.n_latent))
            .collect(),
    }
}

/// Adding a constant c to every bias entry adds exactly K*c to the score
/// of every labeling, so the decoded labels cannot change.
#[test]
fn constant_bias_shift_leaves_the_argmax_unchanged() {
    let mut rng = rng(0x5217);
    for case in 0..100 {
        let inst = random_instance(&mut rng);
        let c = uniform(&mut rng) * 3.0;
        let mut flat = inst.weights.flatten();
        for v in &mut flat[inst.space.w2_offset()..inst.space.w3_offset()] {
            *v += c;
        }
        let shifted = WeightPack::unflatten(inst.space, &flat).unwrap();

        let asg = random_assignment(&mut rng, &inst);
        let base = joint_score(&inst.weights, &inst.seq, &asg).unwrap();
        let moved = joint_score(&shifted, &inst.seq, &asg).unwrap();
        let expect = base + inst.seq.len() as f64 * c;
        assert!(
            (moved - expect).abs() <= 1e-9 * (1.0 + expect.abs()),
            "case {case}: shift mismatch"
        );

        let before = decode(&inst.weights, &inst.seq).unwrap();
        let after = decode(&shifted, &inst.seq).unwrap();
        assert_eq!(before.activity, after.activity, "case {case}");
        assert_eq!(before.actions, after.actions, "case {case}");
        assert_eq!(before.latents, after.latents, "case {case}");
    }
}

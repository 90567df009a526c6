//! Exact decoding over the collapsed linear chain.
//!
//! Collapsing `(action, latent)` into one product state of cardinality
//! `S = N_y * N_z` turns the model into a linear chain per activity, so a
//! Viterbi sweep per activity finds the exact global argmax in
//! `O(S^2 N_A K)` plus `O(S K D)` for the node scores. The same sweep
//! serves plain decoding, loss-augmented decoding (the per-segment and
//! activity loss terms decompose onto the chain), and latent completion
//! with actions and activity clamped.
//!
//! Tie rule (frozen so the exhaustive oracle can agree exactly): on equal
//! scores prefer the smaller activity id, then the smaller product-state
//! index at the last segment, then at the previous segment, and so on.
//! The per-stage sweeps implement this by visiting candidates in
//! ascending index order and replacing the incumbent only on a strictly
//! greater score. The loss-augmented variant prefers the gold activity
//! ahead of the smaller-id rule on exact activity ties: the choice is
//! equivariant under relabeling of the activities, which keeps the
//! `lambda = 0` training trajectory independent of how gold activities
//! are labeled (with the smaller-id rule, the all-tied first iteration
//! at w = 0 would leak an arbitrary activity into the constraint set).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::learning::loss_delta;
use crate::potentials::{score_global, score_node, JointAssignment};
use crate::sequence::SegmentSequence;
use crate::weights::WeightPack;

/// Default cap on the number of assignments [`brute_force_decode`] will
/// enumerate.
pub const BRUTE_FORCE_CAP: u128 = 2_000_000;

/// An argmax labeling together with its score. For the loss-augmented
/// variant the score includes the loss augmentation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecodeResult {
    pub activity: usize,
    pub actions: Vec<usize>,
    pub latents: Vec<usize>,
    pub score: f64,
}

impl DecodeResult {
    pub fn assignment(&self) -> JointAssignment {
        JointAssignment {
            activity: self.activity,
            actions: self.actions.clone(),
            latents: self.latents.clone(),
        }
    }
}

/// Loss terms added during most-violated-constraint search: `1/K` per
/// segment whose action disagrees with gold, plus `lambda` if the
/// activity disagrees.
#[derive(Debug, Clone, Copy)]
pub struct LossAugment<'a> {
    pub gold_actions: &'a [usize],
    pub gold_activity: usize,
    pub lambda: f64,
}

/// Dynamic-programming table of the per-activity chain sweeps:
/// `values[a][k][s]` is the best score of any length-`k+1` prefix ending
/// in product state `s` under activity `a`, and `backptr` stores the
/// argmax predecessor state (`u32::MAX` sentinel at `k = 0`).
#[derive(Debug, Clone)]
pub struct DpTable {
    pub n_activities: usize,
    pub len: usize,
    pub n_states: usize,
    pub values: Vec<f64>,
    pub backptr: Vec<u32>,
}

impl DpTable {
    fn new(n_activities: usize, len: usize, n_states: usize) -> Self {
        let total = n_activities * len * n_states;
        Self {
            n_activities,
            len,
            n_states,
            values: vec![f64::NEG_INFINITY; total],
            backptr: vec![u32::MAX; total],
        }
    }

    #[inline]
    fn idx(&self, a: usize, k: usize, s: usize) -> usize {
        (a * self.len + k) * self.n_states + s
    }

    #[inline]
    pub fn value(&self, a: usize, k: usize, s: usize) -> f64 {
        self.values[self.idx(a, k, s)]
    }

    #[inline]
    pub fn back(&self, a: usize, k: usize, s: usize) -> u32 {
        self.backptr[self.idx(a, k, s)]
    }
}

/// Exact argmax over all `N_A * (N_y * N_z)^K` labelings.
pub fn decode(w: &WeightPack, seq: &SegmentSequence) -> Result<DecodeResult> {
    viterbi(w, seq, None)
}

/// Exact argmax of `loss + score` over all labelings: the most violated
/// margin constraint. The returned score includes the loss terms.
pub fn decode_loss_augmented(
    w: &WeightPack,
    seq: &SegmentSequence,
    gold_actions: &[usize],
    gold_activity: usize,
    lambda: f64,
) -> Result<DecodeResult> {
    let aug = LossAugment {
        gold_actions,
        gold_activity,
        lambda,
    };
    validate_augment(w, seq, &aug)?;
    viterbi(w, seq, Some(aug))
}

fn validate_augment(w: &WeightPack, seq: &SegmentSequence, aug: &LossAugment) -> Result<()> {
    let space = w.space();
    if aug.gold_actions.len() != seq.len() {
        return Err(Error::LengthMismatch {
            what: "gold action sequence",
            expected: seq.len(),
            actual: aug.gold_actions.len(),
        });
    }
    for &y in aug.gold_actions {
        if y >= space.n_actions {
            return Err(Error::LabelOutOfRange {
                what: "action",
                value: y,
                limit: space.n_actions,
            });
        }
    }
    if aug.gold_activity >= space.n_activities {
        return Err(Error::LabelOutOfRange {
            what: "activity",
            value: aug.gold_activity,
            limit: space.n_activities,
        });
    }
    if !aug.lambda.is_finite() {
        return Err(Error::NonFinite {
            what: "loss weight lambda",
        });
    }
    Ok(())
}

/// Node scores shared by every activity sweep; the loss augmentation adds
/// `1/K` to every state whose action disagrees with gold.
#[allow(clippy::needless_range_loop)]
fn node_scores(w: &WeightPack, seq: &SegmentSequence, aug: Option<&LossAugment>) -> Vec<f64> {
    let space = w.space();
    let s_count = space.n_joint();
    let k_len = seq.len();
    let unit = 1.0 / (k_len as f64);
    let mut node = vec![0.0; k_len * s_count];
    for (k, x) in seq.segments.iter().enumerate() {
        for y in 0..space.n_actions {
            let miss = match aug {
                Some(aug) if aug.gold_actions[k] != y => unit,
                _ => 0.0,
            };
            for z in 0..space.n_latent {
                node[k * s_count + space.joint_index(y, z)] = score_node(w, x, y, z) + miss;
            }
        }
    }
    node
}

#[allow(clippy::needless_range_loop)]
fn viterbi(
    w: &WeightPack,
    seq: &SegmentSequence,
    aug: Option<LossAugment>,
) -> Result<DecodeResult> {
    let space = *w.space();
    crate::sequence::validate_features(seq, &space)?;
    let s_count = space.n_joint();
    let k_len = seq.len();
    let node = node_scores(w, seq, aug.as_ref());

    let mut table = DpTable::new(space.n_activities, k_len, s_count);
    let mut prev_row = vec![0.0; s_count];
    let mut best = vec![0.0; s_count];
    let mut best_prev = vec![0u32; s_count];
    for a in 0..space.n_activities {
        for s in 0..s_count {
            let i = table.idx(a, 0, s);
            table.values[i] = node[s];
        }
        for k in 1..k_len {
            for s in 0..s_count {
                prev_row[s] = table.value(a, k - 1, s);
            }
            best.fill(f64::NEG_INFINITY);
            best_prev.fill(0);
            for sp in 0..s_count {
                let y_prev = sp / space.n_latent;
                let z_prev = sp % space.n_latent;
                let base = prev_row[sp];
                let w3_row = w.w3_row(y_prev, z_prev);
                for y in 0..space.n_actions {
                    let common = base + w.w4(y_prev, y, a);
                    for z in 0..space.n_latent {
                        let s = space.joint_index(y, z);
                        let cand = common + w3_row[s];
                        if cand > best[s] {
                            best[s] = cand;
                            best_prev[s] = sp as u32;
                        }
                    }
                }
            }
            for s in 0..s_count {
                let i = table.idx(a, k, s);
                table.values[i] = node[k * s_count + s] + best[s];
                table.backptr[i] = best_prev[s];
            }
        }
    }

    // Finalization: add the global term (and the activity loss term for
    // augmented decoding) and take the argmax over (activity, last state).
    let gold_activity = aug.as_ref().map(|aug| aug.gold_activity);
    let mut best_total = f64::NEG_INFINITY;
    let mut best_a = 0;
    let mut best_s = 0;
    let mut first = true;
    for a in 0..space.n_activities {
        let mut tail = score_global(w, &seq.global, a);
        if let Some(aug) = &aug {
            if a != aug.gold_activity {
                tail += aug.lambda;
            }
        }
        for s in 0..s_count {
            let total = table.value(a, k_len - 1, s) + tail;
            let replace = first
                || total > best_total
                || (total == best_total && gold_activity.is_some_and(|g| a == g && best_a != g));
            if replace {
                best_total = total;
                best_a = a;
                best_s = s;
                first = false;
            }
        }
    }

    let mut states = vec![0usize; k_len];
    states[k_len - 1] = best_s;
    for k in (1..k_len).rev() {
        states[k - 1] = table.back(best_a, k, states[k]) as usize;
    }
    let actions = states.iter().map(|&s| s / space.n_latent).collect();
    let latents = states.iter().map(|&s| s % space.n_latent).collect();
    Ok(DecodeResult {
        activity: best_a,
        actions,
        latents,
        score: best_total,
    })
}

/// Exact argmax over latent states only, with actions and activity
/// clamped to gold: a Viterbi sweep over the `N_z` latent states.
/// Returns the latent path and the full score of the completed labeling.
#[allow(clippy::needless_range_loop)]
pub fn complete_latent(
    w: &WeightPack,
    seq: &SegmentSequence,
    gold_actions: &[usize],
    gold_activity: usize,
) -> Result<(Vec<usize>, f64)> {
    let space = *w.space();
    validate_augment(
        w,
        seq,
        &LossAugment {
            gold_actions,
            gold_activity,
            lambda: 0.0,
        },
    )?;
    crate::sequence::validate_features(seq, &space)?;
    let nz = space.n_latent;
    let k_len = seq.len();

    let mut values = vec![f64::NEG_INFINITY; k_len * nz];
    let mut backptr = vec![u32::MAX; k_len * nz];
    for z in 0..nz {
        values[z] = score_node(w, &seq.segments[0], gold_actions[0], z);
    }
    for k in 1..k_len {
        let y_prev = gold_actions[k - 1];
        let y = gold_actions[k];
        let w4v = w.w4(y_prev, y, gold_activity);
        for z in 0..nz {
            let mut best = f64::NEG_INFINITY;
            let mut best_zp = 0u32;
            for zp in 0..nz {
                let cand = values[(k - 1) * nz + zp] + w.w3(y_prev, zp, y, z);
                if cand > best {
                    best = cand;
                    best_zp = zp as u32;
                }
            }
            values[k * nz + z] = score_node(w, &seq.segments[k], y, z) + best + w4v;
            backptr[k * nz + z] = best_zp;
        }
    }

    let mut best_total = f64::NEG_INFINITY;
    let mut best_z = 0;
    let tail = score_global(w, &seq.global, gold_activity);
    for z in 0..nz {
        let total = values[(k_len - 1) * nz + z] + tail;
        if total > best_total {
            best_total = total;
            best_z = z;
        }
    }
    let mut latents = vec![0usize; k_len];
    latents[k_len - 1] = best_z;
    for k in (1..k_len).rev() {
        latents[k - 1] = backptr[k * nz + latents[k]] as usize;
    }
    Ok((latents, best_total))
}

/// Exhaustive-enumeration oracle sharing the decode tie rule. Guarded by
/// `cap` (defaults to [`BRUTE_FORCE_CAP`]) on the assignment count.
pub fn brute_force_decode(
    w: &WeightPack,
    seq: &SegmentSequence,
    aug: Option<&LossAugment>,
    cap: Option<u128>,
) -> Result<DecodeResult> {
    let space = *w.space();
    if let Some(aug) = aug {
        validate_augment(w, seq, aug)?;
    }
    crate::sequence::validate_features(seq, &space)?;
    let s_count = space.n_joint();
    let k_len = seq.len();
    let cap = cap.unwrap_or(BRUTE_FORCE_CAP);
    let paths = (s_count as u128)
        .checked_pow(k_len as u32)
        .and_then(|p| p.checked_mul(space.n_activities as u128))
        .ok_or(Error::InstanceTooLarge {
            assignments: u128::MAX,
            cap,
        })?;
    if paths > cap {
        return Err(Error::InstanceTooLarge {
            assignments: paths,
            cap,
        });
    }

    let mut incumbent: Option<(f64, usize, Vec<usize>)> = None;
    let mut states = vec![0usize; k_len];
    for a in 0..space.n_activities {
        loop {
            let actions: Vec<usize> = states.iter().map(|&s| s / space.n_latent).collect();
            let latents: Vec<usize> = states.iter().map(|&s| s % space.n_latent).collect();
            let asg = JointAssignment {
                activity: a,
                actions,
                latents,
            };
            let mut score = crate::potentials::joint_score(w, seq, &asg)?;
            if let Some(aug) = aug {
                score += loss_delta(
                    aug.gold_actions,
                    &asg.actions,
                    aug.gold_activity,
                    a,
                    aug.lambda,
                )?;
            }
            let replace = match &incumbent {
                None => true,
                Some((inc_score, inc_a, inc_states)) => {
                    score > *inc_score
                        || (score == *inc_score
                            && tie_smaller(
                                aug.map(|aug| aug.gold_activity),
                                a,
                                &states,
                                *inc_a,
                                inc_states,
                            ))
                }
            };
            if replace {
                incumbent = Some((score, a, states.clone()));
            }
            if !advance(&mut states, s_count) {
                break;
            }
        }
    }
    let (score, activity, states) = incumbent.expect("at least one assignment");
    Ok(DecodeResult {
        activity,
        actions: states.iter().map(|&s| s / space.n_latent).collect(),
        latents: states.iter().map(|&s| s % space.n_latent).collect(),
        score,
    })
}

/// The decode tie order: the gold activity first when decoding
/// loss-augmented, then the smaller activity, then the smaller product
/// state at the last segment, then at the one before it, and so on.
fn tie_smaller(
    gold_activity: Option<usize>,
    a: usize,
    states: &[usize],
    inc_a: usize,
    inc_states: &[usize],
) -> bool {
    if let Some(g) = gold_activity {
        if (a == g) != (inc_a == g) {
            return a == g;
        }
    }
    if a != inc_a {
        return a < inc_a;
    }
    for k in (0..states.len()).rev() {
        if states[k] != inc_states[k] {
            return states[k] < inc_states[k];
        }
    }
    false
}

/// Odometer step over base-`s_count` digits; returns false on wrap.
fn advance(states: &mut [usize], s_count: usize) -> bool {
    for digit in states.iter_mut().rev() {
        *digit += 1;
        if *digit < s_count {
            return true;
        }
        *digit = 0;
    }
    false
}

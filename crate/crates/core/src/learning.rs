//! Latent max-margin training.
//!
//! The objective is the margin-rescaled surrogate of the labeling loss: a
//! convex term (the loss-augmented max over all labelings) minus a
//! concave term (the best latent completion of the gold labels). The
//! concave-convex outer loop alternates latent completion with a convex
//! structured-SVM solve; the convex solve is a 1-slack cutting plane over
//! averaged most-violated constraints, and its working-set QP is solved
//! in the dual by projected coordinate ascent with cached Gram entries.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inference::{complete_latent, decode_loss_augmented};
use crate::init::{init_kmeans_categorical, init_kmeans_features, init_random, CategoryLabels};
use crate::potentials::{joint_feature_map, JointAssignment};
use crate::sequence::{validate_sequence, SegmentSequence};
use crate::space::{Hyperparams, InitStrategy, LabelSpace};
use crate::util::{axpy, dot, map_collect, Stopwatch};
use crate::weights::WeightPack;

const QP_TOLERANCE: f64 = 1e-6;
const QP_MAX_SWEEPS: usize = 10_000;
/// An accepted concave-convex iteration must not increase the surrogate
/// objective by more than this.
const CCCP_MONOTONE_SLOP: f64 = 1e-12;
/// Relative objective decrease below which the outer loop stops.
const CCCP_RELATIVE_TOL: f64 = 1e-4;

/// Labeling loss: `lambda` if the activities disagree plus the fraction
/// of segments whose actions disagree.
pub fn loss_delta(
    gold_actions: &[usize],
    pred_actions: &[usize],
    gold_activity: usize,
    pred_activity: usize,
    lambda: f64,
) -> Result<f64> {
    if gold_actions.len() != pred_actions.len() {
        return Err(Error::LengthMismatch {
            what: "action sequences",
            expected: gold_actions.len(),
            actual: pred_actions.len(),
        });
    }
    if gold_actions.is_empty() {
        return Err(Error::EmptyInput {
            what: "action sequences",
        });
    }
    let mismatches = gold_actions
        .iter()
        .zip(pred_actions)
        .filter(|(g, p)| g != p)
        .count();
    let activity_term = if gold_activity != pred_activity {
        lambda
    } else {
        0.0
    };
    Ok(activity_term + mismatches as f64 / gold_actions.len() as f64)
}

/// One working-set constraint: the joint-feature difference between the
/// (latent-completed) gold labeling and a violator, and the violator's
/// loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub dpsi: Vec<f64>,
    pub loss: f64,
}

/// Working set of most-violated constraints with the dual variables of
/// the 1-slack QP. Gram entries between rows are cached on insertion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    pub rows: Vec<ConstraintRow>,
    pub duals: Vec<f64>,
    gram: Vec<Vec<f64>>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row with a zero dual variable.
    pub fn push(&mut self, dpsi: Vec<f64>, loss: f64) -> Result<()> {
        if !loss.is_finite() || loss < 0.0 {
            return Err(Error::InvalidConfig("constraint loss must be >= 0".into()));
        }
        if !crate::util::all_finite(&dpsi) {
            return Err(Error::NonFinite {
                what: "constraint feature difference",
            });
        }
        if let Some(first) = self.rows.first() {
            if dpsi.len() != first.dpsi.len() {
                return Err(Error::DimensionMismatch {
                    what: "constraint feature difference",
                    expected: first.dpsi.len(),
                    actual: dpsi.len(),
                });
            }
        }
        let mut gram_row: Vec<f64> = self.rows.iter().map(|r| dot(&r.dpsi, &dpsi)).collect();
        gram_row.push(dot(&dpsi, &dpsi));
        for (existing, &g) in self.gram.iter_mut().zip(&gram_row) {
            existing.push(g);
        }
        self.gram.push(gram_row);
        self.rows.push(ConstraintRow { dpsi, loss });
        self.duals.push(0.0);
        Ok(())
    }
}

/// Solves the 1-slack working-set QP in the dual:
/// maximize `sum_r a_r loss_r - 1/2 ||sum_r a_r dpsi_r||^2` subject to
/// `a_r >= 0`, `sum_r a_r <= C`. Returns the primal weight vector
/// `w = sum_r a_r dpsi_r` and the slack
/// `max(0, max_r(loss_r - w . dpsi_r))`. Warm-starts from (and updates)
/// the duals stored in `cs`; terminates on a KKT residual below 1e-6.
#[allow(clippy::needless_range_loop)]
pub fn qp_solve(cs: &mut ConstraintSet, c_reg: f64) -> Result<(Vec<f64>, f64)> {
    if cs.rows.is_empty() {
        return Err(Error::EmptyInput {
            what: "constraint set",
        });
    }
    if !(c_reg.is_finite() && c_reg > 0.0) {
        return Err(Error::InvalidConfig("c_reg must be > 0".into()));
    }
    let n = cs.rows.len();
    // Margins h_r = w . dpsi_r maintained through the Gram cache.
    let mut h = vec![0.0; n];
    for r in 0..n {
        if cs.duals[r] != 0.0 {
            for t in 0..n {
                h[t] += cs.duals[r] * cs.gram[r][t];
            }
        }
    }
    let mut total: f64 = cs.duals.iter().sum();

    for _ in 0..QP_MAX_SWEEPS {
        // Single-coordinate pass.
        for r in 0..n {
            let g = cs.rows[r].loss - h[r];
            let q = cs.gram[r][r];
            let raw = if q > 0.0 {
                g / q
            } else if g > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            let lo = -cs.duals[r];
            let hi = (c_reg - total).max(lo);
            let step = raw.clamp(lo, hi);
            if step != 0.0 {
                cs.duals[r] += step;
                total += step;
                for t in 0..n {
                    h[t] += step * cs.gram[r][t];
                }
            }
        }
        // Pairwise exchange pass: when the budget constraint is active,
        // improving directions move mass between coordinates.
        for r in 0..n {
            for s in 0..n {
                if r == s || cs.duals[s] <= 0.0 {
                    continue;
                }
                let gain = (cs.rows[r].loss - h[r]) - (cs.rows[s].loss - h[s]);
                if gain <= 0.0 {
                    continue;
                }
                let curv = cs.gram[r][r] + cs.gram[s][s] - 2.0 * cs.gram[r][s];
                let step = if curv > 0.0 {
                    (gain / curv).min(cs.duals[s])
                } else {
                    cs.duals[s]
                };
                if step > 0.0 {
                    cs.duals[r] += step;
                    cs.duals[s] = (cs.duals[s] - step).max(0.0);
                    for t in 0..n {
                        h[t] += step * (cs.gram[r][t] - cs.gram[s][t]);
                    }
                }
            }
        }
        // Re-project accumulated rounding drift so dual feasibility holds
        // exactly after every sweep.
        total = cs.duals.iter().sum();
        if total > c_reg {
            for r in (0..n).rev() {
                let cut = (total - c_reg).min(cs.duals[r]);
                if cut > 0.0 {
                    cs.duals[r] -= cut;
                    total -= cut;
                    for t in 0..n {
                        h[t] -= cut * cs.gram[r][t];
                    }
                }
                if total <= c_reg {
                    break;
                }
            }
        }
        debug_assert!(
            cs.duals.iter().all(|&a| a >= 0.0) && total <= c_reg,
            "dual feasibility must hold after every sweep"
        );
        // KKT residual: with multiplier mu for the budget constraint,
        // active duals need g_r = mu and zero duals need g_r <= mu.
        let budget_active = c_reg - total <= 1e-12 * c_reg.max(1.0);
        let mut mu = 0.0f64;
        if budget_active {
            for r in 0..n {
                mu = mu.max(cs.rows[r].loss - h[r]);
            }
        }
        let mut resid = 0.0f64;
        for r in 0..n {
            let g = cs.rows[r].loss - h[r];
            if cs.duals[r] > 0.0 {
                resid = resid.max((g - mu).abs());
            } else {
                resid = resid.max(g - mu);
            }
        }
        if resid <= QP_TOLERANCE {
            break;
        }
    }

    let dim = cs.rows[0].dpsi.len();
    let mut w = vec![0.0; dim];
    for r in 0..n {
        if cs.duals[r] != 0.0 {
            axpy(cs.duals[r], &cs.rows[r].dpsi, &mut w);
        }
    }
    if !crate::util::all_finite(&w) || !crate::util::all_finite(&cs.duals) {
        return Err(Error::NumericalInstability("qp_solve"));
    }
    let mut slack = 0.0f64;
    for row in &cs.rows {
        slack = slack.max(row.loss - dot(&w, &row.dpsi));
    }
    Ok((w, slack))
}

/// Structured log emitted by training, one record per cutting-plane and
/// per concave-convex iteration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "record", rename_all = "snake_case"))]
pub enum LogRecord {
    CuttingPlane {
        cccp_iter: usize,
        cp_iter: usize,
        /// Averaged labeling loss of the generated constraint.
        loss: f64,
        violation: f64,
        slack: f64,
        objective: f64,
        wall_time: f64,
    },
    Cccp {
        cccp_iter: usize,
        objective: f64,
        slack: f64,
        cp_iters: usize,
        latent_changes: usize,
        accepted: bool,
        wall_time: f64,
    },
}

/// Result of one convex structured-SVM solve.
#[derive(Debug, Clone)]
pub struct SvmOutcome {
    pub weights: WeightPack,
    pub constraints: ConstraintSet,
    pub slack: f64,
    pub iterations: usize,
    pub converged: bool,
    pub log: Vec<LogRecord>,
}

/// 1-slack cutting plane with the latent states held fixed. Repeats:
/// find the most violated joint labeling of every example via
/// loss-augmented decoding, average the feature differences and losses
/// into one constraint, and re-solve the working-set QP - until the new
/// constraint is violated by at most `slack + epsilon`. On a QP failure
/// the last feasible iterate is returned with `converged = false`.
pub fn solve_structured_svm(
    dataset: &[SegmentSequence],
    latents: &[Vec<usize>],
    space: &LabelSpace,
    hp: &Hyperparams,
) -> Result<SvmOutcome> {
    let watch = Stopwatch::start();
    solve_inner(dataset, latents, space, hp, 0, &watch)
}

fn solve_inner(
    dataset: &[SegmentSequence],
    latents: &[Vec<usize>],
    space: &LabelSpace,
    hp: &Hyperparams,
    cccp_iter: usize,
    watch: &Stopwatch,
) -> Result<SvmOutcome> {
    hp.validate()?;
    space.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput {
            what: "training dataset",
        });
    }
    if latents.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            what: "latent assignments",
            expected: dataset.len(),
            actual: latents.len(),
        });
    }
    for (seq, z) in dataset.iter().zip(latents) {
        validate_sequence(seq, space)?;
        seq.gold()?;
        if z.len() != seq.len() {
            return Err(Error::LengthMismatch {
                what: "latent assignment",
                expected: seq.len(),
                actual: z.len(),
            });
        }
        for &zi in z {
            if zi >= space.n_latent {
                return Err(Error::LabelOutOfRange {
                    what: "latent state",
                    value: zi,
                    limit: space.n_latent,
                });
            }
        }
    }

    let n = dataset.len();
    let n_f = n as f64;
    let dim = space.total_dim();
    let indices: Vec<usize> = (0..n).collect();

    // Gold feature maps with the completed latents, fixed for this solve.
    let gold_psi: Vec<Vec<f64>> = {
        let maps = map_collect(&indices, |&i| {
            let (gold_actions, gold_activity) = dataset[i].gold().expect("validated above");
            joint_feature_map(
                &dataset[i],
                &JointAssignment {
                    activity: gold_activity,
                    actions: gold_actions.to_vec(),
                    latents: latents[i].clone(),
                },
                space,
            )
        });
        let mut out = Vec::with_capacity(n);
        for m in maps {
            out.push(m?);
        }
        out
    };

    let mut w_flat = vec![0.0; dim];
    let mut pack = WeightPack::zeros(*space);
    let mut cs = ConstraintSet::new();
    let mut slack = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut log = Vec::new();

    for iter in 1..=hp.max_cp_iters {
        iterations = iter;
        // Per-example most-violated labelings; independent, so they may
        // run in parallel. The averaging below stays sequential to keep
        // the result bitwise deterministic.
        let per_example = map_collect(&indices, |&i| -> Result<(Vec<f64>, f64)> {
            let (gold_actions, gold_activity) = dataset[i].gold()?;
            let violator = decode_loss_augmented(
                &pack,
                &dataset[i],
                gold_actions,
                gold_activity,
                hp.lambda_loss,
            )?;
            let psi_v = joint_feature_map(&dataset[i], &violator.assignment(), space)?;
            let loss = loss_delta(
                gold_actions,
                &violator.actions,
                gold_activity,
                violator.activity,
                hp.lambda_loss,
            )?;
            let mut dpsi = gold_psi[i].clone();
            axpy(-1.0, &psi_v, &mut dpsi);
            Ok((dpsi, loss))
        });

        let mut dpsi_bar = vec![0.0; dim];
        let mut loss_bar = 0.0;
        for item in per_example {
            let (dpsi, loss) = item?;
            axpy(1.0, &dpsi, &mut dpsi_bar);
            loss_bar += loss;
        }
        for v in dpsi_bar.iter_mut() {
            *v /= n_f;
        }
        loss_bar /= n_f;

        let violation = loss_bar - dot(&w_flat, &dpsi_bar);
        log.push(LogRecord::CuttingPlane {
            cccp_iter,
            cp_iter: iter,
            loss: loss_bar,
            violation,
            slack,
            objective: 0.5 * dot(&w_flat, &w_flat) + hp.c_reg * slack,
            wall_time: watch.elapsed_secs(),
        });
        if violation <= slack + hp.epsilon_cp {
            converged = true;
            break;
        }
        cs.push(dpsi_bar, loss_bar)?;
        match qp_solve(&mut cs, hp.c_reg) {
            Ok((w_new, slack_new)) => {
                w_flat = w_new;
                slack = slack_new;
                pack = WeightPack::unflatten(*space, &w_flat)?;
            }
            Err(Error::NumericalInstability(_)) => {
                // Report the last feasible iterate.
                break;
            }
            Err(other) => return Err(other),
        }
    }

    Ok(SvmOutcome {
        weights: pack,
        constraints: cs,
        slack,
        iterations,
        converged,
        log,
    })
}

/// Per-iteration summary of a training run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainReport {
    /// Surrogate objective after each accepted concave-convex iteration;
    /// non-increasing.
    pub cccp_objective_per_iter: Vec<f64>,
    /// Cutting-plane iterations used by each accepted convex solve.
    pub cp_iterations_per_cccp: Vec<usize>,
    /// Slack of the final working-set QP.
    pub final_slack: f64,
    /// False only when the iteration cap stopped the outer loop.
    pub converged: bool,
    /// Wall-clock seconds for the whole run (0 without `std`).
    pub wall_time: f64,
    /// Structured per-iteration log.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub log: Vec<LogRecord>,
    /// Working set of the last accepted convex solve.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub final_constraints: ConstraintSet,
}

/// The margin-rescaled surrogate objective at `w`:
/// `1/2 ||w||^2 + C * mean_i[max(loss + score) - max_z score(gold_i, z)]`.
pub fn surrogate_objective(
    w: &WeightPack,
    dataset: &[SegmentSequence],
    hp: &Hyperparams,
) -> Result<f64> {
    objective_and_completions(w, dataset, hp).map(|(obj, _)| obj)
}

fn objective_and_completions(
    w: &WeightPack,
    dataset: &[SegmentSequence],
    hp: &Hyperparams,
) -> Result<(f64, Vec<Vec<usize>>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput {
            what: "training dataset",
        });
    }
    let per_example = map_collect(dataset, |seq| -> Result<(f64, Vec<usize>)> {
        let (gold_actions, gold_activity) = seq.gold()?;
        let augmented = decode_loss_augmented(w, seq, gold_actions, gold_activity, hp.lambda_loss)?;
        let (completion, gold_score) = complete_latent(w, seq, gold_actions, gold_activity)?;
        Ok((augmented.score - gold_score, completion))
    });
    let mut hinge_sum = 0.0;
    let mut completions = Vec::with_capacity(dataset.len());
    for item in per_example {
        let (hinge, completion) = item?;
        hinge_sum += hinge;
        completions.push(completion);
    }
    let obj = 0.5 * w.squared_norm() + hp.c_reg * hinge_sum / dataset.len() as f64;
    Ok((obj, completions))
}

/// Latent max-margin training: initialize the latent states, then
/// alternate convex structured-SVM solves (latents fixed) with latent
/// completion under the new weights. Stops when consecutive completions
/// agree, when the surrogate objective stops decreasing (relative
/// decrease below 1e-4, or any increase - in which case the previous,
/// best iterate is returned), or at `max_cccp_iters` (reported as
/// `converged = false`).
///
/// The model label space is `space` with `n_latent` replaced by
/// `hp.n_latent`. `categories` is required by (and only by) the
/// categorical initialization strategy.
pub fn train(
    dataset: &[SegmentSequence],
    space: &LabelSpace,
    hp: &Hyperparams,
    categories: Option<&CategoryLabels>,
) -> Result<(WeightPack, TrainReport)> {
    hp.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput {
            what: "training dataset",
        });
    }
    let space = space.with_n_latent(hp.n_latent);
    space.validate()?;
    for seq in dataset {
        validate_sequence(seq, &space)?;
        seq.gold()?;
    }
    let watch = Stopwatch::start();

    let mut z_cur = match hp.init_strategy {
        InitStrategy::Random => init_random(dataset, hp.n_latent, hp.rng_seed),
        InitStrategy::KmeansFeatures => init_kmeans_features(dataset, hp.n_latent, hp.rng_seed)?,
        InitStrategy::KmeansCategorical => {
            let cats = categories.ok_or_else(|| {
                Error::InvalidConfig(
                    "kmeans_categorical initialization requires per-segment categorical labels"
                        .into(),
                )
            })?;
            cats.validate_against(dataset)?;
            init_kmeans_categorical(&cats.labels, cats.n_categories, hp.n_latent, hp.rng_seed)?
        }
    };

    let mut weights = WeightPack::zeros(space);
    let mut report = TrainReport {
        cccp_objective_per_iter: Vec::new(),
        cp_iterations_per_cccp: Vec::new(),
        final_slack: 0.0,
        converged: false,
        wall_time: 0.0,
        log: Vec::new(),
        final_constraints: ConstraintSet::new(),
    };
    let mut prev_obj = f64::INFINITY;

    for t in 0..hp.max_cccp_iters {
        let m = solve_inner(dataset, &z_cur, &space, hp, t, &watch)?;
        report.log.extend(m.log);
        let (obj, z_next) = objective_and_completions(&m.weights, dataset, hp)?;

        if t > 0 && obj > prev_obj + CCCP_MONOTONE_SLOP {
            // The epsilon-approximate convex solve failed to decrease the
            // surrogate; discard this iterate and keep the best one.
            report.log.push(LogRecord::Cccp {
                cccp_iter: t,
                objective: obj,
                slack: m.slack,
                cp_iters: m.iterations,
                latent_changes: 0,
                accepted: false,
                wall_time: watch.elapsed_secs(),
            });
            report.converged = true;
            break;
        }

        let changes = z_next
            .iter()
            .zip(&z_cur)
            .map(|(a, b)| a.iter().zip(b.iter()).filter(|(x, y)| x != y).count())
            .sum::<usize>();
        report.cccp_objective_per_iter.push(obj);
        report.cp_iterations_per_cccp.push(m.iterations);
        report.final_slack = m.slack;
        report.final_constraints = m.constraints;
        weights = m.weights;
        report.log.push(LogRecord::Cccp {
            cccp_iter: t,
            objective: obj,
            slack: report.final_slack,
            cp_iters: m.iterations,
            latent_changes: changes,
            accepted: true,
            wall_time: watch.elapsed_secs(),
        });

        // Both stopping rules compare consecutive model-based quantities,
        // so neither can fire on the heuristic init assignment at t = 0.
        let latents_stable = t > 0 && changes == 0;
        let small_decrease =
            t > 0 && (prev_obj - obj) < CCCP_RELATIVE_TOL * prev_obj.abs().max(1.0);
        prev_obj = obj;
        z_cur = z_next;
        if latents_stable || small_decrease {
            report.converged = true;
            break;
        }
    }

    report.wall_time = watch.elapsed_secs();
    Ok((weights, report))
}

//! Split and merge proposals with exact forward and backward probabilities.
//!
//! A split selects a cluster with probability proportional to its within-
//! distance, anchors the two farthest members as cores, assigns every other
//! member to the side of a core with probability proportional to its
//! distance from the *opposite* core, and finally lets one uniformly chosen
//! core defect to the other side with a small jump probability (suppressed
//! when it would empty a side, or when the cluster has only two members —
//! that case splits deterministically into singletons).
//!
//! A merge draws a cluster pair with probability proportional to the
//! reciprocal of its between-distance.
//!
//! The acceptance ratio needs the *total* probability that a proposal lands
//! on a given partition, not the probability of the path the sampler
//! happened to take. Both directions therefore share one outcome-probability
//! routine: when the cores end up in different sides only the no-jump path
//! can produce the outcome, and when they share a side exactly the two
//! single-core jump paths can, so their contributions are summed.

use nalgebra::DMatrix;
use rand::Rng;

use super::distance::{between_distance, row_dist, within_distance, WithinKind};
use super::SamplerConfig;
use crate::likelihood::DataMatrix;
use crate::partition::Partition;

/// Distances are clamped from below before taking reciprocals, so clusters
/// that touch (distance 0) get a large but finite selection weight.
pub const MIN_DISTANCE: f64 = 1e-12;

/// What a sampler step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Split,
    Merge,
    /// Self-transition; also what an infeasible split/merge draw folds into.
    Keep,
    /// Single-element relocation (the element-move sampler).
    Move,
}

/// A proposed partition together with the log proposal densities needed by
/// the Metropolis–Hastings ratio.
#[derive(Debug, Clone)]
pub struct ProposalOutcome {
    pub proposed: Partition,
    /// Log probability of proposing `proposed` from the current state,
    /// including the action probability.
    pub log_q_fwd: f64,
    /// Log probability of proposing the current state back from `proposed`.
    pub log_q_bwd: f64,
    pub action: Action,
}

/// Per-cluster split-selection weights: the within-distance for clusters
/// with at least two members, 0 otherwise. Zero-spread clusters (all
/// duplicates) are unsplittable and keep weight 0.
pub(crate) fn split_weights(
    y: &DMatrix<f64>,
    p: &Partition,
    kind: WithinKind,
) -> (Vec<f64>, f64) {
    let mut weights = Vec::with_capacity(p.num_clusters());
    let mut total = 0.0;
    for members in p.clusters() {
        let w = if members.len() >= 2 {
            within_distance(y, members, kind)
        } else {
            0.0
        };
        weights.push(w);
        total += w;
    }
    (weights, total)
}

/// Draws an index with probability `weights[i] / total`. Guards against
/// cumulative-rounding runoff by falling back to the last positive weight.
pub(crate) fn sample_weighted<R: Rng>(rng: &mut R, weights: &[f64], total: f64) -> usize {
    debug_assert!(total > 0.0);
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// The lexicographically first pair of members at maximal distance.
pub(crate) fn farthest_pair(y: &DMatrix<f64>, members: &[usize]) -> (usize, usize) {
    debug_assert!(members.len() >= 2);
    let mut best = (members[0], members[1]);
    let mut best_d = -1.0;
    for (idx, &a) in members.iter().enumerate() {
        for &b in &members[idx + 1..] {
            let d = row_dist(y, a, b);
            if d > best_d {
                best_d = d;
                best = (a, b);
            }
        }
    }
    best
}

/// Log probability that the core-anchored assignment sends member `i`
/// toward core `c1` (`true`) or core `c2` (`false`).
fn assign_log_prob(y: &DMatrix<f64>, i: usize, c1: usize, c2: usize, toward_c1: bool) -> f64 {
    let d1 = row_dist(y, i, c1);
    let d2 = row_dist(y, i, c2);
    // The farthest pair of a splittable cluster is separated, so d1 + d2 > 0.
    if toward_c1 {
        (d2 / (d1 + d2)).ln()
    } else {
        (d1 / (d1 + d2)).ln()
    }
}

fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Log probability that splitting the cluster `members` produces exactly the
/// sides `(side1, side2)`, *given* the cluster was selected. Sides must be
/// sorted, nonempty, disjoint, and cover `members`. Unreachable outcomes
/// yield `−∞`.
pub(crate) fn split_outcome_log_prob(
    y: &DMatrix<f64>,
    members: &[usize],
    side1: &[usize],
    side2: &[usize],
    jump_prob: f64,
) -> f64 {
    let m = members.len();
    debug_assert_eq!(side1.len() + side2.len(), m);
    if m == 2 {
        // Two-member clusters split into singletons deterministically.
        return 0.0;
    }
    let (c1, c2) = farthest_pair(y, members);
    let in_side1 = |i: usize| side1.binary_search(&i).is_ok();
    let c1_in_1 = in_side1(c1);
    let c2_in_1 = in_side1(c2);

    if c1_in_1 != c2_in_1 {
        // Cores in different sides: only the no-jump path applies, and the
        // assignment is pinned down by the final sides.
        let (s1, s2): (&[usize], &[usize]) = if c1_in_1 { (side1, side2) } else { (side2, side1) };
        let mut lp = 0.0;
        for &i in members {
            if i == c1 || i == c2 {
                continue;
            }
            lp += assign_log_prob(y, i, c1, c2, in_side1(i) == c1_in_1);
        }
        // A jump attempt is suppressed (renormalized into no-jump) when the
        // chosen core is alone on its side, so the no-jump mass is
        // 1 − jump_prob · (#movable cores)/2.
        let movable = usize::from(s1.len() >= 2) + usize::from(s2.len() >= 2);
        lp + (1.0 - jump_prob * movable as f64 / 2.0).ln()
    } else {
        // Both cores in one side: reachable only through a jump, and by
        // exactly two paths (either core may have been the defector).
        let core_side_is_1 = c1_in_1;
        let mut lp_c1_jumped = (jump_prob / 2.0).ln();
        let mut lp_c2_jumped = (jump_prob / 2.0).ln();
        for &i in members {
            if i == c1 || i == c2 {
                continue;
            }
            let in_other = in_side1(i) != core_side_is_1;
            // c1 defected: pre-jump, the other side sat with c1.
            lp_c1_jumped += assign_log_prob(y, i, c1, c2, in_other);
            // c2 defected: pre-jump, the other side sat with c2.
            lp_c2_jumped += assign_log_prob(y, i, c1, c2, !in_other);
        }
        log_sum_exp2(lp_c1_jumped, lp_c2_jumped)
    }
}

/// Simulates the split of `members` into two sides, returning them sorted.
fn sample_split_sides<R: Rng>(
    y: &DMatrix<f64>,
    members: &[usize],
    jump_prob: f64,
    rng: &mut R,
) -> (Vec<usize>, Vec<usize>) {
    if members.len() == 2 {
        return (vec![members[0]], vec![members[1]]);
    }
    let (c1, c2) = farthest_pair(y, members);
    let mut side1 = vec![c1];
    let mut side2 = vec![c2];
    for &i in members {
        if i == c1 || i == c2 {
            continue;
        }
        let d1 = row_dist(y, i, c1);
        let d2 = row_dist(y, i, c2);
        if rng.random::<f64>() < d2 / (d1 + d2) {
            side1.push(i);
        } else {
            side2.push(i);
        }
    }
    // Single post-assignment jump attempt: a uniformly chosen core defects,
    // unless it is alone on its side.
    if rng.random::<f64>() < jump_prob {
        if rng.random::<f64>() < 0.5 {
            if side1.len() >= 2 {
                side1.retain(|&x| x != c1);
                side2.push(c1);
            }
        } else if side2.len() >= 2 {
            side2.retain(|&x| x != c2);
            side1.push(c2);
        }
    }
    side1.sort_unstable();
    side2.sort_unstable();
    (side1, side2)
}

/// Log probability of drawing the (unordered) cluster pair `(a, b)` in a
/// merge from `p`: weights are reciprocals of clamped between-distances.
pub(crate) fn merge_pair_log_prob(
    y: &DMatrix<f64>,
    p: &Partition,
    a: usize,
    b: usize,
    config: &SamplerConfig,
) -> f64 {
    let nb = p.num_clusters();
    debug_assert!(nb >= 2 && a != b);
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut total = 0.0;
    let mut chosen = 0.0;
    for i in 0..nb {
        for j in i + 1..nb {
            let d = between_distance(y, p.members(i), p.members(j), config.between);
            let w = 1.0 / d.max(MIN_DISTANCE);
            total += w;
            if (i, j) == (lo, hi) {
                chosen = w;
            }
        }
    }
    chosen.ln() - total.ln()
}

/// Proposes a split of one cluster of `p`, or `None` when no cluster is
/// splittable (all singletons or zero spread).
pub fn propose_split<R: Rng>(
    p: &Partition,
    data: &DataMatrix,
    config: &SamplerConfig,
    rng: &mut R,
) -> Option<ProposalOutcome> {
    let y = data.raw();
    let (weights, total) = split_weights(y, p, config.within);
    if total <= 0.0 {
        return None;
    }
    let target = sample_weighted(rng, &weights, total);
    let log_select = weights[target].ln() - total.ln();
    let members = p.members(target);
    let (side1, side2) = sample_split_sides(y, members, config.jump_prob, rng);
    let log_outcome = split_outcome_log_prob(y, members, &side1, &side2, config.jump_prob);
    let proposed = p
        .split_blocks(target, &side1, &side2)
        .expect("sides partition the selected cluster");
    let new1 = proposed.cluster_of(side1[0]);
    let new2 = proposed.cluster_of(side2[0]);
    let log_q_fwd = config.action_probs.split.ln() + log_select + log_outcome;
    let log_q_bwd =
        config.action_probs.merge.ln() + merge_pair_log_prob(y, &proposed, new1, new2, config);
    Some(ProposalOutcome {
        proposed,
        log_q_fwd,
        log_q_bwd,
        action: Action::Split,
    })
}

/// Proposes a merge of two clusters of `p`, or `None` when `p` has a single
/// cluster.
pub fn propose_merge<R: Rng>(
    p: &Partition,
    data: &DataMatrix,
    config: &SamplerConfig,
    rng: &mut R,
) -> Option<ProposalOutcome> {
    let nb = p.num_clusters();
    if nb < 2 {
        return None;
    }
    let y = data.raw();
    let mut pairs = Vec::with_capacity(nb * (nb - 1) / 2);
    let mut weights = Vec::with_capacity(pairs.capacity());
    let mut total = 0.0;
    for i in 0..nb {
        for j in i + 1..nb {
            let d = between_distance(y, p.members(i), p.members(j), config.between);
            let w = 1.0 / d.max(MIN_DISTANCE);
            pairs.push((i, j));
            weights.push(w);
            total += w;
        }
    }
    let pick = sample_weighted(rng, &weights, total);
    let (b1, b2) = pairs[pick];
    let log_select = weights[pick].ln() - total.ln();
    let proposed = p.merge_blocks(b1, b2).expect("distinct clusters");
    let log_q_fwd = config.action_probs.merge.ln() + log_select;
    let log_q_bwd = backward_split_logprob(&proposed, p.members(b1), p.members(b2), data, config);
    Some(ProposalOutcome {
        proposed,
        log_q_fwd,
        log_q_bwd,
        action: Action::Merge,
    })
}

/// Log probability that a split step applied to `merged` would recreate the
/// pre-merge state by cutting the combined cluster back into `(b1, b2)`.
/// `−∞` when that split can never be proposed (e.g. the combined cluster has
/// zero spread and is excluded from selection).
pub fn backward_split_logprob(
    merged: &Partition,
    b1: &[usize],
    b2: &[usize],
    data: &DataMatrix,
    config: &SamplerConfig,
) -> f64 {
    debug_assert!(!b1.is_empty() && !b2.is_empty());
    let y = data.raw();
    let target = merged.cluster_of(b1[0]);
    debug_assert!(b2.iter().all(|&i| merged.cluster_of(i) == target));
    let (weights, total) = split_weights(y, merged, config.within);
    let w = weights[target];
    if w <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let log_select = w.ln() - total.ln();
    let members = merged.members(target);
    let mut s1 = b1.to_vec();
    let mut s2 = b2.to_vec();
    s1.sort_unstable();
    s2.sort_unstable();
    let log_outcome = split_outcome_log_prob(y, members, &s1, &s2, config.jump_prob);
    config.action_probs.split.ln() + log_select + log_outcome
}

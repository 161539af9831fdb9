//! Metropolis–Hastings samplers over the space of partitions.
//!
//! Each iteration first Gibbs-samples θ from its grid posterior given the
//! current partition, then proposes a partition edit — either a split/merge
//! step or a single-element move, depending on [`Algorithm`] — and accepts
//! it by the usual ratio. Draws from the RNG happen in a fixed, documented
//! order (θ index, action uniform, proposal draws, acceptance uniform), so
//! a seed pins down the entire trajectory.
//!
//! Split or merge draws that are infeasible in the current state (nothing
//! splittable, or a single cluster) *fold* into keeps: the step becomes a
//! self-transition but the raw draw is still recorded, which keeps the
//! action frequencies auditable.

mod distance;
mod proposal;

pub use distance::{between_distance, within_distance, BetweenKind, WithinKind};
pub use proposal::{
    backward_split_logprob, propose_merge, propose_split, Action, ProposalOutcome, MIN_DISTANCE,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{
    posterior_weights, profile_log_lik, profile_log_lik_from_stats, ClusterStats, DataMatrix,
    ModelKind, ThetaGrid,
};
use crate::partition::{MoveTarget, Partition, PriorParams};
use crate::summaries::SimilarityAccumulator;

/// Probabilities of drawing each split-merge action; must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionProbs {
    pub split: f64,
    pub merge: f64,
    pub keep: f64,
}

impl Default for ActionProbs {
    fn default() -> Self {
        ActionProbs {
            split: 0.475,
            merge: 0.475,
            keep: 0.05,
        }
    }
}

/// Which partition kernel the chain runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    /// Split-merge proposals with distance-guided core assignment.
    #[serde(rename = "split-merge")]
    SplitMerge,
    /// One uniformly chosen element moves to another cluster or a new one.
    #[serde(rename = "move")]
    ElementMove,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::SplitMerge => "split-merge",
            Algorithm::ElementMove => "move",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "split-merge" | "splitmerge" => Ok(Algorithm::SplitMerge),
            "move" | "element-move" => Ok(Algorithm::ElementMove),
            _ => Err(Error::InvalidArgument(format!(
                "unknown algorithm '{s}' (expected split-merge or move)"
            ))),
        }
    }
}

/// Everything that parameterizes one chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub model: ModelKind,
    pub prior: PriorParams,
    pub grid: ThetaGrid,
    pub action_probs: ActionProbs,
    /// Probability of the post-assignment core jump inside a split.
    pub jump_prob: f64,
    /// Distance summary used to pick which cluster to split.
    pub within: WithinKind,
    /// Distance summary used to pick which cluster pair to merge.
    pub between: BetweenKind,
    pub iters: usize,
    /// Iterations discarded before similarity accumulation starts.
    pub burn_in: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
}

impl SamplerConfig {
    /// Defaults: Ewens(λ = 1) prior, the standard θ grid, action
    /// probabilities (0.475, 0.475, 0.05), jump probability 0.01, average
    /// within/between distances, 10,000 iterations with 1,000 burn-in.
    pub fn new(model: ModelKind) -> Self {
        SamplerConfig {
            model,
            prior: PriorParams { lambda: 1.0, k: None },
            grid: ThetaGrid::default_grid(),
            action_probs: ActionProbs::default(),
            jump_prob: 0.01,
            within: WithinKind::Avg,
            between: BetweenKind::Avg,
            iters: 10_000,
            burn_in: 1_000,
            seed: 0,
            algorithm: Algorithm::SplitMerge,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ActionProbs { split, merge, keep } = self.action_probs;
        for (name, v) in [("split", split), ("merge", merge), ("keep", keep)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "action probability '{name}' must lie in [0, 1], got {v}"
                )));
            }
        }
        if (split + merge + keep - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "action probabilities must sum to 1, got {}",
                split + merge + keep
            )));
        }
        if !self.jump_prob.is_finite() || !(0.0..1.0).contains(&self.jump_prob) {
            return Err(Error::InvalidArgument(format!(
                "jump probability must lie in [0, 1), got {}",
                self.jump_prob
            )));
        }
        if self.iters < self.burn_in {
            return Err(Error::InvalidArgument(format!(
                "iterations ({}) must be at least the burn-in ({})",
                self.iters, self.burn_in
            )));
        }
        if !self.prior.lambda.is_finite() || self.prior.lambda <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "concentration lambda must be finite and positive, got {}",
                self.prior.lambda
            )));
        }
        if self.prior.k == Some(0) {
            return Err(Error::InvalidArgument("capacity k must be at least 1".into()));
        }
        // Re-run the grid invariants in case the grid was deserialized.
        ThetaGrid::new(self.grid.values().to_vec(), self.grid.alpha)?;
        Ok(())
    }
}

/// Current chain position together with its cached log densities.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub partition: Partition,
    /// Index into the θ grid.
    pub theta_index: usize,
    /// Profile log-likelihood of `partition` at the indexed θ.
    pub log_lik: f64,
    /// Log prior mass of `partition`; finite by construction.
    pub log_prior: f64,
}

impl ChainState {
    pub fn new(partition: Partition, data: &DataMatrix, config: &SamplerConfig) -> Result<Self> {
        if partition.n() != data.n() {
            return Err(Error::InvalidArgument(format!(
                "partition covers {} items but the data has {} rows",
                partition.n(),
                data.n()
            )));
        }
        let log_prior = config.prior.log_prior(&partition);
        if log_prior == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "initial partition has zero prior mass ({} clusters exceed the capacity)",
                partition.num_clusters()
            )));
        }
        let theta = config.grid.values()[0];
        let log_lik = profile_log_lik(config.model, data, &partition, theta)?;
        Ok(ChainState {
            partition,
            theta_index: 0,
            log_lik,
            log_prior,
        })
    }

    pub fn theta(&self, grid: &ThetaGrid) -> f64 {
        grid.values()[self.theta_index]
    }
}

/// What one iteration did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRecord {
    /// The action drawn from the action probabilities, before folding.
    pub action: Action,
    /// True when the drawn action was infeasible and executed as a keep.
    pub folded: bool,
    /// True when a proposal was made and accepted.
    pub accepted: bool,
}

/// Gibbs update of θ given the current partition: one categorical draw from
/// the grid posterior. Also refreshes the cached log-likelihood.
fn gibbs_update_theta<R: Rng>(
    state: &mut ChainState,
    data: &DataMatrix,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<()> {
    let stats = ClusterStats::from_partition(data, &state.partition);
    let logliks: Vec<f64> = config
        .grid
        .values()
        .iter()
        .map(|&t| profile_log_lik_from_stats(config.model, data, &stats, t))
        .collect::<Result<_>>()?;
    let weights = posterior_weights(&logliks, &config.grid);
    let j = sample_categorical(rng, &weights);
    state.theta_index = j;
    state.log_lik = logliks[j];
    Ok(())
}

pub(crate) fn sample_categorical<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    proposal::sample_weighted(rng, weights, total)
}

/// Shared accept/reject: evaluates the proposal at the current θ and swaps
/// it into the state when the ratio clears a uniform draw. The uniform is
/// drawn unconditionally so the number of draws per proposal is fixed.
fn accept_proposal<R: Rng>(
    state: &mut ChainState,
    outcome: ProposalOutcome,
    data: &DataMatrix,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<bool> {
    let theta = state.theta(&config.grid);
    let prop_log_lik = profile_log_lik(config.model, data, &outcome.proposed, theta)?;
    let prop_log_prior = config.prior.log_prior(&outcome.proposed);
    let log_r = prop_log_prior + prop_log_lik - state.log_prior - state.log_lik
        + outcome.log_q_bwd
        - outcome.log_q_fwd;
    // −∞ (unreachable reverse move or zero-mass prior) rejects cleanly; NaN
    // would need both sides at −∞, which ChainState::new rules out.
    debug_assert!(!log_r.is_nan());
    let u = rng.random::<f64>();
    if u < log_r.min(0.0).exp() {
        state.partition = outcome.proposed;
        state.log_lik = prop_log_lik;
        state.log_prior = prop_log_prior;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// One split-merge iteration: θ Gibbs update, action draw, proposal,
/// accept/reject.
pub fn mh_step_splitmerge<R: Rng>(
    state: &mut ChainState,
    data: &DataMatrix,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<StepRecord> {
    gibbs_update_theta(state, data, config, rng)?;
    let u = rng.random::<f64>();
    let action = if u < config.action_probs.split {
        Action::Split
    } else if u < config.action_probs.split + config.action_probs.merge {
        Action::Merge
    } else {
        Action::Keep
    };
    let outcome = match action {
        Action::Split => propose_split(&state.partition, data, config, rng),
        Action::Merge => propose_merge(&state.partition, data, config, rng),
        Action::Keep => None,
        Action::Move => unreachable!("split-merge never draws a move"),
    };
    let Some(outcome) = outcome else {
        return Ok(StepRecord {
            action,
            folded: action != Action::Keep,
            accepted: false,
        });
    };
    let accepted = accept_proposal(state, outcome, data, config, rng)?;
    Ok(StepRecord {
        action,
        folded: false,
        accepted,
    })
}

/// One element-move iteration: θ Gibbs update, then a uniformly chosen item
/// proposes to join a uniformly chosen other cluster — or a fresh singleton,
/// unless the item already is one. The proposal is symmetric (the available
/// target count is invariant under the move), so the ratio needs no q terms.
pub fn mh_step_move<R: Rng>(
    state: &mut ChainState,
    data: &DataMatrix,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<StepRecord> {
    gibbs_update_theta(state, data, config, rng)?;
    let n = state.partition.n();
    if n == 1 {
        return Ok(StepRecord {
            action: Action::Move,
            folded: true,
            accepted: false,
        });
    }
    let i = rng.random_range(0..n);
    let bi = state.partition.cluster_of(i);
    let nb = state.partition.num_clusters();
    let can_new = state.partition.size(bi) >= 2;
    let targets = nb - 1 + usize::from(can_new);
    debug_assert!(targets >= 1, "n >= 2 always leaves a target");
    let pick = rng.random_range(0..targets);
    let target = if pick < nb - 1 {
        MoveTarget::Cluster(if pick < bi { pick } else { pick + 1 })
    } else {
        MoveTarget::New
    };
    let proposed = state
        .partition
        .move_item(i, target)
        .expect("target is distinct and non-degenerate by construction");
    #[cfg(debug_assertions)]
    {
        let bi_rev = proposed.cluster_of(i);
        let rev = proposed.num_clusters() - 1 + usize::from(proposed.size(bi_rev) >= 2);
        debug_assert_eq!(targets, rev, "element moves must be symmetric");
    }
    let outcome = ProposalOutcome {
        proposed,
        log_q_fwd: 0.0,
        log_q_bwd: 0.0,
        action: Action::Move,
    };
    let accepted = accept_proposal(state, outcome, data, config, rng)?;
    Ok(StepRecord {
        action: Action::Move,
        folded: false,
        accepted,
    })
}

/// Proposal/acceptance counts for one action type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MoveTally {
    pub proposed: u64,
    pub accepted: u64,
}

/// Per-chain bookkeeping, serializable for run reports.
#[derive(Debug, Clone, Serialize)]
pub struct ChainDiagnostics {
    pub seed: u64,
    pub iters: usize,
    pub burn_in: usize,
    pub splits: MoveTally,
    pub merges: MoveTally,
    pub moves: MoveTally,
    /// Raw draws of the keep action.
    pub keep_draws: u64,
    /// Infeasible split/merge draws that executed as keeps.
    pub folded_keeps: u64,
    /// θ after each iteration's Gibbs update.
    pub theta_trace: Vec<f64>,
    /// Cluster count after each iteration.
    pub cluster_count_trace: Vec<u32>,
}

/// Everything a finished chain hands back.
#[derive(Debug)]
pub struct ChainRun {
    /// Co-clustering tallies over the post-burn-in draws.
    pub similarity: SimilarityAccumulator,
    pub diagnostics: ChainDiagnostics,
    pub final_state: ChainState,
}

/// Runs one chain seeded from `config.seed`. The chain starts from all
/// singletons, or from the single-cluster partition when the prior gives
/// singletons zero mass (capacity k smaller than n).
pub fn run_chain(data: &DataMatrix, config: &SamplerConfig) -> Result<ChainRun> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let singles = Partition::singletons(data.n());
    let initial = if config.prior.log_prior(&singles).is_finite() {
        singles
    } else {
        Partition::one_cluster(data.n())
    };
    run_chain_from(data, config, initial, &mut rng)
}

/// Runs one chain from an explicit start and RNG (useful for comparing
/// starts). `config.seed` is recorded in the diagnostics regardless; the
/// supplied RNG is the one consumed.
pub fn run_chain_from<R: Rng>(
    data: &DataMatrix,
    config: &SamplerConfig,
    initial: Partition,
    rng: &mut R,
) -> Result<ChainRun> {
    config.validate()?;
    let mut state = ChainState::new(initial, data, config)?;
    let mut acc = SimilarityAccumulator::new(data.n());
    let mut diag = ChainDiagnostics {
        seed: config.seed,
        iters: config.iters,
        burn_in: config.burn_in,
        splits: MoveTally::default(),
        merges: MoveTally::default(),
        moves: MoveTally::default(),
        keep_draws: 0,
        folded_keeps: 0,
        theta_trace: Vec::with_capacity(config.iters),
        cluster_count_trace: Vec::with_capacity(config.iters),
    };
    for it in 0..config.iters {
        let record = match config.algorithm {
            Algorithm::SplitMerge => mh_step_splitmerge(&mut state, data, config, rng)?,
            Algorithm::ElementMove => mh_step_move(&mut state, data, config, rng)?,
        };
        if record.folded {
            diag.folded_keeps += 1;
        } else {
            match record.action {
                Action::Keep => diag.keep_draws += 1,
                Action::Split => {
                    diag.splits.proposed += 1;
                    diag.splits.accepted += u64::from(record.accepted);
                }
                Action::Merge => {
                    diag.merges.proposed += 1;
                    diag.merges.accepted += u64::from(record.accepted);
                }
                Action::Move => {
                    diag.moves.proposed += 1;
                    diag.moves.accepted += u64::from(record.accepted);
                }
            }
        }
        diag.theta_trace.push(state.theta(&config.grid));
        diag.cluster_count_trace
            .push(state.partition.num_clusters() as u32);
        if it >= config.burn_in {
            acc.add(&state.partition);
        }
    }
    Ok(ChainRun {
        similarity: acc,
        diagnostics: diag,
        final_state: state,
    })
}

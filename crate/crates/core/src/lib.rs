//! Bayesian clustering that is invariant to affine distortions of the data.
//!
//! This crate infers a posterior over set partitions of `n` observations
//! under an exchangeable partition prior and a Gaussian cluster-effects
//! likelihood whose scale structure is profiled out. Because only the shape
//! of the data enters, the posterior is unchanged when the observations are
//! rotated, rescaled, or (for the richest model) pushed through any
//! invertible affine map.
//!
//! The pieces, bottom to top:
//!
//! * [`partition`] — canonical set partitions, Ewens and Dirichlet-
//!   multinomial priors, edit moves, and exhaustive enumeration for oracles;
//! * [`likelihood`] — the three profile log-likelihoods over `Γ = I + θB`,
//!   evaluated through d×d block algebra, plus the discrete prior grid on θ;
//! * [`mcmc`] — distance-guided split-merge and single-element
//!   Metropolis-Hastings samplers with a Gibbs update for θ;
//! * [`summaries`] — posterior similarity/distance matrices, single-linkage
//!   dendrograms, tree cuts, Newick export, and PGM heatmaps;
//! * [`data`] — CSV ingestion, synthetic benchmark generators, affine
//!   transforms, PCA projection, k-means, and clustering error metrics.

pub mod data;
pub mod error;
pub mod likelihood;
pub mod mcmc;
pub mod partition;
pub mod summaries;

pub use error::{Error, Result};

// Callers build matrices with the same linear-algebra crate we use.
pub use nalgebra;

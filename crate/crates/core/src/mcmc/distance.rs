//! Within- and between-cluster distances that steer the proposals.
//!
//! All distances are Euclidean and are measured on the raw (untransformed)
//! data rows. They only shape the proposal distribution — the acceptance
//! ratio corrects for them — so the sampler stays exact even when the data
//! have been distorted; good choices merely mix faster.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Euclidean distance between rows `i` and `j`, allocation-free.
pub(crate) fn row_dist(y: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let mut s = 0.0;
    for c in 0..y.ncols() {
        let t = y[(i, c)] - y[(j, c)];
        s += t * t;
    }
    s.sqrt()
}

/// Aggregation rule for the spread of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WithinKind {
    /// Mean distance over ordered pairs of distinct members.
    Avg,
    /// Largest pairwise distance (the diameter).
    Max,
    /// Smallest pairwise distance between distinct members.
    Min,
}

/// Aggregation rule for the separation of two clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetweenKind {
    /// Mean distance over cross pairs.
    Avg,
    /// Largest cross-pair distance.
    Max,
    /// Smallest cross-pair distance.
    Min,
    /// Symmetric Hausdorff distance: `max` of the two directed
    /// max–min distances.
    Hausdorff,
}

impl std::str::FromStr for WithinKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "avg" | "average" => Ok(WithinKind::Avg),
            "max" | "maximum" => Ok(WithinKind::Max),
            "min" | "minimum" => Ok(WithinKind::Min),
            other => Err(Error::InvalidArgument(format!(
                "unknown within-cluster distance '{other}' (expected avg, max, or min)"
            ))),
        }
    }
}

impl std::str::FromStr for BetweenKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "avg" | "average" => Ok(BetweenKind::Avg),
            "max" | "maximum" => Ok(BetweenKind::Max),
            "min" | "minimum" => Ok(BetweenKind::Min),
            "hausdorff" => Ok(BetweenKind::Hausdorff),
            other => Err(Error::InvalidArgument(format!(
                "unknown between-cluster distance '{other}' (expected avg, max, min, or hausdorff)"
            ))),
        }
    }
}

impl std::fmt::Display for WithinKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WithinKind::Avg => "avg",
            WithinKind::Max => "max",
            WithinKind::Min => "min",
        })
    }
}

impl std::fmt::Display for BetweenKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BetweenKind::Avg => "avg",
            BetweenKind::Max => "max",
            BetweenKind::Min => "min",
            BetweenKind::Hausdorff => "hausdorff",
        })
    }
}

/// Spread of `members` under `kind`; singletons (and empty sets) are 0.
pub fn within_distance(y: &DMatrix<f64>, members: &[usize], kind: WithinKind) -> f64 {
    let m = members.len();
    if m < 2 {
        return 0.0;
    }
    match kind {
        WithinKind::Avg => {
            let mut sum = 0.0;
            for (idx, &a) in members.iter().enumerate() {
                for &b in &members[idx + 1..] {
                    sum += row_dist(y, a, b);
                }
            }
            2.0 * sum / (m as f64 * (m as f64 - 1.0))
        }
        WithinKind::Max => {
            let mut best = 0.0f64;
            for (idx, &a) in members.iter().enumerate() {
                for &b in &members[idx + 1..] {
                    best = best.max(row_dist(y, a, b));
                }
            }
            best
        }
        WithinKind::Min => {
            let mut best = f64::INFINITY;
            for (idx, &a) in members.iter().enumerate() {
                for &b in &members[idx + 1..] {
                    best = best.min(row_dist(y, a, b));
                }
            }
            best
        }
    }
}

/// Separation of two disjoint clusters under `kind`.
pub fn between_distance(y: &DMatrix<f64>, a: &[usize], b: &[usize], kind: BetweenKind) -> f64 {
    debug_assert!(!a.is_empty() && !b.is_empty());
    match kind {
        BetweenKind::Avg => {
            let mut sum = 0.0;
            for &i in a {
                for &j in b {
                    sum += row_dist(y, i, j);
                }
            }
            sum / (a.len() as f64 * b.len() as f64)
        }
        BetweenKind::Max => {
            let mut best = 0.0f64;
            for &i in a {
                for &j in b {
                    best = best.max(row_dist(y, i, j));
                }
            }
            best
        }
        BetweenKind::Min => {
            let mut best = f64::INFINITY;
            for &i in a {
                for &j in b {
                    best = best.min(row_dist(y, i, j));
                }
            }
            best
        }
        BetweenKind::Hausdorff => {
            directed_hausdorff(y, a, b).max(directed_hausdorff(y, b, a))
        }
    }
}

/// `max_{i∈a} min_{j∈b} ‖y_i − y_j‖`.
fn directed_hausdorff(y: &DMatrix<f64>, a: &[usize], b: &[usize]) -> f64 {
    let mut outer = 0.0f64;
    for &i in a {
        let mut inner = f64::INFINITY;
        for &j in b {
            inner = inner.min(row_dist(y, i, j));
        }
        outer = outer.max(inner);
    }
    outer
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(points: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(points.len(), 1, points)
    }

    #[test]
    fn within_matches_hand_values() {
        let y = line(&[0.0, 1.0, 5.0]);
        let all = [0usize, 1, 2];
        // Pair distances 1, 5, 4.
        assert!((within_distance(&y, &all, WithinKind::Avg) - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(within_distance(&y, &all, WithinKind::Max), 5.0);
        assert_eq!(within_distance(&y, &all, WithinKind::Min), 1.0);
        // Two points at distance 3: every kind gives 3.
        let two = line(&[0.0, 3.0]);
        for kind in [WithinKind::Avg, WithinKind::Max, WithinKind::Min] {
            assert_eq!(within_distance(&two, &[0, 1], kind), 3.0);
        }
        assert_eq!(within_distance(&y, &[1], WithinKind::Avg), 0.0);
    }

    #[test]
    fn between_matches_hand_values() {
        // One-dimensional points 0, 1, 2, 5 with clusters {0,1} and {2,5}.
        let y = line(&[0.0, 1.0, 2.0, 5.0]);
        let a = [0usize, 1];
        let b = [2usize, 3];
        assert_eq!(between_distance(&y, &a, &b, BetweenKind::Min), 1.0);
        assert_eq!(between_distance(&y, &a, &b, BetweenKind::Max), 5.0);
        assert!((between_distance(&y, &a, &b, BetweenKind::Avg) - 3.0).abs() < 1e-12);
        // Directed: a→b gives max(min(2,5), min(1,4)) = 2; b→a gives
        // max(min(2,1), min(5,4)) = 4.
        assert_eq!(between_distance(&y, &a, &b, BetweenKind::Hausdorff), 4.0);
    }

    #[test]
    fn duplicate_points_have_zero_spread() {
        let y = line(&[2.0, 2.0, 2.0]);
        for kind in [WithinKind::Avg, WithinKind::Max, WithinKind::Min] {
            assert_eq!(within_distance(&y, &[0, 1, 2], kind), 0.0);
        }
    }

    proptest! {
        /// Order relations between the aggregation rules hold for any data.
        #[test]
        fn between_kinds_are_ordered(
            xs in prop::collection::vec(-50.0f64..50.0, 4..14),
            split in 1usize..3,
        ) {
            let y = line(&xs);
            let a: Vec<usize> = (0..split).collect();
            let b: Vec<usize> = (split..xs.len()).collect();
            let lo = between_distance(&y, &a, &b, BetweenKind::Min);
            let av = between_distance(&y, &a, &b, BetweenKind::Avg);
            let hi = between_distance(&y, &a, &b, BetweenKind::Max);
            let hd = between_distance(&y, &a, &b, BetweenKind::Hausdorff);
            prop_assert!(lo <= av + 1e-12 && av <= hi + 1e-12);
            prop_assert!(lo <= hd + 1e-12 && hd <= hi + 1e-12);
            // Symmetry.
            prop_assert_eq!(
                between_distance(&y, &b, &a, BetweenKind::Hausdorff).to_bits(),
                hd.to_bits()
            );
        }

        #[test]
        fn within_kinds_are_ordered(xs in prop::collection::vec(-50.0f64..50.0, 2..14)) {
            let y = line(&xs);
            let all: Vec<usize> = (0..xs.len()).collect();
            let lo = within_distance(&y, &all, WithinKind::Min);
            let av = within_distance(&y, &all, WithinKind::Avg);
            let hi = within_distance(&y, &all, WithinKind::Max);
            prop_assert!(lo <= av + 1e-12 && av <= hi + 1e-12);
        }
    }
}

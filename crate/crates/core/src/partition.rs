//! Set partitions of `{0, …, n−1}` with exchangeable partition priors and
//! the edit moves used by the samplers.
//!
//! A [`Partition`] is always held in canonical form: cluster ids are dense,
//! 0-based, and assigned by order of first appearance, and each member list
//! is sorted ascending. Two `Partition` values compare equal exactly when
//! they denote the same set partition, which makes the type usable as a hash
//! key when tallying posterior samples.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Upper bound on `enumerate_partitions`: Bell(12) = 4,213,597 partitions.
pub const ENUMERATION_CAP: usize = 12;

/// A set partition of `{0, …, n−1}` in canonical form.
#[derive(Clone)]
pub struct Partition {
    /// `assignment[i]` is the cluster id of item `i`; ids are dense and
    /// numbered by first appearance, so this vector is a restricted growth
    /// string.
    assignment: Vec<usize>,
    /// Members per cluster id, each sorted ascending.
    clusters: Vec<Vec<usize>>,
}

impl Partition {
    /// The all-singletons partition `{{0}, {1}, …}`.
    pub fn singletons(n: usize) -> Self {
        assert!(n >= 1, "partition of an empty ground set");
        Partition {
            assignment: (0..n).collect(),
            clusters: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// The one-cluster partition `{{0, …, n−1}}`.
    pub fn one_cluster(n: usize) -> Self {
        assert!(n >= 1, "partition of an empty ground set");
        Partition {
            assignment: vec![0; n],
            clusters: vec![(0..n).collect()],
        }
    }

    /// Builds a partition from an arbitrary assignment vector, relabeling
    /// cluster ids into canonical (first-appearance) order.
    pub fn from_assignment(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidArgument(
                "assignment vector must be nonempty".into(),
            ));
        }
        let mut relabel: HashMap<usize, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(raw.len());
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for (i, &lab) in raw.iter().enumerate() {
            let id = match relabel.entry(lab) {
                Entry::Occupied(e) => *e.get(),
                Entry::Vacant(e) => {
                    let id = clusters.len();
                    clusters.push(Vec::new());
                    e.insert(id);
                    id
                }
            };
            assignment.push(id);
            clusters[id].push(i);
        }
        Ok(Partition {
            assignment,
            clusters,
        })
    }

    /// Number of items in the ground set.
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Number of clusters (`#B`).
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Cluster id of item `i`.
    pub fn cluster_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    /// Members of cluster `b`, sorted ascending.
    pub fn members(&self, b: usize) -> &[usize] {
        &self.clusters[b]
    }

    /// Size of cluster `b`.
    pub fn size(&self, b: usize) -> usize {
        self.clusters[b].len()
    }

    /// All clusters, indexed by cluster id.
    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    /// Canonical assignment vector (a restricted growth string).
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Moves item `i` to `target`, returning the edited partition.
    ///
    /// Moving onto the current cluster is flagged as [`Error::NoOpMove`];
    /// moving a singleton to [`MoveTarget::New`] is rejected because it
    /// would reproduce the same partition under a relabeling.
    pub fn move_item(&self, i: usize, target: MoveTarget) -> Result<Self> {
        let n = self.n();
        if i >= n {
            return Err(Error::InvalidEdit(format!("item {i} out of range (n = {n})")));
        }
        let from = self.assignment[i];
        let mut raw = self.assignment.clone();
        match target {
            MoveTarget::Cluster(b) => {
                if b >= self.num_clusters() {
                    return Err(Error::InvalidEdit(format!(
                        "target cluster {b} out of range (#B = {})",
                        self.num_clusters()
                    )));
                }
                if b == from {
                    return Err(Error::NoOpMove { item: i, cluster: b });
                }
                raw[i] = b;
            }
            MoveTarget::New => {
                if self.size(from) == 1 {
                    return Err(Error::InvalidEdit(format!(
                        "item {i} is a singleton; moving it to a new cluster is an identity"
                    )));
                }
                raw[i] = self.num_clusters();
            }
        }
        Partition::from_assignment(&raw)
    }

    /// Splits cluster `b` into the two given sides, which must be disjoint,
    /// nonempty, and cover `b` exactly.
    pub fn split_blocks(&self, b: usize, left: &[usize], right: &[usize]) -> Result<Self> {
        if b >= self.num_clusters() {
            return Err(Error::InvalidEdit(format!(
                "cluster {b} out of range (#B = {})",
                self.num_clusters()
            )));
        }
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidEdit("split sides must be nonempty".into()));
        }
        let mut union: Vec<usize> = left.iter().chain(right).copied().collect();
        union.sort_unstable();
        if union.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidEdit("split sides overlap".into()));
        }
        if union != self.clusters[b] {
            return Err(Error::InvalidEdit(format!(
                "split sides do not cover cluster {b} exactly"
            )));
        }
        let fresh = self.num_clusters();
        let mut raw = self.assignment.clone();
        for &i in right {
            raw[i] = fresh;
        }
        Partition::from_assignment(&raw)
    }

    /// Merges clusters `b1` and `b2` into one.
    pub fn merge_blocks(&self, b1: usize, b2: usize) -> Result<Self> {
        let nb = self.num_clusters();
        if b1 >= nb || b2 >= nb {
            return Err(Error::InvalidEdit(format!(
                "cluster pair ({b1}, {b2}) out of range (#B = {nb})"
            )));
        }
        if b1 == b2 {
            return Err(Error::InvalidEdit(format!("cannot merge cluster {b1} with itself")));
        }
        let mut raw = self.assignment.clone();
        for &i in &self.clusters[b2] {
            raw[i] = b1;
        }
        Partition::from_assignment(&raw)
    }
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        self.assignment == other.assignment
    }
}

impl Eq for Partition {}

impl Hash for Partition {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.assignment.hash(state);
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (b, members) in self.clusters.iter().enumerate() {
            if b > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{{")?;
            for (j, i) in members.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{i}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Destination of a single-item move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveTarget {
    /// An existing cluster id.
    Cluster(usize),
    /// A fresh singleton cluster.
    New,
}

/// Exchangeable partition prior: Ewens, or its finite-capacity
/// Dirichlet-multinomial refinement when `k` is set.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PriorParams {
    /// Concentration parameter, strictly positive.
    pub lambda: f64,
    /// Cluster capacity of the Dirichlet-multinomial prior; `None` selects
    /// the Ewens prior (the `k → ∞` limit).
    pub k: Option<u64>,
}

impl PriorParams {
    /// Ewens prior with concentration `lambda`.
    pub fn ewens(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(PriorParams { lambda, k: None })
    }

    /// Dirichlet-multinomial prior with concentration `lambda` and capacity `k`.
    pub fn dirichlet_multinomial(lambda: f64, k: u64) -> Result<Self> {
        check_lambda(lambda)?;
        if k < 1 {
            return Err(Error::InvalidArgument("capacity k must be at least 1".into()));
        }
        Ok(PriorParams { lambda, k: Some(k) })
    }

    /// Log prior mass of `p`; `−∞` when a capacity `k` is set and exceeded.
    pub fn log_prior(&self, p: &Partition) -> f64 {
        match self.k {
            None => ewens_log_prior(p, self.lambda).expect("validated lambda"),
            Some(k) => dm_log_prior(p, self.lambda, k).expect("validated lambda and k"),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "concentration lambda must be finite and positive, got {lambda}"
        )));
    }
    Ok(())
}

/// Log mass of `p` under the Ewens partition prior with concentration
/// `lambda`:
///
/// `log Γ(λ) + #B · log λ − log Γ(n + λ) + Σ_b log Γ(n_b)`.
pub fn ewens_log_prior(p: &Partition, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let n = p.n() as f64;
    let nb = p.num_clusters() as f64;
    let mut lp = ln_gamma(lambda) + nb * lambda.ln() - ln_gamma(n + lambda);
    for c in p.clusters() {
        lp += ln_gamma(c.len() as f64);
    }
    Ok(lp)
}

/// Log mass of `p` under the Dirichlet-multinomial partition prior with
/// concentration `lambda` and cluster capacity `k`:
///
/// `log k!/(k−#B)! + log Γ(λ) − log Γ(n + λ) + Σ_b log Γ(n_b + λ/k) − #B · log Γ(λ/k)`.
///
/// Partitions with more than `k` clusters have zero mass and yield `−∞`
/// (not an error). As `k → ∞` this converges to the Ewens prior.
pub fn dm_log_prior(p: &Partition, lambda: f64, k: u64) -> Result<f64> {
    check_lambda(lambda)?;
    if k < 1 {
        return Err(Error::InvalidArgument("capacity k must be at least 1".into()));
    }
    let nb = p.num_clusters() as u64;
    if nb > k {
        return Ok(f64::NEG_INFINITY);
    }
    let n = p.n() as f64;
    let kf = k as f64;
    let rate = lambda / kf;
    let mut lp = ln_gamma(kf + 1.0) - ln_gamma((k - nb) as f64 + 1.0) + ln_gamma(lambda)
        - ln_gamma(n + lambda)
        - nb as f64 * ln_gamma(rate);
    for c in p.clusters() {
        lp += ln_gamma(c.len() as f64 + rate);
    }
    Ok(lp)
}

/// Enumerates every partition of `{0, …, n−1}` by restricted growth strings,
/// in lexicographic order. Capped at `n ≤ 12` (Bell(12) ≈ 4.2 million).
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot enumerate partitions of n = 0".into()));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::InvalidArgument(format!(
            "enumeration capped at n ≤ {ENUMERATION_CAP}, got {n}"
        )));
    }
    let mut out = Vec::new();
    // a = current restricted growth string, m[i] = max(a[0..=i]).
    let mut a = vec![0usize; n];
    let mut m = vec![0usize; n];
    loop {
        out.push(Partition::from_assignment(&a).expect("nonempty assignment"));
        // Advance to the next restricted growth string.
        let mut i = n;
        loop {
            if i == 1 {
                return Ok(out);
            }
            i -= 1;
            if a[i] <= m[i - 1] {
                break;
            }
        }
        a[i] += 1;
        m[i] = m[i - 1].max(a[i]);
        for j in i + 1..n {
            a[j] = 0;
            m[j] = m[j - 1];
        }
    }
}

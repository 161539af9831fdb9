//! Posterior summaries: co-clustering similarity, single-linkage trees,
//! Newick export, and PGM heatmaps.
//!
//! The sampler's partition draws are reduced to a pairwise similarity matrix
//! `S` (the fraction of retained draws in which two items share a cluster).
//! `D = 1 − S` feeds single-linkage agglomeration, whose dendrogram can be
//! cut at any cluster count, serialized as a Newick string, or used to order
//! the rows of a grayscale heatmap.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Streaming tally of co-clustering counts. Counts are integers, so merging
/// accumulators from parallel chains is exact: merge-then-normalize equals
/// normalizing the concatenated draws.
#[derive(Debug, Clone)]
pub struct SimilarityAccumulator {
    n: usize,
    count: u64,
    /// Upper-triangle (i < j) co-occurrence counts, row-major.
    pairs: Vec<u64>,
}

impl SimilarityAccumulator {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one item");
        SimilarityAccumulator {
            n,
            count: 0,
            pairs: vec![0; n * (n - 1) / 2],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of partitions added so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        // Row i starts after rows 0..i, which hold (n−1) + … + (n−i) entries.
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    /// Tallies one partition draw.
    pub fn add(&mut self, p: &Partition) {
        assert_eq!(p.n(), self.n, "partition size mismatch");
        for members in p.clusters() {
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    let idx = self.pair_index(i, j);
                    self.pairs[idx] += 1;
                }
            }
        }
        self.count += 1;
    }

    /// Folds another accumulator (e.g. from a parallel chain) into this one.
    pub fn merge(&mut self, other: &SimilarityAccumulator) -> Result<()> {
        if other.n != self.n {
            return Err(Error::InvalidArgument(format!(
                "cannot merge accumulators over {} and {} items",
                self.n, other.n
            )));
        }
        self.count += other.count;
        for (a, b) in self.pairs.iter_mut().zip(&other.pairs) {
            *a += b;
        }
        Ok(())
    }

    /// Posterior similarity matrix: `S[i][j]` is the fraction of tallied
    /// draws in which `i` and `j` share a cluster; the diagonal is 1.
    pub fn similarity(&self) -> Result<DMatrix<f64>> {
        if self.count == 0 {
            return Err(Error::InvalidArgument(
                "similarity is undefined before any partition is tallied".into(),
            ));
        }
        let mut s = DMatrix::identity(self.n, self.n);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = self.pairs[self.pair_index(i, j)] as f64 / self.count as f64;
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(s)
    }

    /// Posterior distance matrix `D = 1 − S` (zero diagonal).
    pub fn distance(&self) -> Result<DMatrix<f64>> {
        let mut d = self.similarity()?;
        for i in 0..self.n {
            for j in 0..self.n {
                d[(i, j)] = if i == j { 0.0 } else { 1.0 - d[(i, j)] };
            }
        }
        Ok(d)
    }
}

/// One agglomeration event. Nodes are numbered leaf-first: leaf `i` is node
/// `i`, and the `t`-th merge (0-based) creates node `n + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Node id of the child whose subtree holds the smaller leaf index.
    pub left: usize,
    pub right: usize,
    /// Distance at which the two children were joined.
    pub height: f64,
}

/// A single-linkage dendrogram over `n` leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    fn node_count(&self) -> usize {
        self.n + self.merges.len()
    }

    fn root(&self) -> usize {
        self.node_count() - 1
    }

    /// Leaves in display order: depth-first from the root, left child before
    /// right. Adjacent leaves were merged low, which is what makes heatmaps
    /// reordered this way block-diagonal.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.n);
        let mut stack = vec![self.root()];
        while let Some(node) = stack.pop() {
            if node < self.n {
                order.push(node);
            } else {
                let m = &self.merges[node - self.n];
                // Right is pushed first so left is visited first.
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        order
    }

    /// The partition obtained by undoing the last `k − 1` merges.
    pub fn cut(&self, k: usize) -> Result<Partition> {
        if k < 1 || k > self.n {
            return Err(Error::InvalidArgument(format!(
                "cut size must be in 1..={}, got {k}",
                self.n
            )));
        }
        // Union-find over leaves; each node id maps to one representative leaf.
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut node_leaf: Vec<usize> = (0..self.n).collect();
        for m in &self.merges[..self.n - k] {
            let a = find(&mut parent, node_leaf[m.left]);
            let b = find(&mut parent, node_leaf[m.right]);
            parent[b] = a;
            node_leaf.push(a);
        }
        let labels: Vec<usize> = (0..self.n).map(|i| find(&mut parent, i)).collect();
        Partition::from_assignment(&labels)
    }

    /// Newick serialization with leaves labeled `L0, L1, …`. Branch lengths
    /// are height differences between parent and child, printed with six
    /// significant digits.
    pub fn newick(&self) -> String {
        let labels: Vec<String> = (0..self.n).map(|i| format!("L{i}")).collect();
        self.newick_with_labels(&labels).expect("labels match leaf count")
    }

    /// Newick serialization with caller-supplied leaf labels.
    pub fn newick_with_labels(&self, labels: &[String]) -> Result<String> {
        if labels.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "expected {} leaf labels, got {}",
                self.n,
                labels.len()
            )));
        }
        let mut height = vec![0.0; self.node_count()];
        let mut text: Vec<String> = labels.to_vec();
        for (t, m) in self.merges.iter().enumerate() {
            height[self.n + t] = m.height;
            let piece = format!(
                "({}:{},{}:{})",
                text[m.left],
                fmt_sig6(m.height - height[m.left]),
                text[m.right],
                fmt_sig6(m.height - height[m.right]),
            );
            text.push(piece);
        }
        Ok(format!("{};", text[self.root()]))
    }
}

/// Formats with six significant digits in plain decimal notation, trimming
/// trailing zeros (`1.00000` → `1`, `0.0190000` → `0.019`).
fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let prec = (5 - x.abs().log10().floor() as i64).max(0) as usize;
    let s = format!("{x:.prec$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Single-linkage agglomeration of a symmetric distance matrix with zero
/// diagonal. Ties are broken lexicographically: among pairs at minimal
/// distance, merge the one whose clusters hold the smallest leaf indices.
/// The naive O(n³) sweep is plenty for the matrix sizes the sampler emits.
pub fn single_linkage(d: &DMatrix<f64>) -> Result<Dendrogram> {
    let n = d.nrows();
    if n == 0 || d.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "distance matrix must be square and nonempty, got {}×{}",
            n,
            d.ncols()
        )));
    }
    for i in 0..n {
        if d[(i, i)] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "distance matrix diagonal must be zero, got {} at ({i},{i})",
                d[(i, i)]
            )));
        }
        for j in 0..n {
            let v = d[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "distance matrix entries must be finite and nonnegative, got {v} at ({i},{j})"
                )));
            }
            if d[(j, i)] != v {
                return Err(Error::InvalidArgument(format!(
                    "distance matrix must be symmetric: ({i},{j}) = {v} but ({j},{i}) = {}",
                    d[(j, i)]
                )));
            }
        }
    }

    // Slot i starts as leaf i; a merge collapses two slots into one.
    let mut cur = d.clone();
    let mut alive = vec![true; n];
    let mut node_id: Vec<usize> = (0..n).collect();
    let mut min_leaf: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for t in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..n {
            if !alive[a] {
                continue;
            }
            for b in a + 1..n {
                if !alive[b] {
                    continue;
                }
                let (lo, hi) = if min_leaf[a] < min_leaf[b] {
                    (min_leaf[a], min_leaf[b])
                } else {
                    (min_leaf[b], min_leaf[a])
                };
                let key = (cur[(a, b)], lo, hi);
                if best.is_none_or(|(h, l, r, _, _)| key < (h, l, r)) {
                    best = Some((key.0, key.1, key.2, a, b));
                }
            }
        }
        let (height, _, _, a, b) = best.expect("at least two live slots");
        let (left_slot, right_slot) = if min_leaf[a] <= min_leaf[b] { (a, b) } else { (b, a) };
        merges.push(Merge {
            left: node_id[left_slot],
            right: node_id[right_slot],
            height,
        });
        for c in 0..n {
            if alive[c] && c != a && c != b {
                let nd = cur[(a, c)].min(cur[(b, c)]);
                cur[(a, c)] = nd;
                cur[(c, a)] = nd;
            }
        }
        alive[b] = false;
        node_id[a] = n + t;
        min_leaf[a] = min_leaf[a].min(min_leaf[b]);
    }
    Ok(Dendrogram { n, merges })
}

/// Renders a matrix of values in `[0, 1]` as an ASCII PGM (P2) image, one
/// pixel per entry, darkest at 0. `order`, when given, permutes both rows
/// and columns (pixel `(r, c)` shows `s[order[r], order[c]]`) — pass a
/// dendrogram's `leaf_order` to make posterior-similarity blocks contiguous.
pub fn heatmap_pgm(s: &DMatrix<f64>, order: Option<&[usize]>) -> Result<String> {
    let n = s.nrows();
    if n == 0 || s.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "heatmap matrix must be square and nonempty, got {}×{}",
            n,
            s.ncols()
        )));
    }
    for i in 0..n {
        for j in 0..n {
            let v = s[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "heatmap entries must lie in [0, 1], got {v} at ({i},{j})"
                )));
            }
        }
    }
    let identity: Vec<usize>;
    let order = match order {
        Some(o) => {
            let mut seen = vec![false; n];
            if o.len() != n || !o.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
            {
                return Err(Error::InvalidArgument(format!(
                    "row order must be a permutation of 0..{n}"
                )));
            }
            o
        }
        None => {
            identity = (0..n).collect();
            &identity
        }
    };
    let mut out = format!("P2\n{n} {n}\n255\n");
    for &r in order {
        let mut first = true;
        for &c in order {
            if !first {
                out.push(' ');
            }
            first = false;
            out.push_str(itoa(&mut [0u8; 3], (255.0 * s[(r, c)]).round() as u8));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Formats a u8 into a caller-provided buffer without allocating; heatmaps
/// emit n² of these.
fn itoa(buf: &mut [u8; 3], mut v: u8) -> &str {
    let mut i = 3;
    loop {
        i -= 1;
        buf[i] = b'0' + v % 10;
        v /= 10;
        if v == 0 {
            break;
        }
    }
    std::str::from_utf8(&buf[i..]).expect("digits are ASCII")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist_1d(points: &[f64]) -> DMatrix<f64> {
        let n = points.len();
        DMatrix::from_fn(n, n, |i, j| (points[i] - points[j]).abs())
    }

    #[test]
    fn accumulator_over_identical_partitions_is_binary() {
        let p = Partition::from_assignment(&[0, 0, 1, 1, 0]).unwrap();
        let mut acc = SimilarityAccumulator::new(5);
        for _ in 0..7 {
            acc.add(&p);
        }
        assert_eq!(acc.count(), 7);
        let s = acc.similarity().unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = (p.cluster_of(i) == p.cluster_of(j)) as u8 as f64;
                assert_eq!(s[(i, j)], expect, "({i},{j})");
            }
        }
        let d = acc.distance().unwrap();
        for i in 0..5 {
            for j in 0..5 {
                // With s binary and a unit diagonal, d = 1 − s everywhere.
                assert_eq!(d[(i, j)], 1.0 - s[(i, j)], "({i},{j})");
            }
        }
    }

    #[test]
    fn accumulator_mixes_draws() {
        let mut acc = SimilarityAccumulator::new(3);
        acc.add(&Partition::one_cluster(3));
        acc.add(&Partition::singletons(3));
        acc.add(&Partition::from_assignment(&[0, 0, 1]).unwrap());
        let s = acc.similarity().unwrap();
        assert!((s[(0, 1)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s[(0, 2)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((s[(1, 2)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s[(2, 2)], 1.0);
        let d = acc.distance().unwrap();
        assert!((d[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(d[(0, 0)], 0.0);
    }

    #[test]
    fn empty_accumulator_refuses_to_normalize() {
        let acc = SimilarityAccumulator::new(4);
        assert!(acc.similarity().is_err());
        assert!(acc.distance().is_err());
    }

    #[test]
    fn merge_requires_matching_sizes() {
        let mut a = SimilarityAccumulator::new(4);
        let b = SimilarityAccumulator::new(5);
        assert!(a.merge(&b).is_err());
    }

    #[test]
    fn single_linkage_hand_example() {
        // Points 0, 1, 5 on a line: {0,1} join at 1, then {2} at 4.
        let d = dist_1d(&[0.0, 1.0, 5.0]);
        let tree = single_linkage(&d).unwrap();
        assert_eq!(
            tree.merges(),
            &[
                Merge { left: 0, right: 1, height: 1.0 },
                Merge { left: 3, right: 2, height: 4.0 },
            ]
        );
        assert_eq!(tree.newick(), "((L0:1,L1:1):3,L2:4);");
        assert_eq!(tree.leaf_order(), vec![0, 1, 2]);
        let cut2 = tree.cut(2).unwrap();
        assert_eq!(cut2, Partition::from_assignment(&[0, 0, 1]).unwrap());
        assert_eq!(tree.cut(1).unwrap(), Partition::one_cluster(3));
        assert_eq!(tree.cut(3).unwrap(), Partition::singletons(3));
        assert!(tree.cut(0).is_err());
        assert!(tree.cut(4).is_err());
    }

    #[test]
    fn equal_distances_merge_lexicographically() {
        let mut d = DMatrix::from_element(4, 4, 1.0);
        for i in 0..4 {
            d[(i, i)] = 0.0;
        }
        let tree = single_linkage(&d).unwrap();
        assert_eq!(
            tree.merges(),
            &[
                Merge { left: 0, right: 1, height: 1.0 },
                Merge { left: 4, right: 2, height: 1.0 },
                Merge { left: 5, right: 3, height: 1.0 },
            ]
        );
        assert_eq!(tree.newick(), "(((L0:1,L1:1):0,L2:1):0,L3:1);");
        assert_eq!(tree.leaf_order(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_leaf_tree() {
        let d = DMatrix::zeros(1, 1);
        let tree = single_linkage(&d).unwrap();
        assert!(tree.merges().is_empty());
        assert_eq!(tree.newick(), "L0;");
        assert_eq!(tree.leaf_order(), vec![0]);
        assert_eq!(tree.cut(1).unwrap(), Partition::singletons(1));
    }

    #[test]
    fn leaf_order_tracks_merge_structure() {
        // Points 0, 10, 11, 1: pairs (0,3) and (1,2) merge first.
        let d = dist_1d(&[0.0, 10.0, 11.0, 1.0]);
        let tree = single_linkage(&d).unwrap();
        assert_eq!(tree.leaf_order(), vec![0, 3, 1, 2]);
        let cut2 = tree.cut(2).unwrap();
        assert_eq!(cut2, Partition::from_assignment(&[0, 1, 1, 0]).unwrap());
    }

    #[test]
    fn single_linkage_rejects_malformed_matrices() {
        let ok = dist_1d(&[0.0, 1.0]);
        assert!(single_linkage(&ok).is_ok());
        let mut bad = ok.clone();
        bad[(0, 0)] = 0.5;
        assert!(single_linkage(&bad).is_err());
        let mut bad = ok.clone();
        bad[(0, 1)] = f64::NAN;
        assert!(single_linkage(&bad).is_err());
        let mut bad = ok.clone();
        bad[(0, 1)] = -1.0;
        assert!(single_linkage(&bad).is_err());
        let mut bad = ok.clone();
        bad[(0, 1)] = 2.0;
        assert!(single_linkage(&bad).is_err());
        assert!(single_linkage(&DMatrix::zeros(2, 3)).is_err());
        assert!(single_linkage(&DMatrix::zeros(0, 0)).is_err());
    }

    #[test]
    fn newick_formats_six_significant_digits() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1");
        assert_eq!(fmt_sig6(0.019), "0.019");
        assert_eq!(fmt_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig6(123456.7), "123457");
        assert_eq!(fmt_sig6(0.000123456), "0.000123456");
    }

    #[test]
    fn newick_with_custom_labels() {
        let d = dist_1d(&[0.0, 1.0, 5.0]);
        let tree = single_linkage(&d).unwrap();
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        assert_eq!(
            tree.newick_with_labels(&labels).unwrap(),
            "((a:1,b:1):3,c:4);"
        );
        assert!(tree.newick_with_labels(&labels[..2].to_vec()).is_err());
    }

    #[test]
    fn pgm_rounds_half_up_and_orders_rows() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.0]);
        let pgm = heatmap_pgm(&s, None).unwrap();
        assert_eq!(pgm, "P2\n2 2\n255\n255 128\n128 0\n");
        let flipped = heatmap_pgm(&s, Some(&[1, 0])).unwrap();
        assert_eq!(flipped, "P2\n2 2\n255\n0 128\n128 255\n");
    }

    #[test]
    fn pgm_validates_entries_and_order() {
        let s = DMatrix::from_element(2, 2, 0.25);
        assert!(heatmap_pgm(&s, Some(&[0, 0])).is_err());
        assert!(heatmap_pgm(&s, Some(&[0])).is_err());
        assert!(heatmap_pgm(&s, Some(&[1, 2])).is_err());
        let mut bad = s.clone();
        bad[(0, 1)] = 1.5;
        assert!(heatmap_pgm(&bad, None).is_err());
        bad[(0, 1)] = f64::NAN;
        assert!(heatmap_pgm(&bad, None).is_err());
    }

    proptest! {
        /// Merging two accumulators equals tallying all draws into one.
        #[test]
        fn accumulator_merge_matches_concatenation(
            first in proptest::collection::vec(proptest::collection::vec(0usize..4, 6), 1..8),
            second in proptest::collection::vec(proptest::collection::vec(0usize..4, 6), 1..8),
        ) {
            let mut a = SimilarityAccumulator::new(6);
            let mut b = SimilarityAccumulator::new(6);
            let mut whole = SimilarityAccumulator::new(6);
            for raw in &first {
                let p = Partition::from_assignment(raw).unwrap();
                a.add(&p);
                whole.add(&p);
            }
            for raw in &second {
                let p = Partition::from_assignment(raw).unwrap();
                b.add(&p);
                whole.add(&p);
            }
            a.merge(&b).unwrap();
            prop_assert_eq!(a.count(), whole.count());
            prop_assert_eq!(a.similarity().unwrap(), whole.similarity().unwrap());
        }

        /// Single-linkage heights never decrease, and cutting at k yields
        /// exactly k clusters.
        #[test]
        fn single_linkage_heights_monotone_and_cuts_consistent(
            points in proptest::collection::vec(-50.0f64..50.0, 2..10),
        ) {
            let d = dist_1d(&points);
            let tree = single_linkage(&d).unwrap();
            let heights: Vec<f64> = tree.merges().iter().map(|m| m.height).collect();
            prop_assert!(heights.windows(2).all(|w| w[0] <= w[1]));
            for k in 1..=points.len() {
                prop_assert_eq!(tree.cut(k).unwrap().num_clusters(), k);
            }
            let order = tree.leaf_order();
            let mut sorted = order.clone();
            sorted.sort_unstable();
            let all: Vec<usize> = (0..points.len()).collect();
            prop_assert_eq!(sorted, all);
        }
    }
}

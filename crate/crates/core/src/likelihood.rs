//! Profile log-likelihoods of the Gaussian cluster-effects model.
//!
//! The observation covariance has the form `Γ = I_n + θ·B`, where `B` is the
//! co-clustering indicator of a partition. Its inverse is the finite-rank
//! correction `Γ⁻¹ = I_n − θ·W·B` with `w_i = 1/(1 + θ·n_{b(i)})`, so every
//! quantity the likelihoods need reduces to d×d algebra over per-cluster row
//! sums of the column-centered data — nothing here builds an n×n matrix.
//!
//! Three nested models differ only in the scale statistic they profile out
//! of `Q = Ỹᵀ Γ⁻¹ Ỹ`:
//!
//! * model I — a single isotropic scale: `tr(Q)`;
//! * model II — one scale per coordinate: `Π_r Q_rr`;
//! * model III — a full covariance: `det(Q)`.
//!
//! Each yields `log L = (d/2)·log det Γ⁻¹ − (n·/2)·(scale term)`, and each is
//! invariant under its matching group of affine transformations of the data
//! (similarity, per-coordinate scaling, or arbitrary invertible affine maps).

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Relative floor for `det(Q)` in model III: the determinant must exceed
/// `DET_REL_TOL · (tr(Q)/d)^d` or the data are reported as degenerate.
const DET_REL_TOL: f64 = 1e-12;

/// Which scale structure is profiled out of the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ModelKind {
    /// Model I: isotropic scale; invariant under rotation + global scaling + shift.
    #[serde(rename = "I")]
    Isotropic,
    /// Model II: per-coordinate scales; invariant under axis-wise scaling + shift.
    #[serde(rename = "II")]
    Diagonal,
    /// Model III: full covariance; invariant under any invertible affine map.
    #[serde(rename = "III")]
    Full,
}

impl ModelKind {
    /// Conventional roman-numeral name (`I`, `II`, `III`).
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Isotropic => "I",
            ModelKind::Diagonal => "II",
            ModelKind::Full => "III",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(ModelKind::Isotropic),
            "II" | "2" => Ok(ModelKind::Diagonal),
            "III" | "3" => Ok(ModelKind::Full),
            other => Err(Error::InvalidArgument(format!(
                "unknown model '{other}' (expected I, II, or III)"
            ))),
        }
    }
}

/// An n×d data matrix together with its column-centered form and the d×d
/// Gram matrix `ỸᵀỸ` that every likelihood evaluation starts from.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    raw: DMatrix<f64>,
    centered: DMatrix<f64>,
    gram: DMatrix<f64>,
}

/// Centers the columns of `y` and precomputes `ỸᵀỸ`.
pub fn center_columns(y: DMatrix<f64>) -> Result<DataMatrix> {
    let (n, d) = y.shape();
    if n < 2 {
        return Err(Error::Data(format!("need at least 2 rows, got {n}")));
    }
    if d < 1 {
        return Err(Error::Data("need at least 1 column".into()));
    }
    for i in 0..n {
        for j in 0..d {
            if !y[(i, j)].is_finite() {
                return Err(Error::Data(format!(
                    "non-finite value {} at row {i}, column {j}",
                    y[(i, j)]
                )));
            }
        }
    }
    let mut centered = y.clone();
    for j in 0..d {
        let mean = y.column(j).sum() / n as f64;
        for i in 0..n {
            centered[(i, j)] -= mean;
        }
    }
    let gram = centered.transpose() * &centered;
    Ok(DataMatrix {
        raw: y,
        centered,
        gram,
    })
}

impl DataMatrix {
    /// Number of rows (observations).
    pub fn n(&self) -> usize {
        self.raw.nrows()
    }

    /// Number of columns (features).
    pub fn dim(&self) -> usize {
        self.raw.ncols()
    }

    /// The data as given; proposal distances are measured on these rows.
    pub fn raw(&self) -> &DMatrix<f64> {
        &self.raw
    }

    /// The column-centered data `Ỹ`.
    pub fn centered(&self) -> &DMatrix<f64> {
        &self.centered
    }

    /// The cached Gram matrix `ỸᵀỸ`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }
}

/// Per-cluster sufficient statistics: sizes and centered-row sums `s_b`.
/// The likelihood is a function of this multiset alone, which is what lets
/// the sampler evaluate proposals by editing a handful of entries.
#[derive(Debug, Clone)]
pub(crate) struct ClusterStats {
    pub sizes: Vec<usize>,
    pub sums: Vec<DVector<f64>>,
}

impl ClusterStats {
    pub fn from_partition(data: &DataMatrix, p: &Partition) -> Self {
        let mut sizes = Vec::with_capacity(p.num_clusters());
        let mut sums = Vec::with_capacity(p.num_clusters());
        for members in p.clusters() {
            sizes.push(members.len());
            sums.push(centered_row_sum(data, members));
        }
        ClusterStats { sizes, sums }
    }
}

/// Sum of centered rows over `members`.
pub(crate) fn centered_row_sum(data: &DataMatrix, members: &[usize]) -> DVector<f64> {
    let d = data.dim();
    let mut s = DVector::zeros(d);
    for &i in members {
        for c in 0..d {
            s[c] += data.centered[(i, c)];
        }
    }
    s
}

/// `Q = Ỹᵀ Γ⁻¹ Ỹ`, computed blockwise as `ỸᵀỸ − θ Σ_b s_b s_bᵀ / (1 + θ·n_b)`.
pub fn quadratic_form(data: &DataMatrix, p: &Partition, theta: f64) -> DMatrix<f64> {
    debug_assert!(theta >= 0.0, "theta must be nonnegative");
    let stats = ClusterStats::from_partition(data, p);
    quadratic_form_from_stats(data, &stats, theta)
}

pub(crate) fn quadratic_form_from_stats(
    data: &DataMatrix,
    stats: &ClusterStats,
    theta: f64,
) -> DMatrix<f64> {
    let mut q = data.gram.clone();
    for (sz, s) in stats.sizes.iter().zip(&stats.sums) {
        let w = theta / (1.0 + theta * *sz as f64);
        q.ger(-w, s, s, 1.0);
    }
    q
}

/// `log det Γ⁻¹ = −Σ_b log(1 + θ·n_b)`.
pub fn log_det_gamma_inv(p: &Partition, theta: f64) -> f64 {
    debug_assert!(theta >= 0.0, "theta must be nonnegative");
    -p.clusters()
        .iter()
        .map(|c| (1.0 + theta * c.len() as f64).ln())
        .sum::<f64>()
}

fn log_det_gamma_inv_from_sizes(sizes: &[usize], theta: f64) -> f64 {
    -sizes
        .iter()
        .map(|&sz| (1.0 + theta * sz as f64).ln())
        .sum::<f64>()
}

/// Profile log-likelihood of `p` at covariance weight `theta`.
pub fn profile_log_lik(
    model: ModelKind,
    data: &DataMatrix,
    p: &Partition,
    theta: f64,
) -> Result<f64> {
    let stats = ClusterStats::from_partition(data, p);
    profile_log_lik_from_stats(model, data, &stats, theta)
}

pub(crate) fn profile_log_lik_from_stats(
    model: ModelKind,
    data: &DataMatrix,
    stats: &ClusterStats,
    theta: f64,
) -> Result<f64> {
    let n = data.n() as f64;
    let d = data.dim() as f64;
    if model == ModelKind::Full && data.n() <= data.dim() + 1 {
        return Err(Error::ModelPrecondition(format!(
            "model III requires n > d + 1 (n = {}, d = {})",
            data.n(),
            data.dim()
        )));
    }
    let ldg = log_det_gamma_inv_from_sizes(&stats.sizes, theta);
    let q = quadratic_form_from_stats(data, stats, theta);
    let scale = match model {
        ModelKind::Isotropic => {
            let tr = q.trace();
            if !(tr > 0.0) {
                return Err(Error::DegenerateData {
                    model: "I",
                    quantity: "tr(Q)",
                    value: tr,
                    rule: "tr(Q) > 0",
                });
            }
            n * d * tr.ln()
        }
        ModelKind::Diagonal => {
            let mut sum = 0.0;
            for r in 0..data.dim() {
                let qrr = q[(r, r)];
                if !(qrr > 0.0) {
                    return Err(Error::DegenerateData {
                        model: "II",
                        quantity: "Q_rr",
                        value: qrr,
                        rule: "every diagonal entry of Q > 0",
                    });
                }
                sum += qrr.ln();
            }
            n * sum
        }
        ModelKind::Full => {
            let tr = q.trace();
            if !(tr > 0.0) {
                return Err(Error::DegenerateData {
                    model: "III",
                    quantity: "tr(Q)",
                    value: tr,
                    rule: "tr(Q) > 0",
                });
            }
            let Some(chol) = Cholesky::new(q.clone()) else {
                return Err(Error::DegenerateData {
                    model: "III",
                    quantity: "det(Q)",
                    value: q.determinant(),
                    rule: "Q positive definite",
                });
            };
            let l = chol.l();
            let log_det: f64 = (0..data.dim()).map(|i| 2.0 * l[(i, i)].ln()).sum();
            // Relative floor keeps near-singular scatter from masquerading
            // as an astronomically good fit.
            if log_det <= DET_REL_TOL.ln() + d * (tr / d).ln() {
                return Err(Error::DegenerateData {
                    model: "III",
                    quantity: "det(Q)",
                    value: log_det.exp(),
                    rule: "det(Q) > 1e-12 · (tr(Q)/d)^d",
                });
            }
            n * log_det
        }
    };
    Ok(0.5 * d * ldg - 0.5 * scale)
}

/// Log density (up to a constant) of the scale-invariant F-type prior on θ:
/// `(α−1)·log θ − 2α·log(1+θ)`.
pub fn theta_log_prior(theta: f64, alpha: f64) -> f64 {
    debug_assert!(theta > 0.0 && alpha > 0.0);
    (alpha - 1.0) * theta.ln() - 2.0 * alpha * (1.0 + theta).ln()
}

/// A finite grid of θ values with the prior shape parameter α.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThetaGrid {
    values: Vec<f64>,
    pub alpha: f64,
}

impl ThetaGrid {
    /// A grid from explicit values; must be positive, finite, and strictly
    /// increasing.
    pub fn new(values: Vec<f64>, alpha: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("theta grid must be nonempty".into()));
        }
        for &v in &values {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "theta grid values must be positive and finite, got {v}"
                )));
            }
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "theta grid must be strictly increasing".into(),
            ));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(ThetaGrid { values, alpha })
    }

    /// Geometric grid from `lo` to `hi` (inclusive) with the given ratio.
    pub fn geometric(lo: f64, hi: f64, ratio: f64, alpha: f64) -> Result<Self> {
        if !(lo.is_finite() && lo > 0.0) || !(hi.is_finite() && hi >= lo) {
            return Err(Error::InvalidArgument(format!(
                "geometric grid needs 0 < lo ≤ hi, got lo = {lo}, hi = {hi}"
            )));
        }
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "geometric grid ratio must exceed 1, got {ratio}"
            )));
        }
        let mut values = Vec::new();
        let mut v = lo;
        while v < hi * (1.0 - 1e-12) {
            values.push(v);
            v *= ratio;
            if values.len() > 10_000 {
                return Err(Error::InvalidArgument(
                    "geometric grid would exceed 10,000 points".into(),
                ));
            }
        }
        values.push(hi);
        ThetaGrid::new(values, alpha)
    }

    /// The default grid: `2⁻³, 2⁻², …, 2¹⁰` (14 values), α = 1.
    pub fn default_grid() -> Self {
        let values = (-3..=10).map(|e| 2f64.powi(e)).collect();
        ThetaGrid { values, alpha: 1.0 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid::default_grid()
    }
}

/// Normalized posterior over the grid: `p_j ∝ prior(θ_j) · L_p(B, θ_j)`,
/// computed with max-subtraction to stay finite.
pub fn theta_posterior(
    model: ModelKind,
    data: &DataMatrix,
    p: &Partition,
    grid: &ThetaGrid,
) -> Result<Vec<f64>> {
    let stats = ClusterStats::from_partition(data, p);
    let logliks: Vec<f64> = grid
        .values
        .iter()
        .map(|&t| profile_log_lik_from_stats(model, data, &stats, t))
        .collect::<Result<_>>()?;
    Ok(posterior_weights(&logliks, grid))
}

/// Softmax of `loglik + theta_log_prior` over the grid.
pub(crate) fn posterior_weights(logliks: &[f64], grid: &ThetaGrid) -> Vec<f64> {
    let logs: Vec<f64> = logliks
        .iter()
        .zip(grid.values())
        .map(|(&ll, &t)| ll + theta_log_prior(t, grid.alpha))
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_partitions;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        center_columns(y).unwrap()
    }

    /// Dense oracle: build Γ = I + θB explicitly and invert it.
    fn dense_gamma_inv(p: &Partition, theta: f64) -> DMatrix<f64> {
        let n = p.n();
        let mut g = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                if p.cluster_of(i) == p.cluster_of(j) {
                    g[(i, j)] += theta;
                }
            }
        }
        g.try_inverse().expect("Γ is positive definite")
    }

    #[test]
    fn quadratic_form_matches_dense_inverse_on_all_partitions() {
        let data = random_data(6, 2, 11);
        let thetas = [0.125, 0.7, 1.0, 3.3, 1024.0];
        for p in enumerate_partitions(6).unwrap() {
            for &t in &thetas {
                let fast = quadratic_form(&data, &p, t);
                let dense = data.centered().transpose() * dense_gamma_inv(&p, t) * data.centered();
                let scale = dense.norm().max(1.0);
                assert!(
                    (&fast - &dense).norm() / scale < 1e-9,
                    "partition {p}, θ = {t}"
                );
            }
        }
    }

    #[test]
    fn log_det_matches_dense_inverse() {
        let thetas = [0.125, 0.7, 1.0, 3.3, 1024.0];
        for p in enumerate_partitions(5).unwrap() {
            for &t in &thetas {
                let dense = dense_gamma_inv(&p, t).determinant().ln();
                let fast = log_det_gamma_inv(&p, t);
                assert!((fast - dense).abs() < 1e-9 * dense.abs().max(1.0));
            }
        }
    }

    #[test]
    fn theta_zero_reduces_to_gram() {
        let data = random_data(7, 3, 2);
        let p = Partition::from_assignment(&[0, 1, 0, 2, 1, 0, 2]).unwrap();
        let q = quadratic_form(&data, &p, 0.0);
        assert!((q - data.gram()).norm() < 1e-12);
        assert_eq!(log_det_gamma_inv(&p, 0.0), 0.0);
    }

    #[test]
    fn one_cluster_quadratic_form_is_gram() {
        // Centered columns sum to zero, so the single cluster's correction
        // term vanishes for every θ.
        let data = random_data(8, 2, 3);
        let p = Partition::one_cluster(8);
        for &t in &[0.5, 2.0, 100.0] {
            let q = quadratic_form(&data, &p, t);
            assert!((q - data.gram()).norm() < 1e-9);
        }
    }

    #[test]
    fn singleton_log_lik_is_theta_free() {
        let data = random_data(6, 2, 4);
        let p = Partition::singletons(6);
        let expected = -(6.0 * 2.0 / 2.0) * data.gram().trace().ln();
        for &t in &[0.125, 1.0, 17.0] {
            let ll = profile_log_lik(ModelKind::Isotropic, &data, &p, t).unwrap();
            assert!((ll - expected).abs() < 1e-9, "θ = {t}: {ll} vs {expected}");
        }
    }

    #[test]
    fn profile_log_lik_matches_dense_formulas() {
        let data = random_data(6, 2, 7);
        let n = 6.0;
        let d = 2.0;
        for p in enumerate_partitions(6).unwrap() {
            for &t in &[0.25, 1.0, 8.0] {
                let ginv = dense_gamma_inv(&p, t);
                let q = data.centered().transpose() * &ginv * data.centered();
                let ldg = ginv.determinant().ln();
                let want_i = 0.5 * d * ldg - 0.5 * n * d * q.trace().ln();
                let want_ii = 0.5 * d * ldg - 0.5 * n * (q[(0, 0)].ln() + q[(1, 1)].ln());
                let want_iii = 0.5 * d * ldg - 0.5 * n * q.determinant().ln();
                let got_i = profile_log_lik(ModelKind::Isotropic, &data, &p, t).unwrap();
                let got_ii = profile_log_lik(ModelKind::Diagonal, &data, &p, t).unwrap();
                let got_iii = profile_log_lik(ModelKind::Full, &data, &p, t).unwrap();
                assert!((got_i - want_i).abs() < 1e-8);
                assert!((got_ii - want_ii).abs() < 1e-8);
                assert!((got_iii - want_iii).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn model_iii_needs_enough_rows() {
        let data = random_data(4, 3, 5);
        let p = Partition::singletons(4);
        match profile_log_lik(ModelKind::Full, &data, &p, 1.0) {
            Err(Error::ModelPrecondition(_)) => {}
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn constant_data_is_degenerate() {
        let y = DMatrix::from_element(5, 2, 3.25);
        let data = center_columns(y).unwrap();
        let p = Partition::singletons(5);
        match profile_log_lik(ModelKind::Isotropic, &data, &p, 1.0) {
            Err(Error::DegenerateData { quantity: "tr(Q)", .. }) => {}
            other => panic!("expected degenerate tr(Q), got {other:?}"),
        }
    }

    #[test]
    fn duplicated_column_is_degenerate_only_for_model_iii() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let col: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let y = DMatrix::from_fn(8, 2, |i, _| col[i]);
        let data = center_columns(y).unwrap();
        let p = Partition::from_assignment(&[0, 0, 1, 1, 2, 2, 3, 3]).unwrap();
        assert!(profile_log_lik(ModelKind::Diagonal, &data, &p, 1.0).is_ok());
        match profile_log_lik(ModelKind::Full, &data, &p, 1.0) {
            Err(Error::DegenerateData { model: "III", .. }) => {}
            other => panic!("expected degenerate det(Q), got {other:?}"),
        }
    }

    #[test]
    fn one_dimensional_models_coincide() {
        let data = random_data(9, 1, 6);
        for p in enumerate_partitions(9).unwrap().iter().step_by(407) {
            for &t in &[0.5, 4.0] {
                let a = profile_log_lik(ModelKind::Isotropic, &data, p, t).unwrap();
                let b = profile_log_lik(ModelKind::Diagonal, &data, p, t).unwrap();
                let c = profile_log_lik(ModelKind::Full, &data, p, t).unwrap();
                assert!((a - b).abs() < 1e-12 && (b - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_lik_differences_are_group_invariant() {
        let data = random_data(7, 2, 8);
        let parts = enumerate_partitions(7).unwrap();
        let pairs = [(0usize, 100usize), (3, 400), (50, 800)];
        let theta = 2.0;

        // Model I: rotation, global scale, shift.
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let sim = center_columns(transform(data.raw(), &(3.7 * &rot), &[0.4, -2.0])).unwrap();
        // Model II: per-coordinate scales, shift.
        let diag = DMatrix::from_row_slice(2, 2, &[5.0, 0.0, 0.0, 0.2]);
        let axis = center_columns(transform(data.raw(), &diag, &[1.0, 1.0])).unwrap();
        // Model III: any invertible affine map.
        let a = DMatrix::from_row_slice(2, 2, &[4.1, 2.1, 1.9, 1.1]);
        let gen = center_columns(transform(data.raw(), &a, &[-0.3, 0.9])).unwrap();

        for &(i, j) in &pairs {
            for (model, moved) in [
                (ModelKind::Isotropic, &sim),
                (ModelKind::Diagonal, &axis),
                (ModelKind::Full, &gen),
            ] {
                let base = profile_log_lik(model, &data, &parts[i], theta).unwrap()
                    - profile_log_lik(model, &data, &parts[j], theta).unwrap();
                let after = profile_log_lik(model, moved, &parts[i], theta).unwrap()
                    - profile_log_lik(model, moved, &parts[j], theta).unwrap();
                assert!(
                    (base - after).abs() < 1e-8,
                    "model {model}: {base} vs {after}"
                );
            }
        }
    }

    fn transform(y: &DMatrix<f64>, a: &DMatrix<f64>, shift: &[f64]) -> DMatrix<f64> {
        let mut out = y * a;
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                out[(i, j)] += shift[j];
            }
        }
        out
    }

    #[test]
    fn default_grid_has_fourteen_doubling_values() {
        let g = ThetaGrid::default_grid();
        assert_eq!(g.len(), 14);
        assert_eq!(g.values()[0], 0.125);
        assert_eq!(g.values()[13], 1024.0);
        for w in g.values().windows(2) {
            assert_eq!(w[1], w[0] * 2.0);
        }
        let same = ThetaGrid::geometric(0.125, 1024.0, 2.0, 1.0).unwrap();
        assert_eq!(g, same);
    }

    #[test]
    fn grid_validation_rejects_bad_input() {
        assert!(ThetaGrid::new(vec![], 1.0).is_err());
        assert!(ThetaGrid::new(vec![1.0, 1.0], 1.0).is_err());
        assert!(ThetaGrid::new(vec![-1.0, 1.0], 1.0).is_err());
        assert!(ThetaGrid::new(vec![0.5, 1.0], 0.0).is_err());
        assert!(ThetaGrid::geometric(1.0, 0.5, 2.0, 1.0).is_err());
        assert!(ThetaGrid::geometric(0.5, 8.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn theta_posterior_is_normalized_and_prior_shaped_on_singletons() {
        let data = random_data(6, 2, 12);
        let grid = ThetaGrid::new(vec![0.5, 1.0, 2.0, 4.0], 1.0).unwrap();
        let p = Partition::from_assignment(&[0, 0, 1, 1, 2, 2]).unwrap();
        let post = theta_posterior(ModelKind::Isotropic, &data, &p, &grid).unwrap();
        assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // All singletons: the likelihood is θ-free, so the posterior equals
        // the normalized prior weights on the grid.
        let singles = Partition::singletons(6);
        let post = theta_posterior(ModelKind::Isotropic, &data, &singles, &grid).unwrap();
        let prior: Vec<f64> = grid.values().iter().map(|&t| theta_log_prior(t, 1.0).exp()).collect();
        let total: f64 = prior.iter().sum();
        for (got, want) in post.iter().zip(&prior) {
            assert!((got - want / total).abs() < 1e-12);
        }
    }

    #[test]
    fn center_columns_validates_input() {
        assert!(center_columns(DMatrix::from_row_slice(1, 2, &[1.0, 2.0])).is_err());
        assert!(center_columns(DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0])).is_err());
        assert!(center_columns(DMatrix::from_row_slice(2, 2, &[1.0, f64::INFINITY, 0.0, 1.0])).is_err());
    }
}

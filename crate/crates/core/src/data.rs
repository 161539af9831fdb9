//! Datasets: CSV I/O, synthetic generators, affine maps, PCA, and the
//! external clustering metrics used to score results against references.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the largest are treated as zero
/// when deciding whether the data supports a requested projection.
const PCA_RANK_TOL: f64 = 1e-12;

/// Largest number of predicted clusters the error-rate matcher accepts;
/// the exact matcher enumerates subsets of predicted clusters.
pub const ERROR_RATE_MAX_PRED: usize = 12;

/// A numeric feature matrix with optional integer labels (one per row).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// Rows are observations, columns are features.
    pub y: DMatrix<f64>,
    /// Reference cluster ids, when the source provided them.
    pub labels: Option<Vec<usize>>,
    /// One name per feature column.
    pub feature_names: Vec<String>,
}

impl LabeledDataset {
    /// Wraps a bare matrix with synthesized feature names and no labels.
    pub fn from_matrix(y: DMatrix<f64>) -> Self {
        let names = (0..y.ncols()).map(|c| format!("x{c}")).collect();
        LabeledDataset {
            y,
            labels: None,
            feature_names: names,
        }
    }
}

/// How to find the label column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    /// Treat every column as a feature.
    None,
    /// Use a header column named `label` (case-insensitive) if one exists.
    Auto,
    /// Use the column with this header name, or this 0-based index when no
    /// header (or no such name) is present. Fails if it resolves to nothing.
    Named(String),
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.display().to_string(),
            source,
        },
        other => Error::Data(format!("{}: {:?}", path.display(), other)),
    }
}

/// Loads a CSV file. A header is assumed when any cell of the first row
/// fails to parse as a number. Label values may be arbitrary strings; they
/// are mapped to dense ids in order of first appearance.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut records: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        records.push(rec.map_err(|e| csv_error(path, e))?);
    }
    if records.is_empty() {
        return Err(Error::Data(format!("{}: file has no rows", path.display())));
    }
    let ncols = records[0].len();
    if ncols == 0 {
        return Err(Error::Data(format!("{}: rows have no columns", path.display())));
    }
    for (ridx, rec) in records.iter().enumerate() {
        if rec.len() != ncols {
            return Err(Error::Data(format!(
                "{}: row {} has {} columns, expected {}",
                path.display(),
                ridx + 1,
                rec.len(),
                ncols
            )));
        }
    }

    let has_header = records[0].iter().any(|cell| cell.parse::<f64>().is_err());
    let header: Option<&csv::StringRecord> = has_header.then(|| &records[0]);
    let data_rows = &records[has_header as usize..];
    if data_rows.is_empty() {
        return Err(Error::Data(format!(
            "{}: file has a header but no data rows",
            path.display()
        )));
    }

    let label_idx: Option<usize> = match label {
        LabelColumn::None => None,
        LabelColumn::Auto => header.and_then(|h| {
            h.iter().position(|name| name.eq_ignore_ascii_case("label"))
        }),
        LabelColumn::Named(name) => {
            let by_name = header.and_then(|h| h.iter().position(|n| n == name));
            let resolved = by_name.or_else(|| {
                name.parse::<usize>().ok().filter(|&i| i < ncols)
            });
            match resolved {
                Some(i) => Some(i),
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "{}: no column named '{name}' (and it is not a valid 0-based index)",
                        path.display()
                    )))
                }
            }
        }
    };
    if label_idx.is_some() && ncols == 1 {
        return Err(Error::Data(format!(
            "{}: the label column is the only column; no features remain",
            path.display()
        )));
    }

    let n = data_rows.len();
    let d = ncols - usize::from(label_idx.is_some());
    let mut y = DMatrix::zeros(n, d);
    let mut labels: Vec<usize> = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    for (r, rec) in data_rows.iter().enumerate() {
        let file_row = r + 1 + has_header as usize;
        let mut feature = 0;
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                let next = label_ids.len();
                let id = *label_ids.entry(cell.to_string()).or_insert(next);
                labels.push(id);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::CsvParse {
                path: path.display().to_string(),
                row: file_row,
                col: c + 1,
                message: format!("'{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::CsvParse {
                    path: path.display().to_string(),
                    row: file_row,
                    col: c + 1,
                    message: format!("'{cell}' is not finite"),
                });
            }
            y[(r, feature)] = v;
            feature += 1;
        }
    }

    let feature_names: Vec<String> = match header {
        Some(h) => h
            .iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != label_idx)
            .map(|(_, name)| name.to_string())
            .collect(),
        None => (0..d).map(|c| format!("x{c}")).collect(),
    };
    Ok(LabeledDataset {
        y,
        labels: label_idx.map(|_| labels),
        feature_names,
    })
}

/// Writes a dataset as CSV with a header; the label column, when present,
/// is written last under the name `label`. Values use the shortest decimal
/// form that parses back to the identical float.
pub fn write_csv(path: impl AsRef<Path>, ds: &LabeledDataset) -> Result<()> {
    let path = path.as_ref();
    if let Some(labels) = &ds.labels {
        if labels.len() != ds.y.nrows() {
            return Err(Error::Data(format!(
                "{} labels for {} rows",
                labels.len(),
                ds.y.nrows()
            )));
        }
    }
    if ds.feature_names.len() != ds.y.ncols() {
        return Err(Error::Data(format!(
            "{} feature names for {} columns",
            ds.feature_names.len(),
            ds.y.ncols()
        )));
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = ds.feature_names.clone();
    if ds.labels.is_some() {
        header.push("label".to_string());
    }
    writer.write_record(&header).map_err(|e| csv_error(path, e))?;
    for r in 0..ds.y.nrows() {
        let mut row: Vec<String> = (0..ds.y.ncols()).map(|c| ds.y[(r, c)].to_string()).collect();
        if let Some(labels) = &ds.labels {
            row.push(labels[r].to_string());
        }
        writer.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Four Gaussian clusters of `per_cluster` points each, centered on the
/// corners (0,0), (0,1), (1,0), (1,1) of the unit square with isotropic
/// standard deviation `sd`. Labels follow the corner order. Each point
/// consumes two standard-normal draws (x offset, then y offset).
pub fn gen_unit_square(per_cluster: usize, sd: f64, seed: u64) -> Result<LabeledDataset> {
    if per_cluster == 0 {
        return Err(Error::InvalidArgument("per_cluster must be positive".into()));
    }
    if !sd.is_finite() || sd < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "standard deviation must be finite and nonnegative, got {sd}"
        )));
    }
    let corners = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 4 * per_cluster;
    let mut y = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for (c, &(cx, cy)) in corners.iter().enumerate() {
        for p in 0..per_cluster {
            let row = c * per_cluster + p;
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            y[(row, 0)] = cx + sd * z1;
            y[(row, 1)] = cy + sd * z2;
            labels.push(c);
        }
    }
    Ok(LabeledDataset {
        y,
        labels: Some(labels),
        feature_names: vec!["x".to_string(), "y".to_string()],
    })
}

/// Two interlocking half-moons of `per_moon` points each. With radius
/// `r ~ U(0.8, 1.2)` and angle `α ~ U(0, 2π)` (drawn in that order per
/// point), the first moon is `(−0.4 + |r cos α|, r sin α)` and the second
/// is `(−|r cos α|, r sin α − 1)`. Labels are 0 and 1 in moon order.
pub fn gen_half_moons(per_moon: usize, seed: u64) -> Result<LabeledDataset> {
    if per_moon == 0 {
        return Err(Error::InvalidArgument("per_moon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * per_moon;
    let mut y = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for moon in 0..2 {
        for p in 0..per_moon {
            let row = moon * per_moon + p;
            let r = rng.random_range(0.8..1.2);
            let alpha = rng.random_range(0.0..TAU);
            let (x, z) = ((r * alpha.cos()).abs(), r * alpha.sin());
            if moon == 0 {
                y[(row, 0)] = -0.4 + x;
                y[(row, 1)] = z;
            } else {
                y[(row, 0)] = -x;
                y[(row, 1)] = z - 1.0;
            }
            labels.push(moon);
        }
    }
    Ok(LabeledDataset {
        y,
        labels: Some(labels),
        feature_names: vec!["x".to_string(), "y".to_string()],
    })
}

/// Applies the affine map `row ↦ row · a + offset` to every row, keeping
/// labels. Feature names survive when the map preserves the column count.
pub fn apply_affine(
    ds: &LabeledDataset,
    a: &DMatrix<f64>,
    offset: &DVector<f64>,
) -> Result<LabeledDataset> {
    if a.nrows() != ds.y.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}×{} but the data has {} columns",
            a.nrows(),
            a.ncols(),
            ds.y.ncols()
        )));
    }
    if offset.len() != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "offset has {} entries but the map produces {} columns",
            offset.len(),
            a.ncols()
        )));
    }
    let mut out = &ds.y * a;
    for r in 0..out.nrows() {
        for c in 0..out.ncols() {
            out[(r, c)] += offset[c];
        }
    }
    let feature_names = if a.ncols() == ds.y.ncols() {
        ds.feature_names.clone()
    } else {
        (0..a.ncols()).map(|c| format!("x{c}")).collect()
    };
    Ok(LabeledDataset {
        y: out,
        labels: ds.labels.clone(),
        feature_names,
    })
}

/// Projects rows onto the top `q` principal components of the centered
/// data, keeping labels. New columns are named `pc0, pc1, …`.
///
/// The eigenproblem is solved on whichever scatter matrix is smaller — the
/// d×d covariance when `d ≤ n`, the n×n Gram matrix otherwise — and each
/// component's sign is fixed so its largest-magnitude loading is positive.
/// Asking for more components than the data's rank is an error.
pub fn pca_project(ds: &LabeledDataset, q: usize) -> Result<LabeledDataset> {
    let y = &ds.y;
    let (n, d) = (y.nrows(), y.ncols());
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "projection needs at least 2 rows, got {n}"
        )));
    }
    let max_q = d.min(n - 1);
    if q == 0 || q > max_q {
        return Err(Error::InvalidArgument(format!(
            "component count must be in 1..={max_q} for {n}×{d} data, got {q}"
        )));
    }
    let mut centered = y.clone();
    for c in 0..d {
        let mean = centered.column(c).sum() / n as f64;
        for r in 0..n {
            centered[(r, c)] -= mean;
        }
    }

    // Eigen pairs (λ, v) of the scatter ỸᵀỸ, largest λ first.
    let mut pairs: Vec<(f64, DVector<f64>)> = if d <= n {
        let eig = SymmetricEigen::new(centered.transpose() * &centered);
        (0..d)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
            .collect()
    } else {
        let eig = SymmetricEigen::new(&centered * centered.transpose());
        (0..n)
            .map(|i| {
                let lambda = eig.eigenvalues[i];
                let v = if lambda > 0.0 {
                    centered.transpose() * eig.eigenvectors.column(i) / lambda.sqrt()
                } else {
                    DVector::zeros(d)
                };
                (lambda, v)
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let lambda_max = pairs[0].0.max(0.0);
    let rank = pairs
        .iter()
        .take_while(|(l, _)| *l > PCA_RANK_TOL * lambda_max && *l > 0.0)
        .count();
    if q > rank {
        return Err(Error::Data(format!(
            "requested {q} principal components but the centered data has rank {rank}"
        )));
    }

    let mut components = DMatrix::zeros(d, q);
    for (j, (_, v)) in pairs.iter().take(q).enumerate() {
        // Fix the sign: the loading with the largest magnitude is positive.
        let mut arg = 0;
        for i in 1..d {
            if v[i].abs() > v[arg].abs() {
                arg = i;
            }
        }
        let flip = if v[arg] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            components[(i, j)] = flip * v[i];
        }
    }
    Ok(LabeledDataset {
        y: centered * components,
        labels: ds.labels.clone(),
        feature_names: (0..q).map(|c| format!("pc{c}")).collect(),
    })
}

/// A k-means fit: per-row cluster ids, the centers, and the total
/// within-cluster sum of squared distances.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: Vec<usize>,
    /// k×d matrix of cluster centers.
    pub centers: DMatrix<f64>,
    pub inertia: f64,
}

/// Lloyd's algorithm with farthest-point seeding, restarted `restarts`
/// times from one seeded RNG; the lowest-inertia fit wins. Clusters that
/// empty out are reseeded with the point farthest from its assigned center.
pub fn kmeans(y: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    let n = y.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cluster count must be in 1..={n}, got {k}"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts {
        let fit = lloyd_once(y, k, &mut rng);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn row_dist2(y: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    let mut acc = 0.0;
    for col in 0..y.ncols() {
        let diff = y[(i, col)] - centers[(c, col)];
        acc += diff * diff;
    }
    acc
}

fn lloyd_once<R: Rng>(y: &DMatrix<f64>, k: usize, rng: &mut R) -> KMeansFit {
    let (n, d) = (y.nrows(), y.ncols());
    // Farthest-point seeding: a random first center, then repeatedly the
    // point with the largest distance to its nearest chosen center.
    let mut centers = DMatrix::zeros(k, d);
    centers.row_mut(0).copy_from(&y.row(rng.random_range(0..n)));
    let mut nearest = vec![f64::INFINITY; n];
    for c in 1..k {
        for i in 0..n {
            nearest[i] = nearest[i].min(row_dist2(y, i, &centers, c - 1));
        }
        let mut far = 0;
        for i in 1..n {
            if nearest[i] > nearest[far] {
                far = i;
            }
        }
        centers.row_mut(c).copy_from(&y.row(far));
    }

    let mut assignment = vec![0usize; n];
    for round in 0..200 {
        let mut next = vec![0usize; n];
        for i in 0..n {
            let mut arg = 0;
            let mut best = row_dist2(y, i, &centers, 0);
            for c in 1..k {
                let dist = row_dist2(y, i, &centers, c);
                if dist < best {
                    best = dist;
                    arg = c;
                }
            }
            next[i] = arg;
        }
        let mut sizes = vec![0usize; k];
        for &a in &next {
            sizes[a] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            // Reseed the empty cluster with the worst-served point and
            // reassign on the next round.
            let mut far = 0;
            let mut far_dist = -1.0;
            for i in 0..n {
                let dist = row_dist2(y, i, &centers, next[i]);
                if dist > far_dist {
                    far_dist = dist;
                    far = i;
                }
            }
            centers.row_mut(empty).copy_from(&y.row(far));
            assignment = next;
            continue;
        }
        let converged = next == assignment && round > 0;
        assignment = next;
        centers.fill(0.0);
        for i in 0..n {
            for col in 0..d {
                centers[(assignment[i], col)] += y[(i, col)];
            }
        }
        for c in 0..k {
            for col in 0..d {
                centers[(c, col)] /= sizes[c] as f64;
            }
        }
        if converged {
            break;
        }
    }
    let inertia = (0..n).map(|i| row_dist2(y, i, &centers, assignment[i])).sum();
    KMeansFit {
        assignment,
        centers,
        inertia,
    }
}

/// Compacts arbitrary labels to dense ids in order of first appearance.
fn compact_labels(raw: &[usize]) -> (Vec<usize>, usize) {
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(raw.len());
    for &l in raw {
        let next = ids.len();
        out.push(*ids.entry(l).or_insert(next));
    }
    let count = ids.len();
    (out, count)
}

/// Misclassification rate under the best one-to-one matching of predicted
/// clusters to reference clusters: 1 − (matched overlap)/n. Computed by
/// exact dynamic programming over subsets of predicted clusters, so the
/// prediction may have at most 12 clusters; the reference is unbounded.
pub fn error_rate(truth: &[usize], pred: &[usize]) -> Result<f64> {
    if truth.len() != pred.len() || truth.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "label vectors must be nonempty and equal in length, got {} and {}",
            truth.len(),
            pred.len()
        )));
    }
    let (truth, t) = compact_labels(truth);
    let (pred, p) = compact_labels(pred);
    if p > ERROR_RATE_MAX_PRED {
        return Err(Error::InvalidArgument(format!(
            "error rate supports at most {ERROR_RATE_MAX_PRED} predicted clusters, got {p}"
        )));
    }
    let mut overlap = vec![vec![0u64; p]; t];
    for (&a, &b) in truth.iter().zip(&pred) {
        overlap[a][b] += 1;
    }
    // dp[mask] = best overlap using the predicted clusters in `mask`,
    // scanning reference clusters one at a time (each may stay unmatched).
    let mut dp = vec![0u64; 1 << p];
    for row in &overlap {
        let mut next = dp.clone();
        for mask in 0..dp.len() {
            for (j, &o) in row.iter().enumerate() {
                if mask & (1 << j) == 0 {
                    let cand = dp[mask] + o;
                    let m2 = mask | (1 << j);
                    if cand > next[m2] {
                        next[m2] = cand;
                    }
                }
            }
        }
        dp = next;
    }
    let matched = *dp.iter().max().expect("dp is nonempty");
    Ok(1.0 - matched as f64 / truth.len() as f64)
}

/// Adjusted Rand index between two labelings; 1 for identical cluster
/// structure, about 0 for independent ones.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "label vectors must be nonempty and equal in length, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    fn comb2(x: u64) -> f64 {
        (x * x.saturating_sub(1) / 2) as f64
    }
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *cells.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let index: f64 = cells.values().map(|&v| comb2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| comb2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| comb2(v)).sum();
    let total = comb2(a.len() as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        // Both labelings are trivial in the same way (all one cluster, or
        // all singletons): perfect agreement.
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

//! Command-line front end: simulate benchmark datasets, run the sampler on a
//! CSV, and score clusterings against reference labels.
//!
//! Subcommands and their artifacts:
//!
//! * `simulate` — writes a labeled CSV from one of the synthetic generators,
//!   optionally pushed through an affine map;
//! * `cluster` — runs one or more chains and writes `S.csv`, `D.csv`,
//!   `tree.nwk`, `heatmap.pgm`, `diagnostics.json`, and `manifest.json` into
//!   the output directory; `--from-manifest` replays a previous run;
//! * `eval` — prints a JSON report with the misclassification rate and
//!   adjusted Rand index of a predicted clustering (from a labeled CSV or a
//!   similarity-matrix cut), plus an optional k-means baseline.
//!
//! Exit codes: 0 success, 2 malformed flags, 3 data errors (unreadable or
//! malformed files, mismatched sizes), 4 model preconditions (e.g. the
//! full-covariance model on too few rows).
//!
//! The only environment variable consulted is `ORBITCLUST_QUIET`: set it to
//! suppress the one-line progress summaries on stdout (JSON reports and exit
//! codes are unaffected).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use orbitclust::data::{
    adjusted_rand_index, apply_affine, error_rate, gen_half_moons, gen_unit_square, kmeans,
    load_csv, pca_project, write_csv, LabelColumn, LabeledDataset,
};
use orbitclust::likelihood::{center_columns, DataMatrix, ModelKind, ThetaGrid};
use orbitclust::mcmc::{
    run_chain, ActionProbs, Algorithm, BetweenKind, ChainDiagnostics, ChainRun, SamplerConfig,
    WithinKind,
};
use orbitclust::nalgebra::{DMatrix, DVector};
use orbitclust::partition::PriorParams;
use orbitclust::summaries::{heatmap_pgm, single_linkage, SimilarityAccumulator};
use orbitclust::Error;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const KMEANS_RESTARTS: usize = 10;

#[derive(Parser)]
#[command(name = "orbitclust", version, about = "Affine-invariant Bayesian clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the partition sampler on a CSV and write posterior summaries.
    Cluster(Box<ClusterArgs>),
    /// Generate a labeled synthetic dataset as CSV.
    Simulate(SimulateArgs),
    /// Score a predicted clustering against reference labels.
    Eval(EvalArgs),
}

#[derive(Args)]
struct ClusterArgs {
    /// Input CSV; rows are observations, columns are features.
    #[arg(long, required_unless_present = "from_manifest")]
    input: Option<PathBuf>,
    /// Covariance structure: I (spherical), II (diagonal), III (full).
    #[arg(long, required_unless_present = "from_manifest")]
    model: Option<ModelKind>,
    /// Total iterations, burn-in included.
    #[arg(long, required_unless_present = "from_manifest")]
    iters: Option<usize>,
    /// Iterations discarded before similarity accumulation starts.
    #[arg(long, required_unless_present = "from_manifest")]
    burnin: Option<usize>,
    /// Concentration of the partition prior.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Cluster capacity: bounds the number of clusters a priori. Omitted
    /// means unbounded.
    #[arg(long)]
    capacity: Option<u64>,
    /// Shape of the prior on the variance ratio θ.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// θ grid as geometric:<lo>:<hi>:x<ratio>; endpoints accept 2^k.
    #[arg(long, default_value = "geometric:2^-3:2^10:x2")]
    theta_grid: String,
    /// Split, merge, keep probabilities, comma-separated.
    #[arg(long, default_value = "0.475,0.475,0.05")]
    probs: String,
    /// Core-jump probability inside a split proposal.
    #[arg(long, default_value_t = 0.01)]
    jump: f64,
    /// Within-cluster distance summary for choosing the cluster to split.
    #[arg(long, default_value = "avg")]
    within: WithinKind,
    /// Between-cluster distance summary for choosing the pair to merge.
    #[arg(long, default_value = "avg")]
    between: BetweenKind,
    /// Proposal family: split-merge or move (single element).
    #[arg(long, default_value = "split-merge")]
    algorithm: Algorithm,
    /// Project onto this many principal components before sampling.
    #[arg(long)]
    pca: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent chains (seeds seed, seed+1, ...) merged into one summary.
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Label column to exclude from the features: "auto" (a column named
    /// "label"), "none", or a header name / 0-based index.
    #[arg(long, default_value = "auto")]
    label_column: String,
    /// Replay a previous run from its manifest.json (all other flags except
    /// --out come from the manifest).
    #[arg(long, conflicts_with_all = [
        "input", "model", "iters", "burnin", "lambda", "capacity", "alpha",
        "theta_grid", "probs", "jump", "within", "between", "algorithm",
        "pca", "seed", "chains", "label_column",
    ])]
    from_manifest: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Generator: unit-square or half-moons.
    kind: String,
    /// Points per cluster (unit-square, default 20) or per moon
    /// (half-moons, default 100).
    #[arg(long)]
    n: Option<usize>,
    /// Noise standard deviation around the unit-square corners.
    #[arg(long)]
    sd: Option<f64>,
    /// Row-major matrix "a,b;c,d" applied on the right of the data.
    #[arg(long)]
    transform: Option<String>,
    /// Offset vector "x,y" added to every transformed row.
    #[arg(long)]
    offset: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Reference CSV as path[:labelcol]; without the suffix, the column
    /// named "label" holds the reference labels.
    #[arg(long)]
    truth: String,
    /// Predicted CSV as path[:labelcol].
    #[arg(long, required_unless_present = "from_similarity", conflicts_with = "from_similarity")]
    pred: Option<String>,
    /// Similarity matrix (S.csv from a cluster run) to cut instead of a
    /// predicted CSV.
    #[arg(long, requires = "cut")]
    from_similarity: Option<PathBuf>,
    /// Number of clusters to cut the similarity tree into.
    #[arg(long, requires = "from_similarity")]
    cut: Option<usize>,
    /// Baseline to score on the truth features; only "kmeans" is available.
    #[arg(long)]
    baseline: Option<String>,
    /// Cluster count for the baseline; defaults to the reference count.
    #[arg(long, requires = "baseline")]
    k: Option<usize>,
    /// Seed for the baseline fit.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A failed command, split by exit code: flag problems exit 2, model
/// preconditions 4, everything else (I/O, parsing, shape mismatches) 3.
enum Failure {
    Flag(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Flag(_) => 2,
            Failure::Run(Error::ModelPrecondition(_)) => 4,
            Failure::Run(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Flag(m) => m.clone(),
            Failure::Run(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster(args) => cmd_cluster(*args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn quiet() -> bool {
    std::env::var_os("ORBITCLUST_QUIET").is_some_and(|v| v != "0")
}

// ---------------------------------------------------------------------------
// cluster

/// Everything needed to rerun a `cluster` invocation bit for bit: the
/// resolved sampler configuration, the input file (named and fingerprinted),
/// and the preprocessing switches. Written atomically as `manifest.json`.
#[derive(Serialize, Deserialize)]
struct RunManifest {
    version: String,
    input: String,
    input_sha256: String,
    label_column: String,
    pca: Option<usize>,
    chains: usize,
    config: SamplerConfig,
    timing_ms: u128,
    outputs: Vec<String>,
}

/// Flags after resolution, either straight from the command line or loaded
/// back from a manifest.
struct ResolvedRun {
    input: PathBuf,
    label_column: String,
    pca: Option<usize>,
    chains: usize,
    config: SamplerConfig,
    /// Expected input fingerprint when replaying a manifest.
    expect_sha256: Option<String>,
}

fn resolve_cluster_args(args: ClusterArgs) -> Result<ResolvedRun, Failure> {
    if let Some(path) = &args.from_manifest {
        let text = fs::read_to_string(path).map_err(|source| {
            Error::Io { path: path.display().to_string(), source }
        })?;
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| {
            Error::Data(format!("malformed manifest {}: {e}", path.display()))
        })?;
        return Ok(ResolvedRun {
            input: PathBuf::from(manifest.input),
            label_column: manifest.label_column,
            pca: manifest.pca,
            chains: manifest.chains,
            config: manifest.config,
            expect_sha256: Some(manifest.input_sha256),
        });
    }

    let (lo, hi, ratio) = parse_theta_grid(&args.theta_grid).map_err(Failure::Flag)?;
    let grid = ThetaGrid::geometric(lo, hi, ratio, args.alpha)
        .map_err(|e| Failure::Flag(e.to_string()))?;
    let action_probs = parse_probs(&args.probs).map_err(Failure::Flag)?;
    let config = SamplerConfig {
        model: args.model.expect("required unless --from-manifest"),
        prior: PriorParams { lambda: args.lambda, k: args.capacity },
        grid,
        action_probs,
        jump_prob: args.jump,
        within: args.within,
        between: args.between,
        iters: args.iters.expect("required unless --from-manifest"),
        burn_in: args.burnin.expect("required unless --from-manifest"),
        seed: args.seed,
        algorithm: args.algorithm,
    };
    config.validate().map_err(|e| Failure::Flag(e.to_string()))?;
    if args.chains == 0 {
        return Err(Failure::Flag("--chains must be at least 1".into()));
    }
    Ok(ResolvedRun {
        input: args.input.expect("required unless --from-manifest"),
        label_column: args.label_column,
        pca: args.pca,
        chains: args.chains,
        config,
        expect_sha256: None,
    })
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let out_dir = args.out.clone();
    let run = resolve_cluster_args(args)?;
    // Replays revalidate what the manifest carried.
    run.config.validate().map_err(|e| Failure::Flag(e.to_string()))?;

    let raw = fs::read(&run.input).map_err(|source| {
        Error::Io { path: run.input.display().to_string(), source }
    })?;
    let sha256 = hex_digest(&raw);
    if let Some(expected) = &run.expect_sha256 {
        if *expected != sha256 {
            return Err(Error::Data(format!(
                "input {} no longer matches the manifest fingerprint (expected {expected}, found {sha256})",
                run.input.display()
            ))
            .into());
        }
    }

    let label_column = parse_label_column(&run.label_column).map_err(Failure::Flag)?;
    let ds = load_csv(&run.input, &label_column)?;
    let ds = match run.pca {
        Some(q) => pca_project(&ds, q)?,
        None => ds,
    };
    let data = center_columns(ds.y.clone())?;

    let runs = run_chains(&data, &run.config, run.chains)?;
    let mut acc = SimilarityAccumulator::new(data.n());
    for chain in &runs {
        acc.merge(&chain.similarity)?;
    }
    let s = acc.similarity()?;
    let d = acc.distance()?;
    let dendro = single_linkage(&d)?;
    let order = dendro.leaf_order();
    let pgm = heatmap_pgm(&d, Some(&order))?;

    fs::create_dir_all(&out_dir).map_err(|source| {
        Error::Io { path: out_dir.display().to_string(), source }
    })?;
    let outputs = vec![
        "S.csv".to_string(),
        "D.csv".to_string(),
        "tree.nwk".to_string(),
        "heatmap.pgm".to_string(),
        "diagnostics.json".to_string(),
        "manifest.json".to_string(),
    ];
    write_file(&out_dir.join("S.csv"), &matrix_csv(&s))?;
    write_file(&out_dir.join("D.csv"), &matrix_csv(&d))?;
    write_file(&out_dir.join("tree.nwk"), &format!("{}\n", dendro.newick()))?;
    write_file(&out_dir.join("heatmap.pgm"), &pgm)?;
    let diags: Vec<&ChainDiagnostics> = runs.iter().map(|r| &r.diagnostics).collect();
    write_file(
        &out_dir.join("diagnostics.json"),
        &format!("{}\n", to_pretty_json(&diags)?),
    )?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        input: run.input.display().to_string(),
        input_sha256: sha256,
        label_column: run.label_column,
        pca: run.pca,
        chains: run.chains,
        config: run.config.clone(),
        timing_ms: started.elapsed().as_millis(),
        outputs,
    };
    write_file_atomic(
        &out_dir.join("manifest.json"),
        &format!("{}\n", to_pretty_json(&manifest)?),
    )?;

    if !quiet() {
        let accepted: u64 = runs
            .iter()
            .map(|r| {
                r.diagnostics.splits.accepted
                    + r.diagnostics.merges.accepted
                    + r.diagnostics.moves.accepted
            })
            .sum();
        println!(
            "clustered {} rows × {} features: {} chain(s) × {} iters, {} accepted moves, outputs in {}",
            data.n(),
            data.dim(),
            run.chains,
            run.config.iters,
            accepted,
            out_dir.display()
        );
    }
    Ok(())
}

/// Runs `chains` independent chains on threads, seeded `seed, seed+1, ...`,
/// and returns them in seed order so downstream merging is deterministic.
fn run_chains(
    data: &DataMatrix,
    config: &SamplerConfig,
    chains: usize,
) -> Result<Vec<ChainRun>, Failure> {
    if chains == 1 {
        return Ok(vec![run_chain(data, config)?]);
    }
    let results: Vec<orbitclust::Result<ChainRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|i| {
                let mut cfg = config.clone();
                cfg.seed = config.seed.wrapping_add(i as u64);
                scope.spawn(move || run_chain(data, &cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    let mut runs = Vec::with_capacity(chains);
    for r in results {
        runs.push(r?);
    }
    Ok(runs)
}

// ---------------------------------------------------------------------------
// simulate

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let ds = match args.kind.as_str() {
        "unit-square" => {
            let per_cluster = args.n.unwrap_or(20);
            let sd = args.sd.unwrap_or(0.5);
            gen_unit_square(per_cluster, sd, args.seed)?
        }
        "half-moons" => {
            if args.sd.is_some() {
                return Err(Failure::Flag(
                    "--sd only applies to unit-square; half-moon noise is fixed by the generator"
                        .into(),
                ));
            }
            gen_half_moons(args.n.unwrap_or(100), args.seed)?
        }
        other => {
            return Err(Failure::Flag(format!(
                "unknown generator '{other}' (expected unit-square or half-moons)"
            )));
        }
    };

    let ds = match (&args.transform, &args.offset) {
        (None, None) => ds,
        (transform, offset) => {
            let a = match transform {
                Some(text) => parse_matrix(text).map_err(Failure::Flag)?,
                None => DMatrix::identity(ds.y.ncols(), ds.y.ncols()),
            };
            let shift = match offset {
                Some(text) => parse_vector(text).map_err(Failure::Flag)?,
                None => DVector::zeros(a.ncols()),
            };
            // Bad shapes here are malformed flags, not data problems.
            apply_affine(&ds, &a, &shift).map_err(|e| Failure::Flag(e.to_string()))?
        }
    };

    write_csv(&args.out, &ds)?;
    if !quiet() {
        println!(
            "wrote {} rows × {} features to {}",
            ds.y.nrows(),
            ds.y.ncols(),
            args.out.display()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

#[derive(Serialize)]
struct EvalReport {
    n: usize,
    error_rate: f64,
    adjusted_rand: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<BaselineReport>,
}

#[derive(Serialize)]
struct BaselineReport {
    method: String,
    k: usize,
    seed: u64,
    error_rate: f64,
    adjusted_rand: f64,
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    let truth_ds = load_labeled(&args.truth)?;
    let truth = truth_ds.labels.as_ref().ok_or_else(|| {
        Error::Data(format!(
            "{}: no label column found (name one with path:labelcol)",
            args.truth
        ))
    })?;

    let pred: Vec<usize> = if let Some(spec) = &args.pred {
        let ds = load_labeled(spec)?;
        ds.labels.ok_or_else(|| {
            Error::Data(format!("{spec}: no label column found (name one with path:labelcol)"))
        })?
    } else {
        let path = args.from_similarity.as_ref().expect("clap requires one source");
        let k = args.cut.expect("clap ties --cut to --from-similarity");
        let s = load_similarity(path)?;
        if s.nrows() != truth.len() {
            return Err(Error::Data(format!(
                "similarity matrix covers {} items but the truth has {} rows",
                s.nrows(),
                truth.len()
            ))
            .into());
        }
        let d = DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| {
            if i == j { 0.0 } else { 1.0 - s[(i, j)] }
        });
        single_linkage(&d)?.cut(k)?.assignment().to_vec()
    };

    let report = EvalReport {
        n: truth.len(),
        error_rate: error_rate(truth, &pred)?,
        adjusted_rand: adjusted_rand_index(truth, &pred)?,
        baseline: match &args.baseline {
            None => None,
            Some(method) if method == "kmeans" => {
                let k = args.k.unwrap_or_else(|| distinct(truth));
                let fit = kmeans(&truth_ds.y, k, args.seed, KMEANS_RESTARTS)?;
                Some(BaselineReport {
                    method: method.clone(),
                    k,
                    seed: args.seed,
                    error_rate: error_rate(truth, &fit.assignment)?,
                    adjusted_rand: adjusted_rand_index(truth, &fit.assignment)?,
                })
            }
            Some(other) => {
                return Err(Failure::Flag(format!(
                    "unknown baseline '{other}' (only kmeans is available)"
                )));
            }
        },
    };
    println!("{}", to_pretty_json(&report)?);
    Ok(())
}

fn distinct(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Loads `path[:labelcol]`; without the suffix the column named "label" is
/// used when present.
fn load_labeled(spec: &str) -> Result<LabeledDataset, Failure> {
    let (path, column) = match spec.rsplit_once(':') {
        Some((path, col)) if !path.is_empty() && !col.is_empty() => {
            (path.to_string(), LabelColumn::Named(col.to_string()))
        }
        Some(_) => {
            return Err(Failure::Flag(format!(
                "malformed dataset spec '{spec}' (expected path or path:labelcol)"
            )));
        }
        None => (spec.to_string(), LabelColumn::Auto),
    };
    Ok(load_csv(path, &column)?)
}

/// Reads a square similarity matrix written by `cluster` (plain CSV of
/// decimals in [0, 1], no header).
fn load_similarity(path: &Path) -> Result<DMatrix<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|source| {
        Error::Io { path: path.display().to_string(), source }
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, line) in text.lines().enumerate() {
        let mut row = Vec::new();
        for (c, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::CsvParse {
                path: path.display().to_string(),
                row: r + 1,
                col: c + 1,
                message: format!("expected a decimal similarity, found '{}'", cell.trim()),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Data(format!(
            "{}: similarity matrix must be square and nonempty",
            path.display()
        ))
        .into());
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

// ---------------------------------------------------------------------------
// flag grammars

/// `geometric:<lo>:<hi>:x<ratio>`, endpoints and ratio accepting `2^k`.
fn parse_theta_grid(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 || parts[0] != "geometric" {
        return Err(format!(
            "θ grid must look like geometric:<lo>:<hi>:x<ratio>, got '{s}'"
        ));
    }
    let lo = parse_grid_value(parts[1])?;
    let hi = parse_grid_value(parts[2])?;
    let ratio_text = parts[3]
        .strip_prefix('x')
        .ok_or_else(|| format!("grid ratio must start with 'x', got '{}'", parts[3]))?;
    Ok((lo, hi, parse_grid_value(ratio_text)?))
}

/// A plain decimal or `base^exponent`.
fn parse_grid_value(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let b: f64 = base.trim().parse().map_err(|_| format!("bad grid base '{base}'"))?;
        let e: f64 = exp.trim().parse().map_err(|_| format!("bad grid exponent '{exp}'"))?;
        if b <= 0.0 {
            return Err(format!("grid base must be positive, got {b}"));
        }
        Ok(b.powf(e))
    } else {
        s.parse().map_err(|_| format!("bad grid value '{s}'"))
    }
}

fn parse_probs(s: &str) -> Result<ActionProbs, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "--probs needs three comma-separated values (split,merge,keep), got '{s}'"
        ));
    }
    let mut v = [0.0; 3];
    for (slot, text) in v.iter_mut().zip(&parts) {
        *slot = text
            .trim()
            .parse()
            .map_err(|_| format!("bad probability '{}'", text.trim()))?;
    }
    Ok(ActionProbs { split: v[0], merge: v[1], keep: v[2] })
}

fn parse_label_column(s: &str) -> Result<LabelColumn, String> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(LabelColumn::Auto),
        "none" => Ok(LabelColumn::None),
        _ if s.trim().is_empty() => Err("--label-column must not be empty".into()),
        _ => Ok(LabelColumn::Named(s.to_string())),
    }
}

/// Row-major matrix: rows split by ';', entries by ','.
fn parse_matrix(s: &str) -> Result<DMatrix<f64>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for row_text in s.split(';') {
        let mut row = Vec::new();
        for cell in row_text.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| format!("bad matrix entry '{}' in '{s}'", cell.trim()))?;
            if !v.is_finite() {
                return Err(format!("matrix entries must be finite, got '{}'", cell.trim()));
            }
            row.push(v);
        }
        rows.push(row);
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format!("matrix rows have unequal lengths in '{s}'"));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(flat.len() / cols, cols, &flat))
}

fn parse_vector(s: &str) -> Result<DVector<f64>, String> {
    let mut v = Vec::new();
    for cell in s.split(',') {
        let x: f64 = cell
            .trim()
            .parse()
            .map_err(|_| format!("bad offset entry '{}' in '{s}'", cell.trim()))?;
        if !x.is_finite() {
            return Err(format!("offset entries must be finite, got '{}'", cell.trim()));
        }
        v.push(x);
    }
    Ok(DVector::from_row_slice(&v))
}

// ---------------------------------------------------------------------------
// output plumbing

/// Matrix as CSV: one row per line, entries with 17 digits after the point
/// so values in [0, 1] survive a round trip bit for bit.
fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.17}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Run(Error::Data(format!("serialization failed: {e}"))))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|source| {
        Failure::Run(Error::Io { path: path.display().to_string(), source })
    })
}

/// Write-then-rename so a crash never leaves a truncated manifest behind.
fn write_file_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|source| {
        Failure::Run(Error::Io { path: tmp.display().to_string(), source })
    })?;
    fs::rename(&tmp, path).map_err(|source| {
        Failure::Run(Error::Io { path: path.display().to_string(), source })
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

// ---------------------------------------------------------------------------

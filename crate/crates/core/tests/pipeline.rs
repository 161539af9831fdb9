//! End-to-end library pipeline: generate data, run a chain, summarize the
//! posterior, and check the artifacts agree with the known structure.

use orbitclust::data::{error_rate, gen_unit_square, kmeans};
use orbitclust::likelihood::{center_columns, ModelKind};
use orbitclust::mcmc::{run_chain, SamplerConfig};
use orbitclust::partition::PriorParams;
use orbitclust::summaries::{heatmap_pgm, single_linkage};

/// Four tight, well-separated groups: the full pipeline must recover them
/// exactly and every artifact must be structurally sound.
#[test]
fn tight_groups_survive_the_whole_pipeline() {
    let ds = gen_unit_square(15, 0.02, 7).unwrap();
    let truth = ds.labels.clone().unwrap();
    let n = ds.y.nrows();
    let data = center_columns(ds.y).unwrap();

    let mut config = SamplerConfig::new(ModelKind::Isotropic);
    config.iters = 2_000;
    config.burn_in = 400;
    config.seed = 5;
    let run = run_chain(&data, &config).unwrap();

    let s = run.similarity.similarity().unwrap();
    let d = run.similarity.distance().unwrap();
    for i in 0..n {
        assert!((s[(i, i)] - 1.0).abs() < 1e-12, "diagonal similarity is 1");
        for j in 0..n {
            assert!((d[(i, j)] - (1.0 - s[(i, j)])).abs() < 1e-12);
            assert!((s[(i, j)] - s[(j, i)]).abs() < 1e-12, "S is symmetric");
        }
    }

    let tree = single_linkage(&d).unwrap();
    let cut = tree.cut(4).unwrap();
    let err = error_rate(&truth, cut.assignment()).unwrap();
    assert_eq!(err, 0.0, "cutting the dendrogram at 4 recovers the groups");

    let newick = tree.newick();
    assert!(newick.ends_with(';'));
    let opens = newick.matches('(').count();
    let closes = newick.matches(')').count();
    assert_eq!(opens, closes, "balanced parentheses");
    assert_eq!(newick.matches(',').count(), n - 1, "n leaves");

    let pgm = heatmap_pgm(&d, Some(&tree.leaf_order())).unwrap();
    let mut lines = pgm.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert_eq!(lines.next(), Some(format!("{n} {n}").as_str()));
    assert_eq!(lines.next(), Some("255"));
}

/// The same configuration must reproduce the same run bit for bit.
#[test]
fn chain_runs_are_reproducible() {
    let ds = gen_unit_square(10, 0.3, 21).unwrap();
    let data = center_columns(ds.y).unwrap();
    let mut config = SamplerConfig::new(ModelKind::Diagonal);
    config.iters = 1_500;
    config.burn_in = 300;
    config.seed = 99;

    let a = run_chain(&data, &config).unwrap();
    let b = run_chain(&data, &config).unwrap();
    assert_eq!(
        a.similarity.similarity().unwrap(),
        b.similarity.similarity().unwrap()
    );
    assert_eq!(a.diagnostics.theta_trace, b.diagnostics.theta_trace);
    assert_eq!(
        a.diagnostics.cluster_count_trace,
        b.diagnostics.cluster_count_trace
    );
    assert_eq!(
        a.final_state.partition.assignment(),
        b.final_state.partition.assignment()
    );
}

/// A capacity smaller than n gives all-singletons zero prior mass; the chain
/// must fall back to the one-cluster start and still run.
#[test]
fn capacity_smaller_than_n_falls_back_to_one_cluster_start() {
    let ds = gen_unit_square(3, 0.1, 3).unwrap(); // n = 12
    let data = center_columns(ds.y).unwrap();
    let mut config = SamplerConfig::new(ModelKind::Isotropic);
    config.prior = PriorParams::dirichlet_multinomial(1.0, 4).unwrap();
    config.iters = 800;
    config.burn_in = 100;
    let run = run_chain(&data, &config).unwrap();
    assert_eq!(run.similarity.count(), 700);
    let max_clusters = run
        .diagnostics
        .cluster_count_trace
        .iter()
        .copied()
        .max()
        .unwrap();
    assert!(
        max_clusters <= 4,
        "capacity 4 caps the cluster count, saw {max_clusters}"
    );
}

/// The k-means baseline nails trivially separated groups.
#[test]
fn kmeans_recovers_well_separated_groups() {
    let ds = gen_unit_square(15, 0.02, 11).unwrap();
    let truth = ds.labels.clone().unwrap();
    let fit = kmeans(&ds.y, 4, 1, 10).unwrap();
    assert_eq!(error_rate(&truth, &fit.assignment).unwrap(), 0.0);
    assert_eq!(fit.centers.nrows(), 4);
    assert!(fit.inertia > 0.0);
}

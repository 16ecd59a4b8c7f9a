//! Version-space evolution in the plane: run a few query rounds with ensemble
//! snapshots, embed every sampled hypothesis with classical MDS, and watch the
//! clusters contract toward the truth.
//!
//! Run with: cargo run -p vsal --example mds_snapshot

use vsal::core::ItemDistribution;
use vsal::embedding::{embed_clusters, PointKind, RoundCluster};
use vsal::samplers::ClassSpec;
use vsal::simulator::{run_experiment, BackendChoice, ExperimentConfig, StrategyConfig};
use vsal::strategies::{BatchMode, StrategyKind};

fn main() -> vsal::Result<()> {
    let cfg = ExperimentConfig {
        schema: 1,
        class: ClassSpec::Thresholds { n: 32, target: 20 },
        strategy: StrategyConfig { kind: StrategyKind::MinWcGvd, backend: BackendChoice::Exact },
        rounds: 4,
        batch: 1,
        ensemble_size: 6,
        initial_labels: 2,
        eval_items: None,
        test_items: None,
        bias: None,
        batch_mode: BatchMode::Literal,
        dump_ensembles: true,
        seeds: vec![3],
        output: "unused".into(),
    };
    let resolved = cfg.resolve()?;
    let records = run_experiment(&cfg)?;
    let record = &records[0];

    let clusters: Vec<RoundCluster> = record
        .snapshots
        .iter()
        .enumerate()
        .map(|(round, snapshot)| RoundCluster::from_snapshot(None, round, snapshot))
        .collect();
    let dist = ItemDistribution::uniform(resolved.labelings.num_items());
    let points = embed_clusters(&clusters, &resolved.bayes, &dist, false)?;

    println!("6 sampled hypotheses per round, embedded by pairwise disagreement\n");
    println!("tag      round        x          y");
    for p in &points {
        let round = p.tag.round.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
        println!("{:>6}   {round:>5}   {:>8.4}   {:>8.4}", p.tag.kind.as_str(), p.x, p.y);
    }

    // Cluster spread per round: the samples close in on the truth.
    let truth = points.iter().find(|p| p.tag.kind == PointKind::Bayes).unwrap();
    println!("\nround   mean distance of members to the embedded truth");
    for round in 0..record.snapshots.len() {
        let members: Vec<_> = points
            .iter()
            .filter(|p| p.tag.kind == PointKind::Member && p.tag.round == Some(round))
            .collect();
        let mean: f64 = members
            .iter()
            .map(|p| ((p.x - truth.x).powi(2) + (p.y - truth.y).powi(2)).sqrt())
            .sum::<f64>()
            / members.len() as f64;
        println!("{round:>5}   {mean:.4}");
    }
    Ok(())
}

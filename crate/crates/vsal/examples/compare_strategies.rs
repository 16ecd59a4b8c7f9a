//! Head-to-head strategy comparison on one class with shared seeds:
//! final-round metrics per strategy plus paired per-seed differences.
//!
//! Run with: cargo run -p vsal --example compare_strategies

use vsal::samplers::ClassSpec;
use vsal::simulator::{compare_strategies, BackendChoice, ExperimentConfig, StrategyConfig};
use vsal::strategies::{BatchMode, StrategyKind};

fn config(kind: StrategyKind) -> ExperimentConfig {
    ExperimentConfig {
        schema: 1,
        class: ClassSpec::Intervals { n: 24, target: Some((9, 15)) },
        strategy: StrategyConfig { kind, backend: BackendChoice::Exact },
        rounds: 5,
        batch: 1,
        ensemble_size: 8,
        initial_labels: 2,
        eval_items: None,
        test_items: None,
        bias: None,
        batch_mode: BatchMode::Literal,
        dump_ensembles: false,
        seeds: (0..16).collect(),
        output: "unused".into(),
    }
}

fn main() -> vsal::Result<()> {
    let kinds = [
        StrategyKind::MaxGibbsError,
        StrategyKind::MaxVariationRatio,
        StrategyKind::MinWcPwd,
        StrategyKind::MinWcGvd,
        StrategyKind::Random,
    ];
    let cfgs: Vec<ExperimentConfig> = kinds.iter().map(|&k| config(k)).collect();
    let table = compare_strategies(&cfgs)?;

    println!("interval class, 16 seeds, 2 + 5 labels; final-round means\n");
    println!("strategy   gibbs_err   vote_err   pwd_eval   gvd_eval   mass");
    for row in &table.rows {
        println!(
            "{:>8}   {:>9.4}   {:>8.4}   {:>8.4}   {:>8.4}   {:>5.3}",
            row.strategy, row.mean[0], row.mean[1], row.mean[2], row.mean[3], row.mean[5]
        );
    }
    println!("\npaired per-seed differences against random (negative = smaller diameter):");
    for diff in table.diffs.iter().filter(|d| d.strategy.ends_with("-random")) {
        println!(
            "{:>12}: pwd_eval {:+.4} +- {:.4}",
            diff.strategy, diff.mean[2], diff.std[2]
        );
    }
    Ok(())
}

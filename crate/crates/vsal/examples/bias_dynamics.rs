//! A biased sampler cannot reach hypotheses near the truth, so all reachable
//! hypotheses agree on some items with the wrong label: positive wrong
//! agreement. As the exclusion radius decays with the label count, the
//! reachable space covers the truth and the wrong agreement dies out.
//!
//! Run with: cargo run -p vsal --example bias_dynamics

use vsal::samplers::{BiasSpec, ClassSpec};
use vsal::simulator::{run_experiment, BackendChoice, ExperimentConfig, StrategyConfig};
use vsal::strategies::{BatchMode, StrategyKind};

fn main() -> vsal::Result<()> {
    let cfg = ExperimentConfig {
        schema: 1,
        class: ClassSpec::Thresholds { n: 64, target: 5 },
        strategy: StrategyConfig { kind: StrategyKind::Random, backend: BackendChoice::Exact },
        rounds: 15,
        batch: 4,
        ensemble_size: 8,
        initial_labels: 4,
        eval_items: None,
        test_items: None,
        bias: Some(BiasSpec::new(0.3, vec![(16, 0.2), (32, 0.1), (48, 0.05)])?),
        batch_mode: BatchMode::Literal,
        dump_ensembles: false,
        seeds: vec![0],
        output: "unused".into(),
    };

    let records = run_experiment(&cfg)?;
    let record = &records[0];
    println!("threshold class with a decaying exclusion radius around the truth\n");
    println!("round   labels   wrong_agr   pwd_eval   gibbs_err   vote_err   mass");
    for m in &record.rounds {
        println!(
            "{:>5}   {:>6}   {:>9.4}   {:>8.4}   {:>9.4}   {:>8.4}   {:>5.3}",
            m.round, m.n_labels, m.wrong_agreement, m.pwd_eval, m.gibbs_err, m.vote_err,
            m.prior_mass
        );
    }
    let last = record.rounds.last().unwrap();
    println!(
        "\nat full labeling the radius is zero and the wrong agreement is exactly {}",
        last.wrong_agreement
    );
    Ok(())
}

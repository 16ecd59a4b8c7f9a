//! Worst-case diameter reduction on the threshold class behaves like binary
//! search: the version space halves per query, so 128 items need at most
//! ceil(log2(129)) = 8 queries, while random querying needs dozens.
//!
//! Run with: cargo run -p vsal --example threshold_bisection

use vsal::core::{restrict, ItemDistribution, Prior, VersionSpaceMask};
use vsal::samplers::{build_class, ClassSpec};
use vsal::strategies::{select_batch, BatchMode, SelectionState, StrategyKind, StrategySpec};

fn queries_to_singleton(kind: StrategyKind, n: usize, target: usize, seed: u64) -> usize {
    let (matrix, bayes) = build_class(&ClassSpec::Thresholds { n, target }).unwrap();
    let prior = Prior::uniform(matrix.num_hypotheses());
    let dist = ItemDistribution::uniform(n);
    let mut mask = VersionSpaceMask::full(matrix.num_hypotheses());
    let mut queried = vec![false; n];
    let mut queries = 0;
    while mask.count() > 1 {
        let candidates: Vec<usize> = (0..n).filter(|&i| !queried[i]).collect();
        let state = SelectionState {
            labelings: &matrix,
            prior: &prior,
            mask: &mask,
            dist: &dist,
            candidates: &candidates,
            bayes: Some(&bayes),
            ensemble: None,
        };
        let batch = select_batch(
            &StrategySpec::exact(kind),
            &state,
            1,
            seed.wrapping_add(queries as u64),
            BatchMode::Literal,
        )
        .unwrap();
        let x = batch.selections[0].chosen;
        queried[x] = true;
        mask = restrict(&mask, &matrix, x, bayes.label(x)).unwrap();
        queries += 1;
    }
    queries
}

fn main() {
    let n = 128;
    println!("threshold class over {n} items ({} hypotheses)\n", n + 1);

    for kind in [StrategyKind::MinWcPwd, StrategyKind::MinWcGvd] {
        let worst = (0..=n)
            .map(|target| queries_to_singleton(kind, n, target, 0))
            .max()
            .unwrap();
        println!("{kind:>6}: worst case over all {} targets = {worst} queries", n + 1);
    }

    let mut random: Vec<usize> =
        (0..25).map(|seed| queries_to_singleton(StrategyKind::Random, n, 64, seed)).collect();
    random.sort_unstable();
    println!(
        "random: min {} / median {} / max {} queries over 25 seeds (target 64)",
        random[0],
        random[random.len() / 2],
        random[random.len() - 1]
    );
}

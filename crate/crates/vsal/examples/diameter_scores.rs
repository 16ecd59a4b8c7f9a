//! Worst-case diameter scoring: for each candidate item, the diameter of the
//! worst induced subspace under pairwise disagreement, Gibbs-vote
//! disagreement, and the mass-weighted variants, plus the resulting pick.
//!
//! Run with: cargo run -p vsal --example diameter_scores

use vsal::core::{ItemDistribution, Prior, VersionSpaceMask};
use vsal::measures::MeasureContext;
use vsal::samplers::{build_class, ClassSpec};
use vsal::strategies::{
    score_exact, select_batch, BatchMode, SelectionState, StrategyKind, StrategySpec,
};

fn main() -> vsal::Result<()> {
    let n = 8;
    let (matrix, bayes) = build_class(&ClassSpec::Thresholds { n, target: 5 })?;
    let prior = Prior::uniform(matrix.num_hypotheses());
    let mask = VersionSpaceMask::full(matrix.num_hypotheses());
    let dist = ItemDistribution::uniform(n);
    let ctx = MeasureContext::new(&matrix, &prior, &mask, &dist)?;

    println!("threshold class, {} hypotheses, full version space\n", matrix.num_hypotheses());
    println!("item   wc_pwd (label)   wc_gvd (label)   m1_pwd    m2_pwd");
    for x in 0..n {
        let pwd = score_exact(StrategyKind::MinWcPwd, &ctx, x)?;
        let gvd = score_exact(StrategyKind::MinWcGvd, &ctx, x)?;
        let m1 = score_exact(StrategyKind::MinWcM1Pwd, &ctx, x)?;
        let m2 = score_exact(StrategyKind::MinWcM2Pwd, &ctx, x)?;
        println!(
            "{x:>4}   {:>6.4} ({})       {:>6.4} ({})       {:>6.4}    {:>6.4}",
            pwd.score,
            pwd.worst_label.unwrap(),
            gvd.score,
            gvd.worst_label.unwrap(),
            m1.score,
            m2.score,
        );
    }

    let candidates: Vec<usize> = (0..n).collect();
    let state = SelectionState {
        labelings: &matrix,
        prior: &prior,
        mask: &mask,
        dist: &dist,
        candidates: &candidates,
        bayes: Some(&bayes),
        ensemble: None,
    };
    for kind in [StrategyKind::MinWcPwd, StrategyKind::MinWcGvd, StrategyKind::MinWcM2Pwd] {
        let batch =
            select_batch(&StrategySpec::exact(kind), &state, 1, 0, BatchMode::Literal)?;
        println!("\n{kind} picks item {}", batch.selections[0].chosen);
    }
    println!("\n(a median item splits the threshold range most evenly)");
    Ok(())
}

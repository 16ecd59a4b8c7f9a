//! Importing externally trained hypotheses: a labeling-matrix file whose rows
//! come from some outside trainer is validated against the query history.
//! Rows contradicting a queried label are rejected (they indicate a biased
//! sampler); the surviving rows form an ensemble for the usual estimators.
//!
//! Run with: cargo run -p vsal --example external_ensemble

use vsal::core::{ItemDistribution, LabelingMatrix, QuerySet};
use vsal::estimators::{ge_hat, gvd_hat, import_external, pwd_hat};

fn main() -> vsal::Result<()> {
    // Five "trained" hypotheses over six pool items, as they would arrive in
    // a matrix file (one row per training run, restricted to the pool).
    let text = "5 6 2\n\
                0 0 1 1 1 1\n\
                0 0 0 1 1 1\n\
                0 1 1 1 1 1\n\
                0 0 1 1 1 0\n\
                1 0 0 0 1 1\n";
    let external = LabelingMatrix::from_text(text)?;

    // The learner has already queried two labels.
    let queries = QuerySet::from_pairs(vec![(1, 0), (3, 1)])?;

    let (ensemble, report) = import_external(&external, &queries)?;
    println!(
        "{} rows, {} accepted, {} rejected",
        report.total_rows,
        report.accepted.len(),
        report.rejected.len()
    );
    for r in &report.rejected {
        println!(
            "  row {} rejected: predicts {} at item {}, but {} was queried",
            r.row, r.found, r.item, r.expected
        );
    }

    let dist = ItemDistribution::uniform(external.num_items());
    println!("\nensemble of {} imported hypotheses:", ensemble.size());
    println!("  pwd_hat = {:.4}", pwd_hat(&ensemble, &external, &dist)?);
    println!("  gvd_hat = {:.4}", gvd_hat(&ensemble, &external, &dist)?);
    for x in [0usize, 2, 5] {
        println!("  ge_hat(item {x}) = {:.4}", ge_hat(&ensemble, &external, x));
    }
    Ok(())
}

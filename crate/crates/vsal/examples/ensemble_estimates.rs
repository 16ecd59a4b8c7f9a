//! Monte Carlo estimation of the diameters from sampled hypotheses: the
//! pairwise U-statistic and the empirical-vote estimator converge to the
//! exact enumerated values as the ensemble grows.
//!
//! Run with: cargo run -p vsal --example ensemble_estimates

use vsal::core::{consistent_mask, ItemDistribution, Prior, QuerySet};
use vsal::estimators::{draw_ensemble, ge_hat, gvd_hat, pwd_hat, vr_hat};
use vsal::measures::{self, MeasureContext};
use vsal::samplers::{build_class, ClassSpec};

fn main() -> vsal::Result<()> {
    let (matrix, bayes) = build_class(&ClassSpec::GridHalfspaces {
        side: 5,
        count: 120,
        seed: 11,
        target_index: 4,
    })?;
    let prior = Prior::uniform(matrix.num_hypotheses());
    let dist = ItemDistribution::uniform(matrix.num_items());

    // Pin down a few labels so the version space is a proper subset.
    let queries = QuerySet::from_pairs(vec![
        (0, bayes.label(0)),
        (12, bayes.label(12)),
        (24, bayes.label(24)),
    ])?;
    let mask = consistent_mask(&matrix, &queries)?;
    let ctx = MeasureContext::new(&matrix, &prior, &mask, &dist)?;

    let exact_pwd = measures::pwd(&ctx)?;
    let exact_gvd = measures::gvd(&ctx)?;
    println!(
        "halfspace class: {} hypotheses, {} consistent after {} labels",
        matrix.num_hypotheses(),
        mask.count(),
        queries.len()
    );
    println!("exact:    pwd = {exact_pwd:.6}   gvd = {exact_gvd:.6}\n");

    println!("draws     pwd_hat     gvd_hat     |pwd err|   |gvd err|");
    for &size in &[5usize, 20, 100, 1_000, 10_000] {
        let ens = draw_ensemble(&ctx, size, 42)?;
        let p = pwd_hat(&ens, &matrix, &dist)?;
        let g = gvd_hat(&ens, &matrix, &dist)?;
        println!(
            "{size:>5}   {p:>9.6}   {g:>9.6}   {:>9.6}   {:>9.6}",
            (p - exact_pwd).abs(),
            (g - exact_gvd).abs()
        );
    }

    // Per-item plug-in estimates against the exact measures.
    let ens = draw_ensemble(&ctx, 2_000, 7)?;
    let x = 13;
    println!(
        "\nitem {x}: ge {:.4} (exact {:.4}), vr {:.4} (exact {:.4})",
        ge_hat(&ens, &matrix, x),
        measures::gibbs_error(&ctx, x)?,
        vr_hat(&ens, &matrix, x),
        measures::variation_ratio(&ctx, x)?,
    );
    Ok(())
}

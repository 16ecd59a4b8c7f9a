//! Prior-mass-reduction measures on a small interval class: per-item Gibbs
//! error and variation ratio, their marginal-gain forms, and the audit that
//! both selection rules pick the same items either way.
//!
//! Run with: cargo run -p vsal --example prior_mass_measures

use vsal::core::{consistent_mask, ItemDistribution, Prior, QuerySet};
use vsal::measures::{self, MeasureContext};
use vsal::samplers::{build_class, ClassSpec};
use vsal::strategies::equivalence_audit;

fn main() -> vsal::Result<()> {
    let (matrix, bayes) = build_class(&ClassSpec::Intervals { n: 6, target: Some((2, 4)) })?;
    println!(
        "interval class: {} hypotheses over {} items (truth {:?})",
        matrix.num_hypotheses(),
        matrix.num_items(),
        bayes.as_slice()
    );

    let prior = Prior::uniform(matrix.num_hypotheses());
    let dist = ItemDistribution::uniform(matrix.num_items());

    // Label one item and look at what each remaining query would remove.
    let queries = QuerySet::from_pairs(vec![(2, bayes.label(2))])?;
    let mask = consistent_mask(&matrix, &queries)?;
    println!("after querying item 2: {} hypotheses remain\n", mask.count());

    let ctx = MeasureContext::new(&matrix, &prior, &mask, &dist)?;
    println!("item   gibbs_err   var_ratio   gain_avg    gain_wc");
    for x in 0..matrix.num_items() {
        if queries.contains_item(x) {
            continue;
        }
        println!(
            "{x:>4}   {:>9.4}   {:>9.4}   {:>8.4}   {:>8.4}",
            measures::gibbs_error(&ctx, x)?,
            measures::variation_ratio(&ctx, x)?,
            measures::marginal_gain_avg(&ctx, x)?,
            measures::marginal_gain_wc(&ctx, x)?,
        );
    }

    let candidates: Vec<usize> =
        (0..matrix.num_items()).filter(|&x| !queries.contains_item(x)).collect();
    let report = equivalence_audit(&ctx, &candidates)?;
    println!(
        "\nargmax(gibbs_err) = {:?} matches argmax(gain_avg) = {:?}: {}",
        report.ge_argmax,
        report.avg_gain_argmax,
        report.avg_ok
    );
    println!(
        "argmax(var_ratio) = {:?} matches argmax(gain_wc)  = {:?}: {}",
        report.vr_argmax,
        report.wc_gain_argmax,
        report.wc_ok
    );
    Ok(())
}

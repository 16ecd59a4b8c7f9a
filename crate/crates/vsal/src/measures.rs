//! Exact prior-mass-reduction and diameter measures of a version space,
//! evaluated by enumeration over the masked hypotheses.
//!
//! Per-item measures: the Gibbs error of an item is the expected fraction of
//! conditional mass removed when its label is revealed, under the predictive
//! label distribution (`1 - sum_y p(y)^2`); the variation ratio is the
//! worst-case fraction (`1 - max_y p(y)`). Whole-space measures: the pairwise
//! disagreement is the expected distance between two independent draws from
//! the conditional prior (the average diameter); the Gibbs-vote disagreement
//! is the expected distance from a draw to the majority vote. Both averages
//! decompose item by item, which is how they are accumulated here; the
//! brute-force pair enumeration lives in [`crate::oracle`].

use crate::core::{
    self, ItemDistribution, LabelingMatrix, Prior, VersionSpaceMask,
};
use crate::error::{Error, Result};

/// Shared setting for the measures: matrix, prior, mask, and the item
/// distribution the disagreement metric integrates over.
#[derive(Debug, Clone, Copy)]
pub struct MeasureContext<'a> {
    pub labelings: &'a LabelingMatrix,
    pub prior: &'a Prior,
    pub mask: &'a VersionSpaceMask,
    pub dist: &'a ItemDistribution,
}

impl<'a> MeasureContext<'a> {
    pub fn new(
        labelings: &'a LabelingMatrix,
        prior: &'a Prior,
        mask: &'a VersionSpaceMask,
        dist: &'a ItemDistribution,
    ) -> Result<Self> {
        if prior.len() != labelings.num_hypotheses() {
            return Err(Error::DimensionMismatch(format!(
                "prior covers {} hypotheses, matrix has {}",
                prior.len(),
                labelings.num_hypotheses()
            )));
        }
        if mask.len() != labelings.num_hypotheses() {
            return Err(Error::DimensionMismatch(format!(
                "mask covers {} hypotheses, matrix has {}",
                mask.len(),
                labelings.num_hypotheses()
            )));
        }
        dist.validate_against(labelings)?;
        Ok(Self { labelings, prior, mask, dist })
    }

    fn require_nonempty(&self) -> Result<f64> {
        if self.mask.is_empty() {
            return Err(Error::EmptyVersionSpace("measure needs a nonempty version space"));
        }
        let mass = core::prior_mass(self.prior, self.mask);
        if mass <= 0.0 {
            return Err(Error::InvalidValue("version space has zero prior mass".into()));
        }
        Ok(mass)
    }

    /// Conditional label masses at item `x`: `p(y) = pi|_V(V_x^y)`.
    fn label_masses(&self, x: usize) -> Result<Vec<f64>> {
        let mass = self.require_nonempty()?;
        assert!(x < self.labelings.num_items(), "item index out of range");
        let mut masses = vec![0.0f64; self.labelings.num_classes()];
        for h in self.mask.iter_members() {
            masses[self.labelings.label(h, x) as usize] += self.prior.weight(h);
        }
        for m in &mut masses {
            *m /= mass;
        }
        Ok(masses)
    }
}

/// Average-case relative prior mass reduction of querying `x`:
/// `1 - sum_y p(y)^2`. Zero iff all masked hypotheses agree on `x`.
pub fn gibbs_error(ctx: &MeasureContext, x: usize) -> Result<f64> {
    let masses = ctx.label_masses(x)?;
    Ok(1.0 - masses.iter().map(|p| p * p).sum::<f64>())
}

/// Worst-case relative prior mass reduction of querying `x`:
/// `1 - max_y p(y)`. Never exceeds the Gibbs error.
pub fn variation_ratio(ctx: &MeasureContext, x: usize) -> Result<f64> {
    let masses = ctx.label_masses(x)?;
    Ok(1.0 - masses.iter().cloned().fold(0.0f64, f64::max))
}

/// Expected marginal gain of `x` on the mass-reduction utility: the absolute
/// version-space mass times the Gibbs error. Shares its argmax with the Gibbs
/// error at a fixed mask.
pub fn marginal_gain_avg(ctx: &MeasureContext, x: usize) -> Result<f64> {
    Ok(core::prior_mass(ctx.prior, ctx.mask) * gibbs_error(ctx, x)?)
}

/// Worst-case marginal gain of `x`: absolute mass times the variation ratio.
pub fn marginal_gain_wc(ctx: &MeasureContext, x: usize) -> Result<f64> {
    Ok(core::prior_mass(ctx.prior, ctx.mask) * variation_ratio(ctx, x)?)
}

/// Pairwise disagreement: expected distance between two hypotheses drawn
/// independently from the conditional prior, self-pairs included. Accumulated
/// item by item as the distribution-weighted Gibbs error, to which the ordered
/// pair sum reduces exactly.
pub fn pwd(ctx: &MeasureContext) -> Result<f64> {
    let mass = ctx.require_nonempty()?;
    let members = ctx.mask.members();
    let c = ctx.labelings.num_classes();
    let mut total = 0.0;
    let mut masses = vec![0.0f64; c];
    for (i, w) in ctx.dist.iter() {
        masses.iter_mut().for_each(|m| *m = 0.0);
        for &h in &members {
            masses[ctx.labelings.label(h, i) as usize] += ctx.prior.weight(h);
        }
        let sum_sq: f64 = masses.iter().map(|m| (m / mass) * (m / mass)).sum();
        total += w * (1.0 - sum_sq);
    }
    Ok(total)
}

/// Gibbs-vote disagreement: expected distance from a random hypothesis to the
/// majority vote of the version space, over the distribution support.
pub fn gvd(ctx: &MeasureContext) -> Result<f64> {
    let mass = ctx.require_nonempty()?;
    let members = ctx.mask.members();
    let support = ctx.dist.support();
    let vote = core::majority_vote(ctx.mask, ctx.prior, ctx.labelings, &support)?;
    // E_h[ 1(h(x) != vote(x)) ] is one minus the conditional mass on the vote
    // label, summed over the support.
    let mut total = 0.0;
    for (k, (i, w)) in ctx.dist.iter().enumerate() {
        let mut vote_mass = 0.0;
        for &h in &members {
            if ctx.labelings.label(h, i) == vote[k] {
                vote_mass += ctx.prior.weight(h);
            }
        }
        total += w * (1.0 - vote_mass / mass);
    }
    Ok(total)
}

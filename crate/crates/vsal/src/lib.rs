//! Pool-based active learning by version-space reduction over explicit finite
//! hypothesis spaces.
//!
//! The library models a hypothesis space as a dense labeling matrix (one row
//! of pool-item labels per hypothesis) and provides:
//!
//! - [`core`]: version-space masks, the disagreement pseudo-metric,
//!   agreement/disagreement regions, majority vote, wrong agreement;
//! - [`measures`]: exact prior-mass-reduction measures (Gibbs error, variation
//!   ratio, their marginal-gain forms) and diameter measures (pairwise
//!   disagreement, Gibbs-vote disagreement);
//! - [`estimators`]: Monte Carlo ensemble estimators of the same quantities,
//!   plus import of externally trained hypothesis ensembles;
//! - [`strategies`]: query-selection rules (prior-mass and worst-case-diameter
//!   families, weighted variants, random) and the greedy batch loop;
//! - [`samplers`]: synthetic hypothesis classes with planted ground truth and
//!   a biased-sampler wrapper that excludes a neighborhood of the truth;
//! - [`simulator`]: the seeded experiment loop with per-round metrics and CSV
//!   output, and multi-strategy comparison;
//! - [`embedding`]: classical multidimensional scaling of sampled hypotheses
//!   for version-space-evolution plots;
//! - [`oracle`]: independent brute-force reference implementations used to
//!   cross-check everything above.
//!
//! See the crate `examples/` directory for one runnable walkthrough per
//! capability, and the `vsal` binary for the file-driven interface.

pub mod core;
pub mod embedding;
pub mod error;
pub mod estimators;
pub mod measures;
pub mod oracle;
pub mod samplers;
pub mod simulator;
pub mod strategies;

pub use crate::core::{
    BayesLabeling, ItemDistribution, LabelingMatrix, Prior, QuerySet, VersionSpaceMask,
};
pub use crate::error::{Error, Result};

/// Formats a real with 17 significant digits: enough to round-trip `f64`
/// exactly through text. Used by every data-file writer.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

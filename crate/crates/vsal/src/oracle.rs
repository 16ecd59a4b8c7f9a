//! Brute-force reference implementations of every measure, computed by direct
//! enumeration with no shared code paths with the production modules. Slow on
//! purpose; used to generate and verify expected values in tests and exposed
//! through the CLI for ad-hoc checks.

use crate::core::{BayesLabeling, ItemDistribution, LabelingMatrix, Prior, VersionSpaceMask};
use crate::error::{Error, Result};

/// Scale guard: enumeration is quadratic in hypotheses and linear in items.
pub const MAX_HYPOTHESES: usize = 1_000;
pub const MAX_ITEMS: usize = 1_000;
/// Vote-optimality enumeration walks all `C^N` labelings.
pub const MAX_VOTE_ITEMS: usize = 8;
pub const MAX_VOTE_CLASSES: usize = 3;

/// Everything the oracle can say about one version space.
#[derive(Debug, Clone)]
pub struct BruteMeasures {
    /// Per-item Gibbs error, aligned with the distribution support.
    pub gibbs_error: Vec<(usize, f64)>,
    /// Per-item variation ratio, aligned with the distribution support.
    pub variation_ratio: Vec<(usize, f64)>,
    pub pwd: f64,
    pub gvd: f64,
    /// Vote labels over the distribution support.
    pub vote: Vec<(usize, u16)>,
    /// Present when a ground truth was supplied.
    pub wrong_agreement: Option<f64>,
}

fn check_scale(labelings: &LabelingMatrix) -> Result<()> {
    if labelings.num_hypotheses() > MAX_HYPOTHESES || labelings.num_items() > MAX_ITEMS {
        return Err(Error::ScaleLimit(format!(
            "oracle handles at most {MAX_HYPOTHESES} hypotheses x {MAX_ITEMS} items, got {}x{}",
            labelings.num_hypotheses(),
            labelings.num_items()
        )));
    }
    Ok(())
}

fn conditional_weights(
    prior: &Prior,
    mask: &VersionSpaceMask,
) -> Result<Vec<(usize, f64)>> {
    if mask.is_empty() {
        return Err(Error::EmptyVersionSpace("oracle needs a nonempty version space"));
    }
    let total: f64 = mask.iter_members().map(|h| prior.weight(h)).sum();
    if total <= 0.0 {
        return Err(Error::InvalidValue("version space has zero prior mass".into()));
    }
    Ok(mask.iter_members().map(|h| (h, prior.weight(h) / total)).collect())
}

// Item-by-item disagreement between two rows; deliberately re-derived here
// rather than calling into `core`.
fn row_distance(labelings: &LabelingMatrix, a: usize, b: usize, dist: &ItemDistribution) -> f64 {
    let mut d = 0.0;
    for (i, w) in dist.iter() {
        if labelings.label(a, i) != labelings.label(b, i) {
            d += w;
        }
    }
    d
}

/// Computes every measure by direct summation over hypothesis pairs and
/// enumerated labelings.
pub fn brute_measures(
    labelings: &LabelingMatrix,
    prior: &Prior,
    mask: &VersionSpaceMask,
    dist: &ItemDistribution,
    bayes: Option<&BayesLabeling>,
) -> Result<BruteMeasures> {
    check_scale(labelings)?;
    dist.validate_against(labelings)?;
    let cond = conditional_weights(prior, mask)?;
    let c = labelings.num_classes();

    // Gibbs error per item as a double sum over hypothesis pairs: the
    // probability that two independently drawn hypotheses label the item
    // differently.
    let mut gibbs_error = Vec::with_capacity(dist.len());
    for (i, _) in dist.iter() {
        let mut ge = 0.0;
        for &(h, wh) in &cond {
            for &(h2, wh2) in &cond {
                if labelings.label(h, i) != labelings.label(h2, i) {
                    ge += wh * wh2;
                }
            }
        }
        gibbs_error.push((i, ge));
    }

    // Variation ratio per item: one minus the heaviest label mass.
    let mut variation_ratio = Vec::with_capacity(dist.len());
    for (i, _) in dist.iter() {
        let mut masses = vec![0.0f64; c];
        for &(h, wh) in &cond {
            masses[labelings.label(h, i) as usize] += wh;
        }
        let max = masses.iter().cloned().fold(0.0f64, f64::max);
        variation_ratio.push((i, 1.0 - max));
    }

    // Pairwise disagreement: full double sum over ordered pairs, self-pairs
    // included, with the distance recomputed item by item.
    let mut pwd = 0.0;
    for &(h, wh) in &cond {
        for &(h2, wh2) in &cond {
            pwd += wh * wh2 * row_distance(labelings, h, h2, dist);
        }
    }

    // Vote labels: per item, argmax of the weighted average predictive
    // distribution, smallest class index on ties.
    let mut vote = Vec::with_capacity(dist.len());
    for (i, _) in dist.iter() {
        let mut scores = vec![0.0f64; c];
        for &(h, wh) in &cond {
            match labelings.soft_slice(h, i) {
                Some(p) => {
                    for (y, s) in scores.iter_mut().enumerate() {
                        *s += wh * p[y];
                    }
                }
                None => scores[labelings.label(h, i) as usize] += wh,
            }
        }
        let mut best = 0usize;
        for (y, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = y;
            }
        }
        vote.push((i, best as u16));
    }

    // Gibbs-vote disagreement: expected member-vs-vote disagreement, summed
    // literally over members and items.
    let mut gvd = 0.0;
    for &(h, wh) in &cond {
        let mut d = 0.0;
        for (k, (i, w)) in dist.iter().enumerate() {
            debug_assert_eq!(vote[k].0, i);
            if labelings.label(h, i) != vote[k].1 {
                d += w;
            }
        }
        gvd += wh * d;
    }

    // Wrong agreement: mass of items where every member predicts the same
    // label and that label contradicts the truth.
    let wrong_agreement = match bayes {
        Some(truth) => {
            let mut total = 0.0;
            for (i, w) in dist.iter() {
                let first = cond[0].0;
                let l0 = labelings.label(first, i);
                let agreed = cond.iter().all(|&(h, _)| labelings.label(h, i) == l0);
                if agreed && l0 != truth.label(i) {
                    total += w;
                }
            }
            Some(total)
        }
        None => None,
    };

    Ok(BruteMeasures { gibbs_error, variation_ratio, pwd, gvd, vote, wrong_agreement })
}

/// Expected distance from a random in-space hypothesis to an arbitrary
/// labeling over the distribution support.
fn expected_distance_to(
    labelings: &LabelingMatrix,
    cond: &[(usize, f64)],
    labels: &[u16],
    dist: &ItemDistribution,
) -> f64 {
    let mut total = 0.0;
    for &(h, wh) in cond {
        let mut d = 0.0;
        for (k, (i, w)) in dist.iter().enumerate() {
            if labelings.label(h, i) != labels[k] {
                d += w;
            }
        }
        total += wh * d;
    }
    total
}

/// Checks by enumeration of all `C^N` deterministic labelings that the vote
/// attains the minimum expected distance to a random hypothesis (ties
/// allowed, tolerance `tol`).
pub fn vote_is_optimal(
    labelings: &LabelingMatrix,
    prior: &Prior,
    mask: &VersionSpaceMask,
    dist: &ItemDistribution,
    tol: f64,
) -> Result<bool> {
    check_scale(labelings)?;
    let support = dist.support();
    let c = labelings.num_classes();
    if support.len() > MAX_VOTE_ITEMS || c > MAX_VOTE_CLASSES {
        return Err(Error::ScaleLimit(format!(
            "vote enumeration handles at most {MAX_VOTE_ITEMS} items and {MAX_VOTE_CLASSES} \
             classes, got {} items, {} classes",
            support.len(),
            c
        )));
    }
    let cond = conditional_weights(prior, mask)?;
    let brute = brute_measures(labelings, prior, mask, dist, None)?;
    let vote_labels: Vec<u16> = brute.vote.iter().map(|&(_, y)| y).collect();
    let vote_dist = expected_distance_to(labelings, &cond, &vote_labels, dist);

    let mut candidate = vec![0u16; support.len()];
    loop {
        let d = expected_distance_to(labelings, &cond, &candidate, dist);
        if d < vote_dist - tol {
            return Ok(false);
        }
        // Odometer step through all labelings.
        let mut pos = 0;
        loop {
            if pos == candidate.len() {
                return Ok(true);
            }
            candidate[pos] += 1;
            if (candidate[pos] as usize) < c {
                break;
            }
            candidate[pos] = 0;
            pos += 1;
        }
    }
}

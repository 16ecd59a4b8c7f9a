//! Monte Carlo estimators of the measures, for the setting where the version
//! space can only be sampled: ensembles of hypotheses drawn i.i.d. from the
//! conditional prior (or trained externally and imported from a matrix file),
//! an unbiased U-statistic for the pairwise disagreement, the empirical
//! majority vote, and plug-in label frequencies for the per-item measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{ItemDistribution, LabelingMatrix, QuerySet};
use crate::error::{Error, Result};
use crate::measures::MeasureContext;

/// Where an ensemble's members came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Drawn by [`draw_ensemble`] from an explicit mask.
    ExactSampler,
    /// Imported rows of an externally trained hypothesis matrix.
    External,
}

/// A multiset of hypothesis indices sampled with replacement. Indices refer to
/// rows of whichever matrix the ensemble was drawn from or imported with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ensemble {
    members: Vec<usize>,
    provenance: Provenance,
}

impl Ensemble {
    pub fn from_members(members: Vec<usize>, provenance: Provenance) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidValue("ensemble needs at least one member".into()));
        }
        Ok(Self { members, provenance })
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// Draws `size` hypotheses i.i.d. from the conditional prior restricted to the
/// context's mask. Deterministic given the seed; zero-weight hypotheses are
/// never drawn.
pub fn draw_ensemble(ctx: &MeasureContext, size: usize, seed: u64) -> Result<Ensemble> {
    if size == 0 {
        return Err(Error::InvalidValue("ensemble size must be at least 1".into()));
    }
    if ctx.mask.is_empty() {
        return Err(Error::EmptyVersionSpace("cannot sample from an empty version space"));
    }
    let members: Vec<usize> = ctx.mask.iter_members().collect();
    let mut cdf = Vec::with_capacity(members.len());
    let mut acc = 0.0;
    for &h in &members {
        acc += ctx.prior.weight(h);
        cdf.push(acc);
    }
    if acc <= 0.0 {
        return Err(Error::InvalidValue("version space has zero prior mass".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(size);
    for _ in 0..size {
        let r = rng.random::<f64>() * acc;
        let k = cdf.partition_point(|&c| c <= r).min(members.len() - 1);
        draws.push(members[k]);
    }
    Ensemble::from_members(draws, Provenance::ExactSampler)
}

/// Unbiased estimator of the pairwise disagreement: the average distance over
/// ordered pairs of distinct draws, `1/(M(M-1)) * sum_{i != j} d(h_i, h_j)`.
pub fn pwd_hat(ens: &Ensemble, labelings: &LabelingMatrix, dist: &ItemDistribution) -> Result<f64> {
    let me = ens.size();
    if me < 2 {
        return Err(Error::InvalidValue(format!(
            "pairwise estimator needs at least 2 draws, got {me}"
        )));
    }
    // Accumulated item by item: among M^2 ordered pairs, the agreeing ones are
    // counted by squared per-class draw counts, and self-pairs always agree.
    let c = labelings.num_classes();
    let mut counts = vec![0usize; c];
    let mut total = 0.0;
    for (i, w) in dist.iter() {
        counts.iter_mut().for_each(|n| *n = 0);
        for &h in ens.members() {
            counts[labelings.label(h, i) as usize] += 1;
        }
        let agree: usize = counts.iter().map(|&n| n * n).sum();
        total += w * (me * me - agree) as f64;
    }
    Ok(total / (me * (me - 1)) as f64)
}

/// Empirical majority vote of the ensemble at the given items: per draw
/// uniform weight, duplicates counted by multiplicity, soft probabilities
/// averaged when present, ties to the smallest class index.
pub fn empirical_vote(ens: &Ensemble, labelings: &LabelingMatrix, items: &[usize]) -> Vec<u16> {
    let c = labelings.num_classes();
    let mut votes = Vec::with_capacity(items.len());
    let mut scores = vec![0.0f64; c];
    for &i in items {
        scores.iter_mut().for_each(|s| *s = 0.0);
        for &h in ens.members() {
            match labelings.soft_slice(h, i) {
                Some(p) => {
                    for (y, s) in scores.iter_mut().enumerate() {
                        *s += p[y];
                    }
                }
                None => scores[labelings.label(h, i) as usize] += 1.0,
            }
        }
        let mut best = 0usize;
        for (y, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = y;
            }
        }
        votes.push(best as u16);
    }
    votes
}

/// Estimator of the Gibbs-vote disagreement: mean distance from each draw to
/// the empirical majority vote.
pub fn gvd_hat(ens: &Ensemble, labelings: &LabelingMatrix, dist: &ItemDistribution) -> Result<f64> {
    let support = dist.support();
    let vote = empirical_vote(ens, labelings, &support);
    let mut total = 0.0;
    for &h in ens.members() {
        for (k, (i, w)) in dist.iter().enumerate() {
            if labelings.label(h, i) != vote[k] {
                total += w;
            }
        }
    }
    Ok(total / ens.size() as f64)
}

/// Empirical label distribution of the ensemble at item `x`: hard prediction
/// frequencies, or the average soft probability vector when present.
pub fn label_frequencies(ens: &Ensemble, labelings: &LabelingMatrix, x: usize) -> Vec<f64> {
    let c = labelings.num_classes();
    let mut freq = vec![0.0f64; c];
    for &h in ens.members() {
        match labelings.soft_slice(h, x) {
            Some(p) => {
                for (y, f) in freq.iter_mut().enumerate() {
                    *f += p[y];
                }
            }
            None => freq[labelings.label(h, x) as usize] += 1.0,
        }
    }
    let me = ens.size() as f64;
    freq.iter_mut().for_each(|f| *f /= me);
    freq
}

/// Plug-in Gibbs error from ensemble label frequencies.
pub fn ge_hat(ens: &Ensemble, labelings: &LabelingMatrix, x: usize) -> f64 {
    let freq = label_frequencies(ens, labelings, x);
    1.0 - freq.iter().map(|p| p * p).sum::<f64>()
}

/// Plug-in variation ratio from ensemble label frequencies.
pub fn vr_hat(ens: &Ensemble, labelings: &LabelingMatrix, x: usize) -> f64 {
    let freq = label_frequencies(ens, labelings, x);
    1.0 - freq.iter().cloned().fold(0.0f64, f64::max)
}

/// One rejected row of an external import: the first query it contradicts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub row: usize,
    pub item: usize,
    pub expected: u16,
    pub found: u16,
}

/// Outcome of validating an externally trained hypothesis matrix against the
/// query history. Rejections indicate sampler bias: the trainer produced
/// hypotheses inconsistent with labels it was given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportReport {
    pub total_rows: usize,
    pub accepted: Vec<usize>,
    pub rejected: Vec<RejectedRow>,
}

/// Validates each row of an external matrix against the queried labels.
pub fn validate_external(matrix: &LabelingMatrix, q: &QuerySet) -> Result<ImportReport> {
    q.validate_against(matrix)?;
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for h in 0..matrix.num_hypotheses() {
        match q.iter().find(|&(x, y)| matrix.label(h, x) != y) {
            Some((x, y)) => {
                rejected.push(RejectedRow { row: h, item: x, expected: y, found: matrix.label(h, x) })
            }
            None => accepted.push(h),
        }
    }
    Ok(ImportReport { total_rows: matrix.num_hypotheses(), accepted, rejected })
}

/// Imports an external matrix as an ensemble over its consistent rows.
/// Fails when every row contradicts the query history.
pub fn import_external(
    matrix: &LabelingMatrix,
    q: &QuerySet,
) -> Result<(Ensemble, ImportReport)> {
    let report = validate_external(matrix, q)?;
    if report.accepted.is_empty() {
        return Err(Error::EmptyVersionSpace(
            "every external hypothesis contradicts the queried labels",
        ));
    }
    let ens = Ensemble::from_members(report.accepted.clone(), Provenance::External)?;
    Ok((ens, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{Prior, VersionSpaceMask};
    use crate::measures::{self, MeasureContext};
    use crate::testutil::fixture_a;

    fn ens(members: Vec<usize>) -> Ensemble {
        Ensemble::from_members(members, Provenance::ExactSampler).unwrap()
    }

    #[test]
    fn draw_from_singleton_is_degenerate() {
        let (m, prior, dist) = fixture_a();
        let mask = VersionSpaceMask::from_bits(vec![false, true, false]);
        let ctx = MeasureContext::new(&m, &prior, &mask, &dist).unwrap();
        let e = draw_ensemble(&ctx, 3, 7).unwrap();
        assert_eq!(e.members(), &[1, 1, 1]);
        assert_eq!(e.provenance(), Provenance::ExactSampler);
    }

    #[test]
    fn draw_concentrates_on_uniform_pair() {
        let (m, prior, dist) = fixture_a();
        let mask = VersionSpaceMask::from_bits(vec![true, true, false]);
        let ctx = MeasureContext::new(&m, &prior, &mask, &dist).unwrap();
        let e = draw_ensemble(&ctx, 10_000, 42).unwrap();
        let freq0 = e.members().iter().filter(|&&h| h == 0).count() as f64 / 10_000.0;
        // Binomial concentration: within 3 / (2 sqrt(n)) of 1/2.
        assert!((freq0 - 0.5).abs() < 3.0 / (2.0 * 100.0), "freq0 = {freq0}");
    }

    #[test]
    fn zero_weight_members_never_drawn() {
        let (m, _, dist) = fixture_a();
        let prior = Prior::new(vec![0.0, 0.5, 0.5]).unwrap();
        let full = VersionSpaceMask::full(3);
        let ctx = MeasureContext::new(&m, &prior, &full, &dist).unwrap();
        let e = draw_ensemble(&ctx, 5_000, 3).unwrap();
        assert!(e.members().iter().all(|&h| h != 0));
    }

    #[test]
    fn draw_is_deterministic_given_seed() {
        let (m, prior, dist) = fixture_a();
        let full = VersionSpaceMask::full(3);
        let ctx = MeasureContext::new(&m, &prior, &full, &dist).unwrap();
        let a = draw_ensemble(&ctx, 100, 9).unwrap();
        let b = draw_ensemble(&ctx, 100, 9).unwrap();
        assert_eq!(a, b);
        let c = draw_ensemble(&ctx, 100, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pwd_hat_examples() {
        let (m, _, dist) = fixture_a();
        assert_eq!(pwd_hat(&ens(vec![0, 2]), &m, &dist).unwrap(), 1.0);
        assert_eq!(pwd_hat(&ens(vec![1, 1]), &m, &dist).unwrap(), 0.0);
        // Ordered distinct pairs of (h0,h1,h2): distances (1/2+1+1/2)*2 = 4,
        // divided by 6.
        assert!((pwd_hat(&ens(vec![0, 1, 2]), &m, &dist).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(pwd_hat(&ens(vec![0]), &m, &dist).is_err());
    }

    #[test]
    fn gvd_hat_examples() {
        let (m, _, dist) = fixture_a();
        // Vote of (h0,h1,h2) is (0,1): mean of (1/2, 0, 1/2).
        assert!((gvd_hat(&ens(vec![0, 1, 2]), &m, &dist).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(gvd_hat(&ens(vec![2]), &m, &dist).unwrap(), 0.0);
        // Duplicates weight the vote: (h0,h0,h2) votes (0,0); distances
        // (0, 0, 1), mean 1/3.
        assert!((gvd_hat(&ens(vec![0, 0, 2]), &m, &dist).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ge_vr_hat_examples() {
        let (m, _, _) = fixture_a();
        let e = ens(vec![0, 1, 2]);
        assert!((ge_hat(&e, &m, 0) - 4.0 / 9.0).abs() < 1e-15);
        assert!((vr_hat(&e, &m, 0) - 1.0 / 3.0).abs() < 1e-15);

        let unanimous = ens(vec![0, 0, 0]);
        assert_eq!(ge_hat(&unanimous, &m, 0), 0.0);
        assert_eq!(vr_hat(&unanimous, &m, 0), 0.0);

        let e = ens(vec![0, 1]);
        assert!((ge_hat(&e, &m, 1) - 0.5).abs() < 1e-15);
        assert!((vr_hat(&e, &m, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn estimators_converge_to_exact_values() {
        let (m, prior, dist) = fixture_a();
        let full = VersionSpaceMask::full(3);
        let ctx = MeasureContext::new(&m, &prior, &full, &dist).unwrap();
        let e = draw_ensemble(&ctx, 10_000, 11).unwrap();
        let p = pwd_hat(&e, &m, &dist).unwrap();
        let g = gvd_hat(&e, &m, &dist).unwrap();
        assert!((p - measures::pwd(&ctx).unwrap()).abs() < 0.01, "pwd_hat = {p}");
        assert!((g - measures::gvd(&ctx).unwrap()).abs() < 0.01, "gvd_hat = {g}");
    }

    #[test]
    fn pwd_hat_is_unbiased_on_fixture() {
        let (m, prior, dist) = fixture_a();
        let full = VersionSpaceMask::full(3);
        let ctx = MeasureContext::new(&m, &prior, &full, &dist).unwrap();
        let exact = measures::pwd(&ctx).unwrap();
        let n = 2_000usize;
        let samples: Vec<f64> = (0..n)
            .map(|k| {
                let e = draw_ensemble(&ctx, 5, 1000 + k as u64).unwrap();
                pwd_hat(&e, &m, &dist).unwrap()
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - exact).abs() <= 3.0 * se, "mean {mean}, exact {exact}, se {se}");
    }

    #[test]
    fn sandwich_holds_in_expectation_not_per_draw() {
        // A single ensemble may violate pwd_hat/2 <= gvd_hat <= pwd_hat; the
        // bounds are only required of the means, within three standard
        // errors.
        let (m, prior, dist) = fixture_a();
        let full = VersionSpaceMask::full(3);
        let ctx = MeasureContext::new(&m, &prior, &full, &dist).unwrap();
        let n = 3_000usize;
        let mut lower_gap = Vec::with_capacity(n); // gvd_hat - pwd_hat/2
        let mut upper_gap = Vec::with_capacity(n); // pwd_hat - gvd_hat
        for k in 0..n {
            let e = draw_ensemble(&ctx, 7, 500 + k as u64).unwrap();
            let p = pwd_hat(&e, &m, &dist).unwrap();
            let g = gvd_hat(&e, &m, &dist).unwrap();
            lower_gap.push(g - p / 2.0);
            upper_gap.push(p - g);
        }
        for gaps in [&lower_gap, &upper_gap] {
            let mean = gaps.iter().sum::<f64>() / n as f64;
            let var =
                gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!(mean >= -3.0 * se, "mean gap {mean}, se {se}");
        }
    }

    #[test]
    fn external_import_rejects_inconsistent_rows() {
        let (m, _, _) = fixture_a();
        let q = QuerySet::from_pairs(vec![(0, 0)]).unwrap();
        let (e, report) = import_external(&m, &q).unwrap();
        assert_eq!(e.members(), &[0, 1]);
        assert_eq!(e.provenance(), Provenance::External);
        assert_eq!(report.total_rows, 3);
        assert_eq!(
            report.rejected,
            vec![RejectedRow { row: 2, item: 0, expected: 0, found: 1 }]
        );

        // Nothing consistent: import fails.
        let q = QuerySet::from_pairs(vec![(0, 1), (1, 0)]).unwrap();
        assert!(import_external(&m, &q).is_err());
    }
}

//! Explicit finite hypothesis spaces and the operations that everything else
//! builds on: version-space masks, the disagreement pseudo-metric,
//! agreement/disagreement regions, the majority vote, and the wrong-agreement
//! diagnostic.
//!
//! A hypothesis space is a dense `M x N` matrix of class labels: row `h` is
//! the labeling hypothesis `h` assigns to the `N` pool items. A version space
//! is a boolean mask over rows. All types are immutable after construction and
//! every operation is a pure function of its inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Tolerance for weights that must sum to one (priors, item distributions).
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Tolerance for per-hypothesis soft probability rows.
pub const SOFT_PROB_SUM_TOL: f64 = 1e-9;

/// The effective hypothesis space: `M` hypotheses by `N` items, each entry a
/// class label in `[0, C)`. Optionally carries soft per-class probabilities
/// (e.g. softmax outputs of externally trained models); when absent,
/// predictions are one-hot on the hard labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelingMatrix {
    num_hypotheses: usize,
    num_items: usize,
    num_classes: usize,
    labels: Vec<u16>,
    soft_probs: Option<Vec<f64>>,
}

impl LabelingMatrix {
    /// Builds a matrix from one label row per hypothesis.
    pub fn from_rows(rows: Vec<Vec<u16>>, num_classes: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidValue("labeling matrix needs at least one hypothesis".into()));
        }
        let num_items = rows[0].len();
        let mut labels = Vec::with_capacity(rows.len() * num_items);
        for row in &rows {
            if row.len() != num_items {
                return Err(Error::DimensionMismatch(format!(
                    "ragged labeling matrix: expected {} items per row, found {}",
                    num_items,
                    row.len()
                )));
            }
            labels.extend_from_slice(row);
        }
        Self::from_flat(rows.len(), num_items, num_classes, labels)
    }

    /// Builds a matrix from a flat row-major label buffer.
    pub fn from_flat(
        num_hypotheses: usize,
        num_items: usize,
        num_classes: usize,
        labels: Vec<u16>,
    ) -> Result<Self> {
        if num_hypotheses == 0 || num_items == 0 {
            return Err(Error::InvalidValue(
                "labeling matrix needs positive hypothesis and item counts".into(),
            ));
        }
        if num_classes < 2 {
            return Err(Error::InvalidValue(format!(
                "labeling matrix needs at least 2 classes, got {num_classes}"
            )));
        }
        if labels.len() != num_hypotheses * num_items {
            return Err(Error::DimensionMismatch(format!(
                "label buffer has {} entries, expected {}x{}",
                labels.len(),
                num_hypotheses,
                num_items
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| (l as usize) >= num_classes) {
            return Err(Error::InvalidValue(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self { num_hypotheses, num_items, num_classes, labels, soft_probs: None })
    }

    /// Attaches soft per-class probabilities, shape `M x N x C` row-major.
    ///
    /// Each length-`C` slice must sum to 1 within `SOFT_PROB_SUM_TOL` and its
    /// argmax (ties to the smallest class index) must equal the hard label.
    pub fn with_soft_probs(mut self, probs: Vec<f64>) -> Result<Self> {
        let expected = self.num_hypotheses * self.num_items * self.num_classes;
        if probs.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "soft probability buffer has {} entries, expected {}",
                probs.len(),
                expected
            )));
        }
        let c = self.num_classes;
        for h in 0..self.num_hypotheses {
            for i in 0..self.num_items {
                let base = (h * self.num_items + i) * c;
                let slice = &probs[base..base + c];
                let mut sum = 0.0;
                let mut best = 0usize;
                for (y, &p) in slice.iter().enumerate() {
                    if p < 0.0 {
                        return Err(Error::InvalidValue(format!(
                            "negative soft probability {p} at hypothesis {h}, item {i}"
                        )));
                    }
                    sum += p;
                    if p > slice[best] {
                        best = y;
                    }
                }
                if (sum - 1.0).abs() > SOFT_PROB_SUM_TOL {
                    return Err(Error::InvalidValue(format!(
                        "soft probabilities at hypothesis {h}, item {i} sum to {sum}"
                    )));
                }
                if best as u16 != self.label(h, i) {
                    return Err(Error::InvalidValue(format!(
                        "soft argmax {} disagrees with hard label {} at hypothesis {h}, item {i}",
                        best,
                        self.label(h, i)
                    )));
                }
            }
        }
        self.soft_probs = Some(probs);
        Ok(self)
    }

    pub fn num_hypotheses(&self) -> usize {
        self.num_hypotheses
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[inline]
    pub fn label(&self, h: usize, i: usize) -> u16 {
        debug_assert!(h < self.num_hypotheses && i < self.num_items);
        self.labels[h * self.num_items + i]
    }

    #[inline]
    pub fn row(&self, h: usize) -> &[u16] {
        debug_assert!(h < self.num_hypotheses);
        &self.labels[h * self.num_items..(h + 1) * self.num_items]
    }

    pub fn has_soft_probs(&self) -> bool {
        self.soft_probs.is_some()
    }

    /// Soft class probabilities for `(h, i)`, if present.
    #[inline]
    pub fn soft_slice(&self, h: usize, i: usize) -> Option<&[f64]> {
        self.soft_probs.as_ref().map(|p| {
            let base = (h * self.num_items + i) * self.num_classes;
            &p[base..base + self.num_classes]
        })
    }

    /// Text form: line 1 is `M N C`, then one line of N space-separated labels
    /// per hypothesis.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {}", self.num_hypotheses, self.num_items, self.num_classes);
        for h in 0..self.num_hypotheses {
            let row: Vec<String> = self.row(h).iter().map(|l| l.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token `{t}`"))))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(Error::Parse(format!("header must be `M N C`, got `{header}`")));
        }
        let (m, n, c) = (dims[0], dims[1], dims[2]);
        let mut labels = Vec::with_capacity(m * n);
        for (idx, line) in lines.enumerate() {
            if idx >= m {
                return Err(Error::Parse(format!("more than {m} label rows")));
            }
            let row: Vec<u16> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad label token `{t}`"))))
                .collect::<std::result::Result<_, _>>()?;
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "row {idx} has {} labels, expected {n}",
                    row.len()
                )));
            }
            labels.extend_from_slice(&row);
        }
        if labels.len() != m * n {
            return Err(Error::Parse(format!(
                "found {} label rows, expected {m}",
                labels.len() / n.max(1)
            )));
        }
        Self::from_flat(m, n, c, labels)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    /// Sidecar probability text: `M * N` lines of `C` space-separated reals in
    /// row-major (hypothesis, item) order.
    pub fn soft_probs_to_text(&self) -> Option<String> {
        let probs = self.soft_probs.as_ref()?;
        let mut out = String::new();
        for chunk in probs.chunks(self.num_classes) {
            let row: Vec<String> = chunk.iter().map(|p| crate::fmt_g17(*p)).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        Some(out)
    }

    pub fn with_soft_probs_text(self, text: &str) -> Result<Self> {
        let mut probs = Vec::with_capacity(self.num_hypotheses * self.num_items * self.num_classes);
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            for tok in line.split_whitespace() {
                let p: f64 =
                    tok.parse().map_err(|_| Error::Parse(format!("bad probability `{tok}`")))?;
                probs.push(p);
            }
        }
        self.with_soft_probs(probs)
    }
}

/// An ordered query history: `(item, label)` pairs with no repeated items.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuerySet {
    pairs: Vec<(usize, u16)>,
}

impl QuerySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: Vec<(usize, u16)>) -> Result<Self> {
        let mut q = Self::new();
        for (x, y) in pairs {
            q.push(x, y)?;
        }
        Ok(q)
    }

    /// Appends a query; the item must not have been queried before.
    pub fn push(&mut self, item: usize, label: u16) -> Result<()> {
        if self.contains_item(item) {
            return Err(Error::InvalidQuery(format!("item {item} queried twice")));
        }
        self.pairs.push((item, label));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains_item(&self, item: usize) -> bool {
        self.pairs.iter().any(|&(x, _)| x == item)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u16)> + '_ {
        self.pairs.iter().copied()
    }

    /// Checks all item and label indices against a matrix.
    pub fn validate_against(&self, labelings: &LabelingMatrix) -> Result<()> {
        for (x, y) in self.iter() {
            if x >= labelings.num_items() {
                return Err(Error::InvalidQuery(format!(
                    "item {x} out of range for {} items",
                    labelings.num_items()
                )));
            }
            if (y as usize) >= labelings.num_classes() {
                return Err(Error::InvalidQuery(format!(
                    "label {y} out of range for {} classes",
                    labelings.num_classes()
                )));
            }
        }
        Ok(())
    }

    /// Lines of `item label`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (x, y) in self.iter() {
            let _ = writeln!(out, "{x} {y}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut q = Self::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::Parse(format!("query line must be `item label`, got `{line}`")));
            }
            let x: usize =
                toks[0].parse().map_err(|_| Error::Parse(format!("bad item `{}`", toks[0])))?;
            let y: u16 =
                toks[1].parse().map_err(|_| Error::Parse(format!("bad label `{}`", toks[1])))?;
            q.push(x, y)?;
        }
        Ok(q)
    }
}

/// Indicator over hypothesis indices: the version space as a subset of rows.
/// The empty mask is a representable value, not an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionSpaceMask {
    bits: Vec<bool>,
    count: usize,
}

impl VersionSpaceMask {
    /// All-true mask over `m` hypotheses.
    pub fn full(m: usize) -> Self {
        Self { bits: vec![true; m], count: m }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        let count = bits.iter().filter(|&&b| b).count();
        Self { bits, count }
    }

    /// Number of hypotheses the mask ranges over (true or false).
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// Number of hypotheses in the version space.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn contains(&self, h: usize) -> bool {
        self.bits[h]
    }

    /// Indices of in-space hypotheses, ascending.
    pub fn iter_members(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(h, _)| h)
    }

    pub fn members(&self) -> Vec<usize> {
        self.iter_members().collect()
    }
}

/// Nonnegative weight per hypothesis, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    weights: Vec<f64>,
}

impl Prior {
    /// Strict constructor: weights must already sum to 1 within `WEIGHT_SUM_TOL`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidValue("prior needs at least one weight".into()));
        }
        if let Some(&w) = weights.iter().find(|&&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidValue(format!("prior weight {w} is not a nonnegative real")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidValue(format!("prior weights sum to {sum}, expected 1")));
        }
        Ok(Self { weights })
    }

    /// Rescales arbitrary nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidValue("prior needs at least one weight".into()));
        }
        if let Some(&w) = weights.iter().find(|&&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidValue(format!("prior weight {w} is not a nonnegative real")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidValue("prior weights sum to zero".into()));
        }
        Ok(Self { weights: weights.into_iter().map(|w| w / sum).collect() })
    }

    pub fn uniform(m: usize) -> Self {
        Self { weights: vec![1.0 / m as f64; m] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn weight(&self, h: usize) -> f64 {
        self.weights[h]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Weights over an evaluation item set, approximating the marginal item
/// distribution. Carrier of the disagreement pseudo-metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemDistribution {
    pairs: Vec<(usize, f64)>,
}

impl ItemDistribution {
    pub fn new(pairs: Vec<(usize, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidValue("item distribution needs at least one item".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &(i, w) in &pairs {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidValue(format!(
                    "item weight {w} is not a nonnegative real"
                )));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidValue(format!("item {i} appears twice")));
            }
        }
        let sum: f64 = pairs.iter().map(|&(_, w)| w).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidValue(format!("item weights sum to {sum}, expected 1")));
        }
        Ok(Self { pairs })
    }

    /// Uniform distribution over items `0..n`.
    pub fn uniform(n: usize) -> Self {
        let w = 1.0 / n as f64;
        Self { pairs: (0..n).map(|i| (i, w)).collect() }
    }

    /// Uniform distribution over an explicit item set.
    pub fn uniform_over(items: &[usize]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidValue("item distribution needs at least one item".into()));
        }
        let w = 1.0 / items.len() as f64;
        Self::new(items.iter().map(|&i| (i, w)).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn support(&self) -> Vec<usize> {
        self.pairs.iter().map(|&(i, _)| i).collect()
    }

    pub fn validate_against(&self, labelings: &LabelingMatrix) -> Result<()> {
        for (i, _) in self.iter() {
            if i >= labelings.num_items() {
                return Err(Error::DimensionMismatch(format!(
                    "distribution item {i} out of range for {} items",
                    labelings.num_items()
                )));
            }
        }
        Ok(())
    }
}

/// Ground-truth labeling over the pool items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BayesLabeling {
    labels: Vec<u16>,
}

impl BayesLabeling {
    pub fn new(labels: Vec<u16>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| (l as usize) >= num_classes) {
            return Err(Error::InvalidValue(format!(
                "ground-truth label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self { labels })
    }

    /// The labeling of a matrix row.
    pub fn of_row(labelings: &LabelingMatrix, h: usize) -> Self {
        Self { labels: labelings.row(h).to_vec() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn label(&self, i: usize) -> u16 {
        self.labels[i]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.labels
    }
}

/// Mask of hypotheses consistent with every pair in `q`. The empty query
/// keeps everything; an unsatisfiable query yields the empty mask.
pub fn consistent_mask(labelings: &LabelingMatrix, q: &QuerySet) -> Result<VersionSpaceMask> {
    q.validate_against(labelings)?;
    let mut bits = vec![true; labelings.num_hypotheses()];
    for (x, y) in q.iter() {
        for (h, bit) in bits.iter_mut().enumerate() {
            if *bit && labelings.label(h, x) != y {
                *bit = false;
            }
        }
    }
    Ok(VersionSpaceMask::from_bits(bits))
}

/// Sub-mask of hypotheses that additionally label item `x` as `y`.
pub fn restrict(
    mask: &VersionSpaceMask,
    labelings: &LabelingMatrix,
    x: usize,
    y: u16,
) -> Result<VersionSpaceMask> {
    if x >= labelings.num_items() {
        return Err(Error::InvalidQuery(format!(
            "item {x} out of range for {} items",
            labelings.num_items()
        )));
    }
    if (y as usize) >= labelings.num_classes() {
        return Err(Error::InvalidQuery(format!(
            "label {y} out of range for {} classes",
            labelings.num_classes()
        )));
    }
    let bits =
        (0..mask.len()).map(|h| mask.contains(h) && labelings.label(h, x) == y).collect();
    Ok(VersionSpaceMask::from_bits(bits))
}

/// Total prior weight of the masked hypotheses. The reduction utility of a
/// query set is one minus this value.
pub fn prior_mass(prior: &Prior, mask: &VersionSpaceMask) -> f64 {
    assert_eq!(prior.len(), mask.len(), "prior and mask length disagree");
    mask.iter_members().map(|h| prior.weight(h)).sum()
}

/// Disagreement probability between two hypotheses: the `dist`-weighted mass
/// of items where their labels differ. A pseudo-metric on rows.
pub fn disagreement(
    labelings: &LabelingMatrix,
    h: usize,
    h2: usize,
    dist: &ItemDistribution,
) -> f64 {
    assert!(h < labelings.num_hypotheses() && h2 < labelings.num_hypotheses());
    dist.iter()
        .filter(|&(i, _)| labelings.label(h, i) != labelings.label(h2, i))
        .map(|(_, w)| w)
        .sum()
}

/// Disagreement between a hypothesis row and an arbitrary labeling.
pub fn labeling_disagreement(
    labelings: &LabelingMatrix,
    h: usize,
    other: &[u16],
    dist: &ItemDistribution,
) -> f64 {
    assert!(h < labelings.num_hypotheses());
    dist.iter().filter(|&(i, _)| labelings.label(h, i) != other[i]).map(|(_, w)| w).sum()
}

/// Disagreement between two arbitrary labelings over the full item range.
pub fn labelings_disagreement(a: &[u16], b: &[u16], dist: &ItemDistribution) -> f64 {
    dist.iter().filter(|&(i, _)| a[i] != b[i]).map(|(_, w)| w).sum()
}

/// Splits `items` into the agreement region (all masked hypotheses predict the
/// same label) and the disagreement region (some pair differs).
pub fn regions(
    mask: &VersionSpaceMask,
    labelings: &LabelingMatrix,
    items: &[usize],
) -> Result<(Vec<usize>, Vec<usize>)> {
    if mask.is_empty() {
        return Err(Error::EmptyVersionSpace("regions are undefined for an empty version space"));
    }
    let members = mask.members();
    let first = members[0];
    let mut agr = Vec::new();
    let mut dis = Vec::new();
    for &i in items {
        if i >= labelings.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "item {i} out of range for {} items",
                labelings.num_items()
            )));
        }
        let l0 = labelings.label(first, i);
        if members[1..].iter().all(|&h| labelings.label(h, i) == l0) {
            agr.push(i);
        } else {
            dis.push(i);
        }
    }
    Ok((agr, dis))
}

/// Majority-vote labels on `items`: per item, the argmax over classes of the
/// conditional-prior-weighted average predictive probability (soft
/// probabilities when present, one-hot hard labels otherwise). Ties break to
/// the smallest class index.
pub fn majority_vote(
    mask: &VersionSpaceMask,
    prior: &Prior,
    labelings: &LabelingMatrix,
    items: &[usize],
) -> Result<Vec<u16>> {
    if mask.is_empty() {
        return Err(Error::EmptyVersionSpace("majority vote needs a nonempty version space"));
    }
    assert_eq!(prior.len(), mask.len(), "prior and mask length disagree");
    let mass = prior_mass(prior, mask);
    if mass <= 0.0 {
        return Err(Error::InvalidValue("version space has zero prior mass".into()));
    }
    let members = mask.members();
    let c = labelings.num_classes();
    let mut votes = Vec::with_capacity(items.len());
    let mut scores = vec![0.0f64; c];
    for &i in items {
        if i >= labelings.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "item {i} out of range for {} items",
                labelings.num_items()
            )));
        }
        scores.iter_mut().for_each(|s| *s = 0.0);
        for &h in &members {
            let w = prior.weight(h);
            match labelings.soft_slice(h, i) {
                Some(p) => {
                    for (y, s) in scores.iter_mut().enumerate() {
                        *s += w * p[y];
                    }
                }
                None => scores[labelings.label(h, i) as usize] += w,
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
    Ok(votes)
}

/// The wrong agreement of a version space: the `dist` mass of agreement-region
/// items where the common in-space prediction contradicts the ground truth.
/// Equals the distance from the ground truth to its projection onto the set of
/// hypotheses agreeing with the version space on its agreement region.
pub fn wrong_agreement(
    mask: &VersionSpaceMask,
    labelings: &LabelingMatrix,
    bayes: &BayesLabeling,
    dist: &ItemDistribution,
) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyVersionSpace("wrong agreement needs a nonempty version space"));
    }
    if bayes.len() != labelings.num_items() {
        return Err(Error::DimensionMismatch(format!(
            "ground truth covers {} items, matrix has {}",
            bayes.len(),
            labelings.num_items()
        )));
    }
    let members = mask.members();
    let first = members[0];
    let mut total = 0.0;
    for (i, w) in dist.iter() {
        let l0 = labelings.label(first, i);
        let agreed = members[1..].iter().all(|&h| labelings.label(h, i) == l0);
        if agreed && l0 != bayes.label(i) {
            total += w;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::fixture_a;
    use proptest::prelude::*;

    #[test]
    fn consistent_mask_examples() {
        let (m, prior, dist) = fixture_a();
        let _ = (&prior, &dist);

        let empty_q = QuerySet::new();
        let mask = consistent_mask(&m, &empty_q).unwrap();
        assert_eq!(mask.members(), vec![0, 1, 2]);

        let q = QuerySet::from_pairs(vec![(0, 0)]).unwrap();
        let mask = consistent_mask(&m, &q).unwrap();
        assert_eq!(mask.members(), vec![0, 1]);

        // Unsatisfiable query: empty mask, not an error.
        let q = QuerySet::from_pairs(vec![(0, 1), (1, 0)]).unwrap();
        let mask = consistent_mask(&m, &q).unwrap();
        assert!(mask.is_empty());
    }

    #[test]
    fn consistent_mask_rejects_out_of_range() {
        let (m, _, _) = fixture_a();
        let q = QuerySet::from_pairs(vec![(9, 0)]).unwrap();
        assert!(matches!(consistent_mask(&m, &q), Err(Error::InvalidQuery(_))));
        let q = QuerySet::from_pairs(vec![(0, 7)]).unwrap();
        assert!(matches!(consistent_mask(&m, &q), Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn restrict_examples() {
        let (m, _, _) = fixture_a();
        let full = VersionSpaceMask::full(3);

        let r = restrict(&full, &m, 0, 0).unwrap();
        assert_eq!(r.members(), vec![0, 1]);

        // Idempotent for repeated (x, y).
        let r2 = restrict(&r, &m, 0, 0).unwrap();
        assert_eq!(r2, r);

        let r3 = restrict(&r, &m, 1, 1).unwrap();
        assert_eq!(r3.members(), vec![1]);

        assert!(restrict(&full, &m, 5, 0).is_err());
        assert!(restrict(&full, &m, 0, 9).is_err());
    }

    #[test]
    fn prior_mass_examples() {
        let (m, prior, _) = fixture_a();
        let full = VersionSpaceMask::full(3);
        assert_eq!(prior_mass(&prior, &full), 1.0);

        let sub = restrict(&full, &m, 0, 0).unwrap();
        assert!((prior_mass(&prior, &sub) - 2.0 / 3.0).abs() < 1e-15);

        let empty = VersionSpaceMask::from_bits(vec![false; 3]);
        assert_eq!(prior_mass(&prior, &empty), 0.0);
    }

    #[test]
    fn disagreement_examples() {
        let (m, _, dist) = fixture_a();
        assert_eq!(disagreement(&m, 0, 0, &dist), 0.0);
        assert_eq!(disagreement(&m, 0, 2, &dist), 1.0);
        assert!((disagreement(&m, 0, 1, &dist) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn regions_examples() {
        let (m, _, _) = fixture_a();
        let items = [0usize, 1];

        let v01 = VersionSpaceMask::from_bits(vec![true, true, false]);
        let (agr, dis) = regions(&v01, &m, &items).unwrap();
        assert_eq!(agr, vec![0]);
        assert_eq!(dis, vec![1]);

        let v2 = VersionSpaceMask::from_bits(vec![false, false, true]);
        let (agr, dis) = regions(&v2, &m, &items).unwrap();
        assert_eq!(agr, vec![0, 1]);
        assert!(dis.is_empty());

        let full = VersionSpaceMask::full(3);
        let (agr, dis) = regions(&full, &m, &items).unwrap();
        assert!(agr.is_empty());
        assert_eq!(dis, vec![0, 1]);

        let empty = VersionSpaceMask::from_bits(vec![false; 3]);
        assert!(matches!(regions(&empty, &m, &items), Err(Error::EmptyVersionSpace(_))));
    }

    #[test]
    fn majority_vote_examples() {
        let (m, prior, _) = fixture_a();
        let items = [0usize, 1];

        let full = VersionSpaceMask::full(3);
        assert_eq!(majority_vote(&full, &prior, &m, &items).unwrap(), vec![0, 1]);

        let v2 = VersionSpaceMask::from_bits(vec![false, false, true]);
        assert_eq!(majority_vote(&v2, &prior, &m, &items).unwrap(), vec![1, 1]);

        // Exact tie on x1 between classes 0 and 1: smallest class wins.
        let v01 = VersionSpaceMask::from_bits(vec![true, true, false]);
        assert_eq!(majority_vote(&v01, &prior, &m, &[1]).unwrap(), vec![0]);

        let empty = VersionSpaceMask::from_bits(vec![false; 3]);
        assert!(majority_vote(&empty, &prior, &m, &items).is_err());
    }

    #[test]
    fn majority_vote_uses_soft_probs() {
        // Two hypotheses, one item, three classes. Hard labels 0 and 1, but
        // hypothesis 0's soft mass leans toward class 1 enough to flip the
        // aggregate away from the hard-label majority.
        let m = LabelingMatrix::from_rows(vec![vec![0], vec![1]], 3)
            .unwrap()
            .with_soft_probs(vec![0.42, 0.40, 0.18, 0.05, 0.90, 0.05])
            .unwrap();
        let prior = Prior::uniform(2);
        let full = VersionSpaceMask::full(2);
        // Aggregate: class0 = .235, class1 = .65, class2 = .115.
        assert_eq!(majority_vote(&full, &prior, &m, &[0]).unwrap(), vec![1]);
    }

    #[test]
    fn soft_probs_validation() {
        let m = LabelingMatrix::from_rows(vec![vec![0], vec![1]], 2).unwrap();
        // Row sums off by more than the tolerance.
        assert!(m.clone().with_soft_probs(vec![0.7, 0.2, 0.1, 0.9]).is_err());
        // Argmax disagrees with the hard label.
        assert!(m.clone().with_soft_probs(vec![0.3, 0.7, 0.1, 0.9]).is_err());
        // Tie broken to the smallest class index must match the hard label.
        assert!(m.clone().with_soft_probs(vec![0.5, 0.5, 0.1, 0.9]).is_ok());
        let m2 = LabelingMatrix::from_rows(vec![vec![1], vec![1]], 2).unwrap();
        assert!(m2.with_soft_probs(vec![0.5, 0.5, 0.1, 0.9]).is_err());
    }

    #[test]
    fn wrong_agreement_examples() {
        let (m, _, dist) = fixture_a();
        let bayes = BayesLabeling::of_row(&m, 2);

        let v01 = VersionSpaceMask::from_bits(vec![true, true, false]);
        assert!((wrong_agreement(&v01, &m, &bayes, &dist).unwrap() - 0.5).abs() < 1e-15);

        let v2 = VersionSpaceMask::from_bits(vec![false, false, true]);
        assert_eq!(wrong_agreement(&v2, &m, &bayes, &dist).unwrap(), 0.0);

        let full = VersionSpaceMask::full(3);
        assert_eq!(wrong_agreement(&full, &m, &bayes, &dist).unwrap(), 0.0);
    }

    #[test]
    fn matrix_text_round_trip() {
        let (m, _, _) = fixture_a();
        let text = m.to_text();
        assert_eq!(text, "3 2 2\n0 0\n0 1\n1 1\n");
        let back = LabelingMatrix::from_text(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn matrix_text_rejects_malformed() {
        assert!(LabelingMatrix::from_text("").is_err());
        assert!(LabelingMatrix::from_text("3 2\n0 0\n").is_err());
        assert!(LabelingMatrix::from_text("1 2 2\n0 0 0\n").is_err());
        assert!(LabelingMatrix::from_text("1 2 2\n0 7\n").is_err());
        assert!(LabelingMatrix::from_text("2 2 2\n0 0\n").is_err());
    }

    #[test]
    fn soft_sidecar_round_trip() {
        let m = LabelingMatrix::from_rows(vec![vec![0, 1], vec![1, 0]], 2)
            .unwrap()
            .with_soft_probs(vec![0.9, 0.1, 0.2, 0.8, 0.4, 0.6, 0.7, 0.3])
            .unwrap();
        let text = m.soft_probs_to_text().unwrap();
        let bare = LabelingMatrix::from_rows(vec![vec![0, 1], vec![1, 0]], 2).unwrap();
        let back = bare.with_soft_probs_text(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn query_set_rejects_duplicates() {
        let mut q = QuerySet::new();
        q.push(3, 1).unwrap();
        assert!(q.push(3, 0).is_err());
    }

    proptest! {
        // Composition: restricting one query at a time equals the mask of the
        // whole query set.
        #[test]
        fn mask_composition(seed in 0u64..500) {
            let (m, q) = crate::testutil::random_instance_with_queries(seed);
            let whole = consistent_mask(&m, &q).unwrap();
            let mut step = VersionSpaceMask::full(m.num_hypotheses());
            for (x, y) in q.iter() {
                step = restrict(&step, &m, x, y).unwrap();
            }
            prop_assert_eq!(whole, step);
        }

        // Prior mass never increases under restriction.
        #[test]
        fn restriction_is_monotone(seed in 0u64..500) {
            let (m, q) = crate::testutil::random_instance_with_queries(seed);
            let prior = crate::testutil::random_prior(m.num_hypotheses(), seed ^ 0x9e37);
            let mut mask = VersionSpaceMask::full(m.num_hypotheses());
            let mut mass = prior_mass(&prior, &mask);
            for (x, y) in q.iter() {
                mask = restrict(&mask, &m, x, y).unwrap();
                let next = prior_mass(&prior, &mask);
                prop_assert!(next <= mass + 1e-15);
                mass = next;
            }
        }

        // The disagreement probability is a pseudo-metric: symmetry, zero on
        // identical rows, and the triangle inequality over all triples.
        #[test]
        fn disagreement_is_pseudo_metric(seed in 0u64..200) {
            let (m, _, dist) = crate::testutil::random_instance(seed, 50, 20, 4);
            let n = m.num_hypotheses();
            let mut d = vec![0.0f64; n * n];
            for a in 0..n {
                for b in 0..n {
                    d[a * n + b] = disagreement(&m, a, b, &dist);
                }
            }
            for a in 0..n {
                prop_assert_eq!(d[a * n + a], 0.0);
                for b in 0..n {
                    prop_assert_eq!(d[a * n + b], d[b * n + a]);
                    for c in 0..n {
                        prop_assert!(d[a * n + b] <= d[a * n + c] + d[c * n + b] + 1e-12);
                    }
                }
            }
        }

        // A ground truth that sits inside the version space is never wrongly
        // agreed upon.
        #[test]
        fn truth_in_space_has_zero_wrong_agreement(seed in 0u64..200) {
            let (m, mask, dist) = crate::testutil::random_masked_instance(seed, 20, 10, 3);
            let member = mask.members()[seed as usize % mask.count()];
            let bayes = BayesLabeling::of_row(&m, member);
            prop_assert_eq!(wrong_agreement(&mask, &m, &bayes, &dist).unwrap(), 0.0);
        }

        // The vote of a singleton version space is that hypothesis's row.
        #[test]
        fn singleton_vote_is_row(seed in 0u64..200) {
            let (m, _, _) = crate::testutil::random_instance(seed, 10, 6, 4);
            let prior = Prior::uniform(m.num_hypotheses());
            let h = seed as usize % m.num_hypotheses();
            let mut bits = vec![false; m.num_hypotheses()];
            bits[h] = true;
            let mask = VersionSpaceMask::from_bits(bits);
            let items: Vec<usize> = (0..m.num_items()).collect();
            let vote = majority_vote(&mask, &prior, &m, &items).unwrap();
            prop_assert_eq!(vote.as_slice(), m.row(h));
        }
    }
}

//! Synthetic hypothesis classes with planted ground truth, and a
//! biased-sampler wrapper that hides a neighborhood of the truth to emulate a
//! learner whose reachable version space is biased.
//!
//! Generated classes are effective hypothesis spaces: duplicate labelings are
//! collapsed, so each row is a distinct labeling of the pool.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::core::{BayesLabeling, ItemDistribution, LabelingMatrix, VersionSpaceMask};
use crate::error::{Error, Result};

/// Default cap on generated hypothesis counts.
pub const DEFAULT_MAX_HYPOTHESES: usize = 1 << 16;

/// A hypothesis-class recipe plus its planted truth rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ClassSpec {
    /// `n` items on a line; hypothesis `t` labels item `i` positive iff
    /// `i >= t`, for every cut position `t` in `0..=n`. The planted truth is
    /// the cut at `target`.
    #[serde(rename = "thresholds")]
    Thresholds { n: usize, target: usize },
    /// All interval indicators over `n` items: the empty labeling plus every
    /// inclusive `[a, b]`. The truth is `target` (`None` for the empty
    /// interval).
    #[serde(rename = "intervals")]
    Intervals { n: usize, target: Option<(usize, usize)> },
    /// Random linear separators over a `side x side` grid of points,
    /// deduplicated; the truth is the generated row at `target_index`
    /// (modulo the deduplicated count).
    #[serde(rename = "grid")]
    GridHalfspaces { side: usize, count: usize, seed: u64, target_index: usize },
    /// Independent uniform labels per row. With `planted` the truth labeling
    /// is inserted as a row (realizable); without it the truth stays outside
    /// the matrix almost surely (non-realizable).
    #[serde(rename = "random")]
    RandomClass {
        m: usize,
        n: usize,
        c: usize,
        seed: u64,
        #[serde(default = "default_planted")]
        planted: bool,
    },
}

fn default_planted() -> bool {
    true
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassSpec::Thresholds { n, target } => write!(f, "thresholds({n},{target})"),
            ClassSpec::Intervals { n, target: None } => write!(f, "intervals({n})"),
            ClassSpec::Intervals { n, target: Some((a, b)) } => {
                write!(f, "intervals({n},{a},{b})")
            }
            ClassSpec::GridHalfspaces { side, count, seed, target_index } => {
                write!(f, "grid({side},{count},{seed},{target_index})")
            }
            ClassSpec::RandomClass { m, n, c, seed, planted } => {
                write!(f, "random({m},{n},{c},{seed},{})", u8::from(*planted))
            }
        }
    }
}

impl FromStr for ClassSpec {
    type Err = Error;

    /// Parses compact spec strings such as `thresholds(64)`,
    /// `thresholds(64,5)`, `intervals(8)`, `intervals(8,2,5)`,
    /// `grid(4,50,7)`, `grid(4,50,7,0)`, `random(20,10,3,1)` and
    /// `random(20,10,3,1,0)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::Parse(format!("class spec `{s}` is missing `(`")))?;
        if !s.ends_with(')') {
            return Err(Error::Parse(format!("class spec `{s}` is missing `)`")));
        }
        let name = &s[..open];
        let args: Vec<u64> = s[open + 1..s.len() - 1]
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim().parse().map_err(|_| Error::Parse(format!("bad class argument `{t}`")))
            })
            .collect::<Result<_>>()?;
        match (name, args.as_slice()) {
            ("thresholds", [n]) => {
                Ok(ClassSpec::Thresholds { n: *n as usize, target: (*n as usize) / 2 })
            }
            ("thresholds", [n, t]) => {
                Ok(ClassSpec::Thresholds { n: *n as usize, target: *t as usize })
            }
            ("intervals", [n]) => Ok(ClassSpec::Intervals { n: *n as usize, target: None }),
            ("intervals", [n, a, b]) => Ok(ClassSpec::Intervals {
                n: *n as usize,
                target: Some((*a as usize, *b as usize)),
            }),
            ("grid" | "grid_halfspaces", [side, count, seed]) => Ok(ClassSpec::GridHalfspaces {
                side: *side as usize,
                count: *count as usize,
                seed: *seed,
                target_index: 0,
            }),
            ("grid" | "grid_halfspaces", [side, count, seed, target]) => {
                Ok(ClassSpec::GridHalfspaces {
                    side: *side as usize,
                    count: *count as usize,
                    seed: *seed,
                    target_index: *target as usize,
                })
            }
            ("random" | "random_class", [m, n, c, seed]) => Ok(ClassSpec::RandomClass {
                m: *m as usize,
                n: *n as usize,
                c: *c as usize,
                seed: *seed,
                planted: true,
            }),
            ("random" | "random_class", [m, n, c, seed, planted]) => Ok(ClassSpec::RandomClass {
                m: *m as usize,
                n: *n as usize,
                c: *c as usize,
                seed: *seed,
                planted: *planted != 0,
            }),
            _ => Err(Error::Parse(format!("unrecognized class spec `{s}`"))),
        }
    }
}

fn dedup_rows(rows: Vec<Vec<u16>>) -> Vec<Vec<u16>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        if seen.insert(row.clone()) {
            out.push(row);
        }
    }
    out
}

/// Builds the labeling matrix and planted ground truth for a class spec,
/// capped at [`DEFAULT_MAX_HYPOTHESES`] rows.
pub fn build_class(spec: &ClassSpec) -> Result<(LabelingMatrix, BayesLabeling)> {
    build_class_with_limit(spec, DEFAULT_MAX_HYPOTHESES)
}

/// As [`build_class`] with an explicit cap on the generated hypothesis count.
pub fn build_class_with_limit(
    spec: &ClassSpec,
    max_hypotheses: usize,
) -> Result<(LabelingMatrix, BayesLabeling)> {
    let check_cap = |m: usize| {
        if m > max_hypotheses {
            Err(Error::ScaleLimit(format!(
                "class would have {m} hypotheses, cap is {max_hypotheses}"
            )))
        } else {
            Ok(())
        }
    };
    match *spec {
        ClassSpec::Thresholds { n, target } => {
            if n == 0 {
                return Err(Error::InvalidValue("thresholds class needs items".into()));
            }
            if target > n {
                return Err(Error::InvalidValue(format!(
                    "threshold target {target} out of range 0..={n}"
                )));
            }
            check_cap(n + 1)?;
            // Row m flips to positive on the last m items, i.e. the cut sits
            // at t = n - m; ascending rows read (0..0), (0..01), ... (1..1).
            let rows: Vec<Vec<u16>> = (0..=n)
                .map(|m| (0..n).map(|i| u16::from(i >= n - m)).collect())
                .collect();
            let truth = rows[n - target].clone();
            let matrix = LabelingMatrix::from_rows(rows, 2)?;
            Ok((matrix, BayesLabeling::new(truth, 2)?))
        }
        ClassSpec::Intervals { n, target } => {
            if n == 0 {
                return Err(Error::InvalidValue("intervals class needs items".into()));
            }
            check_cap(n * (n + 1) / 2 + 1)?;
            let mut rows: Vec<Vec<u16>> = vec![vec![0; n]];
            for a in 0..n {
                for b in a..n {
                    rows.push((0..n).map(|i| u16::from(i >= a && i <= b)).collect());
                }
            }
            let truth = match target {
                None => rows[0].clone(),
                Some((a, b)) => {
                    if a > b || b >= n {
                        return Err(Error::InvalidValue(format!(
                            "interval target ({a},{b}) invalid for {n} items"
                        )));
                    }
                    (0..n).map(|i| u16::from(i >= a && i <= b)).collect()
                }
            };
            let matrix = LabelingMatrix::from_rows(rows, 2)?;
            Ok((matrix, BayesLabeling::new(truth, 2)?))
        }
        ClassSpec::GridHalfspaces { side, count, seed, target_index } => {
            if side < 2 || count == 0 {
                return Err(Error::InvalidValue(
                    "grid class needs side >= 2 and at least one separator".into(),
                ));
            }
            check_cap(count)?;
            let n = side * side;
            let coord = |k: usize| -> f64 { 2.0 * k as f64 / (side - 1) as f64 - 1.0 };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::with_capacity(count);
            for _ in 0..count {
                let w0: f64 = StandardNormal.sample(&mut rng);
                let w1: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = rng.random_range(-1.0..1.0);
                let row: Vec<u16> = (0..n)
                    .map(|i| {
                        let (px, py) = (coord(i / side), coord(i % side));
                        u16::from(w0 * px + w1 * py + b >= 0.0)
                    })
                    .collect();
                rows.push(row);
            }
            let rows = dedup_rows(rows);
            let truth = rows[target_index % rows.len()].clone();
            let matrix = LabelingMatrix::from_rows(rows, 2)?;
            Ok((matrix, BayesLabeling::new(truth, 2)?))
        }
        ClassSpec::RandomClass { m, n, c, seed, planted } => {
            if m == 0 || n == 0 || c < 2 {
                return Err(Error::InvalidValue(
                    "random class needs m >= 1, n >= 1, c >= 2".into(),
                ));
            }
            check_cap(m + 1)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<u16>> =
                (0..m).map(|_| (0..n).map(|_| rng.random_range(0..c) as u16).collect()).collect();
            let truth: Vec<u16> = (0..n).map(|_| rng.random_range(0..c) as u16).collect();
            let mut rows = dedup_rows(rows);
            if planted && !rows.contains(&truth) {
                rows.push(truth.clone());
            }
            let matrix = LabelingMatrix::from_rows(rows, c)?;
            Ok((matrix, BayesLabeling::new(truth, c)?))
        }
    }
}

/// Metric-exclusion bias around the truth: a radius that shrinks as labels
/// accumulate, hitting zero once the whole pool is labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasSpec {
    /// Initial exclusion radius in `[0, 1]`.
    pub r0: f64,
    /// Piecewise-constant decay: `(labels_queried_threshold, radius)` steps,
    /// ascending thresholds, non-increasing radii.
    #[serde(default)]
    pub decay: Vec<(usize, f64)>,
}

impl BiasSpec {
    pub fn new(r0: f64, decay: Vec<(usize, f64)>) -> Result<Self> {
        let spec = Self { r0, decay };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r0) {
            return Err(Error::InvalidValue(format!("bias radius {} outside [0,1]", self.r0)));
        }
        let mut prev_threshold = None;
        let mut prev_r = self.r0;
        for &(threshold, r) in &self.decay {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidValue(format!("bias radius {r} outside [0,1]")));
            }
            if r > prev_r {
                return Err(Error::InvalidValue(
                    "bias decay radii must be non-increasing".into(),
                ));
            }
            if prev_threshold.is_some_and(|p| threshold <= p) {
                return Err(Error::InvalidValue(
                    "bias decay thresholds must be strictly increasing".into(),
                ));
            }
            prev_threshold = Some(threshold);
            prev_r = r;
        }
        Ok(())
    }

    /// Radius in effect after `labels_queried` of `total_items` labels.
    pub fn current_radius(&self, labels_queried: usize, total_items: usize) -> f64 {
        if labels_queried >= total_items {
            return 0.0;
        }
        let mut r = self.r0;
        for &(threshold, value) in &self.decay {
            if labels_queried >= threshold {
                r = value;
            }
        }
        r
    }
}

/// Emulates a biased sampler: hypotheses closer than the current radius to the
/// truth are unreachable, except the zone member nearest the exclusion
/// boundary, which always survives. Never empties a nonempty input mask.
pub fn biased_mask(
    mask: &VersionSpaceMask,
    labelings: &LabelingMatrix,
    bayes: &BayesLabeling,
    bias: &BiasSpec,
    labels_queried: usize,
    dist: &ItemDistribution,
) -> VersionSpaceMask {
    assert!(!mask.is_empty(), "biased sampler needs a nonempty version space");
    let r = bias.current_radius(labels_queried, labelings.num_items());
    if r <= 0.0 {
        return mask.clone();
    }
    let mut zone: Vec<(usize, f64)> = Vec::new();
    for h in mask.iter_members() {
        let d = crate::core::labeling_disagreement(labelings, h, bayes.as_slice(), dist);
        if d < r {
            zone.push((h, d));
        }
    }
    if zone.is_empty() {
        return mask.clone();
    }
    // Retain the excluded hypothesis with the largest distance (smallest index
    // on ties): the sampler's support keeps its edge next to the zone.
    let mut keep = zone[0].0;
    let mut keep_d = zone[0].1;
    for &(h, d) in &zone[1..] {
        if d > keep_d {
            keep = h;
            keep_d = d;
        }
    }
    let mut bits: Vec<bool> = (0..mask.len()).map(|h| mask.contains(h)).collect();
    for &(h, _) in &zone {
        bits[h] = h == keep;
    }
    VersionSpaceMask::from_bits(bits)
}

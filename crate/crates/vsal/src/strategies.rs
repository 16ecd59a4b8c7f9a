//! Query-selection rules and the greedy batch loop.
//!
//! Two families of rules score an unlabeled candidate:
//!
//! - mass reduction, maximized: Gibbs error (`ge`) and variation ratio (`vr`),
//!   whose argmaxes coincide with the expected and worst-case marginal gains
//!   of the mass-reduction utility (verified by [`equivalence_audit`]);
//! - diameter reduction, minimized: the worst case over achievable labels of
//!   the induced subspace's diameter (`pwd`, `gvd`), optionally weighted by
//!   the subspace's prior mass (`m1-pwd`, `m1-gvd`) or its square (`m2-pwd`).
//!
//! Either family runs on the exact mask or on a sampled ensemble; a `random`
//! baseline draws uniformly. Ties always resolve to the smallest item index,
//! then the smallest class label.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core::{
    self, BayesLabeling, ItemDistribution, LabelingMatrix, Prior, VersionSpaceMask,
};
use crate::error::{Error, Result};
use crate::estimators::{self, Ensemble};
use crate::measures::{self, MeasureContext};

/// The querying rule. String forms are the CLI names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "ge")]
    MaxGibbsError,
    #[serde(rename = "vr")]
    MaxVariationRatio,
    #[serde(rename = "pwd")]
    MinWcPwd,
    #[serde(rename = "gvd")]
    MinWcGvd,
    #[serde(rename = "m2-pwd")]
    MinWcM2Pwd,
    #[serde(rename = "m1-pwd")]
    MinWcM1Pwd,
    #[serde(rename = "m1-gvd")]
    MinWcM1Gvd,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::Random,
        StrategyKind::MaxGibbsError,
        StrategyKind::MaxVariationRatio,
        StrategyKind::MinWcPwd,
        StrategyKind::MinWcGvd,
        StrategyKind::MinWcM2Pwd,
        StrategyKind::MinWcM1Pwd,
        StrategyKind::MinWcM1Gvd,
    ];

    /// Diameter-family rules are minimized; mass-family rules are maximized.
    pub fn is_minimizing(self) -> bool {
        matches!(
            self,
            StrategyKind::MinWcPwd
                | StrategyKind::MinWcGvd
                | StrategyKind::MinWcM2Pwd
                | StrategyKind::MinWcM1Pwd
                | StrategyKind::MinWcM1Gvd
        )
    }

    fn is_pwd_family(self) -> bool {
        matches!(
            self,
            StrategyKind::MinWcPwd | StrategyKind::MinWcM2Pwd | StrategyKind::MinWcM1Pwd
        )
    }

    /// Exponent on the subspace prior mass: 0 plain, 1 singly, 2 doubly
    /// weighted.
    fn mass_exponent(self) -> i32 {
        match self {
            StrategyKind::MinWcM1Pwd | StrategyKind::MinWcM1Gvd => 1,
            StrategyKind::MinWcM2Pwd => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StrategyKind::Random => "random",
            StrategyKind::MaxGibbsError => "ge",
            StrategyKind::MaxVariationRatio => "vr",
            StrategyKind::MinWcPwd => "pwd",
            StrategyKind::MinWcGvd => "gvd",
            StrategyKind::MinWcM2Pwd => "m2-pwd",
            StrategyKind::MinWcM1Pwd => "m1-pwd",
            StrategyKind::MinWcM1Gvd => "m1-gvd",
        };
        f.write_str(name)
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(StrategyKind::Random),
            "ge" => Ok(StrategyKind::MaxGibbsError),
            "vr" => Ok(StrategyKind::MaxVariationRatio),
            "pwd" => Ok(StrategyKind::MinWcPwd),
            "gvd" => Ok(StrategyKind::MinWcGvd),
            "m2-pwd" => Ok(StrategyKind::MinWcM2Pwd),
            "m1-pwd" => Ok(StrategyKind::MinWcM1Pwd),
            "m1-gvd" => Ok(StrategyKind::MinWcM1Gvd),
            other => Err(Error::InvalidValue(format!("unknown strategy `{other}`"))),
        }
    }
}

/// How candidate scores are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Enumerate the explicit mask.
    Exact,
    /// Score a sampled ensemble of this size.
    Ensemble { size: usize },
}

/// A querying rule plus its evaluation backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub backend: Backend,
}

impl StrategySpec {
    pub fn exact(kind: StrategyKind) -> Self {
        Self { kind, backend: Backend::Exact }
    }

    pub fn ensemble(kind: StrategyKind, size: usize) -> Self {
        Self { kind, backend: Backend::Ensemble { size } }
    }

    pub fn validate(&self) -> Result<()> {
        if let Backend::Ensemble { size } = self.backend {
            if size == 0 {
                return Err(Error::InvalidValue("ensemble size must be at least 1".into()));
            }
            if self.kind.is_pwd_family() && size < 2 {
                return Err(Error::InvalidValue(format!(
                    "strategy `{}` needs an ensemble of at least 2, got {size}",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

/// Score of one candidate; diameter-family scores carry the label attaining
/// the worst case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCandidate {
    pub item: usize,
    pub score: f64,
    pub worst_label: Option<u16>,
}

/// Audit record of one greedy pick.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// The item attaining the rule's optimum, smallest index on ties.
    pub chosen: usize,
    /// Scores of every candidate still available at this pick.
    pub scores: Vec<ScoredCandidate>,
}

/// Result of one batch round: the picks in order, and the ensemble that scored
/// them when the backend samples.
#[derive(Debug, Clone)]
pub struct BatchSelection {
    pub selections: Vec<Selection>,
    pub ensemble: Option<Ensemble>,
}

/// Inputs to one selection round.
#[derive(Debug, Clone, Copy)]
pub struct SelectionState<'a> {
    pub labelings: &'a LabelingMatrix,
    pub prior: &'a Prior,
    pub mask: &'a VersionSpaceMask,
    pub dist: &'a ItemDistribution,
    /// Unlabeled items eligible for querying, ascending.
    pub candidates: &'a [usize],
    /// Ground truth; required by `BatchMode::RefreshMask`.
    pub bayes: Option<&'a BayesLabeling>,
    /// Pre-drawn ensemble to reuse; when `None` and the backend samples, the
    /// batch draws its own from the mask.
    pub ensemble: Option<&'a Ensemble>,
}

/// In-batch labeling policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BatchMode {
    /// One ensemble (or one frozen mask view) scores the whole batch; picked
    /// items are only excluded from the candidate set.
    #[default]
    #[serde(rename = "literal")]
    Literal,
    /// After each in-batch pick the true label is applied and the exact mask
    /// re-restricted. Exact backend only.
    #[serde(rename = "refresh-mask")]
    RefreshMask,
}

/// Exact-backend score of `kind` at candidate `x`. Mass-family rules return
/// the per-item measure; diameter-family rules return the worst case over
/// achievable labels of the weighted subspace diameter.
pub fn score_exact(kind: StrategyKind, ctx: &MeasureContext, x: usize) -> Result<ScoredCandidate> {
    match kind {
        StrategyKind::Random => {
            Err(Error::InvalidValue("the random strategy has no deterministic score".into()))
        }
        StrategyKind::MaxGibbsError => Ok(ScoredCandidate {
            item: x,
            score: measures::gibbs_error(ctx, x)?,
            worst_label: None,
        }),
        StrategyKind::MaxVariationRatio => Ok(ScoredCandidate {
            item: x,
            score: measures::variation_ratio(ctx, x)?,
            worst_label: None,
        }),
        _ => {
            let exponent = kind.mass_exponent();
            let mut best: Option<(f64, u16)> = None;
            for y in 0..ctx.labelings.num_classes() as u16 {
                let sub = core::restrict(ctx.mask, ctx.labelings, x, y)?;
                let mass = core::prior_mass(ctx.prior, &sub);
                // Only labels achievable with positive conditional mass
                // participate in the worst case.
                if mass <= 0.0 {
                    continue;
                }
                let sub_ctx = MeasureContext::new(ctx.labelings, ctx.prior, &sub, ctx.dist)?;
                let diam = if kind.is_pwd_family() {
                    measures::pwd(&sub_ctx)?
                } else {
                    measures::gvd(&sub_ctx)?
                };
                let value = mass.powi(exponent) * diam;
                if best.is_none_or(|(s, _)| value > s) {
                    best = Some((value, y));
                }
            }
            let (score, worst) = best.ok_or(Error::EmptyVersionSpace(
                "no label is achievable by the version space",
            ))?;
            Ok(ScoredCandidate { item: x, score, worst_label: Some(worst) })
        }
    }
}

/// Ensemble-backend score of `kind` at candidate `x`. Diameter-family rules
/// partition the draws by their predicted label at `x` and estimate each
/// part's diameter; parts too small to carry spread contribute zero.
pub fn score_ensemble(
    kind: StrategyKind,
    ens: &Ensemble,
    labelings: &LabelingMatrix,
    dist: &ItemDistribution,
    x: usize,
) -> Result<ScoredCandidate> {
    match kind {
        StrategyKind::Random => {
            Err(Error::InvalidValue("the random strategy has no deterministic score".into()))
        }
        StrategyKind::MaxGibbsError => Ok(ScoredCandidate {
            item: x,
            score: estimators::ge_hat(ens, labelings, x),
            worst_label: None,
        }),
        StrategyKind::MaxVariationRatio => Ok(ScoredCandidate {
            item: x,
            score: estimators::vr_hat(ens, labelings, x),
            worst_label: None,
        }),
        _ => {
            let exponent = kind.mass_exponent();
            let me = ens.size() as f64;
            let mut parts: Vec<Vec<usize>> = vec![Vec::new(); labelings.num_classes()];
            for &h in ens.members() {
                parts[labelings.label(h, x) as usize].push(h);
            }
            let mut best: Option<(f64, u16)> = None;
            for (y, part) in parts.iter().enumerate() {
                if part.is_empty() {
                    continue;
                }
                let freq = part.len() as f64 / me;
                let diam = if kind.is_pwd_family() {
                    if part.len() < 2 {
                        0.0
                    } else {
                        let sub = Ensemble::from_members(part.clone(), ens.provenance())?;
                        estimators::pwd_hat(&sub, labelings, dist)?
                    }
                } else {
                    let sub = Ensemble::from_members(part.clone(), ens.provenance())?;
                    estimators::gvd_hat(&sub, labelings, dist)?
                };
                let value = freq.powi(exponent) * diam;
                if best.is_none_or(|(s, _)| value > s) {
                    best = Some((value, y as u16));
                }
            }
            let (score, worst) = best.ok_or(Error::EmptyVersionSpace(
                "ensemble predicts no label at the candidate",
            ))?;
            Ok(ScoredCandidate { item: x, score, worst_label: Some(worst) })
        }
    }
}

fn pick_optimum(scores: &[ScoredCandidate], minimizing: bool) -> usize {
    debug_assert!(!scores.is_empty());
    let mut best = 0usize;
    for (k, s) in scores.iter().enumerate().skip(1) {
        let better = if minimizing {
            s.score < scores[best].score
        } else {
            s.score > scores[best].score
        };
        // Candidates are scored in ascending item order, so a strict
        // comparison keeps the smallest index among ties.
        if better {
            best = k;
        }
    }
    best
}

fn score_candidates(
    spec: &StrategySpec,
    state: &SelectionState,
    ensemble: Option<&Ensemble>,
    remaining: &[usize],
) -> Result<Vec<ScoredCandidate>> {
    match spec.backend {
        Backend::Exact => {
            let ctx =
                MeasureContext::new(state.labelings, state.prior, state.mask, state.dist)?;
            remaining.iter().map(|&x| score_exact(spec.kind, &ctx, x)).collect()
        }
        Backend::Ensemble { .. } => {
            let ens = ensemble.expect("ensemble backend scored without an ensemble");
            remaining
                .iter()
                .map(|&x| score_ensemble(spec.kind, ens, state.labelings, state.dist, x))
                .collect()
        }
    }
}

/// Greedily selects `k` items by the rule's arg-optimum, excluding items
/// already picked. In [`BatchMode::Literal`] the scores are computed once per
/// round from one frozen view (mask or drawn ensemble); in
/// [`BatchMode::RefreshMask`] the exact mask is re-restricted with the true
/// label after each pick.
pub fn select_batch(
    spec: &StrategySpec,
    state: &SelectionState,
    k: usize,
    seed: u64,
    mode: BatchMode,
) -> Result<BatchSelection> {
    spec.validate()?;
    if state.mask.is_empty() {
        return Err(Error::EmptyVersionSpace("cannot select from an empty version space"));
    }
    if state.candidates.len() < k {
        return Err(Error::InvalidValue(format!(
            "batch of {k} requested but only {} candidates remain",
            state.candidates.len()
        )));
    }
    if mode == BatchMode::RefreshMask {
        if !matches!(spec.backend, Backend::Exact) {
            return Err(Error::InvalidValue(
                "refresh-mask batches require the exact backend".into(),
            ));
        }
        if state.bayes.is_none() {
            return Err(Error::InvalidValue(
                "refresh-mask batches need a ground-truth labeling".into(),
            ));
        }
    }

    // The random baseline assigns each candidate a seeded priority and takes
    // the top k; distinct priorities make each pick uniform over candidates.
    if spec.kind == StrategyKind::Random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scored: Vec<ScoredCandidate> = state
            .candidates
            .iter()
            .map(|&x| ScoredCandidate { item: x, score: rng.random::<f64>(), worst_label: None })
            .collect();
        let mut selections = Vec::with_capacity(k);
        for _ in 0..k {
            let best = pick_optimum(&scored, false);
            let chosen = scored[best].item;
            selections.push(Selection { chosen, scores: scored.clone() });
            scored.remove(best);
        }
        return Ok(BatchSelection { selections, ensemble: None });
    }

    let drawn;
    let ensemble: Option<&Ensemble> = match spec.backend {
        Backend::Exact => None,
        Backend::Ensemble { size } => match state.ensemble {
            Some(e) => Some(e),
            None => {
                let ctx =
                    MeasureContext::new(state.labelings, state.prior, state.mask, state.dist)?;
                drawn = estimators::draw_ensemble(&ctx, size, seed)?;
                Some(&drawn)
            }
        },
    };

    let minimizing = spec.kind.is_minimizing();
    let mut selections = Vec::with_capacity(k);

    match mode {
        BatchMode::Literal => {
            let mut scored = score_candidates(spec, state, ensemble, state.candidates)?;
            for _ in 0..k {
                let best = pick_optimum(&scored, minimizing);
                let chosen = scored[best].item;
                selections.push(Selection { chosen, scores: scored.clone() });
                scored.remove(best);
            }
        }
        BatchMode::RefreshMask => {
            let bayes = state.bayes.expect("checked above");
            let mut mask = state.mask.clone();
            let mut remaining: Vec<usize> = state.candidates.to_vec();
            for _ in 0..k {
                let step = SelectionState { mask: &mask, ..*state };
                let scored = score_candidates(spec, &step, None, &remaining)?;
                let best = pick_optimum(&scored, minimizing);
                let chosen = scored[best].item;
                selections.push(Selection { chosen, scores: scored });
                remaining.retain(|&x| x != chosen);
                mask = core::restrict(&mask, state.labelings, chosen, bayes.label(chosen))?;
                if mask.is_empty() {
                    return Err(Error::EmptyVersionSpace(
                        "refresh-mask batch emptied the version space",
                    ));
                }
            }
        }
    }

    Ok(BatchSelection { selections, ensemble: ensemble.cloned() })
}

/// Witnesses for the marginal-gain equivalences: the argmax index sets of the
/// per-item measures and of their mass-scaled marginal-gain forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub avg_ok: bool,
    pub wc_ok: bool,
    pub ge_argmax: Vec<usize>,
    pub avg_gain_argmax: Vec<usize>,
    pub vr_argmax: Vec<usize>,
    pub wc_gain_argmax: Vec<usize>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.avg_ok && self.wc_ok
    }
}

fn argmax_set(values: &[(usize, f64)]) -> Vec<usize> {
    let max = values.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    values.iter().filter(|&&(_, v)| v == max).map(|&(x, _)| x).collect()
}

/// Verifies that maximizing the Gibbs error (resp. variation ratio) picks the
/// same items as maximizing the expected (resp. worst-case) marginal gain,
/// comparing whole argmax sets before any tie-breaking.
pub fn equivalence_audit(ctx: &MeasureContext, candidates: &[usize]) -> Result<AuditReport> {
    let mut ge = Vec::with_capacity(candidates.len());
    let mut avg = Vec::with_capacity(candidates.len());
    let mut vr = Vec::with_capacity(candidates.len());
    let mut wc = Vec::with_capacity(candidates.len());
    for &x in candidates {
        ge.push((x, measures::gibbs_error(ctx, x)?));
        avg.push((x, measures::marginal_gain_avg(ctx, x)?));
        vr.push((x, measures::variation_ratio(ctx, x)?));
        wc.push((x, measures::marginal_gain_wc(ctx, x)?));
    }
    let ge_argmax = argmax_set(&ge);
    let avg_gain_argmax = argmax_set(&avg);
    let vr_argmax = argmax_set(&vr);
    let wc_gain_argmax = argmax_set(&wc);
    Ok(AuditReport {
        avg_ok: ge_argmax == avg_gain_argmax,
        wc_ok: vr_argmax == wc_gain_argmax,
        ge_argmax,
        avg_gain_argmax,
        vr_argmax,
        wc_gain_argmax,
    })
}

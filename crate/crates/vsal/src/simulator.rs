//! The active-learning experiment loop: seeded runs of greedy selection,
//! oracle labeling, version-space update, and per-round metric logging, plus
//! aggregation across strategies.
//!
//! Runs are deterministic functions of the configuration and the seed. Seeds
//! are independent and may execute concurrently; within a run, rounds are
//! strictly sequential.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core::{
    self, BayesLabeling, ItemDistribution, LabelingMatrix, Prior, QuerySet, VersionSpaceMask,
};
use crate::error::{Error, Result};
use crate::estimators::{self, Ensemble};
use crate::fmt_g17;
use crate::measures::{self, MeasureContext};
use crate::samplers::{self, BiasSpec, ClassSpec};
use crate::strategies::{
    Backend, BatchMode, SelectionState, StrategyKind, StrategySpec, select_batch,
};

/// Whether strategies enumerate the mask or score a sampled ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendChoice {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "ensemble")]
    Ensemble,
}

/// Strategy entry of a config file; the ensemble size lives at the top level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub backend: BackendChoice,
}

fn default_schema() -> u32 {
    1
}

/// A complete experiment description, loadable from versioned JSON
/// (`schema: 1`, unknown fields rejected).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub class: ClassSpec,
    pub strategy: StrategyConfig,
    /// Query rounds after the initial draw.
    pub rounds: usize,
    /// Labels queried per round.
    pub batch: usize,
    /// Ensemble size for sampled backends and snapshot dumps.
    pub ensemble_size: usize,
    /// Initial labeled set size, drawn class-balanced.
    pub initial_labels: usize,
    /// Items reserved for selection-time estimation; defaults to the pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_items: Option<Vec<usize>>,
    /// Items reserved for reported metrics; defaults to the pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_items: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<BiasSpec>,
    #[serde(default)]
    pub batch_mode: BatchMode,
    /// Materialize the per-round ensembles for later embedding.
    #[serde(default)]
    pub dump_ensembles: bool,
    pub seeds: Vec<u64>,
    /// Output directory for the CLI runner.
    pub output: String,
}

/// Everything derived from a config that is shared across seeds.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub labelings: LabelingMatrix,
    pub bayes: BayesLabeling,
    pub prior: Prior,
    /// Queryable items: the pool minus explicitly reserved eval/test items.
    pub pool: Vec<usize>,
    pub eval_dist: ItemDistribution,
    pub test_dist: ItemDistribution,
    pub strategy: StrategySpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    fn reserved_items(&self, n: usize) -> Result<Vec<bool>> {
        let mut reserved = vec![false; n];
        for (name, list) in [("eval_items", &self.eval_items), ("test_items", &self.test_items)] {
            if let Some(items) = list {
                if items.is_empty() {
                    return Err(Error::InvalidConfig(format!("{name} must not be empty")));
                }
                for &i in items {
                    if i >= n {
                        return Err(Error::InvalidConfig(format!(
                            "{name} index {i} out of range for {n} items"
                        )));
                    }
                }
            }
        }
        if let (Some(eval), Some(test)) = (&self.eval_items, &self.test_items) {
            if eval.iter().any(|i| test.contains(i)) {
                return Err(Error::InvalidConfig(
                    "eval_items and test_items must be disjoint".into(),
                ));
            }
        }
        for list in [&self.eval_items, &self.test_items].into_iter().flatten() {
            for &i in list {
                reserved[i] = true;
            }
        }
        Ok(reserved)
    }

    /// Validates the config and builds the shared experiment pieces.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        if self.schema != 1 {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema {} (expected 1)",
                self.schema
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if self.rounds > 0 && self.batch == 0 {
            return Err(Error::InvalidConfig("batch must be at least 1".into()));
        }
        let strategy = self.strategy_spec();
        strategy.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if matches!(strategy.backend, Backend::Ensemble { .. }) && self.ensemble_size < 2 {
            return Err(Error::InvalidConfig(
                "ensemble backend needs ensemble_size >= 2".into(),
            ));
        }
        if self.dump_ensembles && self.ensemble_size == 0 {
            return Err(Error::InvalidConfig(
                "dump_ensembles needs a positive ensemble_size".into(),
            ));
        }
        if self.batch_mode == BatchMode::RefreshMask
            && !matches!(strategy.backend, Backend::Exact)
        {
            return Err(Error::InvalidConfig(
                "refresh-mask batches require the exact backend".into(),
            ));
        }
        if let Some(bias) = &self.bias {
            bias.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }

        let (labelings, bayes) =
            samplers::build_class(&self.class).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let n = labelings.num_items();
        let reserved = self.reserved_items(n)?;
        let pool: Vec<usize> = (0..n).filter(|&i| !reserved[i]).collect();
        if pool.is_empty() {
            return Err(Error::InvalidConfig("reserved splits leave an empty pool".into()));
        }
        let budget = self.rounds * self.batch + self.initial_labels;
        if budget > pool.len() {
            return Err(Error::InvalidConfig(format!(
                "label budget violates rounds*batch + initial_labels <= pool size: \
                 {}*{} + {} = {budget} > {}",
                self.rounds,
                self.batch,
                self.initial_labels,
                pool.len()
            )));
        }
        let eval_dist = match &self.eval_items {
            Some(items) => ItemDistribution::uniform_over(items)?,
            None => ItemDistribution::uniform_over(&pool)?,
        };
        let test_dist = match &self.test_items {
            Some(items) => ItemDistribution::uniform_over(items)?,
            None => ItemDistribution::uniform_over(&pool)?,
        };
        let prior = Prior::uniform(labelings.num_hypotheses());
        Ok(ResolvedExperiment { labelings, bayes, prior, pool, eval_dist, test_dist, strategy })
    }

    pub fn strategy_spec(&self) -> StrategySpec {
        match self.strategy.backend {
            BackendChoice::Exact => StrategySpec::exact(self.strategy.kind),
            BackendChoice::Ensemble => {
                StrategySpec::ensemble(self.strategy.kind, self.ensemble_size)
            }
        }
    }

    pub fn strategy_name(&self) -> String {
        self.strategy.kind.to_string()
    }
}

/// One logged round of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub n_labels: usize,
    /// Expected test error of a random in-space hypothesis (ensemble mean or
    /// exact posterior mean) against the ground truth.
    pub gibbs_err: f64,
    /// Test error of the majority vote.
    pub vote_err: f64,
    /// Diameter measures on the evaluation distribution.
    pub pwd_eval: f64,
    pub gvd_eval: f64,
    pub wrong_agreement: f64,
    pub prior_mass: f64,
    /// Items labeled this round (the initial draw for round 0).
    pub selected: Vec<usize>,
    /// Measured wall clock; excluded from data files to keep them
    /// reproducible byte for byte.
    pub elapsed_ms: u64,
}

/// All rounds of one seed, plus optional ensemble snapshots for embedding.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub seed: u64,
    pub rounds: Vec<RoundMetrics>,
    /// One materialized ensemble per logged round when `dump_ensembles` is
    /// set: each snapshot is the members' label rows.
    pub snapshots: Vec<LabelingMatrix>,
    /// Failure note when the run could not complete (the logged rounds are
    /// kept).
    pub aborted: Option<String>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable per-(seed, round, purpose) stream seeds.
fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

const TAG_INITIAL: u64 = 0x1111;
const TAG_ROUND: u64 = 0x2222;

/// Class-balanced initial draw: pool items are shuffled, then taken
/// round-robin over ground-truth classes, skipping classes with nothing left.
fn balanced_initial(
    pool: &[usize],
    bayes: &BayesLabeling,
    num_classes: usize,
    count: usize,
    seed: u64,
) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = pool.to_vec();
    for i in (1..shuffled.len()).rev() {
        let j = rng.random_range(0..=i);
        shuffled.swap(i, j);
    }
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); num_classes];
    for &item in &shuffled {
        queues[bayes.label(item) as usize].push_back(item);
    }
    let mut chosen = Vec::with_capacity(count);
    let mut class = 0usize;
    while chosen.len() < count {
        if let Some(item) = queues[class].pop_front() {
            chosen.push(item);
        }
        class = (class + 1) % num_classes;
        if queues.iter().all(VecDeque::is_empty) {
            break;
        }
    }
    chosen
}

fn visible_mask(
    resolved: &ResolvedExperiment,
    cfg: &ExperimentConfig,
    exact: &VersionSpaceMask,
    labels_queried: usize,
) -> VersionSpaceMask {
    match &cfg.bias {
        Some(bias) => samplers::biased_mask(
            exact,
            &resolved.labelings,
            &resolved.bayes,
            bias,
            labels_queried,
            &resolved.eval_dist,
        ),
        None => exact.clone(),
    }
}

fn compute_metrics(
    resolved: &ResolvedExperiment,
    visible: &VersionSpaceMask,
    ens: Option<&Ensemble>,
    round: usize,
    n_labels: usize,
    selected: Vec<usize>,
) -> Result<RoundMetrics> {
    let r = resolved;
    let test_support = r.test_dist.support();
    let (gibbs_err, vote_err, pwd_eval, gvd_eval) = match ens {
        Some(e) => {
            let gibbs = e
                .members()
                .iter()
                .map(|&h| {
                    core::labeling_disagreement(&r.labelings, h, r.bayes.as_slice(), &r.test_dist)
                })
                .sum::<f64>()
                / e.size() as f64;
            let vote = estimators::empirical_vote(e, &r.labelings, &test_support);
            let vote_err = vote_error(&vote, &test_support, &r.bayes, &r.test_dist);
            let pwd = estimators::pwd_hat(e, &r.labelings, &r.eval_dist)?;
            let gvd = estimators::gvd_hat(e, &r.labelings, &r.eval_dist)?;
            (gibbs, vote_err, pwd, gvd)
        }
        None => {
            let eval_ctx = MeasureContext::new(&r.labelings, &r.prior, visible, &r.eval_dist)?;
            let mass = core::prior_mass(&r.prior, visible);
            let mut gibbs = 0.0;
            for (i, w) in r.test_dist.iter() {
                let mut correct = 0.0;
                for h in visible.iter_members() {
                    if r.labelings.label(h, i) == r.bayes.label(i) {
                        correct += r.prior.weight(h);
                    }
                }
                gibbs += w * (1.0 - correct / mass);
            }
            let vote = core::majority_vote(visible, &r.prior, &r.labelings, &test_support)?;
            let vote_err = vote_error(&vote, &test_support, &r.bayes, &r.test_dist);
            (gibbs, vote_err, measures::pwd(&eval_ctx)?, measures::gvd(&eval_ctx)?)
        }
    };
    let wrong_agreement =
        core::wrong_agreement(visible, &r.labelings, &r.bayes, &r.test_dist)?;
    let prior_mass = core::prior_mass(&r.prior, visible);
    Ok(RoundMetrics {
        round,
        n_labels,
        gibbs_err,
        vote_err,
        pwd_eval,
        gvd_eval,
        wrong_agreement,
        prior_mass,
        selected,
        elapsed_ms: 0,
    })
}

fn vote_error(
    vote: &[u16],
    support: &[usize],
    bayes: &BayesLabeling,
    dist: &ItemDistribution,
) -> f64 {
    let mut err = 0.0;
    for (k, (i, w)) in dist.iter().enumerate() {
        debug_assert_eq!(support[k], i);
        if vote[k] != bayes.label(i) {
            err += w;
        }
    }
    err
}

fn snapshot_matrix(resolved: &ResolvedExperiment, ens: &Ensemble) -> LabelingMatrix {
    let rows: Vec<Vec<u16>> =
        ens.members().iter().map(|&h| resolved.labelings.row(h).to_vec()).collect();
    LabelingMatrix::from_rows(rows, resolved.labelings.num_classes()).expect("snapshot rows")
}

fn run_one_seed(resolved: &ResolvedExperiment, cfg: &ExperimentConfig, seed: u64) -> RunRecord {
    let mut record = RunRecord { seed, rounds: Vec::new(), snapshots: Vec::new(), aborted: None };
    match run_one_seed_inner(resolved, cfg, seed, &mut record) {
        Ok(()) => record,
        Err(e) => {
            record.aborted = Some(e.to_string());
            record
        }
    }
}

fn run_one_seed_inner(
    resolved: &ResolvedExperiment,
    cfg: &ExperimentConfig,
    seed: u64,
    record: &mut RunRecord,
) -> Result<()> {
    let r = resolved;
    let needs_ensemble =
        matches!(r.strategy.backend, Backend::Ensemble { .. }) || cfg.dump_ensembles;

    let mut timer = Instant::now();
    let initial = balanced_initial(
        &r.pool,
        &r.bayes,
        r.labelings.num_classes(),
        cfg.initial_labels,
        derive_seed(seed, TAG_INITIAL),
    );
    let mut queries = QuerySet::new();
    for &item in &initial {
        queries.push(item, r.bayes.label(item))?;
    }
    let mut exact = core::consistent_mask(&r.labelings, &queries)?;
    if exact.is_empty() {
        return Err(Error::EmptyVersionSpace(
            "initial labels are inconsistent with every hypothesis",
        ));
    }
    let mut visible = visible_mask(r, cfg, &exact, queries.len());

    // Round t's ensemble is drawn from the state after t rounds: it reports
    // round t's metrics and scores round t+1's batch.
    let mut ensemble: Option<Ensemble> = None;
    for round in 0..=cfg.rounds {
        let selected = if round == 0 {
            initial.clone()
        } else {
            let candidates: Vec<usize> =
                r.pool.iter().copied().filter(|&i| !queries.contains_item(i)).collect();
            let state = SelectionState {
                labelings: &r.labelings,
                prior: &r.prior,
                mask: &visible,
                dist: &r.eval_dist,
                candidates: &candidates,
                bayes: Some(&r.bayes),
                ensemble: ensemble.as_ref(),
            };
            let batch = select_batch(
                &r.strategy,
                &state,
                cfg.batch,
                derive_seed(seed, TAG_ROUND + round as u64),
                cfg.batch_mode,
            )?;
            let picked: Vec<usize> = batch.selections.iter().map(|s| s.chosen).collect();
            for &item in &picked {
                queries.push(item, r.bayes.label(item))?;
                exact = core::restrict(&exact, &r.labelings, item, r.bayes.label(item))?;
            }
            if exact.is_empty() {
                return Err(Error::EmptyVersionSpace(
                    "queried labels are inconsistent with every hypothesis",
                ));
            }
            visible = visible_mask(r, cfg, &exact, queries.len());
            picked
        };

        ensemble = if needs_ensemble {
            let ctx = MeasureContext::new(&r.labelings, &r.prior, &visible, &r.eval_dist)?;
            Some(estimators::draw_ensemble(
                &ctx,
                cfg.ensemble_size,
                derive_seed(seed, TAG_ROUND + round as u64 + 0x8000_0000),
            )?)
        } else {
            None
        };

        let metrics_ensemble = match r.strategy.backend {
            Backend::Ensemble { .. } => ensemble.as_ref(),
            Backend::Exact => None,
        };
        let mut metrics =
            compute_metrics(r, &visible, metrics_ensemble, round, queries.len(), selected)?;
        metrics.elapsed_ms = timer.elapsed().as_millis() as u64;
        timer = Instant::now();
        record.rounds.push(metrics);
        if cfg.dump_ensembles {
            record.snapshots.push(snapshot_matrix(r, ensemble.as_ref().expect("dump ensemble")));
        }
    }
    Ok(())
}

/// Runs every seed sequentially.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let resolved = cfg.resolve()?;
    Ok(cfg.seeds.iter().map(|&s| run_one_seed(&resolved, cfg, s)).collect())
}

/// Runs seeds on up to `jobs` worker threads; results stay in seed order.
pub fn run_experiment_parallel(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<RunRecord>> {
    if jobs <= 1 {
        return run_experiment(cfg);
    }
    let resolved = cfg.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let records = pool.install(|| {
        use rayon::prelude::*;
        cfg.seeds.par_iter().map(|&s| run_one_seed(&resolved, cfg, s)).collect()
    });
    Ok(records)
}

pub const METRICS_HEADER: &str = "run_seed,round,n_labels,strategy,gibbs_err,vote_err,pwd_eval,\
                                  gvd_eval,wrong_agreement,prior_mass,selected_items,elapsed_ms";

/// Serializes run records to the metrics CSV. Wall-clock columns are written
/// as zero so identical configs and seeds produce byte-identical files; the
/// measured values remain on [`RoundMetrics::elapsed_ms`].
pub fn metrics_to_csv(records: &[RunRecord], strategy: &str) -> String {
    let mut out = String::new();
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for record in records {
        for m in &record.rounds {
            let selected: Vec<String> = m.selected.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},0\n",
                record.seed,
                m.round,
                m.n_labels,
                strategy,
                fmt_g17(m.gibbs_err),
                fmt_g17(m.vote_err),
                fmt_g17(m.pwd_eval),
                fmt_g17(m.gvd_eval),
                fmt_g17(m.wrong_agreement),
                fmt_g17(m.prior_mass),
                selected.join(";"),
            ));
        }
    }
    out
}

/// Writes `metrics.csv`, the ground-truth labeling, and any ensemble
/// snapshots under the output directory.
pub fn write_run_outputs(
    cfg: &ExperimentConfig,
    resolved: &ResolvedExperiment,
    records: &[RunRecord],
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let csv = metrics_to_csv(records, &cfg.strategy_name());
    fs::write(dir.join("metrics.csv"), csv)?;

    // Ground truth as a one-row matrix, reusing the labeling text format.
    let truth = LabelingMatrix::from_rows(
        vec![resolved.bayes.as_slice().to_vec()],
        resolved.labelings.num_classes(),
    )?;
    truth.write_file(&dir.join("bayes.txt"))?;

    if cfg.dump_ensembles {
        for record in records {
            let seed_dir = dir.join("ensembles").join(format!("seed_{}", record.seed));
            fs::create_dir_all(&seed_dir)?;
            for (round, snapshot) in record.snapshots.iter().enumerate() {
                snapshot.write_file(&seed_dir.join(format!("round_{round}.txt")))?;
            }
        }
    }
    Ok(())
}

/// The six aggregated metric columns, in CSV order.
pub const AGGREGATE_METRICS: [&str; 6] =
    ["gibbs_err", "vote_err", "pwd_eval", "gvd_eval", "wrong_agreement", "prior_mass"];

fn final_metric_vector(record: &RunRecord) -> Result<[f64; 6]> {
    if record.aborted.is_some() {
        return Err(Error::InvalidConfig(format!(
            "seed {} aborted: {}",
            record.seed,
            record.aborted.as_deref().unwrap_or("")
        )));
    }
    let m = record.rounds.last().expect("completed run has rounds");
    Ok([m.gibbs_err, m.vote_err, m.pwd_eval, m.gvd_eval, m.wrong_agreement, m.prior_mass])
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Final-round summary of one strategy across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub strategy: String,
    pub n_seeds: usize,
    pub mean: [f64; 6],
    pub std: [f64; 6],
}

/// Aggregate table over strategies sharing a class and seed set; `diffs`
/// holds paired per-seed differences for each strategy pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<StrategySummary>,
    pub diffs: Vec<StrategySummary>,
}

impl CompareTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,n_seeds");
        for name in AGGREGATE_METRICS {
            out.push_str(&format!(",{name}_mean,{name}_std"));
        }
        out.push('\n');
        for row in self.rows.iter().chain(self.diffs.iter()) {
            out.push_str(&format!("{},{}", row.strategy, row.n_seeds));
            for k in 0..6 {
                out.push_str(&format!(",{},{}", fmt_g17(row.mean[k]), fmt_g17(row.std[k])));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs each config and aggregates final-round metrics. The configs must be
/// identical except for their strategy (and output path).
pub fn compare_strategies(cfgs: &[ExperimentConfig]) -> Result<CompareTable> {
    if cfgs.is_empty() {
        return Err(Error::InvalidConfig("compare needs at least one config".into()));
    }
    let base = &cfgs[0];
    for cfg in &cfgs[1..] {
        if cfg.seeds != base.seeds {
            return Err(Error::InvalidConfig("compared configs have mismatched seed sets".into()));
        }
        let mut a = cfg.clone();
        a.strategy = base.strategy;
        a.ensemble_size = base.ensemble_size;
        a.output = base.output.clone();
        if a != *base {
            return Err(Error::InvalidConfig(
                "compared configs must differ only in strategy".into(),
            ));
        }
    }

    let mut per_strategy: Vec<(String, Vec<[f64; 6]>)> = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        let records = run_experiment(cfg)?;
        let finals: Vec<[f64; 6]> =
            records.iter().map(final_metric_vector).collect::<Result<_>>()?;
        per_strategy.push((cfg.strategy_name(), finals));
    }

    let n_seeds = base.seeds.len();
    let summarize = |name: String, samples: &[[f64; 6]]| {
        let mut mean = [0.0; 6];
        let mut std = [0.0; 6];
        for k in 0..6 {
            let column: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            let (m, s) = mean_std(&column);
            mean[k] = m;
            std[k] = s;
        }
        StrategySummary { strategy: name, n_seeds, mean, std }
    };

    let rows: Vec<StrategySummary> =
        per_strategy.iter().map(|(name, finals)| summarize(name.clone(), finals)).collect();

    let mut diffs = Vec::new();
    for a in 0..per_strategy.len() {
        for b in a + 1..per_strategy.len() {
            let (name_a, finals_a) = &per_strategy[a];
            let (name_b, finals_b) = &per_strategy[b];
            let paired: Vec<[f64; 6]> = finals_a
                .iter()
                .zip(finals_b.iter())
                .map(|(fa, fb)| {
                    let mut d = [0.0; 6];
                    for k in 0..6 {
                        d[k] = fa[k] - fb[k];
                    }
                    d
                })
                .collect();
            diffs.push(summarize(format!("{name_a}-{name_b}"), &paired));
        }
    }

    Ok(CompareTable { rows, diffs })
}

/// Human-readable plan for `--dry-run`.
pub fn describe_plan(cfg: &ExperimentConfig, resolved: &ResolvedExperiment) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "class:          {}", cfg.class);
    let _ = writeln!(
        out,
        "hypotheses:     {} over {} items, {} classes",
        resolved.labelings.num_hypotheses(),
        resolved.labelings.num_items(),
        resolved.labelings.num_classes()
    );
    let _ = writeln!(out, "strategy:       {} ({:?})", cfg.strategy_name(), resolved.strategy.backend);
    let _ = writeln!(
        out,
        "schedule:       {} initial + {} rounds x {} labels",
        cfg.initial_labels, cfg.rounds, cfg.batch
    );
    let _ = writeln!(out, "pool:           {} queryable items", resolved.pool.len());
    let _ = writeln!(out, "eval items:     {}", resolved.eval_dist.len());
    let _ = writeln!(out, "test items:     {}", resolved.test_dist.len());
    let _ = writeln!(out, "bias:           {:?}", cfg.bias);
    let _ = writeln!(out, "batch mode:     {:?}", cfg.batch_mode);
    let _ = writeln!(out, "seeds:          {:?}", cfg.seeds);
    let _ = writeln!(out, "output:         {}", cfg.output);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold_config(strategy: StrategyKind, seeds: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig {
            schema: 1,
            class: ClassSpec::Thresholds { n: 16, target: 9 },
            strategy: StrategyConfig { kind: strategy, backend: BackendChoice::Exact },
            rounds: 6,
            batch: 1,
            ensemble_size: 8,
            initial_labels: 2,
            eval_items: None,
            test_items: None,
            bias: None,
            batch_mode: BatchMode::Literal,
            dump_ensembles: false,
            seeds,
            output: "unused".into(),
        }
    }

    #[test]
    fn zero_rounds_logs_only_the_initial_state() {
        let mut cfg = threshold_config(StrategyKind::MinWcPwd, vec![1]);
        cfg.rounds = 0;
        let records = run_experiment(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].aborted.is_none());
        assert_eq!(records[0].rounds.len(), 1);
        assert_eq!(records[0].rounds[0].n_labels, 2);
        assert_eq!(records[0].rounds[0].selected.len(), 2);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = threshold_config(StrategyKind::MinWcPwd, vec![3, 4]);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment_parallel(&cfg, 2).unwrap();
        let csv_a = metrics_to_csv(&a, &cfg.strategy_name());
        let csv_b = metrics_to_csv(&b, &cfg.strategy_name());
        assert_eq!(csv_a, csv_b);

        let mut ens_cfg = threshold_config(StrategyKind::MinWcGvd, vec![3]);
        ens_cfg.strategy.backend = BackendChoice::Ensemble;
        ens_cfg.dump_ensembles = true;
        let a = run_experiment(&ens_cfg).unwrap();
        let b = run_experiment(&ens_cfg).unwrap();
        assert_eq!(
            metrics_to_csv(&a, &ens_cfg.strategy_name()),
            metrics_to_csv(&b, &ens_cfg.strategy_name())
        );
        assert_eq!(a[0].snapshots, b[0].snapshots);
    }

    #[test]
    fn label_counts_and_mass_monotone_without_bias() {
        let cfg = threshold_config(StrategyKind::MaxGibbsError, vec![0, 1, 2]);
        for record in run_experiment(&cfg).unwrap() {
            assert!(record.aborted.is_none());
            let mut prev_mass = f64::INFINITY;
            for (round, m) in record.rounds.iter().enumerate() {
                assert_eq!(m.round, round);
                assert_eq!(m.n_labels, cfg.initial_labels + round * cfg.batch);
                assert!(m.prior_mass <= prev_mass + 1e-15);
                prev_mass = m.prior_mass;
                // Realizable class, no bias: the truth stays in the space.
                assert_eq!(m.wrong_agreement, 0.0);
                for v in [m.gibbs_err, m.vote_err, m.pwd_eval, m.gvd_eval, m.prior_mass] {
                    assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }

    #[test]
    fn diameter_strategy_reaches_singleton_and_zero_diameter() {
        let mut cfg = threshold_config(StrategyKind::MinWcPwd, vec![7]);
        cfg.rounds = 6; // ceil(log2(17)) = 5 splits suffice
        let records = run_experiment(&cfg).unwrap();
        let last = records[0].rounds.last().unwrap();
        let m = 17.0;
        assert_eq!(last.prior_mass, 1.0 / m);
        assert_eq!(last.pwd_eval, 0.0);
        assert_eq!(last.gvd_eval, 0.0);
    }

    #[test]
    fn vote_error_matches_recomputed_decomposition() {
        let cfg = threshold_config(StrategyKind::MinWcGvd, vec![11]);
        let resolved = cfg.resolve().unwrap();
        let records = run_experiment(&cfg).unwrap();
        let record = &records[0];
        // Rebuild the query history from the logged selections and check the
        // logged vote error is the vote-truth distance on the test items.
        let mut queries = QuerySet::new();
        for m in &record.rounds {
            for &item in &m.selected {
                queries.push(item, resolved.bayes.label(item)).unwrap();
            }
            let mask = core::consistent_mask(&resolved.labelings, &queries).unwrap();
            let support = resolved.test_dist.support();
            let vote =
                core::majority_vote(&mask, &resolved.prior, &resolved.labelings, &support)
                    .unwrap();
            let expect = vote_error(&vote, &support, &resolved.bayes, &resolved.test_dist);
            assert_eq!(m.vote_err, expect);
            assert_eq!(m.n_labels, queries.len());
        }
    }

    #[test]
    fn balanced_initial_draw_round_robins_classes() {
        let (_, bayes) =
            samplers::build_class(&ClassSpec::Thresholds { n: 8, target: 4 }).unwrap();
        let pool: Vec<usize> = (0..8).collect();
        for seed in 0..20 {
            let chosen = balanced_initial(&pool, &bayes, 2, 4, seed);
            assert_eq!(chosen.len(), 4);
            let zeros = chosen.iter().filter(|&&i| bayes.label(i) == 0).count();
            assert_eq!(zeros, 2, "seed {seed}: {chosen:?}");
        }
        // More draws than one class can supply: round robin skips it.
        let chosen = balanced_initial(&pool, &bayes, 2, 6, 1);
        assert_eq!(chosen.len(), 6);
    }

    #[test]
    fn config_validation_names_the_violated_bound() {
        let mut cfg = threshold_config(StrategyKind::MinWcPwd, vec![1]);
        cfg.rounds = 20;
        let err = cfg.resolve().unwrap_err().to_string();
        assert!(err.contains("rounds*batch + initial_labels"), "{err}");

        let mut cfg = threshold_config(StrategyKind::MinWcPwd, vec![]);
        cfg.seeds.clear();
        assert!(cfg.resolve().is_err());

        let mut cfg = threshold_config(StrategyKind::MinWcPwd, vec![1]);
        cfg.schema = 2;
        assert!(cfg.resolve().is_err());

        let mut cfg = threshold_config(StrategyKind::MinWcPwd, vec![1]);
        cfg.eval_items = Some(vec![0, 1]);
        cfg.test_items = Some(vec![1, 2]);
        assert!(cfg.resolve().unwrap_err().to_string().contains("disjoint"));
    }

    #[test]
    fn config_json_rejects_unknown_fields() {
        let cfg = threshold_config(StrategyKind::MinWcPwd, vec![1]);
        let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        let parsed = ExperimentConfig::from_json(&value.to_string()).unwrap();
        assert_eq!(parsed, cfg);
        value["surprise"] = serde_json::json!(1);
        assert!(ExperimentConfig::from_json(&value.to_string()).is_err());
    }

    #[test]
    fn reserved_splits_shrink_the_pool() {
        let mut cfg = threshold_config(StrategyKind::MinWcPwd, vec![1]);
        cfg.eval_items = Some(vec![0, 1]);
        cfg.test_items = Some(vec![2, 3]);
        cfg.rounds = 6;
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.pool, (4..16).collect::<Vec<_>>());
        assert_eq!(resolved.eval_dist.support(), vec![0, 1]);
        assert_eq!(resolved.test_dist.support(), vec![2, 3]);
    }

    #[test]
    fn compare_single_strategy_is_one_row() {
        let cfg = threshold_config(StrategyKind::MinWcPwd, vec![5]);
        let table = compare_strategies(std::slice::from_ref(&cfg)).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.diffs.is_empty());
        assert_eq!(table.rows[0].n_seeds, 1);
        for s in table.rows[0].std {
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn compare_requires_matching_configs() {
        let a = threshold_config(StrategyKind::MinWcPwd, vec![1, 2]);
        let mut b = threshold_config(StrategyKind::Random, vec![1, 2]);
        b.output = "elsewhere".into();
        let table = compare_strategies(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.diffs.len(), 1);
        assert_eq!(table.diffs[0].strategy, "pwd-random");

        let mut mismatched = b.clone();
        mismatched.seeds = vec![1, 3];
        assert!(compare_strategies(&[a.clone(), mismatched]).is_err());

        let mut different_class = b;
        different_class.class = ClassSpec::Thresholds { n: 16, target: 3 };
        assert!(compare_strategies(&[a, different_class]).is_err());
    }

    #[test]
    fn bias_runs_show_then_lose_wrong_agreement() {
        let mut cfg = threshold_config(StrategyKind::Random, vec![2]);
        cfg.class = ClassSpec::Thresholds { n: 16, target: 2 };
        cfg.bias = Some(BiasSpec::new(0.3, vec![(8, 0.1)]).unwrap());
        cfg.rounds = 14;
        cfg.batch = 1;
        cfg.initial_labels = 2;
        let records = run_experiment(&cfg).unwrap();
        let rounds = &records[0].rounds;
        assert!(rounds.iter().any(|m| m.wrong_agreement > 0.0));
        // All 16 labels in: radius 0, realizable truth, no wrong agreement.
        assert_eq!(rounds.last().unwrap().n_labels, 16);
        assert_eq!(rounds.last().unwrap().wrong_agreement, 0.0);
    }
}

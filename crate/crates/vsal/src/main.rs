//! Thin command-line front end over the library: run experiments, compare
//! strategies, embed version spaces, verify with the brute-force oracle, and
//! export generated classes. Exit codes: 0 success, 2 invalid input or
//! config, 1 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vsal::core::{consistent_mask, BayesLabeling, ItemDistribution, Prior, QuerySet};
use vsal::embedding::{self, RoundCluster};
use vsal::samplers::{self, ClassSpec};
use vsal::simulator::{self, ExperimentConfig};
use vsal::{fmt_g17, Error, LabelingMatrix};

#[derive(Parser)]
#[command(name = "vsal", about = "Version-space reduction active learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Maximum concurrent seed runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Validate and print the resolved plan without executing.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run several configs differing only in strategy and write the
    /// aggregate table.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed the ensemble snapshots of a finished run into the plane.
    Embed {
        /// Output directory of `run` (with bayes.txt and ensembles/).
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Lay out vote centers globally, then center each round's cluster on
        /// its vote.
        #[arg(long)]
        center_per_round: bool,
    },
    /// Brute-force measures of a labeling matrix under an optional query set.
    Oracle {
        #[arg(long)]
        matrix: PathBuf,
        /// Text file of `item label` lines.
        #[arg(long)]
        query: Option<PathBuf>,
        /// Row index to treat as the ground truth.
        #[arg(long)]
        bayes: Option<usize>,
    },
    /// Generate a hypothesis class and write its labeling matrix.
    Export {
        /// Compact spec string, e.g. `thresholds(64,5)` or `random(20,10,3,1)`.
        #[arg(long)]
        class: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, jobs, dry_run } => cmd_run(&config, jobs, dry_run),
        Command::Compare { configs, out } => cmd_compare(&configs, &out),
        Command::Embed { metrics, out, center_per_round } => {
            cmd_embed(&metrics, &out, center_per_round)
        }
        Command::Oracle { matrix, query, bayes } => {
            cmd_oracle(&matrix, query.as_deref(), bayes)
        }
        Command::Export { class, out } => cmd_export(&class, &out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Malformed inputs and configs exit 2; runtime failures exit 1.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidValue(_)
        | Error::Parse(_)
        | Error::InvalidQuery(_)
        | Error::ScaleLimit(_)
        | Error::DimensionMismatch(_) => 2,
        _ => 1,
    }
}

/// `VSAL_SEED` (a seed or comma list) overrides config seeds for smoke tests.
fn seed_override() -> vsal::Result<Option<Vec<u64>>> {
    match std::env::var("VSAL_SEED") {
        Ok(raw) => {
            let seeds: Vec<u64> = raw
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad VSAL_SEED entry `{t}`")))
                })
                .collect::<vsal::Result<_>>()?;
            if seeds.is_empty() {
                return Err(Error::InvalidConfig("VSAL_SEED is set but empty".into()));
            }
            Ok(Some(seeds))
        }
        Err(_) => Ok(None),
    }
}

fn load_config(path: &Path) -> vsal::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seeds) = seed_override()? {
        cfg.seeds = seeds;
    }
    Ok(cfg)
}

fn cmd_run(config: &Path, jobs: usize, dry_run: bool) -> vsal::Result<ExitCode> {
    let cfg = load_config(config)?;
    let resolved = cfg.resolve()?;
    if dry_run {
        print!("{}", simulator::describe_plan(&cfg, &resolved));
        println!("dry run: nothing executed");
        return Ok(ExitCode::SUCCESS);
    }
    let records = simulator::run_experiment_parallel(&cfg, jobs.max(1))?;
    let out_dir = PathBuf::from(&cfg.output);
    simulator::write_run_outputs(&cfg, &resolved, &records, &out_dir)?;
    println!("wrote {}", out_dir.join("metrics.csv").display());
    let mut failed = false;
    for record in &records {
        if let Some(reason) = &record.aborted {
            eprintln!("seed {} aborted: {reason}", record.seed);
            failed = true;
        }
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_compare(configs: &[PathBuf], out: &Path) -> vsal::Result<ExitCode> {
    let cfgs: Vec<ExperimentConfig> =
        configs.iter().map(|p| load_config(p)).collect::<vsal::Result<_>>()?;
    let table = simulator::compare_strategies(&cfgs)?;
    std::fs::write(out, table.to_csv())?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn numbered_entries(dir: &Path, prefix: &str, suffix: &str) -> vsal::Result<Vec<(u64, PathBuf)>> {
    let mut entries = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(middle) = name.strip_prefix(prefix).and_then(|r| r.strip_suffix(suffix)) {
            if let Ok(k) = middle.parse::<u64>() {
                entries.push((k, path));
            }
        }
    }
    entries.sort();
    Ok(entries)
}

fn cmd_embed(metrics_dir: &Path, out: &Path, center_per_round: bool) -> vsal::Result<ExitCode> {
    let truth_matrix = LabelingMatrix::read_file(&metrics_dir.join("bayes.txt"))?;
    let bayes = BayesLabeling::new(
        truth_matrix.row(0).to_vec(),
        truth_matrix.num_classes(),
    )?;
    let ensembles_dir = metrics_dir.join("ensembles");
    if !ensembles_dir.is_dir() {
        return Err(Error::InvalidConfig(format!(
            "{} has no ensembles/ directory; run with `dump_ensembles: true`",
            metrics_dir.display()
        )));
    }
    let seeds = numbered_entries(&ensembles_dir, "seed_", "")?;
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("no ensemble snapshots found".into()));
    }
    let multi_seed = seeds.len() > 1;
    let mut clusters = Vec::new();
    for (seed, seed_dir) in &seeds {
        let group = multi_seed.then(|| format!("s{seed}"));
        for (round, file) in numbered_entries(seed_dir, "round_", ".txt")? {
            let snapshot = LabelingMatrix::read_file(&file)?;
            clusters.push(RoundCluster::from_snapshot(
                group.as_deref(),
                round as usize,
                &snapshot,
            ));
        }
    }
    let dist = ItemDistribution::uniform(truth_matrix.num_items());
    let points = embedding::embed_clusters(&clusters, &bayes, &dist, center_per_round)?;

    let mut csv = String::from("tag,round,x,y\n");
    for p in &points {
        let tag = match &p.tag.group {
            Some(group) => format!("{group}:{}", p.tag.kind.as_str()),
            None => p.tag.kind.as_str().to_string(),
        };
        let round = p.tag.round.map(|r| r as i64).unwrap_or(-1);
        csv.push_str(&format!("{tag},{round},{},{}\n", fmt_g17(p.x), fmt_g17(p.y)));
    }
    std::fs::write(out, csv)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(matrix: &Path, query: Option<&Path>, bayes: Option<usize>) -> vsal::Result<ExitCode> {
    let m = LabelingMatrix::read_file(matrix)?;
    let q = match query {
        Some(path) => QuerySet::from_text(&std::fs::read_to_string(path)?)?,
        None => QuerySet::new(),
    };
    let mask = consistent_mask(&m, &q)?;
    println!("M={} N={} C={} MASK={}/{}", m.num_hypotheses(), m.num_items(), m.num_classes(), mask.count(), m.num_hypotheses());
    let truth = match bayes {
        Some(row) => {
            if row >= m.num_hypotheses() {
                return Err(Error::InvalidValue(format!(
                    "bayes row {row} out of range for {} hypotheses",
                    m.num_hypotheses()
                )));
            }
            Some(BayesLabeling::of_row(&m, row))
        }
        None => None,
    };
    let prior = Prior::uniform(m.num_hypotheses());
    let dist = ItemDistribution::uniform(m.num_items());
    let report = vsal::oracle::brute_measures(&m, &prior, &mask, &dist, truth.as_ref())?;
    println!("PWD={}", fmt_g17(report.pwd));
    println!("GVD={}", fmt_g17(report.gvd));
    let vote: Vec<String> = report.vote.iter().map(|&(_, y)| y.to_string()).collect();
    println!("VOTE={}", vote.join(";"));
    for &(i, ge) in &report.gibbs_error {
        println!("GE[{i}]={}", fmt_g17(ge));
    }
    for &(i, vr) in &report.variation_ratio {
        println!("VR[{i}]={}", fmt_g17(vr));
    }
    if let Some(wa) = report.wrong_agreement {
        println!("WRONG_AGREEMENT={}", fmt_g17(wa));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(class: &str, out: &Path) -> vsal::Result<ExitCode> {
    let spec: ClassSpec = class.parse()?;
    let (matrix, bayes) = samplers::build_class(&spec)?;
    matrix.write_file(out)?;
    let truth: Vec<String> = bayes.as_slice().iter().map(|y| y.to_string()).collect();
    println!("wrote {} ({} hypotheses, {} items, {} classes)", out.display(), matrix.num_hypotheses(), matrix.num_items(), matrix.num_classes());
    println!("truth={}", truth.join(";"));
    Ok(ExitCode::SUCCESS)
}

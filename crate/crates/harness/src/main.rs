//! Command line front end. `run` executes the configured experiment
//! cells and writes logs, traces, and metrics; `verify` checks one of
//! the planner's guarantees and exits nonzero on failure; `table`
//! rebuilds the metrics table from previously written episode logs.

use anyhow::{bail, Context, Result};
use bsmppi::risk::ConfidenceLevel;
use bsmppi::rng::StreamKey;
use bsmppi_harness::config::{ExperimentConfig, Variant};
use bsmppi_harness::output::{
    format_metrics_table, read_episodes, write_episodes, write_metrics, write_traces, RunHeader,
};
use bsmppi_harness::theorems::{
    candidate_stats, crossover_batch, harvest_batches, verify_thm1, verify_thm2, verify_thm3,
    CandidateStats, Thm1Setup, Thm2Outcome, Thm3Setup, THM2_LAMBDA_GRID,
};
use bsmppi_harness::trials::{expand_cells, run_trials, summarize, summarize_parts};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bsmppi", about = "Belief-space MPPI slot insertion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured cell; write episode logs, traces, and metrics.
    Run {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a planner guarantee; exits nonzero if the check fails.
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[command(flatten)]
        overrides: Overrides,
        /// Frozen solve batches for the argmin handover check.
        #[arg(long, default_value_t = 100)]
        batches: usize,
        /// Independent draws per validation set.
        #[arg(long, default_value_t = 10_000)]
        n_validation: usize,
        /// Episodes whose solve steps become checkpoints.
        #[arg(long, default_value_t = 3)]
        episodes: usize,
        /// Episodes for the joint safety check.
        #[arg(long, default_value_t = 400)]
        runs: usize,
        /// Solves per episode in the joint safety check.
        #[arg(long, default_value_t = 5)]
        t_solves: usize,
    },
    /// Rebuild the metrics table from the episode logs in a directory.
    Table {
        #[arg(long, default_value = "out")]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    /// Certified plans are safe with probability at least beta_s.
    Thm1,
    /// The risk-weighted argmin hands over to the mean argmin.
    Thm2,
    /// Fully certified episodes satisfy the joint safety bound.
    Thm3,
}

#[derive(Args)]
struct Overrides {
    /// TOML experiment configuration; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    /// Safety confidence level; a comma list sweeps one cell per value.
    #[arg(long, value_delimiter = ',')]
    beta_s: Vec<f64>,
    /// Cost confidence level; a comma list sweeps one cell per value.
    #[arg(long, value_delimiter = ',')]
    beta_c: Vec<f64>,
    /// Risk weight; a comma list sweeps one cell per value.
    #[arg(long, value_delimiter = ',')]
    lambda_r: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(variant) = self.variant {
            cfg.variant = variant;
        }
        apply_axis(&self.beta_s, &mut cfg.beta_s, &mut cfg.sweep.beta_s);
        apply_axis(&self.beta_c, &mut cfg.beta_c, &mut cfg.sweep.beta_c);
        apply_axis(&self.lambda_r, &mut cfg.lambda_r, &mut cfg.sweep.lambda_r);
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A single flag value pins the axis and cancels its configured sweep;
/// a comma list replaces the sweep outright.
fn apply_axis(flag: &[f64], single: &mut f64, sweep: &mut Vec<f64>) {
    match flag {
        [] => {}
        [v] => {
            *single = *v;
            sweep.clear();
        }
        list => *sweep = list.to_vec(),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { overrides } => {
            cmd_run(&overrides.load()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            check,
            overrides,
            batches,
            n_validation,
            episodes,
            runs,
            t_solves,
        } => {
            let cfg = overrides.load()?;
            let ok = match check {
                Check::Thm1 => {
                    let setup = Thm1Setup {
                        episodes,
                        n_validation,
                    };
                    per_beta_s(&cfg, |c| Ok(print_pass(verify_thm1(c, &setup)?)))?
                }
                Check::Thm2 => cmd_verify_thm2(&cfg, batches)?,
                Check::Thm3 => {
                    let setup = Thm3Setup {
                        t_solves,
                        runs,
                        ..Thm3Setup::default()
                    };
                    per_beta_s(&cfg, |c| Ok(print_pass(verify_thm3(c, &setup)?)))?
                }
            };
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Table { dir } => {
            cmd_table(&dir)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_run(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let cells = expand_cells(cfg);
    let mut rows = Vec::with_capacity(cells.len());
    for cell in &cells {
        let records = run_trials(cell)?;
        // Each cell's files carry that cell's own hash: rerunning the
        // single-cell configuration reproduces them exactly.
        let header = RunHeader::for_cell(cell);
        write_episodes(
            &cfg.out_dir.join(format!("{}_episodes.jsonl", header.cell)),
            &header,
            &records,
        )?;
        write_traces(
            &cfg.out_dir.join(format!("{}_traces.csv", header.cell)),
            &header.config_hash,
            cell.seed,
            &header.cell,
            &records,
        )?;
        rows.push(summarize(cell, &records));
    }
    write_metrics(
        &cfg.out_dir.join("metrics.csv"),
        &cfg.config_hash(),
        cfg.seed,
        &rows,
    )?;
    print!("{}", format_metrics_table(&rows));
    println!(
        "wrote {} cell(s) x {} trial(s) to {}",
        cells.len(),
        cfg.trials,
        cfg.out_dir.display()
    );
    Ok(())
}

/// Runs a check once per configured safety level, sweep or single, and
/// folds the pass flags.
fn per_beta_s(
    cfg: &ExperimentConfig,
    mut check: impl FnMut(&ExperimentConfig) -> Result<bool>,
) -> Result<bool> {
    let levels = if cfg.sweep.beta_s.is_empty() {
        vec![cfg.beta_s]
    } else {
        cfg.sweep.beta_s.clone()
    };
    let mut all = true;
    for bs in levels {
        let mut c = cfg.clone();
        c.beta_s = bs;
        c.sweep.beta_s.clear();
        all &= check(&c)?;
    }
    Ok(all)
}

fn print_pass<R: std::fmt::Display>(report: R) -> bool
where
    R: HasPass,
{
    println!("{report}");
    report.pass()
}

/// Lets the verify driver treat both theorem reports uniformly.
trait HasPass {
    fn pass(&self) -> bool;
}

impl HasPass for bsmppi_harness::theorems::Thm1Report {
    fn pass(&self) -> bool {
        self.pass
    }
}

impl HasPass for bsmppi_harness::theorems::Thm3Report {
    fn pass(&self) -> bool {
        self.pass
    }
}

fn cmd_verify_thm2(cfg: &ExperimentConfig, batches: usize) -> Result<bool> {
    let beta_c = ConfidenceLevel::new(cfg.beta_c).expect("validated");
    let beta_s = ConfidenceLevel::new(cfg.beta_s).expect("validated");
    let (costs, margins) = crossover_batch();
    let crossover: Vec<CandidateStats> = costs
        .iter()
        .zip(&margins)
        .map(|(c, m)| candidate_stats(c, m, beta_c, beta_s))
        .collect::<Result<_>>()?;
    let mut all = vec![crossover];
    all.extend(harvest_batches(
        cfg,
        batches.saturating_sub(1),
        StreamKey::from_root(cfg.seed),
    )?);

    let mut feasible = 0usize;
    let mut empty = 0usize;
    let mut mismatches = 0usize;
    let mut crossover_switches = false;
    for (b, stats) in all.iter().enumerate() {
        match verify_thm2(stats, THM2_LAMBDA_GRID) {
            Thm2Outcome::Converged {
                argmins,
                mean_argmin,
            } => {
                feasible += 1;
                let last = *argmins.last().expect("nonempty grid");
                if last != mean_argmin {
                    mismatches += 1;
                }
                if b == 0 {
                    crossover_switches = argmins.first() != argmins.last() && last == mean_argmin;
                }
            }
            Thm2Outcome::EmptyFeasible => empty += 1,
        }
    }
    let ok = mismatches == 0 && crossover_switches;
    println!(
        "thm2: {} batches ({} with feasible sets, {} empty); {} handover mismatches; crossover batch switches argmin: {}; {}",
        all.len(),
        feasible,
        empty,
        mismatches,
        if crossover_switches { "yes" } else { "NO" },
        if ok { "pass" } else { "FAIL" }
    );
    Ok(ok)
}

fn cmd_table(dir: &Path) -> Result<()> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with("_episodes.jsonl"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no *_episodes.jsonl files in {}", dir.display());
    }
    let mut rows = Vec::with_capacity(paths.len());
    let mut first: Option<RunHeader> = None;
    for path in &paths {
        let (header, records) = read_episodes(path)?;
        let variant = Variant::from_tag(&header.variant)
            .with_context(|| format!("{}: unknown variant {}", path.display(), header.variant))?;
        rows.push(summarize_parts(
            header.cell.clone(),
            variant,
            header.beta_s,
            header.beta_c,
            header.lambda_r,
            &records,
        ));
        first.get_or_insert(header);
    }
    // The stamp comes from the first log alphabetically; for a directory
    // written by a single non-swept run it equals the run's own stamp.
    let first = first.expect("paths nonempty");
    write_metrics(&dir.join("metrics.csv"), &first.config_hash, first.seed, &rows)?;
    print!("{}", format_metrics_table(&rows));
    println!("rebuilt metrics.csv from {} log(s) in {}", rows.len(), dir.display());
    Ok(())
}

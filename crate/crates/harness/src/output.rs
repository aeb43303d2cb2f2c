//! Log emission and recovery. Three formats per cell: a tagged JSONL
//! episode log (lossless, one line per event), a metrics CSV (one row per
//! cell), and a per-step trace CSV for plotting. All floats print at full
//! round-trip precision and every file opens with the configuration hash
//! and root seed, so a rerun with the same settings reproduces each file
//! byte for byte. Wall-clock timings never enter any file.

use crate::config::ExperimentConfig;
use crate::episode::{EpisodeRecord, EpisodeSummary, StepRecord, SMOOTH_DEGREE, SMOOTH_WINDOW};
use crate::smoothing::smoothed_series;
use crate::trials::CellMetrics;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub const METRICS_COLUMNS: &str = "cell,variant,beta_s,beta_c,lambda_r,trials,success_rate,contact_rate,mean_force,max_force,min_margin,mean_achieved_cvar,final_distance";
pub const TRACE_COLUMNS: &str =
    "cell,trial,t,margin,achieved_cvar_neg_margin,distance,smoothed_distance";

/// First line of every episode log. Carries enough of the cell's identity
/// to rebuild its metrics row without the original config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub config_hash: String,
    pub seed: u64,
    pub variant: String,
    pub cell: String,
    pub beta_s: f64,
    pub beta_c: f64,
    pub lambda_r: f64,
}

impl RunHeader {
    pub fn for_cell(cfg: &ExperimentConfig) -> Self {
        RunHeader {
            config_hash: cfg.config_hash(),
            seed: cfg.seed,
            variant: cfg.variant.tag().to_string(),
            cell: cfg.cell_label(),
            beta_s: cfg.beta_s,
            beta_c: cfg.beta_c,
            lambda_r: cfg.lambda_r,
        }
    }
}

/// One JSONL event. A file is a `Header` line followed by
/// `EpisodeStart`, `Step`..., `EpisodeEnd` groups in trial order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogLine {
    Header(RunHeader),
    EpisodeStart {
        trial: u64,
        truth: [f64; 2],
    },
    Step {
        trial: u64,
        #[serde(flatten)]
        record: StepRecord,
    },
    EpisodeEnd {
        trial: u64,
        summary: EpisodeSummary,
    },
}

pub fn episodes_to_jsonl(header: &RunHeader, records: &[EpisodeRecord]) -> Result<String> {
    let mut out = String::new();
    let mut push = |line: &LogLine| -> Result<()> {
        out.push_str(&serde_json::to_string(line)?);
        out.push('\n');
        Ok(())
    };
    push(&LogLine::Header(header.clone()))?;
    for r in records {
        push(&LogLine::EpisodeStart {
            trial: r.trial,
            truth: r.truth,
        })?;
        for s in &r.steps {
            push(&LogLine::Step {
                trial: r.trial,
                record: s.clone(),
            })?;
        }
        push(&LogLine::EpisodeEnd {
            trial: r.trial,
            summary: r.summary.clone(),
        })?;
    }
    Ok(out)
}

pub fn write_episodes(
    path: &Path,
    header: &RunHeader,
    records: &[EpisodeRecord],
) -> Result<()> {
    std::fs::write(path, episodes_to_jsonl(header, records)?)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_episodes(path: &Path) -> Result<(RunHeader, Vec<EpisodeRecord>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, first)) => match serde_json::from_str(first).context("parsing header line")? {
            LogLine::Header(h) => h,
            _ => bail!("{}: first line is not a header", path.display()),
        },
        None => bail!("{}: empty log", path.display()),
    };
    let mut records = Vec::new();
    let mut open: Option<(u64, [f64; 2], Vec<StepRecord>)> = None;
    for (i, line) in lines {
        let parsed: LogLine = serde_json::from_str(line)
            .with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        match parsed {
            LogLine::Header(_) => bail!("{}: duplicate header at line {}", path.display(), i + 1),
            LogLine::EpisodeStart { trial, truth } => {
                if open.is_some() {
                    bail!("{}: episode {} starts inside another", path.display(), trial);
                }
                open = Some((trial, truth, Vec::new()));
            }
            LogLine::Step { trial, record } => match &mut open {
                Some((t, _, steps)) if *t == trial => steps.push(record),
                _ => bail!("{}: stray step for trial {}", path.display(), trial),
            },
            LogLine::EpisodeEnd { trial, summary } => match open.take() {
                Some((t, truth, steps)) if t == trial => records.push(EpisodeRecord {
                    trial,
                    truth,
                    steps,
                    summary,
                    wall_ms_per_step: 0.0,
                }),
                _ => bail!("{}: stray end for trial {}", path.display(), trial),
            },
        }
    }
    if let Some((trial, _, _)) = open {
        bail!("{}: episode {} never ends", path.display(), trial);
    }
    Ok((header, records))
}

fn stamp(config_hash: &str, seed: u64) -> String {
    format!("# config_hash={config_hash} seed={seed}\n")
}

pub fn metrics_to_csv(config_hash: &str, seed: u64, rows: &[CellMetrics]) -> String {
    let mut out = stamp(config_hash, seed);
    out.push_str(METRICS_COLUMNS);
    out.push('\n');
    for m in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            m.label,
            m.variant.tag(),
            m.beta_s,
            m.beta_c,
            m.lambda_r,
            m.trials,
            m.success_rate,
            m.contact_rate,
            m.mean_force,
            m.max_force,
            m.min_margin,
            m.mean_achieved_cvar,
            m.final_distance
        )
        .expect("string write");
    }
    out
}

pub fn write_metrics(path: &Path, config_hash: &str, seed: u64, rows: &[CellMetrics]) -> Result<()> {
    std::fs::write(path, metrics_to_csv(config_hash, seed, rows))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn traces_to_csv(
    config_hash: &str,
    seed: u64,
    cell: &str,
    records: &[EpisodeRecord],
) -> String {
    let mut out = stamp(config_hash, seed);
    out.push_str(TRACE_COLUMNS);
    out.push('\n');
    for r in records {
        let distances: Vec<f64> = r.steps.iter().map(|s| s.distance).collect();
        let smoothed = smoothed_series(&distances, SMOOTH_WINDOW, SMOOTH_DEGREE);
        for (s, sd) in r.steps.iter().zip(&smoothed) {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                cell, r.trial, s.t, s.margin, s.achieved_cvar_neg_margin, s.distance, sd
            )
            .expect("string write");
        }
    }
    out
}

pub fn write_traces(
    path: &Path,
    config_hash: &str,
    seed: u64,
    cell: &str,
    records: &[EpisodeRecord],
) -> Result<()> {
    std::fs::write(path, traces_to_csv(config_hash, seed, cell, records))
        .with_context(|| format!("writing {}", path.display()))
}

/// Aligned stdout table. The only place wall time appears; it is
/// measured, so it stays out of the files.
pub fn format_metrics_table(rows: &[CellMetrics]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<24} {:>8} {:>8} {:>9} {:>9} {:>10} {:>9} {:>10} {:>10} {:>12}",
        "cell",
        "trials",
        "succ %",
        "contact %",
        "mean F",
        "max F",
        "min h",
        "mean CVaR",
        "final d",
        "ms/step"
    )
    .expect("string write");
    for m in rows {
        writeln!(
            out,
            "{:<24} {:>8} {:>8.1} {:>9.1} {:>9.2} {:>10.2} {:>9.2} {:>10.3} {:>10.2} {:>12.2}",
            m.label,
            m.trials,
            100.0 * m.success_rate,
            100.0 * m.contact_rate,
            m.mean_force,
            m.max_force,
            m.min_margin,
            m.mean_achieved_cvar,
            m.final_distance,
            m.wall_ms_per_step
        )
        .expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trials::{run_trials, summarize};

    fn short_run() -> (ExperimentConfig, Vec<EpisodeRecord>) {
        let mut cfg = ExperimentConfig::default();
        cfg.trials = 2;
        cfg.t_max = 9;
        cfg.seed = 77;
        let records = run_trials(&cfg).unwrap();
        (cfg, records)
    }

    #[test]
    fn jsonl_round_trip_reconstructs_the_records() {
        let (cfg, records) = short_run();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("episodes.jsonl");
        let header = RunHeader::for_cell(&cfg);
        write_episodes(&path, &header, &records).unwrap();
        let (back_header, back) = read_episodes(&path).unwrap();
        assert_eq!(back_header, header);
        assert_eq!(back, records);
    }

    #[test]
    fn rerunning_the_same_seed_reproduces_every_file_byte_for_byte() {
        let (cfg, records_a) = short_run();
        let records_b = run_trials(&cfg).unwrap();
        let header = RunHeader::for_cell(&cfg);
        let hash = cfg.config_hash();
        assert_eq!(
            episodes_to_jsonl(&header, &records_a).unwrap(),
            episodes_to_jsonl(&header, &records_b).unwrap()
        );
        let rows_a = [summarize(&cfg, &records_a)];
        let rows_b = [summarize(&cfg, &records_b)];
        assert_eq!(
            metrics_to_csv(&hash, cfg.seed, &rows_a),
            metrics_to_csv(&hash, cfg.seed, &rows_b)
        );
        assert_eq!(
            traces_to_csv(&hash, cfg.seed, &header.cell, &records_a),
            traces_to_csv(&hash, cfg.seed, &header.cell, &records_b)
        );
    }

    #[test]
    fn an_empty_batch_writes_only_the_header() {
        let cfg = ExperimentConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        write_episodes(&path, &RunHeader::for_cell(&cfg), &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        let (_, records) = read_episodes(&path).unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn metrics_csv_carries_the_stamp_and_column_order() {
        let (cfg, records) = short_run();
        let rows = [summarize(&cfg, &records)];
        let csv = metrics_to_csv(&cfg.config_hash(), cfg.seed, &rows);
        let mut lines = csv.lines();
        let stamp_line = lines.next().unwrap();
        assert!(stamp_line.starts_with("# config_hash="));
        assert!(stamp_line.contains("seed=77"));
        assert_eq!(lines.next().unwrap(), METRICS_COLUMNS);
        let row = lines.next().unwrap();
        assert!(row.starts_with(&rows[0].label));
        assert_eq!(row.split(',').count(), METRICS_COLUMNS.split(',').count());
        // timing never reaches a file, only the stdout table
        assert!(!csv.contains("ms"));
        assert!(format_metrics_table(&rows).contains("ms/step"));
    }

    #[test]
    fn trace_rows_align_with_episode_steps() {
        let (cfg, records) = short_run();
        let csv = traces_to_csv(&cfg.config_hash(), cfg.seed, "cellname", &records);
        let expected_rows: usize = records.iter().map(|r| r.steps.len()).sum();
        assert_eq!(csv.lines().count(), expected_rows + 2);
        let first_row = csv.lines().nth(2).unwrap();
        assert_eq!(first_row.split(',').count(), TRACE_COLUMNS.split(',').count());
        assert!(first_row.starts_with("cellname,0,0,"));
    }

    #[test]
    fn corrupt_logs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"type\":\"episode_start\",\"trial\":0,\"truth\":[0.0,1.0]}\n")
            .unwrap();
        assert!(read_episodes(&path).is_err());
        let (cfg, records) = short_run();
        let header = RunHeader::for_cell(&cfg);
        let mut text = episodes_to_jsonl(&header, &records).unwrap();
        text.push_str("{\"type\":\"step\",\"trial\":99}\n");
        std::fs::write(&path, &text).unwrap();
        assert!(read_episodes(&path).is_err());
    }

    #[test]
    fn read_episodes_requires_trial_consistency() {
        let (cfg, records) = short_run();
        let header = RunHeader::for_cell(&cfg);
        let text = episodes_to_jsonl(&header, &records).unwrap();
        let swapped = text.replace("\"type\":\"episode_end\",\"trial\":1", "\"type\":\"episode_end\",\"trial\":5");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("swapped.jsonl");
        std::fs::write(&path, swapped).unwrap();
        assert!(read_episodes(&path).is_err());
    }
}

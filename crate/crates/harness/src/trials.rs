//! Seeded trial batches and per-cell aggregation. Trials are independent
//! and run in parallel; every trial's streams derive from (root seed,
//! trial index) alone, so results do not depend on thread scheduling, and
//! two cells with the same seed see identical true geometries and camera
//! noise. Sweep comparisons are paired by construction.

use crate::config::{ExperimentConfig, Variant};
use crate::episode::{run_episode, EpisodeRecord};
use anyhow::Result;
use bsmppi::rng::{label, StreamKey};
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct CellMetrics {
    pub label: String,
    pub variant: Variant,
    pub beta_s: f64,
    pub beta_c: f64,
    pub lambda_r: f64,
    pub trials: usize,
    /// Fraction of episodes ending in success.
    pub success_rate: f64,
    /// Fraction of episodes with any nonzero exterior contact force.
    pub contact_rate: f64,
    /// Mean over episodes of the per-episode peak exterior force (N).
    pub mean_force: f64,
    pub max_force: f64,
    /// Worst realized margin across all episodes (mm).
    pub min_margin: f64,
    /// Mean over all control steps of the safety CVaR the executed
    /// sequence achieved.
    pub mean_achieved_cvar: f64,
    /// Mean over episodes of the smoothed final goal distance (mm).
    pub final_distance: f64,
    /// Measured, stdout only; never serialized.
    pub wall_ms_per_step: f64,
}

pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<EpisodeRecord>> {
    let root = StreamKey::from_root(cfg.seed);
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_episode(cfg, i, root.derive(&[label::TRIAL, i])))
        .collect()
}

pub fn summarize(cfg: &ExperimentConfig, records: &[EpisodeRecord]) -> CellMetrics {
    summarize_parts(
        cfg.cell_label(),
        cfg.variant,
        cfg.beta_s,
        cfg.beta_c,
        cfg.lambda_r,
        records,
    )
}

/// Aggregation from explicit cell identity, for rebuilding metrics out of
/// logged episodes whose configuration is known only through the header.
pub fn summarize_parts(
    label: String,
    variant: Variant,
    beta_s: f64,
    beta_c: f64,
    lambda_r: f64,
    records: &[EpisodeRecord],
) -> CellMetrics {
    let n = records.len();
    let nf = n as f64;
    let successes = records.iter().filter(|r| r.summary.success).count();
    let contacts = records
        .iter()
        .filter(|r| r.summary.max_exterior_force > 0.0)
        .count();
    let mean_force = records.iter().map(|r| r.summary.max_exterior_force).sum::<f64>() / nf;
    let max_force = records
        .iter()
        .map(|r| r.summary.max_exterior_force)
        .fold(0.0f64, f64::max);
    let min_margin = records
        .iter()
        .map(|r| r.summary.min_margin)
        .fold(f64::INFINITY, f64::min);
    let mut cvar_sum = 0.0;
    let mut cvar_count = 0usize;
    for r in records {
        for s in &r.steps {
            cvar_sum += s.achieved_cvar_neg_margin;
            cvar_count += 1;
        }
    }
    let final_distance = records.iter().map(|r| r.summary.final_distance).sum::<f64>() / nf;
    let wall = records.iter().map(|r| r.wall_ms_per_step).sum::<f64>() / nf;
    CellMetrics {
        label,
        variant,
        beta_s,
        beta_c,
        lambda_r,
        trials: n,
        success_rate: successes as f64 / nf,
        contact_rate: contacts as f64 / nf,
        mean_force,
        max_force,
        min_margin,
        mean_achieved_cvar: cvar_sum / cvar_count.max(1) as f64,
        final_distance,
        wall_ms_per_step: wall,
    }
}

/// Expands the sweep section into one configuration per cell; empty sweep
/// lists fall back to the single top-level value. The seed is shared so
/// cells are paired trial by trial.
pub fn expand_cells(cfg: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let one = |list: &[f64], single: f64| -> Vec<f64> {
        if list.is_empty() {
            vec![single]
        } else {
            list.to_vec()
        }
    };
    let beta_s = one(&cfg.sweep.beta_s, cfg.beta_s);
    let beta_c = one(&cfg.sweep.beta_c, cfg.beta_c);
    let lambda_r = one(&cfg.sweep.lambda_r, cfg.lambda_r);
    let mut cells = Vec::new();
    for &bs in &beta_s {
        for &bc in &beta_c {
            for &lr in &lambda_r {
                let mut cell = cfg.clone();
                cell.beta_s = bs;
                cell.beta_c = bc;
                cell.lambda_r = lr;
                cell.sweep = Default::default();
                cells.push(cell);
            }
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_trial_summary_matches_the_episode() {
        let mut cfg = ExperimentConfig::default();
        cfg.trials = 1;
        cfg.t_max = 15;
        cfg.seed = 11;
        let records = run_trials(&cfg).unwrap();
        let direct = run_episode(
            &cfg,
            0,
            StreamKey::from_root(11).derive(&[label::TRIAL, 0]),
        )
        .unwrap();
        assert_eq!(records[0], direct);
        let m = summarize(&cfg, &records);
        assert_eq!(m.trials, 1);
        assert_eq!(m.min_margin, direct.summary.min_margin);
        assert_eq!(m.final_distance, direct.summary.final_distance);
    }

    #[test]
    fn noiseless_batch_is_all_success_no_contact() {
        let mut cfg = ExperimentConfig::default();
        cfg.sigma_p = 0.0;
        cfg.testbed.sigma_w = 0.0;
        cfg.testbed.sigma_v = 0.0;
        cfg.testbed.sigma_w_slot = 0.0;
        cfg.trials = 3;
        cfg.seed = 5;
        let records = run_trials(&cfg).unwrap();
        let m = summarize(&cfg, &records);
        assert_eq!(m.success_rate, 1.0);
        assert_eq!(m.contact_rate, 0.0);
        assert_eq!(m.max_force, 0.0);
    }

    #[test]
    fn cells_with_the_same_seed_share_true_geometries() {
        let mut a = ExperimentConfig::default();
        a.trials = 4;
        a.t_max = 2;
        a.seed = 21;
        let mut b = a.clone();
        b.beta_s = 0.5;
        let ra = run_trials(&a).unwrap();
        let rb = run_trials(&b).unwrap();
        for (x, y) in ra.iter().zip(&rb) {
            assert_eq!(x.truth, y.truth);
            assert_eq!(x.steps[0].observation, y.steps[0].observation);
        }
    }

    #[test]
    fn sweep_expansion_is_a_cartesian_product() {
        let mut cfg = ExperimentConfig::default();
        cfg.sweep.beta_s = vec![0.5, 0.9, 0.95];
        cfg.sweep.lambda_r = vec![0.5];
        let cells = expand_cells(&cfg);
        assert_eq!(cells.len(), 3);
        assert_eq!(cells[0].beta_s, 0.5);
        assert_eq!(cells[2].beta_s, 0.95);
        assert!(cells.iter().all(|c| c.lambda_r == 0.5));
        assert!(cells.iter().all(|c| c.seed == cfg.seed));
        // no sweep section: the configuration itself is the single cell
        let single = expand_cells(&ExperimentConfig::default());
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].beta_s, ExperimentConfig::default().beta_s);
    }
}

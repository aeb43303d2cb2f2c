//! One seeded episode: observe, update the belief, solve, apply the first
//! control through the true plant, log. The true slot geometry is drawn
//! once per trial; the controller only ever sees it through observations.

use crate::config::{ExperimentConfig, Variant};
use crate::smoothing::smoothed_last;
use anyhow::{Context, Result};
use bsmppi::belief::LatentParam as GenericParam;
use bsmppi::controller::{cc_solve_step, solve_step, ControlSequence};
use bsmppi::risk::{cvar_tail_average, ConfidenceLevel};
use bsmppi::rng::{label, ChaCha8Rng, StreamKey};
use bsmppi::system::slot2d::SlotGeometry;
use bsmppi::system::SystemModel;
use bsmppi::{LatentParam, ParticleBelief, Real, SlotState, SlotSystem};
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub const SMOOTH_WINDOW: usize = 7;
pub const SMOOTH_DEGREE: usize = 2;
/// Exterior force beyond this multiple of the cap ends the episode early.
pub const FORCE_ABORT_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// Object position after applying this step's control (mm).
    pub position: [f64; 2],
    /// Applied control (mm/s).
    pub control: [f64; 2],
    /// Slot-center measurement taken before the solve, if the camera is on.
    pub observation: Option<f64>,
    pub belief_mean: [f64; 2],
    pub belief_std: [f64; 2],
    pub ess: f64,
    /// Realized safety margin at the new state under the true geometry (mm).
    pub margin: f64,
    /// Realized exterior contact force (N).
    pub exterior_force: f64,
    /// Raw distance from the new state to the true goal (mm).
    pub distance: f64,
    /// Mean rollout cost of the chosen sequence.
    pub achieved_mean_cost: f64,
    /// Safety CVaR the chosen sequence attains over the solve's particle
    /// draws; the trace the safety penalty is steering.
    pub achieved_cvar_neg_margin: f64,
    /// Fraction of the solve's particle draws whose rollout margin went
    /// negative.
    pub achieved_violation_fraction: f64,
    pub uniform_fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub success: bool,
    pub force_abort: bool,
    pub steps: usize,
    /// Worst realized margin over the episode, initial state included (mm).
    pub min_margin: f64,
    pub max_exterior_force: f64,
    /// Savitzky-Golay smoothed distance at the final step (mm).
    pub final_distance: f64,
    pub degenerate_updates: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub trial: u64,
    /// True (c_slot, w_slot) for this trial (mm).
    pub truth: [f64; 2],
    pub steps: Vec<StepRecord>,
    pub summary: EpisodeSummary,
    /// Wall time per control step; measured, so kept out of serialized
    /// logs to preserve byte-level reproducibility.
    #[serde(skip)]
    pub wall_ms_per_step: f64,
}

/// Wall time is measured, not simulated; two runs of the same seed count
/// as equal records.
impl PartialEq for EpisodeRecord {
    fn eq(&self, other: &Self) -> bool {
        self.trial == other.trial
            && self.truth == other.truth
            && self.steps == other.steps
            && self.summary == other.summary
    }
}

pub struct TrialSetup {
    pub truth: LatentParam,
    pub belief: ParticleBelief,
    pub start: SlotState,
}

/// Draws the true slot geometry around the nominal camera estimate and
/// initializes the belief from the same prior, half-widths floored to stay
/// positive.
pub fn trial_setup(cfg: &ExperimentConfig, trial_key: StreamKey) -> Result<TrialSetup> {
    let tb = &cfg.testbed;
    let mut truth_rng = trial_key.child(label::TRUE_THETA).stream();
    let c_true = tb.slot_center + cfg.sigma_p * f64::standard_normal(&mut truth_rng);
    let w_true = (tb.slot_half_width + tb.sigma_w_slot * f64::standard_normal(&mut truth_rng))
        .max(tb.w_floor);
    let truth = LatentParam::new(vec![c_true, w_true]);
    let mut init_rng = trial_key.child(label::BELIEF_INIT).stream();
    let belief = ParticleBelief::init_gaussian(
        &GenericParam::new(vec![tb.slot_center, tb.slot_half_width]),
        &[cfg.sigma_p, tb.sigma_w_slot],
        tb.belief_particles,
        &mut init_rng,
    )
    .context("belief prior")?
    .map_particles(|p| GenericParam::new(vec![p[0], p[1].max(tb.w_floor)]))
    .context("half-width floor")?;
    Ok(TrialSetup {
        truth,
        belief,
        start: SlotState::at(tb.start[0], tb.start[1]),
    })
}

fn weighted_std(belief: &ParticleBelief, mean: &LatentParam) -> [f64; 2] {
    let mut acc = [0.0f64; 2];
    for (p, &w) in belief.particles().iter().zip(belief.weights()) {
        for d in 0..2 {
            acc[d] += w * (p[d] - mean[d]).powi(2);
        }
    }
    [acc[0].sqrt(), acc[1].sqrt()]
}

/// Plant-in-the-loop simulation state: true geometry, belief, current
/// state, warm start, and the derived noise streams. The episode runner
/// and the guarantee checkers drive the same measurement and plant logic
/// through this; only what they record differs.
pub struct EpisodeSim {
    pub sys: SlotSystem,
    pub truth: LatentParam,
    pub goal: [f64; 2],
    pub belief: ParticleBelief,
    pub x: SlotState,
    pub u_hat: ControlSequence<f64>,
    obs_rng: ChaCha8Rng,
    process_rng: ChaCha8Rng,
    resample_rng: ChaCha8Rng,
    camera_on: bool,
    n_thr: f64,
    shrinkage: f64,
    w_floor: f64,
}

impl EpisodeSim {
    /// Standard trial staging: truth and belief drawn by [`trial_setup`].
    pub fn new(cfg: &ExperimentConfig, trial_key: StreamKey) -> Result<Self> {
        let setup = trial_setup(cfg, trial_key)?;
        Self::from_parts(cfg, setup.truth, setup.belief, setup.start, trial_key)
    }

    /// Custom staging with an explicit truth, belief, and start state; the
    /// noise streams still derive from the trial key.
    pub fn from_parts(
        cfg: &ExperimentConfig,
        truth: LatentParam,
        belief: ParticleBelief,
        start: SlotState,
        trial_key: StreamKey,
    ) -> Result<Self> {
        let sys = SlotSystem::new(cfg.slot_config()).context("slot system")?;
        let goal = sys.goal_point(&SlotGeometry::from_param(&truth));
        Ok(EpisodeSim {
            sys,
            truth,
            goal,
            belief,
            x: start,
            u_hat: cfg.initial_warm_start(),
            obs_rng: trial_key.child(label::OBSERVATION).stream(),
            process_rng: trial_key.child(label::PROCESS).stream(),
            resample_rng: trial_key.child(label::RESAMPLE).stream(),
            camera_on: cfg.testbed.sigma_v > 0.0,
            n_thr: cfg.n_thr,
            shrinkage: {
                let delta = cfg.testbed.belief_discount;
                (3.0 * delta - 1.0) / (2.0 * delta)
            },
            w_floor: cfg.testbed.w_floor,
        })
    }

    /// Draws one measurement, reweights the belief, and resamples if the
    /// effective sample size fell below the threshold. Returns the
    /// measurement and whether the update degenerated. A disabled camera
    /// leaves the belief untouched.
    pub fn observe_update(&mut self) -> Result<(Option<f64>, bool)> {
        if !self.camera_on {
            return Ok((None, false));
        }
        let z = self.sys.sample_observation(&self.truth, &mut self.obs_rng);
        let update = self
            .belief
            .update(|theta| self.sys.observe_likelihood(z, theta))
            .context("belief update")?;
        let degenerate = update.degenerate;
        self.belief = update.belief;
        if self.belief.ess() < self.n_thr {
            let resampled = self.belief.resample_systematic(&mut self.resample_rng);
            // Resampling only duplicates; repeated triggers would thin the
            // support to a few repeated points and the spread would stop
            // being trustworthy. Liu-West shrinkage keeps the first two
            // moments while refreshing the support, letting the particles
            // settle wherever the measurements point.
            let mean = resampled.posterior_mean();
            let std = weighted_std(&resampled, &mean);
            let a = self.shrinkage;
            let h = (1.0 - a * a).sqrt();
            let (w_floor, rng) = (self.w_floor, &mut self.resample_rng);
            self.belief = resampled
                .map_particles(|p| {
                    let c = a * p[0]
                        + (1.0 - a) * mean[0]
                        + h * std[0] * f64::standard_normal(rng);
                    let w = a * p[1]
                        + (1.0 - a) * mean[1]
                        + h * std[1] * f64::standard_normal(rng);
                    LatentParam::new(vec![c, w.max(w_floor)])
                })
                .context("rejuvenated belief")?;
        }
        Ok((Some(z), degenerate))
    }

    /// Applies one control through the true plant.
    pub fn apply(&mut self, control: &[f64; 2]) {
        self.x = self
            .sys
            .step(&self.x, control, &self.truth, &mut self.process_rng);
    }

    /// Realized safety margin of the current state under the truth.
    pub fn realized_margin(&self) -> f64 {
        self.sys.safety_margin(&self.x, &self.truth)
    }

    /// Realized exterior contact force at the current state (N).
    pub fn realized_force(&self, k_c: f64) -> f64 {
        let clearance = self
            .sys
            .env_clearance(&self.x.p, &SlotGeometry::from_param(&self.truth));
        k_c * (-clearance).max(0.0)
    }
}

/// What the episode loop needs from either solver variant.
pub struct SolveSummary {
    pub control: [f64; 2],
    pub warm_start: ControlSequence<f64>,
    pub achieved_mean_cost: f64,
    pub achieved_cvar_neg_margin: f64,
    pub achieved_violation_fraction: f64,
    pub uniform_fallback: bool,
}

/// Runs one solve of the configured variant and normalizes its outcome.
pub fn solve_variant(
    cfg: &ExperimentConfig,
    sim: &EpisodeSim,
    solve_key: StreamKey,
) -> Result<SolveSummary> {
    let mppi = cfg.mppi_config();
    match cfg.variant {
        Variant::Cvar | Variant::Neutral => {
            let out = solve_step(
                &sim.sys,
                &sim.x,
                &sim.belief,
                &sim.u_hat,
                &mppi,
                &cfg.risk_params(),
                solve_key,
            )
            .context("solve")?;
            let violating = out
                .diagnostics
                .achieved
                .margins
                .iter()
                .filter(|&&m| m < 0.0)
                .count();
            Ok(SolveSummary {
                control: [out.first_control()[0], out.first_control()[1]],
                achieved_mean_cost: out.diagnostics.achieved.mean_cost,
                achieved_cvar_neg_margin: out.diagnostics.achieved_cvar_neg_margin,
                achieved_violation_fraction: violating as f64
                    / out.diagnostics.achieved.margins.len() as f64,
                uniform_fallback: out.diagnostics.uniform_fallback,
                warm_start: out.warm_start,
            })
        }
        Variant::Cc => {
            let out = cc_solve_step(
                &sim.sys,
                &sim.x,
                &sim.belief,
                &sim.u_hat,
                &mppi,
                &cfg.chance_params(),
                solve_key,
            )
            .context("solve")?;
            let negated: Vec<f64> = out.diagnostics.achieved.margins.iter().map(|m| -m).collect();
            let beta_s = ConfidenceLevel::new(cfg.beta_s).expect("validated");
            let cvar = cvar_tail_average(&negated, beta_s).expect("finite margins");
            Ok(SolveSummary {
                control: [out.first_control()[0], out.first_control()[1]],
                achieved_mean_cost: out.diagnostics.achieved.mean_cost,
                achieved_cvar_neg_margin: cvar,
                achieved_violation_fraction: out.diagnostics.achieved_violation_fraction,
                uniform_fallback: out.diagnostics.uniform_fallback,
                warm_start: out.warm_start,
            })
        }
    }
}

pub fn run_episode(cfg: &ExperimentConfig, trial: u64, trial_key: StreamKey) -> Result<EpisodeRecord> {
    let mut sim = EpisodeSim::new(cfg, trial_key)?;
    let mut steps = Vec::new();
    let mut distances = Vec::new();
    let mut min_margin = sim.realized_margin();
    let mut max_force = 0.0f64;
    let mut degenerate_updates = 0usize;
    let mut success = false;
    let mut force_abort = false;
    let started = Instant::now();

    for t in 0..cfg.t_max {
        let (observation, degenerate) = sim.observe_update()?;
        if degenerate {
            degenerate_updates += 1;
        }
        let solved = solve_variant(cfg, &sim, trial_key.derive(&[label::SOLVE, t as u64]))?;
        sim.apply(&solved.control);
        sim.u_hat = solved.warm_start;

        let margin = sim.realized_margin();
        let force = sim.realized_force(cfg.testbed.k_c);
        let distance = (sim.x.p[0] - sim.goal[0]).hypot(sim.x.p[1] - sim.goal[1]);
        min_margin = min_margin.min(margin);
        max_force = max_force.max(force);
        distances.push(distance);

        let belief_mean = sim.belief.posterior_mean();
        let belief_std = weighted_std(&sim.belief, &belief_mean);
        steps.push(StepRecord {
            t,
            position: [sim.x.p[0], sim.x.p[1]],
            control: solved.control,
            observation,
            belief_mean: [belief_mean[0], belief_mean[1]],
            belief_std,
            ess: sim.belief.ess(),
            margin,
            exterior_force: force,
            distance,
            achieved_mean_cost: solved.achieved_mean_cost,
            achieved_cvar_neg_margin: solved.achieved_cvar_neg_margin,
            achieved_violation_fraction: solved.achieved_violation_fraction,
            uniform_fallback: solved.uniform_fallback,
        });

        if force > FORCE_ABORT_FACTOR * cfg.f_env_max {
            force_abort = true;
            break;
        }
        if sim.sys.success(&sim.x, &sim.truth) {
            success = true;
            break;
        }
    }

    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    let final_distance = smoothed_last(&distances, SMOOTH_WINDOW, SMOOTH_DEGREE);
    Ok(EpisodeRecord {
        trial,
        truth: [sim.truth[0], sim.truth[1]],
        summary: EpisodeSummary {
            success,
            force_abort,
            steps: steps.len(),
            min_margin,
            max_exterior_force: max_force,
            final_distance,
            degenerate_updates,
        },
        wall_ms_per_step: elapsed_ms / steps.len().max(1) as f64,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.sigma_p = 0.0;
        cfg.testbed.sigma_w = 0.0;
        cfg.testbed.sigma_v = 0.0;
        cfg.testbed.sigma_w_slot = 0.0;
        cfg
    }

    #[test]
    fn noiseless_aligned_episode_succeeds_without_contact() {
        let cfg = noiseless_config();
        let record = run_episode(&cfg, 0, StreamKey::from_root(100).derive(&[label::TRIAL, 0]))
            .unwrap();
        assert!(record.summary.success, "no success in {} steps", record.summary.steps);
        assert_eq!(record.summary.max_exterior_force, 0.0);
        assert!(record.summary.min_margin > 0.0);
        assert!(record.summary.final_distance <= cfg.eps_p);
        assert_eq!(record.truth, [0.0, 48.75]);
    }

    #[test]
    fn single_solve_budget_yields_single_step() {
        let mut cfg = noiseless_config();
        cfg.t_max = 1;
        let record = run_episode(&cfg, 3, StreamKey::from_root(101).derive(&[label::TRIAL, 3]))
            .unwrap();
        assert_eq!(record.steps.len(), 1);
        assert_eq!(record.summary.steps, 1);
        assert!(!record.summary.success);
    }

    #[test]
    fn identical_seeds_reproduce_the_record_exactly() {
        let mut cfg = ExperimentConfig::default();
        cfg.t_max = 25;
        let key = StreamKey::from_root(102).derive(&[label::TRIAL, 7]);
        let a = run_episode(&cfg, 7, key).unwrap();
        let b = run_episode(&cfg, 7, key).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn camera_off_track_skips_belief_updates() {
        let mut cfg = noiseless_config();
        cfg.sigma_p = 12.0;
        cfg.t_max = 5;
        let record = run_episode(&cfg, 1, StreamKey::from_root(103).derive(&[label::TRIAL, 1]))
            .unwrap();
        for step in &record.steps {
            assert!(step.observation.is_none());
            // prior never sharpens without observations
            assert!((step.belief_std[0] - record.steps[0].belief_std[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn cc_variant_runs_and_logs_violation_fraction() {
        let mut cfg = ExperimentConfig::default();
        cfg.variant = Variant::Cc;
        cfg.t_max = 10;
        let record = run_episode(&cfg, 2, StreamKey::from_root(104).derive(&[label::TRIAL, 2]))
            .unwrap();
        assert_eq!(record.steps.len().min(10), record.steps.len());
        for step in &record.steps {
            assert!((0.0..=1.0).contains(&step.achieved_violation_fraction));
        }
    }
}

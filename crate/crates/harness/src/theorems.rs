//! Checks of the planner's guarantees, run against the same solver and
//! plant the experiments use.
//!
//! Each check is a falsification attempt with explicit statistical slack.
//! Qualification and verification always use independent draws so that
//! selecting on one set cannot bias the other, and every random quantity
//! derives from the caller's seed.

use crate::config::ExperimentConfig;
use crate::episode::EpisodeSim;
use anyhow::{Context, Result};
use bsmppi::belief::LatentParam as GenericParam;
use bsmppi::controller::{rollout_batch, rollout_sequence, sample_candidates, solve_step};
use bsmppi::risk::{cvar_tail_average, ConfidenceLevel};
use bsmppi::rng::{label, StreamKey};
use bsmppi::{ControlSequence, LatentParam, ParticleBelief, Real, SlotState, SlotSystem};
use rayon::prelude::*;
use std::fmt;

/// Per-candidate scalars the risk-sensitive selection rule works with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateStats {
    pub mean_cost: f64,
    pub cvar_cost: f64,
    pub cvar_neg_margin: f64,
}

pub fn candidate_stats(
    costs: &[f64],
    margins: &[f64],
    beta_c: ConfidenceLevel<f64>,
    beta_s: ConfidenceLevel<f64>,
) -> Result<CandidateStats> {
    let mean_cost = costs.iter().sum::<f64>() / costs.len() as f64;
    let cvar_cost = cvar_tail_average(costs, beta_c).context("cost tail")?;
    let neg: Vec<f64> = margins.iter().map(|m| -m).collect();
    let cvar_neg_margin = cvar_tail_average(&neg, beta_s).context("margin tail")?;
    Ok(CandidateStats {
        mean_cost,
        cvar_cost,
        cvar_neg_margin,
    })
}

/// Risk-weighted argmin over the safety-feasible candidates, enumerated
/// exactly at each risk weight in `lambdas`.
#[derive(Clone, Debug, PartialEq)]
pub enum Thm2Outcome {
    Converged {
        /// Argmin of mean + lambda_r * cvar at each requested weight.
        argmins: Vec<usize>,
        /// Argmin of the mean alone over the feasible set.
        mean_argmin: usize,
    },
    /// No candidate satisfied the safety CVaR constraint.
    EmptyFeasible,
}

/// Default decreasing risk-weight grid. Spans four decades below the
/// crossover batch's switch point and ends at exactly zero.
pub const THM2_LAMBDA_GRID: &[f64] = &[1.0, 0.5, 0.1, 0.01, 1e-3, 1e-4, 1e-6, 1e-9, 0.0];

/// As the risk weight shrinks, the constrained risk-weighted argmin must
/// hand over to the constrained mean argmin. Feasibility is decided first
/// and never depends on the weight; ties break to the lowest index.
pub fn verify_thm2(stats: &[CandidateStats], lambdas: &[f64]) -> Thm2Outcome {
    let feasible: Vec<usize> = (0..stats.len())
        .filter(|&i| stats[i].cvar_neg_margin <= 0.0)
        .collect();
    if feasible.is_empty() {
        return Thm2Outcome::EmptyFeasible;
    }
    let argmin = |score: &dyn Fn(usize) -> f64| -> usize {
        let mut best = feasible[0];
        for &i in &feasible[1..] {
            if score(i) < score(best) {
                best = i;
            }
        }
        best
    };
    let argmins = lambdas
        .iter()
        .map(|&lr| argmin(&|i| stats[i].mean_cost + lr * stats[i].cvar_cost))
        .collect();
    let mean_argmin = argmin(&|i| stats[i].mean_cost);
    Thm2Outcome::Converged {
        argmins,
        mean_argmin,
    }
}

/// Hand-built two-candidate batch whose argmin provably switches as the
/// risk weight falls: A has the lower tail, B the lower mean, and the
/// crossover sits at lambda_r = 0.025 for a 16-draw batch at level 0.9.
pub fn crossover_batch() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = 16;
    let a_costs = vec![10.0; n];
    // two tail draws of 30 leave the mean at 9.5 once the rest absorb
    // the remainder
    let mut b_costs = vec![(9.5 * n as f64 - 60.0) / (n - 2) as f64; n];
    b_costs[0] = 30.0;
    b_costs[1] = 30.0;
    let margins = vec![1.0; n];
    (vec![a_costs, b_costs], vec![margins.clone(), margins])
}

/// Frozen batches of candidate statistics from seeded solve scenarios:
/// random hover states, beliefs of varying sharpness, zero warm start.
pub fn harvest_batches(
    cfg: &ExperimentConfig,
    count: usize,
    key: StreamKey,
) -> Result<Vec<Vec<CandidateStats>>> {
    let sys = SlotSystem::new(cfg.slot_config()).context("slot system")?;
    let mppi = cfg.mppi_config();
    let beta_c = ConfidenceLevel::new(cfg.beta_c).expect("validated");
    let beta_s = ConfidenceLevel::new(cfg.beta_s).expect("validated");
    let tb = &cfg.testbed;
    (0..count as u64)
        .into_par_iter()
        .map(|b| {
            let bkey = key.derive(&[label::BATCH, b]);
            let mut scenario = bkey.child(label::TRUE_THETA).stream();
            let x0 = SlotState::at(
                -25.0 + 50.0 * f64::unit_uniform(&mut scenario),
                20.0 + 70.0 * f64::unit_uniform(&mut scenario),
            );
            let mean_c = tb.slot_center + 3.0 * f64::standard_normal(&mut scenario);
            let std_c = 1.0 + 7.0 * f64::unit_uniform(&mut scenario);
            let mut prior = bkey.child(label::BELIEF_INIT).stream();
            let belief = ParticleBelief::init_gaussian(
                &GenericParam::new(vec![mean_c, tb.slot_half_width]),
                &[std_c, tb.sigma_w_slot],
                tb.belief_particles,
                &mut prior,
            )
            .context("batch prior")?
            .map_particles(|p| GenericParam::new(vec![p[0], p[1].max(tb.w_floor)]))
            .context("half-width floor")?;
            let thetas = belief
                .sample(cfg.n_p, &mut bkey.child(label::THETA_DRAW).stream())
                .context("batch draws")?;
            let cands = sample_candidates(
                &sys,
                &cfg.initial_warm_start(),
                &mppi,
                &mut bkey.child(label::CANDIDATE).stream(),
            );
            let batch = rollout_batch(&sys, &x0, &cands, &thetas, bkey);
            (0..cfg.k)
                .map(|j| candidate_stats(batch.cost_row(j), batch.margin_row(j), beta_c, beta_s))
                .collect()
        })
        .collect()
}

pub struct Thm1Setup {
    /// Episodes whose solve steps become checkpoints.
    pub episodes: usize,
    /// Fresh parameter and noise draws per validation set.
    pub n_validation: usize,
}

impl Default for Thm1Setup {
    fn default() -> Self {
        Thm1Setup {
            episodes: 3,
            n_validation: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Thm1Report {
    pub beta_s: f64,
    pub n_validation: usize,
    pub checkpoints: usize,
    /// Checkpoints whose independent validation CVaR certified the plan.
    pub qualified: usize,
    /// beta_s minus three binomial standard errors at n_validation.
    pub bound: f64,
    /// Smallest safe fraction observed among qualified checkpoints.
    pub worst_fraction: Option<f64>,
    pub vacuous: bool,
    pub pass: bool,
}

impl fmt::Display for Thm1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "thm1 beta_s={}: {}/{} checkpoints qualified",
            self.beta_s, self.qualified, self.checkpoints
        )?;
        if self.vacuous {
            return write!(f, "; vacuous (no plan certified)");
        }
        write!(
            f,
            "; worst safe fraction {:.4} vs bound {:.4}; {}",
            self.worst_fraction.unwrap_or(f64::NAN),
            self.bound,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

struct Checkpoint {
    x: SlotState,
    belief: ParticleBelief,
    u_star: ControlSequence,
    key: StreamKey,
}

/// A certified plan must be safe with probability at least beta_s under
/// the belief it was certified against.
///
/// Checkpoints come from ordinary closed-loop episodes. At each one, an
/// independent validation set re-estimates the plan's safety CVaR; plans
/// it certifies are then checked on a second independent set, whose safe
/// fraction must reach beta_s minus three binomial standard errors.
pub fn verify_thm1(cfg: &ExperimentConfig, setup: &Thm1Setup) -> Result<Thm1Report> {
    let mppi = cfg.mppi_config();
    let risk = cfg.risk_params();
    let beta_s = ConfidenceLevel::new(cfg.beta_s).expect("validated");
    let root = StreamKey::from_root(cfg.seed);

    let mut checkpoints = Vec::new();
    for e in 0..setup.episodes as u64 {
        let tkey = root.derive(&[label::TRIAL, e]);
        let mut sim = EpisodeSim::new(cfg, tkey)?;
        for t in 0..cfg.t_max {
            sim.observe_update()?;
            let skey = tkey.derive(&[label::SOLVE, t as u64]);
            let out = solve_step(&sim.sys, &sim.x, &sim.belief, &sim.u_hat, &mppi, &risk, skey)
                .context("solve")?;
            checkpoints.push(Checkpoint {
                x: sim.x,
                belief: sim.belief.clone(),
                u_star: out.u_star.clone(),
                key: skey,
            });
            let u0 = [out.first_control()[0], out.first_control()[1]];
            sim.u_hat = out.warm_start;
            sim.apply(&u0);
            if sim.sys.success(&sim.x, &sim.truth) {
                break;
            }
        }
    }

    let sys = SlotSystem::new(cfg.slot_config()).context("slot system")?;
    let n = setup.n_validation;
    let fractions: Vec<Option<f64>> = checkpoints
        .par_iter()
        .map(|c| -> Result<Option<f64>> {
            let rollout_margins = |set: u64| -> Result<Vec<f64>> {
                let vkey = c.key.derive(&[label::VALIDATION, set]);
                let thetas = c
                    .belief
                    .sample(n, &mut vkey.child(label::THETA_DRAW).stream())
                    .context("validation draws")?;
                Ok(thetas
                    .iter()
                    .enumerate()
                    .map(|(i, theta)| {
                        let mut rng = vkey.derive(&[label::ROLLOUT, i as u64]).stream();
                        rollout_sequence(&sys, &c.x, &c.u_star, theta, &mut rng).1
                    })
                    .collect())
            };
            let neg: Vec<f64> = rollout_margins(0)?.iter().map(|m| -m).collect();
            if cvar_tail_average(&neg, beta_s).context("validation tail")? > 0.0 {
                return Ok(None);
            }
            let margins = rollout_margins(1)?;
            let safe = margins.iter().filter(|&&m| m >= 0.0).count();
            Ok(Some(safe as f64 / margins.len() as f64))
        })
        .collect::<Result<_>>()?;

    let qualified = fractions.iter().flatten().count();
    let worst = fractions
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let bound = cfg.beta_s - 3.0 * (cfg.beta_s * (1.0 - cfg.beta_s) / n as f64).sqrt();
    let vacuous = qualified == 0;
    Ok(Thm1Report {
        beta_s: cfg.beta_s,
        n_validation: n,
        checkpoints: checkpoints.len(),
        qualified,
        bound,
        worst_fraction: (!vacuous).then_some(worst),
        vacuous,
        pass: !vacuous && worst >= bound,
    })
}

pub struct Thm3Setup {
    /// Solves per run; the joint bound degrades linearly in this.
    pub t_solves: usize,
    pub runs: usize,
    /// Prior spread for (center, half-width); the truth is drawn from the
    /// same prior the belief starts from, so certification is attainable.
    pub prior_std: [f64; 2],
    /// Start position, staged at the slot mouth so every solve matters.
    pub start: [f64; 2],
}

impl Default for Thm3Setup {
    fn default() -> Self {
        Thm3Setup {
            t_solves: 5,
            runs: 400,
            prior_std: [0.8, 0.3],
            start: [0.0, 40.0],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Thm3Report {
    pub beta_s: f64,
    pub t_solves: usize,
    pub runs: usize,
    /// Runs where every solve certified its plan.
    pub qualified: usize,
    /// Qualified runs whose executed trajectory never lost the margin.
    pub safe_qualified: usize,
    /// Union bound 1 - T(1 - beta_s) on the joint safety probability.
    pub bound: f64,
    /// Bound minus three binomial standard errors at the qualified count.
    pub threshold: f64,
    pub observed: f64,
    pub pass: bool,
}

impl fmt::Display for Thm3Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "thm3 beta_s={} T={}: {}/{} runs fully certified; joint safety {:.4} vs threshold {:.4} (bound {:.4}, slack {:+.4}); {}",
            self.beta_s,
            self.t_solves,
            self.qualified,
            self.runs,
            self.observed,
            self.threshold,
            self.bound,
            self.observed - self.bound,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// Over a T-solve episode in which every solve certified its plan, the
/// executed trajectory stays safe with probability at least 1 - T(1 -
/// beta_s). Runs with any uncertified solve are excluded, matching the
/// guarantee's qualification.
pub fn verify_thm3(cfg: &ExperimentConfig, setup: &Thm3Setup) -> Result<Thm3Report> {
    let root = StreamKey::from_root(cfg.seed);
    let tb = cfg.testbed.clone();
    let outcomes: Vec<(bool, bool)> = (0..setup.runs as u64)
        .into_par_iter()
        .map(|r| -> Result<(bool, bool)> {
            let run_key = root.derive(&[label::TRIAL, r]);
            let mut truth_rng = run_key.child(label::TRUE_THETA).stream();
            let c = tb.slot_center + setup.prior_std[0] * f64::standard_normal(&mut truth_rng);
            let w = (tb.slot_half_width + setup.prior_std[1] * f64::standard_normal(&mut truth_rng))
                .max(tb.w_floor);
            let truth = LatentParam::new(vec![c, w]);
            let mut prior_rng = run_key.child(label::BELIEF_INIT).stream();
            let belief = ParticleBelief::init_gaussian(
                &GenericParam::new(vec![tb.slot_center, tb.slot_half_width]),
                &setup.prior_std,
                tb.belief_particles,
                &mut prior_rng,
            )
            .context("run prior")?
            .map_particles(|p| GenericParam::new(vec![p[0], p[1].max(tb.w_floor)]))
            .context("half-width floor")?;
            let mut sim = EpisodeSim::from_parts(
                cfg,
                truth,
                belief,
                SlotState::at(setup.start[0], setup.start[1]),
                run_key,
            )?;
            let mppi = cfg.mppi_config();
            let risk = cfg.risk_params();
            let mut certified = true;
            let mut min_margin = sim.realized_margin();
            for t in 0..setup.t_solves {
                sim.observe_update()?;
                let out = solve_step(
                    &sim.sys,
                    &sim.x,
                    &sim.belief,
                    &sim.u_hat,
                    &mppi,
                    &risk,
                    run_key.derive(&[label::SOLVE, t as u64]),
                )
                .context("solve")?;
                if !(out.diagnostics.achieved_cvar_neg_margin <= 0.0) {
                    certified = false;
                }
                let u0 = [out.first_control()[0], out.first_control()[1]];
                sim.u_hat = out.warm_start;
                sim.apply(&u0);
                min_margin = min_margin.min(sim.realized_margin());
            }
            Ok((certified, min_margin >= 0.0))
        })
        .collect::<Result<_>>()?;

    let qualified = outcomes.iter().filter(|(c, _)| *c).count();
    let safe_qualified = outcomes.iter().filter(|(c, s)| *c && *s).count();
    let bound = 1.0 - setup.t_solves as f64 * (1.0 - cfg.beta_s);
    let se = (bound * (1.0 - bound) / qualified.max(1) as f64).sqrt();
    let threshold = bound - 3.0 * se;
    let observed = safe_qualified as f64 / qualified.max(1) as f64;
    Ok(Thm3Report {
        beta_s: cfg.beta_s,
        t_solves: setup.t_solves,
        runs: setup.runs,
        qualified,
        safe_qualified,
        bound,
        threshold,
        observed,
        pass: qualified > 0 && observed >= threshold,
    })
}

//! Path-integral control over a particle belief.
//!
//! One solve does: draw parameters from the belief, sample Gaussian
//! perturbations of the warm-start sequence, roll every candidate out
//! under every parameter draw with per-pair noise streams, score each
//! candidate from its rollout row, turn scores into softmax importance
//! weights, and blend the perturbations back into the sequence. The first
//! step of the result is applied; the rest, shifted, seeds the next solve.
//!
//! Two scoring rules share this pipeline. The risk-sensitive rule adds to
//! the expected cost a CVaR-of-cost term and a penalty on the clipped CVaR
//! of the negated safety margin, so a candidate pays for how bad its worst
//! outcomes are. The chance-constrained rule penalizes only the fraction
//! of parameter draws whose trajectory margin goes negative, blind to the
//! violation magnitude.
//!
//! Perturbations are recorded after clamping to the admissible box, so the
//! importance-weight correction and the update always use the perturbation
//! that was actually applied.

use crate::belief::{BeliefError, LatentParam, ParticleBelief};
use crate::risk::{cvar_tail_average, CompensatedSum, ConfidenceLevel};
use crate::rng::{label, StreamKey};
use crate::scalar::Real;
use crate::system::SystemModel;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("parameter {field} has invalid value {value}")]
    BadParam { field: &'static str, value: f64 },
    #[error("{what}: got {got}, expected {expected}")]
    ShapeMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

/// Planned controls for `horizon` steps, stored flat in step-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSequence<T> {
    flat: Vec<T>,
    control_dim: usize,
}

impl<T: Real> ControlSequence<T> {
    pub fn new(flat: Vec<T>, control_dim: usize) -> Result<Self, ControllerError> {
        if control_dim == 0 {
            return Err(ControllerError::BadParam {
                field: "control_dim",
                value: 0.0,
            });
        }
        if flat.is_empty() || flat.len() % control_dim != 0 {
            return Err(ControllerError::ShapeMismatch {
                what: "control sequence entries",
                got: flat.len(),
                expected: control_dim.max(flat.len().div_ceil(control_dim) * control_dim),
            });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(ControllerError::NonFinite("control sequence"));
        }
        Ok(ControlSequence { flat, control_dim })
    }

    /// All-zero sequence.
    pub fn zeros(horizon: usize, control_dim: usize) -> Result<Self, ControllerError> {
        Self::new(vec![T::zero(); horizon * control_dim], control_dim)
    }

    pub fn horizon(&self) -> usize {
        self.flat.len() / self.control_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn step(&self, k: usize) -> &[T] {
        &self.flat[k * self.control_dim..(k + 1) * self.control_dim]
    }

    pub fn entries(&self) -> &[T] {
        &self.flat
    }

    /// Drops the first step and repeats the last, keeping the horizon.
    pub fn shift_warm_start(&self) -> Self {
        let m = self.control_dim;
        let mut flat = self.flat[m..].to_vec();
        flat.extend_from_slice(&self.flat[self.flat.len() - m..]);
        ControlSequence {
            flat,
            control_dim: m,
        }
    }
}

/// Sampler and solver sizes shared by both scoring rules.
#[derive(Clone, Debug)]
pub struct MppiConfig<T> {
    /// Candidate sequences per solve.
    pub candidates: usize,
    /// Planning steps per sequence.
    pub horizon: usize,
    /// Parameter draws per solve; every candidate is rolled out once per
    /// draw.
    pub particles: usize,
    /// Softmax temperature.
    pub lambda: T,
    /// Per-axis perturbation std; the perturbation covariance is diagonal.
    /// A zero entry freezes that axis at the warm start.
    pub sigma: Vec<T>,
    /// Nominal mean the importance-weight correction is taken against.
    /// `None` uses the warm start itself, which zeroes the correction.
    pub u_nominal_mean: Option<ControlSequence<T>>,
}

impl<T: Real> MppiConfig<T> {
    fn validate(&self, control_dim: usize, u_hat: &ControlSequence<T>) -> Result<(), ControllerError> {
        if self.candidates == 0 {
            return Err(ControllerError::BadParam {
                field: "candidates",
                value: 0.0,
            });
        }
        if self.horizon == 0 {
            return Err(ControllerError::BadParam {
                field: "horizon",
                value: 0.0,
            });
        }
        if self.particles == 0 {
            return Err(ControllerError::BadParam {
                field: "particles",
                value: 0.0,
            });
        }
        if !self.lambda.is_finite() || self.lambda <= T::zero() {
            return Err(ControllerError::BadParam {
                field: "lambda",
                value: self.lambda.as_f64(),
            });
        }
        if self.sigma.len() != control_dim {
            return Err(ControllerError::ShapeMismatch {
                what: "sigma entries",
                got: self.sigma.len(),
                expected: control_dim,
            });
        }
        for &s in &self.sigma {
            if !s.is_finite() || s < T::zero() {
                return Err(ControllerError::BadParam {
                    field: "sigma",
                    value: s.as_f64(),
                });
            }
        }
        if u_hat.control_dim() != control_dim {
            return Err(ControllerError::ShapeMismatch {
                what: "warm start control dim",
                got: u_hat.control_dim(),
                expected: control_dim,
            });
        }
        if u_hat.horizon() != self.horizon {
            return Err(ControllerError::ShapeMismatch {
                what: "warm start horizon",
                got: u_hat.horizon(),
                expected: self.horizon,
            });
        }
        if let Some(nominal) = &self.u_nominal_mean {
            if nominal.control_dim() != control_dim || nominal.horizon() != self.horizon {
                return Err(ControllerError::ShapeMismatch {
                    what: "nominal mean entries",
                    got: nominal.entries().len(),
                    expected: self.horizon * control_dim,
                });
            }
        }
        Ok(())
    }
}

/// Weights of the risk-sensitive score.
#[derive(Clone, Copy, Debug)]
pub struct RiskParams<T> {
    /// Weight on the cost CVaR term, in [0, 1]; zero removes it.
    pub lambda_r: T,
    /// Confidence level of the cost CVaR.
    pub beta_c: ConfidenceLevel<T>,
    /// Weight on the clipped safety CVaR penalty.
    pub mu: T,
    /// Confidence level of the safety CVaR.
    pub beta_s: ConfidenceLevel<T>,
}

impl<T: Real> RiskParams<T> {
    fn validate(&self) -> Result<(), ControllerError> {
        if !self.lambda_r.is_finite() || self.lambda_r < T::zero() || self.lambda_r > T::one() {
            return Err(ControllerError::BadParam {
                field: "lambda_r",
                value: self.lambda_r.as_f64(),
            });
        }
        if !self.mu.is_finite() || self.mu < T::zero() {
            return Err(ControllerError::BadParam {
                field: "mu",
                value: self.mu.as_f64(),
            });
        }
        Ok(())
    }
}

/// Weights of the chance-constrained score.
#[derive(Clone, Copy, Debug)]
pub struct ChanceParams<T> {
    /// Weight on the excess violation fraction.
    pub mu: T,
    /// Tolerated violation probability.
    pub delta: T,
    /// Compute margins from one rollout at the posterior mean instead of
    /// per parameter draw.
    pub margins_from_posterior_mean: bool,
}

impl<T: Real> ChanceParams<T> {
    fn validate(&self) -> Result<(), ControllerError> {
        if !self.mu.is_finite() || self.mu < T::zero() {
            return Err(ControllerError::BadParam {
                field: "mu",
                value: self.mu.as_f64(),
            });
        }
        if !self.delta.is_finite() || self.delta < T::zero() || self.delta >= T::one() {
            return Err(ControllerError::BadParam {
                field: "delta",
                value: self.delta.as_f64(),
            });
        }
        Ok(())
    }
}

/// Perturbed candidate sequences plus the perturbations actually applied
/// after clamping, flat in candidate-step-axis order.
#[derive(Clone, Debug)]
pub struct CandidateSet<T> {
    sequences: Vec<ControlSequence<T>>,
    perturbations: Vec<T>,
}

impl<T: Real> CandidateSet<T> {
    pub fn sequences(&self) -> &[ControlSequence<T>] {
        &self.sequences
    }

    pub fn perturbation(&self, j: usize) -> &[T] {
        let len = self.sequences[0].entries().len();
        &self.perturbations[j * len..(j + 1) * len]
    }
}

/// Per-candidate, per-draw rollout results with the perturbations that
/// produced them.
#[derive(Clone, Debug)]
pub struct RolloutBatch<T> {
    costs: Vec<T>,
    margins: Vec<T>,
    perturbations: Vec<T>,
    candidates: usize,
    particles: usize,
    horizon: usize,
    control_dim: usize,
}

impl<T: Real> RolloutBatch<T> {
    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn cost_row(&self, j: usize) -> &[T] {
        &self.costs[j * self.particles..(j + 1) * self.particles]
    }

    pub fn margin_row(&self, j: usize) -> &[T] {
        &self.margins[j * self.particles..(j + 1) * self.particles]
    }

    pub fn perturbation(&self, j: usize) -> &[T] {
        let len = self.horizon * self.control_dim;
        &self.perturbations[j * len..(j + 1) * len]
    }
}

/// Risk-sensitive score of one candidate, kept term by term.
#[derive(Clone, Copy, Debug)]
pub struct ScoreBreakdown<T> {
    pub mean_cost: T,
    pub cvar_cost: T,
    /// CVaR of the negated margins; positive means the unsafe tail is
    /// violating in expectation.
    pub cvar_neg_margin: T,
    pub safety_penalty: T,
    pub total: T,
}

/// Chance-constrained score of one candidate, kept term by term.
#[derive(Clone, Copy, Debug)]
pub struct ChanceBreakdown<T> {
    pub mean_cost: T,
    pub violation_fraction: T,
    pub penalty: T,
    pub total: T,
}

/// Normalized importance weights.
#[derive(Clone, Debug)]
pub struct WeightSet<T> {
    pub rho: Vec<T>,
    /// All exponents collapsed; the solver fell back to uniform weights.
    pub uniform_fallback: bool,
}

/// Fresh rollouts of the updated sequence against the same parameter
/// draws, one per draw.
#[derive(Clone, Debug)]
pub struct AchievedEval<T> {
    pub costs: Vec<T>,
    pub margins: Vec<T>,
    pub mean_cost: T,
    pub min_margin: T,
}

#[derive(Clone, Debug)]
pub struct SolveDiagnostics<T> {
    pub scores: Vec<ScoreBreakdown<T>>,
    pub weights: Vec<T>,
    pub uniform_fallback: bool,
    pub achieved: AchievedEval<T>,
    pub achieved_cvar_cost: T,
    /// Safety CVaR the updated sequence actually attains; the quantity the
    /// penalty term was steering.
    pub achieved_cvar_neg_margin: T,
}

#[derive(Clone, Debug)]
pub struct CcSolveDiagnostics<T> {
    pub scores: Vec<ChanceBreakdown<T>>,
    pub weights: Vec<T>,
    pub uniform_fallback: bool,
    pub achieved: AchievedEval<T>,
    pub achieved_violation_fraction: T,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome<T> {
    pub u_star: ControlSequence<T>,
    pub warm_start: ControlSequence<T>,
    pub diagnostics: SolveDiagnostics<T>,
}

impl<T: Real> SolveOutcome<T> {
    pub fn first_control(&self) -> &[T] {
        self.u_star.step(0)
    }
}

#[derive(Clone, Debug)]
pub struct CcSolveOutcome<T> {
    pub u_star: ControlSequence<T>,
    pub warm_start: ControlSequence<T>,
    pub diagnostics: CcSolveDiagnostics<T>,
}

impl<T: Real> CcSolveOutcome<T> {
    pub fn first_control(&self) -> &[T] {
        self.u_star.step(0)
    }
}

/// Draws `candidates` Gaussian perturbations of the warm start, clamps
/// each step to the admissible box, and records the post-clamp
/// perturbations.
pub fn sample_candidates<T: Real, M: SystemModel<T>, R: Rng + ?Sized>(
    model: &M,
    u_hat: &ControlSequence<T>,
    cfg: &MppiConfig<T>,
    rng: &mut R,
) -> CandidateSet<T> {
    let m = u_hat.control_dim();
    let len = u_hat.entries().len();
    let mut sequences = Vec::with_capacity(cfg.candidates);
    let mut perturbations = Vec::with_capacity(cfg.candidates * len);
    for _ in 0..cfg.candidates {
        let mut flat = Vec::with_capacity(len);
        for k in 0..u_hat.horizon() {
            let base = u_hat.step(k);
            let mut step: Vec<T> = (0..m)
                .map(|d| base[d] + cfg.sigma[d] * T::standard_normal(rng))
                .collect();
            model.clamp_control(&mut step);
            flat.extend_from_slice(&step);
        }
        for (v, h) in flat.iter().zip(u_hat.entries()) {
            perturbations.push(*v - *h);
        }
        sequences.push(ControlSequence {
            flat,
            control_dim: m,
        });
    }
    CandidateSet {
        sequences,
        perturbations,
    }
}

/// Cost and worst margin of one sequence from one parameter draw.
pub fn rollout_sequence<T: Real, M: SystemModel<T>, R: Rng + ?Sized>(
    model: &M,
    x0: &M::State,
    seq: &ControlSequence<T>,
    theta: &LatentParam<T>,
    rng: &mut R,
) -> (T, T) {
    let mut x = x0.clone();
    let mut cost = T::zero();
    let mut margin = model.safety_margin(&x, theta);
    for k in 0..seq.horizon() {
        let u = seq.step(k);
        cost += model.stage_cost(&x, u, theta);
        x = model.step(&x, u, theta, rng);
        margin = margin.min(model.safety_margin(&x, theta));
    }
    (cost + model.terminal_cost(&x, theta), margin)
}

/// Rolls every candidate out under every parameter draw. Process noise for
/// pair (j, i) comes from a stream keyed by (j, i), so results do not
/// depend on evaluation order.
pub fn rollout_batch<T: Real, M: SystemModel<T>>(
    model: &M,
    x0: &M::State,
    cands: &CandidateSet<T>,
    thetas: &[LatentParam<T>],
    key: StreamKey,
) -> RolloutBatch<T> {
    let k = cands.sequences.len();
    let n = thetas.len();
    let mut costs = Vec::with_capacity(k * n);
    let mut margins = Vec::with_capacity(k * n);
    for (j, seq) in cands.sequences.iter().enumerate() {
        for (i, theta) in thetas.iter().enumerate() {
            let mut rng = key.derive(&[label::ROLLOUT, j as u64, i as u64]).stream();
            let (cost, margin) = rollout_sequence(model, x0, seq, theta, &mut rng);
            costs.push(cost);
            margins.push(margin);
        }
    }
    RolloutBatch {
        costs,
        margins,
        perturbations: cands.perturbations.clone(),
        candidates: k,
        particles: n,
        horizon: cands.sequences[0].horizon(),
        control_dim: cands.sequences[0].control_dim(),
    }
}

fn mean<T: Real>(values: &[T]) -> T {
    let mut sum = CompensatedSum::default();
    for &v in values {
        sum.add(v);
    }
    sum.value() / T::from_usize(values.len()).unwrap()
}

/// Risk-sensitive score of one rollout row: expected cost, plus
/// `lambda_r` times the cost CVaR, plus `mu` times the clipped CVaR of the
/// negated margins.
pub fn score_risk<T: Real>(costs: &[T], margins: &[T], risk: &RiskParams<T>) -> ScoreBreakdown<T> {
    let mean_cost = mean(costs);
    let cvar_cost =
        cvar_tail_average(costs, risk.beta_c).expect("rollout costs are finite and non-empty");
    let negated: Vec<T> = margins.iter().map(|&m| -m).collect();
    let cvar_neg_margin =
        cvar_tail_average(&negated, risk.beta_s).expect("rollout margins are finite and non-empty");
    let safety_penalty = risk.mu * cvar_neg_margin.max(T::zero());
    ScoreBreakdown {
        mean_cost,
        cvar_cost,
        cvar_neg_margin,
        safety_penalty,
        total: mean_cost + risk.lambda_r * cvar_cost + safety_penalty,
    }
}

/// Chance-constrained score of one rollout row: expected cost plus `mu`
/// times the excess of the violating-draw fraction over `delta`.
pub fn score_chance<T: Real>(
    costs: &[T],
    margins: &[T],
    chance: &ChanceParams<T>,
) -> ChanceBreakdown<T> {
    let mean_cost = mean(costs);
    let violating = margins.iter().filter(|&&m| m < T::zero()).count();
    let violation_fraction =
        T::from_usize(violating).unwrap() / T::from_usize(margins.len()).unwrap();
    let penalty = chance.mu * (violation_fraction - chance.delta).max(T::zero());
    ChanceBreakdown {
        mean_cost,
        violation_fraction,
        penalty,
        total: mean_cost + penalty,
    }
}

/// Softmax importance weights over candidate scores, with the
/// nominal-mean correction term and smallest-exponent stabilization.
pub fn mppi_weights<T: Real>(
    totals: &[T],
    batch: &RolloutBatch<T>,
    u_hat: &ControlSequence<T>,
    cfg: &MppiConfig<T>,
) -> WeightSet<T> {
    let k = totals.len();
    // zero-variance axes carry no perturbation, so they drop out of the
    // correction instead of dividing by zero
    let inv_var: Vec<T> = cfg
        .sigma
        .iter()
        .map(|&s| {
            if s > T::zero() {
                T::one() / (s * s)
            } else {
                T::zero()
            }
        })
        .collect();
    let m = u_hat.control_dim();
    let mut args = Vec::with_capacity(k);
    for (j, &total) in totals.iter().enumerate() {
        let mut correction = T::zero();
        if let Some(nominal) = &cfg.u_nominal_mean {
            let eps = batch.perturbation(j);
            for (idx, (&h, &n)) in u_hat.entries().iter().zip(nominal.entries()).enumerate() {
                correction += (h - n) * inv_var[idx % m] * eps[idx];
            }
        }
        args.push(total / cfg.lambda + correction);
    }
    let a_min = args.iter().copied().fold(T::infinity(), T::min);
    let mut rho: Vec<T> = args.iter().map(|&a| (-(a - a_min)).exp()).collect();
    let mut total = CompensatedSum::default();
    for &w in &rho {
        total.add(w);
    }
    let total = total.value();
    if !total.is_finite() || total <= T::zero() {
        let uniform = T::one() / T::from_usize(k).unwrap();
        return WeightSet {
            rho: vec![uniform; k],
            uniform_fallback: true,
        };
    }
    for w in &mut rho {
        *w = *w / total;
    }
    WeightSet {
        rho,
        uniform_fallback: false,
    }
}

/// Blends the weighted perturbations into the warm start and clamps.
pub fn update_control<T: Real, M: SystemModel<T>>(
    model: &M,
    u_hat: &ControlSequence<T>,
    rho: &[T],
    batch: &RolloutBatch<T>,
) -> ControlSequence<T> {
    let m = u_hat.control_dim();
    let mut flat = u_hat.entries().to_vec();
    for (j, &w) in rho.iter().enumerate() {
        for (v, &e) in flat.iter_mut().zip(batch.perturbation(j)) {
            *v += w * e;
        }
    }
    for step in flat.chunks_mut(m) {
        model.clamp_control(step);
    }
    ControlSequence {
        flat,
        control_dim: m,
    }
}

fn achieved_eval<T: Real, M: SystemModel<T>>(
    model: &M,
    x0: &M::State,
    u_star: &ControlSequence<T>,
    thetas: &[LatentParam<T>],
    key: StreamKey,
) -> AchievedEval<T> {
    let mut costs = Vec::with_capacity(thetas.len());
    let mut margins = Vec::with_capacity(thetas.len());
    for (i, theta) in thetas.iter().enumerate() {
        let mut rng = key.derive(&[label::EVALUATION, i as u64]).stream();
        let (cost, margin) = rollout_sequence(model, x0, u_star, theta, &mut rng);
        costs.push(cost);
        margins.push(margin);
    }
    let mean_cost = mean(&costs);
    let min_margin = margins.iter().copied().fold(T::infinity(), T::min);
    AchievedEval {
        costs,
        margins,
        mean_cost,
        min_margin,
    }
}

/// One risk-sensitive solve: belief draws, candidates, rollouts,
/// risk-regularized scores, weights, update, fresh evaluation of the
/// result, and the shifted warm start for the next cycle.
pub fn solve_step<T: Real, M: SystemModel<T>>(
    model: &M,
    x0: &M::State,
    belief: &ParticleBelief<T>,
    u_hat: &ControlSequence<T>,
    cfg: &MppiConfig<T>,
    risk: &RiskParams<T>,
    key: StreamKey,
) -> Result<SolveOutcome<T>, ControllerError> {
    cfg.validate(model.control_dim(), u_hat)?;
    risk.validate()?;
    let thetas = belief.sample(cfg.particles, &mut key.child(label::THETA_DRAW).stream())?;
    let cands = sample_candidates(model, u_hat, cfg, &mut key.child(label::CANDIDATE).stream());
    let batch = rollout_batch(model, x0, &cands, &thetas, key);
    let scores: Vec<ScoreBreakdown<T>> = (0..batch.candidates())
        .map(|j| score_risk(batch.cost_row(j), batch.margin_row(j), risk))
        .collect();
    let totals: Vec<T> = scores.iter().map(|s| s.total).collect();
    let weights = mppi_weights(&totals, &batch, u_hat, cfg);
    let u_star = update_control(model, u_hat, &weights.rho, &batch);
    let achieved = achieved_eval(model, x0, &u_star, &thetas, key);
    let achieved_cvar_cost = cvar_tail_average(&achieved.costs, risk.beta_c)
        .expect("evaluation costs are finite and non-empty");
    let negated: Vec<T> = achieved.margins.iter().map(|&m| -m).collect();
    let achieved_cvar_neg_margin = cvar_tail_average(&negated, risk.beta_s)
        .expect("evaluation margins are finite and non-empty");
    let warm_start = u_star.shift_warm_start();
    Ok(SolveOutcome {
        u_star,
        warm_start,
        diagnostics: SolveDiagnostics {
            scores,
            weights: weights.rho,
            uniform_fallback: weights.uniform_fallback,
            achieved,
            achieved_cvar_cost,
            achieved_cvar_neg_margin,
        },
    })
}

/// One chance-constrained solve. Identical pipeline to [`solve_step`] with
/// the violation-fraction score; margins optionally come from a single
/// posterior-mean rollout per candidate.
pub fn cc_solve_step<T: Real, M: SystemModel<T>>(
    model: &M,
    x0: &M::State,
    belief: &ParticleBelief<T>,
    u_hat: &ControlSequence<T>,
    cfg: &MppiConfig<T>,
    chance: &ChanceParams<T>,
    key: StreamKey,
) -> Result<CcSolveOutcome<T>, ControllerError> {
    cfg.validate(model.control_dim(), u_hat)?;
    chance.validate()?;
    let thetas = belief.sample(cfg.particles, &mut key.child(label::THETA_DRAW).stream())?;
    let cands = sample_candidates(model, u_hat, cfg, &mut key.child(label::CANDIDATE).stream());
    let batch = rollout_batch(model, x0, &cands, &thetas, key);
    let mean_margins: Option<Vec<T>> = chance.margins_from_posterior_mean.then(|| {
        let theta_bar = belief.posterior_mean();
        (0..batch.candidates())
            .map(|j| {
                let mut rng = key.derive(&[label::MEAN_MARGIN, j as u64]).stream();
                rollout_sequence(model, x0, &cands.sequences()[j], &theta_bar, &mut rng).1
            })
            .collect()
    });
    let scores: Vec<ChanceBreakdown<T>> = (0..batch.candidates())
        .map(|j| {
            let margins: &[T] = match &mean_margins {
                Some(ms) => core::slice::from_ref(&ms[j]),
                None => batch.margin_row(j),
            };
            score_chance(batch.cost_row(j), margins, chance)
        })
        .collect();
    let totals: Vec<T> = scores.iter().map(|s| s.total).collect();
    let weights = mppi_weights(&totals, &batch, u_hat, cfg);
    let u_star = update_control(model, u_hat, &weights.rho, &batch);
    let achieved = achieved_eval(model, x0, &u_star, &thetas, key);
    let violating = achieved.margins.iter().filter(|&&m| m < T::zero()).count();
    let achieved_violation_fraction =
        T::from_usize(violating).unwrap() / T::from_usize(achieved.margins.len()).unwrap();
    let warm_start = u_star.shift_warm_start();
    Ok(CcSolveOutcome {
        u_star,
        warm_start,
        diagnostics: CcSolveDiagnostics {
            scores,
            weights: weights.rho,
            uniform_fallback: weights.uniform_fallback,
            achieved,
            achieved_violation_fraction,
        },
    })
}

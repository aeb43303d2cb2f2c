//! Contract a controlled plant exposes to the solver, plus helpers that
//! fold costs and safety margins over rolled-out trajectories.
//!
//! A system model is a stateless evaluator: dynamics, costs, and margins
//! are pure functions of (state, control, parameter), with process noise
//! drawn from an explicit stream. That keeps rollouts embarrassingly
//! parallel and bit-reproducible under any scheduling.

use crate::belief::LatentParam;
use crate::scalar::Real;
use rand::Rng;
use thiserror::Error;

pub mod slot2d;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("trajectory must hold at least one state")]
    EmptyTrajectory,
    #[error("{controls} control entries, expected {expected} for horizon {horizon} x dim {dim}")]
    ControlLengthMismatch {
        controls: usize,
        expected: usize,
        horizon: usize,
        dim: usize,
    },
    #[error("control dimension must be positive")]
    ZeroControlDim,
    #[error("config field {field} has invalid value {value}")]
    BadConfig { field: &'static str, value: f64 },
}

/// Parametric stochastic system: dynamics `x' = f(x, u, theta, w)` with
/// stage cost, terminal cost, and a scalar safety margin per state.
///
/// The margin follows the barrier sign convention: positive means safe
/// with room to spare, negative means at least one safety channel is
/// violated at that state.
pub trait SystemModel<T: Real> {
    type State: Clone;

    fn control_dim(&self) -> usize;

    /// Projects `u` onto the admissible box in place.
    fn clamp_control(&self, u: &mut [T]);

    /// One discrete-time step. `u` must already be admissible.
    fn step<R: Rng + ?Sized>(
        &self,
        x: &Self::State,
        u: &[T],
        theta: &LatentParam<T>,
        rng: &mut R,
    ) -> Self::State;

    fn stage_cost(&self, x: &Self::State, u: &[T], theta: &LatentParam<T>) -> T;

    fn terminal_cost(&self, x: &Self::State, theta: &LatentParam<T>) -> T;

    fn safety_margin(&self, x: &Self::State, theta: &LatentParam<T>) -> T;
}

/// `H + 1` states and the `H` controls that produced them, controls stored
/// flat in row-major order.
#[derive(Clone, Debug)]
pub struct Trajectory<T, S> {
    states: Vec<S>,
    controls: Vec<T>,
    control_dim: usize,
}

impl<T: Real, S> Trajectory<T, S> {
    pub fn new(states: Vec<S>, controls: Vec<T>, control_dim: usize) -> Result<Self, SystemError> {
        if states.is_empty() {
            return Err(SystemError::EmptyTrajectory);
        }
        if control_dim == 0 {
            return Err(SystemError::ZeroControlDim);
        }
        let horizon = states.len() - 1;
        if controls.len() != horizon * control_dim {
            return Err(SystemError::ControlLengthMismatch {
                controls: controls.len(),
                expected: horizon * control_dim,
                horizon,
                dim: control_dim,
            });
        }
        Ok(Trajectory {
            states,
            controls,
            control_dim,
        })
    }

    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn control(&self, k: usize) -> &[T] {
        &self.controls[k * self.control_dim..(k + 1) * self.control_dim]
    }
}

/// Summed stage costs plus the terminal cost.
pub fn trajectory_cost<T: Real, M: SystemModel<T>>(
    model: &M,
    traj: &Trajectory<T, M::State>,
    theta: &LatentParam<T>,
) -> T {
    let mut total = T::zero();
    for k in 0..traj.horizon() {
        total += model.stage_cost(&traj.states()[k], traj.control(k), theta);
    }
    total + model.terminal_cost(&traj.states()[traj.horizon()], theta)
}

/// Worst per-state safety margin along the trajectory, initial state
/// included.
pub fn trajectory_margin<T: Real, M: SystemModel<T>>(
    model: &M,
    traj: &Trajectory<T, M::State>,
    theta: &LatentParam<T>,
) -> T {
    traj.states()
        .iter()
        .map(|x| model.safety_margin(x, theta))
        .fold(T::infinity(), T::min)
}

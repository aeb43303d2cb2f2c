//! Planar slot-insertion testbed.
//!
//! A square object of half-width `obj_half_width` must descend through a
//! slot opening cut into the plane y = 0. The latent parameter gives the
//! slot center `c` and half-width `w`: the walls fill the half-planes
//! x <= c - w and x >= c + w for y < 0, and an optional stored block sits
//! on the left wall at the slot floor, occupying
//! [c - w, c - w + block_width] x [-slot_depth, -slot_depth + 40]. The
//! goal pose is (c, obj_half_width - slot_depth), the object seated at the
//! floor.
//!
//! Kinematics are a velocity-command Euler step with isotropic Gaussian
//! process noise; contact does not alter motion but shows up in the safety
//! margin, which is the worst of three channels: clearance above `d_min`,
//! environment contact force (stiffness `k_c` times penetration depth)
//! below `f_env_max`, and a grasp-load surrogate proportional to the
//! previously applied speed below `f_grasp_max`. Clearance and penetration
//! come from axis-aligned interval arithmetic between the object square
//! and each obstacle.
//!
//! The camera measures the slot-center coordinate with Gaussian noise
//! `sigma_v`; the slot half-width is never observed directly.

use super::{SystemError, SystemModel};
use crate::belief::LatentParam;
use crate::scalar::Real;
use rand::Rng;

/// Vertical extent of the stored block above the slot floor, mm.
const BLOCK_HEIGHT: f64 = 40.0;

/// Hover height of the alignment waypoint above the opening, mm.
const APPROACH_Y: f64 = 30.0;

/// Geometry, contact, noise, and cost constants of the testbed. Lengths in
/// mm, forces in N, time in s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotConfig<T> {
    /// Slot depth below the opening plane.
    pub slot_depth: T,
    /// Half-width of the square object.
    pub obj_half_width: T,
    /// Lateral extent of the stored block.
    pub block_width: T,
    /// Whether the stored block is present.
    pub stored_block: bool,
    /// Clearance floor of the safety margin.
    pub d_min: T,
    /// Contact stiffness, N per mm of penetration.
    pub k_c: T,
    /// Grasp-load surrogate gain, N per mm/s of commanded speed.
    pub c_g: T,
    /// Environment contact force cap.
    pub f_env_max: T,
    /// Grasp load cap.
    pub f_grasp_max: T,
    /// Admissible control box half-width, mm/s per axis.
    pub u_max: T,
    /// Control period.
    pub dt: T,
    /// Process noise std per axis per step.
    pub sigma_w: T,
    /// Slot-center measurement noise std.
    pub sigma_v: T,
    /// Goal-distance threshold for success.
    pub eps_p: T,
    /// Lateral tracking weight. Lateral alignment is what keeps the
    /// object off the walls, so this is orders of magnitude stiffer than
    /// the descent weight.
    pub q_track_x: T,
    /// Vertical tracking weight, a mild descent incentive that the safety
    /// penalty can always override.
    pub q_track_y: T,
    /// Control effort weight.
    pub r_ctrl: T,
    /// Terminal weight on squared distance to the goal.
    pub q_f: T,
}

impl<T: Real> Default for SlotConfig<T> {
    fn default() -> Self {
        SlotConfig {
            slot_depth: T::of(100.0),
            obj_half_width: T::of(40.0),
            block_width: T::of(20.0),
            stored_block: true,
            d_min: T::of(2.0),
            k_c: T::of(100.0),
            c_g: T::of(0.1),
            f_env_max: T::of(80.0),
            f_grasp_max: T::of(80.0),
            u_max: T::of(80.0),
            dt: T::of(0.1),
            sigma_w: T::of(0.5),
            sigma_v: T::of(5.0),
            eps_p: T::of(60.0),
            q_track_x: T::of(2e-2),
            q_track_y: T::of(1e-4),
            r_ctrl: T::of(5e-5),
            q_f: T::of(2e-3),
        }
    }
}

impl<T: Real> SlotConfig<T> {
    pub fn validate(&self) -> Result<(), SystemError> {
        let positive: [(&'static str, T); 8] = [
            ("slot_depth", self.slot_depth),
            ("obj_half_width", self.obj_half_width),
            ("f_env_max", self.f_env_max),
            ("f_grasp_max", self.f_grasp_max),
            ("u_max", self.u_max),
            ("dt", self.dt),
            ("eps_p", self.eps_p),
            ("r_ctrl", self.r_ctrl),
        ];
        for (field, value) in positive {
            if !value.is_finite() || value <= T::zero() {
                return Err(SystemError::BadConfig {
                    field,
                    value: value.as_f64(),
                });
            }
        }
        let nonnegative: [(&'static str, T); 9] = [
            ("block_width", self.block_width),
            ("d_min", self.d_min),
            ("k_c", self.k_c),
            ("c_g", self.c_g),
            ("sigma_w", self.sigma_w),
            ("sigma_v", self.sigma_v),
            ("q_track_x", self.q_track_x),
            ("q_track_y", self.q_track_y),
            ("q_f", self.q_f),
        ];
        for (field, value) in nonnegative {
            if !value.is_finite() || value < T::zero() {
                return Err(SystemError::BadConfig {
                    field,
                    value: value.as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Slot view of the latent parameter: entry 0 is the center, entry 1 the
/// half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotGeometry<T> {
    pub center: T,
    pub half_width: T,
}

impl<T: Real> SlotGeometry<T> {
    pub fn from_param(theta: &LatentParam<T>) -> Self {
        SlotGeometry {
            center: theta[0],
            half_width: theta[1],
        }
    }

    pub fn to_param(self) -> LatentParam<T> {
        LatentParam::new(vec![self.center, self.half_width])
    }
}

/// Object-center position plus the speed of the previously applied
/// command, which feeds the grasp-load channel of the safety margin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotState<T> {
    pub p: [T; 2],
    pub u_prev_norm: T,
}

impl<T: Real> SlotState<T> {
    /// State at rest: no command has been applied yet.
    pub fn at(x: T, y: T) -> Self {
        SlotState {
            p: [x, y],
            u_prev_norm: T::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Box2<T> {
    lo: [T; 2],
    hi: [T; 2],
}

fn axis_gap<T: Real>(a_lo: T, a_hi: T, b_lo: T, b_hi: T) -> T {
    (a_lo - b_hi).max(b_lo - a_hi)
}

/// Signed separation of two boxes: Euclidean gap when disjoint, negated
/// minimal-translation overlap depth when intersecting, zero at contact.
fn signed_clearance<T: Real>(a: &Box2<T>, b: &Box2<T>) -> T {
    let gx = axis_gap(a.lo[0], a.hi[0], b.lo[0], b.hi[0]);
    let gy = axis_gap(a.lo[1], a.hi[1], b.lo[1], b.hi[1]);
    if gx <= T::zero() && gy <= T::zero() {
        gx.max(gy)
    } else {
        gx.max(T::zero()).hypot(gy.max(T::zero()))
    }
}

/// The testbed plant. Stateless; every evaluation takes the state and the
/// latent geometry explicitly.
#[derive(Clone, Debug)]
pub struct SlotSystem<T> {
    cfg: SlotConfig<T>,
}

impl<T: Real> SlotSystem<T> {
    pub fn new(cfg: SlotConfig<T>) -> Result<Self, SystemError> {
        cfg.validate()?;
        Ok(SlotSystem { cfg })
    }

    pub fn config(&self) -> &SlotConfig<T> {
        &self.cfg
    }

    /// Goal pose: object seated on the slot floor, centered.
    pub fn goal_point(&self, g: &SlotGeometry<T>) -> [T; 2] {
        [g.center, self.cfg.obj_half_width - self.cfg.slot_depth]
    }

    /// Waypoint the stage cost tracks: a hover point above the opening
    /// while the object is still outside, the goal once inside.
    pub fn reference_point(&self, x: &SlotState<T>, g: &SlotGeometry<T>) -> [T; 2] {
        if x.p[1] > T::zero() {
            [g.center, T::of(APPROACH_Y)]
        } else {
            self.goal_point(g)
        }
    }

    /// Signed clearance of the object square to the nearest obstacle,
    /// negative when penetrating.
    pub fn env_clearance(&self, p: &[T; 2], g: &SlotGeometry<T>) -> T {
        let r = self.cfg.obj_half_width;
        let obj = Box2 {
            lo: [p[0] - r, p[1] - r],
            hi: [p[0] + r, p[1] + r],
        };
        let left_wall = Box2 {
            lo: [T::neg_infinity(), T::neg_infinity()],
            hi: [g.center - g.half_width, T::zero()],
        };
        let right_wall = Box2 {
            lo: [g.center + g.half_width, T::neg_infinity()],
            hi: [T::infinity(), T::zero()],
        };
        let mut d = signed_clearance(&obj, &left_wall).min(signed_clearance(&obj, &right_wall));
        if self.cfg.stored_block {
            let floor = -self.cfg.slot_depth;
            let block = Box2 {
                lo: [g.center - g.half_width, floor],
                hi: [
                    g.center - g.half_width + self.cfg.block_width,
                    floor + T::of(BLOCK_HEIGHT),
                ],
            };
            d = d.min(signed_clearance(&obj, &block));
        }
        d
    }

    /// Measurement the camera would produce for the given geometry.
    pub fn sample_observation<R: Rng + ?Sized>(&self, theta: &LatentParam<T>, rng: &mut R) -> T {
        let g = SlotGeometry::from_param(theta);
        g.center + self.cfg.sigma_v * T::standard_normal(rng)
    }

    /// Gaussian density of the measurement residual z - c. A noise-free
    /// sensor degenerates to an exact-match indicator.
    pub fn observe_likelihood(&self, z: T, theta: &LatentParam<T>) -> T {
        let g = SlotGeometry::from_param(theta);
        let residual = z - g.center;
        let s = self.cfg.sigma_v;
        if s > T::zero() {
            let two = T::of(2.0);
            let norm = s * (two * T::of(core::f64::consts::PI)).sqrt();
            (-(residual * residual) / (two * s * s)).exp() / norm
        } else if residual == T::zero() {
            T::one()
        } else {
            T::zero()
        }
    }

    /// Placement test against the true geometry: within `eps_p` of the
    /// goal and not penetrating anything.
    pub fn success(&self, x: &SlotState<T>, theta_true: &LatentParam<T>) -> bool {
        let g = SlotGeometry::from_param(theta_true);
        let goal = self.goal_point(&g);
        let dist = (x.p[0] - goal[0]).hypot(x.p[1] - goal[1]);
        dist <= self.cfg.eps_p && self.env_clearance(&x.p, &g) >= T::zero()
    }
}

impl<T: Real> SystemModel<T> for SlotSystem<T> {
    type State = SlotState<T>;

    fn control_dim(&self) -> usize {
        2
    }

    fn clamp_control(&self, u: &mut [T]) {
        for v in u {
            *v = v.min(self.cfg.u_max).max(-self.cfg.u_max);
        }
    }

    fn step<R: Rng + ?Sized>(
        &self,
        x: &Self::State,
        u: &[T],
        _theta: &LatentParam<T>,
        rng: &mut R,
    ) -> Self::State {
        debug_assert!(u.iter().all(|v| v.abs() <= self.cfg.u_max));
        let dt = self.cfg.dt;
        let sw = self.cfg.sigma_w;
        SlotState {
            p: [
                x.p[0] + u[0] * dt + sw * T::standard_normal(rng),
                x.p[1] + u[1] * dt + sw * T::standard_normal(rng),
            ],
            u_prev_norm: u[0].hypot(u[1]),
        }
    }

    fn stage_cost(&self, x: &Self::State, u: &[T], theta: &LatentParam<T>) -> T {
        let g = SlotGeometry::from_param(theta);
        let r = self.reference_point(x, &g);
        let dx = x.p[0] - r[0];
        let dy = x.p[1] - r[1];
        self.cfg.q_track_x * dx * dx
            + self.cfg.q_track_y * dy * dy
            + self.cfg.r_ctrl * (u[0] * u[0] + u[1] * u[1])
    }

    fn terminal_cost(&self, x: &Self::State, theta: &LatentParam<T>) -> T {
        let g = SlotGeometry::from_param(theta);
        let goal = self.goal_point(&g);
        let dx = x.p[0] - goal[0];
        let dy = x.p[1] - goal[1];
        self.cfg.q_f * (dx * dx + dy * dy)
    }

    fn safety_margin(&self, x: &Self::State, theta: &LatentParam<T>) -> T {
        let g = SlotGeometry::from_param(theta);
        let d_env = self.env_clearance(&x.p, &g);
        let penetration = (-d_env).max(T::zero());
        let f_env = self.cfg.k_c * penetration;
        let f_grasp = self.cfg.c_g * x.u_prev_norm;
        (d_env - self.cfg.d_min)
            .min(self.cfg.f_env_max - f_env)
            .min(self.cfg.f_grasp_max - f_grasp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nominal_theta() -> LatentParam<f64> {
        LatentParam::new(vec![0.0, 48.75])
    }

    fn system() -> SlotSystem<f64> {
        SlotSystem::new(SlotConfig::default()).unwrap()
    }

    fn unit_cost_system() -> SlotSystem<f64> {
        SlotSystem::new(SlotConfig {
            q_track_x: 1.0,
            q_track_y: 1.0,
            r_ctrl: 1.0,
            q_f: 1.0,
            ..SlotConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn margin_centered_in_slot() {
        // per-side clearance 48.75 - 40 = 8.75, block 10 below, no contact
        let sys = system();
        let x = SlotState::at(0.0, -10.0);
        assert_eq!(sys.safety_margin(&x, &nominal_theta()), 6.75);
    }

    #[test]
    fn margin_far_above_opening() {
        // directly over the left wall, 50 above it: clearance dominates
        let sys = system();
        let x = SlotState::at(-48.75, 90.0);
        assert_eq!(sys.env_clearance(&x.p, &SlotGeometry::from_param(&nominal_theta())), 50.0);
        assert_eq!(sys.safety_margin(&x, &nominal_theta()), 48.0);
    }

    #[test]
    fn margin_under_wall_penetration() {
        // 1 mm into the left wall: force channel 80 - 100 * 1 = -20 beats
        // the clearance channel -1 - 2 = -3
        let sys = system();
        let x = SlotState::at(-9.75, -5.0);
        let g = SlotGeometry::from_param(&nominal_theta());
        assert_eq!(sys.env_clearance(&x.p, &g), -1.0);
        assert_eq!(sys.safety_margin(&x, &nominal_theta()), -20.0);
    }

    #[test]
    fn margin_under_grasp_load() {
        let sys = SlotSystem::new(SlotConfig {
            c_g: 1.0,
            ..SlotConfig::default()
        })
        .unwrap();
        let x = SlotState {
            p: [-48.75, 90.0],
            u_prev_norm: 100.0,
        };
        // clearance channel 48, grasp channel 80 - 100 = -20
        assert_eq!(sys.safety_margin(&x, &nominal_theta()), -20.0);
    }

    #[test]
    fn margin_positive_implies_no_contact_force() {
        let sys = system();
        let theta = nominal_theta();
        let g = SlotGeometry::from_param(&theta);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..2000 {
            let x = SlotState::at(rng.random_range(-150.0..150.0), rng.random_range(-150.0..150.0));
            let h = sys.safety_margin(&x, &theta);
            let d = sys.env_clearance(&x.p, &g);
            if h > 0.0 {
                assert!(d > 0.0, "positive margin with contact at {:?}", x.p);
            }
            // the margin is negative exactly when some channel is
            let violated = d - 2.0 < 0.0 || 80.0 - 100.0 * (-d).max(0.0) < 0.0;
            assert_eq!(h < 0.0, violated, "at {:?}", x.p);
        }
    }

    #[test]
    fn margin_is_continuous_along_rays() {
        // min-of-channels is Lipschitz with constant k_c; scan with slack
        let sys = system();
        let theta = nominal_theta();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let step = 0.01;
        let bound = (100.0 + 1.0) * step;
        for _ in 0..100 {
            let mut x = SlotState::at(rng.random_range(-120.0..120.0), rng.random_range(-120.0..120.0));
            let angle: f64 = rng.random_range(0.0..core::f64::consts::TAU);
            let dir = [angle.cos(), angle.sin()];
            let mut prev = sys.safety_margin(&x, &theta);
            for _ in 0..200 {
                x.p[0] += dir[0] * step;
                x.p[1] += dir[1] * step;
                let h = sys.safety_margin(&x, &theta);
                assert!(
                    (h - prev).abs() <= bound + 1e-9,
                    "jump {} at {:?}",
                    (h - prev).abs(),
                    x.p
                );
                prev = h;
            }
        }
    }

    #[test]
    fn infeasible_width_leaves_no_safe_interior_state() {
        // half-width at or below object half-width + d_min: every interior
        // cell on a 1 mm grid must be unsafe
        let sys = system();
        for w in [40.0f64, 41.5, 41.99] {
            let theta = LatentParam::new(vec![0.0, w]);
            let mut worst = f64::NEG_INFINITY;
            let half = w.floor() as i64;
            for xi in -half..=half {
                for yi in -99i64..0 {
                    let x = SlotState::at(xi as f64, yi as f64);
                    worst = worst.max(sys.safety_margin(&x, &theta));
                }
            }
            assert!(worst < 0.0, "w = {w}: best interior margin {worst}");
        }
    }

    #[test]
    fn step_is_pure_kinematics_without_noise() {
        let sys = SlotSystem::new(SlotConfig {
            sigma_w: 0.0,
            ..SlotConfig::default()
        })
        .unwrap();
        let theta = nominal_theta();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let x = SlotState::at(0.0, 0.0);
        let fixed = sys.step(&x, &[0.0, 0.0], &theta, &mut rng);
        assert_eq!(fixed.p, [0.0, 0.0]);
        assert_eq!(fixed.u_prev_norm, 0.0);
        let moved = sys.step(&x, &[10.0, 0.0], &theta, &mut rng);
        assert_eq!(moved.p, [1.0, 0.0]);
        assert_eq!(moved.u_prev_norm, 10.0);
    }

    #[test]
    fn step_noise_matches_declared_covariance() {
        let sys = SlotSystem::new(SlotConfig {
            sigma_w: 1.0,
            ..SlotConfig::default()
        })
        .unwrap();
        let theta = nominal_theta();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let x = SlotState::at(5.0, -3.0);
        let u = [20.0, -40.0];
        let n = 10_000;
        let mut sum = [0.0f64; 2];
        let mut deltas = Vec::with_capacity(n);
        for _ in 0..n {
            let y = sys.step(&x, &u, &theta, &mut rng);
            let d = [y.p[0] - x.p[0] - u[0] * 0.1, y.p[1] - x.p[1] - u[1] * 0.1];
            sum[0] += d[0];
            sum[1] += d[1];
            deltas.push(d);
        }
        let mean = [sum[0] / n as f64, sum[1] / n as f64];
        let mut cov = [[0.0f64; 2]; 2];
        for d in &deltas {
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += (d[i] - mean[i]) * (d[j] - mean[j]);
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] /= (n - 1) as f64;
            }
        }
        assert!((cov[0][0] - 1.0).abs() < 0.05, "var x {}", cov[0][0]);
        assert!((cov[1][1] - 1.0).abs() < 0.05, "var y {}", cov[1][1]);
        assert!(cov[0][1].abs() < 0.05, "cross {}", cov[0][1]);
    }

    #[test]
    fn likelihood_peak_and_falloff() {
        let sys = system();
        let theta = nominal_theta();
        let peak = 1.0 / (5.0 * (2.0 * core::f64::consts::PI).sqrt());
        assert!((sys.observe_likelihood(0.0, &theta) - peak).abs() < 1e-15);
        let at_sigma = sys.observe_likelihood(5.0, &theta);
        assert!((at_sigma - peak * (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn likelihood_ratio_is_gaussian() {
        let sys = system();
        let z = 3.0;
        let t1 = LatentParam::new(vec![1.0, 48.75]);
        let t2 = LatentParam::new(vec![-4.0, 48.75]);
        let d1: f64 = z - 1.0;
        let d2: f64 = z + 4.0;
        let expected = (-(d1 * d1 - d2 * d2) / (2.0 * 25.0)).exp();
        let got = sys.observe_likelihood(z, &t1) / sys.observe_likelihood(z, &t2);
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn observation_samples_center_plus_noise() {
        let sys = system();
        let theta = LatentParam::new(vec![7.0, 48.75]);
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let n = 20_000;
        let zs: Vec<f64> = (0..n).map(|_| sys.sample_observation(&theta, &mut rng)).collect();
        let mean = zs.iter().sum::<f64>() / n as f64;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 7.0).abs() < 0.15, "mean {mean}");
        assert!((var.sqrt() - 5.0).abs() < 0.15, "std {}", var.sqrt());
    }

    #[test]
    fn stage_cost_examples() {
        let sys = unit_cost_system();
        let theta = nominal_theta();
        // inside the opening the reference is the goal (0, -60)
        let at_goal = SlotState::at(0.0, -60.0);
        assert_eq!(sys.stage_cost(&at_goal, &[0.0, 0.0], &theta), 0.0);
        let off = SlotState::at(3.0, -56.0);
        assert_eq!(sys.stage_cost(&off, &[0.0, 0.0], &theta), 25.0);
        let base = sys.stage_cost(&off, &[2.0, 1.0], &theta) - 25.0;
        let doubled = sys.stage_cost(&off, &[4.0, 2.0], &theta) - 25.0;
        assert!((doubled - 4.0 * base).abs() < 1e-12);
    }

    #[test]
    fn reference_switches_at_the_opening() {
        let sys = system();
        let g = SlotGeometry::from_param(&nominal_theta());
        let above = SlotState::at(12.0, 50.0);
        assert_eq!(sys.reference_point(&above, &g), [0.0, 30.0]);
        let inside = SlotState::at(12.0, -1.0);
        assert_eq!(sys.reference_point(&inside, &g), [0.0, -60.0]);
    }

    #[test]
    fn terminal_cost_examples() {
        let sys = unit_cost_system();
        let theta = nominal_theta();
        assert_eq!(sys.terminal_cost(&SlotState::at(0.0, -60.0), &theta), 0.0);
        assert_eq!(sys.terminal_cost(&SlotState::at(0.0, -50.0), &theta), 100.0);
        // lateral translation of object and slot together changes nothing
        let shifted = LatentParam::new(vec![17.0, 48.75]);
        assert_eq!(
            sys.terminal_cost(&SlotState::at(17.0, -50.0), &shifted),
            100.0
        );
    }

    #[test]
    fn success_requires_proximity_and_no_contact() {
        let open = SlotSystem::new(SlotConfig {
            stored_block: false,
            ..SlotConfig::default()
        })
        .unwrap();
        let theta = nominal_theta();
        assert!(open.success(&SlotState::at(0.0, -60.0), &theta));
        assert!(open.success(&SlotState::at(0.0, 0.0), &theta));
        // 61 mm from the goal
        assert!(!open.success(&SlotState::at(0.0, 1.0), &theta));
        // seated on the goal but the stored block occupies part of it
        let blocked = system();
        assert!(!blocked.success(&SlotState::at(0.0, -60.0), &theta));
        assert!(blocked.success(&SlotState::at(0.0, -15.0), &theta));
    }

    #[test]
    fn clamp_control_projects_onto_box() {
        let sys = system();
        let mut u = [120.0, -200.0];
        sys.clamp_control(&mut u);
        assert_eq!(u, [80.0, -80.0]);
        let mut ok = [15.0, -3.0];
        sys.clamp_control(&mut ok);
        assert_eq!(ok, [15.0, -3.0]);
    }

    #[test]
    fn rejects_invalid_config() {
        let bad = SlotConfig {
            dt: 0.0,
            ..SlotConfig::<f64>::default()
        };
        assert_eq!(
            SlotSystem::new(bad).unwrap_err(),
            SystemError::BadConfig {
                field: "dt",
                value: 0.0
            }
        );
        let bad = SlotConfig {
            sigma_v: -1.0,
            ..SlotConfig::<f64>::default()
        };
        assert!(SlotSystem::new(bad).is_err());
    }
}

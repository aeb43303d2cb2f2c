//! Deterministic stream derivation for parallel Monte Carlo.
//!
//! Every random draw in a solve or an episode comes from a stream keyed by
//! where the draw sits in the computation (trial, solve step, candidate,
//! particle), never by when it happens to execute. Reordering or
//! parallelizing work therefore cannot change a single number.
//!
//! A [`StreamKey`] is a 64-bit state advanced by folding in integer labels
//! through the SplitMix64 finalizer; [`StreamKey::stream`] seeds a ChaCha8
//! generator from the folded state. ChaCha8 keeps distinct streams
//! statistically independent even for adjacent keys.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Bijective on u64, so folding can never lose
/// label information within a single step.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Position-addressed seed for one random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn from_root(root: u64) -> Self {
        StreamKey(mix64(root.wrapping_add(GOLDEN)))
    }

    /// Key of the child stream carrying the given label.
    pub fn child(self, label: u64) -> Self {
        StreamKey(mix64(self.0 ^ mix64(label.wrapping_add(GOLDEN))))
    }

    /// Folds a label path, left to right.
    pub fn derive(self, labels: &[u64]) -> Self {
        labels.iter().fold(self, |key, &label| key.child(label))
    }

    /// Instantiates the generator for this stream.
    pub fn stream(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    pub fn state(self) -> u64 {
        self.0
    }
}

/// Label registry. Values only need to be distinct; the registry exists so
/// independent call sites cannot collide by accident.
pub mod label {
    /// Per-trial fan-out in the harness.
    pub const TRIAL: u64 = 1;
    /// Per-control-step fan-out inside an episode.
    pub const SOLVE: u64 = 2;
    /// Particle draws from the belief at the start of a solve.
    pub const THETA_DRAW: u64 = 3;
    /// Candidate perturbation sampling, one child per candidate.
    pub const CANDIDATE: u64 = 4;
    /// Rollout process noise, one child per (candidate, particle).
    pub const ROLLOUT: u64 = 5;
    /// Post-update evaluation rollouts of the returned sequence.
    pub const EVALUATION: u64 = 6;
    /// Margin rollouts at the posterior mean (chance-constrained variant).
    pub const MEAN_MARGIN: u64 = 7;
    /// True-system process noise when the harness applies a control.
    pub const PROCESS: u64 = 8;
    /// Observation noise drawn by the true system.
    pub const OBSERVATION: u64 = 9;
    /// Ground-truth parameter draw for a trial.
    pub const TRUE_THETA: u64 = 10;
    /// Initial belief particle draw for a trial.
    pub const BELIEF_INIT: u64 = 11;
    /// Systematic-resampling offset draws.
    pub const RESAMPLE: u64 = 12;
    /// Fresh validation draws in the theorem checks.
    pub const VALIDATION: u64 = 13;
    /// Synthetic frozen batches in the theorem checks.
    pub const BATCH: u64 = 14;
}

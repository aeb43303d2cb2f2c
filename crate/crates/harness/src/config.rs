//! Experiment configuration: a TOML file whose top-level keys use the
//! symbol names of the simulation-parameter table (K, H, N_p, lambda,
//! sigma, beta_c, beta_s, lambda_r, mu, N_thr, d_min, sigma_p, eps_p,
//! f_env_max, f_grasp_max), a `[testbed]` section for the slot physics and
//! trial geometry, and an optional `[sweep]` section listing cells to run.
//!
//! Every output file is stamped with a hash of the full configuration, so
//! a log can always be traced back to the exact settings that produced it.

use anyhow::{bail, Context, Result};
use bsmppi::controller::{ChanceParams, ControlSequence, MppiConfig, RiskParams};
use bsmppi::risk::ConfidenceLevel;
use bsmppi::SlotConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Mean cost + cost CVaR + safety CVaR penalty.
    Cvar,
    /// Mean cost + violation-fraction penalty.
    Cc,
    /// Mean cost only (lambda_r = 0, mu = 0).
    Neutral,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Cvar => "cvar",
            Variant::Cc => "cc",
            Variant::Neutral => "neutral",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "cvar" => Some(Variant::Cvar),
            "cc" => Some(Variant::Cc),
            "neutral" => Some(Variant::Neutral),
            _ => None,
        }
    }
}

/// Slot physics plus trial staging; everything the controller table does
/// not cover.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestbedConfig {
    /// Nominal slot center, the belief prior mean (mm).
    pub slot_center: f64,
    /// Nominal slot half-width (mm).
    pub slot_half_width: f64,
    pub slot_depth: f64,
    pub obj_half_width: f64,
    pub block_width: f64,
    pub stored_block: bool,
    /// Contact stiffness (N/mm).
    pub k_c: f64,
    /// Grasp-load gain (N per mm/s).
    pub c_g: f64,
    /// Control box half-width (mm/s).
    pub u_max: f64,
    pub dt: f64,
    /// Process noise std per axis per step (mm).
    pub sigma_w: f64,
    /// Camera noise std (mm). The trial default trades off belief
    /// convergence speed against the descent so that the safety level
    /// decides when to commit; the plant-model default of 5 mm makes every
    /// variant equally well informed within a few steps.
    pub sigma_v: f64,
    /// Episode filter ensemble size. The solver still draws N_p parameter
    /// samples per solve; the ensemble just has to be large enough that
    /// its spread stays honest through repeated resampling.
    pub belief_particles: usize,
    /// True half-width jitter std and belief prior std for w_slot (mm).
    pub sigma_w_slot: f64,
    /// Positive floor applied to sampled half-widths (mm).
    pub w_floor: f64,
    /// Liu-West discount for rejuvenation after resampling, in (0.5, 1].
    /// 1 disables rejuvenation; lower values refresh the particle support
    /// more aggressively while preserving the first two belief moments.
    pub belief_discount: f64,
    /// Episode start position (mm).
    pub start: [f64; 2],
    pub q_track_x: f64,
    pub q_track_y: f64,
    pub r_ctrl: f64,
    pub q_f: f64,
}

impl Default for TestbedConfig {
    fn default() -> Self {
        let slot = SlotConfig::default();
        TestbedConfig {
            slot_center: 0.0,
            slot_half_width: 48.75,
            slot_depth: slot.slot_depth,
            obj_half_width: slot.obj_half_width,
            block_width: slot.block_width,
            stored_block: slot.stored_block,
            k_c: slot.k_c,
            c_g: slot.c_g,
            u_max: slot.u_max,
            dt: slot.dt,
            sigma_w: slot.sigma_w,
            sigma_v: 12.0,
            belief_particles: 256,
            sigma_w_slot: 1.0,
            w_floor: 1.0,
            belief_discount: 0.95,
            start: [0.0, 80.0],
            q_track_x: slot.q_track_x,
            q_track_y: slot.q_track_y,
            r_ctrl: slot.r_ctrl,
            q_f: slot.q_f,
        }
    }
}

/// Lists of cells to run; empty lists fall back to the single top-level
/// value.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub beta_s: Vec<f64>,
    pub beta_c: Vec<f64>,
    pub lambda_r: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Candidate sequences per solve.
    #[serde(rename = "K")]
    pub k: usize,
    /// Planning horizon in steps.
    #[serde(rename = "H")]
    pub h: usize,
    /// Belief particles; also the parameter draws per solve.
    #[serde(rename = "N_p")]
    pub n_p: usize,
    /// Softmax temperature.
    pub lambda: f64,
    /// Per-axis perturbation std (mm/s). Kept fine on both axes: the softmax
    /// weights concentrate on few candidates, so the executed control inherits
    /// the winning candidate's noise draw and coarse exploration would show up
    /// as jitter in the commanded velocity itself.
    pub sigma: [f64; 2],
    pub lambda_r: f64,
    pub beta_c: f64,
    pub beta_s: f64,
    pub mu: f64,
    /// Resampling threshold on the filter's effective sample size;
    /// defaults to half the ensemble.
    #[serde(rename = "N_thr")]
    pub n_thr: f64,
    /// Safety clearance floor (mm).
    pub d_min: f64,
    /// Std of the true slot-center offset and of the belief prior (mm).
    pub sigma_p: f64,
    /// Success distance threshold (mm).
    pub eps_p: f64,
    /// Environment force cap (N).
    pub f_env_max: f64,
    /// Grasp load cap (N).
    pub f_grasp_max: f64,
    /// Chance-constraint violation tolerance.
    pub delta: f64,
    pub trials: usize,
    /// Receding-horizon solves per episode.
    #[serde(rename = "T")]
    pub t_max: usize,
    pub seed: u64,
    pub variant: Variant,
    pub out_dir: PathBuf,
    pub testbed: TestbedConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            k: 64,
            h: 12,
            n_p: 16,
            lambda: 0.4,
            sigma: [15.0, 15.0],
            lambda_r: 0.5,
            beta_c: 0.9,
            beta_s: 0.95,
            mu: 250.0,
            n_thr: 128.0,
            d_min: 2.0,
            sigma_p: 12.0,
            eps_p: 60.0,
            f_env_max: 80.0,
            f_grasp_max: 80.0,
            delta: 0.05,
            trials: 50,
            t_max: 150,
            seed: 0,
            variant: Variant::Cvar,
            out_dir: PathBuf::from("out"),
            testbed: TestbedConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.h == 0 || self.n_p == 0 {
            bail!("K, H, N_p must all be at least 1");
        }
        if self.trials == 0 || self.t_max == 0 {
            bail!("trials and T must be at least 1");
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            bail!("lambda must be positive, got {}", self.lambda);
        }
        for beta in [self.beta_c, self.beta_s]
            .iter()
            .chain(&self.sweep.beta_c)
            .chain(&self.sweep.beta_s)
        {
            ConfidenceLevel::new(*beta)
                .map_err(|e| anyhow::anyhow!("confidence level: {e}"))?;
        }
        for lr in std::iter::once(&self.lambda_r).chain(&self.sweep.lambda_r) {
            if !(0.0..=1.0).contains(lr) {
                bail!("lambda_r must lie in [0, 1], got {lr}");
            }
        }
        if self.mu < 0.0 || !self.mu.is_finite() {
            bail!("mu must be nonnegative, got {}", self.mu);
        }
        if !(0.0..1.0).contains(&self.delta) {
            bail!("delta must lie in [0, 1), got {}", self.delta);
        }
        if self.testbed.belief_particles == 0 {
            bail!("belief_particles must be at least 1");
        }
        if !(1.0..=self.testbed.belief_particles as f64).contains(&self.n_thr) {
            bail!("N_thr must lie in [1, belief_particles], got {}", self.n_thr);
        }
        if self.sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            bail!("sigma entries must be nonnegative");
        }
        if self.sigma_p < 0.0 || self.testbed.sigma_w_slot < 0.0 {
            bail!("prior spreads must be nonnegative");
        }
        if self.testbed.w_floor <= 0.0 {
            bail!("w_floor must be positive");
        }
        if !(self.testbed.belief_discount > 0.5 && self.testbed.belief_discount <= 1.0) {
            bail!(
                "belief_discount must lie in (0.5, 1], got {}",
                self.testbed.belief_discount
            );
        }
        if self.testbed.slot_half_width <= 0.0 {
            bail!("slot_half_width must be positive");
        }
        self.slot_config()
            .validate()
            .map_err(|e| anyhow::anyhow!("testbed: {e}"))?;
        Ok(())
    }

    pub fn slot_config(&self) -> SlotConfig {
        SlotConfig {
            slot_depth: self.testbed.slot_depth,
            obj_half_width: self.testbed.obj_half_width,
            block_width: self.testbed.block_width,
            stored_block: self.testbed.stored_block,
            d_min: self.d_min,
            k_c: self.testbed.k_c,
            c_g: self.testbed.c_g,
            f_env_max: self.f_env_max,
            f_grasp_max: self.f_grasp_max,
            u_max: self.testbed.u_max,
            dt: self.testbed.dt,
            sigma_w: self.testbed.sigma_w,
            sigma_v: self.testbed.sigma_v,
            eps_p: self.eps_p,
            q_track_x: self.testbed.q_track_x,
            q_track_y: self.testbed.q_track_y,
            r_ctrl: self.testbed.r_ctrl,
            q_f: self.testbed.q_f,
        }
    }

    pub fn mppi_config(&self) -> MppiConfig<f64> {
        MppiConfig {
            candidates: self.k,
            horizon: self.h,
            particles: self.n_p,
            lambda: self.lambda,
            sigma: self.sigma.to_vec(),
            u_nominal_mean: None,
        }
    }

    pub fn risk_params(&self) -> RiskParams<f64> {
        let (lambda_r, mu) = match self.variant {
            Variant::Neutral => (0.0, 0.0),
            _ => (self.lambda_r, self.mu),
        };
        RiskParams {
            lambda_r,
            beta_c: ConfidenceLevel::new(self.beta_c).expect("validated"),
            mu,
            beta_s: ConfidenceLevel::new(self.beta_s).expect("validated"),
        }
    }

    pub fn chance_params(&self) -> ChanceParams<f64> {
        ChanceParams {
            mu: self.mu,
            delta: self.delta,
            margins_from_posterior_mean: false,
        }
    }

    pub fn initial_warm_start(&self) -> ControlSequence<f64> {
        ControlSequence::zeros(self.h, 2).expect("H >= 1")
    }

    /// First 16 hex digits of the SHA-256 of the serialized config. The
    /// output directory is excluded: it names where results land, not
    /// which experiment produced them.
    pub fn config_hash(&self) -> String {
        let mut identity = self.clone();
        identity.out_dir = PathBuf::new();
        let text = toml::to_string(&identity).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// One row label combining the variant and the risk settings.
    pub fn cell_label(&self) -> String {
        match self.variant {
            Variant::Cvar => format!(
                "cvar_bs{}_bc{}_lr{}",
                self.beta_s, self.beta_c, self.lambda_r
            ),
            Variant::Cc => format!("cc_bs{}_delta{}", self.beta_s, self.delta),
            Variant::Neutral => "neutral".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_hash_stably() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let h1 = cfg.config_hash();
        assert_eq!(h1.len(), 16);
        assert_eq!(h1, cfg.config_hash());
        // any field change moves the hash, except the output location
        let mut other = cfg.clone();
        other.mu = 251.0;
        assert_ne!(h1, other.config_hash());
        let mut relocated = cfg.clone();
        relocated.out_dir = PathBuf::from("elsewhere");
        assert_eq!(h1, relocated.config_hash());
    }

    #[test]
    fn toml_round_trip_preserves_symbol_names() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert!(text.contains("K = 64"));
        assert!(text.contains("N_p = 16"));
        assert!(text.contains("T = 150"));
        assert!(text.contains("beta_s = 0.95"));
        assert!(text.contains("N_thr = 128.0"));
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: ExperimentConfig = toml::from_str(
            "K = 32\nbeta_s = 0.9\n[testbed]\nsigma_v = 4.0\n",
        )
        .unwrap();
        assert_eq!(cfg.k, 32);
        assert_eq!(cfg.beta_s, 0.9);
        assert_eq!(cfg.testbed.sigma_v, 4.0);
        assert_eq!(cfg.h, 12);
        assert_eq!(cfg.testbed.dt, 0.1);
    }

    #[test]
    fn bad_values_are_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.beta_s = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.n_thr = cfg.testbed.belief_particles as f64 + 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.lambda = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.testbed.dt = -0.1;
        assert!(cfg.validate().is_err());
        assert!(toml::from_str::<ExperimentConfig>("unknown_key = 1\n").is_err());
    }

    #[test]
    fn neutral_variant_zeroes_both_risk_terms() {
        let mut cfg = ExperimentConfig::default();
        cfg.variant = Variant::Neutral;
        let risk = cfg.risk_params();
        assert_eq!(risk.lambda_r, 0.0);
        assert_eq!(risk.mu, 0.0);
    }
}

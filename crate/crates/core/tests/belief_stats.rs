//! Distributional checks on the particle filter that need many seeded
//! repetitions: estimator consistency against the slot camera model,
//! resampling bias, and agreement between the two ways of drawing from a
//! belief.

use bsmppi::belief::{LatentParam, ParticleBelief};
use bsmppi::rng::{label, StreamKey};
use bsmppi::system::slot2d::{SlotConfig, SlotSystem};

/// After 50 camera observations the posterior center estimate should sit
/// within 3 sigma_v / sqrt(50) of the true center in at least 95% of runs.
/// The prior is the trial-setup distribution: center spread 12 mm, which
/// several runs' truths land well outside of.
#[test]
fn repeated_observation_concentrates_on_the_true_center() {
    let sys = SlotSystem::new(SlotConfig::default()).unwrap();
    let sigma_v = sys.config().sigma_v;
    let n_p = 512;
    let runs = 200;
    let updates = 50;
    let tolerance = 3.0 * sigma_v / (updates as f64).sqrt();
    let root = StreamKey::from_root(0xbe11ef);
    let mut hits = 0;
    for r in 0..runs {
        let run_key = root.derive(&[label::TRIAL, r]);
        let mut truth_rng = run_key.child(label::TRUE_THETA).stream();
        let truth = LatentParam::new(vec![
            12.0 * <f64 as bsmppi::Real>::standard_normal(&mut truth_rng),
            48.75,
        ]);
        let mut belief = ParticleBelief::init_gaussian(
            &LatentParam::new(vec![0.0, 48.75]),
            &[12.0, 1.0],
            n_p,
            &mut run_key.child(label::BELIEF_INIT).stream(),
        )
        .unwrap();
        let mut obs_rng = run_key.child(label::OBSERVATION).stream();
        let mut resample_rng = run_key.child(label::RESAMPLE).stream();
        for _ in 0..updates {
            let z = sys.sample_observation(&truth, &mut obs_rng);
            belief = belief
                .update(|theta| sys.observe_likelihood(z, theta))
                .unwrap()
                .belief;
            if belief.ess() < n_p as f64 / 2.0 {
                belief = belief.resample_systematic(&mut resample_rng);
            }
        }
        if (belief.posterior_mean()[0] - truth[0]).abs() <= tolerance {
            hits += 1;
        }
    }
    assert!(
        hits >= runs * 95 / 100,
        "only {hits}/{runs} runs landed within {tolerance} mm"
    );
}

/// Systematic resampling is unbiased: averaged over many offsets, the
/// post-resample mean reproduces the weighted mean.
#[test]
fn resampling_preserves_the_posterior_mean_on_average() {
    let key = StreamKey::from_root(0x5e5a);
    let mut setup_rng = key.child(1).stream();
    let n = 64;
    let particles: Vec<LatentParam<f64>> = (0..n)
        .map(|_| {
            LatentParam::new(vec![
                100.0 * <f64 as bsmppi::Real>::unit_uniform(&mut setup_rng) - 50.0,
            ])
        })
        .collect();
    let raw: Vec<f64> = (0..n)
        .map(|_| 0.05 + <f64 as bsmppi::Real>::unit_uniform(&mut setup_rng))
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let belief = ParticleBelief::from_parts(particles, weights).unwrap();
    let target = belief.posterior_mean()[0];

    let draws = 10_000;
    let means: Vec<f64> = (0..draws)
        .map(|s| {
            let mut rng = key.derive(&[label::RESAMPLE, s]).stream();
            belief.resample_systematic(&mut rng).posterior_mean()[0]
        })
        .collect();
    let grand_mean = means.iter().sum::<f64>() / draws as f64;
    let variance =
        means.iter().map(|m| (m - grand_mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    let standard_error = (variance / draws as f64).sqrt();
    assert!(
        (grand_mean - target).abs() < 3.0 * standard_error.max(1e-12),
        "bias {} vs standard error {}",
        grand_mean - target,
        standard_error
    );
}

/// Drawing N_p values from a freshly resampled belief and taking the
/// resample output directly are the same distribution over source
/// particles; pooled across seeds, both frequency vectors match the
/// original weights.
#[test]
fn sampling_after_resample_matches_resample_frequencies() {
    let values = [0.0, 1.0, 2.0, 3.0];
    let weights = [0.4, 0.3, 0.2, 0.1];
    let belief = ParticleBelief::from_parts(
        values.iter().map(|&v| LatentParam::new(vec![v])).collect(),
        weights.to_vec(),
    )
    .unwrap();
    let n_p = values.len();
    let seeds = 4000;
    let key = StreamKey::from_root(0xd1ce);
    let mut count_resampled = [0usize; 4];
    let mut count_sampled = [0usize; 4];
    for s in 0..seeds {
        let mut resample_rng = key.derive(&[label::RESAMPLE, s]).stream();
        let resampled = belief.resample_systematic(&mut resample_rng);
        for p in resampled.particles() {
            count_resampled[p[0] as usize] += 1;
        }
        let mut sample_rng = key.derive(&[label::THETA_DRAW, s]).stream();
        for p in resampled.sample(n_p, &mut sample_rng).unwrap() {
            count_sampled[p[0] as usize] += 1;
        }
    }
    let pool = (seeds as usize * n_p) as f64;
    for i in 0..4 {
        let f_resampled = count_resampled[i] as f64 / pool;
        let f_sampled = count_sampled[i] as f64 / pool;
        let standard_error = (weights[i] * (1.0 - weights[i]) / pool).sqrt();
        assert!(
            (f_resampled - weights[i]).abs() <= 3.0 * standard_error,
            "resample frequency {f_resampled} for weight {}",
            weights[i]
        );
        assert!(
            (f_sampled - weights[i]).abs() <= 3.0 * standard_error,
            "sample frequency {f_sampled} for weight {}",
            weights[i]
        );
        assert!((f_resampled - f_sampled).abs() <= 4.0 * standard_error);
    }
}

//! Particle posterior over a static latent parameter.
//!
//! The parameter does not evolve, so the filter never propagates particles:
//! an observation only reweights them (Bayes rule with the supplied
//! likelihood), and systematic resampling restores weight balance when the
//! effective sample size drops. Controller rollouts draw i.i.d. parameters
//! from the current belief with `sample`.
//!
//! A belief is an immutable value. Every operation that changes it returns
//! a new one, and randomized operations take an explicit stream, so
//! concurrent use is safe by construction.

use crate::risk::{weight_tolerance, CompensatedSum};
use crate::scalar::Real;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("belief must hold at least one particle")]
    Empty,
    #[error("{particles} particles but {weights} weights")]
    CountMismatch { particles: usize, weights: usize },
    #[error("particle {index} has dimension {dim}, expected {expected}")]
    DimMismatch {
        index: usize,
        dim: usize,
        expected: usize,
    },
    #[error("non-finite entry in particle {particle}, dimension {dim}")]
    NonFiniteParam { particle: usize, dim: usize },
    #[error("negative or non-finite weight at index {0}")]
    BadWeight(usize),
    #[error("weights sum to {sum:e}, expected 1 within {tolerance:e}")]
    WeightSum { sum: f64, tolerance: f64 },
    #[error("negative or non-finite standard deviation at dimension {0}")]
    BadStdDev(usize),
    #[error("stddev has dimension {dim}, expected {expected}")]
    StdDevDim { dim: usize, expected: usize },
    #[error("requested zero draws")]
    ZeroDraws,
    #[error("negative or non-finite likelihood for particle {0}")]
    BadLikelihood(usize),
}

/// Latent parameter vector. The testbed uses two entries, slot center and
/// slot half-width, both in mm.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentParam<T> {
    theta: Vec<T>,
}

impl<T: Real> LatentParam<T> {
    pub fn new(theta: Vec<T>) -> Self {
        LatentParam { theta }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }
}

impl<T> core::ops::Index<usize> for LatentParam<T> {
    type Output = T;

    fn index(&self, d: usize) -> &T {
        &self.theta[d]
    }
}

/// Outcome of a Bayes update. `degenerate` marks a total likelihood
/// collapse: every particle scored zero, the prior weights were kept, and
/// the caller should treat the observation as inconsistent with the model.
#[derive(Clone, Debug)]
pub struct BeliefUpdate<T> {
    pub belief: ParticleBelief<T>,
    pub degenerate: bool,
}

/// Weighted particle approximation of the posterior over the latent
/// parameter. Weights are normalized at construction and stay normalized
/// through every operation.
#[derive(Clone, Debug)]
pub struct ParticleBelief<T> {
    particles: Vec<LatentParam<T>>,
    weights: Vec<T>,
}

impl<T: Real> ParticleBelief<T> {
    pub fn from_parts(
        particles: Vec<LatentParam<T>>,
        weights: Vec<T>,
    ) -> Result<Self, BeliefError> {
        if particles.is_empty() {
            return Err(BeliefError::Empty);
        }
        if particles.len() != weights.len() {
            return Err(BeliefError::CountMismatch {
                particles: particles.len(),
                weights: weights.len(),
            });
        }
        let expected = particles[0].dim();
        for (i, p) in particles.iter().enumerate() {
            if p.dim() != expected {
                return Err(BeliefError::DimMismatch {
                    index: i,
                    dim: p.dim(),
                    expected,
                });
            }
            if let Some(d) = p.theta().iter().position(|x| !x.is_finite()) {
                return Err(BeliefError::NonFiniteParam { particle: i, dim: d });
            }
        }
        let mut total = CompensatedSum::default();
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() {
                return Err(BeliefError::BadWeight(i));
            }
            total.add(w);
        }
        let total = total.value();
        let tolerance = weight_tolerance::<T>(weights.len());
        if (total - T::one()).abs() > tolerance {
            return Err(BeliefError::WeightSum {
                sum: total.as_f64(),
                tolerance: tolerance.as_f64(),
            });
        }
        Ok(ParticleBelief { particles, weights })
    }

    /// Equal weights over the given particles.
    pub fn uniform(particles: Vec<LatentParam<T>>) -> Result<Self, BeliefError> {
        let n = particles.len();
        if n == 0 {
            return Err(BeliefError::Empty);
        }
        let w = T::one() / T::from_usize(n).unwrap();
        Self::from_parts(particles, vec![w; n])
    }

    /// `n` particles from the diagonal Gaussian, equal weights.
    pub fn init_gaussian<R: Rng + ?Sized>(
        mean: &LatentParam<T>,
        stddev: &[T],
        n: usize,
        rng: &mut R,
    ) -> Result<Self, BeliefError> {
        if n == 0 {
            return Err(BeliefError::Empty);
        }
        if stddev.len() != mean.dim() {
            return Err(BeliefError::StdDevDim {
                dim: stddev.len(),
                expected: mean.dim(),
            });
        }
        if let Some(d) = stddev.iter().position(|s| !s.is_finite() || *s < T::zero()) {
            return Err(BeliefError::BadStdDev(d));
        }
        let particles = (0..n)
            .map(|_| {
                let theta = mean
                    .theta()
                    .iter()
                    .zip(stddev)
                    .map(|(&m, &s)| m + s * T::standard_normal(rng))
                    .collect();
                LatentParam::new(theta)
            })
            .collect();
        Self::uniform(particles)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles[0].dim()
    }

    pub fn particles(&self) -> &[LatentParam<T>] {
        &self.particles
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Applies `f` to every particle, keeping weights. Revalidates because
    /// `f` may change dimensions or produce non-finite entries.
    pub fn map_particles(
        &self,
        f: impl FnMut(&LatentParam<T>) -> LatentParam<T>,
    ) -> Result<Self, BeliefError> {
        Self::from_parts(self.particles.iter().map(f).collect(), self.weights.clone())
    }

    /// Bayes reweighting by the observation likelihood of each particle.
    /// Particles are left untouched; the parameter is time-invariant.
    pub fn update(
        &self,
        mut likelihood: impl FnMut(&LatentParam<T>) -> T,
    ) -> Result<BeliefUpdate<T>, BeliefError> {
        let mut unnormalized = Vec::with_capacity(self.len());
        let mut total = CompensatedSum::default();
        for (i, (p, &w)) in self.particles.iter().zip(&self.weights).enumerate() {
            let l = likelihood(p);
            if !l.is_finite() || l < T::zero() {
                return Err(BeliefError::BadLikelihood(i));
            }
            let wl = w * l;
            total.add(wl);
            unnormalized.push(wl);
        }
        let total = total.value();
        if total <= T::zero() {
            return Ok(BeliefUpdate {
                belief: self.clone(),
                degenerate: true,
            });
        }
        let weights = unnormalized.into_iter().map(|w| w / total).collect();
        Ok(BeliefUpdate {
            belief: ParticleBelief {
                particles: self.particles.clone(),
                weights,
            },
            degenerate: false,
        })
    }

    /// Effective sample size, the inverse sum of squared weights. Ranges
    /// from 1 (one-hot) to the particle count (uniform).
    pub fn ess(&self) -> T {
        let mut sq = CompensatedSum::default();
        for &w in &self.weights {
            sq.add(w * w);
        }
        T::one() / sq.value()
    }

    /// Low-variance resampling from one uniform draw. Particle `i` is
    /// copied either `floor(n w_i)` or `ceil(n w_i)` times; output weights
    /// are equal.
    pub fn resample_systematic<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let n = self.len();
        let n_t = T::from_usize(n).unwrap();
        let offset = T::unit_uniform(rng);
        let mut particles = Vec::with_capacity(n);
        let mut cum = CompensatedSum::default();
        cum.add(self.weights[0]);
        let mut i = 0;
        for j in 0..n {
            let pointer = (offset + T::from_usize(j).unwrap()) / n_t;
            while cum.value() < pointer && i + 1 < n {
                i += 1;
                cum.add(self.weights[i]);
            }
            particles.push(self.particles[i].clone());
        }
        Self::uniform(particles).expect("resample keeps particles valid")
    }

    /// `n` i.i.d. draws by weighted categorical sampling with replacement.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<LatentParam<T>>, BeliefError> {
        if n == 0 {
            return Err(BeliefError::ZeroDraws);
        }
        let mut cumulative = Vec::with_capacity(self.len());
        let mut cum = CompensatedSum::default();
        for &w in &self.weights {
            cum.add(w);
            cumulative.push(cum.value());
        }
        let total = *cumulative.last().expect("non-empty");
        let draws = (0..n)
            .map(|_| {
                let u = T::unit_uniform(rng) * total;
                let i = cumulative.partition_point(|&c| c < u).min(self.len() - 1);
                self.particles[i].clone()
            })
            .collect();
        Ok(draws)
    }

    /// Weighted mean of the particles.
    pub fn posterior_mean(&self) -> LatentParam<T> {
        let dim = self.dim();
        let mut mean = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut acc = CompensatedSum::default();
            for (p, &w) in self.particles.iter().zip(&self.weights) {
                acc.add(w * p[d]);
            }
            mean.push(acc.value());
        }
        LatentParam::new(mean)
    }
}

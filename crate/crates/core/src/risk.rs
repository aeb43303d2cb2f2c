//! Weighted empirical risk estimators.
//!
//! For a discrete loss Z taking value z_i with probability w_i:
//!
//! * `var` is the left-continuous generalized inverse of the CDF at the
//!   confidence level: the smallest sample value whose cumulative weight
//!   reaches beta.
//! * `cvar_ru` evaluates the Rockafellar-Uryasev form
//!   inf_eta { eta + E[(Z - eta)^+] / (1 - beta) }, whose infimum over a
//!   discrete law is attained at eta = var, in closed form from the sorted
//!   weighted samples.
//! * `cvar_tail_average` is the unweighted estimator that averages the
//!   ceil((1 - beta) * n) largest values.
//!
//! The two CVaR estimators agree (up to rounding) whenever weights are
//! uniform and (1 - beta) * n is an integer; otherwise the tail average is
//! the coarser one. Both dominate `var` at the same level, which the
//! Rockafellar-Uryasev implementation guarantees bit-for-bit by summing
//! only nonnegative tail excesses on top of the quantile.
//!
//! Cumulative weights are accumulated with a Neumaier correction. Plain
//! summation loses exactly the low bits the quantile comparison depends on
//! (uniform weights 1/n can cumulate to just below the level they should
//! land on), and a compensated sum restores them without introducing any
//! comparison tolerance.

use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("sample set is empty")]
    Empty,
    #[error("{values} values but {weights} weights")]
    LengthMismatch { values: usize, weights: usize },
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("negative or non-finite weight at index {0}")]
    BadWeight(usize),
    #[error("weights sum to {sum:e}, expected 1 within {tolerance:e}")]
    WeightSum { sum: f64, tolerance: f64 },
    #[error("confidence level {0} outside the open interval (0, 1)")]
    BadConfidence(f64),
}

/// Confidence level beta in the open interval (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ConfidenceLevel<T>(T);

impl<T: Real> ConfidenceLevel<T> {
    pub fn new(beta: T) -> Result<Self, RiskError> {
        if beta.is_finite() && beta > T::zero() && beta < T::one() {
            Ok(ConfidenceLevel(beta))
        } else {
            Err(RiskError::BadConfidence(beta.as_f64()))
        }
    }

    pub fn beta(self) -> T {
        self.0
    }
}

/// Finite weighted sample set with weights normalized to unit mass.
///
/// Construction validates; the estimators below are total on a valid set.
/// The accepted deviation of the weight sum from 1 is `1e-9`, widened for
/// low-precision scalars where `1e-9` sits below the summation noise floor.
#[derive(Clone, Debug)]
pub struct SampleSet<T> {
    values: Vec<T>,
    weights: Vec<T>,
    total: T,
}

impl<T: Real> SampleSet<T> {
    pub fn new(values: Vec<T>, weights: Vec<T>) -> Result<Self, RiskError> {
        if values.is_empty() {
            return Err(RiskError::Empty);
        }
        if values.len() != weights.len() {
            return Err(RiskError::LengthMismatch {
                values: values.len(),
                weights: weights.len(),
            });
        }
        validate_values(&values)?;
        let mut total = CompensatedSum::default();
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() {
                return Err(RiskError::BadWeight(i));
            }
            total.add(w);
        }
        let total = total.value();
        let tolerance = weight_tolerance::<T>(weights.len());
        if (total - T::one()).abs() > tolerance {
            return Err(RiskError::WeightSum {
                sum: total.as_f64(),
                tolerance: tolerance.as_f64(),
            });
        }
        Ok(SampleSet {
            values,
            weights,
            total,
        })
    }

    /// Equal-weight sample set.
    pub fn uniform(values: Vec<T>) -> Result<Self, RiskError> {
        let n = values.len();
        if n == 0 {
            return Err(RiskError::Empty);
        }
        let w = T::one() / T::from_usize(n).unwrap();
        Self::new(values, vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Actual weight mass, within tolerance of 1.
    pub fn weight_total(&self) -> T {
        self.total
    }
}

pub(crate) fn weight_tolerance<T: Real>(n: usize) -> T {
    let floor = T::epsilon() * T::of(16.0) * T::from_usize(n.max(1)).unwrap();
    T::of(1e-9).max(floor)
}

fn validate_values<T: Real>(values: &[T]) -> Result<(), RiskError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(RiskError::NonFiniteValue(i)),
        None => Ok(()),
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy)]
pub(crate) struct CompensatedSum<T> {
    sum: T,
    correction: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        CompensatedSum {
            sum: T::zero(),
            correction: T::zero(),
        }
    }
}

impl<T: Real> CompensatedSum<T> {
    pub(crate) fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.correction += (self.sum - t) + x;
        } else {
            self.correction += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> T {
        self.sum + self.correction
    }
}

fn ascending_order<T: Real>(values: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("validated finite"));
    order
}

/// Position in `order` where the cumulative weight first reaches beta
/// times the total mass.
///
/// A cumulative sum a few ulps shy of the threshold counts as having
/// reached it: decimal levels on uniform weights cross at exact rational
/// points, and rounding must not push those one sample up. If the mass
/// never reaches the threshold the last position closes the tail.
fn quantile_position<T: Real>(samples: &SampleSet<T>, order: &[usize], beta: T) -> usize {
    let total = samples.weight_total();
    let threshold = beta * total;
    let slack = total * T::epsilon() * T::of(8.0);
    let mut cum = CompensatedSum::default();
    for (pos, &i) in order.iter().enumerate() {
        cum.add(samples.weights()[i]);
        if cum.value() >= threshold - slack {
            return pos;
        }
    }
    order.len() - 1
}

/// Smallest sample value whose cumulative weight reaches beta.
pub fn var<T: Real>(samples: &SampleSet<T>, level: ConfidenceLevel<T>) -> T {
    let order = ascending_order(samples.values());
    samples.values()[order[quantile_position(samples, &order, level.beta())]]
}

/// Rockafellar-Uryasev CVaR, evaluated in closed form at eta = var.
///
/// With eta the beta-quantile, the objective value is
/// eta + sum_{z_i > eta} w_i (z_i - eta) / ((1 - beta) * total). Every
/// summand is nonnegative, so the result can never drop below `var`.
pub fn cvar_ru<T: Real>(samples: &SampleSet<T>, level: ConfidenceLevel<T>) -> T {
    let order = ascending_order(samples.values());
    let quantile_pos = quantile_position(samples, &order, level.beta());
    let eta = samples.values()[order[quantile_pos]];
    let mut excess = T::zero();
    for &i in &order[quantile_pos + 1..] {
        excess = excess + samples.weights()[i] * (samples.values()[i] - eta);
    }
    eta + excess / ((T::one() - level.beta()) * samples.weight_total())
}

/// Number of samples in the upper tail: ceil((1 - beta) * n), at least 1.
///
/// Confidence levels arrive as decimal literals whose binary images can push
/// an exactly-integer product to either side, so products within 1e-9 of an
/// integer are taken as that integer before the ceiling.
pub fn tail_size<T: Real>(n: usize, level: ConfidenceLevel<T>) -> usize {
    let x = (T::one() - level.beta()) * T::from_usize(n).unwrap();
    let nearest = x.round();
    let count = if (x - nearest).abs() <= T::of(1e-9) {
        nearest
    } else {
        x.ceil()
    };
    count.to_usize().unwrap_or(1).clamp(1, n)
}

/// Indices of the tail_size largest values, ties resolved toward lower
/// index. The returned order is largest first.
pub fn tail_index_set<T: Real>(
    values: &[T],
    level: ConfidenceLevel<T>,
) -> Result<Vec<usize>, RiskError> {
    if values.is_empty() {
        return Err(RiskError::Empty);
    }
    validate_values(values)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    // stable sort keeps equal values in index order
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("validated finite"));
    order.truncate(tail_size(values.len(), level));
    Ok(order)
}

/// Mean of the tail_size largest values (unweighted CVaR estimator).
pub fn cvar_tail_average<T: Real>(
    values: &[T],
    level: ConfidenceLevel<T>,
) -> Result<T, RiskError> {
    let tail = tail_index_set(values, level)?;
    let mut sum = T::zero();
    for &i in &tail {
        sum += values[i];
    }
    Ok(sum / T::from_usize(tail.len()).unwrap())
}

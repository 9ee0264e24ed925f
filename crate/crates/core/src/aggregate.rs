//! Forecast pooling, extremizing, the martingale check on belief updates,
//! and neutral partition priors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{fsum, is_positive};
use crate::probability::Probability;
use crate::solve::{bisect_increasing, BisectError};

const PARTITION_TOLERANCE: f64 = 1e-9;
/// Probability-space tolerance for the exponent solver.
const EXPONENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error("exponent must be positive, got {0}")]
    Exponent(f64),
    #[error("{0} must lie strictly inside (0, 1)")]
    Endpoint(&'static str),
    #[error("{p_in} and {p_out} are on opposite sides of 0.5; no extremizing exponent maps one to the other")]
    Straddle { p_in: f64, p_out: f64 },
    #[error("forecast set is empty")]
    EmptySet,
    #[error("{forecasts} forecasts but {weights} weights")]
    WeightCount { forecasts: usize, weights: usize },
    #[error("weight {0} is not positive")]
    Weight(f64),
    #[error("log-odds pooling is undefined for a forecast of exactly {0}")]
    DegenerateForecast(f64),
    #[error("evidence outcome probabilities sum to {0}, not 1")]
    PartitionSum(f64),
    #[error("evidence partition has no outcomes")]
    EmptyPartition,
    #[error("need 0 <= favorable <= total and total >= 1, got {favorable} of {total}")]
    PartitionCounts { favorable: u64, total: u64 },
    #[error("exponent search failed: {0}")]
    Search(#[from] BisectError),
}

fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Power transform on the odds: `p^a / (p^a + (1-p)^a)`.
///
/// `a > 1` pushes away from 0.5, `a < 1` pulls toward it. 0, 0.5 and 1 are
/// fixed points for every exponent.
pub fn extremize(p: Probability, exponent: f64) -> Result<Probability, AggregateError> {
    if !is_positive(exponent) {
        return Err(AggregateError::Exponent(exponent));
    }
    let v = p.value();
    if exponent == 1.0 || v == 0.0 || v == 1.0 || v == 0.5 {
        return Ok(p);
    }
    Ok(Probability::saturating(sigmoid(exponent * logit(v))))
}

/// The exponent `a` with `extremize(p_in, a) == p_out`, found by bisection on
/// the forward map.
pub fn solve_extremizing_exponent(
    p_in: Probability,
    p_out: Probability,
) -> Result<f64, AggregateError> {
    let (x, y) = (p_in.value(), p_out.value());
    if x <= 0.0 || x >= 1.0 {
        return Err(AggregateError::Endpoint("p_in"));
    }
    if y <= 0.0 || y >= 1.0 {
        return Err(AggregateError::Endpoint("p_out"));
    }
    if x == y {
        return Ok(1.0);
    }
    if (x - 0.5).signum() != (y - 0.5).signum() || x == 0.5 || y == 0.5 {
        return Err(AggregateError::Straddle { p_in: x, p_out: y });
    }
    // distance from 0.5 grows with the exponent
    let spread = |a: f64| (sigmoid(a * logit(x)) - 0.5).abs();
    let target = (y - 0.5).abs();
    let mut hi = 2.0;
    while spread(hi) < target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(AggregateError::Exponent(hi));
        }
    }
    let root = bisect_increasing(spread, 0.0, hi, target, EXPONENT_TOLERANCE)?;
    Ok(root.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolMethod {
    Mean,
    OddsGeometricMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSet {
    pub forecasts: Vec<Probability>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl ForecastSet {
    pub fn new(
        forecasts: Vec<Probability>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, AggregateError> {
        let set = ForecastSet { forecasts, weights };
        set.normalized_weights()?;
        Ok(set)
    }

    pub fn unweighted(forecasts: Vec<Probability>) -> Result<Self, AggregateError> {
        Self::new(forecasts, None)
    }

    fn normalized_weights(&self) -> Result<Vec<f64>, AggregateError> {
        let n = self.forecasts.len();
        if n == 0 {
            return Err(AggregateError::EmptySet);
        }
        match &self.weights {
            None => Ok(vec![1.0 / n as f64; n]),
            Some(w) => {
                if w.len() != n {
                    return Err(AggregateError::WeightCount {
                        forecasts: n,
                        weights: w.len(),
                    });
                }
                if let Some(&bad) = w.iter().find(|&&x| !is_positive(x)) {
                    return Err(AggregateError::Weight(bad));
                }
                let total = fsum(w.iter().copied());
                Ok(w.iter().map(|x| x / total).collect())
            }
        }
    }
}

pub fn pool(set: &ForecastSet, method: PoolMethod) -> Result<Probability, AggregateError> {
    let weights = set.normalized_weights()?;
    let first = set.forecasts[0];
    if set.forecasts.iter().all(|&f| f == first) {
        if method == PoolMethod::OddsGeometricMean {
            check_interior(first)?;
        }
        return Ok(first);
    }
    match method {
        PoolMethod::Mean => Ok(Probability::saturating(fsum(
            set.forecasts
                .iter()
                .zip(&weights)
                .map(|(f, w)| f.value() * w),
        ))),
        PoolMethod::OddsGeometricMean => {
            for &f in &set.forecasts {
                check_interior(f)?;
            }
            let mean_log_odds = fsum(
                set.forecasts
                    .iter()
                    .zip(&weights)
                    .map(|(f, w)| logit(f.value()) * w),
            );
            Ok(Probability::saturating(sigmoid(mean_log_odds)))
        }
    }
}

fn check_interior(p: Probability) -> Result<(), AggregateError> {
    if p.value() == 0.0 || p.value() == 1.0 {
        Err(AggregateError::DegenerateForecast(p.value()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceOutcome {
    /// Chance of observing this outcome.
    pub probability: Probability,
    /// Belief held after observing it.
    pub posterior: Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<EvidenceOutcome>", into = "Vec<EvidenceOutcome>")]
pub struct EvidencePartition {
    outcomes: Vec<EvidenceOutcome>,
}

impl EvidencePartition {
    pub fn new(outcomes: Vec<EvidenceOutcome>) -> Result<Self, AggregateError> {
        if outcomes.is_empty() {
            return Err(AggregateError::EmptyPartition);
        }
        let total = fsum(outcomes.iter().map(|o| o.probability.value()));
        if (total - 1.0).abs() > PARTITION_TOLERANCE {
            return Err(AggregateError::PartitionSum(total));
        }
        Ok(EvidencePartition { outcomes })
    }

    pub fn outcomes(&self) -> &[EvidenceOutcome] {
        &self.outcomes
    }
}

impl TryFrom<Vec<EvidenceOutcome>> for EvidencePartition {
    type Error = AggregateError;

    fn try_from(v: Vec<EvidenceOutcome>) -> Result<Self, Self::Error> {
        EvidencePartition::new(v)
    }
}

impl From<EvidencePartition> for Vec<EvidenceOutcome> {
    fn from(p: EvidencePartition) -> Self {
        p.outcomes
    }
}

/// Expected posterior minus prior. Zero for a coherent update.
pub fn martingale_check(prior: Probability, partition: &EvidencePartition) -> f64 {
    fsum(
        partition
            .outcomes
            .iter()
            .map(|o| o.probability.value() * o.posterior.value()),
    ) - prior.value()
}

/// `favorable / total`: the share of enumerated scenarios that are favorable.
pub fn partition_prior(favorable: u64, total: u64) -> Result<Probability, AggregateError> {
    if total == 0 || favorable > total {
        return Err(AggregateError::PartitionCounts { favorable, total });
    }
    Ok(Probability::saturating(favorable as f64 / total as f64))
}

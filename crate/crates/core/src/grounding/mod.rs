//! Grounding semantics of property nodes: when a property holds in an
//! observed world state, and to what signed degree it is satisfied.

mod distance;
mod expr;

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use distance::{check_distribution, distribution_distance, uniform, Distance, MASS_TOL};
pub use expr::{BinOp, Comparison, ExprParseError, MetricExpr, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundingError {
    #[error("metric `{0}` is missing from the world state")]
    MissingMetric(String),
    #[error("distribution `{0}` is missing from the world state")]
    MissingDistribution(String),
    #[error("zero denominator: `{denominator}` is 0")]
    ZeroDenominator { denominator: String },
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("invalid distribution `{name}`: {reason}")]
    InvalidDistribution { name: String, reason: String },
    #[error("distribution lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("KL divergence undefined: reference has zero mass at index {index}")]
    KlSupport { index: usize },
}

/// Observed behaviour of an entity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldState {
    /// Named non-negative event counts (`requests`, `offers`, ...).
    #[serde(default)]
    pub counters: BTreeMap<String, u64>,
    /// Named discrete distributions, e.g. the share of tasks per volunteer.
    #[serde(default)]
    pub distributions: BTreeMap<String, Vec<f64>>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_counter(mut self, name: &str, value: u64) -> Self {
        self.counters.insert(name.to_owned(), value);
        self
    }

    pub fn with_distribution(mut self, name: &str, values: Vec<f64>) -> Self {
        self.distributions.insert(name.to_owned(), values);
        self
    }

    pub fn validate(&self) -> Result<(), GroundingError> {
        for (name, d) in &self.distributions {
            check_distribution(d).map_err(|reason| GroundingError::InvalidDistribution {
                name: name.clone(),
                reason,
            })?;
        }
        Ok(())
    }

    fn counter(&self, name: &str) -> Result<f64, GroundingError> {
        self.counters
            .get(name)
            .map(|v| *v as f64)
            .ok_or_else(|| GroundingError::MissingMetric(name.to_owned()))
    }

    fn distribution(&self, name: &str) -> Result<&[f64], GroundingError> {
        self.distributions
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| GroundingError::MissingDistribution(name.to_owned()))
    }
}

/// Computable semantics attached to a property node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SatisfactionSpec {
    /// Holds when `numerator / denominator > 1`; the degree maps the ratio
    /// onto `[-1, 1]` with the knee at 1 and saturation at `max_ratio`.
    RatioThreshold {
        numerator: String,
        denominator: String,
        max_ratio: f64,
    },
    /// Holds when the distance between the named distribution and the
    /// uniform one is below `epsilon`; saturates at `max_delta`.
    DistributionUniformity {
        distribution: String,
        epsilon: f64,
        max_delta: f64,
        distance: Distance,
    },
    /// Arbitrary comparison over counters; degree is `1` or `-1`.
    BooleanExpr {
        #[serde(serialize_with = "expr_to_str", deserialize_with = "expr_from_str")]
        expr: MetricExpr,
    },
}

fn expr_to_str<S: Serializer>(e: &MetricExpr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

fn expr_from_str<'de, D: Deserializer<'de>>(d: D) -> Result<MetricExpr, D::Error> {
    let src = String::deserialize(d)?;
    MetricExpr::parse(&src).map_err(serde::de::Error::custom)
}

impl SatisfactionSpec {
    /// Checks parameter bounds: `max_ratio > 1`, `0 < epsilon < max_delta`.
    pub fn check_params(&self) -> Result<(), String> {
        match self {
            SatisfactionSpec::RatioThreshold { max_ratio, .. } => {
                if !(max_ratio.is_finite() && *max_ratio > 1.0) {
                    return Err(format!("max_ratio must be > 1, got {max_ratio}"));
                }
            }
            SatisfactionSpec::DistributionUniformity {
                epsilon, max_delta, ..
            } => {
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return Err(format!("epsilon must be > 0, got {epsilon}"));
                }
                if !(max_delta.is_finite() && max_delta > epsilon) {
                    return Err(format!("max_delta must exceed epsilon, got {max_delta}"));
                }
            }
            SatisfactionSpec::BooleanExpr { .. } => {}
        }
        Ok(())
    }

    /// The ratio `R` or distance `Δ` the degree is computed from, unclamped.
    /// `None` for boolean expressions.
    pub fn measure(&self, world: &WorldState) -> Result<Option<f64>, GroundingError> {
        match self {
            SatisfactionSpec::RatioThreshold {
                numerator,
                denominator,
                ..
            } => {
                let num = world.counter(numerator)?;
                let den = world.counter(denominator)?;
                if den == 0.0 {
                    return Err(GroundingError::ZeroDenominator {
                        denominator: denominator.clone(),
                    });
                }
                Ok(Some(num / den))
            }
            SatisfactionSpec::DistributionUniformity {
                distribution,
                distance,
                ..
            } => {
                let d = world.distribution(distribution)?;
                let u = uniform(d.len());
                distribution_distance(*distance, d, &u)
                    .map(Some)
                    .map_err(|e| match e {
                        GroundingError::InvalidDistribution { reason, .. } => {
                            GroundingError::InvalidDistribution {
                                name: distribution.clone(),
                                reason,
                            }
                        }
                        other => other,
                    })
            }
            SatisfactionSpec::BooleanExpr { .. } => Ok(None),
        }
    }
}

/// Whether the property holds in `world`.
pub fn eval_predicate(spec: &SatisfactionSpec, world: &WorldState) -> Result<bool, GroundingError> {
    match spec {
        SatisfactionSpec::RatioThreshold { .. } => Ok(spec.measure(world)?.unwrap_or(0.0) > 1.0),
        SatisfactionSpec::DistributionUniformity { epsilon, .. } => {
            Ok(spec.measure(world)?.unwrap_or(f64::INFINITY) < *epsilon)
        }
        SatisfactionSpec::BooleanExpr { expr } => expr.eval(&world.counters),
    }
}

/// Signed degree in `[-1, 1]` to which `world` satisfies the property.
pub fn satisfaction_degree(
    spec: &SatisfactionSpec,
    world: &WorldState,
) -> Result<f64, GroundingError> {
    let degree = match spec {
        SatisfactionSpec::RatioThreshold { max_ratio, .. } => {
            let r = spec.measure(world)?.unwrap_or(0.0);
            ratio_degree(r, *max_ratio)
        }
        SatisfactionSpec::DistributionUniformity {
            epsilon, max_delta, ..
        } => {
            let delta = spec.measure(world)?.unwrap_or(f64::INFINITY);
            uniformity_degree(delta, *epsilon, *max_delta)
        }
        SatisfactionSpec::BooleanExpr { expr } => {
            if expr.eval(&world.counters)? {
                1.0
            } else {
                -1.0
            }
        }
    };
    Ok(degree)
}

/// Degree for a ratio `r >= 0`: `(r-1)/(max-1)` above 1, `r-1` otherwise.
/// Ratios above `max_ratio` saturate at 1.
pub fn ratio_degree(r: f64, max_ratio: f64) -> f64 {
    let r = r.min(max_ratio);
    let d = if r > 1.0 {
        (r - 1.0) / (max_ratio - 1.0)
    } else {
        r - 1.0
    };
    d + 0.0
}

/// Degree for a distance `delta >= 0`: `1 - delta/eps` below `eps`,
/// `-(delta-eps)/(max-eps)` otherwise. Distances above `max_delta` saturate
/// at -1.
pub fn uniformity_degree(delta: f64, epsilon: f64, max_delta: f64) -> f64 {
    let delta = delta.min(max_delta);
    let d = if delta < epsilon {
        1.0 - delta / epsilon
    } else {
        -(delta - epsilon) / (max_delta - epsilon)
    };
    d + 0.0
}

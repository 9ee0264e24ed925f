//! Request and response bodies. Field names match the document format used
//! by the store, and every number travels at full precision.

use cascade_core::cascade::{Factor, Overrides};
use cascade_core::grid::{LogBucketDistribution, QualifierRule};
use cascade_core::sensitivity::{FactorSubset, Sweep};
use cascade_core::Probability;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub model_id: String,
    #[serde(default)]
    pub overrides: Overrides,
}

/// A subset given inline, or by name: a subset declared in the model
/// document, a factor group, or `ids:a,b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubsetRef {
    Inline(FactorSubset),
    Named(String),
}

impl Default for SubsetRef {
    fn default() -> Self {
        SubsetRef::Inline(FactorSubset::All)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub model_id: String,
    #[serde(default)]
    pub overrides: Overrides,
    pub target: Probability,
    #[serde(default)]
    pub subset: SubsetRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResponse {
    pub multiplier: f64,
    /// Every factor of the scaled model, in cascade order.
    pub factors: Vec<Factor>,
    pub achieved: Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TornadoRequest {
    pub model_id: String,
    #[serde(default)]
    pub overrides: Overrides,
    /// Defaults to sweeping each applicable factor from its value to 1.
    #[serde(default)]
    pub sweeps: Option<Vec<Sweep>>,
}

/// Either a grid attached to a model (optionally with replaced axes or rule)
/// or a free-standing pair of distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRequest {
    #[serde(default)]
    pub model_id: Option<String>,
    /// Attached grid name; the model's first grid when omitted.
    #[serde(default)]
    pub grid: Option<String>,
    #[serde(default)]
    pub rows: Option<LogBucketDistribution>,
    #[serde(default)]
    pub cols: Option<LogBucketDistribution>,
    #[serde(default)]
    pub rule: Option<QualifierRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleRequest {
    pub probability: Probability,
    pub horizon_years: f64,
    pub target_years: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremizeRequest {
    pub probability: Probability,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityResponse {
    pub probability: Probability,
}

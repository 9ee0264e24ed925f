//! Model documents: a cascade plus the data that backs its factors.
//!
//! Documents are JSON with a required `schema_version`. Unknown fields are
//! rejected everywhere. Parsing goes through a thin layer of raw structs so
//! that range errors can name the factor or attachment they belong to.

use std::collections::{BTreeMap, BTreeSet};

use cascade_core::cascade::{
    validate_model, CascadeModel, Factor, FactorGroup, FactorSource, FactorValue,
};
use cascade_core::econ::{DeviceSpec, WorkloadSpec};
use cascade_core::grid::{LogBucketDistribution, MagnitudeBucket, QualifierRule};
use cascade_core::hazard::DerailmentEvent;
use cascade_core::sensitivity::FactorSubset;
use cascade_core::Probability;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("document is not valid UTF-8")]
    Encoding,
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
}

impl DocumentError {
    fn invalid(location: impl Into<String>, message: impl ToString) -> Self {
        DocumentError::Invalid {
            location: location.into(),
            message: message.to_string(),
        }
    }
}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        DocumentError::Parse {
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        }
    }
}

/// serde_json appends " at line X column Y"; the position is carried separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedDistribution {
    pub name: String,
    #[serde(flatten)]
    pub distribution: LogBucketDistribution,
}

/// A compute-need × efficiency grid assembled from two named distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub name: String,
    pub rows: String,
    pub cols: String,
    pub rule: QualifierRule,
}

/// Chance of achieving each bucket of a named distribution if it is the one needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Achievement {
    pub name: String,
    pub distribution: String,
    pub values: Vec<Probability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedWorkload {
    pub name: String,
    pub workload: WorkloadSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSubset {
    pub name: String,
    pub subset: FactorSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub id: String,
    pub model: CascadeModel,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub distributions: Vec<NamedDistribution>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grids: Vec<GridSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub achievements: Vec<Achievement>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub device_specs: Vec<DeviceSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub workloads: Vec<NamedWorkload>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub derailments: Vec<DerailmentEvent>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub subsets: Vec<NamedSubset>,
    /// Named scalar inputs for the calculators.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    /// Free text keyed by topic, e.g. published figures.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: BTreeMap<String, String>,
}

impl ModelDocument {
    /// A document holding just a model.
    pub fn bare(id: impl Into<String>, model: CascadeModel) -> Self {
        ModelDocument {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            model,
            distributions: Vec::new(),
            grids: Vec::new(),
            achievements: Vec::new(),
            device_specs: Vec::new(),
            workloads: Vec::new(),
            derailments: Vec::new(),
            subsets: Vec::new(),
            parameters: BTreeMap::new(),
            annotations: BTreeMap::new(),
        }
    }

    pub fn distribution(&self, name: &str) -> Option<&LogBucketDistribution> {
        self.distributions
            .iter()
            .find(|d| d.name == name)
            .map(|d| &d.distribution)
    }

    pub fn grid(&self, name: &str) -> Option<&GridSpec> {
        self.grids.iter().find(|g| g.name == name)
    }

    pub fn achievement(&self, name: &str) -> Option<&Achievement> {
        self.achievements.iter().find(|a| a.name == name)
    }

    pub fn device(&self, name: &str) -> Option<&DeviceSpec> {
        self.device_specs.iter().find(|d| d.name == name)
    }

    pub fn workload(&self, name: &str) -> Option<&WorkloadSpec> {
        self.workloads
            .iter()
            .find(|w| w.name == name)
            .map(|w| &w.workload)
    }

    pub fn derailment(&self, name: &str) -> Option<&DerailmentEvent> {
        self.derailments.iter().find(|d| d.name == name)
    }

    pub fn subset(&self, name: &str) -> Option<&FactorSubset> {
        self.subsets
            .iter()
            .find(|s| s.name == name)
            .map(|s| &s.subset)
    }

    /// A subset named in this document, else `all`, a group name or `ids:a,b`.
    pub fn resolve_subset(&self, name: &str) -> Result<FactorSubset, String> {
        match self.subset(name) {
            Some(s) => Ok(s.clone()),
            None => name.parse(),
        }
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.get(name).copied()
    }

    pub fn annotation(&self, key: &str) -> Option<&str> {
        self.annotations.get(key).map(String::as_str)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    schema_version: u32,
    id: String,
    model: RawModel,
    #[serde(default)]
    distributions: Vec<RawDistribution>,
    #[serde(default)]
    grids: Vec<GridSpec>,
    #[serde(default)]
    achievements: Vec<RawAchievement>,
    #[serde(default)]
    device_specs: Vec<DeviceSpec>,
    #[serde(default)]
    workloads: Vec<NamedWorkload>,
    #[serde(default)]
    derailments: Vec<RawDerailment>,
    #[serde(default)]
    subsets: Vec<NamedSubset>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    #[serde(default)]
    annotations: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    horizon_year: i32,
    factors: Vec<RawFactor>,
    #[serde(default)]
    notes: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawValue {
    Number(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    id: String,
    label: String,
    group: FactorGroup,
    probability: RawValue,
    #[serde(default)]
    rationale: String,
    #[serde(default = "FactorSource::manual")]
    source: FactorSource,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    name: String,
    buckets: Vec<MagnitudeBucket>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAchievement {
    name: String,
    distribution: String,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRisk {
    probability: f64,
    horizon_years: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDerailment {
    name: String,
    event_risk: RawRisk,
    delay_given_event: f64,
}

fn probability(location: impl Fn() -> String, v: f64) -> Result<Probability, DocumentError> {
    Probability::new(v).map_err(|e| DocumentError::invalid(location(), e))
}

fn unique<'a>(kind: &str, names: impl Iterator<Item = &'a str>) -> Result<(), DocumentError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if n.trim().is_empty() {
            return Err(DocumentError::invalid(kind, "empty name"));
        }
        if !seen.insert(n) {
            return Err(DocumentError::invalid(
                format!("{kind} '{n}'"),
                "duplicate name",
            ));
        }
    }
    Ok(())
}

fn convert_factor(raw: RawFactor) -> Result<Factor, DocumentError> {
    let location = || format!("factor '{}' probability", raw.id);
    let probability = match raw.probability {
        RawValue::Number(v) => FactorValue::Known(probability(location, v)?),
        RawValue::Text(t) if t == FactorValue::NA_TOKEN => FactorValue::NotApplicable,
        RawValue::Text(t) => {
            return Err(DocumentError::invalid(
                location(),
                format!("expected a number in [0, 1] or \"N/A\", got \"{t}\""),
            ))
        }
    };
    Ok(Factor {
        id: raw.id,
        label: raw.label,
        group: raw.group,
        probability,
        rationale: raw.rationale,
        source: raw.source,
    })
}

/// Parses and fully validates a model document.
pub fn load_model(bytes: &[u8]) -> Result<ModelDocument, DocumentError> {
    let text = std::str::from_utf8(bytes).map_err(|_| DocumentError::Encoding)?;
    let raw: RawDocument = serde_json::from_str(text)?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(DocumentError::SchemaVersion {
            found: raw.schema_version,
        });
    }
    if raw.id.trim().is_empty() || raw.id.contains(['/', '\\']) || raw.id.starts_with('.') {
        return Err(DocumentError::invalid(
            "id",
            format!("'{}' is not a usable identifier", raw.id),
        ));
    }

    let factors = raw
        .model
        .factors
        .into_iter()
        .map(convert_factor)
        .collect::<Result<Vec<_>, _>>()?;
    let model = CascadeModel {
        name: raw.model.name,
        horizon_year: raw.model.horizon_year,
        factors,
        notes: raw.model.notes,
    };
    if let Some(v) = validate_model(&model).into_iter().next() {
        let location = match &v.factor_id {
            Some(id) => format!("factor '{id}'"),
            None => "model".to_string(),
        };
        return Err(DocumentError::invalid(location, v));
    }

    unique(
        "distribution",
        raw.distributions.iter().map(|d| d.name.as_str()),
    )?;
    let distributions = raw
        .distributions
        .into_iter()
        .map(|d| {
            LogBucketDistribution::new(d.buckets, d.weights)
                .map(|distribution| NamedDistribution {
                    name: d.name.clone(),
                    distribution,
                })
                .map_err(|e| DocumentError::invalid(format!("distribution '{}'", d.name), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let find = |name: &str| distributions.iter().find(|d| d.name == name);

    unique("grid", raw.grids.iter().map(|g| g.name.as_str()))?;
    for g in &raw.grids {
        for axis in [&g.rows, &g.cols] {
            if find(axis).is_none() {
                return Err(DocumentError::invalid(
                    format!("grid '{}'", g.name),
                    format!("unknown distribution '{axis}'"),
                ));
            }
        }
        QualifierRule::new(g.rule.threshold, g.rule.strict)
            .map_err(|e| DocumentError::invalid(format!("grid '{}'", g.name), e))?;
    }

    unique(
        "achievement",
        raw.achievements.iter().map(|a| a.name.as_str()),
    )?;
    let achievements = raw
        .achievements
        .into_iter()
        .map(|a| {
            let at = |i: usize| {
                let name = a.name.clone();
                move || format!("achievement '{name}' value {i}")
            };
            let values = a
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| probability(at(i), v))
                .collect::<Result<Vec<_>, _>>()?;
            let dist = find(&a.distribution).ok_or_else(|| {
                DocumentError::invalid(
                    format!("achievement '{}'", a.name),
                    format!("unknown distribution '{}'", a.distribution),
                )
            })?;
            if dist.distribution.len() != values.len() {
                return Err(DocumentError::invalid(
                    format!("achievement '{}'", a.name),
                    format!(
                        "{} values for {} buckets",
                        values.len(),
                        dist.distribution.len()
                    ),
                ));
            }
            Ok(Achievement {
                name: a.name,
                distribution: a.distribution,
                values,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    unique("device", raw.device_specs.iter().map(|d| d.name.as_str()))?;
    for d in &raw.device_specs {
        d.validate()
            .map_err(|e| DocumentError::invalid(format!("device '{}'", d.name), e))?;
    }

    unique("workload", raw.workloads.iter().map(|w| w.name.as_str()))?;
    for w in &raw.workloads {
        w.workload
            .validate()
            .map_err(|e| DocumentError::invalid(format!("workload '{}'", w.name), e))?;
    }

    unique(
        "derailment",
        raw.derailments.iter().map(|d| d.name.as_str()),
    )?;
    let derailments = raw
        .derailments
        .into_iter()
        .map(|d| {
            let here = |field: &str| format!("derailment '{}' {field}", d.name);
            let risk = cascade_core::hazard::HorizonRisk::new(
                probability(|| here("event_risk.probability"), d.event_risk.probability)?,
                d.event_risk.horizon_years,
            )
            .map_err(|e| DocumentError::invalid(here("event_risk"), e))?;
            Ok(DerailmentEvent {
                delay_given_event: probability(|| here("delay_given_event"), d.delay_given_event)?,
                name: d.name,
                event_risk: risk,
            })
        })
        .collect::<Result<Vec<_>, DocumentError>>()?;

    unique("subset", raw.subsets.iter().map(|s| s.name.as_str()))?;
    for s in &raw.subsets {
        s.subset
            .select(&model)
            .map_err(|e| DocumentError::invalid(format!("subset '{}'", s.name), e))?;
    }

    for (k, v) in &raw.parameters {
        if !v.is_finite() {
            return Err(DocumentError::invalid(
                format!("parameter '{k}'"),
                "not finite",
            ));
        }
    }

    Ok(ModelDocument {
        schema_version: raw.schema_version,
        id: raw.id,
        model,
        distributions,
        grids: raw.grids,
        achievements,
        device_specs: raw.device_specs,
        workloads: raw.workloads,
        derailments,
        subsets: raw.subsets,
        parameters: raw.parameters,
        annotations: raw.annotations,
    })
}

//! Conjunctive cascades of conditional probabilities.
//!
//! A [`CascadeModel`] is an ordered list of factors, each the probability of
//! one necessary step given that every earlier step happened. The joint odds
//! of the whole chain are the product of the factors. Order only matters for
//! reading the running product; the joint value itself is computed with a
//! single rounding (see [`crate::exact`]) and is bit-identical under any
//! permutation of the factors.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exact::ExactProduct;
use crate::probability::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorGroup {
    Software,
    Hardware,
    Sociopolitical,
}

impl FactorGroup {
    pub const ALL: [FactorGroup; 3] = [
        FactorGroup::Software,
        FactorGroup::Hardware,
        FactorGroup::Sociopolitical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FactorGroup::Software => "software",
            FactorGroup::Hardware => "hardware",
            FactorGroup::Sociopolitical => "sociopolitical",
        }
    }
}

impl fmt::Display for FactorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FactorGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FactorGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown factor group '{s}'"))
    }
}

/// A factor's probability, or the marker for a step that does not apply to
/// this horizon. Not-applicable contributes exactly 1 to every product.
///
/// In documents this is either a number or the string `"N/A"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorValue {
    Known(Probability),
    NotApplicable,
}

impl FactorValue {
    pub const NA_TOKEN: &'static str = "N/A";

    /// The multiplier this factor contributes.
    pub fn effective(self) -> f64 {
        match self {
            FactorValue::Known(p) => p.value(),
            FactorValue::NotApplicable => 1.0,
        }
    }

    pub fn is_applicable(self) -> bool {
        matches!(self, FactorValue::Known(_))
    }
}

impl From<Probability> for FactorValue {
    fn from(p: Probability) -> Self {
        FactorValue::Known(p)
    }
}

impl fmt::Display for FactorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorValue::Known(p) => write!(f, "{p}"),
            FactorValue::NotApplicable => f.write_str(Self::NA_TOKEN),
        }
    }
}

impl FromStr for FactorValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("n/a") || s.eq_ignore_ascii_case("na") {
            return Ok(FactorValue::NotApplicable);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("'{s}' is neither a probability nor N/A"))?;
        Probability::new(v)
            .map(FactorValue::Known)
            .map_err(|e| e.to_string())
    }
}

impl Serialize for FactorValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            FactorValue::Known(p) => serializer.serialize_f64(p.value()),
            FactorValue::NotApplicable => serializer.serialize_str(Self::NA_TOKEN),
        }
    }
}

impl<'de> Deserialize<'de> for FactorValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct FactorValueVisitor;

        impl Visitor<'_> for FactorValueVisitor {
            type Value = FactorValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a probability in [0, 1] or \"N/A\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<FactorValue, E> {
                Probability::new(v)
                    .map(FactorValue::Known)
                    .map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<FactorValue, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<FactorValue, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<FactorValue, E> {
                if v == FactorValue::NA_TOKEN {
                    Ok(FactorValue::NotApplicable)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(FactorValueVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Manual,
    GridDerived,
    HazardDerived,
    EconDerived,
}

/// Where a factor's value came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSource {
    pub kind: SourceKind,
    /// Free-form pointer to the producing computation, e.g. `grid:inference-cost`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

impl FactorSource {
    pub fn manual() -> Self {
        FactorSource {
            kind: SourceKind::Manual,
            reference: None,
        }
    }

    pub fn manual_with(reference: impl Into<String>) -> Self {
        FactorSource {
            kind: SourceKind::Manual,
            reference: Some(reference.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub id: String,
    pub label: String,
    pub group: FactorGroup,
    pub probability: FactorValue,
    #[serde(default)]
    pub rationale: String,
    pub source: FactorSource,
}

impl Factor {
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        group: FactorGroup,
        probability: FactorValue,
    ) -> Self {
        Factor {
            id: id.into(),
            label: label.into(),
            group,
            probability,
            rationale: String::new(),
            source: FactorSource::manual(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeModel {
    pub name: String,
    pub horizon_year: i32,
    pub factors: Vec<Factor>,
    #[serde(default)]
    pub notes: String,
}

impl CascadeModel {
    pub fn factor(&self, id: &str) -> Option<&Factor> {
        self.factors.iter().find(|f| f.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|f| f.id.as_str())
    }

    /// Copy of the model with factor `index` replaced by `value`.
    pub(crate) fn with_value_at(
        &self,
        index: usize,
        value: FactorValue,
        source: FactorSource,
    ) -> CascadeModel {
        let mut out = self.clone();
        out.factors[index].probability = value;
        out.factors[index].source = source;
        out
    }
}

/// One row of an [`EvaluationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorStep {
    pub factor_id: String,
    /// The multiplier used; 1.0 for a not-applicable factor.
    pub probability: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model_name: String,
    pub joint_odds: Probability,
    pub per_factor: Vec<FactorStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationRule {
    EmptyCascade,
    EmptyId,
    DuplicateId,
}

impl fmt::Display for ViolationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationRule::EmptyCascade => "cascade has no factors",
            ViolationRule::EmptyId => "factor id is empty",
            ViolationRule::DuplicateId => "factor id is not unique",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Offending factor, absent for whole-model rules.
    pub factor_id: Option<String>,
    pub rule: ViolationRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.factor_id {
            Some(id) => write!(f, "factor '{id}': {}", self.rule),
            None => write!(f, "{}", self.rule),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CascadeError {
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown factor '{0}'")]
    UnknownFactor(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Factor id to replacement value.
pub type Overrides = BTreeMap<String, FactorValue>;

/// Lists every invariant the model breaks. Empty means valid.
pub fn validate_model(model: &CascadeModel) -> Vec<Violation> {
    let mut out = Vec::new();
    if model.factors.is_empty() {
        out.push(Violation {
            factor_id: None,
            rule: ViolationRule::EmptyCascade,
        });
    }
    let mut seen = HashSet::new();
    let mut reported = HashSet::new();
    for f in &model.factors {
        if f.id.trim().is_empty() {
            out.push(Violation {
                factor_id: Some(f.id.clone()),
                rule: ViolationRule::EmptyId,
            });
            continue;
        }
        if !seen.insert(f.id.as_str()) && reported.insert(f.id.as_str()) {
            out.push(Violation {
                factor_id: Some(f.id.clone()),
                rule: ViolationRule::DuplicateId,
            });
        }
    }
    out
}

pub fn evaluate_cascade(model: &CascadeModel) -> Result<EvaluationReport, CascadeError> {
    let violations = validate_model(model);
    if !violations.is_empty() {
        return Err(CascadeError::Invalid(violations));
    }
    let mut acc = ExactProduct::new();
    let per_factor: Vec<FactorStep> = model
        .factors
        .iter()
        .map(|f| {
            let p = f.probability.effective();
            acc.mul(p);
            FactorStep {
                factor_id: f.id.clone(),
                probability: p,
                cumulative: acc.to_f64(),
            }
        })
        .collect();
    let joint = per_factor.last().map(|s| s.cumulative).unwrap_or(1.0);
    Ok(EvaluationReport {
        model_name: model.name.clone(),
        joint_odds: Probability::new(joint).expect("product of probabilities"),
        per_factor,
    })
}

/// Joint odds only; skips building the per-factor table.
pub fn joint_odds(model: &CascadeModel) -> Result<Probability, CascadeError> {
    let violations = validate_model(model);
    if !violations.is_empty() {
        return Err(CascadeError::Invalid(violations));
    }
    Ok(joint_of_values(
        model.factors.iter().map(|f| f.probability.effective()),
    ))
}

pub(crate) fn joint_of_values(values: impl IntoIterator<Item = f64>) -> Probability {
    Probability::new(crate::exact::product(values)).expect("product of probabilities")
}

/// Returns a new model with the given factors replaced. Overridden factors
/// are marked as manually sourced.
pub fn apply_overrides(
    model: &CascadeModel,
    overrides: &Overrides,
) -> Result<CascadeModel, CascadeError> {
    if let Some(unknown) = overrides.keys().find(|id| model.factor(id).is_none()) {
        return Err(CascadeError::UnknownFactor(unknown.clone()));
    }
    let mut out = model.clone();
    for f in &mut out.factors {
        if let Some(v) = overrides.get(&f.id) {
            f.probability = *v;
            f.source = FactorSource::manual_with("override");
        }
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn reference_2043_joint() {
        let r = evaluate_cascade(&tagi_2043()).unwrap();
        assert!((r.joint_odds.value() - 0.003996179712).abs() < 1e-15);
        assert_eq!(crate::display::percent(r.joint_odds.value()), "0.4%");
    }

    #[test]
    fn reference_2100_joint_treats_na_as_one() {
        let r = evaluate_cascade(&tagi_2100()).unwrap();
        assert!((r.joint_odds.value() - 0.406_926_711_056_25).abs() < 1e-12);
        assert_eq!(r.per_factor[1].probability, 1.0);
        assert_eq!(r.per_factor[1].cumulative, r.per_factor[0].cumulative);
    }

    #[test]
    fn all_ones_is_one() {
        let m = model_from(&[
            ("a", FactorGroup::Software, p(1.0)),
            ("b", FactorGroup::Hardware, p(1.0)),
        ]);
        assert_eq!(evaluate_cascade(&m).unwrap().joint_odds.value(), 1.0);
    }

    #[test]
    fn last_cumulative_is_joint_and_non_increasing() {
        let r = evaluate_cascade(&tagi_2043()).unwrap();
        assert_eq!(
            r.per_factor.last().unwrap().cumulative,
            r.joint_odds.value()
        );
        for w in r.per_factor.windows(2) {
            assert!(w[1].cumulative <= w[0].cumulative);
        }
    }

    #[test]
    fn validation_reports_duplicates_and_empty() {
        assert!(validate_model(&tagi_2043()).is_empty());

        let mut m = tagi_2043();
        m.factors[9].id = "war".into();
        let v = validate_model(&m);
        assert_eq!(
            v,
            vec![Violation {
                factor_id: Some("war".into()),
                rule: ViolationRule::DuplicateId
            }]
        );
        let err = evaluate_cascade(&m).unwrap_err();
        assert!(err.to_string().contains("'war'"), "{err}");

        let empty = model_from(&[]);
        assert_eq!(
            validate_model(&empty),
            vec![Violation {
                factor_id: None,
                rule: ViolationRule::EmptyCascade
            }]
        );
    }

    #[test]
    fn triplicate_is_one_violation() {
        let m = model_from(&[
            ("x", FactorGroup::Software, p(0.5)),
            ("x", FactorGroup::Software, p(0.5)),
            ("x", FactorGroup::Software, p(0.5)),
        ]);
        assert_eq!(validate_model(&m).len(), 1);
    }

    #[test]
    fn overrides() {
        let base = tagi_2043();
        let mut o = Overrides::new();
        o.insert("robots".into(), p(1.0));
        let m = apply_overrides(&base, &o).unwrap();
        let j = evaluate_cascade(&m).unwrap().joint_odds.value();
        assert!((j - 0.003996179712 / 0.60).abs() < 1e-15);
        assert!((j - 0.006660).abs() < 5e-7);
        assert_eq!(m.factor("robots").unwrap().source.kind, SourceKind::Manual);
        // original untouched
        assert_eq!(base.factor("robots").unwrap().probability, p(0.60));

        let same = apply_overrides(&base, &Overrides::new()).unwrap();
        assert_eq!(same, base);

        let mut zero = Overrides::new();
        zero.insert("algorithms".into(), p(0.0));
        let m = apply_overrides(&base, &zero).unwrap();
        assert_eq!(evaluate_cascade(&m).unwrap().joint_odds.value(), 0.0);

        let mut bogus = Overrides::new();
        bogus.insert("bogus".into(), p(0.5));
        assert_eq!(
            apply_overrides(&base, &bogus),
            Err(CascadeError::UnknownFactor("bogus".into()))
        );
    }

    #[test]
    fn factor_value_serde() {
        let v: FactorValue = serde_json::from_str("0.6").unwrap();
        assert_eq!(v, p(0.6));
        let v: FactorValue = serde_json::from_str("1").unwrap();
        assert_eq!(v, p(1.0));
        let v: FactorValue = serde_json::from_str("\"N/A\"").unwrap();
        assert_eq!(v, FactorValue::NotApplicable);
        assert!(serde_json::from_str::<FactorValue>("1.3").is_err());
        assert!(serde_json::from_str::<FactorValue>("\"maybe\"").is_err());
        assert_eq!(
            serde_json::to_string(&FactorValue::NotApplicable).unwrap(),
            "\"N/A\""
        );
    }

    #[test]
    fn factor_value_from_str() {
        assert_eq!("0.25".parse::<FactorValue>().unwrap(), p(0.25));
        assert_eq!(
            "N/A".parse::<FactorValue>().unwrap(),
            FactorValue::NotApplicable
        );
        assert!("1.5".parse::<FactorValue>().is_err());
        assert!("abc".parse::<FactorValue>().is_err());
    }
}

//! What-if transformations over cascades: removing factors, scaling groups
//! of factors with a cap at certainty, one-at-a-time tornado sweeps, and
//! inverse solves for a target joint probability.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::{
    joint_odds, joint_of_values, validate_model, CascadeError, CascadeModel, FactorGroup,
    FactorSource, FactorValue,
};
use crate::exact;
use crate::numeric::is_positive;
use crate::probability::Probability;
use crate::solve::{bisect_increasing, BisectError};

/// Absolute tolerance on joint odds for every solver here.
pub const SOLVER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error("multiplier must be positive, got {0}")]
    Multiplier(f64),
    #[error("factor '{factor_id}': low bound {low} exceeds high bound {high}")]
    InvertedBounds {
        factor_id: String,
        low: f64,
        high: f64,
    },
    #[error("target {target} is below the current joint odds {current}")]
    TargetBelowCurrent { target: f64, current: f64 },
    #[error("target {target} is infeasible; the most this subset can reach is {} ({max_achievable}){}", crate::display::percent(*.max_achievable), zero_note(.zero_factors))]
    Infeasible {
        target: f64,
        max_achievable: f64,
        /// Selected factors stuck at zero, which no multiplier can lift.
        zero_factors: Vec<String>,
    },
    #[error("factor '{factor_id}' would need probability {required} to reach the target; even at 1 the joint odds are {} ({max_achievable})", crate::display::percent(*.max_achievable))]
    RequiredExceedsOne {
        factor_id: String,
        required: f64,
        max_achievable: f64,
    },
    #[error("multiplier search failed: {0}")]
    Search(#[from] BisectError),
}

fn zero_note(zeros: &[String]) -> String {
    if zeros.is_empty() {
        String::new()
    } else {
        format!(" (factors at zero: {})", zeros.join(", "))
    }
}

impl SensitivityError {
    /// The ceiling reported by infeasibility errors.
    pub fn max_achievable(&self) -> Option<f64> {
        match self {
            SensitivityError::Infeasible { max_achievable, .. }
            | SensitivityError::RequiredExceedsOne { max_achievable, .. } => Some(*max_achievable),
            _ => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        self.max_achievable().is_some()
    }
}

/// Which factors an operation touches.
///
/// Serialized as `"all"`, `{"group": "hardware"}` or `{"ids": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorSubset {
    All,
    Group(FactorGroup),
    Ids(Vec<String>),
}

impl FactorSubset {
    /// Indices of the selected factors, in model order.
    pub fn select(&self, model: &CascadeModel) -> Result<Vec<usize>, CascadeError> {
        match self {
            FactorSubset::All => Ok((0..model.factors.len()).collect()),
            FactorSubset::Group(g) => Ok(model
                .factors
                .iter()
                .enumerate()
                .filter(|(_, f)| f.group == *g)
                .map(|(i, _)| i)
                .collect()),
            FactorSubset::Ids(ids) => {
                let mut out = Vec::with_capacity(ids.len());
                for id in ids {
                    let i = model
                        .position(id)
                        .ok_or_else(|| CascadeError::UnknownFactor(id.clone()))?;
                    if !out.contains(&i) {
                        out.push(i);
                    }
                }
                out.sort_unstable();
                Ok(out)
            }
        }
    }
}

impl fmt::Display for FactorSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorSubset::All => f.write_str("all"),
            FactorSubset::Group(g) => write!(f, "{g}"),
            FactorSubset::Ids(ids) => write!(f, "ids:{}", ids.join(",")),
        }
    }
}

impl FromStr for FactorSubset {
    type Err = String;

    /// `all`, a group name, or `ids:a,b,c`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "all" {
            return Ok(FactorSubset::All);
        }
        if let Some(list) = s.strip_prefix("ids:") {
            let ids: Vec<String> = list
                .split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(String::from)
                .collect();
            if ids.is_empty() {
                return Err("empty id list".into());
            }
            return Ok(FactorSubset::Ids(ids));
        }
        s.parse::<FactorGroup>()
            .map(FactorSubset::Group)
            .map_err(|_| format!("'{s}' is not 'all', a factor group, or 'ids:<id>,...'"))
    }
}

fn checked(model: &CascadeModel) -> Result<(), CascadeError> {
    let v = validate_model(model);
    if v.is_empty() {
        Ok(())
    } else {
        Err(CascadeError::Invalid(v))
    }
}

/// Takes a factor out of consideration by setting it to certainty.
pub fn remove_factor(model: &CascadeModel, id: &str) -> Result<CascadeModel, SensitivityError> {
    let i = model
        .position(id)
        .ok_or_else(|| CascadeError::UnknownFactor(id.to_string()))?;
    Ok(model.with_value_at(
        i,
        FactorValue::Known(Probability::ONE),
        FactorSource::manual_with("removed"),
    ))
}

/// Multiplies the selected factors by `multiplier`, capping at 1.
/// Not-applicable factors are left alone.
pub fn scale_factors(
    model: &CascadeModel,
    multiplier: f64,
    subset: &FactorSubset,
) -> Result<CascadeModel, SensitivityError> {
    if !is_positive(multiplier) {
        return Err(SensitivityError::Multiplier(multiplier));
    }
    let selected = subset.select(model)?;
    let mut out = model.clone();
    for i in selected {
        let f = &mut out.factors[i];
        if let FactorValue::Known(p) = f.probability {
            let scaled = scale_one(p.value(), multiplier);
            if scaled != p.value() {
                f.probability = FactorValue::Known(Probability::saturating(scaled));
                f.source = FactorSource::manual_with(format!("scaled x{multiplier}"));
            }
        }
    }
    Ok(out)
}

fn scale_one(p: f64, multiplier: f64) -> f64 {
    (p * multiplier).min(1.0)
}

/// Low/high inputs for one factor in a tornado sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub factor_id: String,
    pub low: Probability,
    pub high: Probability,
}

/// Each applicable factor swept from its current value up to certainty.
pub fn certainty_sweeps(model: &CascadeModel) -> Vec<Sweep> {
    model
        .factors
        .iter()
        .filter_map(|f| match f.probability {
            FactorValue::Known(p) => Some(Sweep {
                factor_id: f.id.clone(),
                low: p,
                high: Probability::ONE,
            }),
            FactorValue::NotApplicable => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TornadoEntry {
    pub factor_id: String,
    pub low_input: Probability,
    pub high_input: Probability,
    pub joint_low: Probability,
    pub joint_high: Probability,
}

impl TornadoEntry {
    pub fn width(&self) -> f64 {
        self.joint_high.value() - self.joint_low.value()
    }
}

/// One-at-a-time sweeps, widest output range first (ties keep input order).
pub fn tornado(
    model: &CascadeModel,
    sweeps: &[Sweep],
) -> Result<Vec<TornadoEntry>, SensitivityError> {
    checked(model)?;
    let base: Vec<f64> = model
        .factors
        .iter()
        .map(|f| f.probability.effective())
        .collect();
    let mut entries = Vec::with_capacity(sweeps.len());
    for s in sweeps {
        let i = model
            .position(&s.factor_id)
            .ok_or_else(|| CascadeError::UnknownFactor(s.factor_id.clone()))?;
        if s.low > s.high {
            return Err(SensitivityError::InvertedBounds {
                factor_id: s.factor_id.clone(),
                low: s.low.value(),
                high: s.high.value(),
            });
        }
        let joint_with = |x: f64| {
            joint_of_values(
                base.iter()
                    .enumerate()
                    .map(|(j, &v)| if j == i { x } else { v }),
            )
        };
        entries.push(TornadoEntry {
            factor_id: s.factor_id.clone(),
            low_input: s.low,
            high_input: s.high,
            joint_low: joint_with(s.low.value()),
            joint_high: joint_with(s.high.value()),
        });
    }
    entries.sort_by(|a, b| b.width().total_cmp(&a.width()));
    Ok(entries)
}

/// `factor,low,high,joint_low,joint_high` rows.
pub fn tornado_csv(entries: &[TornadoEntry]) -> String {
    let mut out = String::from("factor,low,high,joint_low,joint_high\n");
    for e in entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.factor_id, e.low_input, e.high_input, e.joint_low, e.joint_high
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierSolution {
    pub multiplier: f64,
    pub model: CascadeModel,
    pub achieved: Probability,
}

/// Smallest uniform multiplier on the selected factors that lifts the joint
/// odds to `target`.
pub fn solve_uniform_multiplier(
    model: &CascadeModel,
    target: Probability,
    subset: &FactorSubset,
) -> Result<MultiplierSolution, SensitivityError> {
    let current = joint_odds(model)?;
    let selected = subset.select(model)?;
    let t = target.value();

    if (t - current.value()).abs() <= SOLVER_TOLERANCE {
        return Ok(MultiplierSolution {
            multiplier: 1.0,
            model: model.clone(),
            achieved: current,
        });
    }
    if t < current.value() {
        return Err(SensitivityError::TargetBelowCurrent {
            target: t,
            current: current.value(),
        });
    }

    let values: Vec<f64> = model
        .factors
        .iter()
        .map(|f| f.probability.effective())
        .collect();
    let scalable: Vec<usize> = selected
        .iter()
        .copied()
        .filter(|&i| model.factors[i].probability.is_applicable())
        .collect();
    let zero_factors: Vec<String> = scalable
        .iter()
        .filter(|&&i| values[i] == 0.0)
        .map(|&i| model.factors[i].id.clone())
        .collect();

    let objective = |m: f64| {
        exact::product(values.iter().enumerate().map(|(i, &v)| {
            if scalable.contains(&i) {
                scale_one(v, m)
            } else {
                v
            }
        }))
    };

    let min_nonzero = scalable
        .iter()
        .map(|&i| values[i])
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let upper = if min_nonzero.is_finite() {
        (1.0 / min_nonzero).max(1.0)
    } else {
        1.0
    };
    let max_achievable = objective(upper);
    if t > max_achievable + SOLVER_TOLERANCE {
        return Err(SensitivityError::Infeasible {
            target: t,
            max_achievable,
            zero_factors,
        });
    }

    let root = bisect_increasing(objective, 1.0, upper, t, SOLVER_TOLERANCE)?;
    let scaled = scale_factors(
        model,
        root.x,
        &FactorSubset::Ids(
            scalable
                .iter()
                .map(|&i| model.factors[i].id.clone())
                .collect(),
        ),
    )?;
    let achieved = joint_odds(&scaled)?;
    Ok(MultiplierSolution {
        multiplier: root.x,
        model: scaled,
        achieved,
    })
}

/// The value factor `factor_id` would need, all else fixed, for the joint
/// odds to equal `target`.
pub fn required_value(
    model: &CascadeModel,
    factor_id: &str,
    target: Probability,
) -> Result<Probability, SensitivityError> {
    let current = joint_odds(model)?;
    let i = model
        .position(factor_id)
        .ok_or_else(|| CascadeError::UnknownFactor(factor_id.to_string()))?;
    let own = model.factors[i].probability.effective();
    if target == current {
        return Ok(Probability::saturating(own));
    }
    let others = exact::product(
        model
            .factors
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, f)| f.probability.effective()),
    );
    let required = if others == 0.0 {
        f64::INFINITY
    } else {
        target.value() / others
    };
    if required > 1.0 {
        return Err(SensitivityError::RequiredExceedsOne {
            factor_id: factor_id.to_string(),
            required,
            max_achievable: others,
        });
    }
    Ok(Probability::saturating(required))
}

//! Order-of-magnitude bucket distributions and joint qualification grids.
//!
//! A [`LogBucketDistribution`] puts weight on a handful of decades of some
//! positive quantity. Two of them (compute needed and compute per dollar)
//! combine into a [`JointGrid`] whose cells carry an hourly cost and a
//! probability mass; the mass of the cells that come in under a cost
//! threshold is the grid's qualifying mass.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::display;
use crate::numeric::{decimal_sum, fsum, is_positive};
use crate::probability::Probability;

pub const UNIT_FLOPS: &str = "FLOPS";
pub const UNIT_FLOPS_PER_DOLLAR_HOUR: &str = "FLOPS per dollar-hour";

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("distribution needs at least one bucket")]
    Empty,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("weight {weight} at index {index} is outside [0, 1]")]
    WeightOutOfRange { index: usize, weight: f64 },
    #[error("weights sum to {sum}, not 1")]
    WeightSum { sum: f64 },
    #[error("bucket '{label}': {reason}")]
    InvalidBucket { label: String, reason: String },
    #[error("bucket '{label}' is not above the bucket before it")]
    NotAscending { label: String },
    #[error("bucket '{label}' overlaps the bucket before it")]
    Overlap { label: String },
    #[error("bucket '{label}' is in {got}, expected {expected}")]
    UnitMismatch {
        label: String,
        expected: String,
        got: String,
    },
    #[error("bucket index {index} out of range for {len} buckets")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("threshold must be a finite non-negative number, got {0}")]
    InvalidThreshold(f64),
}

/// One decade (or open tail) of a positive quantity.
///
/// The bucket covers `(lower, upper]`. A low-open tail stands for everything
/// at or below `upper`; a high-open tail for everything at or above `lower`.
/// Tails may be degenerate (`lower == upper`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnitudeBucket {
    pub label: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub open_low: bool,
    #[serde(default)]
    pub open_high: bool,
    pub unit: String,
}

impl MagnitudeBucket {
    pub fn closed(label: impl Into<String>, lower: f64, upper: f64, unit: &str) -> Self {
        MagnitudeBucket {
            label: label.into(),
            lower,
            upper,
            open_low: false,
            open_high: false,
            unit: unit.to_string(),
        }
    }

    /// `<= bound`
    pub fn low_tail(label: impl Into<String>, bound: f64, unit: &str) -> Self {
        MagnitudeBucket {
            open_low: true,
            ..Self::closed(label, bound, bound, unit)
        }
    }

    /// `>= bound`
    pub fn high_tail(label: impl Into<String>, bound: f64, unit: &str) -> Self {
        MagnitudeBucket {
            open_high: true,
            ..Self::closed(label, bound, bound, unit)
        }
    }

    /// Upper bound, except for a high-open tail where it is the lower bound.
    pub fn representative(&self) -> f64 {
        if self.open_high {
            self.lower
        } else {
            self.upper
        }
    }

    fn check(&self) -> Result<(), GridError> {
        let bad = |reason: &str| GridError::InvalidBucket {
            label: self.label.clone(),
            reason: reason.to_string(),
        };
        if !is_positive(self.lower) || !is_positive(self.upper) {
            return Err(bad("bounds must be positive"));
        }
        if self.open_low && self.open_high {
            return Err(bad("a bucket cannot be open at both ends"));
        }
        let degenerate_tail = (self.open_low || self.open_high) && self.lower == self.upper;
        if !(self.lower < self.upper || degenerate_tail) {
            return Err(bad("lower bound must be below upper bound"));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    buckets: Vec<MagnitudeBucket>,
    weights: Vec<f64>,
}

/// Weights over ordered magnitude buckets, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct LogBucketDistribution {
    buckets: Vec<MagnitudeBucket>,
    weights: Vec<f64>,
}

impl TryFrom<RawDistribution> for LogBucketDistribution {
    type Error = GridError;

    fn try_from(raw: RawDistribution) -> Result<Self, Self::Error> {
        LogBucketDistribution::new(raw.buckets, raw.weights)
    }
}

impl LogBucketDistribution {
    pub fn new(buckets: Vec<MagnitudeBucket>, weights: Vec<f64>) -> Result<Self, GridError> {
        check_buckets(&buckets)?;
        if weights.len() != buckets.len() {
            return Err(GridError::LengthMismatch {
                expected: buckets.len(),
                got: weights.len(),
            });
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !(weight.is_finite() && (0.0..=1.0).contains(&weight)) {
                return Err(GridError::WeightOutOfRange { index, weight });
            }
        }
        let sum = decimal_sum(weights.iter().copied());
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(GridError::WeightSum { sum });
        }
        Ok(LogBucketDistribution { buckets, weights })
    }

    pub fn buckets(&self) -> &[MagnitudeBucket] {
        &self.buckets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn unit(&self) -> &str {
        &self.buckets[0].unit
    }

    /// Index of the first bucket with this label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.buckets.iter().position(|b| b.label == label)
    }
}

fn check_buckets(buckets: &[MagnitudeBucket]) -> Result<(), GridError> {
    let first = buckets.first().ok_or(GridError::Empty)?;
    let last_index = buckets.len() - 1;
    for (i, b) in buckets.iter().enumerate() {
        b.check()?;
        if b.unit != first.unit {
            return Err(GridError::UnitMismatch {
                label: b.label.clone(),
                expected: first.unit.clone(),
                got: b.unit.clone(),
            });
        }
        if b.open_low && i != 0 {
            return Err(GridError::InvalidBucket {
                label: b.label.clone(),
                reason: "only the first bucket may be open below".into(),
            });
        }
        if b.open_high && i != last_index {
            return Err(GridError::InvalidBucket {
                label: b.label.clone(),
                reason: "only the last bucket may be open above".into(),
            });
        }
    }
    for pair in buckets.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        if next.representative() <= prev.representative() {
            return Err(GridError::NotAscending {
                label: next.label.clone(),
            });
        }
        if next.lower < prev.upper {
            return Err(GridError::Overlap {
                label: next.label.clone(),
            });
        }
    }
    Ok(())
}

/// Equal weight on every bucket.
pub fn uniform_distribution(
    buckets: Vec<MagnitudeBucket>,
) -> Result<LogBucketDistribution, GridError> {
    if buckets.is_empty() {
        return Err(GridError::Empty);
    }
    let n = buckets.len();
    LogBucketDistribution::new(buckets, vec![1.0 / n as f64; n])
}

/// Mass at `bucket_index` and above.
pub fn at_least_mass(
    dist: &LogBucketDistribution,
    bucket_index: usize,
) -> Result<Probability, GridError> {
    if bucket_index >= dist.len() {
        return Err(GridError::IndexOutOfRange {
            index: bucket_index,
            len: dist.len(),
        });
    }
    Ok(Probability::saturating(decimal_sum(
        dist.weights[bucket_index..].iter().copied(),
    )))
}

/// Hourly cost ceiling a cell must come in under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualifierRule {
    /// Dollars per hour.
    pub threshold: f64,
    /// Require cost strictly below the threshold (otherwise at or below).
    #[serde(default = "default_strict")]
    pub strict: bool,
}

fn default_strict() -> bool {
    true
}

impl QualifierRule {
    pub fn new(threshold: f64, strict: bool) -> Result<Self, GridError> {
        let rule = QualifierRule { threshold, strict };
        rule.check()?;
        Ok(rule)
    }

    pub fn strict(threshold: f64) -> Result<Self, GridError> {
        Self::new(threshold, true)
    }

    fn check(&self) -> Result<(), GridError> {
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(GridError::InvalidThreshold(self.threshold));
        }
        Ok(())
    }

    pub fn qualifies(&self, cost: f64) -> bool {
        if self.strict {
            cost < self.threshold
        } else {
            cost <= self.threshold
        }
    }
}

/// Compute-needed rows crossed with compute-efficiency columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointGrid {
    pub rows: LogBucketDistribution,
    pub cols: LogBucketDistribution,
    pub rule: QualifierRule,
    /// Dollars per hour, `[row][col]`.
    pub cell_cost: Vec<Vec<f64>>,
    pub cell_mass: Vec<Vec<f64>>,
    pub cell_qualifies: Vec<Vec<bool>>,
    pub qualifying_mass: Probability,
}

pub fn build_joint_grid(
    rows: &LogBucketDistribution,
    cols: &LogBucketDistribution,
    rule: QualifierRule,
) -> Result<JointGrid, GridError> {
    rule.check()?;
    expect_unit(rows, UNIT_FLOPS)?;
    expect_unit(cols, UNIT_FLOPS_PER_DOLLAR_HOUR)?;

    let mut cell_cost = Vec::with_capacity(rows.len());
    let mut cell_mass = Vec::with_capacity(rows.len());
    let mut cell_qualifies = Vec::with_capacity(rows.len());
    for (rb, &rw) in rows.buckets.iter().zip(&rows.weights) {
        let costs: Vec<f64> = cols
            .buckets
            .iter()
            .map(|cb| rb.representative() / cb.representative())
            .collect();
        cell_qualifies.push(costs.iter().map(|&c| rule.qualifies(c)).collect());
        cell_mass.push(cols.weights.iter().map(|&cw| rw * cw).collect());
        cell_cost.push(costs);
    }
    let qualifying = fsum(
        cell_mass
            .iter()
            .flatten()
            .zip(cell_qualifies.iter().flatten())
            .filter(|(_, &q)| q)
            .map(|(&m, _)| m),
    );
    Ok(JointGrid {
        rows: rows.clone(),
        cols: cols.clone(),
        rule,
        cell_cost,
        cell_mass,
        cell_qualifies,
        qualifying_mass: Probability::saturating(qualifying),
    })
}

fn expect_unit(dist: &LogBucketDistribution, unit: &str) -> Result<(), GridError> {
    match dist.buckets.iter().find(|b| b.unit != unit) {
        Some(b) => Err(GridError::UnitMismatch {
            label: b.label.clone(),
            expected: unit.to_string(),
            got: b.unit.clone(),
        }),
        None => Ok(()),
    }
}

impl JointGrid {
    pub fn total_mass(&self) -> f64 {
        fsum(self.cell_mass.iter().flatten().copied())
    }

    /// Comma-separated cost table: one row per compute-need bucket, a cost and
    /// a qualification flag per efficiency column. Costs at full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,row_weight");
        for cb in &self.cols.buckets {
            let _ = write!(
                out,
                ",{} cost,{} qualifies",
                csv_field(&cb.label),
                csv_field(&cb.label)
            );
        }
        out.push('\n');
        out.push_str("column_weight,");
        for w in &self.cols.weights {
            let _ = write!(out, ",{w},");
        }
        out.push('\n');
        for (i, rb) in self.rows.buckets.iter().enumerate() {
            let _ = write!(out, "{},{}", csv_field(&rb.label), self.rows.weights[i]);
            for j in 0..self.cols.len() {
                let _ = write!(
                    out,
                    ",{},{}",
                    self.cell_cost[i][j], self.cell_qualifies[i][j]
                );
            }
            out.push('\n');
        }
        let _ = writeln!(out, "qualifying_mass,{}", self.qualifying_mass);
        out
    }

    /// Aligned text table with costs at one significant figure; qualifying
    /// cells are marked with `*`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<14}{:>8}", "", "weight");
        for cb in &self.cols.buckets {
            let _ = write!(out, "{:>14}", cb.label);
        }
        out.push('\n');
        let _ = write!(out, "{:<14}{:>8}", "", "");
        for w in &self.cols.weights {
            let _ = write!(out, "{:>14}", display::percent(*w));
        }
        out.push('\n');
        for (i, rb) in self.rows.buckets.iter().enumerate() {
            let _ = write!(
                out,
                "{:<14}{:>8}",
                rb.label,
                display::percent(self.rows.weights[i])
            );
            for j in 0..self.cols.len() {
                let mark = if self.cell_qualifies[i][j] { "*" } else { " " };
                let _ = write!(out, "{:>13}{}", display::sig1(self.cell_cost[i][j]), mark);
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "qualifying mass ({} ${}/hr): {}",
            if self.rule.strict { "<" } else { "<=" },
            self.rule.threshold,
            display::percent(self.qualifying_mass.value())
        );
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn check_achievement(
    needs: &LogBucketDistribution,
    achievement: &[Probability],
) -> Result<(), GridError> {
    if achievement.len() != needs.len() {
        return Err(GridError::LengthMismatch {
            expected: needs.len(),
            got: achievement.len(),
        });
    }
    Ok(())
}

/// Expected chance of meeting whatever turns out to be needed:
/// Σ weight_i × achievement_i.
pub fn scenario_expectation(
    needs: &LogBucketDistribution,
    achievement: &[Probability],
) -> Result<Probability, GridError> {
    check_achievement(needs, achievement)?;
    Ok(Probability::saturating(fsum(
        needs
            .weights
            .iter()
            .zip(achievement)
            .map(|(w, a)| w * a.value()),
    )))
}

/// Like [`scenario_expectation`] for two requirements driven by the same
/// need: row i of `a` and row i of `b` happen together.
pub fn linked_joint_expectation(
    needs: &LogBucketDistribution,
    achievement_a: &[Probability],
    achievement_b: &[Probability],
) -> Result<Probability, GridError> {
    check_achievement(needs, achievement_a)?;
    check_achievement(needs, achievement_b)?;
    Ok(Probability::saturating(fsum(
        needs
            .weights
            .iter()
            .zip(achievement_a.iter().zip(achievement_b))
            .map(|(w, (a, b))| w * a.value() * b.value()),
    )))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn uniform_weights() {
        let d = uniform_distribution(flops_buckets()).unwrap();
        assert!(d.weights().iter().all(|&w| w == 0.1));

        let one = uniform_distribution(vec![MagnitudeBucket::closed("x", 1.0, 10.0, "u")]).unwrap();
        assert_eq!(one.weights(), &[1.0]);

        let seven = uniform_distribution(seven_buckets("wafers")).unwrap();
        assert!(seven.weights().iter().all(|&w| (w - 0.142857).abs() < 1e-6));

        assert_eq!(uniform_distribution(vec![]), Err(GridError::Empty));
    }

    #[test]
    fn at_least() {
        let d = hardware_distribution();
        assert_eq!(at_least_mass(&d, 1).unwrap().value(), 0.98);
        assert_eq!(at_least_mass(&d, 2).unwrap().value(), 0.48);
        assert_eq!(at_least_mass(&d, 0).unwrap().value(), 1.0);
        assert_eq!(
            at_least_mass(&d, 5),
            Err(GridError::IndexOutOfRange { index: 5, len: 5 })
        );
    }

    #[test]
    fn reference_grid_strict_and_inclusive() {
        let rows = uniform_distribution(flops_buckets()).unwrap();
        let cols = hardware_distribution();
        let strict = build_joint_grid(&rows, &cols, QualifierRule::strict(25.0).unwrap()).unwrap();
        assert!((strict.qualifying_mass.value() - 0.156).abs() < 1e-9);
        assert!((strict.total_mass() - 1.0).abs() < 1e-9);

        let inclusive =
            build_joint_grid(&rows, &cols, QualifierRule::new(25.0, false).unwrap()).unwrap();
        assert!((inclusive.qualifying_mass.value() - 0.256).abs() < 1e-9);

        // (1e16 FLOPS, 4e15 FLOPS per dollar-hour)
        assert_eq!(strict.cell_cost[0][1], 2.5);
        assert_eq!(display::sig1(strict.cell_cost[0][1]), "3E+00");
        // the paper's top-left "?" is computed like any other cell
        assert_eq!(strict.cell_cost[0][0], 25.0);

        let none = build_joint_grid(&rows, &cols, QualifierRule::strict(0.0).unwrap()).unwrap();
        assert_eq!(none.qualifying_mass.value(), 0.0);
    }

    #[test]
    fn unit_mismatch_rejected() {
        let rows = uniform_distribution(flops_buckets()).unwrap();
        let err = build_joint_grid(&rows, &rows, QualifierRule::strict(25.0).unwrap()).unwrap_err();
        assert!(matches!(err, GridError::UnitMismatch { .. }));
    }

    #[test]
    fn threshold_validation() {
        assert!(QualifierRule::strict(-1.0).is_err());
        assert!(QualifierRule::strict(f64::NAN).is_err());
        assert!(QualifierRule::strict(0.0).is_ok());
    }

    #[test]
    fn distribution_validation() {
        let b = flops_buckets();
        assert!(matches!(
            LogBucketDistribution::new(b.clone(), vec![0.1; 9]),
            Err(GridError::LengthMismatch { .. })
        ));
        assert!(matches!(
            LogBucketDistribution::new(b.clone(), vec![0.2; 10]),
            Err(GridError::WeightSum { .. })
        ));
        let mut w = vec![0.1; 10];
        w[0] = -0.1;
        w[1] = 0.3;
        assert!(matches!(
            LogBucketDistribution::new(b.clone(), w),
            Err(GridError::WeightOutOfRange { index: 0, .. })
        ));
        let mut reversed = b.clone();
        reversed.swap(3, 4);
        assert!(matches!(
            LogBucketDistribution::new(reversed, vec![0.1; 10]),
            Err(GridError::NotAscending { .. })
        ));
        let mut overlapping = b.clone();
        overlapping[4].lower = 1e17;
        assert!(matches!(
            LogBucketDistribution::new(overlapping, vec![0.1; 10]),
            Err(GridError::Overlap { .. })
        ));
        let mut inverted = b;
        inverted[3].lower = inverted[3].upper * 2.0;
        assert!(matches!(
            LogBucketDistribution::new(inverted, vec![0.1; 10]),
            Err(GridError::InvalidBucket { .. })
        ));
    }

    #[test]
    fn representative_values() {
        let b = flops_buckets();
        assert_eq!(b[0].representative(), 1e16);
        assert_eq!(b[1].representative(), 1e17);
        assert_eq!(b[9].representative(), 1e25);
        let open = MagnitudeBucket {
            upper: 1e26,
            ..b[9].clone()
        };
        assert_eq!(open.representative(), 1e25);
    }

    #[test]
    fn element_five_expectations() {
        let wafers = uniform_distribution(seven_buckets("wafers")).unwrap();
        let power = uniform_distribution(seven_buckets("GW-plants")).unwrap();
        let wafer_odds = probs(&[0.99, 0.99, 0.90, 0.50, 0.10, 0.05, 0.02]);
        let power_odds = probs(&[0.99, 0.99, 0.95, 0.67, 0.33, 0.05, 0.005]);
        let w = scenario_expectation(&wafers, &wafer_odds).unwrap().value();
        let p = scenario_expectation(&power, &power_odds).unwrap().value();
        assert!((w - 3.55 / 7.0).abs() < 1e-12);
        assert!((p - 3.985 / 7.0).abs() < 1e-12);
        let linked = linked_joint_expectation(&wafers, &wafer_odds, &power_odds)
            .unwrap()
            .value();
        let rows: f64 = wafer_odds
            .iter()
            .zip(&power_odds)
            .map(|(a, b)| a.value() * b.value())
            .sum();
        assert!((linked - rows / 7.0).abs() < 1e-12);
        assert_eq!(display::percent_with(w, 0), "51%");
        assert_eq!(display::percent_with(p, 0), "57%");
        assert_eq!(display::percent_with(linked, 0), "46%");

        let ones = probs(&[1.0; 7]);
        let reduced = linked_joint_expectation(&wafers, &wafer_odds, &ones).unwrap();
        assert_eq!(reduced, scenario_expectation(&wafers, &wafer_odds).unwrap());
        assert_eq!(
            linked_joint_expectation(&wafers, &ones, &ones)
                .unwrap()
                .value(),
            1.0
        );
        assert_eq!(scenario_expectation(&wafers, &ones).unwrap().value(), 1.0);
        assert!(matches!(
            scenario_expectation(&wafers, &ones[..6]),
            Err(GridError::LengthMismatch {
                expected: 7,
                got: 6
            })
        ));
        assert!(linked_joint_expectation(&wafers, &ones, &ones[..3]).is_err());
    }

    #[test]
    fn csv_and_text_exports() {
        let rows = uniform_distribution(flops_buckets()).unwrap();
        let grid = build_joint_grid(
            &rows,
            &hardware_distribution(),
            QualifierRule::strict(25.0).unwrap(),
        )
        .unwrap();
        let csv = grid.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2 + 10 + 1);
        assert!(lines[0].starts_with("row,row_weight,<=4E+14 cost,<=4E+14 qualifies"));
        assert!(lines[2].starts_with("<=1E+16,0.1,25,false,2.5,true"));
        assert!(lines[12].starts_with("qualifying_mass,0.156"));
        let text = grid.to_text();
        assert!(text.contains("3E+00*"));
        assert!(text.contains("15.6%"));
        assert!(!text.contains('?'));
    }

    #[test]
    fn serde_validates() {
        let d = hardware_distribution();
        let json = serde_json::to_string(&d).unwrap();
        let back: LogBucketDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        let broken = json.replace("0.5", "0.9");
        assert!(serde_json::from_str::<LogBucketDistribution>(&broken).is_err());
    }
}

//! Summary tables in the layout of a forecast cascade: one row per event with
//! its probability and the running product, then the joint odds.

use std::fmt::Write as _;

use cascade_core::cascade::{evaluate_cascade, CascadeError, CascadeModel, FactorValue};
use cascade_core::display;
use cascade_core::Probability;
use serde::Serialize;

pub const JOINT_LABEL: &str = "Joint odds";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub factor_id: String,
    pub label: String,
    pub probability: FactorValue,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub title: String,
    pub horizon_year: i32,
    pub rows: Vec<ReportRow>,
    pub joint_odds: Probability,
    /// Published figure for the joint odds, shown next to the computed one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub published: Option<String>,
}

pub fn export_report(
    model: &CascadeModel,
    published: Option<&str>,
) -> Result<Report, CascadeError> {
    let eval = evaluate_cascade(model)?;
    let rows = model
        .factors
        .iter()
        .zip(&eval.per_factor)
        .map(|(f, step)| ReportRow {
            factor_id: f.id.clone(),
            label: f.label.clone(),
            probability: f.probability,
            cumulative: step.cumulative,
        })
        .collect();
    Ok(Report {
        title: model.name.clone(),
        horizon_year: model.horizon_year,
        rows,
        joint_odds: eval.joint_odds,
        published: published.map(str::to_string),
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report {
    fn pct(p: f64, precise: bool) -> String {
        if precise {
            display::percent_precise(p)
        } else {
            display::percent(p)
        }
    }

    fn value(v: FactorValue, precise: bool) -> String {
        match v {
            FactorValue::Known(p) => Self::pct(p.value(), precise),
            FactorValue::NotApplicable => FactorValue::NA_TOKEN.to_string(),
        }
    }

    /// `event,probability,running_product,published`. With `precise` the
    /// numeric columns are raw fractions instead of percentages.
    pub fn to_csv(&self, precise: bool) -> String {
        let num = |p: f64| {
            if precise {
                p.to_string()
            } else {
                display::percent(p)
            }
        };
        let mut out = String::from("event,probability,running_product,published\n");
        for r in &self.rows {
            let prob = match r.probability {
                FactorValue::Known(p) => num(p.value()),
                FactorValue::NotApplicable => FactorValue::NA_TOKEN.to_string(),
            };
            let _ = writeln!(
                out,
                "{},{},{},",
                csv_field(&r.label),
                prob,
                num(r.cumulative)
            );
        }
        let _ = writeln!(
            out,
            "{JOINT_LABEL},{},,{}",
            num(self.joint_odds.value()),
            self.published.as_deref().map(csv_field).unwrap_or_default()
        );
        out
    }

    pub fn to_text(&self, precise: bool) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.chars().count())
            .chain([JOINT_LABEL.len(), "Event".len()])
            .max()
            .unwrap_or(0);
        let year = self.horizon_year.to_string();
        let mut out = if self.title.contains(&year) {
            format!("{}\n", self.title)
        } else {
            format!("{} (by {year})\n", self.title)
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  {:>15}",
            "Event", "Probability", "Running product"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>12}  {:>15}",
                r.label,
                Self::value(r.probability, precise),
                Self::pct(r.cumulative, precise)
            );
        }
        let _ = write!(
            out,
            "{:<width$}  {:>12}",
            JOINT_LABEL,
            Self::pct(self.joint_odds.value(), precise)
        );
        if let Some(p) = &self.published {
            let _ = write!(out, "  (published {p})");
        }
        out.push('\n');
        out
    }
}

//! Constant-hazard survival arithmetic.
//!
//! Under a constant hazard, surviving T periods has probability
//! `(1 - p)^T` where p is the per-period risk, so every horizon conversion
//! is a power of the survival probability. The powers are taken as
//! `exp(t * ln(1 - p))` via `ln_1p`/`exp_m1` to keep small risks accurate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;
use crate::numeric::is_positive;
use crate::probability::Probability;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HazardError {
    #[error("a certain event (probability 1) has no finite hazard rate")]
    UndefinedHazard,
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Probability of at least one occurrence within `horizon_years`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonRisk {
    pub probability: Probability,
    pub horizon_years: f64,
}

impl HorizonRisk {
    pub fn new(probability: Probability, horizon_years: f64) -> Result<Self, HazardError> {
        positive("horizon_years", horizon_years)?;
        Ok(HorizonRisk {
            probability,
            horizon_years,
        })
    }
}

/// An event that, if it happens and is severe enough, pushes arrival past
/// the deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerailmentEvent {
    pub name: String,
    pub event_risk: HorizonRisk,
    pub delay_given_event: Probability,
}

impl DerailmentEvent {
    pub fn survival(&self) -> Probability {
        derail_probability(self).complement()
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, HazardError> {
    if is_positive(value) {
        Ok(value)
    } else {
        Err(HazardError::NonPositive { name, value })
    }
}

/// `1 - (1 - p)^exponent`
fn scale_risk(p: Probability, exponent: f64) -> Result<Probability, HazardError> {
    if p.value() >= 1.0 {
        return Err(HazardError::UndefinedHazard);
    }
    let log_survival = (-p.value()).ln_1p();
    Ok(Probability::saturating(-(exponent * log_survival).exp_m1()))
}

/// Re-expresses a risk over a different horizon, holding the hazard fixed.
pub fn rescale(risk: HorizonRisk, target_years: f64) -> Result<HorizonRisk, HazardError> {
    let target = positive("target_years", target_years)?;
    let horizon = positive("horizon_years", risk.horizon_years)?;
    Ok(HorizonRisk {
        probability: scale_risk(risk.probability, target / horizon)?,
        horizon_years: target,
    })
}

pub fn cumulative_from_annual(annual: Probability, years: f64) -> Result<Probability, HazardError> {
    scale_risk(annual, positive("years", years)?)
}

pub fn annual_from_cumulative(
    cumulative: Probability,
    years: f64,
) -> Result<Probability, HazardError> {
    scale_risk(cumulative, 1.0 / positive("years", years)?)
}

/// Chance that at least one of several independent events happens.
pub fn any_of(risks: &[Probability]) -> Probability {
    let none = exact::product(risks.iter().map(|p| p.complement().value()));
    Probability::saturating(1.0 - none)
}

pub fn derail_probability(event: &DerailmentEvent) -> Probability {
    Probability::saturating(event.event_risk.probability.value() * event.delay_given_event.value())
}

/// Chance that none of the events derails arrival.
pub fn combined_survival(events: &[DerailmentEvent]) -> Probability {
    Probability::saturating(exact::product(events.iter().map(|e| e.survival().value())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn event(name: &str, risk: f64, delay: f64) -> DerailmentEvent {
        DerailmentEvent {
            name: name.into(),
            event_risk: HorizonRisk::new(p(risk), 20.0).unwrap(),
            delay_given_event: p(delay),
        }
    }

    #[test]
    fn rescaling() {
        let five = HorizonRisk::new(p(0.14), 5.0).unwrap();
        let ten = rescale(five, 10.0).unwrap();
        assert!((ten.probability.value() - 0.2604).abs() < 1e-12);
        assert_eq!(ten.horizon_years, 10.0);
        let fifteen = rescale(five, 15.0).unwrap();
        assert!((fifteen.probability.value() - 0.363_944).abs() < 1e-12);

        let gcr = rescale(HorizonRisk::new(p(0.10), 92.0).unwrap(), 20.0).unwrap();
        assert!((gcr.probability.value() - 0.022_644_144).abs() < 1e-9);

        let same = rescale(five, 5.0).unwrap();
        assert!((same.probability.value() - 0.14).abs() < 1e-15);
    }

    #[test]
    fn certain_event_has_no_hazard() {
        let certain = HorizonRisk::new(Probability::ONE, 5.0).unwrap();
        assert_eq!(rescale(certain, 10.0), Err(HazardError::UndefinedHazard));
        assert_eq!(
            cumulative_from_annual(Probability::ONE, 3.0),
            Err(HazardError::UndefinedHazard)
        );
        assert_eq!(
            annual_from_cumulative(Probability::ONE, 3.0),
            Err(HazardError::UndefinedHazard)
        );
        assert!(HorizonRisk::new(p(0.1), 0.0).is_err());
    }

    #[test]
    fn annual_and_cumulative() {
        let c = cumulative_from_annual(p(0.01), 20.0).unwrap().value();
        assert!((c - 0.182_093_062_4).abs() < 1e-9);
        let ord = rescale(HorizonRisk::new(p(0.03), 100.0).unwrap(), 20.0).unwrap();
        assert!((ord.probability.value() - 0.006_073_324).abs() < 1e-9);
        assert_eq!(
            cumulative_from_annual(Probability::ZERO, 50.0)
                .unwrap()
                .value(),
            0.0
        );

        let a = annual_from_cumulative(p(0.182), 20.0).unwrap().value();
        assert!((a - 0.009_994_368).abs() < 1e-9);
        let a = annual_from_cumulative(p(0.10), 92.0).unwrap().value();
        assert!((a - 0.001_144_567).abs() < 1e-9);
        assert_eq!(
            annual_from_cumulative(Probability::ZERO, 9.0)
                .unwrap()
                .value(),
            0.0
        );
    }

    #[test]
    fn union_of_events() {
        let five = vec![p(0.182); 5];
        assert!((any_of(&five).value() - 0.633_759_373).abs() < 1e-9);
        assert!((any_of(&[p(0.37)]).value() - 0.37).abs() < 1e-15);
        assert_eq!(any_of(&[Probability::ONE, p(0.2)]).value(), 1.0);
        assert_eq!(any_of(&[]).value(), 0.0);
    }

    #[test]
    fn derailments() {
        let war = event("nuclear war", 0.10, 0.70);
        assert!((derail_probability(&war).value() - 0.07).abs() < 1e-15);
        assert!((war.survival().value() - 0.93).abs() < 1e-15);
        let taiwan = event("taiwan", 0.40, 0.75);
        assert!((derail_probability(&taiwan).value() - 0.30).abs() < 1e-15);
        assert!((taiwan.survival().value() - 0.70).abs() < 1e-15);
        let nato = event("nato escalation", 0.02, 0.25);
        assert!((derail_probability(&nato).value() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn survival_composition() {
        let natural = event("natural pandemic", 0.05, 1.0);
        let engineered = event("engineered pandemic", 0.05, 1.0);
        let s = combined_survival(&[natural, engineered]).value();
        assert!((s - 0.9025).abs() < 1e-15);

        let block = [
            event("war", 0.30, 1.0),
            event("pandemics", 0.10, 1.0),
            event("depression", 0.10, 0.50),
        ];
        assert!((combined_survival(&block).value() - 0.5985).abs() < 1e-15);
        assert_eq!(combined_survival(&[]).value(), 1.0);
    }
}

#![allow(dead_code)]

use cascade_core::cascade::{CascadeModel, Factor, FactorGroup, FactorValue};
use cascade_core::Probability;
use proptest::prelude::*;

pub fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

pub fn prob(v: f64) -> Probability {
    Probability::new(v).unwrap()
}

pub fn model(values: &[f64]) -> CascadeModel {
    CascadeModel {
        name: "generated".into(),
        horizon_year: 2043,
        factors: values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let group = FactorGroup::ALL[i % 3];
                Factor::new(
                    format!("f{i}"),
                    format!("factor {i}"),
                    group,
                    FactorValue::Known(prob(v)),
                )
            })
            .collect(),
        notes: String::new(),
    }
}

/// Naive left-to-right product; only used where bit-exactness is not claimed.
pub fn naive(values: &[f64]) -> f64 {
    values.iter().product()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

pub fn probability_vec(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, min..=max)
}

//! Compute-economics arithmetic: hourly costs, training bills, device,
//! wafer and power counts, amortization and growth rates.
//!
//! Every function rejects non-positive inputs with [`EconError::NonPositive`]
//! naming the offending argument. Counts stay fractional; rounding up to
//! whole procurement units happens only in [`BillTable`] export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::display;
use crate::numeric::is_positive;

/// 365.25 × 24.
pub const HOURS_PER_YEAR: f64 = 8766.0;
pub const SECONDS_PER_YEAR: f64 = 3.156e7;
pub const WATTS_PER_GW_PLANT: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("utilization must be in (0, 1], got {0}")]
    Utilization(f64),
    #[error("uptime must be in (0, 1], got {0}")]
    Uptime(f64),
    #[error("growth rate must exceed -1, got {0}")]
    Rate(f64),
    #[error("device spec '{name}': {reason}")]
    Device { name: String, reason: String },
}

fn positive(name: &'static str, value: f64) -> Result<f64, EconError> {
    if is_positive(value) {
        Ok(value)
    } else {
        Err(EconError::NonPositive { name, value })
    }
}

fn unit_fraction(value: f64, err: fn(f64) -> EconError) -> Result<f64, EconError> {
    if value.is_finite() && value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(err(value))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub name: String,
    /// Sustained useful FLOPS.
    pub useful_flops: f64,
    /// Watts at the wall, ancillary and cooling included.
    pub power_draw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_per_hour: Option<f64>,
    pub devices_per_wafer: u32,
}

impl DeviceSpec {
    pub fn new(
        name: impl Into<String>,
        useful_flops: f64,
        power_draw: f64,
        price_per_hour: Option<f64>,
        devices_per_wafer: u32,
    ) -> Result<Self, EconError> {
        let spec = DeviceSpec {
            name: name.into(),
            useful_flops,
            power_draw,
            price_per_hour,
            devices_per_wafer,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EconError> {
        let bad = |reason: String| EconError::Device {
            name: self.name.clone(),
            reason,
        };
        if !is_positive(self.useful_flops) {
            return Err(bad(format!(
                "useful_flops must be positive, got {}",
                self.useful_flops
            )));
        }
        if !is_positive(self.power_draw) {
            return Err(bad(format!(
                "power_draw must be positive, got {}",
                self.power_draw
            )));
        }
        if let Some(p) = self.price_per_hour {
            if !is_positive(p) {
                return Err(bad(format!("price_per_hour must be positive, got {p}")));
            }
        }
        if self.devices_per_wafer == 0 {
            return Err(bad("devices_per_wafer must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    /// Total floating-point operations to train.
    pub training_ops: f64,
    pub inference_flops_per_agi: f64,
    pub labor_hours_per_year: f64,
    pub utilization: f64,
    pub build_years: f64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), EconError> {
        positive("training_ops", self.training_ops)?;
        positive("inference_flops_per_agi", self.inference_flops_per_agi)?;
        positive("labor_hours_per_year", self.labor_hours_per_year)?;
        unit_fraction(self.utilization, EconError::Utilization)?;
        positive("build_years", self.build_years)?;
        Ok(())
    }

    /// Sustained FLOPS needed to finish training within `build_years`.
    pub fn training_flops(&self) -> Result<f64, EconError> {
        Ok(positive("training_ops", self.training_ops)?
            / (SECONDS_PER_YEAR * positive("build_years", self.build_years)?))
    }

    /// Sustained FLOPS needed to run enough AGIs to cover the labor hours.
    pub fn inference_flops(&self) -> Result<f64, EconError> {
        Ok(
            concurrent_devices(self.labor_hours_per_year, self.utilization)?
                * positive("inference_flops_per_agi", self.inference_flops_per_agi)?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareBill {
    pub devices: f64,
    pub wafers: f64,
    pub gw_plants: f64,
}

pub fn flops_per_dollar_hour(device_flops: f64, price_per_hour: f64) -> Result<f64, EconError> {
    Ok(positive("device_flops", device_flops)? / positive("price_per_hour", price_per_hour)?)
}

pub fn ops_per_dollar(device_flops: f64, price_per_hour: f64) -> Result<f64, EconError> {
    Ok(positive("device_flops", device_flops)? * 3600.0
        / positive("price_per_hour", price_per_hour)?)
}

/// Dollars per hour to run `flops_needed` at `efficiency` FLOPS per dollar-hour.
pub fn inference_cost_per_hour(flops_needed: f64, efficiency: f64) -> Result<f64, EconError> {
    Ok(positive("flops_needed", flops_needed)? / positive("efficiency", efficiency)?)
}

pub fn training_cost(total_ops: f64, ops_per_dollar: f64) -> Result<f64, EconError> {
    Ok(positive("total_ops", total_ops)? / positive("ops_per_dollar", ops_per_dollar)?)
}

/// Devices running around the clock at `utilization` needed to supply the
/// labor hours.
pub fn concurrent_devices(labor_hours_per_year: f64, utilization: f64) -> Result<f64, EconError> {
    let hours = positive("labor_hours_per_year", labor_hours_per_year)?;
    let u = unit_fraction(utilization, EconError::Utilization)?;
    Ok(hours / (HOURS_PER_YEAR * u))
}

pub fn devices_for_training(
    total_ops: f64,
    device_flops: f64,
    build_years: f64,
) -> Result<f64, EconError> {
    Ok(positive("total_ops", total_ops)?
        / (positive("device_flops", device_flops)?
            * SECONDS_PER_YEAR
            * positive("build_years", build_years)?))
}

/// Devices needed to supply `flops_needed` of sustained compute.
pub fn devices_for_flops(flops_needed: f64, spec: &DeviceSpec) -> Result<f64, EconError> {
    spec.validate()?;
    Ok(positive("flops_needed", flops_needed)? / spec.useful_flops)
}

pub fn hardware_bill(devices: f64, spec: &DeviceSpec) -> Result<HardwareBill, EconError> {
    let devices = positive("devices", devices)?;
    spec.validate()?;
    Ok(HardwareBill {
        devices,
        wafers: devices / f64::from(spec.devices_per_wafer),
        gw_plants: devices * spec.power_draw / WATTS_PER_GW_PLANT,
    })
}

/// Compound annual growth taking `base_rate` to `target_rate` in `years`.
pub fn implied_cagr(target_rate: f64, base_rate: f64, years: f64) -> Result<f64, EconError> {
    let t = positive("target_rate", target_rate)?;
    let b = positive("base_rate", base_rate)?;
    let y = positive("years", years)?;
    Ok(((t / b).ln() / y).exp_m1())
}

pub fn project_growth(base: f64, rate: f64, years: f64) -> Result<f64, EconError> {
    let base = positive("base", base)?;
    if !(rate.is_finite() && rate > -1.0) {
        return Err(EconError::Rate(rate));
    }
    if !(years.is_finite() && years >= 0.0) {
        return Err(EconError::NonPositive {
            name: "years",
            value: years,
        });
    }
    Ok(base * (years * rate.ln_1p()).exp())
}

/// Wafers per year one EUV tool can expose.
pub fn euv_wafer_throughput(
    wafers_per_hour: f64,
    euv_steps: f64,
    uptime: f64,
    hours_per_year: f64,
) -> Result<f64, EconError> {
    let wph = positive("wafers_per_hour", wafers_per_hour)?;
    let steps = positive("euv_steps", euv_steps)?;
    let up = unit_fraction(uptime, EconError::Uptime)?;
    let hours = positive("hours_per_year", hours_per_year)?;
    Ok(wph / steps * up * hours)
}

pub fn robot_amortized_cost(price: f64, lifetime_hours: f64) -> Result<f64, EconError> {
    Ok(positive("price", price)? / positive("lifetime_hours", lifetime_hours)?)
}

pub fn robots_per_year(labor_hours_per_year: f64, lifetime_hours: f64) -> Result<f64, EconError> {
    Ok(positive("labor_hours_per_year", labor_hours_per_year)?
        / positive("lifetime_hours", lifetime_hours)?)
}

/// One column of a bill-of-materials table: a named compute need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillColumn {
    pub label: String,
    pub flops_needed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BillRow {
    pub device: String,
    /// One bill per column, in column order.
    pub bills: Vec<HardwareBill>,
}

/// Devices, wafers, and power plants for each (device generation, compute
/// need) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BillTable {
    pub columns: Vec<BillColumn>,
    pub rows: Vec<BillRow>,
}

pub fn bill_table(
    columns: Vec<BillColumn>,
    devices: &[DeviceSpec],
) -> Result<BillTable, EconError> {
    let rows = devices
        .iter()
        .map(|spec| {
            let bills = columns
                .iter()
                .map(|c| hardware_bill(devices_for_flops(c.flops_needed, spec)?, spec))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(BillRow {
                device: spec.name.clone(),
                bills,
            })
        })
        .collect::<Result<Vec<_>, EconError>>()?;
    Ok(BillTable { columns, rows })
}

impl BillTable {
    /// Comma-separated form. With `integral`, device and wafer counts are
    /// rounded up to whole units.
    pub fn to_csv(&self, integral: bool) -> String {
        let fix = |x: f64| if integral { x.ceil() } else { x };
        let mut out = String::from("device,quantity");
        for c in &self.columns {
            let _ = write!(out, ",{}", c.label);
        }
        out.push('\n');
        out.push_str(",flops_needed");
        for c in &self.columns {
            let _ = write!(out, ",{}", c.flops_needed);
        }
        out.push('\n');
        for row in &self.rows {
            for (name, pick) in BILL_QUANTITIES {
                let _ = write!(out, "{},{}", row.device, name);
                for b in &row.bills {
                    let v = pick(b);
                    let v = if *name == "gw_plants" { v } else { fix(v) };
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Aligned table at one significant figure.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<24}", "");
        for c in &self.columns {
            let _ = write!(out, "{:>18}", c.label);
        }
        out.push('\n');
        let _ = write!(out, "{:<24}", "FLOPS needed");
        for c in &self.columns {
            let _ = write!(out, "{:>18}", display::sig1(c.flops_needed));
        }
        out.push('\n');
        for row in &self.rows {
            for (name, pick) in BILL_QUANTITIES {
                let _ = write!(out, "{:<24}", format!("{} {}", row.device, name));
                for b in &row.bills {
                    let _ = write!(out, "{:>18}", display::sig1(pick(b)));
                }
                out.push('\n');
            }
        }
        out
    }
}

type Pick = fn(&HardwareBill) -> f64;

const BILL_QUANTITIES: &[(&str, Pick)] = &[
    ("devices", |b| b.devices),
    ("wafers", |b| b.wafers),
    ("gw_plants", |b| b.gw_plants),
];

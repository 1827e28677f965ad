//! Annualized cost of a DER fleet: capital recovery, O&M, NG fuel and
//! renewable tax credit per class, with storage priced by power and energy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profiles::DayType;

pub const DAYS_PER_SEASON: f64 = 91.25;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("no cost row for {0}, which has nonzero capacity or output")]
    MissingRow(&'static str),
    #[error("degenerate cost parameters: {0}")]
    DegenerateParams(String),
}

/// Cost row of one generating class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerCostRow {
    pub capital_cost_usd_per_mw: f64,
    pub om_cost_usd_per_mw_yr: f64,
    #[serde(default)]
    pub fuel_cost_usd_per_mwh: f64,
    #[serde(default)]
    pub tax_credit_usd_per_mwh: f64,
}

/// Storage rates. Both capital rates are already annualized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BessCostRow {
    pub capital_power_usd_per_mw_yr: f64,
    pub capital_energy_usd_per_mwh_yr: f64,
    pub om_cost_usd_per_mw_yr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostBook {
    pub pv: Option<DerCostRow>,
    pub wind: Option<DerCostRow>,
    pub biomass: Option<DerCostRow>,
    pub natural_gas: Option<DerCostRow>,
    pub bess: Option<BessCostRow>,
    pub discount_rate: f64,
    pub lifetime_years: f64,
    /// Electrical efficiency shared by all NG units (they split load evenly).
    pub ng_efficiency: f64,
}

impl CostBook {
    /// Invariant violations as `field: message` strings.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.discount_rate >= 0.0 && self.discount_rate.is_finite()) {
            out.push(format!("discount_rate: {} must be >= 0", self.discount_rate));
        }
        if !(self.lifetime_years >= 1.0 && self.lifetime_years.is_finite()) {
            out.push(format!("lifetime_years: {} must be >= 1", self.lifetime_years));
        }
        if !(self.ng_efficiency > 0.0 && self.ng_efficiency <= 1.0) {
            out.push(format!("ng_efficiency: {} must be in (0, 1]", self.ng_efficiency));
        }
        let rows = [
            ("pv", self.pv),
            ("wind", self.wind),
            ("biomass", self.biomass),
            ("natural_gas", self.natural_gas),
        ];
        for (name, row) in rows {
            if let Some(r) = row {
                for (field, v) in [
                    ("capital_cost_usd_per_mw", r.capital_cost_usd_per_mw),
                    ("om_cost_usd_per_mw_yr", r.om_cost_usd_per_mw_yr),
                    ("fuel_cost_usd_per_mwh", r.fuel_cost_usd_per_mwh),
                    ("tax_credit_usd_per_mwh", r.tax_credit_usd_per_mwh),
                ] {
                    if !(v >= 0.0 && v.is_finite()) {
                        out.push(format!("{name}.{field}: {v} must be >= 0"));
                    }
                }
            }
        }
        if let Some(b) = self.bess {
            for (field, v) in [
                ("capital_power_usd_per_mw_yr", b.capital_power_usd_per_mw_yr),
                ("capital_energy_usd_per_mwh_yr", b.capital_energy_usd_per_mwh_yr),
                ("om_cost_usd_per_mw_yr", b.om_cost_usd_per_mw_yr),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    out.push(format!("bess.{field}: {v} must be >= 0"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(CostError::DegenerateParams(p.join("; ")))
        }
    }

    pub fn crf(&self) -> f64 {
        capital_recovery_factor(self.discount_rate, self.lifetime_years)
    }
}

/// `r(1+r)^y / ((1+r)^y - 1)`, with the `1/y` limit at `r = 0`.
pub fn capital_recovery_factor(rate: f64, years: f64) -> f64 {
    if rate == 0.0 {
        return 1.0 / years;
    }
    // (1+r)^y via exp/ln1p keeps precision for tiny rates
    let growth_log = years * rate.ln_1p();
    rate * growth_log.exp() / growth_log.exp_m1()
}

/// Number of days a year a representative day stands for.
pub fn annual_day_weight(day_type: DayType) -> f64 {
    match day_type {
        DayType::Weekday => DAYS_PER_SEASON * 5.0 / 7.0,
        DayType::Weekend => DAYS_PER_SEASON * 2.0 / 7.0,
    }
}

/// Power series of one representative day and how many days a year it
/// stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSeries {
    pub days_per_year: f64,
    pub interval_hours: f64,
    pub power_mw: Vec<f64>,
}

impl WeightedSeries {
    pub fn constant(power_mw: f64, days_per_year: f64) -> Self {
        Self {
            days_per_year,
            interval_hours: 1.0,
            power_mw: vec![power_mw; 24],
        }
    }

    pub fn energy_mwh(&self) -> f64 {
        self.power_mw.iter().sum::<f64>() * self.interval_hours * self.days_per_year
    }
}

pub fn annual_energy_mwh(series: &[WeightedSeries]) -> f64 {
    series.iter().map(WeightedSeries::energy_mwh).sum()
}

/// Annual fuel bill of the NG fleet. Units share load evenly, so the sum over
/// units of `P_i T / η` equals the fleet output over `η`.
pub fn ng_fuel_cost(
    series: &[WeightedSeries],
    efficiency: f64,
    fuel_usd_per_mwh: f64,
) -> Result<f64, CostError> {
    if !(efficiency > 0.0) {
        return Err(CostError::DegenerateParams(format!(
            "ng_efficiency {efficiency} must be positive"
        )));
    }
    Ok(fuel_usd_per_mwh * annual_energy_mwh(series) / efficiency)
}

pub fn tax_credit_payback(series: &[WeightedSeries], credit_usd_per_mwh: f64) -> f64 {
    credit_usd_per_mwh * annual_energy_mwh(series)
}

/// Capacity and annual output of one generating class.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassUsage {
    pub capacity_mw: f64,
    pub output: Vec<WeightedSeries>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FleetUsage {
    pub pv: ClassUsage,
    pub wind: ClassUsage,
    pub biomass: ClassUsage,
    pub natural_gas: ClassUsage,
    pub bess_power_mw: f64,
    pub bess_energy_mwh: f64,
    /// Peak load used to express costs per MW of load; 0 disables it.
    pub peak_load_mw: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostComponents {
    pub capital: f64,
    pub o_and_m: f64,
    pub fuel: f64,
    pub tax_credit_payback: f64,
    pub total: f64,
}

impl CostComponents {
    pub fn new(capital: f64, o_and_m: f64, fuel: f64, tax_credit_payback: f64) -> Self {
        Self {
            capital,
            o_and_m,
            fuel,
            tax_credit_payback,
            total: capital + o_and_m + fuel - tax_credit_payback,
        }
    }

    fn plus(self, other: Self) -> Self {
        Self::new(
            self.capital + other.capital,
            self.o_and_m + other.o_and_m,
            self.fuel + other.fuel,
            self.tax_credit_payback + other.tax_credit_payback,
        )
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::new(
            self.capital * factor,
            self.o_and_m * factor,
            self.fuel * factor,
            self.tax_credit_payback * factor,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualCostReport {
    pub pv: CostComponents,
    pub wind: CostComponents,
    pub biomass: CostComponents,
    pub natural_gas: CostComponents,
    pub bess: CostComponents,
    /// Fleet sums, $/yr.
    pub capital: f64,
    pub o_and_m: f64,
    pub fuel: f64,
    pub tax_credit_payback: f64,
    pub total: f64,
    pub peak_load_mw: f64,
    /// Fleet sums divided by peak load, $/MW-yr. `None` when peak load is 0.
    pub per_mw_load: Option<CostComponents>,
}

impl AnnualCostReport {
    pub fn totals(&self) -> CostComponents {
        CostComponents {
            capital: self.capital,
            o_and_m: self.o_and_m,
            fuel: self.fuel,
            tax_credit_payback: self.tax_credit_payback,
            total: self.total,
        }
    }
}

fn present(usage: &ClassUsage) -> bool {
    usage.capacity_mw != 0.0 || usage.output.iter().any(|s| s.power_mw.iter().any(|&p| p != 0.0))
}

fn class_cost(
    name: &'static str,
    usage: &ClassUsage,
    row: Option<DerCostRow>,
    crf: f64,
    fuel_efficiency: Option<f64>,
) -> Result<CostComponents, CostError> {
    if !present(usage) {
        return Ok(CostComponents::default());
    }
    let row = row.ok_or(CostError::MissingRow(name))?;
    let fuel = match fuel_efficiency {
        Some(eta) => ng_fuel_cost(&usage.output, eta, row.fuel_cost_usd_per_mwh)?,
        None => 0.0,
    };
    let credit = if fuel_efficiency.is_some() {
        0.0
    } else {
        tax_credit_payback(&usage.output, row.tax_credit_usd_per_mwh)
    };
    Ok(CostComponents::new(
        row.capital_cost_usd_per_mw * usage.capacity_mw * crf,
        row.om_cost_usd_per_mw_yr * usage.capacity_mw,
        fuel,
        credit,
    ))
}

/// Price a fleet. Fuel applies only to NG; credits only to PV, wind and
/// biomass.
pub fn total_annualized_cost(fleet: &FleetUsage, book: &CostBook) -> Result<AnnualCostReport, CostError> {
    book.validate()?;
    let crf = book.crf();
    let pv = class_cost("pv", &fleet.pv, book.pv, crf, None)?;
    let wind = class_cost("wind", &fleet.wind, book.wind, crf, None)?;
    let biomass = class_cost("biomass", &fleet.biomass, book.biomass, crf, None)?;
    let natural_gas = class_cost(
        "natural_gas",
        &fleet.natural_gas,
        book.natural_gas,
        crf,
        Some(book.ng_efficiency),
    )?;
    let bess = if fleet.bess_power_mw != 0.0 || fleet.bess_energy_mwh != 0.0 {
        let row = book.bess.ok_or(CostError::MissingRow("bess"))?;
        CostComponents::new(
            row.capital_power_usd_per_mw_yr * fleet.bess_power_mw
                + row.capital_energy_usd_per_mwh_yr * fleet.bess_energy_mwh,
            row.om_cost_usd_per_mw_yr * fleet.bess_power_mw,
            0.0,
            0.0,
        )
    } else {
        CostComponents::default()
    };
    let sum = pv.plus(wind).plus(biomass).plus(natural_gas).plus(bess);
    let per_mw_load = (fleet.peak_load_mw > 0.0).then(|| sum.scaled(1.0 / fleet.peak_load_mw));
    Ok(AnnualCostReport {
        pv,
        wind,
        biomass,
        natural_gas,
        bess,
        capital: sum.capital,
        o_and_m: sum.o_and_m,
        fuel: sum.fuel,
        tax_credit_payback: sum.tax_credit_payback,
        total: sum.total,
        peak_load_mw: fleet.peak_load_mw,
        per_mw_load,
    })
}

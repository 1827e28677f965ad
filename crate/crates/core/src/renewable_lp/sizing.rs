use serde::{Deserialize, Serialize};

use super::kkt::{kkt_verify, KktReport};
use super::simplex::{Constraint, LinearProgram, LpSolution, Relation};
use super::SizingError;

/// Regulatory ceiling on biomass CHP.
pub const BIOMASS_CAP_LIMIT_MW: f64 = 0.5;
/// Lower bound on a ratio denominator that keeps the cross-multiplied form
/// away from `0/0`.
pub const MIN_DENOMINATOR_MW: f64 = 1e-6;
const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatoryParams {
    /// θ: PV share floor among renewables.
    pub theta_pv_share: f64,
    /// ρ: renewable share floor of all installed capacity.
    pub rho_renewable_share: f64,
    /// ω: CO₂ reduction floor.
    pub omega_co2_reduction: f64,
    /// δ: system energy-efficiency increase floor.
    pub delta_efficiency_increase: f64,
    /// Count biomass in the PV-share denominator.
    #[serde(default)]
    pub pv_share_includes_biomass: bool,
}

impl RegulatoryParams {
    pub fn disabled() -> Self {
        Self {
            theta_pv_share: 0.0,
            rho_renewable_share: 0.0,
            omega_co2_reduction: 0.0,
            delta_efficiency_increase: 0.0,
            pv_share_includes_biomass: false,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        [
            ("theta_pv_share", self.theta_pv_share),
            ("rho_renewable_share", self.rho_renewable_share),
            ("omega_co2_reduction", self.omega_co2_reduction),
            ("delta_efficiency_increase", self.delta_efficiency_increase),
        ]
        .into_iter()
        .filter(|(_, v)| !(0.0..=1.0).contains(v))
        .map(|(k, v)| format!("{k}: {v} not in [0, 1]"))
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewableCoefficients {
    pub alpha_tons_per_mw: f64,
    pub beta_mwh_per_mw: f64,
    pub gamma_mmbtu_per_mw: f64,
}

/// CHP rows carry electrical and thermal energy savings separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChpCoefficients {
    pub alpha_tons_per_mw: f64,
    pub beta_e_mwh_per_mw: f64,
    pub beta_th_mwh_per_mw: f64,
    pub gamma_mmbtu_per_mw: f64,
}

impl ChpCoefficients {
    pub fn beta_mwh_per_mw(&self) -> f64 {
        self.beta_e_mwh_per_mw + self.beta_th_mwh_per_mw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavingsCoefficients {
    pub pv: RenewableCoefficients,
    pub wind: RenewableCoefficients,
    pub biomass: ChpCoefficients,
    pub natural_gas: ChpCoefficients,
}

impl SavingsCoefficients {
    pub fn alpha(&self) -> [f64; 4] {
        [
            self.pv.alpha_tons_per_mw,
            self.wind.alpha_tons_per_mw,
            self.biomass.alpha_tons_per_mw,
            self.natural_gas.alpha_tons_per_mw,
        ]
    }

    pub fn beta(&self) -> [f64; 4] {
        [
            self.pv.beta_mwh_per_mw,
            self.wind.beta_mwh_per_mw,
            self.biomass.beta_mwh_per_mw(),
            self.natural_gas.beta_mwh_per_mw(),
        ]
    }

    pub fn gamma(&self) -> [f64; 4] {
        [
            self.pv.gamma_mmbtu_per_mw,
            self.wind.gamma_mmbtu_per_mw,
            self.biomass.gamma_mmbtu_per_mw,
            self.natural_gas.gamma_mmbtu_per_mw,
        ]
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let rows: [(&str, [f64; 3]); 2] = [
            ("pv", [self.pv.alpha_tons_per_mw, self.pv.beta_mwh_per_mw, self.pv.gamma_mmbtu_per_mw]),
            ("wind", [self.wind.alpha_tons_per_mw, self.wind.beta_mwh_per_mw, self.wind.gamma_mmbtu_per_mw]),
        ];
        for (name, vals) in rows {
            for (field, v) in ["alpha_tons_per_mw", "beta_mwh_per_mw", "gamma_mmbtu_per_mw"].iter().zip(vals) {
                if !(v >= 0.0 && v.is_finite()) {
                    out.push(format!("{name}.{field}: {v} must be >= 0"));
                }
            }
        }
        for (name, c) in [("biomass", &self.biomass), ("natural_gas", &self.natural_gas)] {
            for (field, v) in [
                ("alpha_tons_per_mw", c.alpha_tons_per_mw),
                ("beta_e_mwh_per_mw", c.beta_e_mwh_per_mw),
                ("beta_th_mwh_per_mw", c.beta_th_mwh_per_mw),
                ("gamma_mmbtu_per_mw", c.gamma_mmbtu_per_mw),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    out.push(format!("{name}.{field}: {v} must be >= 0"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandContext {
    /// E_l
    pub electric_load_mwh_per_yr: f64,
    /// E_th
    pub thermal_load_mwh_per_yr: f64,
    /// E_CO2
    pub base_co2_tons_per_mw: f64,
    /// L
    pub average_load_mw: f64,
    pub biomass_cap_mw: f64,
    pub pv_cap_mw: f64,
    pub wind_cap_mw: f64,
    /// Upper bound on the NG-CHP threshold variable.
    pub ng_threshold_cap_mw: f64,
}

impl DemandContext {
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = [
            ("electric_load_mwh_per_yr", self.electric_load_mwh_per_yr),
            ("thermal_load_mwh_per_yr", self.thermal_load_mwh_per_yr),
            ("base_co2_tons_per_mw", self.base_co2_tons_per_mw),
            ("average_load_mw", self.average_load_mw),
            ("biomass_cap_mw", self.biomass_cap_mw),
            ("pv_cap_mw", self.pv_cap_mw),
            ("wind_cap_mw", self.wind_cap_mw),
            ("ng_threshold_cap_mw", self.ng_threshold_cap_mw),
        ]
        .into_iter()
        .filter(|(_, v)| !(*v >= 0.0 && v.is_finite()))
        .map(|(k, v)| format!("{k}: {v} must be >= 0"))
        .collect();
        if self.biomass_cap_mw > BIOMASS_CAP_LIMIT_MW {
            out.push(format!(
                "biomass_cap_mw: {} exceeds the {BIOMASS_CAP_LIMIT_MW} MW biomass limit",
                self.biomass_cap_mw
            ));
        }
        out
    }

    pub fn caps(&self) -> [f64; 4] {
        [self.pv_cap_mw, self.wind_cap_mw, self.biomass_cap_mw, self.ng_threshold_cap_mw]
    }
}

/// Installed capacities, MW.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Capacities {
    pub pv_mw: f64,
    pub wind_mw: f64,
    pub biomass_mw: f64,
    /// NG CHP: the threshold in Step 1, the installed NG capacity afterwards.
    pub ng_mw: f64,
}

impl Capacities {
    pub fn as_array(&self) -> [f64; 4] {
        [self.pv_mw, self.wind_mw, self.biomass_mw, self.ng_mw]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            pv_mw: x[0],
            wind_mw: x[1],
            biomass_mw: x[2],
            ng_mw: x[3],
        }
    }

    pub fn renewable_mw(&self) -> f64 {
        self.pv_mw + self.wind_mw + self.biomass_mw
    }
}

fn weighted(w: [f64; 4], x: &Capacities) -> f64 {
    w.iter().zip(x.as_array()).map(|(a, b)| a * b).sum()
}

/// FS, MMBtu/yr.
pub fn fuel_savings(coeff: &SavingsCoefficients, x: &Capacities) -> f64 {
    weighted(coeff.gamma(), x)
}

/// ER, tons/yr.
pub fn emissions_reduction(coeff: &SavingsCoefficients, x: &Capacities) -> f64 {
    weighted(coeff.alpha(), x)
}

/// SES, MWh/yr.
pub fn system_energy_savings(coeff: &SavingsCoefficients, x: &Capacities) -> f64 {
    weighted(coeff.beta(), x)
}

pub fn co2_reduction_fraction(coeff: &SavingsCoefficients, ctx: &DemandContext, x: &Capacities) -> f64 {
    emissions_reduction(coeff, x) / (ctx.base_co2_tons_per_mw * ctx.average_load_mw)
}

pub fn efficiency_increase_fraction(coeff: &SavingsCoefficients, ctx: &DemandContext, x: &Capacities) -> f64 {
    system_energy_savings(coeff, x) / (ctx.electric_load_mwh_per_yr + ctx.thermal_load_mwh_per_yr)
}

/// PV share among renewables; `None` when the denominator is zero.
pub fn pv_share(reg: &RegulatoryParams, x: &Capacities) -> Option<f64> {
    let den = x.pv_mw + x.wind_mw + if reg.pv_share_includes_biomass { x.biomass_mw } else { 0.0 };
    (den > 0.0).then(|| x.pv_mw / den)
}

/// Renewable share of all capacity; `None` when nothing is installed.
pub fn renewable_share(x: &Capacities) -> Option<f64> {
    let den = x.renewable_mw() + x.ng_mw;
    (den > 0.0).then(|| x.renewable_mw() / den)
}

/// PV-share mandate in cross-multiplied form.
pub fn pv_share_holds(reg: &RegulatoryParams, x: &Capacities) -> bool {
    let den = x.pv_mw + x.wind_mw + if reg.pv_share_includes_biomass { x.biomass_mw } else { 0.0 };
    x.pv_mw - reg.theta_pv_share * den >= -CHECK_TOL * den.max(1.0)
}

/// Renewable-share mandate in cross-multiplied form.
pub fn renewable_share_holds(reg: &RegulatoryParams, x: &Capacities) -> bool {
    let den = x.renewable_mw() + x.ng_mw;
    x.renewable_mw() - reg.rho_renewable_share * den >= -CHECK_TOL * den.max(1.0)
}

pub fn co2_reduction_holds(reg: &RegulatoryParams, coeff: &SavingsCoefficients, ctx: &DemandContext, x: &Capacities) -> bool {
    let need = reg.omega_co2_reduction * ctx.base_co2_tons_per_mw * ctx.average_load_mw;
    emissions_reduction(coeff, x) >= need - CHECK_TOL * need.max(1.0)
}

pub fn efficiency_increase_holds(
    reg: &RegulatoryParams,
    coeff: &SavingsCoefficients,
    ctx: &DemandContext,
    x: &Capacities,
) -> bool {
    let need = reg.delta_efficiency_increase * (ctx.electric_load_mwh_per_yr + ctx.thermal_load_mwh_per_yr);
    system_energy_savings(coeff, x) >= need - CHECK_TOL * need.max(1.0)
}

/// The Step-1 LP over `[PV, WT, biomass, NG threshold]` and the data it was
/// built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingLp {
    pub lp: LinearProgram,
    pub reg: RegulatoryParams,
    pub coeff: SavingsCoefficients,
    pub ctx: DemandContext,
}

pub const VARIABLES: [&str; 4] = ["pv_mw", "wind_mw", "biomass_mw", "ng_threshold_mw"];

fn unit(j: usize) -> Vec<f64> {
    let mut v = vec![0.0; 4];
    v[j] = 1.0;
    v
}

/// Feasible set of Step 1 as linear rows. Shared by the FS-maximizing and the
/// threshold-minimizing programs.
fn mandate_rows(reg: &RegulatoryParams, coeff: &SavingsCoefficients, ctx: &DemandContext) -> Vec<Constraint> {
    let caps = ctx.caps();
    let mut rows = Vec::new();
    for (j, name) in ["pv_cap", "wind_cap", "biomass_cap", "ng_threshold_cap"].iter().enumerate() {
        rows.push(Constraint::new(*name, unit(j), Relation::Le, caps[j]));
    }

    let theta = reg.theta_pv_share;
    let bio_in = if reg.pv_share_includes_biomass { 1.0 } else { 0.0 };
    let pv_den = [1.0, 1.0, bio_in, 0.0];
    let pv_den_cap: f64 = pv_den.iter().zip(caps).map(|(d, c)| d * c).sum();
    if theta > 0.0 && pv_den_cap >= MIN_DENOMINATOR_MW {
        rows.push(Constraint::new("pv_share_denominator", pv_den.to_vec(), Relation::Ge, MIN_DENOMINATOR_MW));
        rows.push(Constraint::new(
            "pv_share",
            vec![1.0 - theta, -theta, -theta * bio_in, 0.0],
            Relation::Ge,
            0.0,
        ));
    }

    let rho = reg.rho_renewable_share;
    if rho > 0.0 && caps.iter().sum::<f64>() >= MIN_DENOMINATOR_MW {
        rows.push(Constraint::new("renewable_share_denominator", vec![1.0; 4], Relation::Ge, MIN_DENOMINATOR_MW));
        rows.push(Constraint::new(
            "renewable_share",
            vec![1.0 - rho, 1.0 - rho, 1.0 - rho, -rho],
            Relation::Ge,
            0.0,
        ));
    }

    rows.push(Constraint::new(
        "co2_reduction",
        coeff.alpha().to_vec(),
        Relation::Ge,
        reg.omega_co2_reduction * ctx.base_co2_tons_per_mw * ctx.average_load_mw,
    ));
    rows.push(Constraint::new(
        "efficiency_increase",
        coeff.beta().to_vec(),
        Relation::Ge,
        reg.delta_efficiency_increase * (ctx.electric_load_mwh_per_yr + ctx.thermal_load_mwh_per_yr),
    ));
    rows
}

/// Maximize FS over the capped box subject to the mandates.
pub fn build_lp(
    reg: &RegulatoryParams,
    coeff: &SavingsCoefficients,
    ctx: &DemandContext,
) -> Result<SizingLp, SizingError> {
    let mut problems = reg.problems();
    problems.extend(coeff.problems());
    problems.extend(ctx.problems());
    if ctx.electric_load_mwh_per_yr + ctx.thermal_load_mwh_per_yr <= 0.0 {
        problems.push("E_l + E_th must be positive".into());
    }
    if ctx.base_co2_tons_per_mw * ctx.average_load_mw <= 0.0 {
        problems.push("E_CO2 * L must be positive".into());
    }
    if !problems.is_empty() {
        return Err(SizingError::Model(problems.join("; ")));
    }
    let mut lp = LinearProgram::new(VARIABLES.iter().map(|s| s.to_string()).collect(), coeff.gamma().to_vec());
    lp.constraints = mandate_rows(reg, coeff, ctx);
    Ok(SizingLp {
        lp,
        reg: *reg,
        coeff: *coeff,
        ctx: *ctx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledValue {
    pub label: String,
    pub value: f64,
}

/// Step-1 result.
///
/// Renewables come from the FS-maximizing program. That program pushes the
/// NG variable to its upper limit whenever γ_NG > 0, so the threshold is then
/// re-solved as the smallest NG rating that keeps every mandate with the
/// renewables held fixed. FS, ER and SES are reported at that final point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableSizingSolution {
    pub pv_nom_mw: f64,
    pub wind_nom_mw: f64,
    pub biomass_nom_mw: f64,
    pub ng_threshold_mw: f64,
    pub fuel_savings_mmbtu: f64,
    pub emissions_reduction_tons: f64,
    pub system_energy_savings_mwh: f64,
    /// Optimum of the FS-maximizing program and its NG value.
    pub max_fuel_savings_mmbtu: f64,
    pub ng_at_max_fuel_savings_mw: f64,
    pub kkt_residual: f64,
    pub fs_kkt: KktReport,
    pub threshold_kkt: KktReport,
    pub fs_multipliers: Vec<LabeledValue>,
}

impl RenewableSizingSolution {
    pub fn capacities(&self) -> Capacities {
        Capacities {
            pv_mw: self.pv_nom_mw,
            wind_mw: self.wind_nom_mw,
            biomass_mw: self.biomass_nom_mw,
            ng_mw: self.ng_threshold_mw,
        }
    }
}

fn clamp_to_box(x: &[f64], caps: [f64; 4]) -> Vec<f64> {
    x.iter().zip(caps).map(|(&v, c)| v.clamp(0.0, c)).collect()
}

fn verify(lp: &LinearProgram, s: &LpSolution) -> Result<KktReport, SizingError> {
    let report = kkt_verify(lp, &s.x, &s.row_multipliers, &s.bound_multipliers);
    if report.passes {
        Ok(report)
    } else {
        Err(SizingError::KktFailed(report))
    }
}

/// FS-maximizing program only, with its KKT report.
pub fn solve_fs_program(sizing: &SizingLp) -> Result<(LpSolution, KktReport), SizingError> {
    let s = sizing.lp.solve()?;
    let report = verify(&sizing.lp, &s)?;
    Ok((s, report))
}

pub fn solve_lp(sizing: &SizingLp) -> Result<RenewableSizingSolution, SizingError> {
    let caps = sizing.ctx.caps();
    let (fs, fs_kkt) = solve_fs_program(sizing)?;
    let x = clamp_to_box(&fs.x, caps);

    let mut thr_lp = LinearProgram::new(sizing.lp.variables.clone(), vec![0.0, 0.0, 0.0, -1.0]);
    thr_lp.constraints = mandate_rows(&sizing.reg, &sizing.coeff, &sizing.ctx)
        .into_iter()
        .filter(|c| !c.label.ends_with("_cap"))
        .collect();
    for (j, name) in ["pv_fixed", "wind_fixed", "biomass_fixed"].iter().enumerate() {
        thr_lp.push(Constraint::new(*name, unit(j), Relation::Eq, x[j]));
    }
    thr_lp.push(Constraint::new("ng_threshold_cap", unit(3), Relation::Le, caps[3].max(x[3])));
    let thr = thr_lp.solve()?;
    let threshold_kkt = verify(&thr_lp, &thr)?;
    let ng = thr.x[3].clamp(0.0, x[3]);

    let final_x = Capacities {
        pv_mw: x[0],
        wind_mw: x[1],
        biomass_mw: x[2],
        ng_mw: ng,
    };
    Ok(RenewableSizingSolution {
        pv_nom_mw: x[0],
        wind_nom_mw: x[1],
        biomass_nom_mw: x[2],
        ng_threshold_mw: ng,
        fuel_savings_mmbtu: fuel_savings(&sizing.coeff, &final_x),
        emissions_reduction_tons: emissions_reduction(&sizing.coeff, &final_x),
        system_energy_savings_mwh: system_energy_savings(&sizing.coeff, &final_x),
        max_fuel_savings_mmbtu: fs.objective,
        ng_at_max_fuel_savings_mw: x[3],
        kkt_residual: fs_kkt.max_residual().max(threshold_kkt.max_residual()),
        fs_kkt,
        threshold_kkt,
        fs_multipliers: sizing
            .lp
            .constraints
            .iter()
            .zip(&fs.row_multipliers)
            .map(|(c, &value)| LabeledValue {
                label: c.label.clone(),
                value,
            })
            .collect(),
    })
}

/// Step 1 bypassed: no PV or wind, biomass at its cap, no NG threshold.
pub fn cost_only_solution(coeff: &SavingsCoefficients, ctx: &DemandContext) -> RenewableSizingSolution {
    let x = Capacities {
        biomass_mw: ctx.biomass_cap_mw,
        ..Default::default()
    };
    let zero = KktReport {
        stationarity: 0.0,
        primal_feasibility: 0.0,
        dual_feasibility: 0.0,
        complementary_slackness: 0.0,
        passes: true,
    };
    RenewableSizingSolution {
        pv_nom_mw: 0.0,
        wind_nom_mw: 0.0,
        biomass_nom_mw: x.biomass_mw,
        ng_threshold_mw: 0.0,
        fuel_savings_mmbtu: fuel_savings(coeff, &x),
        emissions_reduction_tons: emissions_reduction(coeff, &x),
        system_energy_savings_mwh: system_energy_savings(coeff, &x),
        max_fuel_savings_mmbtu: fuel_savings(coeff, &x),
        ng_at_max_fuel_savings_mw: 0.0,
        kkt_residual: 0.0,
        fs_kkt: zero,
        threshold_kkt: zero,
        fs_multipliers: Vec::new(),
    }
}

//! Builders for the four planning formulations.
//!
//! * `Tnep`: capacity upgrades only, DC flow `pf = B * (theta_to - theta_from)`.
//! * `Fbsm`: TCSC devices with the flow change `dpf` linked to the angle
//!   difference through a sign binary `z` and big-M rows using one global M.
//! * `Fbsmi`: as `Fbsm`, with `M_e = pf_max_e + m * delta_c_e` per branch.
//! * `Facets`: the three-way disjunction (no device / positive angle /
//!   negative angle) written with `z+ + z- = psi` and eight facet-defining
//!   inequalities, optionally followed by the redundant `|dpf| <= cap * psi`.
//!
//! Variables are named `<kind>_<branch-or-bus>_<scenario>`; see [`names`].
//! Generation limits, angle references and imbalance signs are variable
//! bounds, never rows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Branch, CostConfig, Network, Scenario};
use crate::milp::{Integrality, LinearConstraintDef, ModelIR, ModelMetadata, Sense, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationKind {
    Tnep,
    Fbsm,
    Fbsmi,
    Facets,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 4] = [
        FormulationKind::Tnep,
        FormulationKind::Fbsm,
        FormulationKind::Fbsmi,
        FormulationKind::Facets,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormulationKind::Tnep => "tnep",
            FormulationKind::Fbsm => "fbsm",
            FormulationKind::Fbsmi => "fbsmi",
            FormulationKind::Facets => "facets",
        }
    }

    pub fn has_facts(self) -> bool {
        self != FormulationKind::Tnep
    }
}

impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FormulationKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Precondition(format!("unknown formulation '{s}'")))
    }
}

/// Variable and row naming scheme shared by builders, validators and reports.
pub mod names {
    pub fn gamma(e: usize) -> String {
        format!("gamma_{e}")
    }
    pub fn psi(e: usize) -> String {
        format!("psi_{e}")
    }
    pub fn pg(g: usize, s: usize) -> String {
        format!("pg_{g}_{s}")
    }
    pub fn theta(i: usize, s: usize) -> String {
        format!("theta_{i}_{s}")
    }
    /// Load not served at bus `i`.
    pub fn xi_plus(i: usize, s: usize) -> String {
        format!("xip_{i}_{s}")
    }
    /// Surplus injection at bus `i`.
    pub fn xi_minus(i: usize, s: usize) -> String {
        format!("xim_{i}_{s}")
    }
    pub fn pf(e: usize, s: usize) -> String {
        format!("pf_{e}_{s}")
    }
    pub fn dpf(e: usize, s: usize) -> String {
        format!("dpf_{e}_{s}")
    }
    pub fn z(e: usize, s: usize) -> String {
        format!("z_{e}_{s}")
    }
    pub fn z_plus(e: usize, s: usize) -> String {
        format!("zp_{e}_{s}")
    }
    pub fn z_minus(e: usize, s: usize) -> String {
        format!("zm_{e}_{s}")
    }
}

/// Susceptance change range of a branch, MW/rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactsParams {
    pub db_min: f64,
    pub db_max: f64,
}

impl FactsParams {
    pub const NONE: FactsParams = FactsParams {
        db_min: 0.0,
        db_max: 0.0,
    };
}

/// Maps a reactance range `[X*dx_min_frac, X*dx_max_frac]` to the susceptance
/// range via `dB = -dX / (X (X + dX))`, scaled to MW/rad.
///
/// `dB` decreases strictly in `dX`, so the minimum reactance change gives the
/// maximum susceptance change and vice versa.
pub fn compute_susceptance_deltas(
    x_pu: f64,
    dx_min_frac: f64,
    dx_max_frac: f64,
    base_mva: f64,
) -> Result<(f64, f64)> {
    if !(x_pu > 0.0) {
        return Err(Error::Precondition(format!("reactance {x_pu} must be positive")));
    }
    if !(dx_min_frac > -1.0) || !(dx_max_frac > -1.0) {
        return Err(Error::Precondition(format!(
            "reactance range [{dx_min_frac}, {dx_max_frac}] x X makes X + dX non-positive"
        )));
    }
    if dx_min_frac > dx_max_frac {
        return Err(Error::Precondition("dx_min_frac exceeds dx_max_frac".into()));
    }
    let db = |dx: f64| -dx / (x_pu * (x_pu + dx)) * base_mva;
    Ok((db(x_pu * dx_max_frac), db(x_pu * dx_min_frac)))
}

/// Per-branch susceptance ranges; zero for branches without a TCSC option.
pub fn facts_params(net: &Network) -> Result<Vec<FactsParams>> {
    net.branches
        .iter()
        .map(|br| {
            if !br.tcsc_allowed {
                return Ok(FactsParams::NONE);
            }
            let (db_min, db_max) = compute_susceptance_deltas(
                br.reactance_pu,
                br.tcsc_dx_min_frac,
                br.tcsc_dx_max_frac,
                net.base_mva,
            )?;
            Ok(FactsParams { db_min, db_max })
        })
        .collect()
}

/// Tightens `[theta_min, theta_max]` using `|pf| <= cap` and
/// `pf >= (B + dB_min) * theta` for positive angles (symmetrically for
/// negative ones). Skipped when `B + dB_min <= 0`.
pub fn tighten_angle_bounds(
    theta_min: f64,
    theta_max: f64,
    susceptance: f64,
    db_min: f64,
    flow_cap: f64,
) -> (f64, f64) {
    let slope = susceptance + db_min;
    if !(slope > 0.0) || !flow_cap.is_finite() {
        return (theta_min, theta_max);
    }
    let reach = flow_cap / slope;
    (theta_min.max(-reach), theta_max.min(reach))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BigMMode {
    Global,
    PerBranch,
}

impl FromStr for BigMMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(BigMMode::Global),
            "per-branch" | "per_branch" => Ok(BigMMode::PerBranch),
            _ => Err(Error::Precondition(format!("unknown big-M policy '{s}'"))),
        }
    }
}

/// Big-M values: one global `max_e (pf_max_e + m delta_c_e)`, or the branch's own.
#[derive(Debug, Clone, PartialEq)]
pub struct BigMPolicy {
    pub mode: BigMMode,
    global: f64,
}

impl BigMPolicy {
    pub fn new(net: &Network, mode: BigMMode) -> Self {
        let global = net
            .branches
            .iter()
            .map(Branch::flow_cap_mw)
            .fold(0.0, f64::max);
        BigMPolicy { mode, global }
    }

    pub fn value(&self, branch: &Branch) -> f64 {
        match self.mode {
            BigMMode::Global => self.global,
            BigMMode::PerBranch => branch.flow_cap_mw(),
        }
    }
}

/// Data of one branch-scenario disjunction block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisjunctBlockParams {
    pub theta_min: f64,
    pub theta_max: f64,
    pub db_min: f64,
    pub db_max: f64,
    pub flow_cap: f64,
}

impl DisjunctBlockParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_min < 0.0 && 0.0 < self.theta_max) {
            return Err(Error::Precondition("block needs theta_min < 0 < theta_max".into()));
        }
        if !(self.db_min <= self.db_max) || !self.db_min.is_finite() || !self.db_max.is_finite() {
            return Err(Error::Precondition("block needs finite db_min <= db_max".into()));
        }
        Ok(())
    }

    /// Both angle limits strictly signed and a non-trivial susceptance range.
    pub fn is_degenerate(&self) -> bool {
        !(self.theta_min < 0.0 && 0.0 < self.theta_max && self.db_min < self.db_max)
    }

    /// Magnitude used for scale-relative tolerances.
    pub fn scale(&self) -> f64 {
        [
            1.0,
            self.db_min.abs(),
            self.db_max.abs(),
            (self.theta_max * self.db_max).abs(),
            (self.theta_min * self.db_min).abs(),
            (self.theta_max * self.db_min).abs(),
            (self.theta_min * self.db_max).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Variables a disjunction block is written over. The angle difference is
/// `theta_to - theta_from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacetVars {
    pub psi: VarId,
    pub z_plus: VarId,
    pub z_minus: VarId,
    pub theta_from: VarId,
    pub theta_to: VarId,
    pub dpf: VarId,
}

/// Labels of the eight inequalities, in the order [`facet_block`] emits them.
pub const FACET_INEQUALITY_LABELS: [&str; 8] = [
    "angle_lo",
    "angle_hi",
    "dpf_lo",
    "dpf_hi",
    "slope_max_upper",
    "slope_min_upper",
    "slope_max_lower",
    "slope_min_lower",
];

/// Rows of one disjunction block: `z+ + z- = psi`, the eight inequalities in
/// [`FACET_INEQUALITY_LABELS`] order, then (if `emit_cap`) the two rows of
/// `-cap psi <= dpf <= cap psi`. Row names end in `tag`.
pub fn facet_block(
    p: &DisjunctBlockParams,
    v: &FacetVars,
    emit_cap: bool,
    tag: &str,
) -> Vec<LinearConstraintDef> {
    let (tl, th, bl, bh) = (p.theta_min, p.theta_max, p.db_min, p.db_max);
    let row = |label: &str, zp: f64, zm: f64, theta: f64, dpf: f64, sense, rhs| {
        let mut terms = vec![(v.z_plus, zp), (v.z_minus, zm)];
        if theta != 0.0 {
            terms.push((v.theta_to, theta));
            terms.push((v.theta_from, -theta));
        }
        if dpf != 0.0 {
            terms.push((v.dpf, dpf));
        }
        LinearConstraintDef::new(format!("hull_{label}_{tag}"), terms, sense, rhs)
    };
    let l = FACET_INEQUALITY_LABELS;
    let mut rows = vec![
        LinearConstraintDef::new(
            format!("hull_sum_{tag}"),
            vec![(v.z_plus, 1.0), (v.z_minus, 1.0), (v.psi, -1.0)],
            Sense::Eq,
            0.0,
        ),
        row(l[0], tl, 0.0, 1.0, 0.0, Sense::Ge, tl),
        row(l[1], 0.0, th, 1.0, 0.0, Sense::Le, th),
        row(l[2], -th * bl, -tl * bh, 0.0, 1.0, Sense::Ge, 0.0),
        row(l[3], -th * bh, -tl * bl, 0.0, 1.0, Sense::Le, 0.0),
        row(l[4], th * bl, th * bh, bh, -1.0, Sense::Le, th * bh),
        row(l[5], th * bh, th * bl, bl, -1.0, Sense::Ge, th * bl),
        row(l[6], tl * bh, tl * bl, bh, -1.0, Sense::Ge, tl * bh),
        row(l[7], tl * bl, tl * bh, bl, -1.0, Sense::Le, tl * bl),
    ];
    if emit_cap {
        rows.push(LinearConstraintDef::new(
            format!("hull_cap_lo_{tag}"),
            vec![(v.dpf, 1.0), (v.psi, p.flow_cap)],
            Sense::Ge,
            0.0,
        ));
        rows.push(LinearConstraintDef::new(
            format!("hull_cap_hi_{tag}"),
            vec![(v.dpf, 1.0), (v.psi, -p.flow_cap)],
            Sense::Le,
            0.0,
        ));
    }
    rows
}

/// Switches shared by all builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Big-M policy for `Fbsm`; `Fbsmi` always uses per-branch values.
    pub bigm: BigMMode,
    pub tighten_bounds: bool,
    /// Emit `|dpf| <= cap * psi` in `Facets`.
    pub emit_eq22: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            bigm: BigMMode::Global,
            tighten_bounds: false,
            emit_eq22: true,
        }
    }
}

pub fn build_tnep(net: &Network, scenarios: &[Scenario], costs: &CostConfig) -> Result<ModelIR> {
    build(FormulationKind::Tnep, net, scenarios, costs, &BuildOptions::default())
}

pub fn build_fbsm(
    net: &Network,
    scenarios: &[Scenario],
    costs: &CostConfig,
    policy: BigMMode,
) -> Result<ModelIR> {
    let opts = BuildOptions {
        bigm: policy,
        ..Default::default()
    };
    build(FormulationKind::Fbsm, net, scenarios, costs, &opts)
}

pub fn build_fbsmi(net: &Network, scenarios: &[Scenario], costs: &CostConfig) -> Result<ModelIR> {
    build(FormulationKind::Fbsmi, net, scenarios, costs, &BuildOptions::default())
}

pub fn build_facets(
    net: &Network,
    scenarios: &[Scenario],
    costs: &CostConfig,
    apply_bound_tightening: bool,
    emit_eq22: bool,
) -> Result<ModelIR> {
    let opts = BuildOptions {
        tighten_bounds: apply_bound_tightening,
        emit_eq22,
        ..Default::default()
    };
    build(FormulationKind::Facets, net, scenarios, costs, &opts)
}

/// Angle-difference limits used for branch `e` in formulation `kind`.
pub fn branch_angle_limits(
    net: &Network,
    facts: &[FactsParams],
    kind: FormulationKind,
    tighten: bool,
    e: usize,
) -> (f64, f64) {
    let br = &net.branches[e];
    if !tighten {
        return (br.angle_min_rad, br.angle_max_rad);
    }
    let db_min = if kind.has_facts() { facts[e].db_min } else { 0.0 };
    tighten_angle_bounds(
        br.angle_min_rad,
        br.angle_max_rad,
        net.susceptance_mw(br),
        db_min,
        br.flow_cap_mw(),
    )
}

/// Builds formulation `kind`.
pub fn build(
    kind: FormulationKind,
    net: &Network,
    scenarios: &[Scenario],
    costs: &CostConfig,
    opts: &BuildOptions,
) -> Result<ModelIR> {
    net.validate()?;
    costs.validate()?;
    if scenarios.is_empty() {
        return Err(Error::Precondition("at least one scenario is required".into()));
    }
    for sc in scenarios {
        sc.validate(net)?;
    }

    let n_s = scenarios.len();
    let weight = 1.0 / n_s as f64;
    let facts = facts_params(net)?;
    let policy = BigMPolicy::new(
        net,
        match kind {
            FormulationKind::Fbsmi => BigMMode::PerBranch,
            _ => opts.bigm,
        },
    );
    let angle: Vec<(f64, f64)> = (0..net.n_branches())
        .map(|e| branch_angle_limits(net, &facts, kind, opts.tighten_bounds, e))
        .collect();

    let mut m = ModelIR::new(kind.to_string());
    m.metadata = ModelMetadata {
        formulation: kind.to_string(),
        n_buses: net.n_buses(),
        n_branches: net.n_branches(),
        n_generators: net.n_generators(),
        n_scenarios: n_s,
    };
    let mut obj: Vec<(VarId, f64)> = Vec::new();
    let inf = f64::INFINITY;
    use Integrality::{Binary, Continuous, Integer};

    let mut gamma = Vec::with_capacity(net.n_branches());
    for br in &net.branches {
        let v = m.add_var(names::gamma(br.id), 0.0, f64::from(br.max_upgrades), Integer)?;
        obj.push((v, costs.capacity_cost_per_mw_km * br.length_km * br.upgrade_increment_mw));
        gamma.push(v);
    }
    let mut psi = Vec::new();
    if kind.has_facts() {
        for br in &net.branches {
            let hi = if br.tcsc_allowed { 1.0 } else { 0.0 };
            let v = m.add_var(names::psi(br.id), 0.0, hi, Binary)?;
            obj.push((v, costs.tcsc_cost_per_mva * br.thermal_limit_mw));
            psi.push(v);
        }
    }

    for (s, sc) in scenarios.iter().enumerate() {
        let mut pg = Vec::with_capacity(net.n_generators());
        for g in &net.generators {
            let v = m.add_var(names::pg(g.id, s), sc.pmin_mw[g.id], sc.pmax_mw[g.id], Continuous)?;
            obj.push((v, weight * g.cost_per_mwh));
            pg.push(v);
        }
        let mut theta = Vec::with_capacity(net.n_buses());
        for bus in &net.buses {
            let (lo, hi) = if bus.id == 0 { (0.0, 0.0) } else { (-inf, inf) };
            theta.push(m.add_var(names::theta(bus.id, s), lo, hi, Continuous)?);
        }
        let mut xi = Vec::with_capacity(net.n_buses());
        for bus in &net.buses {
            let plus = m.add_var(names::xi_plus(bus.id, s), 0.0, inf, Continuous)?;
            let minus = m.add_var(names::xi_minus(bus.id, s), 0.0, inf, Continuous)?;
            obj.push((plus, weight * costs.imbalance_penalty_per_mwh));
            obj.push((minus, weight * costs.imbalance_penalty_per_mwh));
            xi.push((plus, minus));
        }
        let mut pf = Vec::with_capacity(net.n_branches());
        for br in &net.branches {
            pf.push(m.add_var(names::pf(br.id, s), -inf, inf, Continuous)?);
        }
        let mut dpf = Vec::new();
        let mut zs: Vec<(VarId, Option<VarId>)> = Vec::new();
        if kind.has_facts() {
            for br in &net.branches {
                dpf.push(m.add_var(names::dpf(br.id, s), -inf, inf, Continuous)?);
            }
            for br in &net.branches {
                let hi = if br.tcsc_allowed { 1.0 } else { 0.0 };
                if kind == FormulationKind::Facets {
                    let zp = m.add_var(names::z_plus(br.id, s), 0.0, hi, Binary)?;
                    let zm = m.add_var(names::z_minus(br.id, s), 0.0, hi, Binary)?;
                    zs.push((zp, Some(zm)));
                } else {
                    zs.push((m.add_var(names::z(br.id, s), 0.0, hi, Binary)?, None));
                }
            }
        }

        // Power balance: pg + inflow - outflow + unserved - surplus = load.
        for bus in &net.buses {
            let i = bus.id;
            let mut terms: Vec<(VarId, f64)> = net
                .generators
                .iter()
                .filter(|g| g.bus == i)
                .map(|g| (pg[g.id], 1.0))
                .collect();
            for br in &net.branches {
                if br.to_bus == i {
                    terms.push((pf[br.id], 1.0));
                } else if br.from_bus == i {
                    terms.push((pf[br.id], -1.0));
                }
            }
            terms.push((xi[i].0, 1.0));
            terms.push((xi[i].1, -1.0));
            m.add_constraint(LinearConstraintDef::new(
                format!("bal_{i}_{s}"),
                terms,
                Sense::Eq,
                sc.pd_mw[i],
            ))?;
        }

        for br in &net.branches {
            let e = br.id;
            let b = net.susceptance_mw(br);
            let (from, to) = (theta[br.from_bus], theta[br.to_bus]);
            let mut flow = vec![(pf[e], 1.0), (to, -b), (from, b)];
            if kind.has_facts() {
                flow.push((dpf[e], -1.0));
            }
            m.add_constraint(LinearConstraintDef::new(format!("flow_{e}_{s}"), flow, Sense::Eq, 0.0))?;
            m.add_constraint(LinearConstraintDef::new(
                format!("therm_hi_{e}_{s}"),
                vec![(pf[e], 1.0), (gamma[e], -br.upgrade_increment_mw)],
                Sense::Le,
                br.thermal_limit_mw,
            ))?;
            m.add_constraint(LinearConstraintDef::new(
                format!("therm_lo_{e}_{s}"),
                vec![(pf[e], 1.0), (gamma[e], br.upgrade_increment_mw)],
                Sense::Ge,
                -br.thermal_limit_mw,
            ))?;
            let (tl, th) = angle[e];
            m.add_constraint(LinearConstraintDef::new(
                format!("ang_hi_{e}_{s}"),
                vec![(to, 1.0), (from, -1.0)],
                Sense::Le,
                th,
            ))?;
            m.add_constraint(LinearConstraintDef::new(
                format!("ang_lo_{e}_{s}"),
                vec![(to, 1.0), (from, -1.0)],
                Sense::Ge,
                tl,
            ))?;

            match kind {
                FormulationKind::Tnep => {}
                FormulationKind::Fbsm | FormulationKind::Fbsmi => {
                    let big_m = policy.value(br);
                    let FactsParams { db_min, db_max } = facts[e];
                    let z = zs[e].0;
                    let d = dpf[e];
                    let row = |name: &str, slope: f64, zc: f64, sense, rhs| {
                        let mut terms = vec![(d, 1.0)];
                        if slope != 0.0 {
                            terms.push((to, -slope));
                            terms.push((from, slope));
                        }
                        terms.push((z, zc));
                        LinearConstraintDef::new(format!("{name}_{e}_{s}"), terms, sense, rhs)
                    };
                    // z = 1: db_min * theta <= dpf <= db_max * theta.
                    m.add_constraint(row("bigm_pos_lo", db_min, -big_m, Sense::Ge, -big_m))?;
                    m.add_constraint(row("bigm_pos_hi", db_max, big_m, Sense::Le, big_m))?;
                    // z = 0: db_max * theta <= dpf <= db_min * theta.
                    m.add_constraint(row("bigm_neg_lo", db_max, big_m, Sense::Ge, 0.0))?;
                    m.add_constraint(row("bigm_neg_hi", db_min, -big_m, Sense::Le, 0.0))?;
                    m.add_constraint(LinearConstraintDef::new(
                        format!("inst_lo_{e}_{s}"),
                        vec![(d, 1.0), (psi[e], big_m)],
                        Sense::Ge,
                        0.0,
                    ))?;
                    m.add_constraint(LinearConstraintDef::new(
                        format!("inst_hi_{e}_{s}"),
                        vec![(d, 1.0), (psi[e], -big_m)],
                        Sense::Le,
                        0.0,
                    ))?;
                }
                FormulationKind::Facets => {
                    let params = DisjunctBlockParams {
                        theta_min: tl,
                        theta_max: th,
                        db_min: facts[e].db_min,
                        db_max: facts[e].db_max,
                        flow_cap: br.flow_cap_mw(),
                    };
                    let vars = FacetVars {
                        psi: psi[e],
                        z_plus: zs[e].0,
                        z_minus: zs[e].1.expect("facet block has two sign binaries"),
                        theta_from: from,
                        theta_to: to,
                        dpf: dpf[e],
                    };
                    for row in facet_block(&params, &vars, opts.emit_eq22, &format!("{e}_{s}")) {
                        m.add_constraint(row)?;
                    }
                }
            }
        }
    }
    m.set_objective(obj, 0.0)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Bus, Generator, GeneratorKind};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_fractions_give_no_effect() {
        assert_eq!(compute_susceptance_deltas(0.1, 0.0, 0.0, 100.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn susceptance_delta_direct_evaluation() {
        // dX = +0.05 on X = 0.1 alone: -0.05 / (0.1 * 0.15) * 100.
        let (db_min, _) = compute_susceptance_deltas(0.1, 0.0, 0.5, 100.0).unwrap();
        assert!(close(db_min, -333.333_333_333_333_3, 1e-9), "{db_min}");
        let (db_min, db_max) = compute_susceptance_deltas(0.1, -0.4, 0.2, 100.0).unwrap();
        assert!(close(db_max, 666.666_666_666_666_7, 1e-9), "{db_max}");
        assert!(close(db_min, -166.666_666_666_666_7, 1e-9), "{db_min}");
    }

    #[test]
    fn susceptance_delta_is_monotone_over_the_range() {
        let (x, base) = (0.07, 100.0);
        let (db_min, db_max) = compute_susceptance_deltas(x, -0.4, 0.2, base).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=60 {
            let frac = -0.4 + 0.01 * f64::from(k);
            let dx = x * frac;
            let db = -dx / (x * (x + dx)) * base;
            assert!(db < prev);
            assert!(db >= db_min - 1e-9 && db <= db_max + 1e-9);
            prev = db;
        }
    }

    #[test]
    fn reactance_range_crossing_zero_is_rejected() {
        assert!(compute_susceptance_deltas(0.1, -1.0, 0.2, 100.0).is_err());
    }

    #[test]
    fn bound_tightening_cases() {
        assert_eq!(tighten_angle_bounds(-0.6, 0.6, 1000.0, -200.0, 400.0), (-0.5, 0.5));
        assert_eq!(tighten_angle_bounds(-0.6, 0.6, 1000.0, 0.0, 1e9), (-0.6, 0.6));
        assert_eq!(tighten_angle_bounds(-0.6, 0.6, 200.0, -200.0, 400.0), (-0.6, 0.6));
    }

    #[test]
    fn facet_row_substitution() {
        let p = DisjunctBlockParams {
            theta_min: -0.6,
            theta_max: 0.6,
            db_min: -2.0,
            db_max: 3.0,
            flow_cap: 10.0,
        };
        let v = FacetVars {
            psi: VarId(0),
            z_plus: VarId(1),
            z_minus: VarId(2),
            theta_from: VarId(3),
            theta_to: VarId(4),
            dpf: VarId(5),
        };
        let rows = facet_block(&p, &v, true, "t");
        assert_eq!(rows.len(), 11);
        let dpf_lo = &rows[3];
        assert_eq!(dpf_lo.name, "hull_dpf_lo_t");
        assert_eq!(dpf_lo.sense, Sense::Ge);
        assert_eq!(dpf_lo.rhs, 0.0);
        let coef = |v: VarId| dpf_lo.terms.iter().find(|t| t.0 == v).map(|t| t.1);
        assert!(close(coef(VarId(1)).unwrap(), 1.2, 1e-12));
        assert!(close(coef(VarId(2)).unwrap(), 1.8, 1e-12));
        assert_eq!(coef(VarId(5)), Some(1.0));
        assert_eq!(facet_block(&p, &v, false, "t").len(), 9);
    }

    fn line_net(n_branches: usize) -> Network {
        let bus = |id| Bus {
            id,
            name: String::new(),
            x_coord: None,
            y_coord: None,
        };
        Network {
            base_mva: 100.0,
            buses: vec![bus(0), bus(1)],
            branches: (0..n_branches)
                .map(|id| Branch {
                    id,
                    from_bus: 0,
                    to_bus: 1,
                    reactance_pu: 0.1,
                    thermal_limit_mw: 100.0 + 50.0 * id as f64,
                    length_km: 1.0,
                    angle_min_rad: -0.6,
                    angle_max_rad: 0.6,
                    upgrade_increment_mw: 50.0,
                    max_upgrades: 1,
                    tcsc_allowed: true,
                    tcsc_dx_min_frac: -0.4,
                    tcsc_dx_max_frac: 0.2,
                })
                .collect(),
            generators: vec![Generator {
                id: 0,
                bus: 0,
                kind: GeneratorKind::Nonrenewable,
                technology: None,
                pmin_mw: 0.0,
                pmax_mw: 200.0,
                cost_per_mwh: 10.0,
            }],
        }
    }

    fn scenario() -> Scenario {
        Scenario {
            id: "s".into(),
            hour: None,
            season: None,
            criterion: None,
            pd_mw: vec![0.0, 150.0],
            pmin_mw: vec![0.0],
            pmax_mw: vec![200.0],
        }
    }

    #[test]
    fn single_branch_fbsm_and_fbsmi_coincide() {
        let net = line_net(1);
        let c = CostConfig::default();
        let a = build_fbsm(&net, &[scenario()], &c, BigMMode::Global).unwrap();
        let b = build_fbsmi(&net, &[scenario()], &c).unwrap();
        assert_eq!(a.constraints, b.constraints);
        assert_eq!(a.variables, b.variables);
    }

    #[test]
    fn global_m_is_the_largest_branch_cap() {
        let net = line_net(3);
        let p = BigMPolicy::new(&net, BigMMode::Global);
        assert_eq!(p.value(&net.branches[0]), 250.0);
        let p = BigMPolicy::new(&net, BigMMode::PerBranch);
        assert_eq!(p.value(&net.branches[0]), 150.0);
    }

    #[test]
    fn rebuilds_are_identical() {
        let net = line_net(2);
        let c = CostConfig::default();
        for kind in FormulationKind::ALL {
            let a = build(kind, &net, &[scenario()], &c, &BuildOptions::default()).unwrap();
            let b = build(kind, &net, &[scenario()], &c, &BuildOptions::default()).unwrap();
            assert_eq!(a.variables, b.variables);
            assert_eq!(a.constraints, b.constraints);
            assert_eq!(a.objective, b.objective);
        }
    }

    #[test]
    fn scenario_dimension_mismatch_is_rejected() {
        let net = line_net(1);
        let mut sc = scenario();
        sc.pd_mw.push(1.0);
        assert!(build_tnep(&net, &[sc], &CostConfig::default()).is_err());
        assert!(build_tnep(&net, &[], &CostConfig::default()).is_err());
    }

    #[test]
    fn parse_kind() {
        assert_eq!("FACETS".parse::<FormulationKind>().unwrap(), FormulationKind::Facets);
        assert!("milp".parse::<FormulationKind>().is_err());
    }
}

//! Solution checks and plan summaries.
//!
//! [`validate_solution`] re-derives every constraint family from the network,
//! the scenarios and the formulation kind. It never looks at the rows of a
//! built model, so it is an independent check on the builders.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{
    branch_angle_limits, facts_params, names, BigMMode, BigMPolicy, BuildOptions,
    DisjunctBlockParams, FormulationKind,
};
use crate::grid::{CostConfig, Network, Scenario};
use crate::milp::SolutionRecord;
use crate::polyhedra::{block_rows, check_point_in_disjunction, DisjunctPoint, Membership};

pub const FAMILIES: [&str; 9] = [
    "bounds",
    "balance",
    "flow",
    "thermal",
    "angle",
    "bigm",
    "facet",
    "disjunction",
    "integrality",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub checked: usize,
    pub max_violation: f64,
    /// Where the largest violation occurred.
    pub worst: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub formulation: FormulationKind,
    pub tol: f64,
    pub families: BTreeMap<String, FamilyReport>,
    /// Branch-scenario blocks outside every disjunct.
    pub outside_disjunction: usize,
    pub pass: bool,
}

impl ValidationReport {
    pub fn failed_families(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .families
            .iter()
            .filter(|(_, f)| f.max_violation > self.tol)
            .map(|(k, _)| k.as_str())
            .collect();
        if self.outside_disjunction > 0 && !out.contains(&"disjunction") {
            out.push("disjunction");
        }
        out
    }

    pub fn max_violation(&self, family: &str) -> f64 {
        self.families.get(family).map_or(0.0, |f| f.max_violation)
    }
}

struct Checker {
    families: BTreeMap<String, FamilyReport>,
}

impl Checker {
    fn note(&mut self, family: &str, violation: f64, at: impl FnOnce() -> String) {
        let f = self
            .families
            .get_mut(family)
            .expect("family registered up front");
        f.checked += 1;
        let v = if violation.is_nan() { f64::INFINITY } else { violation.max(0.0) };
        if v > f.max_violation || (f.worst.is_none() && v > 0.0) {
            f.max_violation = v;
            f.worst = Some(at());
        }
    }

    fn range(&mut self, family: &str, v: f64, lo: f64, hi: f64, at: impl FnOnce() -> String) {
        self.note(family, (lo - v).max(v - hi), at);
    }
}

fn value(sol: &SolutionRecord, name: &str) -> Result<f64> {
    sol.value(name)
        .ok_or_else(|| Error::Precondition(format!("solution has no value for {name}")))
}

fn frac_dist(v: f64) -> f64 {
    (v - v.round()).abs()
}

/// Re-evaluates every constraint family of `kind` at `sol`. Violations are
/// absolute (MW, rad, or unit-free for binaries); the disjunction family
/// divides flow residuals by `max(1, |dB_min|, |dB_max|)`.
pub fn validate_solution(
    net: &Network,
    scenarios: &[Scenario],
    kind: FormulationKind,
    opts: &BuildOptions,
    sol: &SolutionRecord,
    tol: f64,
) -> Result<ValidationReport> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let mut ck = Checker {
        families: FAMILIES
            .iter()
            .map(|f| {
                (
                    f.to_string(),
                    FamilyReport {
                        checked: 0,
                        max_violation: 0.0,
                        worst: None,
                    },
                )
            })
            .collect(),
    };
    let facts = facts_params(net)?;
    let policy = BigMPolicy::new(
        net,
        if kind == FormulationKind::Fbsmi {
            BigMMode::PerBranch
        } else {
            opts.bigm
        },
    );
    let mut outside = 0usize;

    let mut gamma = Vec::with_capacity(net.n_branches());
    let mut psi = Vec::with_capacity(net.n_branches());
    for br in &net.branches {
        let g = value(sol, &names::gamma(br.id))?;
        ck.range("bounds", g, 0.0, f64::from(br.max_upgrades), || names::gamma(br.id));
        ck.note("integrality", frac_dist(g), || names::gamma(br.id));
        gamma.push(g);
        if kind.has_facts() {
            let p = value(sol, &names::psi(br.id))?;
            let hi = if br.tcsc_allowed { 1.0 } else { 0.0 };
            ck.range("bounds", p, 0.0, hi, || names::psi(br.id));
            ck.note("integrality", frac_dist(p), || names::psi(br.id));
            psi.push(p);
        }
    }

    for (s, sc) in scenarios.iter().enumerate() {
        let mut pg = Vec::with_capacity(net.n_generators());
        for g in &net.generators {
            let v = value(sol, &names::pg(g.id, s))?;
            ck.range("bounds", v, sc.pmin_mw[g.id], sc.pmax_mw[g.id], || names::pg(g.id, s));
            pg.push(v);
        }
        let mut theta = Vec::with_capacity(net.n_buses());
        let mut injection = vec![0.0; net.n_buses()];
        for bus in &net.buses {
            let i = bus.id;
            let t = value(sol, &names::theta(i, s))?;
            if i == 0 {
                ck.note("bounds", t.abs(), || names::theta(i, s));
            }
            theta.push(t);
            let xp = value(sol, &names::xi_plus(i, s))?;
            let xm = value(sol, &names::xi_minus(i, s))?;
            ck.note("bounds", -xp, || names::xi_plus(i, s));
            ck.note("bounds", -xm, || names::xi_minus(i, s));
            injection[i] += xp - xm;
        }
        for g in &net.generators {
            injection[g.bus] += pg[g.id];
        }

        for br in &net.branches {
            let e = br.id;
            let pf = value(sol, &names::pf(e, s))?;
            injection[br.from_bus] -= pf;
            injection[br.to_bus] += pf;
            let b = net.susceptance_mw(br);
            let diff = theta[br.to_bus] - theta[br.from_bus];
            let dpf = if kind.has_facts() {
                value(sol, &names::dpf(e, s))?
            } else {
                0.0
            };
            ck.note("flow", (pf - b * diff - dpf).abs(), || names::pf(e, s));
            let cap = br.thermal_limit_mw + br.upgrade_increment_mw * gamma[e];
            ck.note("thermal", pf.abs() - cap, || names::pf(e, s));
            let (tl, th) = branch_angle_limits(net, &facts, kind, opts.tighten_bounds, e);
            ck.range("angle", diff, tl, th, || format!("branch {e} scenario {s}"));
            if !kind.has_facts() {
                continue;
            }

            let fp = facts[e];
            let params = DisjunctBlockParams {
                theta_min: tl,
                theta_max: th,
                db_min: fp.db_min,
                db_max: fp.db_max,
                flow_cap: br.flow_cap_mw(),
            };
            let p = psi[e];
            let (zp, zm) = if kind == FormulationKind::Facets {
                let zp = value(sol, &names::z_plus(e, s))?;
                let zm = value(sol, &names::z_minus(e, s))?;
                let hi = if br.tcsc_allowed { 1.0 } else { 0.0 };
                ck.range("bounds", zp, 0.0, hi, || names::z_plus(e, s));
                ck.range("bounds", zm, 0.0, hi, || names::z_minus(e, s));
                ck.note("integrality", frac_dist(zp), || names::z_plus(e, s));
                ck.note("integrality", frac_dist(zm), || names::z_minus(e, s));
                let coords = [p, zp, zm, 0.0, diff, dpf];
                for row in block_rows(&params, opts.emit_eq22) {
                    ck.note("facet", row.violation(&coords), || {
                        format!("{} at branch {e} scenario {s}", row.name)
                    });
                }
                (zp, zm)
            } else {
                let z = value(sol, &names::z(e, s))?;
                let hi = if br.tcsc_allowed { 1.0 } else { 0.0 };
                ck.range("bounds", z, 0.0, hi, || names::z(e, s));
                ck.note("integrality", frac_dist(z), || names::z(e, s));
                let m = policy.value(br);
                let at = || format!("branch {e} scenario {s}");
                ck.note("bigm", (fp.db_min * diff + m * z - m) - dpf, at);
                ck.note("bigm", dpf - (fp.db_max * diff - m * z + m), at);
                ck.note("bigm", (fp.db_max * diff - m * z) - dpf, at);
                ck.note("bigm", dpf - (fp.db_min * diff + m * z), at);
                ck.note("bigm", dpf.abs() - m * p, at);
                // Sign binary only matters once a device is installed.
                if p.round() == 1.0 {
                    if z.round() == 1.0 {
                        (1.0, 0.0)
                    } else {
                        (0.0, 1.0)
                    }
                } else {
                    (0.0, 0.0)
                }
            };

            let point = DisjunctPoint::new(p, zp, zm, diff, dpf);
            let scale = fp.db_min.abs().max(fp.db_max.abs()).max(1.0);
            let pattern = (p.round(), zp.round(), zm.round());
            let v = if pattern == (0.0, 0.0, 0.0) {
                dpf.abs() / scale
            } else if pattern == (1.0, 1.0, 0.0) {
                (-diff)
                    .max((fp.db_min * diff - dpf) / scale)
                    .max((dpf - fp.db_max * diff) / scale)
            } else if pattern == (1.0, 0.0, 1.0) {
                diff.max((fp.db_max * diff - dpf) / scale)
                    .max((dpf - fp.db_min * diff) / scale)
            } else {
                1.0
            };
            ck.note("disjunction", v, || format!("branch {e} scenario {s}"));
            if let Ok(Membership::None) = check_point_in_disjunction(&point, &params, tol) {
                outside += 1;
            }
        }
        for bus in &net.buses {
            let i = bus.id;
            ck.note("balance", (injection[i] - sc.pd_mw[i]).abs(), || format!("bus {i} scenario {s}"));
        }
    }

    let failed = ck.families.values().any(|f| f.max_violation > tol);
    Ok(ValidationReport {
        formulation: kind,
        tol,
        families: ck.families,
        outside_disjunction: outside,
        pass: !failed && outside == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub total_cost: f64,
    pub capacity_cost: f64,
    pub tcsc_cost: f64,
    /// Summed over scenarios, all generators.
    pub generation_cost: f64,
    pub nonrenewable_generation_cost: f64,
    /// Summed over scenarios, before the `1/S` weight.
    pub imbalance_penalty: f64,
    pub unserved_mwh: f64,
    pub overserved_mwh: f64,
    pub curtailed_mwh: f64,
    pub unserved_mwh_mean: f64,
    pub overserved_mwh_mean: f64,
    pub curtailed_mwh_mean: f64,
    /// Upgrade level to number of branches at that level (levels >= 1).
    pub upgrades_by_level: BTreeMap<u32, usize>,
    pub upgraded_mw: f64,
    pub tcsc_count: usize,
    pub n_scenarios: usize,
}

/// Cost and energy decomposition. TCSC variables absent from `sol` count as
/// zero so TNEP plans summarise too.
pub fn summarize_plan(
    net: &Network,
    scenarios: &[Scenario],
    costs: &CostConfig,
    sol: &SolutionRecord,
) -> Result<PlanSummary> {
    if scenarios.is_empty() {
        return Err(Error::Precondition("at least one scenario is required".into()));
    }
    let n_s = scenarios.len() as f64;
    let mut out = PlanSummary {
        total_cost: 0.0,
        capacity_cost: 0.0,
        tcsc_cost: 0.0,
        generation_cost: 0.0,
        nonrenewable_generation_cost: 0.0,
        imbalance_penalty: 0.0,
        unserved_mwh: 0.0,
        overserved_mwh: 0.0,
        curtailed_mwh: 0.0,
        unserved_mwh_mean: 0.0,
        overserved_mwh_mean: 0.0,
        curtailed_mwh_mean: 0.0,
        upgrades_by_level: BTreeMap::new(),
        upgraded_mw: 0.0,
        tcsc_count: 0,
        n_scenarios: scenarios.len(),
    };
    for br in &net.branches {
        let g = value(sol, &names::gamma(br.id))?;
        out.capacity_cost += costs.capacity_cost_per_mw_km * br.length_km * br.upgrade_increment_mw * g;
        out.upgraded_mw += br.upgrade_increment_mw * g;
        let level = g.round();
        if level >= 1.0 {
            *out.upgrades_by_level.entry(level as u32).or_default() += 1;
        }
        let p = sol.value(&names::psi(br.id)).unwrap_or(0.0);
        out.tcsc_cost += costs.tcsc_cost_per_mva * br.thermal_limit_mw * p;
        if p.round() == 1.0 {
            out.tcsc_count += 1;
        }
    }
    for (s, sc) in scenarios.iter().enumerate() {
        for g in &net.generators {
            let v = value(sol, &names::pg(g.id, s))?;
            out.generation_cost += g.cost_per_mwh * v;
            if g.is_renewable() {
                out.curtailed_mwh += (sc.pmax_mw[g.id] - v).max(0.0);
            } else {
                out.nonrenewable_generation_cost += g.cost_per_mwh * v;
            }
        }
        for bus in &net.buses {
            out.unserved_mwh += value(sol, &names::xi_plus(bus.id, s))?;
            out.overserved_mwh += value(sol, &names::xi_minus(bus.id, s))?;
        }
    }
    out.imbalance_penalty = costs.imbalance_penalty_per_mwh * (out.unserved_mwh + out.overserved_mwh);
    out.unserved_mwh_mean = out.unserved_mwh / n_s;
    out.overserved_mwh_mean = out.overserved_mwh / n_s;
    out.curtailed_mwh_mean = out.curtailed_mwh / n_s;
    out.total_cost =
        out.capacity_cost + out.tcsc_cost + (out.generation_cost + out.imbalance_penalty) / n_s;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoMetric {
    /// Scenario-mean unserved energy per bus.
    Unserved,
    /// Scenario-mean renewable curtailment per bus.
    Curtailed,
    /// Upgrade level per branch midpoint.
    Investment,
    /// TCSC flag per branch midpoint.
    Tcsc,
}

impl FromStr for GeoMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unserved" => Ok(GeoMetric::Unserved),
            "curtailed" => Ok(GeoMetric::Curtailed),
            "investment" => Ok(GeoMetric::Investment),
            "tcsc" => Ok(GeoMetric::Tcsc),
            _ => Err(Error::Precondition(format!("unknown metric '{s}'"))),
        }
    }
}

impl fmt::Display for GeoMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeoMetric::Unserved => "unserved",
            GeoMetric::Curtailed => "curtailed",
            GeoMetric::Investment => "investment",
            GeoMetric::Tcsc => "tcsc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoRow {
    pub entity_id: usize,
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

pub fn geo_rows(
    net: &Network,
    scenarios: &[Scenario],
    sol: &SolutionRecord,
    metric: GeoMetric,
) -> Result<Vec<GeoRow>> {
    let missing: Vec<String> = net
        .buses
        .iter()
        .filter(|b| b.x_coord.is_none() || b.y_coord.is_none())
        .map(|b| b.id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Precondition(format!(
            "buses without coordinates: {}",
            missing.join(", ")
        )));
    }
    if scenarios.is_empty() {
        return Err(Error::Precondition("at least one scenario is required".into()));
    }
    let xy = |i: usize| {
        let b = &net.buses[i];
        (b.x_coord.unwrap_or_default(), b.y_coord.unwrap_or_default())
    };
    let n_s = scenarios.len() as f64;
    let mut rows = Vec::new();
    match metric {
        GeoMetric::Unserved | GeoMetric::Curtailed => {
            let mut acc = vec![0.0; net.n_buses()];
            for (s, sc) in scenarios.iter().enumerate() {
                if metric == GeoMetric::Unserved {
                    for b in &net.buses {
                        acc[b.id] += value(sol, &names::xi_plus(b.id, s))?;
                    }
                } else {
                    for g in net.generators.iter().filter(|g| g.is_renewable()) {
                        let v = value(sol, &names::pg(g.id, s))?;
                        acc[g.bus] += (sc.pmax_mw[g.id] - v).max(0.0);
                    }
                }
            }
            for b in &net.buses {
                let (x, y) = xy(b.id);
                rows.push(GeoRow {
                    entity_id: b.id,
                    x,
                    y,
                    value: acc[b.id] / n_s,
                });
            }
        }
        GeoMetric::Investment | GeoMetric::Tcsc => {
            for br in &net.branches {
                let (x0, y0) = xy(br.from_bus);
                let (x1, y1) = xy(br.to_bus);
                let value = if metric == GeoMetric::Investment {
                    value(sol, &names::gamma(br.id))?
                } else {
                    sol.value(&names::psi(br.id)).unwrap_or(0.0)
                };
                rows.push(GeoRow {
                    entity_id: br.id,
                    x: 0.5 * (x0 + x1),
                    y: 0.5 * (y0 + y1),
                    value,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes `entity_id,x,y,value`.
pub fn emit_geo_csv(
    net: &Network,
    scenarios: &[Scenario],
    sol: &SolutionRecord,
    metric: GeoMetric,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let rows = geo_rows(net, scenarios, sol, metric)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    for r in &rows {
        w.serialize(r)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

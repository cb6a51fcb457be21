//! Grid data model: buses, branches with upgrade and TCSC parameters,
//! generators, plus the time-series and scenario machinery built on top.
//!
//! Unit convention: angles in radians, power in MW, reactance in per-unit on
//! `base_mva`. The susceptance used in flow equations is `base_mva / X`, so a
//! flow in MW is obtained directly as `B * theta`.

mod series;
mod synth;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use series::{
    scale_series, select_scenarios, Criterion, Hour, HourlyTimeSeries, Scenario, SeriesFactors,
};
pub use synth::{synth_network, synth_network_with, SynthSpec};

fn default_base_mva() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub x_coord: Option<f64>,
    #[serde(default)]
    pub y_coord: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    pub reactance_pu: f64,
    pub thermal_limit_mw: f64,
    pub length_km: f64,
    pub angle_min_rad: f64,
    pub angle_max_rad: f64,
    pub upgrade_increment_mw: f64,
    pub max_upgrades: u32,
    pub tcsc_allowed: bool,
    pub tcsc_dx_min_frac: f64,
    pub tcsc_dx_max_frac: f64,
}

impl Branch {
    /// Thermal limit after every available upgrade, `pf_max + m * delta_c`.
    pub fn flow_cap_mw(&self) -> f64 {
        self.thermal_limit_mw + f64::from(self.max_upgrades) * self.upgrade_increment_mw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Renewable,
    Nonrenewable,
}

/// Resource tag for renewable units; wind and solar are scaled separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technology {
    Wind,
    Solar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    pub kind: GeneratorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technology: Option<Technology>,
    pub pmin_mw: f64,
    pub pmax_mw: f64,
    pub cost_per_mwh: f64,
}

impl Generator {
    pub fn is_renewable(&self) -> bool {
        self.kind == GeneratorKind::Renewable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

impl Network {
    /// Susceptance of a branch in MW/rad.
    pub fn susceptance_mw(&self, branch: &Branch) -> f64 {
        self.base_mva / branch.reactance_pu
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn renewable_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.generators
            .iter()
            .filter(|g| g.is_renewable())
            .map(|g| g.id)
    }

    /// Checks every structural and parametric invariant, naming the first
    /// offending entity.
    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(Error::invalid("network", "base_mva must be positive"));
        }
        if self.buses.is_empty() {
            return Err(Error::invalid("network", "at least one bus is required"));
        }
        for (k, bus) in self.buses.iter().enumerate() {
            if bus.id != k {
                return Err(Error::invalid(
                    format!("bus {}", bus.id),
                    format!("bus ids must be dense and ordered; expected {k}"),
                ));
            }
        }
        let n = self.buses.len();
        for (k, br) in self.branches.iter().enumerate() {
            let entity = format!("branch {}", br.id);
            if br.id != k {
                return Err(Error::invalid(entity, format!("expected id {k}")));
            }
            if br.from_bus >= n || br.to_bus >= n {
                return Err(Error::invalid(
                    entity,
                    format!(
                        "endpoint ({}, {}) references a missing bus; network has {n} buses",
                        br.from_bus, br.to_bus
                    ),
                ));
            }
            if br.from_bus == br.to_bus {
                return Err(Error::invalid(entity, "from_bus equals to_bus"));
            }
            if !(br.reactance_pu.is_finite() && br.reactance_pu > 0.0) {
                return Err(Error::invalid(entity, "reactance_pu must be positive"));
            }
            if !(br.thermal_limit_mw.is_finite() && br.thermal_limit_mw > 0.0) {
                return Err(Error::invalid(entity, "thermal_limit_mw must be positive"));
            }
            if !(br.length_km.is_finite() && br.length_km >= 0.0) {
                return Err(Error::invalid(entity, "length_km must be non-negative"));
            }
            if !(br.angle_min_rad < 0.0 && br.angle_max_rad > 0.0)
                || !br.angle_min_rad.is_finite()
                || !br.angle_max_rad.is_finite()
            {
                return Err(Error::invalid(
                    entity,
                    "angle limits must satisfy angle_min_rad < 0 < angle_max_rad",
                ));
            }
            if !(br.upgrade_increment_mw.is_finite() && br.upgrade_increment_mw > 0.0) {
                return Err(Error::invalid(entity, "upgrade_increment_mw must be positive"));
            }
            if !(br.tcsc_dx_min_frac > -1.0) {
                return Err(Error::invalid(
                    entity,
                    "tcsc_dx_min_frac must exceed -1 so that X + dX stays positive",
                ));
            }
            if !(br.tcsc_dx_min_frac <= 0.0 && br.tcsc_dx_max_frac >= 0.0)
                || !br.tcsc_dx_max_frac.is_finite()
            {
                return Err(Error::invalid(
                    entity,
                    "tcsc fractions must satisfy dx_min_frac <= 0 <= dx_max_frac",
                ));
            }
        }
        let mut seen = HashSet::new();
        for (k, g) in self.generators.iter().enumerate() {
            let entity = format!("generator {}", g.id);
            if g.id != k || !seen.insert(g.id) {
                return Err(Error::invalid(entity, format!("expected id {k}")));
            }
            if g.bus >= n {
                return Err(Error::invalid(
                    entity,
                    format!("bus {} does not exist", g.bus),
                ));
            }
            if !(g.pmin_mw >= 0.0 && g.pmin_mw <= g.pmax_mw && g.pmax_mw.is_finite()) {
                return Err(Error::invalid(entity, "limits must satisfy 0 <= pmin <= pmax"));
            }
            if !g.cost_per_mwh.is_finite() {
                return Err(Error::invalid(entity, "cost_per_mwh must be finite"));
            }
            if g.is_renewable() && (g.pmin_mw != 0.0 || g.cost_per_mwh != 0.0) {
                return Err(Error::invalid(
                    entity,
                    "renewable units must have pmin 0 and zero cost",
                ));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let net: Network = serde_json::from_str(text).map_err(|e| Error::parse("network", e))?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }
}

/// Reads and validates a network from the JSON grid schema.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let net: Network = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    net.validate()?;
    Ok(net)
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, net.to_json_string()).map_err(|e| Error::io(path, e))
}

/// Cost data for the planning objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    /// Penalty λ on unserved and overserved energy, $/MWh.
    pub imbalance_penalty_per_mwh: f64,
    /// Capacity upgrade rate, $/MW-km.
    pub capacity_cost_per_mw_km: f64,
    /// TCSC rate, $/MVA of the branch thermal rating.
    pub tcsc_cost_per_mva: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            imbalance_penalty_per_mwh: 50_000.0,
            capacity_cost_per_mw_km: 124.0,
            tcsc_cost_per_mva: 2_200.0,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.imbalance_penalty_per_mwh)
            && ok(self.capacity_cost_per_mw_km)
            && ok(self.tcsc_cost_per_mva))
        {
            return Err(Error::invalid("cost config", "all rates must be strictly positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_bus_json(to_bus: usize) -> String {
        format!(
            r#"{{
  "base_mva": 100,
  "buses": [{{"id": 0, "name": "a"}}, {{"id": 1, "name": "b"}}],
  "branches": [{{
    "id": 0, "from_bus": 0, "to_bus": {to_bus}, "reactance_pu": 0.1,
    "thermal_limit_mw": 100, "length_km": 1, "angle_min_rad": -0.6, "angle_max_rad": 0.6,
    "upgrade_increment_mw": 50, "max_upgrades": 1, "tcsc_allowed": true,
    "tcsc_dx_min_frac": -0.4, "tcsc_dx_max_frac": 0.2
  }}],
  "generators": [{{"id": 0, "bus": 0, "kind": "nonrenewable", "pmin_mw": 0, "pmax_mw": 200, "cost_per_mwh": 10}}]
}}"#
        )
    }

    #[test]
    fn loads_minimal_two_bus_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        std::fs::write(&path, two_bus_json(1)).unwrap();
        let net = load_network(&path).unwrap();
        assert_eq!(net.n_buses(), 2);
        assert_eq!(net.n_branches(), 1);
        assert_eq!(net.susceptance_mw(&net.branches[0]), 1000.0);
        assert_eq!(net.branches[0].flow_cap_mw(), 150.0);
    }

    #[test]
    fn dangling_bus_names_the_branch() {
        let err = Network::from_json_str(&two_bus_json(99)).unwrap_err();
        match err {
            Error::Validation { entity, .. } => assert_eq!(entity, "branch 0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_file_is_a_parse_error() {
        let err = Network::from_json_str("{ not json").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn non_positive_reactance_is_rejected() {
        let text = two_bus_json(1).replace("\"reactance_pu\": 0.1", "\"reactance_pu\": 0.0");
        let err = Network::from_json_str(&text).unwrap_err();
        assert!(err.to_string().contains("branch 0"), "{err}");
    }

    #[test]
    fn renewable_with_cost_is_rejected() {
        let text = two_bus_json(1).replace("\"nonrenewable\"", "\"renewable\"");
        let err = Network::from_json_str(&text).unwrap_err();
        assert!(err.to_string().contains("generator 0"), "{err}");
    }

    #[test]
    fn table_one_costs_are_the_default() {
        let c = CostConfig::default();
        assert_eq!(c.imbalance_penalty_per_mwh, 50_000.0);
        assert_eq!(c.capacity_cost_per_mw_km, 124.0);
        assert_eq!(c.tcsc_cost_per_mva, 2_200.0);
        c.validate().unwrap();
    }
}

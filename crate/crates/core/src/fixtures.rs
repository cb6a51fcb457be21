//! Catalogued small instances and a seeded generator of random ones.
//!
//! These back the test suites and the CLI's `--fixture` option. Every
//! instance is small enough for exhaustive enumeration by
//! [`brute_force_milp`](crate::refsolver::brute_force_milp).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::FormulationKind;
use crate::grid::{Branch, Bus, CostConfig, Generator, GeneratorKind, Network, Scenario, Technology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub network: Network,
    pub scenarios: Vec<Scenario>,
    pub costs: CostConfig,
}

impl Instance {
    /// Integer variables left free by their bounds in formulation `kind`.
    pub fn free_integers(&self, kind: FormulationKind) -> usize {
        let s = self.scenarios.len();
        let upgradable = self.network.branches.iter().filter(|b| b.max_upgrades > 0).count();
        let tcsc = self.network.branches.iter().filter(|b| b.tcsc_allowed).count();
        upgradable
            + match kind {
                FormulationKind::Tnep => 0,
                FormulationKind::Fbsm | FormulationKind::Fbsmi => tcsc + tcsc * s,
                FormulationKind::Facets => tcsc + 2 * tcsc * s,
            }
    }
}

pub const FIXTURE_NAMES: [&str; 2] = ["two-bus", "congestion-triangle"];

pub fn by_name(name: &str) -> Result<Instance> {
    match name {
        "two-bus" => Ok(two_bus()),
        "congestion-triangle" => Ok(congestion_triangle()),
        _ => Err(Error::Precondition(format!(
            "unknown fixture '{name}' (known: {})",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

fn bus(id: usize, x: f64, y: f64) -> Bus {
    Bus {
        id,
        name: format!("bus{id}"),
        x_coord: Some(x),
        y_coord: Some(y),
    }
}

fn line(id: usize, from_bus: usize, to_bus: usize, x: f64, cap: f64) -> Branch {
    Branch {
        id,
        from_bus,
        to_bus,
        reactance_pu: x,
        thermal_limit_mw: cap,
        length_km: 1.0,
        angle_min_rad: -0.6,
        angle_max_rad: 0.6,
        upgrade_increment_mw: 50.0,
        max_upgrades: 0,
        tcsc_allowed: false,
        tcsc_dx_min_frac: -0.4,
        tcsc_dx_max_frac: 0.2,
    }
}

fn thermal(id: usize, bus: usize, pmax: f64, cost: f64) -> Generator {
    Generator {
        id,
        bus,
        kind: GeneratorKind::Nonrenewable,
        technology: None,
        pmin_mw: 0.0,
        pmax_mw: pmax,
        cost_per_mwh: cost,
    }
}

fn scenario(id: &str, net: &Network, pd_mw: Vec<f64>) -> Scenario {
    Scenario {
        id: id.into(),
        hour: None,
        season: None,
        criterion: None,
        pd_mw,
        pmin_mw: net.generators.iter().map(|g| g.pmin_mw).collect(),
        pmax_mw: net.generators.iter().map(|g| g.pmax_mw).collect(),
    }
}

/// One 100 MW line that can be upgraded once by 50 MW for $100 to carry a
/// 150 MW load. Optimum: upgrade, serve everything, objective 1,600.
pub fn two_bus() -> Instance {
    let mut br = line(0, 0, 1, 0.1, 100.0);
    br.max_upgrades = 1;
    let network = Network {
        base_mva: 100.0,
        buses: vec![bus(0, 0.0, 0.0), bus(1, 1.0, 0.0)],
        branches: vec![br],
        generators: vec![thermal(0, 0, 200.0, 10.0)],
    };
    let scenarios = vec![scenario("base", &network, vec![0.0, 150.0])];
    Instance {
        name: "two-bus".into(),
        network,
        scenarios,
        costs: CostConfig {
            imbalance_penalty_per_mwh: 1000.0,
            capacity_cost_per_mw_km: 2.0,
            tcsc_cost_per_mva: 1.0,
        },
    }
}

/// A 200 MW load fed through a direct line and a two-line detour, all
/// 100 MW and 0.1 pu. The direct line congests first and takes two thirds
/// of the flow, so without control only 150 MW arrive. A cheap TCSC on the
/// direct line pushes flow onto the detour. No upgrades are offered.
pub fn congestion_triangle() -> Instance {
    let mut direct = line(0, 0, 2, 0.1, 100.0);
    direct.tcsc_allowed = true;
    let mut first = line(1, 0, 1, 0.1, 100.0);
    first.tcsc_allowed = true;
    let network = Network {
        base_mva: 100.0,
        buses: vec![bus(0, 0.0, 0.0), bus(1, 1.0, 1.0), bus(2, 2.0, 0.0)],
        branches: vec![direct, first, line(2, 1, 2, 0.1, 100.0)],
        generators: vec![thermal(0, 0, 300.0, 10.0)],
    };
    let scenarios = vec![scenario("peak", &network, vec![0.0, 0.0, 200.0])];
    Instance {
        name: "congestion-triangle".into(),
        network,
        scenarios,
        costs: CostConfig {
            imbalance_penalty_per_mwh: 1000.0,
            capacity_cost_per_mw_km: 2.0,
            tcsc_cost_per_mva: 1.0,
        },
    }
}

/// Most free integer variables a random instance has in any formulation.
pub const RANDOM_MAX_FREE_INTEGERS: usize = 12;

/// Random instance with 2 to 5 buses, up to 7 branches, 1 or 2 scenarios and
/// at most [`RANDOM_MAX_FREE_INTEGERS`] free integers in every formulation.
/// TCSC reactance ranges stay within `[-0.4 X, 0.2 X]`.
pub fn random_small_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_buses = rng.gen_range(2..=5usize);
    let n_branches = rng.gen_range(n_buses - 1..=7usize);
    let n_scen = rng.gen_range(1..=2usize);

    let buses: Vec<Bus> = (0..n_buses)
        .map(|i| bus(i, rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
        .collect();
    let mut branches = Vec::with_capacity(n_branches);
    for e in 0..n_branches {
        let (from, to) = if e + 1 < n_buses {
            (rng.gen_range(0..=e), e + 1)
        } else {
            let a = rng.gen_range(0..n_buses);
            let mut b = rng.gen_range(0..n_buses - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        };
        let mut br = line(e, from, to, rng.gen_range(0.05..0.3), rng.gen_range(20.0..120.0));
        br.length_km = rng.gen_range(1.0..50.0);
        br.angle_max_rad = rng.gen_range(0.2..0.8);
        br.angle_min_rad = -rng.gen_range(0.2..0.8);
        br.upgrade_increment_mw = rng.gen_range(10.0..60.0);
        br.max_upgrades = if rng.gen_bool(0.4) { rng.gen_range(1..=2) } else { 0 };
        br.tcsc_dx_min_frac = rng.gen_range(-0.4..-0.05);
        br.tcsc_dx_max_frac = rng.gen_range(0.02..0.2);
        branches.push(br);
    }
    let n_tcsc = rng.gen_range(0..=2usize).min(n_branches);
    let mut order: Vec<usize> = (0..n_branches).collect();
    for k in 0..n_tcsc {
        let pick = rng.gen_range(k..n_branches);
        order.swap(k, pick);
        branches[order[k]].tcsc_allowed = true;
    }

    let n_gens = rng.gen_range(1..=3usize);
    let mut generators = Vec::with_capacity(n_gens);
    for g in 0..n_gens {
        let mut gen = thermal(g, rng.gen_range(0..n_buses), rng.gen_range(30.0..200.0), rng.gen_range(5.0..50.0));
        if g > 0 && rng.gen_bool(0.3) {
            gen.kind = GeneratorKind::Renewable;
            gen.technology = Some(if rng.gen_bool(0.5) { Technology::Wind } else { Technology::Solar });
            gen.cost_per_mwh = 0.0;
        }
        generators.push(gen);
    }
    let network = Network {
        base_mva: 100.0,
        buses,
        branches,
        generators,
    };
    let scenarios = (0..n_scen)
        .map(|s| {
            let pd_mw = (0..n_buses)
                .map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..100.0) } else { 0.0 })
                .collect();
            let mut sc = scenario(&format!("r{s}"), &network, pd_mw);
            for g in &network.generators {
                if g.is_renewable() {
                    sc.pmax_mw[g.id] = g.pmax_mw * rng.gen_range(0.0..1.0);
                }
            }
            sc
        })
        .collect();
    let costs = CostConfig {
        imbalance_penalty_per_mwh: rng.gen_range(200.0..2000.0),
        capacity_cost_per_mw_km: rng.gen_range(0.05..3.0),
        tcsc_cost_per_mva: rng.gen_range(0.05..3.0),
    };
    let mut inst = Instance {
        name: format!("random-{seed}"),
        network,
        scenarios,
        costs,
    };
    // Shed integer freedom until enumeration stays small.
    while inst.free_integers(FormulationKind::Facets) > RANDOM_MAX_FREE_INTEGERS {
        if let Some(br) = inst.network.branches.iter_mut().rev().find(|b| b.max_upgrades > 0) {
            br.max_upgrades = 0;
        } else if let Some(br) = inst.network.branches.iter_mut().rev().find(|b| b.tcsc_allowed) {
            br.tcsc_allowed = false;
        }
    }
    inst
}

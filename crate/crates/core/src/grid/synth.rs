//! Seeded synthetic networks and hourly series.
//!
//! Drawn ranges: reactance 0.01..0.2 pu, thermal limit 100..2000 MW,
//! branch length from planar coordinates on an 800 km square, three 300 MW
//! upgrade levels per branch, TCSC reactance range (-0.4 X, +0.2 X).

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Branch, Bus, Generator, GeneratorKind, Hour, HourlyTimeSeries, Network, Technology};
use crate::error::{Error, Result};

const AREA_KM: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_buses: usize,
    pub n_branches: usize,
    pub n_gens: usize,
    pub renewable_fraction: f64,
    /// Length of the hourly series, starting 2021-01-01T00:00.
    pub n_hours: usize,
}

impl SynthSpec {
    pub fn new(n_buses: usize, n_branches: usize, n_gens: usize, renewable_fraction: f64) -> Self {
        SynthSpec {
            n_buses,
            n_branches,
            n_gens,
            renewable_fraction,
            n_hours: 8760,
        }
    }

    /// 123 buses, 255 branches, 138 thermal and 154 renewable units.
    pub fn texas() -> Self {
        SynthSpec::new(123, 255, 292, 154.0 / 292.0)
    }

    pub fn n_renewable(&self) -> usize {
        (self.n_gens as f64 * self.renewable_fraction).round() as usize
    }
}

/// Synthetic network plus a full-year hourly series, deterministic in `seed`.
pub fn synth_network(
    seed: u64,
    n_buses: usize,
    n_branches: usize,
    n_gens: usize,
    renewable_fraction: f64,
) -> Result<(Network, HourlyTimeSeries)> {
    synth_network_with(seed, &SynthSpec::new(n_buses, n_branches, n_gens, renewable_fraction))
}

pub fn synth_network_with(seed: u64, spec: &SynthSpec) -> Result<(Network, HourlyTimeSeries)> {
    if spec.n_buses == 0 {
        return Err(Error::Precondition("at least one bus is required".into()));
    }
    if spec.n_branches + 1 < spec.n_buses {
        return Err(Error::Precondition(format!(
            "{} branches cannot connect {} buses (need at least {})",
            spec.n_branches,
            spec.n_buses,
            spec.n_buses - 1
        )));
    }
    if spec.n_buses == 1 && spec.n_branches > 0 {
        return Err(Error::Precondition("a single bus cannot carry branches".into()));
    }
    if !(0.0..=1.0).contains(&spec.renewable_fraction) {
        return Err(Error::Precondition("renewable_fraction must lie in [0, 1]".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buses: Vec<Bus> = (0..spec.n_buses)
        .map(|id| Bus {
            id,
            name: format!("bus{id}"),
            x_coord: Some(rng.gen_range(0.0..AREA_KM)),
            y_coord: Some(rng.gen_range(0.0..AREA_KM)),
        })
        .collect();
    let dist = |a: usize, b: usize| {
        let (xa, ya) = (buses[a].x_coord.unwrap(), buses[a].y_coord.unwrap());
        let (xb, yb) = (buses[b].x_coord.unwrap(), buses[b].y_coord.unwrap());
        ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt()
    };

    // Tree: each bus joins its nearest predecessor, then random chords.
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(spec.n_branches);
    let mut used = HashSet::new();
    for i in 1..spec.n_buses {
        let j = (0..i)
            .min_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)))
            .unwrap();
        pairs.push((j, i));
        used.insert((j.min(i), j.max(i)));
    }
    let max_simple = spec.n_buses * (spec.n_buses - 1) / 2;
    while pairs.len() < spec.n_branches {
        let a = rng.gen_range(0..spec.n_buses);
        let mut b = rng.gen_range(0..spec.n_buses - 1);
        if b >= a {
            b += 1;
        }
        let key = (a.min(b), a.max(b));
        // Parallel circuits only once every simple pair is taken.
        if used.len() < max_simple && !used.insert(key) {
            continue;
        }
        pairs.push((a, b));
    }

    let branches: Vec<Branch> = pairs
        .into_iter()
        .enumerate()
        .map(|(id, (from_bus, to_bus))| Branch {
            id,
            from_bus,
            to_bus,
            reactance_pu: rng.gen_range(0.01..0.2),
            thermal_limit_mw: rng.gen_range(100.0..2000.0),
            length_km: dist(from_bus, to_bus).max(1.0),
            angle_min_rad: -0.6,
            angle_max_rad: 0.6,
            upgrade_increment_mw: 300.0,
            max_upgrades: 3,
            tcsc_allowed: true,
            tcsc_dx_min_frac: -0.4,
            tcsc_dx_max_frac: 0.2,
        })
        .collect();

    let n_ren = spec.n_renewable();
    let n_thermal = spec.n_gens - n_ren;
    let mut generators = Vec::with_capacity(spec.n_gens);
    for id in 0..spec.n_gens {
        let bus = rng.gen_range(0..spec.n_buses);
        if id < n_thermal {
            generators.push(Generator {
                id,
                bus,
                kind: GeneratorKind::Nonrenewable,
                technology: None,
                pmin_mw: 0.0,
                pmax_mw: rng.gen_range(100.0..1500.0),
                cost_per_mwh: rng.gen_range(15.0..80.0),
            });
        } else {
            let technology = if rng.gen_bool(0.6) {
                Technology::Wind
            } else {
                Technology::Solar
            };
            generators.push(Generator {
                id,
                bus,
                kind: GeneratorKind::Renewable,
                technology: Some(technology),
                pmin_mw: 0.0,
                pmax_mw: rng.gen_range(50.0..600.0),
                cost_per_mwh: 0.0,
            });
        }
    }

    let net = Network {
        base_mva: 100.0,
        buses,
        branches,
        generators,
    };
    let ts = synth_series(&mut rng, &net, spec.n_hours);
    net.validate()?;
    Ok((net, ts))
}

fn season_of(month: u32) -> &'static str {
    match month {
        6..=8 => "summer",
        12 | 1 | 2 => "winter",
        _ => "other",
    }
}

fn synth_series(rng: &mut ChaCha8Rng, net: &Network, n_hours: usize) -> HourlyTimeSeries {
    let start = NaiveDate::from_ymd_opt(2021, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let hours: Vec<Hour> = (0..n_hours)
        .map(|h| {
            let timestamp = start + Duration::hours(h as i64);
            Hour {
                timestamp,
                season: season_of(timestamp.month()).to_string(),
            }
        })
        .collect();

    let thermal_cap: f64 = net
        .generators
        .iter()
        .filter(|g| !g.is_renewable())
        .map(|g| g.pmax_mw)
        .sum();
    let mut base: Vec<f64> = (0..net.n_buses())
        .map(|_| {
            if rng.gen_bool(0.7) {
                rng.gen_range(20.0..400.0)
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = base.iter().sum();
    if total > 0.0 && thermal_cap > 0.0 {
        // Peak demand lands near 80% of thermal capacity.
        let k = 0.8 * thermal_cap / (1.25 * total);
        base.iter_mut().for_each(|b| *b *= k);
    }

    let mut load_mw = vec![Vec::with_capacity(n_hours); net.n_buses()];
    let mut renewable_avail_mw: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let ren: Vec<&Generator> = net.generators.iter().filter(|g| g.is_renewable()).collect();
    for g in &ren {
        renewable_avail_mw.insert(g.id, Vec::with_capacity(n_hours));
    }
    let mut wind_cf: Vec<f64> = ren.iter().map(|_| rng.gen_range(0.2..0.6)).collect();
    let mut regional = 0.4;

    for hour in &hours {
        let hod = f64::from(hour.timestamp.hour());
        let seasonal = match hour.season.as_str() {
            "summer" => 1.15,
            "winter" => 1.05,
            _ => 0.95,
        };
        let daily = 0.8 + 0.2 * (2.0 * PI * (hod - 10.0) / 24.0).sin();
        for (b, row) in load_mw.iter_mut().enumerate() {
            row.push(base[b] * seasonal * daily * rng.gen_range(0.95..1.05));
        }
        regional = (regional + rng.gen_range(-0.08_f64..0.08)).clamp(0.0, 1.0);
        let sun = (PI * (hod - 6.0) / 12.0).sin().max(0.0)
            * if hour.season == "winter" { 0.6 } else { 1.0 };
        for (k, g) in ren.iter().enumerate() {
            let cf = match g.technology {
                Some(Technology::Solar) => sun * rng.gen_range(0.7..1.0),
                _ => {
                    wind_cf[k] = (0.7 * wind_cf[k] + 0.3 * regional + rng.gen_range(-0.1..0.1))
                        .clamp(0.0, 1.0);
                    wind_cf[k]
                }
            };
            renewable_avail_mw.get_mut(&g.id).unwrap().push(g.pmax_mw * cf);
        }
    }

    HourlyTimeSeries {
        hours,
        load_mw,
        renewable_avail_mw,
        pmin_mw: BTreeMap::new(),
        pmax_mw: BTreeMap::new(),
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{Network, Technology};
use crate::error::{Error, Result};

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hour {
    pub timestamp: NaiveDateTime,
    pub season: String,
}

/// Hourly load per bus and availability per renewable generator.
///
/// `pmin_mw` / `pmax_mw` optionally carry per-hour limits for non-renewable
/// units (seasonal derating); absent units keep their base limits.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HourlyTimeSeries {
    pub hours: Vec<Hour>,
    /// Indexed `[bus][hour]`.
    pub load_mw: Vec<Vec<f64>>,
    /// Generator id to hourly availability.
    pub renewable_avail_mw: BTreeMap<usize, Vec<f64>>,
    #[serde(default)]
    pub pmin_mw: BTreeMap<usize, Vec<f64>>,
    #[serde(default)]
    pub pmax_mw: BTreeMap<usize, Vec<f64>>,
}

fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.naive_utc());
    }
    NaiveDateTime::parse_from_str(text, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M"))
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S"))
        .ok()
}

impl HourlyTimeSeries {
    pub fn n_hours(&self) -> usize {
        self.hours.len()
    }

    pub fn total_load(&self, hour: usize) -> f64 {
        self.load_mw.iter().map(|row| row[hour]).sum()
    }

    /// Checks shape and sign invariants, and that every renewable generator
    /// of `net` has an availability row.
    pub fn validate(&self, net: &Network) -> Result<()> {
        let h = self.hours.len();
        if self.load_mw.len() != net.n_buses() {
            return Err(Error::invalid(
                "time series",
                format!(
                    "{} load rows for {} buses",
                    self.load_mw.len(),
                    net.n_buses()
                ),
            ));
        }
        let check_row = |label: String, row: &[f64]| -> Result<()> {
            if row.len() != h {
                return Err(Error::invalid(
                    label,
                    format!("has {} entries, expected {h}", row.len()),
                ));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::invalid(label, format!("non-negative entries required, got {v}")));
            }
            Ok(())
        };
        for (b, row) in self.load_mw.iter().enumerate() {
            check_row(format!("load_{b}"), row)?;
        }
        for g in net.generators.iter().filter(|g| g.is_renewable()) {
            if !self.renewable_avail_mw.contains_key(&g.id) {
                return Err(Error::invalid(
                    format!("generator {}", g.id),
                    "renewable unit has no availability column",
                ));
            }
        }
        for (id, row) in &self.renewable_avail_mw {
            match net.generators.get(*id) {
                Some(g) if g.is_renewable() => {}
                _ => {
                    return Err(Error::invalid(
                        format!("avail_{id}"),
                        "column does not match a renewable generator",
                    ))
                }
            }
            check_row(format!("avail_{id}"), row)?;
        }
        for (prefix, map) in [("pmin", &self.pmin_mw), ("pmax", &self.pmax_mw)] {
            for (id, row) in map {
                match net.generators.get(*id) {
                    Some(g) if !g.is_renewable() => {}
                    _ => {
                        return Err(Error::invalid(
                            format!("{prefix}_{id}"),
                            "column does not match a non-renewable generator",
                        ))
                    }
                }
                check_row(format!("{prefix}_{id}"), row)?;
            }
        }
        Ok(())
    }

    /// Parses the CSV layout: `timestamp,season,load_<bus>...,avail_<gen>...`
    /// with optional `pmin_<gen>` / `pmax_<gen>` columns.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn from_reader<R: std::io::Read>(reader: R, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::parse(origin, e))?.clone();
        if headers.len() < 2 {
            return Err(Error::parse(origin, "expected timestamp and season columns"));
        }
        enum Col {
            Load(usize),
            Avail(usize),
            Pmin(usize),
            Pmax(usize),
        }
        let mut cols = Vec::new();
        for name in headers.iter().skip(2) {
            let (prefix, id) = name
                .split_once('_')
                .ok_or_else(|| Error::parse(origin, format!("unrecognised column '{name}'")))?;
            let id: usize = id
                .parse()
                .map_err(|_| Error::parse(origin, format!("bad id in column '{name}'")))?;
            cols.push(match prefix {
                "load" => Col::Load(id),
                "avail" => Col::Avail(id),
                "pmin" => Col::Pmin(id),
                "pmax" => Col::Pmax(id),
                _ => return Err(Error::parse(origin, format!("unrecognised column '{name}'"))),
            });
        }
        let n_load = cols.iter().filter(|c| matches!(c, Col::Load(_))).count();
        let mut ts = HourlyTimeSeries {
            load_mw: vec![Vec::new(); n_load],
            ..Default::default()
        };
        for c in &cols {
            match c {
                Col::Load(b) if *b >= n_load => {
                    return Err(Error::parse(origin, format!("load columns must cover buses 0..{n_load}")))
                }
                Col::Avail(g) => {
                    ts.renewable_avail_mw.insert(*g, Vec::new());
                }
                Col::Pmin(g) => {
                    ts.pmin_mw.insert(*g, Vec::new());
                }
                Col::Pmax(g) => {
                    ts.pmax_mw.insert(*g, Vec::new());
                }
                _ => {}
            }
        }
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::parse(origin, e))?;
            let timestamp = parse_timestamp(&record[0]).ok_or_else(|| {
                Error::parse(origin, format!("row {}: bad timestamp '{}'", line + 1, &record[0]))
            })?;
            ts.hours.push(Hour {
                timestamp,
                season: record[1].to_string(),
            });
            for (c, field) in cols.iter().zip(record.iter().skip(2)) {
                let v: f64 = field.parse().map_err(|_| {
                    Error::parse(origin, format!("row {}: bad number '{field}'", line + 1))
                })?;
                match c {
                    Col::Load(b) => ts.load_mw[*b].push(v),
                    Col::Avail(g) => ts.renewable_avail_mw.get_mut(g).unwrap().push(v),
                    Col::Pmin(g) => ts.pmin_mw.get_mut(g).unwrap().push(v),
                    Col::Pmax(g) => ts.pmax_mw.get_mut(g).unwrap().push(v),
                }
            }
        }
        Ok(ts)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(std::io::BufWriter::new(file))
            .map_err(|e| Error::parse(path.display().to_string(), e))
    }

    pub fn to_writer<W: std::io::Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["timestamp".to_string(), "season".to_string()];
        header.extend((0..self.load_mw.len()).map(|b| format!("load_{b}")));
        header.extend(self.renewable_avail_mw.keys().map(|g| format!("avail_{g}")));
        header.extend(self.pmin_mw.keys().map(|g| format!("pmin_{g}")));
        header.extend(self.pmax_mw.keys().map(|g| format!("pmax_{g}")));
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for (h, hour) in self.hours.iter().enumerate() {
            row.clear();
            row.push(hour.timestamp.format(TIMESTAMP_FORMAT).to_string());
            row.push(hour.season.clone());
            let values = self
                .load_mw
                .iter()
                .chain(self.renewable_avail_mw.values())
                .chain(self.pmin_mw.values())
                .chain(self.pmax_mw.values());
            row.extend(values.map(|r| format!("{}", r[h])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Multipliers applied by [`scale_series`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesFactors {
    pub load: f64,
    pub wind: f64,
    pub solar: f64,
}

impl SeriesFactors {
    pub const IDENTITY: SeriesFactors = SeriesFactors {
        load: 1.0,
        wind: 1.0,
        solar: 1.0,
    };
    /// Load, wind and solar scaled by 1.5, 2 and 3 for a high-renewable future.
    pub const HIGH_RENEWABLE: SeriesFactors = SeriesFactors {
        load: 1.5,
        wind: 2.0,
        solar: 3.0,
    };
}

/// Scales loads, wind availability and solar availability. Renewable units
/// without a technology tag are left unscaled.
pub fn scale_series(
    net: &Network,
    ts: &HourlyTimeSeries,
    factors: SeriesFactors,
) -> Result<HourlyTimeSeries> {
    for (name, f) in [("load", factors.load), ("wind", factors.wind), ("solar", factors.solar)] {
        if !(f.is_finite() && f >= 0.0) {
            return Err(Error::Precondition(format!("{name} factor must be >= 0, got {f}")));
        }
    }
    let mut out = ts.clone();
    for row in &mut out.load_mw {
        row.iter_mut().for_each(|v| *v *= factors.load);
    }
    for (id, row) in &mut out.renewable_avail_mw {
        let factor = match net.generators.get(*id).and_then(|g| g.technology) {
            Some(Technology::Wind) => factors.wind,
            Some(Technology::Solar) => factors.solar,
            None => 1.0,
        };
        row.iter_mut().for_each(|v| *v *= factor);
    }
    Ok(out)
}

/// Extreme-hour selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    MaxLoad,
    MaxNetLoad,
    MaxWind,
    MaxSolar,
    MinWind,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::MaxLoad,
        Criterion::MaxNetLoad,
        Criterion::MaxWind,
        Criterion::MaxSolar,
        Criterion::MinWind,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::MaxLoad => "max_load",
            Criterion::MaxNetLoad => "max_net_load",
            Criterion::MaxWind => "max_wind",
            Criterion::MaxSolar => "max_solar",
            Criterion::MinWind => "min_wind",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One operating hour: per-bus load and per-generator effective limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub hour: Option<usize>,
    #[serde(default)]
    pub season: Option<String>,
    #[serde(default)]
    pub criterion: Option<Criterion>,
    pub pd_mw: Vec<f64>,
    pub pmin_mw: Vec<f64>,
    pub pmax_mw: Vec<f64>,
}

impl Scenario {
    /// Builds the scenario for one hour of the series.
    pub fn at_hour(net: &Network, ts: &HourlyTimeSeries, hour: usize, id: String) -> Self {
        let pd_mw = ts.load_mw.iter().map(|row| row[hour]).collect();
        let mut pmin_mw = Vec::with_capacity(net.n_generators());
        let mut pmax_mw = Vec::with_capacity(net.n_generators());
        for g in &net.generators {
            if g.is_renewable() {
                pmin_mw.push(0.0);
                pmax_mw.push(ts.renewable_avail_mw.get(&g.id).map_or(g.pmax_mw, |r| r[hour]));
            } else {
                let lo = ts.pmin_mw.get(&g.id).map_or(g.pmin_mw, |r| r[hour]);
                let hi = ts.pmax_mw.get(&g.id).map_or(g.pmax_mw, |r| r[hour]);
                pmin_mw.push(lo);
                pmax_mw.push(hi);
            }
        }
        Scenario {
            id,
            hour: Some(hour),
            season: Some(ts.hours[hour].season.clone()),
            criterion: None,
            pd_mw,
            pmin_mw,
            pmax_mw,
        }
    }

    pub fn total_load(&self) -> f64 {
        self.pd_mw.iter().sum()
    }

    pub fn validate(&self, net: &Network) -> Result<()> {
        let entity = || format!("scenario {}", self.id);
        if self.pd_mw.len() != net.n_buses() {
            return Err(Error::invalid(
                entity(),
                format!("{} loads for {} buses", self.pd_mw.len(), net.n_buses()),
            ));
        }
        if self.pmin_mw.len() != net.n_generators() || self.pmax_mw.len() != net.n_generators() {
            return Err(Error::invalid(
                entity(),
                format!("generator limits do not cover {} generators", net.n_generators()),
            ));
        }
        if self.pd_mw.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(entity(), "non-finite load"));
        }
        for (g, (lo, hi)) in self.pmin_mw.iter().zip(&self.pmax_mw).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(
                    entity(),
                    format!("generator {g} limits [{lo}, {hi}] are not ordered"),
                ));
            }
        }
        Ok(())
    }
}

struct HourTotals {
    load: f64,
    renewable: f64,
    wind: f64,
    solar: f64,
}

fn hour_totals(net: &Network, ts: &HourlyTimeSeries, hour: usize) -> HourTotals {
    let mut t = HourTotals {
        load: ts.total_load(hour),
        renewable: 0.0,
        wind: 0.0,
        solar: 0.0,
    };
    for (id, row) in &ts.renewable_avail_mw {
        let v = row[hour];
        t.renewable += v;
        match net.generators.get(*id).and_then(|g| g.technology) {
            Some(Technology::Wind) => t.wind += v,
            Some(Technology::Solar) => t.solar += v,
            None => {}
        }
    }
    t
}

/// Picks, for summer and for winter, the hours of highest load, highest net
/// load, highest wind, highest solar and lowest wind. Ten scenarios are always
/// returned (an hour repeats if it wins several criteria); ties go to the
/// earliest hour.
pub fn select_scenarios(net: &Network, ts: &HourlyTimeSeries) -> Result<Vec<Scenario>> {
    ts.validate(net)?;
    let mut out = Vec::with_capacity(10);
    for season in ["summer", "winter"] {
        let hours: Vec<usize> = (0..ts.n_hours())
            .filter(|&h| ts.hours[h].season.eq_ignore_ascii_case(season))
            .collect();
        if hours.is_empty() {
            return Err(Error::Precondition(format!(
                "time series has no {season} hours"
            )));
        }
        let totals: Vec<HourTotals> = hours.iter().map(|&h| hour_totals(net, ts, h)).collect();
        for criterion in Criterion::ALL {
            let score = |t: &HourTotals| match criterion {
                Criterion::MaxLoad => t.load,
                Criterion::MaxNetLoad => t.load - t.renewable,
                Criterion::MaxWind => t.wind,
                Criterion::MaxSolar => t.solar,
                Criterion::MinWind => -t.wind,
            };
            // Strict comparison keeps the earliest hour on ties.
            let mut best = 0;
            for k in 1..hours.len() {
                if score(&totals[k]) > score(&totals[best]) {
                    best = k;
                }
            }
            let hour = hours[best];
            let mut sc = Scenario::at_hour(net, ts, hour, format!("{season}_{criterion}"));
            sc.criterion = Some(criterion);
            out.push(sc);
        }
    }
    Ok(out)
}

//! Free-format MPS emission and parsing.
//!
//! Rows and columns are written in declaration order, integer columns are
//! wrapped in `INTORG`/`INTEND` markers, and every number is printed with 17
//! significant digits, so identical models produce identical bytes. An
//! objective constant `k` is written as `-k` on the objective row in RHS.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::{Integrality, LinearConstraintDef, ModelIR, Sense, VarId};
use crate::error::{Error, Result};

const OBJ_ROW: &str = "COST";

/// `%.17g`: shortest fixed or exponent form with 17 significant digits.
pub(crate) fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "1e+30".into()
        } else {
            "-1e+30".into()
        };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let mut s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            while s.ends_with('0') {
                s.pop();
            }
            if s.ends_with('.') {
                s.pop();
            }
        }
        s
    } else {
        let mut m = mantissa.to_string();
        if m.contains('.') {
            while m.ends_with('0') {
                m.pop();
            }
            if m.ends_with('.') {
                m.pop();
            }
        }
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::Model(format!("name '{name}' cannot be written to MPS")));
    }
    Ok(())
}

/// Renders the model as free-format MPS text.
pub fn write_mps_to(model: &ModelIR) -> Result<String> {
    let mut out = String::new();
    let name = if model.name.is_empty() { "MODEL" } else { &model.name };
    check_name(name)?;
    writeln!(out, "NAME {name}").unwrap();
    writeln!(out, "ROWS").unwrap();
    writeln!(out, " N {OBJ_ROW}").unwrap();
    for row in &model.constraints {
        check_name(&row.name)?;
        if row.name == OBJ_ROW {
            return Err(Error::Model(format!("row name {OBJ_ROW} is reserved")));
        }
        let tag = match row.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        writeln!(out, " {tag} {}", row.name).unwrap();
    }

    // Column-major view of the rows.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.n_vars()];
    for (r, row) in model.constraints.iter().enumerate() {
        for &(v, a) in &row.terms {
            if a != 0.0 {
                columns[v.0].push((r, a));
            }
        }
    }
    let cost = model.cost_vector();

    writeln!(out, "COLUMNS").unwrap();
    let mut in_int = false;
    let mut marker = 0;
    for (j, var) in model.variables.iter().enumerate() {
        check_name(&var.name)?;
        if var.is_integer() != in_int {
            let kind = if in_int { "INTEND" } else { "INTORG" };
            writeln!(out, "    MARKER{marker} 'MARKER' '{kind}'").unwrap();
            if in_int {
                marker += 1;
            }
            in_int = !in_int;
        }
        if cost[j] != 0.0 || columns[j].is_empty() {
            writeln!(out, "    {} {OBJ_ROW} {}", var.name, fmt_g17(cost[j])).unwrap();
        }
        for &(r, a) in &columns[j] {
            writeln!(out, "    {} {} {}", var.name, model.constraints[r].name, fmt_g17(a)).unwrap();
        }
    }
    if in_int {
        writeln!(out, "    MARKER{marker} 'MARKER' 'INTEND'").unwrap();
    }

    writeln!(out, "RHS").unwrap();
    if model.objective.constant != 0.0 {
        writeln!(out, "    RHS {OBJ_ROW} {}", fmt_g17(-model.objective.constant)).unwrap();
    }
    for row in &model.constraints {
        if row.rhs != 0.0 {
            writeln!(out, "    RHS {} {}", row.name, fmt_g17(row.rhs)).unwrap();
        }
    }

    writeln!(out, "BOUNDS").unwrap();
    for var in &model.variables {
        let (lo, hi) = (var.lower, var.upper);
        let n = &var.name;
        if var.integrality == Integrality::Binary {
            // BV first so a reader keeps the type when bounds are then narrowed.
            writeln!(out, " BV BND {n}").unwrap();
            if lo == hi {
                writeln!(out, " FX BND {n} {}", fmt_g17(lo)).unwrap();
            } else if (lo, hi) != (0.0, 1.0) {
                writeln!(out, " LO BND {n} {}", fmt_g17(lo)).unwrap();
                writeln!(out, " UP BND {n} {}", fmt_g17(hi)).unwrap();
            }
        } else if lo == hi {
            writeln!(out, " FX BND {n} {}", fmt_g17(lo)).unwrap();
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            writeln!(out, " FR BND {n}").unwrap();
        } else if lo == f64::NEG_INFINITY {
            writeln!(out, " MI BND {n}").unwrap();
            writeln!(out, " UP BND {n} {}", fmt_g17(hi)).unwrap();
        } else {
            if lo != 0.0 || var.is_integer() {
                writeln!(out, " LO BND {n} {}", fmt_g17(lo)).unwrap();
            }
            if hi.is_finite() {
                writeln!(out, " UP BND {n} {}", fmt_g17(hi)).unwrap();
            } else if var.is_integer() {
                writeln!(out, " PL BND {n}").unwrap();
            }
        }
    }
    writeln!(out, "ENDATA").unwrap();
    Ok(out)
}

pub fn write_mps(model: &ModelIR, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = write_mps_to(model)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

/// Parses free-format MPS (no RANGES). Integer columns default to
/// `[0, +inf)`, matching current solver conventions. Only `BV` bounds mark a
/// column binary, so an integer column bounded to `[0, 1]` keeps its type.
pub fn read_mps(text: &str) -> Result<ModelIR> {
    let err = |line: usize, msg: &str| Error::parse("mps", format!("line {}: {msg}", line + 1));
    let mut model = ModelIR::new("");
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut obj_terms: Vec<(VarId, f64)> = Vec::new();
    let mut in_int = false;

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).unwrap_or(&"").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "RANGES" => return Err(err(ln, "RANGES section is not supported")),
                "ENDATA" => break,
                other => return Err(err(ln, &format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                let [tag, name] = fields[..] else {
                    return Err(err(ln, "row line needs a type and a name"));
                };
                let sense = match tag {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(err(ln, "unknown row type")),
                };
                row_index.insert(name.to_string(), model.constraints.len());
                model
                    .constraints
                    .push(LinearConstraintDef::new(name, Vec::new(), sense, 0.0));
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    in_int = match fields[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        _ => return Err(err(ln, "unknown marker")),
                    };
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err(ln, "column line needs 3 or 5 fields"));
                }
                let col = fields[0];
                let j = match col_index.get(col) {
                    Some(&j) => j,
                    None => {
                        let j = model.variables.len();
                        col_index.insert(col.to_string(), j);
                        model.variables.push(super::VariableDef {
                            name: col.to_string(),
                            lower: 0.0,
                            upper: f64::INFINITY,
                            integrality: if in_int {
                                Integrality::Integer
                            } else {
                                Integrality::Continuous
                            },
                        });
                        j
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let v: f64 = pair[1].parse().map_err(|_| err(ln, "bad number"))?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        obj_terms.push((VarId(j), v));
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| err(ln, "unknown row"))?;
                        model.constraints[r].terms.push((VarId(j), v));
                    }
                }
            }
            Section::Rhs => {
                let rest = if fields.len() % 2 == 1 { &fields[1..] } else { &fields[..] };
                for pair in rest.chunks(2) {
                    if pair.len() != 2 {
                        return Err(err(ln, "rhs entry needs a row and a value"));
                    }
                    let v: f64 = pair[1].parse().map_err(|_| err(ln, "bad number"))?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        model.objective.constant = -v;
                    } else {
                        let r = *row_index.get(pair[0]).ok_or_else(|| err(ln, "unknown row"))?;
                        model.constraints[r].rhs = v;
                    }
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err(ln, "bound line too short"));
                }
                let j = *col_index
                    .get(fields[2])
                    .ok_or_else(|| err(ln, "bound on unknown column"))?;
                let value = || -> Result<f64> {
                    fields
                        .get(3)
                        .ok_or_else(|| err(ln, "bound value missing"))?
                        .parse()
                        .map_err(|_| err(ln, "bad number"))
                };
                let var = &mut model.variables[j];
                match fields[0] {
                    "UP" => var.upper = value()?,
                    "LO" => var.lower = value()?,
                    "FX" => {
                        let v = value()?;
                        var.lower = v;
                        var.upper = v;
                    }
                    "FR" => {
                        var.lower = f64::NEG_INFINITY;
                        var.upper = f64::INFINITY;
                    }
                    "MI" => var.lower = f64::NEG_INFINITY,
                    "PL" => var.upper = f64::INFINITY,
                    "BV" => {
                        var.lower = 0.0;
                        var.upper = 1.0;
                        var.integrality = Integrality::Binary;
                    }
                    other => return Err(err(ln, &format!("unsupported bound type {other}"))),
                }
            }
            Section::None => return Err(err(ln, "data outside of a section")),
        }
    }
    model.objective.terms = obj_terms;
    model.rebuild_index()?;
    model.validate()?;
    Ok(model)
}

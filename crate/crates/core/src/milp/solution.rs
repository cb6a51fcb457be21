//! Plain-text solution files.
//!
//! Native layout:
//!
//! ```text
//! # status optimal
//! # objective 1600
//! # bound 1600
//! gamma_0 1
//! pg_0_0 150
//! ```
//!
//! Gurobi `.sol` files (`# Objective value = 1600` header, then
//! `<name> <value>` lines, no status) are accepted as well and reported with
//! status `feasible`, since the file alone does not certify optimality.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::ModelIR;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    /// Node, time or iteration limit reached.
    Limit,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Limit => "limit",
        })
    }
}

impl FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "optimal" => SolveStatus::Optimal,
            "feasible" | "suboptimal" => SolveStatus::Feasible,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" | "inf_or_unbd" => SolveStatus::Unbounded,
            "limit" | "time_limit" | "node_limit" | "iteration_limit" => SolveStatus::Limit,
            other => return Err(Error::parse("solution", format!("unknown status '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub status: SolveStatus,
    pub objective: f64,
    pub bound: f64,
    /// Variable values keyed by name, in model declaration order.
    pub values: IndexMap<String, f64>,
}

impl SolutionRecord {
    pub fn without_values(status: SolveStatus) -> Self {
        SolutionRecord {
            status,
            objective: f64::NAN,
            bound: f64::NEG_INFINITY,
            values: IndexMap::new(),
        }
    }

    pub fn from_vector(model: &ModelIR, x: &[f64], status: SolveStatus, bound: f64) -> Self {
        let values = model
            .variables
            .iter()
            .zip(x)
            .map(|(v, &val)| (v.name.clone(), val))
            .collect();
        SolutionRecord {
            status,
            objective: model.objective_value(x),
            bound,
            values,
        }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Dense vector in model order; errors if a model variable is missing.
    pub fn to_vector(&self, model: &ModelIR) -> Result<Vec<f64>> {
        model
            .variables
            .iter()
            .map(|v| {
                self.value(&v.name).ok_or_else(|| {
                    Error::Precondition(format!("solution has no value for {}", v.name))
                })
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# status {}", self.status).unwrap();
        writeln!(out, "# objective {}", self.objective).unwrap();
        if self.bound.is_finite() {
            writeln!(out, "# bound {}", self.bound).unwrap();
        }
        for (name, v) in &self.values {
            writeln!(out, "{name} {v}").unwrap();
        }
        out
    }
}

pub fn write_solution(sol: &SolutionRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, sol.to_text()).map_err(|e| Error::io(path, e))
}

/// Reads a solution file for `model`. Missing variables default to 0 and are
/// listed in the returned warnings; unknown names are an error.
pub fn read_solution(
    path: impl AsRef<Path>,
    model: &ModelIR,
) -> Result<(SolutionRecord, Vec<String>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    solution_from_str(&text, model, &path.display().to_string())
}

pub fn solution_from_str(
    text: &str,
    model: &ModelIR,
    origin: &str,
) -> Result<(SolutionRecord, Vec<String>)> {
    let mut status = None;
    let mut objective = None;
    let mut bound = None;
    let mut found: Vec<Option<f64>> = vec![None; model.n_vars()];
    let num = |s: &str, line: usize| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::parse(origin, format!("line {}: bad number '{s}'", line + 1)))
    };

    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("Objective value =") {
                objective = Some(num(rest, ln)?);
            } else if let Some((key, rest)) = comment.split_once(char::is_whitespace) {
                match key {
                    "status" => status = Some(rest.trim().parse::<SolveStatus>()?),
                    "objective" => objective = Some(num(rest, ln)?),
                    "bound" => bound = Some(num(rest, ln)?),
                    _ => {}
                }
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(origin, format!("line {}: expected '<name> <value>'", ln + 1)));
        };
        let id = model.var_id(name).ok_or_else(|| {
            Error::parse(origin, format!("variable '{name}' is not part of model {}", model.name))
        })?;
        found[id.0] = Some(num(value, ln)?);
    }

    let mut warnings = Vec::new();
    let mut values = IndexMap::with_capacity(model.n_vars());
    for (v, val) in model.variables.iter().zip(found) {
        let val = val.unwrap_or_else(|| {
            warnings.push(format!("{} missing from solution; assuming 0", v.name));
            0.0
        });
        values.insert(v.name.clone(), val);
    }
    let status = status.unwrap_or(SolveStatus::Feasible);
    let objective = objective.unwrap_or_else(|| {
        let x: Vec<f64> = values.values().copied().collect();
        model.objective_value(&x)
    });
    let bound = bound.unwrap_or(if status == SolveStatus::Optimal {
        objective
    } else {
        f64::NEG_INFINITY
    });
    Ok((
        SolutionRecord {
            status,
            objective,
            bound,
            values,
        },
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Integrality;

    fn model() -> ModelIR {
        let mut m = ModelIR::new("m");
        let x = m.add_var("x", 0.0, 10.0, Integrality::Continuous).unwrap();
        let y = m.add_var("y", 0.0, 1.0, Integrality::Binary).unwrap();
        m.set_objective(vec![(x, 2.0), (y, 1.0)], 0.0).unwrap();
        m
    }

    #[test]
    fn all_zero_optimal_file() {
        let (sol, warn) =
            solution_from_str("# status optimal\n# objective 0\nx 0\ny 0\n", &model(), "t").unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.bound, 0.0);
        assert!(warn.is_empty());
    }

    #[test]
    fn unknown_variable_is_an_error() {
        let err = solution_from_str("# status optimal\nz 1\n", &model(), "t").unwrap_err();
        assert!(err.to_string().contains("'z'"), "{err}");
    }

    #[test]
    fn missing_values_default_with_warning() {
        let (sol, warn) = solution_from_str("# status feasible\nx 3\n", &model(), "t").unwrap();
        assert_eq!(sol.value("y"), Some(0.0));
        assert_eq!(warn.len(), 1);
        assert_eq!(sol.objective, 6.0);
    }

    #[test]
    fn gurobi_layout() {
        let text = "# Solution for model m\n# Objective value = 7\nx 3\ny 1\n";
        let (sol, warn) = solution_from_str(text, &model(), "t").unwrap();
        assert_eq!(sol.status, SolveStatus::Feasible);
        assert_eq!(sol.objective, 7.0);
        assert!(warn.is_empty());
    }

    #[test]
    fn text_round_trip() {
        let m = model();
        let sol = SolutionRecord::from_vector(&m, &[1.5, 1.0], SolveStatus::Optimal, 4.0);
        let (back, _) = solution_from_str(&sol.to_text(), &m, "t").unwrap();
        assert_eq!(back, sol);
    }
}

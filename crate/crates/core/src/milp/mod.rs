//! Solver-agnostic MILP representation.
//!
//! A [`ModelIR`] holds variables (with bounds and integrality), linear rows
//! and a minimisation objective. Variable bounds are never counted as rows.

mod mps;
mod solution;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mps::{read_mps, write_mps, write_mps_to};
pub use solution::{read_solution, solution_from_str, write_solution, SolutionRecord, SolveStatus};

/// Index of a variable inside its model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrality {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDef {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
}

impl VariableDef {
    pub fn is_integer(&self) -> bool {
        self.integrality != Integrality::Continuous
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraintDef {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraintDef {
    pub fn new(name: impl Into<String>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        LinearConstraintDef {
            name: name.into(),
            terms,
            sense,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub formulation: String,
    pub n_buses: usize,
    pub n_branches: usize,
    pub n_generators: usize,
    pub n_scenarios: usize,
}

/// Minimisation MILP.
#[derive(Debug, Clone, Default)]
pub struct ModelIR {
    pub name: String,
    pub variables: Vec<VariableDef>,
    pub constraints: Vec<LinearConstraintDef>,
    pub objective: Objective,
    pub metadata: ModelMetadata,
    index: HashMap<String, VarId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub n_vars: usize,
    pub n_binary: usize,
    pub n_integer: usize,
    pub n_constraints: usize,
}

impl ModelIR {
    pub fn new(name: impl Into<String>) -> Self {
        ModelIR {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integrality: Integrality,
    ) -> Result<VarId> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::Model(format!(
                "variable {name}: bounds [{lower}, {upper}] are not ordered"
            )));
        }
        if integrality == Integrality::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(Error::Model(format!(
                "binary variable {name} has bounds outside [0, 1]"
            )));
        }
        let id = VarId(self.variables.len());
        if self.index.insert(name.clone(), id).is_some() {
            return Err(Error::Model(format!("duplicate variable name {name}")));
        }
        self.variables.push(VariableDef {
            name,
            lower,
            upper,
            integrality,
        });
        Ok(id)
    }

    pub fn add_constraint(&mut self, row: LinearConstraintDef) -> Result<()> {
        self.check_terms(&row.name, &row.terms)?;
        if !row.rhs.is_finite() {
            return Err(Error::Model(format!("row {}: non-finite rhs", row.name)));
        }
        self.constraints.push(row);
        Ok(())
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>, constant: f64) -> Result<()> {
        self.check_terms("objective", &terms)?;
        self.objective = Objective { terms, constant };
        Ok(())
    }

    fn check_terms(&self, owner: &str, terms: &[(VarId, f64)]) -> Result<()> {
        let mut seen = std::collections::HashSet::with_capacity(terms.len());
        for &(v, a) in terms {
            if v.0 >= self.variables.len() {
                return Err(Error::Model(format!("{owner}: unknown variable index {}", v.0)));
            }
            if !a.is_finite() {
                return Err(Error::Model(format!(
                    "{owner}: non-finite coefficient on {}",
                    self.variables[v.0].name
                )));
            }
            if !seen.insert(v) {
                return Err(Error::Model(format!(
                    "{owner}: variable {} appears twice",
                    self.variables[v.0].name
                )));
            }
        }
        Ok(())
    }

    /// Re-checks every invariant; models built through the `add_*` methods
    /// always pass.
    pub fn validate(&self) -> Result<()> {
        for r in &self.constraints {
            self.check_terms(&r.name, &r.terms)?;
        }
        self.check_terms("objective", &self.objective.terms)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn var(&self, id: VarId) -> &VariableDef {
        &self.variables[id.0]
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.constant
            + self
                .objective
                .terms
                .iter()
                .map(|&(v, c)| c * x[v.0])
                .sum::<f64>()
    }

    /// Dense objective coefficient vector.
    pub fn cost_vector(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n_vars()];
        for &(v, a) in &self.objective.terms {
            c[v.0] += a;
        }
        c
    }

    /// Same model with every integrality requirement dropped.
    pub fn relaxed(&self) -> ModelIR {
        let mut m = self.clone();
        for v in &mut m.variables {
            v.integrality = Integrality::Continuous;
        }
        m
    }

    pub fn stats(&self) -> ModelStats {
        model_stats(self)
    }

    pub(crate) fn rebuild_index(&mut self) -> Result<()> {
        self.index.clear();
        for (k, v) in self.variables.iter().enumerate() {
            if self.index.insert(v.name.clone(), VarId(k)).is_some() {
                return Err(Error::Model(format!("duplicate variable name {}", v.name)));
            }
        }
        Ok(())
    }
}

/// Counts declared variables and rows; bounds are not rows.
pub fn model_stats(model: &ModelIR) -> ModelStats {
    let mut s = ModelStats {
        n_vars: model.variables.len(),
        n_binary: 0,
        n_integer: 0,
        n_constraints: model.constraints.len(),
    };
    for v in &model.variables {
        match v.integrality {
            Integrality::Binary => s.n_binary += 1,
            Integrality::Integer => s.n_integer += 1,
            Integrality::Continuous => {}
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_definitions() {
        let mut m = ModelIR::new("t");
        let x = m.add_var("x", 0.0, 1.0, Integrality::Binary).unwrap();
        assert!(m.add_var("x", 0.0, 1.0, Integrality::Continuous).is_err());
        assert!(m.add_var("y", 2.0, 1.0, Integrality::Continuous).is_err());
        assert!(m.add_var("b", 0.0, 2.0, Integrality::Binary).is_err());
        let dup = LinearConstraintDef::new("r", vec![(x, 1.0), (x, 2.0)], Sense::Le, 1.0);
        assert!(m.add_constraint(dup).is_err());
        let dangling = LinearConstraintDef::new("r", vec![(VarId(9), 1.0)], Sense::Le, 1.0);
        assert!(m.add_constraint(dangling).is_err());
        let nan = LinearConstraintDef::new("r", vec![(x, f64::NAN)], Sense::Le, 1.0);
        assert!(m.add_constraint(nan).is_err());
    }

    #[test]
    fn stats_count_rows_not_bounds() {
        let mut m = ModelIR::new("t");
        let x = m.add_var("x", 0.0, 5.0, Integrality::Continuous).unwrap();
        m.add_var("b", 0.0, 1.0, Integrality::Binary).unwrap();
        m.add_var("g", 0.0, 3.0, Integrality::Integer).unwrap();
        m.add_constraint(LinearConstraintDef::new("c0", vec![(x, 1.0)], Sense::Le, 5.0))
            .unwrap();
        assert_eq!(
            m.stats(),
            ModelStats {
                n_vars: 3,
                n_binary: 1,
                n_integer: 1,
                n_constraints: 1
            }
        );
        assert_eq!(m.relaxed().stats().n_binary, 0);
    }
}

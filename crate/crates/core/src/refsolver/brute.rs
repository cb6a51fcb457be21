use super::simplex::{LpData, LpStatus};
use crate::error::{Error, Result};
use crate::milp::{Integrality, ModelIR, SolutionRecord, SolveStatus};

pub const BRUTE_FORCE_MAX_INTEGERS: usize = 20;
pub const BRUTE_FORCE_MAX_COMBINATIONS: u64 = 1 << 20;

/// Exact optimum by enumerating every integral assignment of the integer
/// variables and solving the remaining LP.
///
/// Assignments violating a row that contains only integer variables are
/// skipped without an LP, as are assignments whose integer cost plus the
/// smallest possible continuous cost cannot beat the incumbent. Ties keep
/// the first assignment in lexicographic order.
pub fn brute_force_milp(model: &ModelIR) -> Result<SolutionRecord> {
    let data = LpData::from_model(model);
    let mut lo = data.col_lo.clone();
    let mut hi = data.col_hi.clone();
    let mut free = Vec::new();
    let mut combos: u64 = 1;
    for (j, v) in model.variables.iter().enumerate() {
        if !v.is_integer() {
            continue;
        }
        let (l, h) = (v.lower.ceil(), v.upper.floor());
        if !l.is_finite() || !h.is_finite() {
            return Err(Error::Precondition(format!(
                "integer variable {} needs finite bounds for enumeration",
                v.name
            )));
        }
        if l > h {
            return Ok(SolutionRecord::without_values(SolveStatus::Infeasible));
        }
        lo[j] = l;
        hi[j] = h;
        if l < h {
            free.push(j);
            combos = combos.saturating_mul((h - l) as u64 + 1);
        }
    }
    if free.len() > BRUTE_FORCE_MAX_INTEGERS || combos > BRUTE_FORCE_MAX_COMBINATIONS {
        return Err(Error::Precondition(format!(
            "enumeration refused: {} free integer variables, {combos} assignments",
            free.len()
        )));
    }

    let is_int: Vec<bool> = model.variables.iter().map(|v| v.is_integer()).collect();
    let int_rows: Vec<usize> = model
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, r)| r.terms.iter().all(|(v, _)| is_int[v.0]))
        .map(|(i, _)| i)
        .collect();
    let continuous_floor: f64 = model
        .variables
        .iter()
        .zip(&data.cost)
        .filter(|(v, _)| v.integrality == Integrality::Continuous)
        .map(|(v, &c)| {
            if c == 0.0 {
                0.0
            } else {
                (c * v.lower).min(c * v.upper)
            }
        })
        .sum::<f64>()
        + data.obj_const;

    let mut x = lo.clone();
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        let (mut clo, mut chi) = (lo.clone(), hi.clone());
        for (j, v) in x.iter().enumerate() {
            if is_int[j] {
                clo[j] = *v;
                chi[j] = *v;
            }
        }
        let rows_ok = int_rows.iter().all(|&i| {
            let r = &model.constraints[i];
            r.violation(&clo) <= 1e-9 * r.rhs.abs().max(1.0)
        });
        let int_cost: f64 = (0..model.n_vars())
            .filter(|&j| is_int[j])
            .map(|j| data.cost[j] * clo[j])
            .sum();
        let hopeless = best
            .as_ref()
            .is_some_and(|(b, _)| continuous_floor.is_finite() && int_cost + continuous_floor >= *b);
        if rows_ok && !hopeless {
            let lp = data.solve_with_bounds(&clo, &chi);
            match lp.status {
                LpStatus::Optimal => {
                    if best.as_ref().map_or(true, |(b, _)| lp.objective < *b) {
                        best = Some((lp.objective, lp.x));
                    }
                }
                LpStatus::Infeasible => {}
                LpStatus::Unbounded => {
                    return Ok(SolutionRecord::without_values(SolveStatus::Unbounded))
                }
                other => {
                    return Err(Error::SolverLimit(format!(
                        "LP of an enumerated assignment ended with {other:?}"
                    )))
                }
            }
        }
        // Odometer, last variable fastest.
        let mut k = free.len();
        loop {
            if k == 0 {
                return Ok(match best {
                    Some((obj, x)) => SolutionRecord::from_vector(model, &x, SolveStatus::Optimal, obj),
                    None => SolutionRecord::without_values(SolveStatus::Infeasible),
                });
            }
            k -= 1;
            let j = free[k];
            if x[j] < hi[j] {
                x[j] += 1.0;
                break;
            }
            x[j] = lo[j];
        }
    }
}

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::simplex::{LpData, LpStatus};
use crate::error::{Error, Result};
use crate::milp::{ModelIR, SolutionRecord, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnBConfig {
    pub int_tol: f64,
    /// Relative gap `(incumbent - bound) / max(1, |incumbent|)` at which to stop.
    pub gap: f64,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
}

impl Default for BnBConfig {
    fn default() -> Self {
        BnBConfig {
            int_tol: 1e-6,
            gap: 1e-3,
            node_limit: 100_000,
            time_limit: None,
        }
    }
}

impl BnBConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.int_tol > 0.0 && self.int_tol < 0.5) || !(self.gap > 0.0) {
            return Err(Error::Precondition(
                "integrality tolerance must lie in (0, 0.5) and the gap must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnBStats {
    /// LP relaxations solved, the root included.
    pub nodes: usize,
    pub incumbent: f64,
    pub bound: f64,
    pub gap: f64,
    pub lp_iterations: usize,
}

pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

struct Node {
    bound: f64,
    seq: u64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound, then the oldest node, wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-bound branch-and-bound on the most fractional integer variable
/// (ties to the lowest index). Children inherit the parent's LP value as
/// their bound and are solved when popped.
pub fn solve_milp(model: &ModelIR, cfg: &BnBConfig) -> Result<(SolutionRecord, BnBStats)> {
    cfg.validate()?;
    let data = LpData::from_model(model);
    let ints: Vec<usize> = (0..model.n_vars())
        .filter(|&j| model.variables[j].is_integer())
        .collect();
    let mut lo = data.col_lo.clone();
    let mut hi = data.col_hi.clone();
    for &j in &ints {
        lo[j] = (lo[j] - cfg.int_tol).ceil();
        hi[j] = (hi[j] + cfg.int_tol).floor();
    }

    let start = Instant::now();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        seq,
        lo,
        hi,
    });
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut pruned_bound = f64::INFINITY;
    let mut nodes = 0usize;
    let mut iterations = 0usize;
    let mut hit_limit = false;
    let cutoff = |inc: &Option<(f64, Vec<f64>)>, b: f64| match inc {
        Some((v, _)) => b >= v - cfg.gap * v.abs().max(1.0),
        None => false,
    };

    while let Some(node) = heap.pop() {
        if cutoff(&incumbent, node.bound) {
            pruned_bound = pruned_bound.min(node.bound);
            continue;
        }
        let out_of_time = cfg.time_limit.is_some_and(|t| start.elapsed() >= t);
        if nodes >= cfg.node_limit || out_of_time {
            heap.push(node);
            hit_limit = true;
            break;
        }
        nodes += 1;
        let lp = data.solve_with_bounds(&node.lo, &node.hi);
        iterations += lp.iterations;
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                let stats = BnBStats {
                    nodes,
                    incumbent: f64::NEG_INFINITY,
                    bound: f64::NEG_INFINITY,
                    gap: 0.0,
                    lp_iterations: iterations,
                };
                return Ok((SolutionRecord::without_values(SolveStatus::Unbounded), stats));
            }
            other => {
                return Err(Error::SolverLimit(format!(
                    "LP relaxation at node {nodes} ended with {other:?}"
                )))
            }
        }
        if cutoff(&incumbent, lp.objective) {
            pruned_bound = pruned_bound.min(lp.objective);
            continue;
        }

        let mut branch: Option<(usize, f64)> = None;
        for &j in &ints {
            let v = lp.x[j];
            let dist = (v - v.floor()).min(v.ceil() - v);
            if dist > cfg.int_tol && branch.map_or(true, |(_, d)| dist > d) {
                branch = Some((j, dist));
            }
        }
        match branch {
            None => {
                let (obj, x) = polish(&data, &ints, &node, lp.x, lp.objective);
                if incumbent.as_ref().map_or(true, |(v, _)| obj < *v) {
                    incumbent = Some((obj, x));
                }
            }
            Some((j, _)) => {
                let v = lp.x[j];
                let mut down_hi = node.hi.clone();
                down_hi[j] = v.floor();
                let mut up_lo = node.lo.clone();
                up_lo[j] = v.ceil();
                seq += 1;
                heap.push(Node {
                    bound: lp.objective,
                    seq,
                    lo: node.lo.clone(),
                    hi: down_hi,
                });
                seq += 1;
                heap.push(Node {
                    bound: lp.objective,
                    seq,
                    lo: up_lo,
                    hi: node.hi,
                });
            }
        }
    }

    let open = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let (inc_obj, x) = match incumbent {
        Some((v, x)) => (v, Some(x)),
        None => (f64::INFINITY, None),
    };
    let bound = open.min(pruned_bound).min(inc_obj);
    let stats = BnBStats {
        nodes,
        incumbent: inc_obj,
        bound,
        gap: relative_gap(inc_obj, bound),
        lp_iterations: iterations,
    };
    let record = match (x, hit_limit) {
        (Some(x), false) => SolutionRecord::from_vector(model, &x, SolveStatus::Optimal, bound),
        (Some(x), true) => SolutionRecord::from_vector(model, &x, SolveStatus::Limit, bound),
        (None, true) => {
            let mut r = SolutionRecord::without_values(SolveStatus::Limit);
            r.bound = bound;
            r
        }
        (None, false) => SolutionRecord::without_values(SolveStatus::Infeasible),
    };
    Ok((record, stats))
}

/// Rounds the integer values and re-solves the continuous part so the
/// reported point satisfies the rows exactly rather than up to `int_tol`.
fn polish(data: &LpData, ints: &[usize], node: &Node, x: Vec<f64>, obj: f64) -> (f64, Vec<f64>) {
    let mut lo = node.lo.clone();
    let mut hi = node.hi.clone();
    for &j in ints {
        let v = x[j].round();
        lo[j] = v;
        hi[j] = v;
    }
    let lp = data.solve_with_bounds(&lo, &hi);
    if lp.status == LpStatus::Optimal {
        (lp.objective, lp.x)
    } else {
        (obj, x)
    }
}

//! Oracle for the per-branch TCSC disjunction.
//!
//! The block lives in `(psi, z+, z-, theta, dpf)` space, where `theta` is the
//! branch angle difference. Its integral points form three polyhedra:
//! no device (`psi = 0`, `dpf = 0`), device with a non-negative angle
//! (`dB_min theta <= dpf <= dB_max theta`) and device with a non-positive angle
//! (the same envelope reversed). The inequalities come from
//! [`facet_block`](crate::formulations::facet_block), so the oracle checks the
//! exact rows the model builder emits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{facet_block, DisjunctBlockParams, FacetVars, FACET_INEQUALITY_LABELS};
use crate::milp::{LinearConstraintDef, Sense, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisjunctPoint {
    pub psi: f64,
    pub z_plus: f64,
    pub z_minus: f64,
    pub theta: f64,
    pub dpf: f64,
}

impl DisjunctPoint {
    pub const fn new(psi: f64, z_plus: f64, z_minus: f64, theta: f64, dpf: f64) -> Self {
        DisjunctPoint {
            psi,
            z_plus,
            z_minus,
            theta,
            dpf,
        }
    }

    /// Coordinates in the layout of [`BLOCK_VARS`].
    fn coords(&self) -> [f64; 6] {
        [self.psi, self.z_plus, self.z_minus, 0.0, self.theta, self.dpf]
    }

    #[cfg(test)]
    fn combine(points: &[DisjunctPoint], weights: &[f64]) -> DisjunctPoint {
        let mut out = DisjunctPoint::new(0.0, 0.0, 0.0, 0.0, 0.0);
        for (p, &w) in points.iter().zip(weights) {
            out.psi += w * p.psi;
            out.z_plus += w * p.z_plus;
            out.z_minus += w * p.z_minus;
            out.theta += w * p.theta;
            out.dpf += w * p.dpf;
        }
        out
    }
}

/// Variable layout of the stand-alone block: the from-bus angle is pinned at 0.
pub const BLOCK_VARS: FacetVars = FacetVars {
    psi: VarId(0),
    z_plus: VarId(1),
    z_minus: VarId(2),
    theta_from: VarId(3),
    theta_to: VarId(4),
    dpf: VarId(5),
};

/// Rows of the stand-alone block: the equality, the eight inequalities and,
/// with `emit_cap`, the two capacity rows.
pub fn block_rows(params: &DisjunctBlockParams, emit_cap: bool) -> Vec<LinearConstraintDef> {
    facet_block(params, &BLOCK_VARS, emit_cap, "block")
}

fn row_scale(row: &LinearConstraintDef) -> f64 {
    row.terms
        .iter()
        .fold(row.rhs.abs().max(1.0), |s, (_, a)| s.max(a.abs()))
}

fn row_holds(row: &LinearConstraintDef, p: &DisjunctPoint, rel_tol: f64) -> bool {
    row.violation(&p.coords()) <= rel_tol * row_scale(row)
}

fn row_tight(row: &LinearConstraintDef, p: &DisjunctPoint, rel_tol: f64) -> bool {
    (row.activity(&p.coords()) - row.rhs).abs() <= rel_tol * row_scale(row)
}

/// The eight extreme points: two with no device, three per signed disjunct.
pub fn enumerate_extreme_points(p: &DisjunctBlockParams) -> Vec<DisjunctPoint> {
    let (tl, th, bl, bh) = (p.theta_min, p.theta_max, p.db_min, p.db_max);
    vec![
        DisjunctPoint::new(0.0, 0.0, 0.0, tl, 0.0),
        DisjunctPoint::new(0.0, 0.0, 0.0, th, 0.0),
        DisjunctPoint::new(1.0, 1.0, 0.0, 0.0, 0.0),
        DisjunctPoint::new(1.0, 1.0, 0.0, th, th * bl),
        DisjunctPoint::new(1.0, 1.0, 0.0, th, th * bh),
        DisjunctPoint::new(1.0, 0.0, 1.0, 0.0, 0.0),
        DisjunctPoint::new(1.0, 0.0, 1.0, tl, tl * bl),
        DisjunctPoint::new(1.0, 0.0, 1.0, tl, tl * bh),
    ]
}

/// Relative tolerance for validity, tightness and rank decisions.
pub const FACET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub label: String,
    pub valid: bool,
    /// Indices into [`enumerate_extreme_points`].
    pub tight_points: Vec<usize>,
    /// Number of affinely independent tight points.
    pub affine_rank: usize,
    pub is_facet: bool,
    pub applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetReport {
    pub params: DisjunctBlockParams,
    pub applicable: bool,
    pub inequalities: Vec<InequalityReport>,
    /// `psi <= 1`, `z+ >= 0`, `z- >= 0`.
    pub bound_facets: Vec<InequalityReport>,
    pub warnings: Vec<String>,
}

impl FacetReport {
    pub fn all_facets(&self) -> bool {
        self.applicable
            && self
                .inequalities
                .iter()
                .chain(&self.bound_facets)
                .all(|r| r.is_facet)
    }

    pub fn n_facets(&self) -> usize {
        self.inequalities
            .iter()
            .chain(&self.bound_facets)
            .filter(|r| r.is_facet)
            .count()
    }
}

/// Dimension of the block's affine hull (`psi = z+ + z-` removes one).
pub const BLOCK_DIM: usize = 4;

/// Checks each inequality for validity at every extreme point, collects the
/// tight points and measures their affine rank on the `psi = z+ + z-`
/// hyperplane. Degenerate parameters are reported as not applicable.
pub fn verify_facets(params: &DisjunctBlockParams) -> FacetReport {
    let points = enumerate_extreme_points(params);
    let applicable = !params.is_degenerate();
    let mut warnings = Vec::new();
    if !applicable {
        warnings.push(format!(
            "degenerate block (theta in [{}, {}], dB in [{}, {}]): facet property not applicable",
            params.theta_min, params.theta_max, params.db_min, params.db_max
        ));
    }
    let rows = block_rows(params, false);
    let report = |label: &str, row: &LinearConstraintDef| {
        let valid = points.iter().all(|p| row_holds(row, p, FACET_TOL));
        let tight_points: Vec<usize> = (0..points.len())
            .filter(|&k| row_tight(row, &points[k], FACET_TOL))
            .collect();
        let tight: Vec<DisjunctPoint> = tight_points.iter().map(|&k| points[k]).collect();
        let affine_rank = affine_rank(&tight);
        InequalityReport {
            label: label.to_string(),
            valid,
            tight_points,
            affine_rank,
            is_facet: applicable && valid && affine_rank == BLOCK_DIM,
            applicable,
        }
    };
    let inequalities = FACET_INEQUALITY_LABELS
        .iter()
        .zip(&rows[1..9])
        .map(|(label, row)| report(label, row))
        .collect();
    let v = BLOCK_VARS;
    let bound_rows = [
        ("psi_le_1", LinearConstraintDef::new("psi_le_1", vec![(v.psi, 1.0)], Sense::Le, 1.0)),
        ("z_plus_ge_0", LinearConstraintDef::new("z_plus_ge_0", vec![(v.z_plus, 1.0)], Sense::Ge, 0.0)),
        ("z_minus_ge_0", LinearConstraintDef::new("z_minus_ge_0", vec![(v.z_minus, 1.0)], Sense::Ge, 0.0)),
    ];
    let bound_facets = bound_rows.iter().map(|(l, r)| report(l, r)).collect();
    FacetReport {
        params: *params,
        applicable,
        inequalities,
        bound_facets,
        warnings,
    }
}

/// Number of affinely independent points, measured in `(z+, z-, theta, dpf)`.
/// Columns are scaled to unit magnitude before rank-revealing elimination.
pub fn affine_rank(points: &[DisjunctPoint]) -> usize {
    let Some(first) = points.first() else {
        return 0;
    };
    let coords = |p: &DisjunctPoint| [p.z_plus, p.z_minus, p.theta, p.dpf];
    let base = coords(first);
    let mut rows: Vec<[f64; 4]> = points[1..]
        .iter()
        .map(|p| {
            let c = coords(p);
            [c[0] - base[0], c[1] - base[1], c[2] - base[2], c[3] - base[3]]
        })
        .collect();
    for col in 0..4 {
        let scale = rows.iter().fold(0.0_f64, |s, r| s.max(r[col].abs()));
        if scale > 0.0 {
            for r in &mut rows {
                r[col] /= scale;
            }
        }
    }
    let mut rank = 0;
    for col in 0..4 {
        let Some(p) = (rank..rows.len())
            .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
        else {
            break;
        };
        if rows[p][col].abs() <= FACET_TOL {
            continue;
        }
        rows.swap(rank, p);
        let pivot = rows[rank];
        for r in rows.iter_mut().skip(rank + 1) {
            let f = r[col] / pivot[col];
            for k in col..4 {
                r[k] -= f * pivot[k];
            }
        }
        rank += 1;
    }
    rank + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    /// No device.
    P000,
    /// Device installed, non-negative angle.
    P110,
    /// Device installed, non-positive angle.
    P101,
    None,
}

/// Which disjunct contains `p`. Binaries must be integral within `tol`;
/// angles are compared with absolute `tol`, flows with
/// `tol * max(1, |dB_min|, |dB_max|)`.
pub fn check_point_in_disjunction(
    p: &DisjunctPoint,
    params: &DisjunctBlockParams,
    tol: f64,
) -> Result<Membership> {
    let bin = |name: &str, v: f64| -> Result<u8> {
        let r = v.round();
        if (v - r).abs() > tol || !(r == 0.0 || r == 1.0) {
            return Err(Error::Precondition(format!("{name} = {v} is not binary")));
        }
        Ok(r as u8)
    };
    let pattern = (bin("psi", p.psi)?, bin("z_plus", p.z_plus)?, bin("z_minus", p.z_minus)?);
    let flow_tol = tol * params.db_min.abs().max(params.db_max.abs()).max(1.0);
    let theta_in = |lo: f64, hi: f64| p.theta >= lo - tol && p.theta <= hi + tol;
    let dpf_in = |lo: f64, hi: f64| p.dpf >= lo - flow_tol && p.dpf <= hi + flow_tol;
    let (tl, th, bl, bh) = (params.theta_min, params.theta_max, params.db_min, params.db_max);
    Ok(match pattern {
        (0, 0, 0) if theta_in(tl, th) && dpf_in(0.0, 0.0) => Membership::P000,
        (1, 1, 0) if theta_in(0.0, th) && dpf_in(bl * p.theta, bh * p.theta) => Membership::P110,
        (1, 0, 1) if theta_in(tl, 0.0) && dpf_in(bh * p.theta, bl * p.theta) => Membership::P101,
        _ => Membership::None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContainmentSample {
    pub n_samples: usize,
    pub fbsm_feasible: usize,
    pub extended_feasible: usize,
    /// Points feasible for the extended block but not the big-M block.
    pub violations: usize,
    /// Share of samples feasible for the big-M block only.
    pub strictness: f64,
}

/// Samples `(psi, theta, dpf)` uniformly over `[0,1] x [theta_min, theta_max]
/// x [-M, M]` with the per-branch `M = flow_cap` and decides, for each block,
/// whether some relaxed sign binary makes the point feasible.
pub fn relaxation_containment_sample(
    params: &DisjunctBlockParams,
    n_samples: usize,
    seed: u64,
) -> Result<ContainmentSample> {
    if n_samples == 0 {
        return Err(Error::Precondition("n_samples must be at least 1".into()));
    }
    params.validate()?;
    let big_m = params.flow_cap;
    if !(big_m > 0.0) || !big_m.is_finite() {
        return Err(Error::Precondition("flow_cap must be positive and finite".into()));
    }
    let rows = block_rows(params, true);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ContainmentSample {
        n_samples,
        fbsm_feasible: 0,
        extended_feasible: 0,
        violations: 0,
        strictness: 0.0,
    };
    let mut big_m_only = 0usize;
    for _ in 0..n_samples {
        let psi: f64 = rng.gen_range(0.0..=1.0);
        let theta = rng.gen_range(params.theta_min..=params.theta_max);
        let dpf = rng.gen_range(-big_m..=big_m);
        let a = big_m_feasible(params, psi, theta, dpf);
        let b = extended_feasible(&rows, psi, theta, dpf);
        out.fbsm_feasible += usize::from(a);
        out.extended_feasible += usize::from(b);
        if b && !a {
            out.violations += 1;
        }
        if a && !b {
            big_m_only += 1;
        }
    }
    out.strictness = big_m_only as f64 / n_samples as f64;
    Ok(out)
}

/// Interval of `z in [0,1]` satisfying the four big-M rows, plus the two
/// installation rows.
pub fn big_m_feasible(params: &DisjunctBlockParams, psi: f64, theta: f64, dpf: f64) -> bool {
    let m = params.flow_cap;
    let (bl, bh) = (params.db_min, params.db_max);
    let slack = FACET_TOL * m.max(1.0);
    if dpf.abs() > m * psi + slack {
        return false;
    }
    let lo = 0.0_f64
        .max((bh * theta - dpf) / m)
        .max((dpf - bl * theta) / m);
    let hi = 1.0_f64
        .min((dpf - bl * theta + m) / m)
        .min((m - dpf + bh * theta) / m);
    lo <= hi + FACET_TOL
}

/// Interval of `z+ in [0, psi]` (with `z- = psi - z+`) satisfying every
/// block row.
pub fn extended_feasible(rows: &[LinearConstraintDef], psi: f64, theta: f64, dpf: f64) -> bool {
    let (mut lo, mut hi) = (0.0_f64, psi);
    let v = BLOCK_VARS;
    for row in rows {
        let coef = |id: VarId| row.terms.iter().find(|t| t.0 == id).map_or(0.0, |t| t.1);
        let (cp, cm) = (coef(v.z_plus), coef(v.z_minus));
        let fixed = [psi, 0.0, psi, 0.0, theta, dpf];
        // Activity at z+ = 0, z- = psi, then slope in z+.
        let base = row.activity(&fixed);
        let slope = cp - cm;
        let tol = FACET_TOL * row_scale(row);
        let (need_lo, need_hi) = match row.sense {
            Sense::Le => (f64::NEG_INFINITY, row.rhs - base),
            Sense::Ge => (row.rhs - base, f64::INFINITY),
            Sense::Eq => (row.rhs - base, row.rhs - base),
        };
        if slope.abs() <= f64::EPSILON {
            if need_lo > tol || need_hi < -tol {
                return false;
            }
            continue;
        }
        let (a, b) = ((need_lo - tol) / slope, (need_hi + tol) / slope);
        let (a, b) = if slope > 0.0 { (a, b) } else { (b, a) };
        lo = lo.max(a);
        hi = hi.min(b);
    }
    lo <= hi + FACET_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> DisjunctBlockParams {
        DisjunctBlockParams {
            theta_min: -0.6,
            theta_max: 0.6,
            db_min: -2.0,
            db_max: 3.0,
            flow_cap: 10.0,
        }
    }

    fn rows_hold(rows: &[LinearConstraintDef], p: &DisjunctPoint) -> bool {
        rows.iter().all(|r| row_holds(r, p, FACET_TOL))
    }

    #[test]
    fn extreme_point_substitution() {
        let pts = enumerate_extreme_points(&fixture());
        assert_eq!(pts.len(), 8);
        assert!(pts.contains(&DisjunctPoint::new(1.0, 1.0, 0.0, 0.6, -1.2)));
        assert!(pts.contains(&DisjunctPoint::new(1.0, 1.0, 0.0, 0.6, 0.6 * 3.0)));
    }

    #[test]
    fn zero_range_collapses_disjunct_points() {
        let mut p = fixture();
        p.db_min = 0.0;
        p.db_max = 0.0;
        let pts = enumerate_extreme_points(&p);
        let mut distinct: Vec<DisjunctPoint> = Vec::new();
        for q in &pts[2..5] {
            if !distinct.contains(q) {
                distinct.push(*q);
            }
        }
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn extreme_points_lie_in_their_disjunct() {
        let p = fixture();
        let expected = [
            Membership::P000,
            Membership::P000,
            Membership::P110,
            Membership::P110,
            Membership::P110,
            Membership::P101,
            Membership::P101,
            Membership::P101,
        ];
        for (pt, m) in enumerate_extreme_points(&p).iter().zip(expected) {
            assert_eq!(check_point_in_disjunction(pt, &p, 1e-9).unwrap(), m, "{pt:?}");
        }
    }

    #[test]
    fn dpf_lo_tight_at_upper_low_slope_point() {
        let p = fixture();
        let rows = block_rows(&p, false);
        let pt = DisjunctPoint::new(1.0, 1.0, 0.0, p.theta_max, p.theta_max * p.db_min);
        assert!(row_tight(&rows[3], &pt, FACET_TOL));
    }

    #[test]
    fn fixture_has_all_facets() {
        let r = verify_facets(&fixture());
        assert!(r.applicable);
        for q in r.inequalities.iter().chain(&r.bound_facets) {
            assert!(q.valid && q.is_facet, "{q:?}");
            assert!(q.tight_points.len() >= 4);
        }
        assert_eq!(r.n_facets(), 11);
    }

    #[test]
    fn degenerate_is_not_applicable() {
        let mut p = fixture();
        p.db_max = p.db_min;
        let r = verify_facets(&p);
        assert!(!r.applicable);
        assert!(!r.warnings.is_empty());
        assert!(r.inequalities.iter().all(|q| !q.is_facet && !q.applicable));
    }

    #[test]
    fn zero_device_forces_zero_flow_change() {
        let mut p = fixture();
        p.db_min = 0.0;
        p.db_max = 0.0;
        let rows = block_rows(&p, false);
        for (psi, zp, zm) in [(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.0, 0.0, 1.0)] {
            for theta in [-0.6, -0.1, 0.0, 0.3, 0.6] {
                let ok = DisjunctPoint::new(psi, zp, zm, theta, 0.0);
                let bad = DisjunctPoint::new(psi, zp, zm, theta, 1e-3);
                let admissible_theta = (zp == 0.0 || theta >= 0.0) && (zm == 0.0 || theta <= 0.0);
                assert_eq!(rows_hold(&rows, &ok), admissible_theta);
                assert!(!rows_hold(&rows, &bad));
            }
        }
    }

    #[test]
    fn membership_rejects_envelope_breach_and_fractional_binaries() {
        let p = fixture();
        let tol = 1e-6;
        let scale = 3.0;
        let out = DisjunctPoint::new(1.0, 1.0, 0.0, 0.5, 0.5 * p.db_max + 2.0 * tol * scale);
        assert_eq!(check_point_in_disjunction(&out, &p, tol).unwrap(), Membership::None);
        let pin = DisjunctPoint::new(0.0, 0.0, 0.0, 0.3, 0.0);
        assert_eq!(check_point_in_disjunction(&pin, &p, tol).unwrap(), Membership::P000);
        let frac = DisjunctPoint::new(0.5, 0.5, 0.0, 0.0, 0.0);
        assert!(check_point_in_disjunction(&frac, &p, tol).is_err());
    }

    #[test]
    fn union_matches_rows_on_a_grid() {
        let p = fixture();
        let rows = block_rows(&p, false);
        for (psi, zp, zm) in [(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.0, 0.0, 1.0)] {
            for i in 0..=60 {
                let theta = -0.6 + 0.02 * f64::from(i);
                for k in -40..=40 {
                    let dpf = 0.05 * f64::from(k);
                    let pt = DisjunctPoint::new(psi, zp, zm, theta, dpf);
                    let member = check_point_in_disjunction(&pt, &p, 1e-9).unwrap();
                    assert_eq!(rows_hold(&rows, &pt), member != Membership::None, "{pt:?}");
                }
            }
        }
    }

    #[test]
    fn convex_combinations_satisfy_rows() {
        let p = fixture();
        let rows = block_rows(&p, true);
        let pts = enumerate_extreme_points(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let mut w: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            let c = DisjunctPoint::combine(&pts, &w);
            assert!(rows_hold(&rows, &c), "{c:?}");
            assert!(extended_feasible(&rows, c.psi, c.theta, c.dpf));
        }
    }

    #[test]
    fn containment_sample() {
        let a = relaxation_containment_sample(&fixture(), 10_000, 7).unwrap();
        let b = relaxation_containment_sample(&fixture(), 10_000, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
        assert!(a.strictness > 0.0);
        assert!(relaxation_containment_sample(&fixture(), 0, 7).is_err());
    }
}

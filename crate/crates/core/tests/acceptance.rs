//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tnep_facts::analysis::{summarize_plan, validate_solution};
use tnep_facts::fixtures::{congestion_triangle, random_small_instance, two_bus, Instance};
use tnep_facts::formulations::{build, BuildOptions, DisjunctBlockParams, FormulationKind};
use tnep_facts::grid::{select_scenarios, synth_network_with, CostConfig, SynthSpec};
use tnep_facts::milp::{model_stats, ModelIR, SolutionRecord, SolveStatus};
use tnep_facts::polyhedra::verify_facets;
use tnep_facts::refsolver::{brute_force_milp, solve_lp, solve_milp, BnBConfig, LpStatus};

const N_RANDOM: u64 = 200;
const REL: f64 = 1e-6;
const VALIDATION_TOL: f64 = 1e-6;

type Outcome = Result<String, String>;

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn opts(tighten: bool) -> BuildOptions {
    BuildOptions {
        tighten_bounds: tighten,
        ..Default::default()
    }
}

fn model(inst: &Instance, kind: FormulationKind, o: &BuildOptions) -> ModelIR {
    build(kind, &inst.network, &inst.scenarios, &inst.costs, o).expect("instance builds")
}

fn criterion_1() -> Outcome {
    let (net, ts) = synth_network_with(123, &SynthSpec::texas()).map_err(|e| e.to_string())?;
    let scenarios = select_scenarios(&net, &ts).map_err(|e| e.to_string())?;
    if scenarios.len() != 10 {
        return Err(format!("{} scenarios selected", scenarios.len()));
    }
    let costs = CostConfig::default();
    let no_cap = BuildOptions {
        emit_eq22: false,
        ..Default::default()
    };
    let expected = [
        (FormulationKind::Tnep, 9_415, 13_980),
        (FormulationKind::Fbsm, 14_770, 29_280),
        (FormulationKind::Fbsmi, 14_770, 29_280),
        (FormulationKind::Facets, 17_320, 36_930),
    ];
    let mut detail = Vec::new();
    let mut bad = Vec::new();
    for (kind, vars, rows) in expected {
        let t = Instant::now();
        let m = build(kind, &net, &scenarios, &costs, &no_cap).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        let st = model_stats(&m);
        detail.push(format!("{kind} {}/{} in {secs:.2}s", st.n_vars, st.n_constraints));
        if st.n_vars != vars || st.n_constraints != rows || secs >= 5.0 {
            bad.push(format!("{kind}: {}/{} in {secs:.2}s, want {vars}/{rows} under 5s", st.n_vars, st.n_constraints));
        }
    }
    if bad.is_empty() {
        Ok(detail.join("; "))
    } else {
        Err(bad.join("; "))
    }
}

fn random_block(rng: &mut ChaCha8Rng) -> DisjunctBlockParams {
    let mag = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| 10f64.powf(rng.gen_range(lo..hi));
    DisjunctBlockParams {
        theta_min: -mag(rng, -2.0, 0.5),
        theta_max: mag(rng, -2.0, 0.5),
        db_min: -mag(rng, -2.0, 4.0),
        db_max: mag(rng, -2.0, 4.0),
        flow_cap: mag(rng, 0.0, 4.0),
    }
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for draw in 0..1000 {
        let p = random_block(&mut rng);
        let r = verify_facets(&p);
        if let Some(q) = r.inequalities.iter().find(|q| !q.valid || !q.is_facet) {
            return Err(format!("draw {draw} {p:?}: {} valid={} rank={}", q.label, q.valid, q.affine_rank));
        }
        if r.n_facets() != 11 {
            return Err(format!("draw {draw}: {} facets reported", r.n_facets()));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    if secs >= 10.0 {
        return Err(format!("took {secs:.2}s"));
    }
    Ok(format!("1000 draws, all 8 inequalities facet-defining each (11 facets with the bound facets), {secs:.2}s"))
}

/// Everything criteria 3 to 7 need about one instance.
struct Solved {
    inst: Instance,
    /// Enumeration optimum per formulation, default build.
    oracle: Vec<SolutionRecord>,
    /// Enumeration optimum per formulation, tightened build.
    oracle_tight: Vec<SolutionRecord>,
    lp_fbsm: f64,
    lp_fbsmi: f64,
    lp_facets: f64,
    lp_facets_untightened: f64,
}

fn solve_instance(inst: Instance) -> Result<Solved, String> {
    let mut oracle = Vec::new();
    let mut oracle_tight = Vec::new();
    for kind in FormulationKind::ALL {
        for (tight, out) in [(false, &mut oracle), (true, &mut oracle_tight)] {
            let m = model(&inst, kind, &opts(tight));
            let sol = brute_force_milp(&m).map_err(|e| format!("{}: {kind}: {e}", inst.name))?;
            if sol.status != SolveStatus::Optimal {
                return Err(format!("{}: {kind}: enumeration status {}", inst.name, sol.status));
            }
            out.push(sol);
        }
    }
    let lp = |kind, tight| {
        let r = solve_lp(&model(&inst, kind, &opts(tight)).relaxed());
        if r.status == LpStatus::Optimal {
            Ok(r.objective)
        } else {
            Err(format!("{}: {kind} LP relaxation {:?}", inst.name, r.status))
        }
    };
    Ok(Solved {
        lp_fbsm: lp(FormulationKind::Fbsm, false)?,
        lp_fbsmi: lp(FormulationKind::Fbsmi, false)?,
        lp_facets: lp(FormulationKind::Facets, true)?,
        lp_facets_untightened: lp(FormulationKind::Facets, false)?,
        inst,
        oracle,
        oracle_tight,
    })
}

fn criterion_3(set: &[Solved]) -> Outcome {
    let mut tnep_strict = 0;
    for s in set {
        let obj: Vec<f64> = s.oracle.iter().map(|r| r.objective).collect();
        let (tnep, fbsm, fbsmi, facets) = (obj[0], obj[1], obj[2], obj[3]);
        if rel_diff(fbsm, fbsmi) > REL || rel_diff(fbsm, facets) > REL {
            return Err(format!("{}: fbsm {fbsm} fbsmi {fbsmi} facets {facets}", s.inst.name));
        }
        if tnep < facets - REL * facets.abs().max(1.0) {
            return Err(format!("{}: tnep {tnep} below facts optimum {facets}", s.inst.name));
        }
        if rel_diff(tnep, facets) > REL {
            tnep_strict += 1;
        }
    }
    Ok(format!(
        "{} instances, FACTS optima equal; TNEP strictly worse on {tnep_strict}",
        set.len()
    ))
}

fn criterion_4(set: &[Solved]) -> Outcome {
    let slack = |v: f64| 1e-9 * v.abs().max(1.0);
    let mut untightened_below = 0;
    for s in set {
        if s.lp_facets < s.lp_fbsmi - slack(s.lp_fbsmi) {
            return Err(format!("{}: LP facets {} < fbsmi {}", s.inst.name, s.lp_facets, s.lp_fbsmi));
        }
        if s.lp_fbsmi < s.lp_fbsm - slack(s.lp_fbsm) {
            return Err(format!("{}: LP fbsmi {} < fbsm {}", s.inst.name, s.lp_fbsmi, s.lp_fbsm));
        }
        if s.lp_facets_untightened < s.lp_fbsmi - slack(s.lp_fbsmi) {
            untightened_below += 1;
        }
    }
    let tri = set
        .iter()
        .find(|s| s.inst.name == "congestion-triangle")
        .ok_or("congestion fixture missing")?;
    if !(tri.lp_facets > tri.lp_fbsm + slack(tri.lp_fbsm)) {
        return Err(format!(
            "no strict gap on the congestion fixture: facets {} fbsm {}",
            tri.lp_facets, tri.lp_fbsm
        ));
    }
    Ok(format!(
        "{} instances; strict on congestion-triangle ({:.2} > {:.2}); FACeTS built with angle tightening (without it {untightened_below} instances fall below FBSMi)",
        set.len(),
        tri.lp_facets,
        tri.lp_fbsm
    ))
}

fn criterion_5(set: &[Solved]) -> Outcome {
    let mut rows_checked = 0usize;
    for s in set {
        for (k, kind) in FormulationKind::ALL.into_iter().enumerate() {
            let (a, b) = (s.oracle[k].objective, s.oracle_tight[k].objective);
            if rel_diff(a, b) > REL {
                return Err(format!("{}: {kind} optimum {a} vs tightened {b}", s.inst.name));
            }
            let loose = model(&s.inst, kind, &opts(false));
            let tight = model(&s.inst, kind, &opts(true));
            if loose.variables != tight.variables || loose.constraints.len() != tight.constraints.len() {
                return Err(format!("{}: {kind} tightening changed the model shape", s.inst.name));
            }
            for (l, t) in loose.constraints.iter().zip(&tight.constraints) {
                let widened = if l.name.starts_with("ang_hi_") {
                    t.rhs > l.rhs
                } else if l.name.starts_with("ang_lo_") {
                    t.rhs < l.rhs
                } else {
                    continue;
                };
                rows_checked += 1;
                if widened {
                    return Err(format!("{}: {kind} row {} loosened", s.inst.name, l.name));
                }
            }
        }
    }
    Ok(format!(
        "{} instances x 4 formulations, optima unchanged, {rows_checked} angle rows never loosened",
        set.len()
    ))
}

fn criterion_6(set: &[Solved]) -> Outcome {
    let cfg = BnBConfig {
        gap: 1e-9,
        ..Default::default()
    };
    let mut nodes_total = 0;
    for s in set {
        for (k, kind) in FormulationKind::ALL.into_iter().enumerate() {
            let m = model(&s.inst, kind, &opts(false));
            let (a, sa) = solve_milp(&m, &cfg).map_err(|e| e.to_string())?;
            let (b, sb) = solve_milp(&m, &cfg).map_err(|e| e.to_string())?;
            if a.status != SolveStatus::Optimal {
                return Err(format!("{}: {kind} B&B status {}", s.inst.name, a.status));
            }
            let oracle = s.oracle[k].objective;
            if rel_diff(a.objective, oracle) > REL {
                return Err(format!("{}: {kind} B&B {} vs oracle {oracle}", s.inst.name, a.objective));
            }
            if sa != sb || a.values != b.values {
                return Err(format!("{}: {kind} repeated runs differ ({} vs {} nodes)", s.inst.name, sa.nodes, sb.nodes));
            }
            if sa.bound > sa.incumbent + 1e-9 * sa.incumbent.abs().max(1.0) {
                return Err(format!("{}: {kind} bound {} above incumbent {}", s.inst.name, sa.bound, sa.incumbent));
            }
            nodes_total += sa.nodes;
        }
    }
    Ok(format!(
        "{} solves agree with enumeration, {nodes_total} nodes, deterministic",
        set.len() * 4
    ))
}

fn criterion_7(set: &[Solved]) -> Outcome {
    let o = opts(false);
    let mut perturbations = 0usize;
    for s in set {
        let inst = &s.inst;
        for (k, kind) in FormulationKind::ALL.into_iter().enumerate() {
            let sol = &s.oracle[k];
            let r = validate_solution(&inst.network, &inst.scenarios, kind, &o, sol, VALIDATION_TOL)
                .map_err(|e| e.to_string())?;
            if !r.pass {
                return Err(format!("{}: {kind} oracle optimum fails {:?}", inst.name, r.failed_families()));
            }
            let summary = summarize_plan(&inst.network, &inst.scenarios, &inst.costs, sol)
                .map_err(|e| e.to_string())?;
            if rel_diff(summary.total_cost, sol.objective) > REL {
                return Err(format!(
                    "{}: {kind} summary total {} vs objective {}",
                    inst.name, summary.total_cost, sol.objective
                ));
            }
            for name in sol.values.keys() {
                for sign in [1.0, -1.0] {
                    let mut p = sol.clone();
                    *p.values.get_mut(name).unwrap() += sign * 10.0 * VALIDATION_TOL;
                    let r = validate_solution(&inst.network, &inst.scenarios, kind, &o, &p, VALIDATION_TOL)
                        .map_err(|e| e.to_string())?;
                    perturbations += 1;
                    if r.pass {
                        return Err(format!("{}: {kind} perturbing {name} by {sign}e-5 still passes", inst.name));
                    }
                }
            }
        }
    }
    Ok(format!(
        "{} optima validate; all {perturbations} single-coordinate perturbations rejected",
        set.len() * 4
    ))
}

fn criterion_8(set: &[Solved]) -> Outcome {
    let mut detail = Vec::new();
    for name in ["two-bus", "congestion-triangle"] {
        let s = set.iter().find(|s| s.inst.name == name).ok_or("fixture missing")?;
        let energy = |sol: &SolutionRecord| {
            summarize_plan(&s.inst.network, &s.inst.scenarios, &s.inst.costs, sol)
                .map(|p| p.unserved_mwh + p.curtailed_mwh)
                .map_err(|e| e.to_string())
        };
        let tnep = energy(&s.oracle[0])?;
        for k in 1..4 {
            let facts = energy(&s.oracle[k])?;
            if facts > tnep + 1e-6 {
                return Err(format!("{name}: FACTS plan {facts} MWh above TNEP {tnep} MWh"));
            }
            if name == "congestion-triangle" && !(facts < tnep - 1e-6) {
                return Err(format!("{name}: FACTS plan {facts} MWh not below TNEP {tnep} MWh"));
            }
        }
        detail.push(format!("{name}: TNEP {tnep:.1} MWh, FACTS {:.1} MWh", energy(&s.oracle[3])?));
    }
    Ok(format!(
        "{}; published dataset values are not reproduced (synthetic data)",
        detail.join("; ")
    ))
}

fn report(id: u32, title: &str, outcome: &Outcome, secs: f64) -> bool {
    match outcome {
        Ok(d) => println!("PASS criterion {id} ({title}) [{secs:.1}s]: {d}"),
        Err(d) => println!("FAIL criterion {id} ({title}) [{secs:.1}s]: {d}"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let mut ok = true;
    let t = Instant::now();
    ok &= report(1, "model-size reproduction", &criterion_1(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    ok &= report(2, "facet verification", &criterion_2(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let mut instances = vec![two_bus(), congestion_triangle()];
    instances.extend((0..N_RANDOM).map(random_small_instance));
    let solved: Result<Vec<Solved>, String> = instances.into_iter().map(solve_instance).collect();
    let prep = t.elapsed().as_secs_f64();
    let checks: [(u32, &str, fn(&[Solved]) -> Outcome); 6] = [
        (3, "formulation equivalence", criterion_3),
        (4, "relaxation dominance", criterion_4),
        (5, "bound-tightening safety", criterion_5),
        (6, "solver cross-check", criterion_6),
        (7, "validation round-trip", criterion_7),
        (8, "FACTS plan energy on congestion fixtures", criterion_8),
    ];
    match solved {
        Ok(set) => {
            println!("(solved {} instances by enumeration in {prep:.1}s)", set.len());
            for (id, title, f) in checks {
                let t = Instant::now();
                ok &= report(id, title, &f(&set), t.elapsed().as_secs_f64());
            }
        }
        Err(e) => {
            for (id, title, _) in checks {
                ok &= report(id, title, &Err(format!("instance set failed: {e}")), prep);
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

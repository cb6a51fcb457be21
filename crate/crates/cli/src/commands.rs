use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use tnep_facts::analysis::{emit_geo_csv, summarize_plan, validate_solution, GeoMetric, PlanSummary};
use tnep_facts::fixtures::{self, Instance};
use tnep_facts::formulations::{build, BuildOptions, DisjunctBlockParams, FormulationKind};
use tnep_facts::grid::{
    load_network, scale_series, select_scenarios, synth_network_with, CostConfig, HourlyTimeSeries,
    Scenario, SeriesFactors, SynthSpec,
};
use tnep_facts::milp::{model_stats, read_solution, write_mps_to, ModelIR, ModelStats, SolutionRecord, SolveStatus};
use tnep_facts::polyhedra::verify_facets;
use tnep_facts::refsolver::{solve_milp, BnBConfig, BnBStats, DESK_SCALE_MAX_VARS};

use crate::cli::{
    BuildArgs, CompareArgs, Engine, GenerateArgs, InstanceArgs, ModelFlags, ReportArgs, ScenariosArgs,
    SolveArgs, SolverFlags, VerifyArgs,
};
use crate::manifest::{Outputs, RunManifest};
use crate::{EngineLimit, VerificationFailed};

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let mut spec = if a.texas {
        SynthSpec::texas()
    } else {
        SynthSpec::new(a.buses, a.branches, a.gens, a.renewable_fraction)
    };
    spec.n_hours = a.hours;
    let mut m = RunManifest::new("generate", &a.out.out);
    m.inputs = to_value(&spec);
    m.seed = Some(a.seed);

    let (net, ts) = synth_network_with(a.seed, &spec)?;
    let out = Outputs::open(&m)?;
    out.json("network.json", &net)?;
    let mut csv = Vec::new();
    ts.to_writer(&mut csv).context("cannot serialise the hourly series")?;
    out.plain("timeseries.csv", &String::from_utf8(csv)?)?;
    println!(
        "network: {} buses, {} branches, {} generators; series: {} hours -> {}",
        net.n_buses(),
        net.n_branches(),
        net.n_generators(),
        ts.n_hours(),
        out.dir.display()
    );
    Ok(())
}

fn read_series(net: &tnep_facts::grid::Network, path: &Path) -> Result<HourlyTimeSeries> {
    let ts = HourlyTimeSeries::read_csv(path)?;
    ts.validate(net)?;
    Ok(ts)
}

pub fn scenarios(a: &ScenariosArgs) -> Result<()> {
    let factors = SeriesFactors {
        load: a.load_factor,
        wind: a.wind_factor,
        solar: a.solar_factor,
    };
    let mut m = RunManifest::new("scenarios", &a.out.out);
    m.inputs = json!({ "network": a.network, "series": a.series, "factors": factors });

    let net = load_network(&a.network)?;
    let ts = scale_series(&net, &read_series(&net, &a.series)?, factors)?;
    let picked = select_scenarios(&net, &ts)?;
    let out = Outputs::open(&m)?;
    out.json("scenarios.json", &json!({ "scenarios": picked }))?;
    for sc in &picked {
        println!("{:<24} hour {:>5}  load {:>10.1} MW", sc.id, sc.hour.unwrap_or(0), sc.total_load());
    }
    Ok(())
}

fn read_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    let list = match doc {
        Value::Object(mut map) => map.remove("scenarios").unwrap_or(Value::Null),
        other => other,
    };
    serde_json::from_value(list).with_context(|| format!("{} does not hold a scenario list", path.display()))
}

fn load_instance(a: &InstanceArgs) -> Result<Instance> {
    let mut inst = match (&a.fixture, &a.network) {
        (Some(name), _) if name == "random" => fixtures::random_small_instance(a.seed),
        (Some(name), _) => fixtures::by_name(name)?,
        (None, Some(path)) => {
            let network = load_network(path)?;
            let scenarios = match (&a.scenarios, &a.series) {
                (Some(p), _) => read_scenarios(p)?,
                (None, Some(p)) => select_scenarios(&network, &read_series(&network, p)?)?,
                (None, None) => bail!("--network needs --scenarios or --series"),
            };
            for sc in &scenarios {
                sc.validate(&network)?;
            }
            Instance {
                name: path.file_stem().map_or("network".into(), |s| s.to_string_lossy().into_owned()),
                network,
                scenarios,
                costs: CostConfig::default(),
            }
        }
        (None, None) => bail!("name an instance with --fixture or --network"),
    };
    if let Some(p) = &a.costs {
        let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        inst.costs = serde_json::from_str(&text).with_context(|| format!("{} is not a cost config", p.display()))?;
    }
    inst.costs.validate()?;
    Ok(inst)
}

fn model_manifest(command: &'static str, out: &Path, inst: &InstanceArgs, model: &ModelFlags) -> RunManifest {
    let mut m = RunManifest::new(command, out);
    m.inputs = to_value(inst);
    m.formulation = Some(to_value(&model.formulation));
    m.flags = Some(to_value(&model.shared));
    m.seed = Some(inst.seed);
    m
}

fn build_model(inst: &Instance, kind: FormulationKind, opts: &BuildOptions) -> Result<ModelIR> {
    Ok(build(kind, &inst.network, &inst.scenarios, &inst.costs, opts)?)
}

#[derive(Serialize)]
struct StatsDoc<'a> {
    formulation: FormulationKind,
    instance: &'a str,
    #[serde(flatten)]
    stats: ModelStats,
}

pub fn build_cmd(a: &BuildArgs) -> Result<()> {
    let m = model_manifest("build", &a.out.out, &a.instance, &a.model);
    let inst = load_instance(&a.instance)?;
    let kind = a.model.formulation;
    let model = build_model(&inst, kind, &a.model.shared.options())?;
    let stats = model_stats(&model);
    let out = Outputs::open(&m)?;
    out.tagged(&format!("model_{kind}.mps"), "*", &write_mps_to(&model)?)?;
    out.json(
        &format!("stats_{kind}.json"),
        &StatsDoc {
            formulation: kind,
            instance: &inst.name,
            stats,
        },
    )?;
    println!("{kind}: {} variables, {} constraints", stats.n_vars, stats.n_constraints);
    Ok(())
}

fn bnb_config(s: &SolverFlags) -> BnBConfig {
    BnBConfig {
        gap: s.gap,
        node_limit: s.node_limit,
        time_limit: s.time_limit.map(Duration::from_secs_f64),
        ..Default::default()
    }
}

fn refuse_large(model: &ModelIR) -> Result<()> {
    if model.n_vars() > DESK_SCALE_MAX_VARS {
        return Err(EngineLimit(format!(
            "{} has {} variables; the reference engine handles at most {DESK_SCALE_MAX_VARS}. \
             Write the model with `build`, solve it externally and pass --engine external --solution <file>",
            model.name,
            model.n_vars()
        ))
        .into());
    }
    Ok(())
}

fn ref_solve(model: &ModelIR, cfg: &BnBConfig) -> Result<(SolutionRecord, BnBStats)> {
    refuse_large(model)?;
    solve_milp(model, cfg).map_err(|e| match e {
        tnep_facts::Error::SolverLimit(msg) => EngineLimit(msg).into(),
        e => e.into(),
    })
}

pub fn solve(a: &SolveArgs) -> Result<()> {
    let mut m = model_manifest("solve", &a.out.out, &a.instance, &a.model);
    m.engine = Some(to_value(&a.solver));
    if let Some(p) = &a.solution {
        m.inputs["solution"] = to_value(p);
    }
    let inst = load_instance(&a.instance)?;
    let kind = a.model.formulation;
    let opts = a.model.shared.options();
    let model = build_model(&inst, kind, &opts)?;

    let (sol, stats, warnings) = match a.solver.engine {
        Engine::Ref => {
            let (sol, stats) = ref_solve(&model, &bnb_config(&a.solver))?;
            (sol, Some(stats), Vec::new())
        }
        Engine::External => {
            let path = a.solution.as_deref().expect("clap enforces --solution");
            let (sol, warnings) = read_solution(path, &model)?;
            (sol, None, warnings)
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let validation = if sol.status.has_solution() {
        Some(validate_solution(&inst.network, &inst.scenarios, kind, &opts, &sol, 1e-6)?)
    } else {
        None
    };

    let out = Outputs::open(&m)?;
    out.tagged(&format!("solution_{kind}.sol"), "#", &sol.to_text())?;
    out.json(
        &format!("solve_{kind}.json"),
        &json!({
            "formulation": kind,
            "instance": inst.name,
            "engine": a.solver.engine,
            "status": sol.status,
            "objective": sol.objective,
            "bound": sol.bound,
            "stats": stats,
            "model": model_stats(&model),
            "validation_pass": validation.as_ref().map(|v| v.pass),
            "warnings": warnings,
        }),
    )?;
    match &stats {
        Some(s) => println!(
            "{kind}: {} objective {} bound {} gap {:.2e} nodes {}",
            sol.status, sol.objective, s.bound, s.gap, s.nodes
        ),
        None => println!("{kind}: {} objective {} (imported)", sol.status, sol.objective),
    }
    if sol.status == SolveStatus::Limit {
        return Err(EngineLimit(format!("{kind}: stopped at a node or time limit")).into());
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Result<()> {
    if a.instance.is_given() {
        let Some(sol_path) = &a.solution else {
            bail!("validating an instance needs --solution");
        };
        let mut m = model_manifest("verify", &a.out.out, &a.instance, &a.model);
        m.inputs["solution"] = to_value(sol_path);
        m.inputs["tol"] = json!(a.tol);
        let inst = load_instance(&a.instance)?;
        let kind = a.model.formulation;
        let opts = a.model.shared.options();
        let model = build_model(&inst, kind, &opts)?;
        let (sol, warnings) = read_solution(sol_path, &model)?;
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        let report = validate_solution(&inst.network, &inst.scenarios, kind, &opts, &sol, a.tol)?;
        let out = Outputs::open(&m)?;
        out.json("verify.json", &report)?;
        for (name, f) in &report.families {
            println!("{name:<12} checked {:>6}  max violation {:.3e}", f.checked, f.max_violation);
        }
        if !report.pass {
            let detail: Vec<String> = report
                .failed_families()
                .iter()
                .map(|f| {
                    let worst = report.families.get(*f).and_then(|r| r.worst.clone());
                    format!("{f} ({:.3e}{})", report.max_violation(f), worst.map(|w| format!(" at {w}")).unwrap_or_default())
                })
                .collect();
            return Err(VerificationFailed(format!("solution violates: {}", detail.join(", "))).into());
        }
        println!("solution valid at tolerance {}", a.tol);
        return Ok(());
    }
    if a.solution.is_some() {
        bail!("--solution needs an instance (--fixture or --network)");
    }

    let params = DisjunctBlockParams {
        theta_min: a.theta_min,
        theta_max: a.theta_max,
        db_min: a.db_min,
        db_max: a.db_max,
        flow_cap: a.flow_cap,
    };
    let finite = [a.theta_min, a.theta_max, a.db_min, a.db_max, a.flow_cap].iter().all(|v| v.is_finite());
    if !finite {
        bail!("block parameters must be finite");
    }
    let mut m = RunManifest::new("verify", &a.out.out);
    m.inputs = to_value(&params);
    let report = verify_facets(&params);
    let out = Outputs::open(&m)?;
    out.json("verify.json", &report)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for q in &report.inequalities {
        println!(
            "{:<16} valid {:<5} tight {:>2}  rank {}  facet {}",
            q.label,
            q.valid,
            q.tight_points.len(),
            q.affine_rank,
            q.is_facet
        );
    }
    if report.applicable && !report.all_facets() {
        let bad: Vec<&str> = report.inequalities.iter().filter(|q| !q.is_facet).map(|q| q.label.as_str()).collect();
        return Err(VerificationFailed(format!("not facet-defining: {}", bad.join(", "))).into());
    }
    if report.applicable {
        println!("all {} inequalities are facet-defining", report.inequalities.len());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CompareRow {
    formulation: FormulationKind,
    n_vars: usize,
    n_constraints: usize,
    n_binary: usize,
    n_integer: usize,
    /// Solve status, `missing` when no external solution was supplied.
    status: String,
    objective: Option<f64>,
    bound: Option<f64>,
    gap: Option<f64>,
    nodes: Option<usize>,
}

fn compare_text(rows: &[CompareRow]) -> String {
    let num = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    let mut s = String::new();
    writeln!(
        s,
        "{:<12} {:>10} {:>10} {:>10} {:>16} {:>16} {:>10} {:>8}",
        "Formulation", "Vars", "Constrs", "Status", "Objective", "Bound", "Gap", "Nodes"
    )
    .unwrap();
    for r in rows {
        writeln!(
            s,
            "{:<12} {:>10} {:>10} {:>10} {:>16} {:>16} {:>10} {:>8}",
            r.formulation.to_string(),
            r.n_vars,
            r.n_constraints,
            r.status,
            num(r.objective),
            num(r.bound),
            r.gap.map_or("-".into(), |g| format!("{g:.2e}")),
            r.nodes.map_or("-".into(), |n| n.to_string())
        )
        .unwrap();
    }
    s
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let mut m = RunManifest::new("compare", &a.out.out);
    m.inputs = to_value(&a.instance);
    if let Some(p) = &a.solution {
        m.inputs["solution"] = to_value(p);
    }
    m.flags = Some(to_value(&a.model));
    m.engine = Some(to_value(&a.solver));
    m.seed = Some(a.instance.seed);

    let inst = load_instance(&a.instance)?;
    let opts = a.model.options();
    let models = FormulationKind::ALL
        .iter()
        .map(|&k| build_model(&inst, k, &opts))
        .collect::<Result<Vec<_>>>()?;

    type Outcome = Option<(SolutionRecord, Option<BnBStats>)>;
    let solved: Vec<Outcome> = match a.solver.engine {
        Engine::Ref => {
            for model in &models {
                refuse_large(model)?;
            }
            let cfg = bnb_config(&a.solver);
            // Independent solves; each stays single-threaded and deterministic.
            let results: Vec<Result<(SolutionRecord, BnBStats)>> = std::thread::scope(|scope| {
                let handles: Vec<_> = models.iter().map(|model| scope.spawn(|| ref_solve(model, &cfg))).collect();
                handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
            });
            results
                .into_iter()
                .map(|r| r.map(|(sol, st)| Some((sol, Some(st)))))
                .collect::<Result<_>>()?
        }
        Engine::External => {
            let dir = a.solution.as_deref().expect("clap enforces --solution");
            let mut out = Vec::new();
            for (kind, model) in FormulationKind::ALL.iter().zip(&models) {
                let path = dir.join(format!("{kind}.sol"));
                if !path.exists() {
                    eprintln!("warning: no {} for {kind}", path.display());
                    out.push(None);
                    continue;
                }
                let (sol, warnings) = read_solution(&path, model)?;
                for w in warnings {
                    eprintln!("warning: {kind}: {w}");
                }
                out.push(Some((sol, None)));
            }
            out
        }
    };

    let rows: Vec<CompareRow> = FormulationKind::ALL
        .iter()
        .zip(&models)
        .zip(&solved)
        .map(|((&kind, model), outcome)| {
            let st = model_stats(model);
            let mut row = CompareRow {
                formulation: kind,
                n_vars: st.n_vars,
                n_constraints: st.n_constraints,
                n_binary: st.n_binary,
                n_integer: st.n_integer,
                status: "missing".into(),
                objective: None,
                bound: None,
                gap: None,
                nodes: None,
            };
            if let Some((sol, stats)) = outcome {
                row.status = sol.status.to_string();
                row.objective = sol.status.has_solution().then_some(sol.objective);
                row.bound = sol.bound.is_finite().then_some(sol.bound);
                row.gap = stats.map(|s| s.gap).filter(|g| g.is_finite());
                row.nodes = stats.map(|s| s.nodes);
            }
            row
        })
        .collect();

    let facts: Vec<f64> = rows
        .iter()
        .filter(|r| r.formulation.has_facts())
        .filter_map(|r| r.objective)
        .collect();
    let agree = match (
        facts.iter().copied().reduce(f64::min),
        facts.iter().copied().reduce(f64::max),
    ) {
        (Some(lo), Some(hi)) => hi - lo <= a.solver.gap * hi.abs().max(1.0) + 1e-9,
        _ => true,
    };

    let out = Outputs::open(&m)?;
    out.json(
        "compare.json",
        &json!({ "instance": inst.name, "rows": rows, "facts_objectives_agree": agree }),
    )?;
    let text = compare_text(&rows);
    out.tagged("compare.txt", "#", &text)?;
    print!("{text}");

    if rows.iter().any(|r| r.status == SolveStatus::Limit.to_string()) {
        return Err(EngineLimit("a formulation stopped at a node or time limit".into()).into());
    }
    if !agree {
        return Err(VerificationFailed(format!(
            "FACTS formulation objectives differ by more than the gap: {facts:?}"
        ))
        .into());
    }
    Ok(())
}

fn summary_text(kind: FormulationKind, p: &PlanSummary) -> String {
    let mut s = String::new();
    let mut line = |label: &str, value: String| writeln!(s, "{label:<34} {value:>18}").unwrap();
    line("Formulation", kind.to_string());
    line("Scenarios", p.n_scenarios.to_string());
    line("Total cost ($)", format!("{:.2}", p.total_cost));
    line("Capacity upgrade cost ($)", format!("{:.2}", p.capacity_cost));
    line("TCSC cost ($)", format!("{:.2}", p.tcsc_cost));
    line("Generation cost, all scenarios ($)", format!("{:.2}", p.generation_cost));
    line("Non-renewable generation cost ($)", format!("{:.2}", p.nonrenewable_generation_cost));
    line("Imbalance penalty ($)", format!("{:.2}", p.imbalance_penalty));
    line("Unserved energy, sum (MWh)", format!("{:.3}", p.unserved_mwh));
    line("Unserved energy, mean (MWh)", format!("{:.3}", p.unserved_mwh_mean));
    line("Overserved energy, sum (MWh)", format!("{:.3}", p.overserved_mwh));
    line("Curtailed energy, sum (MWh)", format!("{:.3}", p.curtailed_mwh));
    line("Curtailed energy, mean (MWh)", format!("{:.3}", p.curtailed_mwh_mean));
    for (level, count) in &p.upgrades_by_level {
        line(&format!("Branches upgraded {level} level(s)"), count.to_string());
    }
    line("Upgraded capacity (MW)", format!("{:.1}", p.upgraded_mw));
    line("TCSC devices", p.tcsc_count.to_string());
    s
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let mut m = model_manifest("report", &a.out.out, &a.instance, &a.model);
    m.inputs["solution"] = to_value(&a.solution);
    let inst = load_instance(&a.instance)?;
    let kind = a.model.formulation;
    let model = build_model(&inst, kind, &a.model.shared.options())?;
    let (sol, warnings) = read_solution(&a.solution, &model)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let plan = summarize_plan(&inst.network, &inst.scenarios, &inst.costs, &sol)?;
    let out = Outputs::open(&m)?;
    out.json(&format!("summary_{kind}.json"), &plan)?;
    let text = summary_text(kind, &plan);
    out.tagged(&format!("summary_{kind}.txt"), "#", &text)?;
    print!("{text}");
    for metric in [GeoMetric::Unserved, GeoMetric::Curtailed, GeoMetric::Investment, GeoMetric::Tcsc] {
        let path = out.path(&format!("geo_{metric}_{kind}.csv"));
        if let Err(e) = emit_geo_csv(&inst.network, &inst.scenarios, &sol, metric, &path) {
            eprintln!("warning: skipped {}: {e}", path.display());
        }
    }
    Ok(())
}

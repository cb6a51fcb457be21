use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_tnep-facts");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("TNEP_FACTS_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_small_and_reject_bad_dims() {
    let dir = TempDir::new().unwrap();
    let out = s(dir.path());
    let o = run(&["generate", "--seed", "1", "--buses", "4", "--branches", "4", "--gens", "4", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let net = json(dir.path().join("network.json"));
    assert_eq!(net["buses"].as_array().unwrap().len(), 4);
    assert!(dir.path().join("timeseries.csv").exists());
    let manifest = json(dir.path().join("manifest.json"));
    assert_eq!(net["manifest_hash"], manifest["manifest_hash"]);

    let o = run(&["generate", "--buses", "5", "--branches", "3", "--out", out]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("branches"), "{}", stderr(&o));
}

#[test]
fn commands_are_idempotent() {
    let a = TempDir::new().unwrap();
    let read = |name: &str| fs::read_to_string(a.path().join(name)).unwrap();
    let gen = ["generate", "--seed", "3", "--hours", "200", "--out", s(a.path())];
    assert_eq!(code(&run(&gen)), 0);
    let (net, ts) = (read("network.json"), read("timeseries.csv"));
    assert_eq!(code(&run(&gen)), 0);
    assert!(net == read("network.json") && ts == read("timeseries.csv"));
    let out = s(a.path());
    let args = ["build", "--fixture", "congestion-triangle", "--formulation", "fbsm", "--out", out];
    run(&args);
    let first = read("model_fbsm.mps");
    run(&args);
    assert!(first == read("model_fbsm.mps"));
    assert!(first.starts_with("* manifest "));
}

#[test]
fn scenarios_from_a_full_year() {
    let dir = TempDir::new().unwrap();
    let out = s(dir.path());
    assert_eq!(code(&run(&["generate", "--seed", "2", "--out", out])), 0);
    let net = dir.path().join("network.json");
    let ts = dir.path().join("timeseries.csv");
    let o = run(&["scenarios", "--network", s(&net), "--series", s(&ts), "--wind-factor", "2", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = json(dir.path().join("scenarios.json"));
    let list = doc["scenarios"].as_array().unwrap();
    assert_eq!(list.len(), 10);
    assert_eq!(list.iter().filter(|s| s["season"] == "summer").count(), 5);

    // The written list feeds straight back into a build.
    let sc = dir.path().join("scenarios.json");
    let o = run(&["build", "--network", s(&net), "--scenarios", s(&sc), "--formulation", "tnep", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // N=4, E=4, G=4, S=10.
    let stats = json(dir.path().join("stats_tnep.json"));
    assert_eq!(stats["n_vars"], 4 + 10 * (4 + 12 + 4));
    assert_eq!(stats["n_constraints"], 10 * (4 + 20));
}

#[test]
fn texas_dimensions_build_and_are_refused_by_the_reference_engine() {
    let dir = TempDir::new().unwrap();
    let out = s(dir.path());
    assert_eq!(code(&run(&["generate", "--texas", "--seed", "5", "--out", out])), 0);
    let net = dir.path().join("network.json");
    let ts = dir.path().join("timeseries.csv");
    let base = ["--network", s(&net), "--series", s(&ts), "--out", out];

    let o = run(&[&["build", "--formulation", "tnep"][..], &base].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let st = json(dir.path().join("stats_tnep.json"));
    assert_eq!((st["n_vars"].as_u64(), st["n_constraints"].as_u64()), (Some(9415), Some(13980)));

    let o = run(&[&["build", "--formulation", "facets", "--emit-eq22=false"][..], &base].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let st = json(dir.path().join("stats_facets.json"));
    assert_eq!((st["n_vars"].as_u64(), st["n_constraints"].as_u64()), (Some(17320), Some(36930)));
    let mps = fs::read_to_string(dir.path().join("model_facets.mps")).unwrap();
    let back = tnep_facts::milp::read_mps(&mps).unwrap();
    assert_eq!(back.n_vars(), 17320);

    let o = run(&[&["compare"][..], &base].concat());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("reference engine"), "{}", stderr(&o));
}

#[test]
fn unknown_formulation_is_a_usage_error() {
    let o = run(&["build", "--fixture", "two-bus", "--formulation", "nope"]);
    assert_eq!(code(&o), 1);
    let o = run(&["build", "--out", "/tmp"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--fixture"));
}

#[test]
fn compare_fixture_with_both_engines() {
    let dir = TempDir::new().unwrap();
    let out = s(dir.path());
    let o = run(&["compare", "--fixture", "congestion-triangle", "--gap", "1e-9", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = json(dir.path().join("compare.json"));
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let obj: Vec<f64> = rows.iter().map(|r| r["objective"].as_f64().unwrap()).collect();
    assert!((obj[1] - obj[2]).abs() < 1e-6 && (obj[1] - obj[3]).abs() < 1e-6);
    assert!(obj[0] > obj[3]);
    assert_eq!(doc["facts_objectives_agree"], true);
    assert_eq!(doc["manifest_hash"], json(dir.path().join("manifest.json"))["manifest_hash"]);

    // Feed the reference solutions back in as external files.
    let sols = TempDir::new().unwrap();
    for kind in ["tnep", "fbsm", "fbsmi", "facets"] {
        let o = run(&["solve", "--fixture", "congestion-triangle", "--formulation", kind, "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::copy(dir.path().join(format!("solution_{kind}.sol")), sols.path().join(format!("{kind}.sol"))).unwrap();
    }
    let o = run(&[
        "compare", "--fixture", "congestion-triangle", "--engine", "external", "--solution", s(sols.path()), "--out", out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ext = json(dir.path().join("compare.json"));
    for (r, want) in ext["rows"].as_array().unwrap().iter().zip(&obj) {
        assert_eq!(r["status"], "optimal");
        assert!((r["objective"].as_f64().unwrap() - want).abs() < 1e-6);
        assert!(r["nodes"].is_null());
    }
}

#[test]
fn verify_facets_and_solutions() {
    let dir = TempDir::new().unwrap();
    let out = s(dir.path());
    let o = run(&["verify", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = json(dir.path().join("verify.json"));
    assert!(rep["inequalities"].as_array().unwrap().iter().all(|q| q["is_facet"] == true));

    let o = run(&["verify", "--db-min", "0", "--db-max", "0", "--out", out]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));

    let o = run(&["solve", "--fixture", "two-bus", "--formulation", "tnep", "--out", out]);
    assert_eq!(code(&o), 0);
    let sol = dir.path().join("solution_tnep.sol");
    let o = run(&["verify", "--fixture", "two-bus", "--formulation", "tnep", "--solution", s(&sol), "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let text = fs::read_to_string(&sol).unwrap();
    let broken: String = text
        .lines()
        .map(|l| if l.starts_with("pf_0_0 ") { "pf_0_0 75".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&sol, broken).unwrap();
    let o = run(&["verify", "--fixture", "two-bus", "--formulation", "tnep", "--solution", s(&sol), "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("flow"), "{}", stderr(&o));
}

#[test]
fn external_solution_import_and_report() {
    let dir = TempDir::new().unwrap();
    let out = s(dir.path());
    let sol = dir.path().join("ext.sol");
    fs::write(&sol, "# Objective value = 1600\ngamma_0 1\npg_0_0 150\npf_0_0 150\ntheta_1_0 0.15\n").unwrap();
    let o = run(&[
        "solve", "--fixture", "two-bus", "--formulation", "tnep", "--engine", "external", "--solution", s(&sol), "--out", out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("missing from solution"));
    let doc = json(dir.path().join("solve_tnep.json"));
    assert_eq!(doc["status"], "feasible");
    assert_eq!(doc["validation_pass"], true);

    let o = run(&["report", "--fixture", "two-bus", "--formulation", "tnep", "--solution", s(&sol), "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let plan = json(dir.path().join("summary_tnep.json"));
    assert!((plan["capacity_cost"].as_f64().unwrap() - 100.0).abs() < 1e-9);
    assert!((plan["generation_cost"].as_f64().unwrap() - 1500.0).abs() < 1e-9);
    let csv = fs::read_to_string(dir.path().join("geo_investment_tnep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("entity_id,x,y,value"));
    assert_eq!(csv.lines().count(), 2);

    let o = run(&["solve", "--fixture", "two-bus", "--engine", "external", "--out", out]);
    assert_eq!(code(&o), 1);
}

#[test]
fn environment_overrides_out() {
    let flag = TempDir::new().unwrap();
    let env = TempDir::new().unwrap();
    let o = Command::new(BIN)
        .args(["build", "--fixture", "two-bus", "--formulation", "tnep", "--out", s(flag.path())])
        .env("TNEP_FACTS_OUT", env.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(env.path().join("stats_tnep.json").exists());
    assert!(!flag.path().join("stats_tnep.json").exists());
}

#[test]
fn node_limit_maps_to_engine_limit() {
    let dir = TempDir::new().unwrap();
    let o = run(&[
        "solve", "--fixture", "congestion-triangle", "--formulation", "facets", "--node-limit", "1", "--out", s(dir.path()),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let doc = json(dir.path().join("solve_facets.json"));
    assert_eq!(doc["status"], "limit");
}

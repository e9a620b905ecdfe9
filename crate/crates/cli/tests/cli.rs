//! End-to-end runs of the binary: generate -> solve -> simulate -> bench ->
//! qrtd, exercising the file formats the subcommands exchange.

use std::process::Command;

fn opsbd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opsbd"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn opsbd");
    assert!(
        out.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn generate_solve_simulate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scen.json");
    let sol = dir.path().join("sol.json");
    let trace = dir.path().join("trace.csv");

    run_ok(opsbd().args([
        "generate",
        "--rows",
        "12",
        "--cols",
        "12",
        "--cell",
        "10",
        "--entrances-per-side",
        "2",
        "--objectives",
        "2",
        "--blocked",
        "0.05",
        "--radius",
        "20",
        "--seed",
        "5",
        "--out",
        scen.to_str().unwrap(),
    ]));
    assert!(scen.exists());

    let stdout = run_ok(opsbd().args([
        "solve",
        "--scenario",
        scen.to_str().unwrap(),
        "--algo",
        "hc",
        "--detectors",
        "2",
        "--evals",
        "10000",
        "--seed",
        "3",
        "--out",
        sol.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]));
    assert!(stdout.contains("value="));
    let sol_text = std::fs::read_to_string(&sol).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&sol_text).unwrap();
    assert_eq!(parsed["delta"], 2);
    assert_eq!(parsed["algorithm"], "hc");
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    assert!(trace_text.starts_with("elapsed_s,evals,best_w\n"));

    let stdout = run_ok(opsbd().args([
        "simulate",
        "--scenario",
        scen.to_str().unwrap(),
        "--solution",
        sol.to_str().unwrap(),
        "--trials",
        "50000",
        "--seed",
        "1",
    ]));
    assert!(stdout.contains("standard errors"));
}

#[test]
fn exact_matches_solve_on_tiny_instance() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scen.json");
    run_ok(opsbd().args([
        "generate",
        "--rows",
        "8",
        "--cols",
        "8",
        "--cell",
        "10",
        "--entrances-per-side",
        "2",
        "--objectives",
        "2",
        "--blocked",
        "0.05",
        "--radius",
        "10",
        "--seed",
        "11",
        "--out",
        scen.to_str().unwrap(),
    ]));
    let pruned = run_ok(opsbd().args([
        "exact",
        "--scenario",
        scen.to_str().unwrap(),
        "--detectors",
        "2",
    ]));
    let full = run_ok(opsbd().args([
        "exact",
        "--scenario",
        scen.to_str().unwrap(),
        "--detectors",
        "2",
        "--no-pruning",
    ]));
    let value = |s: &str| {
        s.lines()
            .next()
            .unwrap()
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix("value="))
            .unwrap()
            .parse::<f64>()
            .unwrap()
    };
    assert!((value(&pruned) - value(&full)).abs() <= 1e-12);
}

#[test]
fn bench_and_qrtd_produce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &cfg,
        r#"{
            "scenarios": {
                "generate": [
                    {"rows": 10, "cols": 10, "cell_size_m": 10.0,
                     "entrances_per_side": 2, "objectives": 2,
                     "blocked_fraction": 0.05, "radius_m": 20.0,
                     "replications": 2, "base_seed": 40}
                ]
            },
            "algorithms": [{"name": "greedy"}, {"name": "hc"}],
            "detectors": [2],
            "budget": {"evals": 5000},
            "seeds": [1],
            "write_traces": true
        }"#,
    )
    .unwrap();
    let stdout = run_ok(opsbd().args([
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--jobs",
        "1",
    ]));
    assert!(stdout.contains("friedman chi2"));
    assert!(out_dir.join("results.csv").exists());
    assert!(out_dir.join("summary.json").exists());
    let traces_glob = format!("{}/traces/*.csv", out_dir.display());
    let qrtd_out = dir.path().join("qrtd.csv");
    run_ok(opsbd().args([
        "qrtd",
        "--traces",
        &traces_glob,
        "--out",
        qrtd_out.to_str().unwrap(),
    ]));
    let qrtd_text = std::fs::read_to_string(&qrtd_out).unwrap();
    assert!(qrtd_text.starts_with("algorithm,time_s,fraction\n"));
    assert!(qrtd_text.lines().count() > 2);
}

#[test]
fn solve_rejects_missing_budget_for_stochastic_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scen.json");
    run_ok(opsbd().args([
        "generate",
        "--rows",
        "8",
        "--cols",
        "8",
        "--cell",
        "10",
        "--entrances-per-side",
        "2",
        "--objectives",
        "2",
        "--blocked",
        "0.0",
        "--radius",
        "10",
        "--seed",
        "2",
        "--out",
        scen.to_str().unwrap(),
    ]));
    let out = opsbd()
        .args([
            "solve",
            "--scenario",
            scen.to_str().unwrap(),
            "--algo",
            "hc",
            "--detectors",
            "2",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    // The deterministic greedy needs no budget.
    run_ok(opsbd().args([
        "solve",
        "--scenario",
        scen.to_str().unwrap(),
        "--algo",
        "greedy",
        "--detectors",
        "2",
    ]));
}

#[test]
fn dominance_csv_has_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scen.json");
    let dom = dir.path().join("dom.csv");
    run_ok(opsbd().args([
        "generate",
        "--rows",
        "9",
        "--cols",
        "7",
        "--cell",
        "10",
        "--entrances-per-side",
        "2",
        "--objectives",
        "2",
        "--blocked",
        "0.05",
        "--radius",
        "10",
        "--seed",
        "3",
        "--out",
        scen.to_str().unwrap(),
    ]));
    run_ok(opsbd().args([
        "dominance",
        "--scenario",
        scen.to_str().unwrap(),
        "--detectors",
        "3",
        "--out",
        dom.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&dom).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.split(',').count() == 7));
}

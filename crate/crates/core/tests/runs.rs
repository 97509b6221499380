//! End-to-end scenario runs: persisted files, determinism and qualitative
//! behaviour of the built-in examples.

use std::fs;

use coagfrag::experiments::RunReport;
use coagfrag::{
    builtin_example, convergence_study, integrate, run_scenario, uniform_grid, weighted_norm,
    NormSpec, ScenarioConfig, SolverConfig, Trajectory,
};

fn moments_column(csv: &str, column: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(column).unwrap().parse().unwrap())
        .collect()
}

fn short(id: u32) -> ScenarioConfig {
    let mut cfg = builtin_example(id).unwrap();
    cfg.model.n = 60;
    cfg.run.t_end = 0.2;
    cfg.run.output_grid_points = 21;
    cfg
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short(2);
    run_scenario(&cfg, &dir.path().join("a")).unwrap();
    run_scenario(&cfg, &dir.path().join("b")).unwrap();
    for file in ["trajectory.csv", "moments.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
}

#[test]
fn report_echoes_config_and_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short(3);
    let traj = run_scenario(&cfg, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.config, cfg);
    assert!(!report.partial);
    assert_eq!(report.solver_stats, traj.stats);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), traj.len());
    for (row, (t, u)) in rows.iter().zip(traj.times.iter().zip(&traj.states)) {
        assert_eq!(row[0].to_bits(), t.to_bits());
        for (a, b) in row[1..].iter().zip(u.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn moments_recomputable_from_states() {
    let traj = short(4).integrate().unwrap();
    let laws = short(4).model.laws;
    for (m, u) in traj.moments.iter().zip(&traj.states) {
        for (p, recorded) in m.iter().enumerate() {
            let direct = weighted_norm(u, &NormSpec::moment(p as f64), &laws);
            assert_eq!(direct.to_bits(), recorded.to_bits());
        }
    }
}

#[test]
fn example_one_moments_file_keeps_mass() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&builtin_example(1).unwrap(), dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    assert!(csv.starts_with("t,m0,m1,m2,m3,mass_flux,growth_leakage\n"));
    let m1 = moments_column(&csv, 2);
    assert_eq!(m1.len(), 101);
    assert!(m1.iter().all(|x| (x - 2000.0).abs() <= 1e-6 * 2000.0));
}

#[test]
fn example_five_mass_strictly_decreases() {
    let traj = builtin_example(5).unwrap().integrate().unwrap();
    let m = traj.mass();
    assert!(m.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn example_three_moments_decay_near_end() {
    let traj = builtin_example(3).unwrap().integrate().unwrap();
    let k = traj.len();
    let start = traj.times.iter().position(|&t| t >= 0.9).unwrap();
    for p in 0..4 {
        let series: Vec<f64> = traj.moments[start..k].iter().map(|m| m[p]).collect();
        assert!(
            series.windows(2).all(|w| w[1] < w[0]),
            "moment {p} not decaying"
        );
    }
}

#[test]
fn condition_verdicts_match_regimes() {
    for id in 1..=6 {
        let cfg = builtin_example(id).unwrap();
        let report = cfg.conditions().unwrap();
        assert!(report.well_posed(), "example {id}: {:?}", report.messages);
        if id <= 4 {
            assert_eq!(report.p, 2.0);
            assert!(report.frag_dominance.pass, "example {id}");
        } else {
            assert_eq!(report.p, 1.0);
            assert!(report.sed_dominance.pass, "example {id}");
        }
    }
}

#[test]
fn example_five_convergence_monotone() {
    let base = builtin_example(5).unwrap();
    let norm = NormSpec::new(1.5, 0.5).unwrap();
    let result = convergence_study(&base, &[25, 50, 100], 200, &norm).unwrap();
    assert!(
        result.errors.windows(2).all(|w| w[1] < w[0]),
        "{:?}",
        result.errors
    );
    assert_eq!(result.empirical_orders[0], None);
    assert!(result.empirical_orders[1..]
        .iter()
        .all(|o| o.unwrap() > 0.0));
}

#[test]
fn failed_run_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short(1);
    cfg.solver.max_steps = 5;
    let err = run_scenario(&cfg, dir.path()).unwrap_err();
    assert!(!err.is_validation());
    let report: RunReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report.partial);
    assert!(report.error.unwrap().contains("max"));
    assert!(report.diagnostics.final_time < cfg.run.t_end);
}

fn gap_to_reference(cfg: &SolverConfig, reference: &Trajectory) -> f64 {
    let mut base = builtin_example(1).unwrap();
    base.model.n = 20;
    let sys = base.system().unwrap();
    let traj = integrate(
        &sys,
        &base.initial_state(),
        (0.0, 0.1),
        cfg,
        &reference.times,
    )
    .unwrap();
    traj.states
        .iter()
        .zip(&reference.states)
        .map(|(a, b)| {
            let d: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
            weighted_norm(&d, &NormSpec::moment(1.0), sys.laws())
        })
        .fold(0.0, f64::max)
}

#[test]
fn halving_tolerances_never_increases_error() {
    let mut base = builtin_example(1).unwrap();
    base.model.n = 20;
    let sys = base.system().unwrap();
    let grid = uniform_grid(0.0, 0.1, 11);
    let reference = integrate(
        &sys,
        &base.initial_state(),
        (0.0, 0.1),
        &SolverConfig::explicit_reference(1e-5),
        &grid,
    )
    .unwrap();
    let mut previous = f64::INFINITY;
    for k in 0..6 {
        let scale = 0.5f64.powi(k);
        let cfg = SolverConfig {
            rtol: 1e-5 * scale,
            atol: 1e-7 * scale,
            ..Default::default()
        };
        let gap = gap_to_reference(&cfg, &reference);
        assert!(gap <= previous, "rtol {}: {gap} > {previous}", cfg.rtol);
        previous = gap;
    }
}

use std::fs;
use std::path::Path;

use zenoctl::dynamics::{integrate, ControlSchedule, FeedbackRule, TRAJECTORY_HEADER};
use zenoctl::experiments::{
    build_system, noiseless_reference, run_scenario, simulate, Execution, Mode, ParamValue, Resolution, RunOptions,
    RunParams, CI_MAX_POINTS,
};
use zenoctl::model::ModelKind;
use zenoctl::operator::DensityMatrix;

fn ci() -> RunOptions {
    RunOptions {
        resolution: Resolution::Ci,
        execution: Execution::Parallel,
    }
}

fn set(pairs: &[(&str, f64)]) -> Vec<(String, ParamValue)> {
    pairs.iter().map(|&(k, v)| (k.to_string(), ParamValue::Float(v))).collect()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn trajectory_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario("fig2c", Mode::Simulate, &set(&[("t_f", 20.0)]), dir.path(), &ci()).unwrap();
    let table = rows(&report.dir.join("trajectory.csv"));
    assert_eq!(table[0].join(","), TRAJECTORY_HEADER);
    // 2000 steps, one row every 10 steps, both ends included
    assert_eq!(table.len(), 1 + 201);
    let t: Vec<f64> = table[1..].iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(t[200], 20.0);
    for r in &table[1..] {
        assert_eq!(r.len(), 8);
        for cell in &r[5..] {
            assert_eq!(cell, "0", "absent controls are written as 0");
        }
    }
    assert!(table[1..].iter().any(|r| r[4] != "0"), "f1 is active");
    for variant in ["trajectory_gamma0.3.csv", "trajectory_noacc.csv"] {
        assert!(report.dir.join(variant).exists(), "{variant}");
    }
    let noacc = rows(&report.dir.join("trajectory_noacc.csv"));
    assert!(noacc[1..].iter().all(|r| r[4] == "0"));
}

#[test]
fn one_dimensional_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario("fig6a", Mode::Sweep, &set(&[("t_f", 30.0)]), dir.path(), &ci()).unwrap();
    let table = rows(&dir.path().join("fig6a/sweep.csv"));
    assert_eq!(table[0], vec!["o", "F(300)"]);
    assert_eq!(table.len(), 1 + CI_MAX_POINTS);
    assert_eq!(table[1][0], "0");
    assert_eq!(table[CI_MAX_POINTS][0], "1");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig6a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["mode"], "sweep");
    assert_eq!(m["resolution"], "ci");
    assert_eq!(m["overrides"]["t_f"], 30.0);
}

#[test]
fn time_axis_sweep_matrix() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario("fig9b", Mode::Sweep, &[], dir.path(), &ci()).unwrap();
    let table = rows(&dir.path().join("fig9b/sweep.csv"));
    assert_eq!(table[0][0], "omega\\t");
    assert_eq!(table[0].len(), 1 + CI_MAX_POINTS);
    assert_eq!(table[0][CI_MAX_POINTS], "300");
    assert_eq!(table.len(), 1 + CI_MAX_POINTS);
    // every row starts from the same initial fidelity at t = 0
    for r in &table[1..] {
        assert_eq!(r[1], table[1][1]);
        assert!(r[1..].iter().all(|c| c.parse::<f64>().unwrap().is_finite()));
    }
}

#[test]
fn stirap_scenario_writes_pulses() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario("fig3", Mode::Simulate, &[], dir.path(), &ci()).unwrap();
    let table = rows(&report.dir.join("pulses.csv"));
    assert_eq!(table[0], vec!["t", "Omega_A", "Omega_B"]);
    let peak_b = table[1..].iter().map(|r| r[2].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(peak_b > 0.15, "{peak_b}");
    // counter-intuitive order: B's leading Gaussian comes first
    let a0: f64 = table[1][1].parse().unwrap();
    let b0: f64 = table[1][2].parse().unwrap();
    assert!(b0 > a0);
}

#[test]
fn target_is_fixed_under_feedback() {
    let mut p = RunParams::default();
    p.mu = [0.3, 0.1, 0.2, 0.1];
    p.t_f = 50.0;
    let sys = build_system(ModelKind::Effective, &p).unwrap();
    let rho0 = DensityMatrix::pure(sys.target()).unwrap();
    let t = integrate(&sys, &rho0, &p.integrator(ModelKind::Effective), &FeedbackRule::default()).unwrap();
    assert!(t.fidelity.iter().all(|&f| (f - 1.0).abs() < 1e-12));
    assert!(t.controls.iter().flatten().all(|&f| f.abs() < 1e-12));
}

/// Both runs replay the same noiseless controls, so only the noise differs.
fn max_fidelity_deviation(p: &RunParams, channel: usize, eta: f64) -> f64 {
    let reference = simulate(ModelKind::Effective, &noiseless_reference(p), None).unwrap();
    let schedule = ControlSchedule::from_trajectory(&reference);
    let clean = simulate(ModelKind::Effective, p, Some(&schedule)).unwrap();
    let mut q = p.clone();
    q.eta[channel] = eta;
    let noisy = simulate(ModelKind::Effective, &q, Some(&schedule)).unwrap();
    clean
        .fidelity
        .iter()
        .zip(&noisy.fidelity)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn weak_noise_converges_to_noiseless() {
    let mut p = RunParams::default();
    p.mu[0] = 0.3;
    p.t_f = 100.0;
    for channel in 0..3 {
        let coarse = max_fidelity_deviation(&p, channel, 1e-3);
        let fine = max_fidelity_deviation(&p, channel, 1e-4);
        // quadratic in η: a tenfold smaller η gives a hundredfold smaller deviation
        let ratio = coarse / fine;
        assert!((80.0..=120.0).contains(&ratio), "eta{}: ratio {ratio}", channel + 1);
        if channel < 2 {
            assert!(coarse <= 10.0 * 1e-6, "eta{}: {coarse}", channel + 1);
        }
    }
}

#[test]
fn full_model_agrees_with_effective_model_early_on() {
    let mut p = RunParams::default();
    p.model.decay_cavity = 0.0;
    p.mu[0] = 0.3;
    p.t_f = 100.0;
    let full = simulate(ModelKind::Full, &p, None).unwrap();
    let eff = simulate(ModelKind::Effective, &p, None).unwrap();
    let dev = full
        .fidelity
        .iter()
        .zip(&eff.fidelity)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(dev < 0.01, "{dev}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = set(&[("t_f", 40.0)]);
    run_scenario("fig5", Mode::Simulate, &o, a.path(), &ci()).unwrap();
    run_scenario("fig5", Mode::Simulate, &o, b.path(), &ci()).unwrap();
    for f in ["trajectory.csv", "trajectory_a_H3.csv", "trajectory_b_H3.csv", "trajectory_b_H1.csv"] {
        let x = fs::read(a.path().join("fig5").join(f)).unwrap();
        let y = fs::read(b.path().join("fig5").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn sequential_and_parallel_sweeps_write_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = set(&[("t_f", 30.0)]);
    let seq = RunOptions {
        execution: Execution::Sequential,
        ..ci()
    };
    run_scenario("fig10b", Mode::Sweep, &o, a.path(), &seq).unwrap();
    run_scenario("fig10b", Mode::Sweep, &o, b.path(), &ci()).unwrap();
    let x = fs::read(a.path().join("fig10b/sweep.csv")).unwrap();
    let y = fs::read(b.path().join("fig10b/sweep.csv")).unwrap();
    assert_eq!(x, y);
}

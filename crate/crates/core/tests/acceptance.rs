//! End-to-end acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::fs;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zenoctl::dynamics::{feedback_controls, integrate, speed, FeedbackFormula, FeedbackRule, Trajectory};
use zenoctl::experiments::{
    build_system, initial, registry, run_scenario, run_sweep, simulate, simulate_replayed, Axis, Execution, Mode,
    ParamValue, Reducer, Resolution, RunOptions, RunParams, SweepGrid,
};
use zenoctl::model::{build_effective_model, ModelKind, ModelParams};
use zenoctl::operator::{DensityMatrix, Operator, C64};
use zenoctl::zeno::zeno_check;

type Outcome = (bool, String);

fn effective_h1() -> RunParams {
    let mut p = RunParams::default();
    p.model.decay_p = 0.1;
    p.model.decay_cavity = 0.0;
    p.mu[0] = 0.3;
    p.o = 1.0;
    p
}

fn run(kind: ModelKind, p: &RunParams) -> Trajectory {
    simulate(kind, p, None).expect("trajectory")
}

fn within(x: f64, centre: f64, tol: f64) -> bool {
    (x - centre).abs() <= tol
}

fn c1_steady_state_kernel() -> Outcome {
    let sys = build_effective_model(&ModelParams::default()).unwrap();
    let s = sys.target().vector();
    let h = (sys.drift().matrix() * s).norm();
    let mut worst_l: f64 = 0.0;
    let mut ldag = Vec::new();
    for l in sys.collapse_ops() {
        worst_l = worst_l.max((l.matrix() * s).norm());
        ldag.push((l.matrix().adjoint() * s).norm());
    }
    // |S⟩ is dark for every channel and fed by at least one of them
    let fed = ldag.iter().any(|&x| x > 1e-12);
    let ldag: Vec<String> = ldag.iter().map(|x| format!("{x:.3e}")).collect();
    (
        h <= 1e-12 && worst_l <= 1e-12 && fed,
        format!(
            "|H|S>| = {h:.1e}, max_k |L_k|S>| = {worst_l:.1e}, |L_k^dag|S>| = [{}]",
            ldag.join(", ")
        ),
    )
}

fn c2_conservation() -> Outcome {
    let mut problems = Vec::new();
    let mut worst = (0.0f64, 0.0f64, f64::INFINITY);
    let mut runs = 0;
    for sc in registry() {
        let sc = sc.at_resolution(Resolution::Ci);
        let mut base = sc.params.clone();
        base.verify_state = true;
        let mut variants = vec![base.clone()];
        for v in &sc.variants {
            variants.push(sc.variant_params(&base, v).unwrap());
        }
        for p in &variants {
            let result = if sc.replay_noiseless {
                simulate_replayed(sc.model, p)
            } else {
                simulate(sc.model, p, None)
            };
            runs += 1;
            match result {
                Ok(t) => {
                    let d = &t.diagnostics;
                    worst.0 = worst.0.max(d.max_trace_error);
                    worst.1 = worst.1.max(d.max_hermiticity_error);
                    worst.2 = worst.2.min(d.min_eigenvalue);
                }
                Err(e) => problems.push(format!("{}: {e}", sc.name)),
            }
        }
        if let Some(grid) = &sc.sweep {
            match run_sweep(sc.model, &base, grid, sc.replay_noiseless, Execution::Parallel) {
                Ok(r) => {
                    runs += r.values.len() / grid.axes.last().filter(|a| a.is_time()).map_or(1, |a| a.values().len());
                    problems.extend(r.failures.iter().map(|f| format!("{} sweep {f}", sc.name)));
                }
                Err(e) => problems.push(format!("{} sweep: {e}", sc.name)),
            }
        }
    }
    (
        problems.is_empty() && worst.0 <= 1e-9 && worst.1 <= 1e-9 && worst.2 >= -1e-8,
        format!(
            "{runs} runs; max |Tr-1| = {:.1e}, max herm = {:.1e}, min eig = {:.1e}; violations: {}",
            worst.0,
            worst.1,
            worst.2,
            if problems.is_empty() { "none".into() } else { problems.join("; ") }
        ),
    )
}

fn c3_accelerated_convergence() -> Outcome {
    let mut p = effective_h1();
    p.t_f = 500.0;
    let t = run(ModelKind::Effective, &p);
    let (f250, f500) = (t.fidelity_at(250.0).unwrap(), t.fidelity_at(500.0).unwrap());
    (
        f250 >= 0.95 && f500 >= 0.98,
        format!("F(250) = {f250:.4} (need >= 0.95), F(500) = {f500:.4} (need >= 0.98)"),
    )
}

fn c4_speedup() -> Outcome {
    let mut acc = effective_h1();
    acc.t_f = 3000.0;
    let mut plain = acc.clone();
    plain.mu = [0.0; 4];
    let t_acc = zenoctl::experiments::time_to_threshold(&run(ModelKind::Effective, &acc), 0.95);
    let t_plain = zenoctl::experiments::time_to_threshold(&run(ModelKind::Effective, &plain), 0.95);
    match (t_plain, t_acc) {
        (Some(a), Some(b)) => {
            let r = a / b;
            (
                (4.0..=8.0).contains(&r),
                format!("t95 without ACC = {a:.1}, with ACC = {b:.1}, ratio = {r:.2} (need [4, 8])"),
            )
        }
        _ => (false, format!("threshold 0.95 not reached by t = 3000: {t_plain:?} / {t_acc:?}")),
    }
}

fn c5_purity_dip() -> Outcome {
    let mut acc = effective_h1();
    acc.t_f = 1000.0;
    let mut plain = acc.clone();
    plain.mu = [0.0; 4];
    let min = |t: Trajectory| t.purity.iter().copied().fold(f64::INFINITY, f64::min);
    let (pa, pn) = (min(run(ModelKind::Effective, &acc)), min(run(ModelKind::Effective, &plain)));
    (
        within(pa, 0.96, 0.05) && within(pn, 0.55, 0.05),
        format!("min P with ACC = {pa:.4} (0.96 +- 0.05), without = {pn:.4} (0.55 +- 0.05)"),
    )
}

fn c6_stirap() -> Outcome {
    let mut p = RunParams::default();
    p.model.decay_p = 0.3;
    p.model.decay_cavity = 0.4;
    p.dt = 0.02;
    p.record_stride = 5;
    let t = run(ModelKind::Stirap, &p);
    let f = t.fidelity_at(200.0).unwrap();
    (within(f, 0.89, 0.03), format!("F(200) = {f:.4} (0.89 +- 0.03)"))
}

fn c7_zeno_equivalence() -> Outcome {
    let check = zeno_check(&ModelParams::default()).unwrap();
    let mut eff = effective_h1();
    eff.t_f = 1000.0;
    let mut full = eff.clone();
    full.model.decay_cavity = 0.1;
    let te = run(ModelKind::Effective, &eff);
    let tf = run(ModelKind::Full, &full);
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (i, &t) in te.times.iter().enumerate() {
        let d = (te.fidelity[i] - tf.fidelity_at(t).unwrap()).abs();
        if d > worst {
            worst = d;
            at = t;
        }
    }
    (
        check.max_deviation <= 1e-8 && worst <= 0.05,
        format!(
            "element deviation = {:.1e} (<= 1e-8); max |F_full - F_eff| = {worst:.4} at t = {at} (<= 0.05)",
            check.max_deviation
        ),
    )
}

fn random_state(space: &zenoctl::operator::SpaceDescriptor, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let n = space.total_dim();
    let rank = rng.random_range(1..=n);
    let a = DMatrix::from_fn(n, rank, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let m = &a * a.adjoint();
    let m = &m / m.trace();
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(Operator::new(space.clone(), m).unwrap()).unwrap()
}

fn c8_control_law() -> Outcome {
    let mut p = effective_h1();
    p.mu = [0.3, 0.2, 0.1, 0.05];
    let sys = build_system(ModelKind::Effective, &p).unwrap();
    let target = DensityMatrix::pure(sys.target()).unwrap();
    let at_target = feedback_controls(&sys, &target, FeedbackFormula::Projector).unwrap();
    let zero_at_target = at_target.iter().all(|&f| f == 0.0);

    // v_a - v = Σ f_m² along an ACC trajectory
    let mut q = effective_h1();
    q.mu = [0.3, 0.0, 0.1, 0.0];
    q.t_f = 300.0;
    let sys_q = build_system(ModelKind::Effective, &q).unwrap();
    let mut cfg = q.integrator(ModelKind::Effective);
    cfg.store_states = true;
    let traj = integrate(&sys_q, &initial(ModelKind::Effective, &q).unwrap(), &cfg, &FeedbackRule::default()).unwrap();
    let zeros = vec![0.0; sys_q.control_generators().len()];
    let (mut worst_identity, mut min_gain) = (0.0f64, f64::INFINITY);
    for rho in traj.states.as_ref().unwrap() {
        let f = feedback_controls(&sys_q, rho, FeedbackFormula::Projector).unwrap();
        let va = speed(&sys_q, rho, &f).unwrap();
        let v = speed(&sys_q, rho, &zeros).unwrap();
        let sum_sq: f64 = f.iter().map(|x| x * x).sum();
        worst_identity = worst_identity.max((va - v - sum_sq).abs());
        min_gain = min_gain.min(va - v);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_forms = 0.0f64;
    for _ in 0..50 {
        let rho = random_state(sys.space(), &mut rng);
        let a = feedback_controls(&sys, &rho, FeedbackFormula::Projector).unwrap();
        let b = feedback_controls(&sys, &rho, FeedbackFormula::Sqrt).unwrap();
        for (x, y) in a.iter().zip(&b) {
            worst_forms = worst_forms.max((x - y).abs());
        }
    }
    (
        zero_at_target && worst_identity <= 1e-12 && min_gain >= -1e-15 && worst_forms <= 1e-12,
        format!(
            "f(rho_s) = {at_target:?}; max |v_a - v - sum f^2| = {worst_identity:.1e}, min (v_a - v) = {min_gain:.2e}; \
             sqrt vs projector form over 50 states: {worst_forms:.1e}"
        ),
    )
}

fn c9_speed_vs_finite_difference() -> Outcome {
    let mut p = effective_h1();
    p.t_f = 250.0;
    p.record_stride = 1;
    let sys = build_system(ModelKind::Effective, &p).unwrap();
    let mut cfg = p.integrator(ModelKind::Effective);
    cfg.store_states = true;
    let traj = integrate(&sys, &initial(ModelKind::Effective, &p).unwrap(), &cfg, &FeedbackRule::default()).unwrap();
    let states = traj.states.as_ref().unwrap();
    let h = traj.times[1] - traj.times[0];
    let f = &traj.fidelity;
    let mut max_err = 0.0f64;
    let mut max_f2 = 0.0f64;
    for i in 1..f.len() - 1 {
        let fd = (f[i + 1] - f[i - 1]) / (2.0 * h);
        let controls = feedback_controls(&sys, &states[i], FeedbackFormula::Projector).unwrap();
        let v = speed(&sys, &states[i], &controls).unwrap();
        max_err = max_err.max((v - fd).abs());
        max_f2 = max_f2.max(((f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h)).abs());
    }
    let bound = 5.0 * h * h * max_f2;
    (
        max_err <= bound,
        format!("max |v - dF/dt_fd| = {max_err:.2e}, bound 5 dt^2 max|F''| = {bound:.2e} (dt = {h})"),
    )
}

fn c10_noise_robustness() -> Outcome {
    let mut p = effective_h1();
    p.t_f = 700.0;
    let clean = run(ModelKind::Effective, &p).fidelity_at(700.0).unwrap();
    let mut noisy = p.clone();
    noisy.eta = [0.1, 0.1, 0.1];
    let f_all = simulate_replayed(ModelKind::Effective, &noisy).unwrap().fidelity_at(700.0).unwrap();
    let drop = clean - f_all;
    let mut worst_single = 0.0f64;
    let mut detail = Vec::new();
    for channel in [1, 2] {
        let mut worst = 0.0f64;
        for eta in [-0.05, -0.025, 0.025, 0.05] {
            let mut q = p.clone();
            q.eta[channel] = eta;
            let f = simulate_replayed(ModelKind::Effective, &q).unwrap().fidelity_at(700.0).unwrap();
            worst = worst.max((f - clean).abs());
        }
        worst_single = worst_single.max(worst);
        detail.push(format!("eta{} alone max |dF| = {worst:.2e}", channel + 1));
    }
    (
        drop <= 0.02 && worst_single <= 0.005,
        format!(
            "F(700) noiseless = {clean:.4}, eta = 0.1 on all three = {f_all:.4} (drop {drop:.4} <= 0.02); {}",
            detail.join(", ")
        ),
    )
}

fn o_sweep(mu_index: usize, mu: f64) -> Vec<f64> {
    let mut p = effective_h1();
    p.mu = [0.0; 4];
    p.mu[mu_index] = mu;
    let grid = SweepGrid {
        axes: vec![Axis {
            key: "o".into(),
            min: 0.0,
            max: 1.0,
            count: 21,
        }],
        reducer: Reducer::FidelityAt(500.0),
    };
    run_sweep(ModelKind::Effective, &p, &grid, false, Execution::Parallel).unwrap().values
}

fn c11_initial_state() -> Outcome {
    let os: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let h1 = o_sweep(0, 0.3);
    let min_step = h1.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let h3 = o_sweep(2, 0.2);
    let best = (0..h3.len()).max_by(|&a, &b| h3[a].total_cmp(&h3[b])).unwrap();
    (
        min_step >= 0.0 && os[best] <= 0.1,
        format!(
            "H1: F(500) from {:.4} (o=0) to {:.4} (o=1), smallest step {min_step:.2e} (need >= 0); H3: argmax o = {} (F = {:.4}, F(o=1) = {:.4})",
            h1[0], h1[20], os[best], h3[best], h3[20]
        ),
    )
}

fn c12_combined_optimum() -> Outcome {
    let mut p = effective_h1();
    p.t_f = 500.0;
    let grid = SweepGrid {
        axes: vec![
            Axis {
                key: "mu1".into(),
                min: 0.0,
                max: 0.6,
                count: 13,
            },
            Axis {
                key: "mu3".into(),
                min: 0.0,
                max: 0.3,
                count: 13,
            },
        ],
        reducer: Reducer::FidelityAt(500.0),
    };
    let r = run_sweep(ModelKind::Effective, &p, &grid, false, Execution::Parallel).unwrap();
    let best = (0..r.values.len()).max_by(|&a, &b| r.values[a].total_cmp(&r.values[b])).unwrap();
    let (mu1, mu3) = (grid.axes[0].values()[best / 13], grid.axes[1].values()[best % 13]);
    let fmax = r.values[best];
    (
        fmax >= 0.985 && (0.2..=0.4).contains(&mu1) && (0.05..=0.15).contains(&mu3),
        format!(
            "max F(500) = {fmax:.4} at mu1 = {mu1:.2}, mu3 = {mu3:.3}; F(0.3, 0.1) = {:.4}",
            r.value(&[6, 4])
        ),
    )
}

fn c13_determinism() -> Outcome {
    let mut mismatches = Vec::new();
    let mut files = 0;
    for (name, mode) in [("fig2c", Mode::Simulate), ("fig6a", Mode::Sweep), ("fig10a", Mode::Sweep)] {
        let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
        for (i, d) in dirs.iter().enumerate() {
            let options = RunOptions {
                resolution: Resolution::Ci,
                execution: if i == 0 { Execution::Sequential } else { Execution::Parallel },
            };
            let o = [("t_f".to_string(), ParamValue::Float(100.0))];
            run_scenario(name, mode, &o, d.path(), &options).unwrap();
        }
        for entry in fs::read_dir(dirs[0].path().join(name)).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "csv") {
                files += 1;
                let other = dirs[1].path().join(name).join(path.file_name().unwrap());
                if fs::read(&path).unwrap() != fs::read(&other).unwrap() {
                    mismatches.push(path.file_name().unwrap().to_string_lossy().into_owned());
                }
            }
        }
    }
    (
        mismatches.is_empty() && files > 0,
        format!("{files} CSV files compared across repeated runs; differing: {mismatches:?}"),
    )
}

fn main() {
    // `cargo test -- --list` and filters come through here too
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("steady-state kernel", c1_steady_state_kernel),
        ("conservation over all scenarios", c2_conservation),
        ("accelerated convergence", c3_accelerated_convergence),
        ("speedup ratio", c4_speedup),
        ("purity dip", c5_purity_dip),
        ("STIRAP baseline", c6_stirap),
        ("Zeno reduction equivalence", c7_zeno_equivalence),
        ("control-law properties", c8_control_law),
        ("speed vs finite difference", c9_speed_vs_finite_difference),
        ("noise robustness", c10_noise_robustness),
        ("initial-state dependence", c11_initial_state),
        ("combined-control optimum", c12_combined_optimum),
        ("determinism", c13_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("criterion_{:02}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "{} {id} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

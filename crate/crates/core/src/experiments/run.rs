//! Building systems from run parameters and running scenarios to disk.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde_json::{json, Value};

use crate::dynamics::{format_g, integrate, write_trajectory_csv, ControlSchedule, FeedbackRule, Trajectory};
use crate::error::{Error, Result};
use crate::model::{
    build_acc_generators, build_effective_model, build_full_model, build_noise_generators, build_stirap_model,
    initial_state, InitialStateSpec, ModelKind, OpenSystem,
};
use crate::operator::DensityMatrix;

use super::params::{ParamValue, RunParams};
use super::registry::{scenario, Resolution, Scenario};
use super::sweep::{run_sweep, Execution, SweepResult};

/// Marker file left next to partial outputs when a run aborts.
pub const FAILED_MARKER: &str = "FAILED";

pub fn build_system(kind: ModelKind, p: &RunParams) -> Result<OpenSystem> {
    match kind {
        ModelKind::Stirap => build_stirap_model(&p.stirap, p.model.decay_p, p.model.decay_cavity),
        ModelKind::Full | ModelKind::Effective => {
            let base = if kind == ModelKind::Full {
                build_full_model(&p.model)?
            } else {
                build_effective_model(&p.model)?
            };
            base.with_controls(build_acc_generators(&p.model, p.mu, kind)?)?
                .with_noise(build_noise_generators(&p.model, p.eta, kind)?)
        }
    }
}

pub fn initial(kind: ModelKind, p: &RunParams) -> Result<DensityMatrix> {
    let cavity_truncation = match kind {
        ModelKind::Stirap => p.stirap.cavity_truncation,
        _ => p.model.cavity_truncation,
    };
    initial_state(&InitialStateSpec {
        o: p.o,
        model_kind: kind,
        cavity_truncation,
    })
}

/// One trajectory. With `replay`, the controls follow the schedule instead of
/// the feedback law.
pub fn simulate(kind: ModelKind, p: &RunParams, replay: Option<&ControlSchedule>) -> Result<Trajectory> {
    p.validate(kind)?;
    let system = build_system(kind, p)?;
    let rho0 = initial(kind, p)?;
    let rule = match replay {
        Some(s) => FeedbackRule::replay(s.clone()),
        None => FeedbackRule::default(),
    };
    integrate(&system, &rho0, &p.integrator(kind), &rule)
}

/// Parameters of the noiseless run whose controls a noisy run replays;
/// every step is recorded so the replay interpolates on the step grid.
pub fn noiseless_reference(p: &RunParams) -> RunParams {
    let mut clean = p.clone();
    clean.eta = [0.0; 3];
    clean.record_stride = 1;
    clean
}

/// Noisy run driven by the controls recorded from the same run without noise.
pub fn simulate_replayed(kind: ModelKind, p: &RunParams) -> Result<Trajectory> {
    if !p.has_noise() {
        return simulate(kind, p, None);
    }
    let reference = simulate(kind, &noiseless_reference(p), None)?;
    simulate(kind, p, Some(&ControlSchedule::from_trajectory(&reference)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Sweep,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub resolution: Resolution,
    pub execution: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            resolution: Resolution::Full,
            execution: Execution::Parallel,
        }
    }
}

/// A scenario with overrides applied and every parameter checked.
#[derive(Clone, Debug)]
pub struct PreparedRun {
    pub scenario: Scenario,
    pub mode: Mode,
    pub overrides: Vec<(String, ParamValue)>,
    pub resolution: Resolution,
    /// Primary parameters followed by one entry per variant.
    pub runs: Vec<(String, RunParams)>,
}

/// Resolve and validate everything; nothing is computed or written.
pub fn prepare(name: &str, mode: Mode, overrides: &[(String, ParamValue)], resolution: Resolution) -> Result<PreparedRun> {
    let mut sc = scenario(name)?;
    for (key, value) in overrides {
        sc.params.set(key, value)?;
    }
    let sc = sc.at_resolution(resolution);
    sc.params.validate(sc.model)?;
    let mut runs = vec![("primary".to_string(), sc.params.clone())];
    match mode {
        Mode::Simulate => {
            for v in &sc.variants {
                let p = sc.variant_params(&sc.params, v)?;
                p.validate(sc.model)?;
                runs.push((v.name.to_string(), p));
            }
        }
        Mode::Sweep => {
            let grid = sc
                .sweep
                .as_ref()
                .ok_or_else(|| Error::Unsupported(format!("scenario `{name}` defines no sweep; use `simulate`")))?;
            grid.validate()?;
            for a in grid.axes.iter().filter(|a| !a.is_time()) {
                sc.params.clone().set(&a.key, &ParamValue::Float(a.min))?;
            }
        }
    }
    Ok(PreparedRun {
        scenario: sc,
        mode,
        overrides: overrides.to_vec(),
        resolution,
        runs,
    })
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub outputs: Vec<PathBuf>,
    pub trajectories: Vec<(String, Trajectory)>,
    pub sweep: Option<SweepResult>,
}

struct Writer {
    dir: PathBuf,
    outputs: Vec<PathBuf>,
}

impl Writer {
    fn create(&mut self, file: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(file);
        // a stale marker from an earlier attempt must not survive a new run
        let marker = self.dir.join(FAILED_MARKER);
        if marker.exists() {
            fs::remove_file(marker)?;
        }
        self.outputs.push(path.clone());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn trajectory(&mut self, file: &str, traj: &Trajectory) -> Result<()> {
        write_trajectory_csv(traj, self.create(file)?)
    }
}

fn trajectory_file(variant: &str) -> String {
    if variant == "primary" {
        "trajectory.csv".into()
    } else {
        format!("trajectory_{variant}.csv")
    }
}

fn summary(traj: &Trajectory) -> Value {
    let last = traj.len().saturating_sub(1);
    json!({
        "points": traj.len(),
        "t_final": traj.times.get(last),
        "F_final": traj.fidelity.get(last),
        "F_max": traj.fidelity.iter().copied().reduce(f64::max),
        "P_min": traj.purity.iter().copied().reduce(f64::min),
        "diagnostics": traj.diagnostics,
    })
}

/// Run a prepared scenario into `<out_root>/<scenario>/`.
///
/// A runtime invariant violation keeps whatever was already written, adds
/// the partial trajectory (if any) and a `FAILED` marker, and returns the error.
pub fn execute(run: &PreparedRun, out_root: &Path, execution: Execution) -> Result<RunReport> {
    let sc = &run.scenario;
    let mut w = Writer {
        dir: out_root.join(sc.name),
        outputs: Vec::new(),
    };
    let started = Instant::now();
    let mut trajectories = Vec::new();
    let mut sweep = None;
    let mut failure: Option<Error> = None;

    match run.mode {
        Mode::Simulate => {
            for (variant, p) in &run.runs {
                info!("{}: running {variant}", sc.name);
                let result = if sc.replay_noiseless {
                    simulate_replayed(sc.model, p)
                } else {
                    simulate(sc.model, p, None)
                };
                match result {
                    Ok(traj) => {
                        w.trajectory(&trajectory_file(variant), &traj)?;
                        if sc.pulses && variant == "primary" {
                            write_pulses(&mut w, p, &traj)?;
                        }
                        trajectories.push((variant.clone(), traj));
                    }
                    Err(Error::InvariantViolation {
                        time,
                        invariant,
                        magnitude,
                        partial,
                    }) => {
                        if let Some(partial) = &partial {
                            w.trajectory(&trajectory_file(variant), partial)?;
                        }
                        failure = Some(Error::InvariantViolation {
                            time,
                            invariant,
                            magnitude,
                            partial,
                        });
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Mode::Sweep => {
            let grid = sc.sweep.as_ref().expect("prepared sweep has a grid");
            let result = run_sweep(sc.model, &sc.params, grid, sc.replay_noiseless, execution)?;
            result.write_csv(w.create("sweep.csv")?)?;
            if let Some((time, invariant, magnitude)) = result.first_failure {
                failure = Some(Error::InvariantViolation {
                    time,
                    invariant,
                    magnitude,
                    partial: None,
                });
            }
            sweep = Some(result);
        }
    }

    let manifest = json!({
        "scenario": sc.name,
        "description": sc.description,
        "mode": run.mode.name(),
        "model": sc.model,
        "resolution": run.resolution,
        "params": sc.params,
        "overrides": run.overrides.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "variants": run.runs.iter().skip(1).map(|(n, p)| json!({"name": n, "params": p})).collect::<Vec<_>>(),
        "sweep": sc.sweep.as_ref().filter(|_| run.mode == Mode::Sweep),
        "sweep_failures": sweep.as_ref().map(|s: &SweepResult| &s.failures),
        "replay_noiseless": sc.replay_noiseless,
        "trajectories": trajectories.iter().map(|(n, t)| json!({"name": n, "summary": summary(t)})).collect::<Vec<_>>(),
        "code_version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "status": if failure.is_some() { "failed" } else { "ok" },
        "outputs": w.outputs.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    serde_json::to_writer_pretty(w.create("manifest.json")?, &manifest)?;

    if let Some(err) = failure {
        warn!("{}: {err}", sc.name);
        fs::write(w.dir.join(FAILED_MARKER), format!("{err}\n"))?;
        return Err(err);
    }
    Ok(RunReport {
        dir: w.dir,
        outputs: w.outputs,
        trajectories,
        sweep,
    })
}

fn write_pulses(w: &mut Writer, p: &RunParams, traj: &Trajectory) -> Result<()> {
    use std::io::Write;
    let (a, b) = (p.stirap.pump_a(), p.stirap.pump_b());
    let mut out = w.create("pulses.csv")?;
    writeln!(out, "t,Omega_A,Omega_B")?;
    for &t in &traj.times {
        writeln!(out, "{},{},{}", format_g(t, 12), format_g(a.value(t), 12), format_g(b.value(t), 12))?;
    }
    Ok(())
}

/// Convenience wrapper: prepare then execute.
pub fn run_scenario(
    name: &str,
    mode: Mode,
    overrides: &[(String, ParamValue)],
    out_root: &Path,
    options: &RunOptions,
) -> Result<RunReport> {
    let prepared = prepare(name, mode, overrides, options.resolution)?;
    execute(&prepared, out_root, options.execution)
}

//! Fixed-step RK4 integration of the Lindblad equation with in-the-loop
//! Lyapunov feedback.

mod csv;
mod generator;
mod rhs;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::OpenSystem;
use crate::operator::{psd_sqrt, DensityMatrix, Operator, StateValidity, C64, POSITIVITY_FLOOR, TOL_TRACE};

pub use csv::{format_g, write_trajectory_csv, TRAJECTORY_HEADER};
pub use generator::Generator;
pub use rhs::{feedback_controls, fidelity, lindblad_rhs, noise_superoperator, purity, speed};

/// Entrywise |ρ - ρ†| allowed at recorded points.
pub const TOL_DRIFT_HERM: f64 = 1e-9;
/// Slack on F, P ∈ [0, 1].
pub const TOL_RANGE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_f: f64,
    /// Record every `record_stride`-th step (the final step is always recorded).
    pub record_stride: usize,
    /// Check positivity at every recorded point, not only at start and end.
    pub verify_state: bool,
    /// Keep the density matrix at each recorded point.
    pub store_states: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_f: 1000.0,
            record_stride: 10,
            verify_state: false,
            store_states: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_f.is_finite() && self.t_f >= self.dt) {
            return Err(Error::param("t_f", format!("must be at least dt = {}, got {}", self.dt, self.t_f)));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be positive"));
        }
        Ok(())
    }

    /// Number of RK4 steps; the step is shrunk slightly so that they tile [0, t_f].
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.t_f / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_f / n as f64)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum FeedbackFormula {
    /// f_m = -i⟨S|[H_m, ρ]|S⟩
    #[default]
    Projector,
    /// f_m = Tr[√ρ_s (-i[H_m, ρ]) √ρ_s]
    Sqrt,
}

/// Control amplitudes sampled on a time grid, replayed by linear interpolation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlSchedule {
    pub times: Vec<f64>,
    pub labels: Vec<usize>,
    /// `values[m][i]` is control `labels[m]` at `times[i]`.
    pub values: Vec<Vec<f64>>,
}

impl ControlSchedule {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            times: traj.times.clone(),
            labels: traj.control_labels.clone(),
            values: traj.controls.clone(),
        }
    }

    /// Value of control `m` at time t; held constant outside the grid.
    pub fn sample(&self, m: usize, t: f64) -> f64 {
        let ts = &self.times;
        let vs = &self.values[m];
        if ts.is_empty() {
            return 0.0;
        }
        if t <= ts[0] {
            return vs[0];
        }
        if t >= ts[ts.len() - 1] {
            return vs[vs.len() - 1];
        }
        let i = ts.partition_point(|&x| x <= t) - 1;
        let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
        vs[i] + w * (vs[i + 1] - vs[i])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FeedbackRule {
    pub formula: FeedbackFormula,
    pub replay: Option<ControlSchedule>,
}

impl FeedbackRule {
    pub fn replay(schedule: ControlSchedule) -> Self {
        Self {
            formula: FeedbackFormula::Projector,
            replay: Some(schedule),
        }
    }
}

/// Worst invariant values seen during a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub dt: f64,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    /// Minimum eigenvalue over the points where positivity was checked.
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Option<Vec<DensityMatrix>>,
    pub fidelity: Vec<f64>,
    pub purity: Vec<f64>,
    /// dF/dt = ⟨S|ρ̇|S⟩ including the control terms.
    pub speed: Vec<f64>,
    /// `controls[m][i]`, one row per control generator.
    pub controls: Vec<Vec<f64>>,
    pub control_labels: Vec<usize>,
    pub final_state: DensityMatrix,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Control `label` (1..=4) at every recorded point, zeros if absent.
    pub fn control(&self, label: usize) -> Vec<f64> {
        match self.control_labels.iter().position(|&l| l == label) {
            Some(m) => self.controls[m].clone(),
            None => vec![0.0; self.len()],
        }
    }

    /// F at time t by linear interpolation between recorded points.
    pub fn fidelity_at(&self, t: f64) -> Option<f64> {
        let ts = &self.times;
        if ts.is_empty() || t < ts[0] - 1e-9 || t > ts[ts.len() - 1] + 1e-9 {
            return None;
        }
        let i = ts.partition_point(|&x| x <= t);
        if i == 0 {
            return Some(self.fidelity[0]);
        }
        if i >= ts.len() {
            return Some(self.fidelity[ts.len() - 1]);
        }
        let w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
        Some(self.fidelity[i - 1] + w * (self.fidelity[i] - self.fidelity[i - 1]))
    }
}

enum Controls<'a> {
    Feedback {
        targets: Vec<nalgebra::DVector<C64>>,
        images: Vec<nalgebra::DVector<C64>>,
        sqrt: Option<(DMatrix<C64>, Vec<DMatrix<C64>>)>,
    },
    Replay(&'a ControlSchedule, Vec<usize>),
}

impl Controls<'_> {
    fn evaluate(&self, rho: &DMatrix<C64>, t: f64, out: &mut [f64]) {
        match self {
            Controls::Feedback {
                targets,
                images,
                sqrt: None,
            } => {
                // a = ⟨S|H_m ρ|S⟩ = (H_m S)† ρ S, b = ⟨S|ρ H_m|S⟩ = S† ρ (H_m S)
                let s = &targets[0];
                let rho_s = rho * s;
                let s_rho = s.adjoint() * rho;
                for (m, u) in images.iter().enumerate() {
                    let a = u.dotc(&rho_s);
                    let b = (&s_rho * u)[(0, 0)];
                    out[m] = ((a - b) * (-crate::operator::I)).re;
                }
            }
            Controls::Feedback {
                sqrt: Some((q, hs)), ..
            } => {
                for (m, h) in hs.iter().enumerate() {
                    let comm = (h * rho - rho * h) * (-crate::operator::I);
                    out[m] = (q * comm * q).trace().re;
                }
            }
            Controls::Replay(schedule, columns) => {
                for (m, &col) in columns.iter().enumerate() {
                    out[m] = schedule.sample(col, t);
                }
            }
        }
    }
}

struct Recorder {
    traj_times: Vec<f64>,
    states: Option<Vec<DensityMatrix>>,
    fidelity: Vec<f64>,
    purity: Vec<f64>,
    speed: Vec<f64>,
    controls: Vec<Vec<f64>>,
    max_trace_error: f64,
    max_herm: f64,
    min_eig: f64,
}

fn violation(time: f64, invariant: &'static str, magnitude: f64) -> Error {
    Error::InvariantViolation {
        time,
        invariant,
        magnitude,
        partial: None,
    }
}

/// Integrate ρ̇ from ρ₀ over [0, t_f] with classical RK4.
///
/// Feedback amplitudes are re-evaluated from each stage's density matrix;
/// the recorded value at a point is the one used at the start of the step.
pub fn integrate(system: &OpenSystem, rho0: &DensityMatrix, cfg: &IntegratorConfig, rule: &FeedbackRule) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.space() != system.space() {
        return Err(Error::DimensionMismatch {
            context: "integrate: initial state",
            left: system.space().to_string(),
            right: rho0.space().to_string(),
        });
    }
    rho0.validity().check(crate::operator::TOL_HERM)?;

    let generator = Generator::compile(system);
    let dim = generator.dim();
    let labels: Vec<usize> = system.control_generators().iter().map(|c| c.label).collect();
    let n_ctrl = labels.len();
    let target = system.target().vector().clone();

    let controls = match &rule.replay {
        Some(schedule) => {
            let mut columns = Vec::with_capacity(n_ctrl);
            for label in &labels {
                let col = schedule.labels.iter().position(|l| l == label).ok_or_else(|| {
                    Error::param("replay", format!("schedule has no values for control H{label}"))
                })?;
                columns.push(col);
            }
            Controls::Replay(schedule, columns)
        }
        None => {
            let images = system
                .control_generators()
                .iter()
                .map(|c| c.generator.matrix() * &target)
                .collect();
            let sqrt = match rule.formula {
                FeedbackFormula::Projector => None,
                FeedbackFormula::Sqrt => {
                    let q = psd_sqrt(&system.target().projector())?.matrix().clone();
                    let hs = system.control_generators().iter().map(|c| c.generator.matrix().clone()).collect();
                    Some((q, hs))
                }
            };
            Controls::Feedback {
                targets: vec![target.clone()],
                images,
                sqrt,
            }
        }
    };

    let (n_steps, dt) = cfg.steps();
    let drive_at = |t: f64| -> Vec<f64> { system.drive_terms().iter().map(|d| d.envelope.value(t)).collect() };

    let mut rec = Recorder {
        traj_times: Vec::new(),
        states: cfg.store_states.then(Vec::new),
        fidelity: Vec::new(),
        purity: Vec::new(),
        speed: Vec::new(),
        controls: vec![Vec::new(); n_ctrl],
        max_trace_error: 0.0,
        max_herm: 0.0,
        min_eig: f64::INFINITY,
    };

    let mut rho = rho0.matrix().clone();
    let mut k1 = DMatrix::<C64>::zeros(dim, dim);
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();
    let mut f = vec![0.0; n_ctrl];

    let finish = |rec: Recorder, rho: &DMatrix<C64>, steps: usize| -> Trajectory {
        let final_state = DensityMatrix::trusted(Operator::new(system.space().clone(), rho.clone()).expect("square state"));
        Trajectory {
            times: rec.traj_times,
            states: rec.states,
            fidelity: rec.fidelity,
            purity: rec.purity,
            speed: rec.speed,
            controls: rec.controls,
            control_labels: labels.clone(),
            final_state,
            diagnostics: Diagnostics {
                steps,
                dt,
                max_trace_error: rec.max_trace_error,
                max_hermiticity_error: rec.max_herm,
                min_eigenvalue: rec.min_eig,
            },
        }
    };

    for step in 0..=n_steps {
        let t = step as f64 * dt;
        controls.evaluate(&rho, t, &mut f);
        let drives = drive_at(t);
        generator.apply(&rho, &drives, &f, &mut k1);

        let last = step == n_steps;
        if step % cfg.record_stride == 0 || last {
            let check_positivity = cfg.verify_state || step == 0 || last;
            if let Err(mut err) = record(&mut rec, system, &rho, &target, &k1, &f, t, check_positivity) {
                if let Error::InvariantViolation { partial, .. } = &mut err {
                    *partial = Some(Box::new(finish(rec, &rho, step)));
                }
                return Err(err);
            }
        }
        if last {
            break;
        }

        let half = dt / 2.0;
        let t_half = t + half;
        let drives_half = drive_at(t_half);

        euler_stage(&mut stage, &rho, half, &k1);
        controls.evaluate(&stage, t_half, &mut f);
        generator.apply(&stage, &drives_half, &f, &mut k2);

        euler_stage(&mut stage, &rho, half, &k2);
        controls.evaluate(&stage, t_half, &mut f);
        generator.apply(&stage, &drives_half, &f, &mut k3);

        euler_stage(&mut stage, &rho, dt, &k3);
        let t_next = (step + 1) as f64 * dt;
        controls.evaluate(&stage, t_next, &mut f);
        generator.apply(&stage, &drive_at(t_next), &f, &mut k4);

        let w = dt / 6.0;
        for i in 0..rho.len() {
            rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
    }

    Ok(finish(rec, &rho, n_steps))
}

/// stage = ρ + h·k
fn euler_stage(stage: &mut DMatrix<C64>, rho: &DMatrix<C64>, h: f64, k: &DMatrix<C64>) {
    for ((s, r), d) in stage.iter_mut().zip(rho.iter()).zip(k.iter()) {
        *s = r + d * h;
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    rec: &mut Recorder,
    system: &OpenSystem,
    rho: &DMatrix<C64>,
    target: &nalgebra::DVector<C64>,
    rho_dot: &DMatrix<C64>,
    controls: &[f64],
    t: f64,
    check_positivity: bool,
) -> Result<()> {
    let fidelity = target.dotc(&(rho * target)).re;
    let speed = target.dotc(&(rho_dot * target)).re;
    let dm = DensityMatrix::trusted(Operator::new(system.space().clone(), rho.clone())?);
    let purity = purity(&dm);

    rec.traj_times.push(t);
    rec.fidelity.push(fidelity);
    rec.purity.push(purity);
    rec.speed.push(speed);
    for (m, &f) in controls.iter().enumerate() {
        rec.controls[m].push(f);
    }

    if !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(violation(t, "finite", f64::NAN));
    }
    let trace_error = (rho.trace() - C64::new(1.0, 0.0)).norm();
    rec.max_trace_error = rec.max_trace_error.max(trace_error);
    let herm = dm.operator().hermiticity_error();
    rec.max_herm = rec.max_herm.max(herm);
    if check_positivity {
        let v = StateValidity::measure(dm.operator())?;
        rec.min_eig = rec.min_eig.min(v.min_eigenvalue);
        if v.min_eigenvalue < POSITIVITY_FLOOR {
            finalize_state(rec, dm);
            return Err(violation(t, "positivity", v.min_eigenvalue));
        }
    }
    finalize_state(rec, dm);

    if trace_error > TOL_TRACE {
        return Err(violation(t, "trace", trace_error));
    }
    if herm > TOL_DRIFT_HERM {
        return Err(violation(t, "hermiticity", herm));
    }
    for (name, value) in [("fidelity range", fidelity), ("purity range", purity)] {
        if !(-TOL_RANGE..=1.0 + TOL_RANGE).contains(&value) {
            return Err(violation(t, name, value));
        }
    }
    Ok(())
}

fn finalize_state(rec: &mut Recorder, dm: DensityMatrix) {
    if let Some(states) = rec.states.as_mut() {
        states.push(dm);
    }
}

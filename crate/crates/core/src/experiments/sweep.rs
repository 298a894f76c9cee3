//! Parameter grids, reducers and the sweep runner.

use std::collections::HashMap;
use std::io::Write;

use log::warn;
use serde::Serialize;

use crate::dynamics::{format_g, ControlSchedule, Trajectory};
use crate::error::{Error, Result};
use crate::model::ModelKind;

use super::params::{ParamValue, RunParams};
use super::run::{noiseless_reference, simulate};

/// Key of the axis that samples a single trajectory in time.
pub const TIME_AXIS: &str = "t";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub key: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn is_time(&self) -> bool {
        self.key == TIME_AXIS
    }

    /// Evenly spaced points; `min == max` collapses to a single point.
    pub fn values(&self) -> Vec<f64> {
        if self.min == self.max || self.count <= 1 {
            return vec![self.min];
        }
        let n = self.count - 1;
        (0..=n)
            .map(|i| if i == n { self.max } else { self.min + (self.max - self.min) * i as f64 / n as f64 })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Reducer {
    /// Fidelity at a fixed time (the run length is set to that time).
    FidelityAt(f64),
    /// First time the fidelity reaches the threshold, linearly interpolated.
    TimeToThreshold(f64),
    MinPurity,
}

impl Reducer {
    pub fn label(&self) -> String {
        match self {
            Reducer::FidelityAt(t) => format!("F({})", format_g(*t, 12)),
            Reducer::TimeToThreshold(th) => format!("t(F>={})", format_g(*th, 12)),
            Reducer::MinPurity => "min_P".into(),
        }
    }

    pub(crate) fn capped(self, t_max: f64) -> Self {
        match self {
            Reducer::FidelityAt(t) => Reducer::FidelityAt(t.min(t_max)),
            other => other,
        }
    }

    pub fn reduce(&self, traj: &Trajectory) -> Option<f64> {
        match *self {
            Reducer::FidelityAt(t) => traj.fidelity_at(t),
            Reducer::TimeToThreshold(th) => time_to_threshold(traj, th),
            Reducer::MinPurity => traj.purity.iter().copied().reduce(f64::min),
        }
    }
}

/// First recorded crossing of `threshold`, interpolated between samples.
pub fn time_to_threshold(traj: &Trajectory, threshold: f64) -> Option<f64> {
    let i = traj.fidelity.iter().position(|&f| f >= threshold)?;
    if i == 0 {
        return Some(traj.times[0]);
    }
    let (t0, t1) = (traj.times[i - 1], traj.times[i]);
    let (f0, f1) = (traj.fidelity[i - 1], traj.fidelity[i]);
    Some(t0 + (threshold - f0) / (f1 - f0) * (t1 - t0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrid {
    pub axes: Vec<Axis>,
    pub reducer: Reducer,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::param("sweep", "expects one or two axes"));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if a.count == 0 || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::param(&a.key, "axis needs finite bounds and at least one point"));
            }
            if a.is_time() {
                if i + 1 != self.axes.len() {
                    return Err(Error::param(TIME_AXIS, "the time axis must come last"));
                }
                if a.min < 0.0 {
                    return Err(Error::param(TIME_AXIS, "times must be non-negative"));
                }
            }
        }
        Ok(())
    }

    fn time_axis(&self) -> Option<&Axis> {
        self.axes.last().filter(|a| a.is_time())
    }

    fn param_axes(&self) -> &[Axis] {
        match self.time_axis() {
            Some(_) => &self.axes[..self.axes.len() - 1],
            None => &self.axes,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub reducer: Reducer,
    /// Row-major over the axes (the last axis varies fastest).
    pub values: Vec<f64>,
    /// One message per point that aborted on an invariant check.
    pub failures: Vec<String>,
    #[serde(skip)]
    pub first_failure: Option<(f64, &'static str, f64)>,
}

impl SweepResult {
    pub fn value(&self, index: &[usize]) -> f64 {
        let mut flat = 0;
        for (a, &i) in self.axes.iter().zip(index) {
            flat = flat * a.values().len() + i;
        }
        self.values[flat]
    }

    /// 1D: `key,reducer` rows. 2D: a matrix whose corner cell is `a1\a2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let g = |x: f64| format_g(x, 12);
        match self.axes.as_slice() {
            [a] => {
                writeln!(out, "{},{}", a.key, self.reducer.label())?;
                for (x, v) in a.values().iter().zip(&self.values) {
                    writeln!(out, "{},{}", g(*x), g(*v))?;
                }
            }
            [a, b] => {
                let cols = b.values();
                let head: Vec<String> = cols.iter().map(|&x| g(x)).collect();
                writeln!(out, "{}\\{},{}", a.key, b.key, head.join(","))?;
                for (i, x) in a.values().iter().enumerate() {
                    let row: Vec<String> = self.values[i * cols.len()..(i + 1) * cols.len()]
                        .iter()
                        .map(|&v| g(v))
                        .collect();
                    writeln!(out, "{},{}", g(*x), row.join(","))?;
                }
            }
            _ => unreachable!("validated grid"),
        }
        Ok(())
    }
}

fn map_points<T, F>(execution: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = execution;
    (0..n).map(f).collect()
}

fn cartesian(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for a in axes {
        let values = a.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    points
}

enum PointOutcome {
    Values(Vec<f64>),
    Invalid(String),
    Failed(String, (f64, &'static str, f64)),
}

/// Run every grid point. Invalid points (bad parameters, undefined reducer)
/// become NaN with a warning; invariant violations also become NaN and are
/// listed in [`SweepResult::failures`].
pub fn run_sweep(
    kind: ModelKind,
    base: &RunParams,
    grid: &SweepGrid,
    replay_noiseless: bool,
    execution: Execution,
) -> Result<SweepResult> {
    grid.validate()?;
    for a in grid.param_axes() {
        if a.is_time() {
            return Err(Error::param(TIME_AXIS, "the time axis must come last"));
        }
        // surfaces unknown keys before any work starts
        base.clone().set(&a.key, &ParamValue::Float(a.min))?;
    }
    let times = grid.time_axis().map(Axis::values);
    let points = cartesian(grid.param_axes());

    let point_params: Vec<Result<RunParams>> = points
        .iter()
        .map(|coords| {
            let mut p = base.clone();
            for (a, &x) in grid.param_axes().iter().zip(coords) {
                p.set(&a.key, &ParamValue::Float(x))?;
            }
            match (&times, grid.reducer) {
                (Some(ts), _) => p.t_f = ts.iter().copied().fold(0.0, f64::max),
                (None, Reducer::FidelityAt(t)) => p.t_f = t,
                _ => {}
            }
            p.validate(kind)?;
            Ok(p)
        })
        .collect();

    // one noiseless reference run per distinct noiseless parameter set
    let mut schedule_index: Vec<Option<usize>> = vec![None; points.len()];
    let mut schedule_params: Vec<RunParams> = Vec::new();
    if replay_noiseless {
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, p) in point_params.iter().enumerate() {
            if let Ok(p) = p {
                if !p.has_noise() {
                    continue;
                }
                let clean = noiseless_reference(p);
                let key = serde_json::to_string(&clean)?;
                let idx = *seen.entry(key).or_insert_with(|| {
                    schedule_params.push(clean);
                    schedule_params.len() - 1
                });
                schedule_index[i] = Some(idx);
            }
        }
    }
    let schedules: Vec<Result<ControlSchedule>> = map_points(execution, schedule_params.len(), |i| {
        simulate(kind, &schedule_params[i], None).map(|t| ControlSchedule::from_trajectory(&t))
    });

    let outcomes: Vec<PointOutcome> = map_points(execution, points.len(), |i| {
        let p = match &point_params[i] {
            Ok(p) => p,
            Err(e) => return PointOutcome::Invalid(e.to_string()),
        };
        let schedule = match schedule_index[i].map(|s| &schedules[s]) {
            Some(Ok(s)) => Some(s),
            Some(Err(e)) => return classify(e, "noiseless reference"),
            None => None,
        };
        match simulate(kind, p, schedule) {
            Ok(traj) => match &times {
                Some(ts) => PointOutcome::Values(
                    ts.iter().map(|&t| traj.fidelity_at(t).unwrap_or(f64::NAN)).collect(),
                ),
                None => match grid.reducer.reduce(&traj) {
                    Some(v) => PointOutcome::Values(vec![v]),
                    None => PointOutcome::Invalid(format!("reducer {} undefined", grid.reducer.label())),
                },
            },
            Err(e) => classify(&e, "run"),
        }
    });

    let width = times.as_ref().map_or(1, Vec::len);
    let mut values = Vec::with_capacity(points.len() * width);
    let mut failures = Vec::new();
    let mut first_failure = None;
    for (coords, outcome) in points.iter().zip(outcomes) {
        let at = || {
            grid.param_axes()
                .iter()
                .zip(coords)
                .map(|(a, x)| format!("{}={}", a.key, format_g(*x, 12)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        match outcome {
            PointOutcome::Values(v) => values.extend(v),
            PointOutcome::Invalid(msg) => {
                warn!("sweep point ({}) skipped: {msg}", at());
                values.extend(std::iter::repeat_n(f64::NAN, width));
            }
            PointOutcome::Failed(msg, info) => {
                warn!("sweep point ({}) failed: {msg}", at());
                failures.push(format!("({}): {msg}", at()));
                first_failure.get_or_insert(info);
                values.extend(std::iter::repeat_n(f64::NAN, width));
            }
        }
    }
    Ok(SweepResult {
        axes: grid.axes.clone(),
        reducer: grid.reducer,
        values,
        failures,
        first_failure,
    })
}

fn classify(e: &Error, stage: &str) -> PointOutcome {
    match e {
        Error::InvariantViolation {
            time,
            invariant,
            magnitude,
            ..
        } => PointOutcome::Failed(format!("{stage}: {e}"), (*time, *invariant, *magnitude)),
        _ => PointOutcome::Invalid(format!("{stage}: {e}")),
    }
}

//! Resolved run parameters and the dotted-key override schema.

use serde::Serialize;

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams, StirapParams};

/// A raw override value, as it arrives from a config file or the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl ParamValue {
    fn describe(&self) -> String {
        match self {
            ParamValue::Float(x) => x.to_string(),
            ParamValue::Int(n) => n.to_string(),
            ParamValue::Bool(b) => b.to_string(),
            ParamValue::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(x: f64) -> Self {
        ParamValue::Float(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    Real,
    Count,
    Flag,
}

impl ValueKind {
    pub fn expected(self) -> &'static str {
        match self {
            ValueKind::Real => "a real number",
            ValueKind::Count => "a non-negative integer",
            ValueKind::Flag => "a boolean (true/false)",
        }
    }
}

/// Every key accepted by [`RunParams::set`], with its type and meaning.
pub const PARAMETER_KEYS: &[(&str, ValueKind, &str)] = &[
    ("Omega", ValueKind::Real, "optical pump Ω on e-p"),
    ("omega", ValueKind::Real, "microwave drive ω on g-e"),
    ("Xi", ValueKind::Real, "Rydberg pump Ξ"),
    ("Delta", ValueKind::Real, "Rydberg pump detuning Δ"),
    ("U_rr", ValueKind::Real, "Rydberg interaction (default 2Δ)"),
    ("gamma", ValueKind::Real, "decay rate of |p>"),
    ("kappa", ValueKind::Real, "cavity decay rate"),
    ("Gamma", ValueKind::Real, "Rydberg decay rate"),
    ("C", ValueKind::Real, "cooperativity; sets gamma = kappa = 1/sqrt(C)"),
    ("cavity_truncation", ValueKind::Count, "highest cavity photon number kept"),
    ("effective_rr_decay", ValueKind::Flag, "add sqrt(2Γ)|ee><rr| to the effective model"),
    ("o", ValueKind::Real, "initial |eg> weight, in [0, 1]"),
    ("mu1", ValueKind::Real, "ACC intensity of H1"),
    ("mu2", ValueKind::Real, "ACC intensity of H2"),
    ("mu3", ValueKind::Real, "ACC intensity of H3"),
    ("mu4", ValueKind::Real, "ACC intensity of H4"),
    ("eta1", ValueKind::Real, "amplitude-noise intensity on Ω"),
    ("eta2", ValueKind::Real, "amplitude-noise intensity on ω"),
    ("eta3", ValueKind::Real, "amplitude-noise intensity on U_rr"),
    ("t_f", ValueKind::Real, "final time"),
    ("dt", ValueKind::Real, "RK4 step"),
    ("record_stride", ValueKind::Count, "steps between recorded points"),
    ("verify_state", ValueKind::Flag, "check positivity at every recorded point"),
    ("stirap.Omega0", ValueKind::Real, "STIRAP peak Rabi frequency"),
    ("stirap.t_o", ValueKind::Real, "STIRAP pulse offset"),
    ("stirap.t_c", ValueKind::Real, "STIRAP pulse width"),
    ("stirap.t_f", ValueKind::Real, "STIRAP protocol time (also the run length)"),
    ("stirap.cavity_truncation", ValueKind::Count, "STIRAP cavity photon cutoff"),
];

pub fn key_kind(key: &str) -> Option<ValueKind> {
    PARAMETER_KEYS.iter().find(|(k, _, _)| *k == key).map(|&(_, kind, _)| kind)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunParams {
    pub model: ModelParams,
    pub stirap: StirapParams,
    pub o: f64,
    pub mu: [f64; 4],
    pub eta: [f64; 3],
    pub t_f: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub verify_state: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            stirap: StirapParams::default(),
            o: 1.0,
            mu: [0.0; 4],
            eta: [0.0; 3],
            t_f: 1000.0,
            dt: 0.01,
            record_stride: 10,
            verify_state: false,
        }
    }
}

fn mismatch(key: &str, kind: ValueKind, value: &ParamValue) -> Error {
    Error::TypeMismatch {
        key: key.to_string(),
        expected: kind.expected(),
        got: value.describe(),
    }
}

fn as_real(key: &str, value: &ParamValue) -> Result<f64> {
    match value {
        ParamValue::Float(x) => Ok(*x),
        ParamValue::Int(n) => Ok(*n as f64),
        ParamValue::Text(s) => s.trim().parse().map_err(|_| mismatch(key, ValueKind::Real, value)),
        ParamValue::Bool(_) => Err(mismatch(key, ValueKind::Real, value)),
    }
}

fn as_count(key: &str, value: &ParamValue) -> Result<usize> {
    match value {
        ParamValue::Int(n) if *n >= 0 => Ok(*n as usize),
        ParamValue::Float(x) if *x >= 0.0 && x.fract() == 0.0 && *x < 1e15 => Ok(*x as usize),
        ParamValue::Text(s) => s.trim().parse().map_err(|_| mismatch(key, ValueKind::Count, value)),
        _ => Err(mismatch(key, ValueKind::Count, value)),
    }
}

fn as_flag(key: &str, value: &ParamValue) -> Result<bool> {
    match value {
        ParamValue::Bool(b) => Ok(*b),
        ParamValue::Text(s) => match s.trim() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(mismatch(key, ValueKind::Flag, value)),
        },
        _ => Err(mismatch(key, ValueKind::Flag, value)),
    }
}

impl RunParams {
    /// Apply one dotted-key override. Type errors name the key and the expected type.
    pub fn set(&mut self, key: &str, value: &ParamValue) -> Result<()> {
        let kind = key_kind(key).ok_or_else(|| Error::UnknownKey { key: key.to_string() })?;
        match kind {
            ValueKind::Real => {
                let x = as_real(key, value)?;
                if !x.is_finite() {
                    return Err(Error::param(key, "must be finite"));
                }
                self.set_real(key, x)
            }
            ValueKind::Count => {
                let n = as_count(key, value)?;
                match key {
                    "cavity_truncation" => self.model.cavity_truncation = n,
                    "record_stride" => self.record_stride = n,
                    "stirap.cavity_truncation" => self.stirap.cavity_truncation = n,
                    _ => unreachable!("count key {key} not wired"),
                }
                Ok(())
            }
            ValueKind::Flag => {
                let b = as_flag(key, value)?;
                match key {
                    "effective_rr_decay" => self.model.effective_rr_decay = b,
                    "verify_state" => self.verify_state = b,
                    _ => unreachable!("flag key {key} not wired"),
                }
                Ok(())
            }
        }
    }

    /// Convenience for command-line text values.
    pub fn set_str(&mut self, key: &str, raw: &str) -> Result<()> {
        self.set(key, &ParamValue::Text(raw.to_string()))
    }

    fn set_real(&mut self, key: &str, x: f64) -> Result<()> {
        let m = &mut self.model;
        match key {
            "Omega" => m.optical_pump = x,
            "omega" => m.microwave = x,
            "Xi" => m.rydberg_pump = x,
            "Delta" => m.rydberg_detuning = x,
            "U_rr" => m.rydberg_interaction = Some(x),
            "gamma" => m.decay_p = x,
            "kappa" => m.decay_cavity = x,
            "Gamma" => m.decay_rydberg = x,
            "C" => {
                if !(x > 0.0) {
                    return Err(Error::param("C", format!("cooperativity must be positive, got {x}")));
                }
                let rate = m.coupling / x.sqrt();
                m.decay_p = rate;
                m.decay_cavity = rate;
            }
            "o" => self.o = x,
            "mu1" => self.mu[0] = x,
            "mu2" => self.mu[1] = x,
            "mu3" => self.mu[2] = x,
            "mu4" => self.mu[3] = x,
            "eta1" => self.eta[0] = x,
            "eta2" => self.eta[1] = x,
            "eta3" => self.eta[2] = x,
            "t_f" => self.t_f = x,
            "dt" => self.dt = x,
            "stirap.Omega0" => self.stirap.peak = x,
            "stirap.t_o" => self.stirap.t_o = x,
            "stirap.t_c" => self.stirap.t_c = x,
            "stirap.t_f" => self.stirap.t_f = x,
            _ => unreachable!("real key {key} not wired"),
        }
        Ok(())
    }

    /// Current value of a real-valued key (used to label sweep axes).
    pub fn get(&self, key: &str) -> Result<f64> {
        let m = &self.model;
        Ok(match key {
            "Omega" => m.optical_pump,
            "omega" => m.microwave,
            "Xi" => m.rydberg_pump,
            "Delta" => m.rydberg_detuning,
            "U_rr" => m.interaction(),
            "gamma" => m.decay_p,
            "kappa" => m.decay_cavity,
            "Gamma" => m.decay_rydberg,
            "C" => m.cooperativity().unwrap_or(f64::NAN),
            "o" => self.o,
            "mu1" => self.mu[0],
            "mu2" => self.mu[1],
            "mu3" => self.mu[2],
            "mu4" => self.mu[3],
            "eta1" => self.eta[0],
            "eta2" => self.eta[1],
            "eta3" => self.eta[2],
            "t_f" => self.t_f,
            "dt" => self.dt,
            "stirap.Omega0" => self.stirap.peak,
            "stirap.t_o" => self.stirap.t_o,
            "stirap.t_c" => self.stirap.t_c,
            "stirap.t_f" => self.stirap.t_f,
            _ => return Err(Error::UnknownKey { key: key.to_string() }),
        })
    }

    /// Check every value before any computation starts.
    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        if !(0.0..=1.0).contains(&self.o) {
            return Err(Error::param("o", format!("must lie in [0, 1], got {}", self.o)));
        }
        self.integrator(kind).validate()?;
        match kind {
            ModelKind::Stirap => {
                self.stirap.validate()?;
                for (name, v) in [("gamma", self.model.decay_p), ("kappa", self.model.decay_cavity)] {
                    if !(v >= 0.0) {
                        return Err(Error::param(name, "must be non-negative"));
                    }
                }
                if self.mu.iter().chain(&self.eta).any(|&x| x != 0.0) {
                    return Err(Error::Unsupported(
                        "the STIRAP model takes no ACC (mu*) or noise (eta*) terms".into(),
                    ));
                }
                Ok(())
            }
            _ => self.model.validate(),
        }
    }

    /// Run length: the STIRAP protocol time for STIRAP, `t_f` otherwise.
    pub fn run_time(&self, kind: ModelKind) -> f64 {
        match kind {
            ModelKind::Stirap => self.stirap.t_f,
            _ => self.t_f,
        }
    }

    pub fn integrator(&self, kind: ModelKind) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            t_f: self.run_time(kind),
            record_stride: self.record_stride,
            verify_state: self.verify_state,
            store_states: false,
        }
    }

    pub fn has_noise(&self) -> bool {
        self.eta.iter().any(|&e| e != 0.0)
    }

    pub fn has_controls(&self) -> bool {
        self.mu.iter().any(|&m| m != 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_round_trips() {
        for &(key, kind, _) in PARAMETER_KEYS {
            let mut p = RunParams::default();
            let value = match kind {
                ValueKind::Real => ParamValue::Float(0.25),
                ValueKind::Count => ParamValue::Int(3),
                ValueKind::Flag => ParamValue::Bool(true),
            };
            p.set(key, &value).unwrap();
            if kind == ValueKind::Real && key != "C" {
                assert_eq!(p.get(key).unwrap(), 0.25, "{key}");
            }
        }
    }

    #[test]
    fn type_errors_name_key_and_type() {
        let mut p = RunParams::default();
        match p.set_str("mu1", "banana") {
            Err(Error::TypeMismatch { key, expected, got }) => {
                assert_eq!(key, "mu1");
                assert_eq!(expected, "a real number");
                assert_eq!(got, "banana");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(p.set_str("record_stride", "-2"), Err(Error::TypeMismatch { .. })));
        assert!(matches!(p.set_str("verify_state", "yes"), Err(Error::TypeMismatch { .. })));
        assert!(matches!(p.set_str("g", "2"), Err(Error::UnknownKey { .. })));
        assert!(matches!(p.set_str("mu1", "inf"), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn cooperativity_sets_equal_rates() {
        let mut p = RunParams::default();
        p.set("C", &ParamValue::Float(25.0)).unwrap();
        assert!((p.model.decay_p - 0.2).abs() < 1e-15);
        assert!((p.model.decay_cavity - 0.2).abs() < 1e-15);
        assert!((p.get("C").unwrap() - 25.0).abs() < 1e-9);
        assert!(p.set("C", &ParamValue::Float(0.0)).is_err());
    }

    #[test]
    fn o_outside_unit_interval_is_rejected() {
        let mut p = RunParams::default();
        p.set_str("o", "1.5").unwrap();
        assert!(matches!(p.validate(ModelKind::Effective), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn stirap_rejects_controls() {
        let mut p = RunParams::default();
        p.mu[0] = 0.3;
        assert!(p.validate(ModelKind::Stirap).is_err());
    }
}

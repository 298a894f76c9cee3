//! Named scenarios, one or more per figure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelKind;

use super::params::{ParamValue, RunParams};
use super::sweep::{Axis, Reducer, SweepGrid};

/// Longest run length allowed at CI resolution.
pub const CI_MAX_TIME: f64 = 300.0;
/// Largest axis point count at CI resolution.
pub const CI_MAX_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    #[default]
    Full,
    Ci,
}

impl std::str::FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Resolution::Full),
            "ci" => Ok(Resolution::Ci),
            other => Err(Error::param("resolution", format!("expected `full` or `ci`, got `{other}`"))),
        }
    }
}

/// An extra trajectory written next to the primary one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Variant {
    pub name: &'static str,
    pub overrides: Vec<(&'static str, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub model: ModelKind,
    pub params: RunParams,
    pub variants: Vec<Variant>,
    pub sweep: Option<SweepGrid>,
    /// Noisy runs replay the control recorded from the same run without noise.
    pub replay_noiseless: bool,
    /// Also write the STIRAP pulse envelopes.
    pub pulses: bool,
}

impl Scenario {
    /// Apply the CI caps: at most [`CI_MAX_POINTS`] per axis and run lengths
    /// (and reducer times) of at most [`CI_MAX_TIME`].
    pub fn at_resolution(mut self, resolution: Resolution) -> Self {
        if resolution == Resolution::Ci {
            self.params.t_f = self.params.t_f.min(CI_MAX_TIME);
            self.params.stirap.t_f = self.params.stirap.t_f.min(CI_MAX_TIME);
            if let Some(grid) = self.sweep.as_mut() {
                for axis in &mut grid.axes {
                    axis.count = axis.count.min(CI_MAX_POINTS);
                    if axis.is_time() {
                        axis.max = axis.max.min(CI_MAX_TIME);
                        axis.min = axis.min.min(axis.max);
                    }
                }
                grid.reducer = grid.reducer.capped(CI_MAX_TIME);
            }
        }
        self
    }

    pub fn variant_params(&self, base: &RunParams, variant: &Variant) -> Result<RunParams> {
        let mut p = base.clone();
        for &(key, value) in &variant.overrides {
            p.set(key, &ParamValue::Float(value))?;
        }
        Ok(p)
    }
}

fn params(model: ModelKind, settings: &[(&str, f64)]) -> RunParams {
    let mut p = RunParams::default();
    let (dt, stride) = match model {
        ModelKind::Effective | ModelKind::Full => (0.01, 10),
        ModelKind::Stirap => (0.02, 5),
    };
    p.dt = dt;
    p.record_stride = stride;
    if model == ModelKind::Effective {
        // the effective model lives in the zero-photon sector; the captions list κ = 0
        p.model.decay_cavity = 0.0;
    }
    for &(key, value) in settings {
        p.set(key, &ParamValue::Float(value))
            .unwrap_or_else(|e| panic!("registry entry sets {key}: {e}"));
    }
    p
}

fn variant(name: &'static str, overrides: &[(&'static str, f64)]) -> Variant {
    Variant {
        name,
        overrides: overrides.to_vec(),
    }
}

fn axis(key: &str, min: f64, max: f64, count: usize) -> Axis {
    Axis {
        key: key.to_string(),
        min,
        max,
        count,
    }
}

const NO_ACC: &[(&str, f64)] = &[("mu1", 0.0), ("mu2", 0.0), ("mu3", 0.0), ("mu4", 0.0)];

fn base(name: &'static str, description: &'static str, model: ModelKind, p: RunParams) -> Scenario {
    Scenario {
        name,
        description,
        model,
        params: p,
        variants: Vec::new(),
        sweep: None,
        replay_noiseless: false,
        pulses: false,
    }
}

/// Every registered scenario, in the order `list` prints them.
pub fn registry() -> Vec<Scenario> {
    use ModelKind::*;
    let eff = |settings: &[(&str, f64)]| params(Effective, settings);
    let mut out = Vec::new();

    let mut s = base(
        "fig2a",
        "full model without ACC at three cooperativities",
        Full,
        params(Full, &[("gamma", 0.1), ("kappa", 0.1), ("t_f", 1500.0)]),
    );
    s.variants = vec![
        variant("C25", &[("gamma", 0.2), ("kappa", 0.2)]),
        variant("C8.33", &[("gamma", 0.3), ("kappa", 0.4)]),
    ];
    out.push(s);

    let mut s = base(
        "fig2b",
        "STIRAP baseline, gamma = 0.3, kappa = 0.4",
        Stirap,
        params(Stirap, &[("gamma", 0.3), ("kappa", 0.4)]),
    );
    s.pulses = true;
    out.push(s);

    let mut s = base(
        "fig2c",
        "effective model with ACC H1 (mu1 = 0.3)",
        Effective,
        eff(&[("mu1", 0.3), ("gamma", 0.1), ("t_f", 1000.0)]),
    );
    s.variants = vec![variant("gamma0.3", &[("gamma", 0.3)]), variant("noacc", NO_ACC)];
    out.push(s);

    let mut s = base(
        "fig2d",
        "full model F(700) versus cooperativity, with and without ACC",
        Full,
        params(Full, &[("mu1", 0.3), ("t_f", 700.0)]),
    );
    s.sweep = Some(SweepGrid {
        axes: vec![axis("C", 10.0, 500.0, 12), axis("mu1", 0.0, 0.3, 2)],
        reducer: Reducer::FidelityAt(700.0),
    });
    out.push(s);

    let mut s = base(
        "fig3",
        "STIRAP pulse shapes and the resulting singlet fidelity",
        Stirap,
        params(Stirap, &[("gamma", 0.3), ("kappa", 0.4)]),
    );
    s.pulses = true;
    out.push(s);

    let mut s = base(
        "fig4a",
        "o = 1: H1 accelerates, H3 does not",
        Effective,
        eff(&[("o", 1.0), ("mu1", 0.3), ("t_f", 1000.0)]),
    );
    s.variants = vec![
        variant("H3", &[("mu1", 0.0), ("mu3", 0.2)]),
        variant("noacc", NO_ACC),
    ];
    out.push(s);

    let mut s = base(
        "fig4b",
        "o = 0.02: H3 accelerates, H1 does not",
        Effective,
        eff(&[("o", 0.02), ("mu3", 0.2), ("t_f", 1000.0)]),
    );
    s.variants = vec![
        variant("H1", &[("mu3", 0.0), ("mu1", 0.3)]),
        variant("noacc", NO_ACC),
    ];
    out.push(s);

    let mut s = base(
        "fig5",
        "control functions f1 and f3 for o = 1 and o = 0.02",
        Effective,
        eff(&[("o", 1.0), ("mu1", 0.3), ("t_f", 500.0)]),
    );
    s.variants = vec![
        variant("a_H3", &[("mu1", 0.0), ("mu3", 0.2)]),
        variant("b_H3", &[("o", 0.02), ("mu1", 0.0), ("mu3", 0.2)]),
        variant("b_H1", &[("o", 0.02)]),
    ];
    out.push(s);

    for (name, description, mu) in [
        ("fig6a", "F(500) versus initial weight o, ACC H1", ("mu1", 0.3)),
        ("fig6b", "F(500) versus initial weight o, ACC H3", ("mu3", 0.2)),
    ] {
        let mut s = base(name, description, Effective, eff(&[mu, ("t_f", 500.0)]));
        s.sweep = Some(SweepGrid {
            axes: vec![axis("o", 0.0, 1.0, 21)],
            reducer: Reducer::FidelityAt(500.0),
        });
        out.push(s);
    }

    let mut s = base(
        "fig7a",
        "F(500) over the (mu1, mu2) plane",
        Effective,
        eff(&[("mu1", 0.3), ("t_f", 500.0)]),
    );
    s.sweep = Some(SweepGrid {
        axes: vec![axis("mu1", 0.0, 0.6, 13), axis("mu2", 0.0, 0.6, 13)],
        reducer: Reducer::FidelityAt(500.0),
    });
    out.push(s);

    let mut s = base(
        "fig7b",
        "F(500) over the (mu1, mu3) plane",
        Effective,
        eff(&[("mu1", 0.3), ("mu3", 0.1), ("t_f", 500.0)]),
    );
    s.sweep = Some(SweepGrid {
        axes: vec![axis("mu1", 0.0, 0.6, 13), axis("mu3", 0.0, 0.3, 13)],
        reducer: Reducer::FidelityAt(500.0),
    });
    out.push(s);

    let mut s = base(
        "fig8",
        "purity with and without ACC H1",
        Effective,
        eff(&[("mu1", 0.3), ("t_f", 1000.0)]),
    );
    s.variants = vec![variant("noacc", NO_ACC)];
    out.push(s);

    for (name, description, ax) in [
        ("fig9a", "F versus Omega and time, ACC H1", axis("Omega", 0.01, 0.2, 20)),
        ("fig9b", "F versus omega and time, ACC H1", axis("omega", 0.005, 0.1, 20)),
    ] {
        let mut s = base(name, description, Effective, eff(&[("mu1", 0.3), ("t_f", 1000.0)]));
        s.sweep = Some(SweepGrid {
            axes: vec![ax, axis("t", 0.0, 1000.0, 101)],
            reducer: Reducer::FidelityAt(1000.0),
        });
        out.push(s);
    }

    for (name, description, second) in [
        ("fig10a", "F(700) under amplitude noise on Omega and omega", "eta2"),
        ("fig10b", "F(700) under amplitude noise on Omega and U_rr", "eta3"),
    ] {
        let mut s = base(
            name,
            description,
            Effective,
            eff(&[("mu1", 0.3), ("eta1", 0.1), (second, 0.1), ("t_f", 700.0)]),
        );
        s.variants = vec![variant("noiseless", &[("eta1", 0.0), ("eta2", 0.0), ("eta3", 0.0)])];
        s.sweep = Some(SweepGrid {
            axes: vec![axis("eta1", -0.1, 0.1, 11), axis(second, -0.1, 0.1, 11)],
            reducer: Reducer::FidelityAt(700.0),
        });
        s.replay_noiseless = true;
        out.push(s);
    }

    out
}

pub fn scenario_names() -> Vec<&'static str> {
    registry().iter().map(|s| s.name).collect()
}

pub fn scenario(name: &str) -> Result<Scenario> {
    registry()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario {
            name: name.to_string(),
            available: scenario_names().join(", "),
        })
}

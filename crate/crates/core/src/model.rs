//! Concrete systems: the two-atom cavity model, its six-state Zeno-effective
//! reduction, the STIRAP comparison model, and the ACC/noise generators.
//!
//! Every rate is expressed in units of the atom-cavity coupling g and every
//! time in units of 1/g (ħ = 1). Atomic levels are ordered (g, e, p, r) and
//! the factor order is atom A, atom B, cavity.
//!
//! Pump sign convention: atom A is driven with +Ω and atom B with -Ω. With
//! |φ₀⟩ = (|pg⟩ - |gp⟩)/√2 this makes the Zeno-sector coupling ⟨T|H|φ₀⟩ = +Ω.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{c, tensor_product, Ket, Operator, SpaceDescriptor, ONE, TOL_HERM};

/// Atomic levels of the four-level (full-model) atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    G = 0,
    E = 1,
    P = 2,
    R = 3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Atom {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Full,
    Effective,
    Stirap,
}

/// Labels of the effective six-state basis, in storage order.
pub const EFFECTIVE_LABELS: [&str; 6] = ["gg", "T", "S", "ee", "rr", "phi0"];

/// Indices into the effective basis.
pub mod eff {
    pub const GG: usize = 0;
    pub const T: usize = 1;
    pub const S: usize = 2;
    pub const EE: usize = 3;
    pub const RR: usize = 4;
    pub const PHI0: usize = 5;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Atom-cavity coupling g; the unit of every other rate.
    #[serde(rename = "g")]
    pub coupling: f64,
    /// Optical pump Ω on e ↔ p.
    #[serde(rename = "Omega")]
    pub optical_pump: f64,
    /// Microwave drive ω on g ↔ e.
    #[serde(rename = "omega")]
    pub microwave: f64,
    /// Rydberg pump Ξ on e ↔ r.
    #[serde(rename = "Xi")]
    pub rydberg_pump: f64,
    /// Rydberg pump detuning Δ.
    #[serde(rename = "Delta")]
    pub rydberg_detuning: f64,
    /// Rydberg-Rydberg interaction U_rr; `None` means the antiblockade value 2Δ.
    #[serde(rename = "U_rr")]
    pub rydberg_interaction: Option<f64>,
    /// Decay rate γ of |p⟩, split evenly into |g⟩ and |e⟩.
    #[serde(rename = "gamma")]
    pub decay_p: f64,
    /// Cavity field decay κ.
    #[serde(rename = "kappa")]
    pub decay_cavity: f64,
    /// Rydberg decay Γ (|r⟩ → |e⟩), full model only.
    #[serde(rename = "Gamma")]
    pub decay_rydberg: f64,
    /// Highest photon number kept in the cavity.
    pub cavity_truncation: usize,
    /// Adds a phenomenological √(2Γ)|ee⟩⟨rr| channel to the effective model.
    pub effective_rr_decay: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            coupling: 1.0,
            optical_pump: 0.07,
            microwave: 0.02,
            rydberg_pump: 5.0,
            rydberg_detuning: 100.0,
            rydberg_interaction: None,
            decay_p: 0.1,
            decay_cavity: 0.1,
            decay_rydberg: 0.001,
            cavity_truncation: 2,
            effective_rr_decay: false,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("g", self.coupling),
            ("Omega", self.optical_pump),
            ("omega", self.microwave),
            ("Xi", self.rydberg_pump),
            ("Delta", self.rydberg_detuning),
            ("gamma", self.decay_p),
            ("kappa", self.decay_cavity),
            ("Gamma", self.decay_rydberg),
        ];
        for (name, value) in rates {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::param(name, format!("must be finite and non-negative, got {value}")));
            }
        }
        if let Some(u) = self.rydberg_interaction {
            if !u.is_finite() || u < 0.0 {
                return Err(Error::param("U_rr", format!("must be finite and non-negative, got {u}")));
            }
        }
        if self.coupling <= 0.0 {
            return Err(Error::param("g", "must be positive"));
        }
        if self.rydberg_pump > 0.0 && self.rydberg_detuning == 0.0 {
            return Err(Error::param("Delta", "must be positive when Xi > 0 (λ = 2Ξ²/Δ undefined)"));
        }
        if self.cavity_truncation < 2 {
            return Err(Error::param(
                "cavity_truncation",
                format!("must be at least 2, got {}", self.cavity_truncation),
            ));
        }
        Ok(())
    }

    /// Antiblockade coupling λ = 2Ξ²/Δ.
    pub fn antiblockade(&self) -> f64 {
        if self.rydberg_pump == 0.0 {
            0.0
        } else {
            2.0 * self.rydberg_pump * self.rydberg_pump / self.rydberg_detuning
        }
    }

    pub fn interaction(&self) -> f64 {
        self.rydberg_interaction.unwrap_or(2.0 * self.rydberg_detuning)
    }

    /// C = g²/(γκ), undefined when either decay vanishes.
    pub fn cooperativity(&self) -> Option<f64> {
        let denom = self.decay_p * self.decay_cavity;
        (denom > 0.0).then(|| self.coupling * self.coupling / denom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StirapParams {
    /// Peak amplitude Ω₀ of the pump pulses.
    #[serde(rename = "Omega0")]
    pub peak: f64,
    /// Offset t_o of each Gaussian from the protocol midpoint.
    pub t_o: f64,
    /// Gaussian width t_c.
    pub t_c: f64,
    /// Total protocol time t_f.
    pub t_f: f64,
    pub g: f64,
    pub cavity_truncation: usize,
}

impl Default for StirapParams {
    fn default() -> Self {
        Self {
            peak: 0.15,
            t_o: 20.0,
            t_c: 35.0,
            t_f: 200.0,
            g: 1.0,
            cavity_truncation: 2,
        }
    }
}

impl StirapParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("stirap.Omega0", self.peak), ("stirap.t_o", self.t_o), ("stirap.g", self.g)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if !(self.t_c > 0.0) {
            return Err(Error::param("stirap.t_c", "must be positive"));
        }
        if !(self.t_f > 0.0) {
            return Err(Error::param("stirap.t_f", "must be positive"));
        }
        if self.cavity_truncation < 1 {
            return Err(Error::param("stirap.cavity_truncation", "must be at least 1"));
        }
        Ok(())
    }

    /// Envelope of Ω_A^adi(t): the late Gaussian at t_f/2 + t_o, scaled by 1/√2.
    pub fn pump_a(&self) -> Envelope {
        Envelope::Gaussian {
            amplitude: self.peak / SQRT_2,
            center: self.t_f / 2.0 + self.t_o,
            width: self.t_c,
        }
    }

    /// Envelope of Ω_B^adi(t): the same late Gaussian plus a full-height early one.
    pub fn pump_b(&self) -> Envelope {
        Envelope::Sum(vec![
            self.pump_a(),
            Envelope::Gaussian {
                amplitude: self.peak,
                center: self.t_f / 2.0 - self.t_o,
                width: self.t_c,
            },
        ])
    }
}

/// Scalar time dependence of a Hamiltonian term.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Envelope {
    Constant(f64),
    Gaussian { amplitude: f64, center: f64, width: f64 },
    Sum(Vec<Envelope>),
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant(v) => *v,
            Envelope::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let x = (t - center) / width;
                amplitude * (-x * x).exp()
            }
            Envelope::Sum(parts) => parts.iter().map(|e| e.value(t)).sum(),
        }
    }
}

/// `envelope(t) · operator`, added to the drift.
#[derive(Clone, Debug)]
pub struct DriveTerm {
    pub envelope: Envelope,
    pub operator: Operator,
}

/// ACC generator H_m (already scaled by μ_m); the feedback law supplies f_m(t).
#[derive(Clone, Debug)]
pub struct ControlGenerator {
    pub label: usize,
    pub mu: f64,
    pub generator: Operator,
}

/// Amplitude-noise channel η·H_s with white-noise statistics.
#[derive(Clone, Debug)]
pub struct NoiseChannel {
    pub label: usize,
    pub hamiltonian: Operator,
    pub eta: f64,
}

/// Drift Hamiltonian, dissipation, optional control and noise, and the target state.
#[derive(Clone, Debug)]
pub struct OpenSystem {
    kind: ModelKind,
    space: SpaceDescriptor,
    drift: Operator,
    drive_terms: Vec<DriveTerm>,
    collapse_ops: Vec<Operator>,
    control_generators: Vec<ControlGenerator>,
    noise_channels: Vec<NoiseChannel>,
    target: Ket,
    excited: Option<Ket>,
    decay_p: f64,
}

impl OpenSystem {
    /// Assemble a system from parts; every operator must live on `drift`'s space.
    pub fn new(
        kind: ModelKind,
        drift: Operator,
        collapse_ops: Vec<Operator>,
        target: Ket,
        decay_p: f64,
    ) -> Result<Self> {
        let system = Self {
            kind,
            space: drift.space().clone(),
            drift,
            drive_terms: Vec::new(),
            collapse_ops,
            control_generators: Vec::new(),
            noise_channels: Vec::new(),
            target,
            excited: None,
            decay_p,
        };
        system.validate()?;
        Ok(system)
    }

    fn validate(&self) -> Result<()> {
        let same = |what: &str, s: &SpaceDescriptor| -> Result<()> {
            if s != &self.space {
                return Err(Error::DimensionMismatch {
                    context: "open system assembly",
                    left: self.space.to_string(),
                    right: format!("{what} on {s}"),
                });
            }
            Ok(())
        };
        let hermitian = |what: String, op: &Operator| -> Result<()> {
            let dev = op.hermiticity_error();
            if dev > TOL_HERM {
                return Err(Error::NotHermitian {
                    what,
                    deviation: dev,
                    tolerance: TOL_HERM,
                });
            }
            Ok(())
        };
        hermitian("drift".into(), &self.drift)?;
        for term in &self.drive_terms {
            same("drive term", term.operator.space())?;
            hermitian("drive term".into(), &term.operator)?;
        }
        for l in &self.collapse_ops {
            same("collapse operator", l.space())?;
        }
        for cg in &self.control_generators {
            same("control generator", cg.generator.space())?;
            hermitian(format!("control generator H{}", cg.label), &cg.generator)?;
        }
        for ch in &self.noise_channels {
            same("noise channel", ch.hamiltonian.space())?;
            hermitian(format!("noise Hamiltonian H_s{}", ch.label), &ch.hamiltonian)?;
        }
        same("target", self.target.space())?;
        if (self.target.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState("target state is not normalized".into()));
        }
        if let Some(x) = &self.excited {
            same("excited state", x.space())?;
        }
        Ok(())
    }

    pub fn with_drive_terms(mut self, terms: Vec<DriveTerm>) -> Result<Self> {
        self.drive_terms = terms;
        self.validate()?;
        Ok(self)
    }

    pub fn with_controls(mut self, controls: Vec<ControlGenerator>) -> Result<Self> {
        self.control_generators = controls;
        self.validate()?;
        Ok(self)
    }

    pub fn with_noise(mut self, channels: Vec<NoiseChannel>) -> Result<Self> {
        self.noise_channels = channels;
        self.validate()?;
        Ok(self)
    }

    pub fn with_excited(mut self, excited: Ket) -> Result<Self> {
        self.excited = Some(excited);
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    /// Static part of the Hamiltonian (no control, no time-dependent drives).
    pub fn drift(&self) -> &Operator {
        &self.drift
    }

    pub fn drive_terms(&self) -> &[DriveTerm] {
        &self.drive_terms
    }

    pub fn drift_at(&self, t: f64) -> Operator {
        self.drive_terms.iter().fold(self.drift.clone(), |acc, term| {
            &acc + &term.operator.scale_real(term.envelope.value(t))
        })
    }

    pub fn collapse_ops(&self) -> &[Operator] {
        &self.collapse_ops
    }

    pub fn control_generators(&self) -> &[ControlGenerator] {
        &self.control_generators
    }

    pub fn noise_channels(&self) -> &[NoiseChannel] {
        &self.noise_channels
    }

    pub fn target(&self) -> &Ket {
        &self.target
    }

    /// |φ₀⟩ for the effective model; `None` elsewhere.
    pub fn excited(&self) -> Option<&Ket> {
        self.excited.as_ref()
    }

    /// γ, the |p⟩ decay rate the effective speed formula needs.
    pub fn decay_p(&self) -> f64 {
        self.decay_p
    }
}

/// Operators of the full two-atom + cavity model, kept separate for the Zeno analysis.
#[derive(Clone, Debug)]
pub struct FullModelParts {
    pub space: SpaceDescriptor,
    /// g Σ_n |p⟩_n⟨g| a + H.c.
    pub atom_cavity: Operator,
    /// Pumps, microwave and antiblockade terms.
    pub drive: Operator,
}

pub fn full_space(cavity_truncation: usize) -> SpaceDescriptor {
    SpaceDescriptor::new([("A", 4), ("B", 4), ("cavity", cavity_truncation + 1)])
        .expect("static factor list")
}

fn atom_space(label: &str, levels: usize) -> SpaceDescriptor {
    SpaceDescriptor::single(label, levels)
}

/// |row⟩⟨col| on one atom, identity on the other atom and the cavity.
/// Works for any space shaped (atom A, atom B, cavity).
pub fn atom_transition(space: &SpaceDescriptor, atom: Atom, row: usize, col: usize) -> Operator {
    let f = space.factors();
    let (la, lb, nc) = (f[0].1, f[1].1, f[2].1);
    let a_space = atom_space(&f[0].0, la);
    let b_space = atom_space(&f[1].0, lb);
    let cav = Operator::identity(&SpaceDescriptor::single(&f[2].0, nc));
    let (a, b) = match atom {
        Atom::A => (Operator::transition(&a_space, row, col, ONE), Operator::identity(&b_space)),
        Atom::B => (Operator::identity(&a_space), Operator::transition(&b_space, row, col, ONE)),
    };
    tensor_product(&tensor_product(&a, &b), &cav)
}

/// Cavity annihilation operator on an (atom A, atom B, cavity) space.
pub fn annihilation(space: &SpaceDescriptor) -> Operator {
    let f = space.factors();
    let nc = f[2].1;
    let cav_space = SpaceDescriptor::single(&f[2].0, nc);
    let a = Operator::from_fn(&cav_space, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) });
    let atoms = Operator::identity(&atom_space(&f[0].0, f[0].1));
    let atoms = tensor_product(&atoms, &Operator::identity(&atom_space(&f[1].0, f[1].1)));
    tensor_product(&atoms, &a)
}

/// |x y n⟩ on an (atom A, atom B, cavity) space.
pub fn product_ket(space: &SpaceDescriptor, a: usize, b: usize, photons: usize) -> Ket {
    Ket::product(space, &[a, b, photons])
}

/// (|ab,n⟩ + sign·|ba,n⟩)/√2
fn symmetrized(space: &SpaceDescriptor, a: usize, b: usize, sign: f64) -> Ket {
    let ab = product_ket(space, a, b, 0);
    let ba = product_ket(space, b, a, 0);
    (&ab + &ba.scale(c(sign))).scale(c(1.0 / SQRT_2))
}

/// The six effective basis states (gg, T, S, ee, rr, φ₀), each with the cavity in vacuum.
pub fn effective_basis(space: &SpaceDescriptor) -> Vec<Ket> {
    use Level::*;
    vec![
        product_ket(space, G as usize, G as usize, 0),
        symmetrized(space, E as usize, G as usize, 1.0),
        symmetrized(space, E as usize, G as usize, -1.0),
        product_ket(space, E as usize, E as usize, 0),
        product_ket(space, R as usize, R as usize, 0),
        symmetrized(space, P as usize, G as usize, -1.0),
    ]
}

pub fn effective_space() -> SpaceDescriptor {
    SpaceDescriptor::single("zeno", EFFECTIVE_LABELS.len())
}

/// H_ac and H_r of the full model.
pub fn full_model_parts(p: &ModelParams) -> Result<FullModelParts> {
    use Level::*;
    p.validate()?;
    let space = full_space(p.cavity_truncation);
    let a = annihilation(&space);
    let t = |atom, r: Level, col: Level| atom_transition(&space, atom, r as usize, col as usize);

    let absorb = &(&t(Atom::A, P, G) * &a) + &(&t(Atom::B, P, G) * &a);
    let atom_cavity = absorb.scale_real(p.coupling).plus_hc();

    let pump = &t(Atom::A, E, P).scale_real(p.optical_pump) - &t(Atom::B, E, P).scale_real(p.optical_pump);
    let microwave = (&t(Atom::A, G, E) + &t(Atom::B, G, E)).scale_real(p.microwave);
    let mut pair = Operator::zeros(&space);
    for n in 0..=p.cavity_truncation {
        let ee = product_ket(&space, E as usize, E as usize, n);
        let rr = product_ket(&space, R as usize, R as usize, n);
        pair = &pair + &ee.outer(&rr)?;
    }
    let antiblockade = pair.scale_real(p.antiblockade());
    let drive = (&(&pump + &microwave) + &antiblockade).plus_hc();

    Ok(FullModelParts {
        space,
        atom_cavity,
        drive,
    })
}

/// Two four-level atoms in a cavity under the antiblockade Hamiltonian, with
/// |p⟩ decay, Rydberg decay and cavity loss.
pub fn build_full_model(p: &ModelParams) -> Result<OpenSystem> {
    use Level::*;
    let parts = full_model_parts(p)?;
    let space = parts.space.clone();
    let drift = &parts.atom_cavity + &parts.drive;

    let half_gamma = (p.decay_p / 2.0).sqrt();
    let mut collapse = Vec::with_capacity(7);
    for atom in [Atom::A, Atom::B] {
        collapse.push(atom_transition(&space, atom, G as usize, P as usize).scale_real(half_gamma));
        collapse.push(atom_transition(&space, atom, E as usize, P as usize).scale_real(half_gamma));
        collapse.push(atom_transition(&space, atom, E as usize, R as usize).scale_real(p.decay_rydberg.sqrt()));
    }
    collapse.push(annihilation(&space).scale_real(p.decay_cavity.sqrt()));

    let target = effective_basis(&space).swap_remove(eff::S);
    OpenSystem::new(ModelKind::Full, drift, collapse, target, p.decay_p)
}

/// Six-state Zeno-effective model in the basis (gg, T, S, ee, rr, φ₀).
pub fn build_effective_model(p: &ModelParams) -> Result<OpenSystem> {
    use eff::*;
    p.validate()?;
    let space = effective_space();
    let op = |r, col, amp: f64| Operator::transition(&space, r, col, c(amp));

    let upper = [
        op(T, PHI0, p.optical_pump),
        op(T, GG, SQRT_2 * p.microwave),
        op(T, EE, SQRT_2 * p.microwave),
        op(EE, RR, p.antiblockade()),
    ];
    let drift = upper
        .iter()
        .fold(Operator::zeros(&space), |acc, o| &acc + o)
        .plus_hc();

    let gamma = p.decay_p;
    let mut collapse = vec![
        op(S, PHI0, (gamma / 4.0).sqrt()),
        op(T, PHI0, (gamma / 4.0).sqrt()),
        op(GG, PHI0, (gamma / 2.0).sqrt()),
    ];
    if p.effective_rr_decay {
        collapse.push(op(EE, RR, (2.0 * p.decay_rydberg).sqrt()));
    }
    let target = Ket::basis(&space, S);
    let excited = Ket::basis(&space, PHI0);
    OpenSystem::new(ModelKind::Effective, drift, collapse, target, gamma)?.with_excited(excited)
}

fn project_to_effective(op: &Operator, cavity_truncation: usize) -> Result<Operator> {
    let space = full_space(cavity_truncation);
    op.restrict(&effective_basis(&space), &effective_space())
}

/// ACC Hamiltonians H₁..H₄ scaled by μ₁..μ₄; zero intensities are omitted.
///
/// For the effective model each generator is projected onto the six-state basis.
pub fn build_acc_generators(p: &ModelParams, mus: [f64; 4], kind: ModelKind) -> Result<Vec<ControlGenerator>> {
    use Level::*;
    if kind == ModelKind::Stirap {
        return Err(Error::Unsupported("ACC generators are defined for the Rydberg models only".into()));
    }
    for (m, mu) in mus.iter().enumerate() {
        if !mu.is_finite() {
            return Err(Error::param(format!("mu{}", m + 1), "must be finite"));
        }
    }
    let space = full_space(p.cavity_truncation);
    let shapes = [
        (Atom::A, E, P),
        (Atom::B, E, P),
        (Atom::A, G, E),
        (Atom::B, G, E),
    ];
    let mut out = Vec::new();
    for (m, (&mu, (atom, row, col))) in mus.iter().zip(shapes).enumerate() {
        if mu == 0.0 {
            continue;
        }
        let bare = atom_transition(&space, atom, row as usize, col as usize)
            .scale_real(mu)
            .plus_hc();
        let generator = match kind {
            ModelKind::Full => bare,
            _ => project_to_effective(&bare, p.cavity_truncation)?,
        };
        out.push(ControlGenerator {
            label: m + 1,
            mu,
            generator,
        });
    }
    Ok(out)
}

/// Noise Hamiltonians H_s1 (Ω on atom A), H_s2 (ω on atom A), H_s3 (U_rr|rr⟩⟨rr|).
///
/// All three channels are returned even at zero intensity.
pub fn build_noise_generators(p: &ModelParams, etas: [f64; 3], kind: ModelKind) -> Result<Vec<NoiseChannel>> {
    use Level::*;
    if kind == ModelKind::Stirap {
        return Err(Error::Unsupported("noise generators are defined for the Rydberg models only".into()));
    }
    for (j, eta) in etas.iter().enumerate() {
        if !eta.is_finite() {
            return Err(Error::param(format!("eta{}", j + 1), "must be finite"));
        }
    }
    let space = full_space(p.cavity_truncation);
    let hs1 = atom_transition(&space, Atom::A, P as usize, E as usize)
        .scale_real(p.optical_pump)
        .plus_hc();
    let hs2 = atom_transition(&space, Atom::A, G as usize, E as usize)
        .scale_real(p.microwave)
        .plus_hc();
    let hs3 = (0..=p.cavity_truncation).fold(Operator::zeros(&space), |acc, n| {
        &acc + &product_ket(&space, R as usize, R as usize, n).projector()
    });
    let hs3 = hs3.scale_real(p.interaction());

    [hs1, hs2, hs3]
        .into_iter()
        .zip(etas)
        .enumerate()
        .map(|(j, (h, eta))| {
            let hamiltonian = match kind {
                ModelKind::Full => h,
                _ => project_to_effective(&h, p.cavity_truncation)?,
            };
            Ok(NoiseChannel {
                label: j + 1,
                hamiltonian,
                eta,
            })
        })
        .collect()
}

/// Levels of the three-level STIRAP atoms.
pub mod stirap_level {
    pub const G: usize = 0;
    pub const E: usize = 1;
    pub const P: usize = 2;
}

pub fn stirap_space(cavity_truncation: usize) -> SpaceDescriptor {
    SpaceDescriptor::new([("A", 3), ("B", 3), ("cavity", cavity_truncation + 1)]).expect("static factor list")
}

/// Two Λ atoms in a cavity driven by the Gaussian STIRAP pulses.
///
/// The cavity operator is attached to the g ↔ P coupling, and atom B's pump
/// enters with a minus sign so that the dark state ends in the singlet.
pub fn build_stirap_model(sp: &StirapParams, gamma: f64, kappa: f64) -> Result<OpenSystem> {
    use stirap_level::*;
    sp.validate()?;
    for (name, v) in [("gamma", gamma), ("kappa", kappa)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::param(name, "must be finite and non-negative"));
        }
    }
    let space = stirap_space(sp.cavity_truncation);
    let a = annihilation(&space);
    let absorb = &(&atom_transition(&space, Atom::A, P, G) * &a) + &(&atom_transition(&space, Atom::B, P, G) * &a);
    let drift = absorb.scale_real(sp.g).plus_hc();

    let pump = |atom| atom_transition(&space, atom, P, E).plus_hc();
    let drives = vec![
        DriveTerm {
            envelope: sp.pump_a(),
            operator: pump(Atom::A),
        },
        DriveTerm {
            envelope: sp.pump_b(),
            operator: pump(Atom::B).scale_real(-1.0),
        },
    ];

    let half_gamma = (gamma / 2.0).sqrt();
    let mut collapse = Vec::new();
    for atom in [Atom::A, Atom::B] {
        collapse.push(atom_transition(&space, atom, G, P).scale_real(half_gamma));
        collapse.push(atom_transition(&space, atom, E, P).scale_real(half_gamma));
    }
    collapse.push(a.scale_real(kappa.sqrt()));

    let target = symmetrized(&space, E, G, -1.0);
    OpenSystem::new(ModelKind::Stirap, drift, collapse, target, gamma)?.with_drive_terms(drives)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialStateSpec {
    /// Weight o of |eg⟩ in the mixture o|eg⟩⟨eg| + (1-o)|gg⟩⟨gg|.
    pub o: f64,
    pub model_kind: ModelKind,
    /// Cavity truncation of the space the state lives on (ignored for the effective model).
    pub cavity_truncation: usize,
}

/// ρ₀ = [o|eg⟩⟨eg| + (1-o)|gg⟩⟨gg|] ⊗ |0⟩⟨0|, expressed in the model's basis.
pub fn initial_state(spec: &InitialStateSpec) -> Result<crate::operator::DensityMatrix> {
    use crate::operator::DensityMatrix;
    let o = spec.o;
    if !(0.0..=1.0).contains(&o) {
        return Err(Error::param("o", format!("must lie in [0, 1], got {o}")));
    }
    let (eg, gg) = match spec.model_kind {
        ModelKind::Effective => {
            let s = effective_space();
            let t = Ket::basis(&s, eff::T);
            let singlet = Ket::basis(&s, eff::S);
            ((&t + &singlet).scale(c(1.0 / SQRT_2)), Ket::basis(&s, eff::GG))
        }
        ModelKind::Full => {
            let s = full_space(spec.cavity_truncation);
            (
                product_ket(&s, Level::E as usize, Level::G as usize, 0),
                product_ket(&s, Level::G as usize, Level::G as usize, 0),
            )
        }
        ModelKind::Stirap => {
            let s = stirap_space(spec.cavity_truncation);
            (
                product_ket(&s, stirap_level::E, stirap_level::G, 0),
                product_ket(&s, stirap_level::G, stirap_level::G, 0),
            )
        }
    };
    let rho = &eg.projector().scale_real(o) + &gg.projector().scale_real(1.0 - o);
    DensityMatrix::new(rho)
}

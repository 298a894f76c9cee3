//! Dense reference forms of the master equation, the feedback law and the
//! scalar observables. The integrator uses the compiled generator instead;
//! these are kept simple so they can serve as its oracle.

use crate::error::{Error, Result};
use crate::model::{ModelKind, NoiseChannel, OpenSystem};
use crate::operator::{anticommutator, commutator, psd_sqrt, DensityMatrix, Ket, Operator, C64, I};

use super::FeedbackFormula;

fn same_space(context: &'static str, a: &Operator, b: &Operator) -> Result<()> {
    if a.space() != b.space() {
        return Err(Error::DimensionMismatch {
            context,
            left: a.space().to_string(),
            right: b.space().to_string(),
        });
    }
    Ok(())
}

fn check_controls(system: &OpenSystem, controls: &[f64]) -> Result<()> {
    if controls.len() != system.control_generators().len() {
        return Err(Error::DimensionMismatch {
            context: "control amplitudes",
            left: format!("{} generators", system.control_generators().len()),
            right: format!("{} values", controls.len()),
        });
    }
    Ok(())
}

/// Σ_j -η_j²/2 [H_sj, [H_sj, ρ]]
pub fn noise_superoperator(channels: &[NoiseChannel], rho: &DensityMatrix) -> Result<Operator> {
    let rho = rho.operator();
    let mut out = Operator::zeros(rho.space());
    for ch in channels {
        same_space("noise superoperator", &ch.hamiltonian, rho)?;
        if ch.eta == 0.0 {
            continue;
        }
        let inner = commutator(&ch.hamiltonian, rho)?;
        let outer = commutator(&ch.hamiltonian, &inner)?;
        out = &out + &outer.scale_real(-0.5 * ch.eta * ch.eta);
    }
    Ok(out)
}

/// Full right-hand side of the controlled, noisy master equation at time t.
pub fn lindblad_rhs(system: &OpenSystem, rho: &DensityMatrix, t: f64, controls: &[f64]) -> Result<Operator> {
    check_controls(system, controls)?;
    let r = rho.operator();
    same_space("lindblad_rhs", system.drift(), r)?;

    let mut h = system.drift_at(t);
    for (cg, &f) in system.control_generators().iter().zip(controls) {
        h = &h + &cg.generator.scale_real(f);
    }
    let mut out = commutator(&h, r)?.scale(-I);
    for l in system.collapse_ops() {
        let ldl = &l.dagger() * l;
        let jump = &(l * r) * &l.dagger();
        out = &(&out + &jump) - &anticommutator(&ldl, r)?.scale_real(0.5);
    }
    Ok(&out + &noise_superoperator(system.noise_channels(), rho)?)
}

/// -i⟨S|[H_m, ρ]|S⟩ via the projector form.
fn projector_rate(generator: &Operator, rho: &Operator, target: &Ket) -> Result<f64> {
    let comm = commutator(generator, rho)?;
    let value = comm.matrix_element(target, target)? * (-I);
    Ok(value.re)
}

/// Tr[√ρ_s (-i[H_m, ρ]) √ρ_s]
fn sqrt_rate(generator: &Operator, rho: &Operator, sqrt_target: &Operator) -> Result<f64> {
    let comm = commutator(generator, rho)?.scale(-I);
    Ok((&(sqrt_target * &comm) * sqrt_target).trace().re)
}

/// Lyapunov control amplitudes f_m = -i⟨S|[H_m, ρ]|S⟩, one per generator.
///
/// Replay schedules are time-indexed and handled by the integrator; this
/// function always evaluates the feedback formula itself.
pub fn feedback_controls(system: &OpenSystem, rho: &DensityMatrix, formula: FeedbackFormula) -> Result<Vec<f64>> {
    let r = rho.operator();
    same_space("feedback_controls", system.drift(), r)?;
    let target = system.target();
    match formula {
        FeedbackFormula::Projector => system
            .control_generators()
            .iter()
            .map(|cg| projector_rate(&cg.generator, r, target))
            .collect(),
        FeedbackFormula::Sqrt => {
            let sqrt_target = psd_sqrt(&target.projector())?;
            system
                .control_generators()
                .iter()
                .map(|cg| sqrt_rate(&cg.generator, r, &sqrt_target))
                .collect()
        }
    }
}

/// ⟨target|ρ|target⟩
pub fn fidelity(rho: &DensityMatrix, target: &Ket) -> Result<f64> {
    let value = rho.operator().matrix_element(target, target)?;
    Ok(value.re)
}

/// Tr ρ²
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let n = m.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += m[(i, j)] * m[(j, i)];
        }
    }
    acc.re
}

/// Closed-form speed of the effective model,
/// v_a = γ/4 ⟨φ₀|ρ|φ₀⟩ + Σ_m f_m · (-i⟨S|[H_m, ρ]|S⟩).
pub fn speed(system: &OpenSystem, rho: &DensityMatrix, controls: &[f64]) -> Result<f64> {
    if system.kind() != ModelKind::Effective {
        return Err(Error::Unsupported(format!(
            "closed-form speed exists for the effective model only (got {:?}); differentiate F numerically instead",
            system.kind()
        )));
    }
    check_controls(system, controls)?;
    let phi0 = system
        .excited()
        .ok_or_else(|| Error::Unsupported("effective model without |φ₀⟩".into()))?;
    let r = rho.operator();
    let mut v = system.decay_p() / 4.0 * r.matrix_element(phi0, phi0)?.re;
    for (cg, &f) in system.control_generators().iter().zip(controls) {
        v += f * projector_rate(&cg.generator, r, system.target())?;
    }
    Ok(v)
}

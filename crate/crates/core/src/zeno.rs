//! Zeno-limit effective Hamiltonians.
//!
//! For H = K·H_p + H_c with K → ∞ the evolution is confined to the
//! eigenspaces of H_p and is generated by
//!
//! ```text
//! H_Z = Σ_n (K ζ_n P_n + P_n H_c P_n)
//! ```
//!
//! where ζ_n are the distinct eigenvalues of H_p and P_n its eigenprojectors.

use log::warn;

use crate::error::{Error, Result};
use crate::model::{build_effective_model, effective_basis, effective_space, full_model_parts, ModelParams};
use crate::operator::{hermitian_eigensystem, DMatrixExt, Operator, C64, TOL_HERM};

/// Default clustering threshold: 1e-6 of the spectral range of `h_p`.
pub fn default_cluster_tol(h_p: &Operator) -> Result<f64> {
    let spec = hermitian_eigensystem(h_p)?;
    let range = spec.eigenvalues.last().unwrap_or(&0.0) - spec.eigenvalues.first().unwrap_or(&0.0);
    Ok((1e-6 * range).max(1e-12))
}

#[derive(Clone, Debug)]
pub struct ZenoDecomposition {
    pub projectors: Vec<Operator>,
    pub eigenvalues: Vec<f64>,
    pub coupling: f64,
    pub zeno_hamiltonian: Operator,
    /// The weak Hamiltonian H_c the decomposition was built from.
    pub h_c: Operator,
    pub cluster_tol: f64,
    /// Set when clustering collapsed the whole spectrum into one group.
    pub trivial: bool,
}

fn assemble(projectors: &[Operator], eigenvalues: &[f64], coupling: f64, h_c: &Operator) -> Operator {
    projectors
        .iter()
        .zip(eigenvalues)
        .fold(Operator::zeros(h_c.space()), |acc, (p, &zeta)| {
            let inner = &(p * h_c) * p;
            &(&acc + &p.scale_real(coupling * zeta)) + &inner
        })
}

/// Eigenprojector decomposition of `h_p` and the Zeno Hamiltonian for `h_c`.
pub fn zeno_decompose(h_c: &Operator, h_p: &Operator, coupling: f64, cluster_tol: f64) -> Result<ZenoDecomposition> {
    if h_c.space() != h_p.space() {
        return Err(Error::DimensionMismatch {
            context: "zeno_decompose",
            left: h_c.space().to_string(),
            right: h_p.space().to_string(),
        });
    }
    let dev = h_c.hermiticity_error();
    if dev > TOL_HERM {
        return Err(Error::NotHermitian {
            what: "H_c".into(),
            deviation: dev,
            tolerance: TOL_HERM,
        });
    }
    if !(cluster_tol > 0.0) {
        return Err(Error::param("cluster_tol", "must be positive"));
    }
    let spec = hermitian_eigensystem(h_p)?;
    let values = &spec.eigenvalues;
    let range = values[values.len() - 1] - values[0];

    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..values.len() {
        if values[k] - values[k - 1] > cluster_tol {
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(k);
    }
    let trivial = groups.len() == 1 && range > 0.0;
    if trivial {
        warn!("cluster_tol {cluster_tol:e} exceeds the spectral range {range:e}; using a single trivial projector");
    }

    let space = h_p.space();
    let mut projectors = Vec::with_capacity(groups.len());
    let mut eigenvalues = Vec::with_capacity(groups.len());
    for group in &groups {
        let cols: Vec<usize> = group.clone();
        let v = spec.eigenvectors.select_columns(&cols);
        projectors.push(Operator::new(space.clone(), &v * v.adjoint())?);
        eigenvalues.push(group.iter().map(|&k| values[k]).sum::<f64>() / group.len() as f64);
    }
    let zeno_hamiltonian = assemble(&projectors, &eigenvalues, coupling, h_c);
    Ok(ZenoDecomposition {
        projectors,
        eigenvalues,
        coupling,
        zeno_hamiltonian,
        h_c: h_c.clone(),
        cluster_tol,
        trivial,
    })
}

impl ZenoDecomposition {
    /// Index of the sector whose eigenvalue lies within `cluster_tol` of `zeta`.
    pub fn sector_of(&self, zeta: f64) -> Option<usize> {
        self.eigenvalues
            .iter()
            .position(|&z| (z - zeta).abs() <= self.cluster_tol.max(1e-12))
    }

    /// Split `sector` into its intersection with the range of `subspace`
    /// (a projector) and the remainder.
    ///
    /// Returns the refined decomposition and the index of the intersection
    /// sector. Cross terms between the two pieces are dropped from H_Z.
    pub fn restrict_sector(&self, sector: usize, subspace: &Operator) -> Result<(ZenoDecomposition, usize)> {
        let p = self
            .projectors
            .get(sector)
            .ok_or_else(|| Error::param("sector", format!("index {sector} out of range")))?;
        if subspace.space() != p.space() {
            return Err(Error::DimensionMismatch {
                context: "restrict_sector",
                left: p.space().to_string(),
                right: subspace.space().to_string(),
            });
        }
        // range(P) ∩ range(Q) is the eigenvalue-1 eigenspace of PQP.
        let pqp = &(p * subspace) * p;
        let spec = hermitian_eigensystem(&pqp)?;
        let keep: Vec<usize> = (0..spec.eigenvalues.len())
            .filter(|&k| spec.eigenvalues[k] > 1.0 - 1e-9)
            .collect();
        let v = spec.eigenvectors.select_columns(&keep);
        let inside = Operator::new(p.space().clone(), &v * v.adjoint())?;
        let outside = p - &inside;

        let mut projectors = self.projectors.clone();
        let mut eigenvalues = self.eigenvalues.clone();
        projectors[sector] = inside;
        projectors.push(outside);
        eigenvalues.push(eigenvalues[sector]);
        let zeno_hamiltonian = assemble(&projectors, &eigenvalues, self.coupling, &self.h_c);
        Ok((
            ZenoDecomposition {
                projectors,
                eigenvalues,
                zeno_hamiltonian,
                ..self.clone()
            },
            sector,
        ))
    }

    /// P L P for one operator.
    pub fn project(&self, op: &Operator, sector: usize) -> Result<Operator> {
        let p = self
            .projectors
            .get(sector)
            .ok_or_else(|| Error::param("sector", format!("index {sector} out of range")))?;
        Ok(&(p * op) * p)
    }
}

/// P L P for every collapse operator; results of (numerically) zero norm are dropped.
pub fn project_collapse_ops(decomp: &ZenoDecomposition, ops: &[Operator], sector: usize) -> Result<Vec<Operator>> {
    let mut out = Vec::new();
    for op in ops {
        let projected = decomp.project(op, sector)?;
        if projected.frobenius_norm() > 1e-12 * op.frobenius_norm().max(1.0) {
            out.push(projected);
        }
    }
    Ok(out)
}

/// Derived vs analytic six-state Hamiltonian.
#[derive(Clone, Debug)]
pub struct ZenoCheck {
    pub derived: Operator,
    pub analytic: Operator,
    pub max_deviation: f64,
    /// Dimension of the zero-photon dark sector.
    pub sector_dim: usize,
}

/// Derive the effective drift from the full model's eigenprojectors and
/// compare it entry by entry with the hand-written six-state model.
pub fn zeno_check(p: &ModelParams) -> Result<ZenoCheck> {
    let parts = full_model_parts(p)?;
    let h_p = parts.atom_cavity.scale_real(1.0 / p.coupling);
    let tol = default_cluster_tol(&h_p)?;
    let decomp = zeno_decompose(&parts.drive, &h_p, p.coupling, tol)?;
    let zero = decomp
        .sector_of(0.0)
        .ok_or_else(|| Error::Unsupported("H_ac has no dark (ζ = 0) sector".into()))?;

    let vacuum = (0..parts.space.total_dim()).fold(Operator::zeros(&parts.space), |acc, i| {
        let digits = photon_digit(&parts.space, i);
        if digits == 0 {
            &acc + &Operator::transition(&parts.space, i, i, C64::new(1.0, 0.0))
        } else {
            acc
        }
    });
    let (refined, z0) = decomp.restrict_sector(zero, &vacuum)?;

    // Sector-restricted dynamics drop the constant K ζ P term (ζ = 0 here anyway).
    let sector_h = refined.project(&refined.h_c, z0)?;
    let basis = effective_basis(&parts.space);
    let derived = sector_h.restrict(&basis, &effective_space())?;
    let analytic = build_effective_model(p)?.drift().clone();
    let max_deviation = (derived.matrix() - analytic.matrix()).max_abs_entry();
    let sector_dim = refined.projectors[z0].trace().re.round() as usize;
    Ok(ZenoCheck {
        derived,
        analytic,
        max_deviation,
        sector_dim,
    })
}

fn photon_digit(space: &crate::operator::SpaceDescriptor, index: usize) -> usize {
    let nc = space.factors().last().map(|f| f.1).unwrap_or(1);
    index % nc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{annihilation, atom_transition, build_full_model, eff, product_ket, Atom};
    use crate::operator::{c, Ket, SpaceDescriptor, I, ZERO};

    fn qubit() -> SpaceDescriptor {
        SpaceDescriptor::single("q", 2)
    }

    fn sx() -> Operator {
        Operator::from_fn(&qubit(), |i, j| if i != j { c(1.0) } else { ZERO })
    }

    fn sz() -> Operator {
        Operator::from_fn(&qubit(), |i, j| match (i, j) {
            (0, 0) => c(1.0),
            (1, 1) => c(-1.0),
            _ => ZERO,
        })
    }

    fn check_resolution(d: &ZenoDecomposition) {
        let dim = d.h_c.dim();
        let sum = d.projectors.iter().fold(Operator::zeros(d.h_c.space()), |a, p| &a + p);
        assert!((sum.matrix() - Operator::identity(d.h_c.space()).matrix()).max_abs_entry() < 1e-10);
        for (n, pn) in d.projectors.iter().enumerate() {
            for (m, pm) in d.projectors.iter().enumerate() {
                let prod = pn * pm;
                let expect = if n == m { pn.clone() } else { Operator::zeros(d.h_c.space()) };
                assert!((prod.matrix() - expect.matrix()).max_abs_entry() < 1e-10, "{n},{m} of {dim}");
            }
        }
    }

    #[test]
    fn strong_sigma_z_suppresses_sigma_x() {
        let d = zeno_decompose(&sx(), &sz(), 10.0, 1e-6).unwrap();
        assert_eq!(d.projectors.len(), 2);
        check_resolution(&d);
        for p in &d.projectors {
            assert!((&(p * &sx()) * p).max_abs() < 1e-12);
        }
        assert!((d.zeno_hamiltonian.matrix() - sz().scale_real(10.0).matrix()).max_abs_entry() < 1e-12);
    }

    #[test]
    fn zero_measurement_leaves_h_c() {
        let h_p = Operator::zeros(&qubit());
        let tol = default_cluster_tol(&h_p).unwrap();
        let d = zeno_decompose(&sx(), &h_p, 5.0, tol).unwrap();
        assert_eq!(d.projectors.len(), 1);
        assert!(!d.trivial);
        assert!((d.zeno_hamiltonian.matrix() - sx().matrix()).max_abs_entry() < 1e-12);
    }

    #[test]
    fn oversized_cluster_tol_is_trivial() {
        let d = zeno_decompose(&sx(), &sz(), 1.0, 10.0).unwrap();
        assert!(d.trivial);
        assert_eq!(d.projectors.len(), 1);
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let bad = Operator::transition(&qubit(), 0, 1, I);
        assert!(matches!(zeno_decompose(&bad, &sz(), 1.0, 1e-6), Err(Error::NotHermitian { .. })));
        assert!(matches!(zeno_decompose(&sx(), &bad, 1.0, 1e-6), Err(Error::NotHermitian { .. })));
        assert!(zeno_decompose(&sx(), &sz(), 1.0, 0.0).is_err());
    }

    #[test]
    fn projectors_resolve_identity_for_atom_cavity_coupling() {
        let p = ModelParams::default();
        let parts = full_model_parts(&p).unwrap();
        let tol = default_cluster_tol(&parts.atom_cavity).unwrap();
        let d = zeno_decompose(&parts.drive, &parts.atom_cavity, 1.0, tol).unwrap();
        check_resolution(&d);
        assert!(d.zeno_hamiltonian.is_hermitian(TOL_HERM));
    }

    #[test]
    fn derived_effective_hamiltonian_matches_analytic() {
        let check = zeno_check(&ModelParams::default()).unwrap();
        assert!(check.max_deviation <= 1e-8, "deviation {}", check.max_deviation);
        assert!((check.derived.entry(eff::T, eff::PHI0) - c(0.07)).norm() < 1e-8);
        assert_eq!(check.sector_dim, 10);
    }

    fn z0(p: &ModelParams) -> (ZenoDecomposition, usize, SpaceDescriptor) {
        let parts = full_model_parts(p).unwrap();
        let tol = default_cluster_tol(&parts.atom_cavity).unwrap();
        let d = zeno_decompose(&parts.drive, &parts.atom_cavity, 1.0, tol).unwrap();
        let zero = d.sector_of(0.0).unwrap();
        let a = annihilation(&parts.space);
        let photons = &a.dagger() * &a;
        let vacuum = Operator::from_fn(&parts.space, |i, j| {
            if i == j && photons.entry(i, i).re < 0.5 {
                c(1.0)
            } else {
                ZERO
            }
        });
        let (r, k) = d.restrict_sector(zero, &vacuum).unwrap();
        check_resolution(&r);
        (r, k, parts.space)
    }

    #[test]
    fn cavity_decay_vanishes_in_vacuum_dark_sector() {
        let p = ModelParams::default();
        let (d, k, space) = z0(&p);
        let kappa: f64 = 0.1;
        let l4 = annihilation(&space).scale_real(kappa.sqrt());
        assert!(d.project(&l4, k).unwrap().frobenius_norm() < 1e-8 * kappa.sqrt());
        assert!(project_collapse_ops(&d, &[l4], k).unwrap().is_empty());
    }

    #[test]
    fn projected_p_decay_reaches_gg_from_phi0() {
        let p = ModelParams::default();
        let (d, k, space) = z0(&p);
        let gamma: f64 = 0.1;
        let l = atom_transition(&space, Atom::A, 0, 2).scale_real((gamma / 2.0).sqrt());
        let projected = project_collapse_ops(&d, &[l], k).unwrap();
        assert_eq!(projected.len(), 1);
        let basis = effective_basis(&space);
        let amp = projected[0].matrix_element(&basis[eff::GG], &basis[eff::PHI0]).unwrap();
        assert!((amp.norm() - (gamma / 2.0).sqrt() / 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn operator_inside_sector_is_unchanged() {
        let p = ModelParams::default();
        let (d, k, space) = z0(&p);
        let gg = product_ket(&space, 0, 0, 0);
        let ee = product_ket(&space, 1, 1, 0);
        let l = gg.outer(&ee).unwrap();
        let projected = d.project(&l, k).unwrap();
        assert!((projected.matrix() - l.matrix()).max_abs_entry() < 1e-10);
        let _ = Ket::basis(&space, 0);
    }

    #[test]
    fn full_model_target_lies_in_vacuum_dark_sector() {
        let p = ModelParams::default();
        let (d, k, _) = z0(&p);
        let sys = build_full_model(&p).unwrap();
        let s = sys.target();
        let ps = d.projectors[k].apply(s).unwrap();
        assert!((&ps - s).norm() < 1e-10);
    }
}

//! Master-equation right-hand side compiled into sparse triplet lists.
//!
//! The generator is written as
//!
//! ```text
//! ρ̇ = -i(Kρ - ρK†) + Σ_j J_j ρ J_j† - i Σ_d s_d(t) [X_d, ρ]
//! ```
//!
//! with K = H₀ - (i/2) Σ_j J_j†J_j, jumps J_j covering both the collapse
//! operators and the noise channels (η·H_s), and X_d the time-dependent
//! Hermitian terms (pulse envelopes and feedback controls).

use nalgebra::DMatrix;

use crate::model::OpenSystem;
use crate::operator::{Operator, C64, I};

type Triplets = Vec<(usize, usize, C64)>;

fn triplets(op: &Operator) -> Triplets {
    let m = op.matrix();
    let mut out = Vec::new();
    // column-major walk keeps the accumulation order fixed
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                out.push((i, j, z));
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Generator {
    dim: usize,
    k: Triplets,
    jumps: Vec<Triplets>,
    drives: Vec<Triplets>,
    controls: Vec<Triplets>,
}

/// out += scale · (X ρ), one contiguous column of ρ at a time.
fn left_mul(x: &Triplets, rho: &[C64], n: usize, scale: C64, out: &mut [C64]) {
    for (rc, oc) in rho.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
        for &(r, c, v) in x {
            oc[r] += scale * v * rc[c];
        }
    }
}

impl Generator {
    pub fn compile(system: &OpenSystem) -> Self {
        let dim = system.space().total_dim();
        let mut jump_ops: Vec<Operator> = system.collapse_ops().to_vec();
        for ch in system.noise_channels() {
            if ch.eta != 0.0 {
                jump_ops.push(ch.hamiltonian.scale_real(ch.eta));
            }
        }
        let mut k = system.drift().clone();
        for j in &jump_ops {
            k = &k - &(&j.dagger() * j).scale(I * 0.5);
        }
        Self {
            dim,
            k: triplets(&k),
            jumps: jump_ops.iter().map(triplets).filter(|t| !t.is_empty()).collect(),
            drives: system.drive_terms().iter().map(|d| triplets(&d.operator)).collect(),
            controls: system.control_generators().iter().map(|c| triplets(&c.generator)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes ρ̇ into `out`. `drive_values` are the envelope values at the
    /// current time, `controls` the feedback amplitudes. `rho` must be
    /// Hermitian: the commutator part is formed as -i(M - M†) with M = K_t ρ.
    pub fn apply(&self, rho: &DMatrix<C64>, drive_values: &[f64], controls: &[f64], out: &mut DMatrix<C64>) {
        let n = self.dim;
        out.fill(C64::new(0.0, 0.0));
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        left_mul(&self.k, r, n, C64::new(1.0, 0.0), o);
        let hermitian_terms = self
            .drives
            .iter()
            .zip(drive_values)
            .chain(self.controls.iter().zip(controls));
        for (x, &s) in hermitian_terms {
            if s != 0.0 {
                left_mul(x, r, n, C64::new(s, 0.0), o);
            }
        }
        // M → -iM + iM† in place (column-major: element (a, b) sits at a + b·n)
        for b in 0..n {
            for a in 0..=b {
                let m_ab = o[a + b * n];
                let m_ba = o[b + a * n];
                o[a + b * n] = -I * m_ab + I * m_ba.conj();
                o[b + a * n] = -I * m_ba + I * m_ab.conj();
            }
        }
        for j in &self.jumps {
            for &(c, d, jcd) in j {
                let jcd = jcd.conj();
                let col = &mut o[c * n..(c + 1) * n];
                for &(a, b, jab) in j {
                    col[a] += jab * r[b + d * n] * jcd;
                }
            }
        }
    }
}

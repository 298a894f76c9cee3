//! Dense complex operators over labeled composite Hilbert spaces.
//!
//! Every value here is immutable once built; algebra returns fresh values.
//! Basis ordering follows the Kronecker convention: the first factor's index
//! varies slowest.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Entrywise Hermiticity tolerance for density matrices and Hamiltonians.
pub const TOL_HERM: f64 = 1e-10;
/// Allowed |Tr ρ - 1|.
pub const TOL_TRACE: f64 = 1e-9;
/// Smallest eigenvalue tolerated before a state is declared unphysical.
pub const POSITIVITY_FLOOR: f64 = -1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest entry modulus of a complex matrix.
pub trait DMatrixExt {
    fn max_abs_entry(&self) -> f64;
}

impl DMatrixExt for DMatrix<C64> {
    fn max_abs_entry(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpaceDescriptor {
    factors: Vec<(String, usize)>,
    total_dim: usize,
}

impl SpaceDescriptor {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> =
            factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        if factors.is_empty() {
            return Err(Error::param("space", "at least one factor is required"));
        }
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::param("space", format!("factor `{label}` has dimension 0")));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::param("space", format!("duplicate factor label `{label}`")));
            }
        }
        let total_dim = factors.iter().map(|(_, d)| d).product();
        Ok(Self { factors, total_dim })
    }

    pub fn single(label: &str, dim: usize) -> Self {
        Self::new([(label, dim)]).expect("single factor with positive dimension")
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|(l, _)| l == label)
    }

    /// Concatenate factor lists. Colliding labels on the right get a `#n` suffix.
    pub fn tensor(&self, other: &SpaceDescriptor) -> SpaceDescriptor {
        let mut factors = self.factors.clone();
        for (label, dim) in &other.factors {
            let mut candidate = label.clone();
            let mut n = 2;
            while factors.iter().any(|(l, _)| *l == candidate) {
                candidate = format!("{label}#{n}");
                n += 1;
            }
            factors.push((candidate, *dim));
        }
        SpaceDescriptor {
            total_dim: self.total_dim * other.total_dim,
            factors,
        }
    }

    /// Flat index of a product-basis state given one index per factor.
    pub fn index_of(&self, digits: &[usize]) -> usize {
        assert_eq!(digits.len(), self.factors.len(), "one digit per factor");
        digits
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&d, (_, dim))| {
                assert!(d < *dim, "basis digit out of range");
                acc * dim + d
            })
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(l, d)| format!("{l}({d})"))
            .collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}

fn check_same(context: &'static str, a: &SpaceDescriptor, b: &SpaceDescriptor) -> Result<()> {
    if a.total_dim != b.total_dim || a.factors != b.factors {
        return Err(Error::DimensionMismatch {
            context,
            left: a.to_string(),
            right: b.to_string(),
        });
    }
    Ok(())
}

/// A state vector living in a labeled space.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    space: SpaceDescriptor,
    vector: DVector<C64>,
}

impl Ket {
    pub fn new(space: SpaceDescriptor, vector: DVector<C64>) -> Result<Self> {
        if vector.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "ket construction",
                left: space.to_string(),
                right: format!("vector of length {}", vector.len()),
            });
        }
        Ok(Self { space, vector })
    }

    pub fn basis(space: &SpaceDescriptor, index: usize) -> Self {
        let mut vector = DVector::zeros(space.total_dim());
        vector[index] = ONE;
        Self {
            space: space.clone(),
            vector,
        }
    }

    /// Product-basis state addressed by one digit per factor.
    pub fn product(space: &SpaceDescriptor, digits: &[usize]) -> Self {
        Self::basis(space, space.index_of(digits))
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.vector
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        check_same("inner product", &self.space, &other.space)?;
        Ok(self.vector.dotc(&other.vector))
    }

    pub fn scale(&self, factor: C64) -> Ket {
        Ket {
            space: self.space.clone(),
            vector: &self.vector * factor,
        }
    }

    pub fn normalized(&self) -> Ket {
        self.scale(c(1.0 / self.norm()))
    }

    /// |self⟩⟨other|
    pub fn outer(&self, other: &Ket) -> Result<Operator> {
        check_same("outer product", &self.space, &other.space)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.vector * other.vector.adjoint(),
        })
    }

    pub fn projector(&self) -> Operator {
        self.outer(self).expect("same space")
    }
}

impl Add for &Ket {
    type Output = Ket;
    fn add(self, rhs: &Ket) -> Ket {
        check_same("ket addition", &self.space, &rhs.space).unwrap();
        Ket {
            space: self.space.clone(),
            vector: &self.vector + &rhs.vector,
        }
    }
}

impl Sub for &Ket {
    type Output = Ket;
    fn sub(self, rhs: &Ket) -> Ket {
        check_same("ket subtraction", &self.space, &rhs.space).unwrap();
        Ket {
            space: self.space.clone(),
            vector: &self.vector - &rhs.vector,
        }
    }
}

/// Dense square matrix tagged with the space it acts on.
///
/// The arithmetic operator impls (`+`, `-`, `*`) panic on a space mismatch;
/// use [`Operator::compose`], [`commutator`] and friends for checked variants.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: SpaceDescriptor,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn new(space: SpaceDescriptor, matrix: DMatrix<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "operator construction",
                left: space.to_string(),
                right: format!("{}x{} matrix", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: &SpaceDescriptor) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(space: &SpaceDescriptor) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: DMatrix::identity(d, d),
        }
    }

    /// `amplitude |row⟩⟨col|` in the flat basis.
    pub fn transition(space: &SpaceDescriptor, row: usize, col: usize, amplitude: C64) -> Self {
        let mut op = Self::zeros(space);
        op.matrix[(row, col)] = amplitude;
        op
    }

    pub fn from_fn(space: &SpaceDescriptor, f: impl FnMut(usize, usize) -> C64) -> Self {
        let d = space.total_dim();
        Self {
            space: space.clone(),
            matrix: DMatrix::from_fn(d, d, f),
        }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// A + A†, the usual "+ H.c." completion.
    pub fn plus_hc(&self) -> Operator {
        self + &self.dagger()
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * factor,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Operator {
        self.scale(c(factor))
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        check_same("operator product", &self.space, &other.space)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn checked_add(&self, other: &Operator) -> Result<Operator> {
        check_same("operator sum", &self.space, &other.space)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        check_same("operator action", &self.space, &ket.space)?;
        Ok(Ket {
            space: self.space.clone(),
            vector: &self.matrix * &ket.vector,
        })
    }

    /// ⟨bra|A|ket⟩
    pub fn matrix_element(&self, bra: &Ket, ket: &Ket) -> Result<C64> {
        bra.inner(&self.apply(ket)?)
    }

    /// max entrywise |A - A†|
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                let diff = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(diff);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs_entry()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Matrix of this operator in the subspace spanned by `basis`: entries ⟨b_i|A|b_j⟩.
    ///
    /// With orthonormal `basis` this is P A P expressed in subspace coordinates.
    pub fn restrict(&self, basis: &[Ket], target: &SpaceDescriptor) -> Result<Operator> {
        if basis.len() != target.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "subspace restriction",
                left: target.to_string(),
                right: format!("{} basis vectors", basis.len()),
            });
        }
        let v = basis_matrix(&self.space, basis)?;
        Operator::new(target.clone(), v.adjoint() * &self.matrix * &v)
    }

    /// Inverse of [`Operator::restrict`]: lift a subspace matrix back to the full space.
    pub fn embed(&self, basis: &[Ket], full: &SpaceDescriptor) -> Result<Operator> {
        if basis.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "subspace embedding",
                left: self.space.to_string(),
                right: format!("{} basis vectors", basis.len()),
            });
        }
        let v = basis_matrix(full, basis)?;
        Operator::new(full.clone(), &v * &self.matrix * v.adjoint())
    }
}

fn basis_matrix(space: &SpaceDescriptor, basis: &[Ket]) -> Result<DMatrix<C64>> {
    let d = space.total_dim();
    let mut v = DMatrix::zeros(d, basis.len());
    for (j, ket) in basis.iter().enumerate() {
        check_same("subspace basis", space, ket.space())?;
        v.set_column(j, ket.vector());
    }
    Ok(v)
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.checked_add(rhs).unwrap()
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        check_same("operator difference", &self.space, &rhs.space).unwrap();
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.compose(rhs).unwrap()
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

/// Kronecker product; `a`'s indices vary slowest.
pub fn tensor_product(a: &Operator, b: &Operator) -> Operator {
    Operator {
        space: a.space.tensor(&b.space),
        matrix: a.matrix.kronecker(&b.matrix),
    }
}

pub fn tensor_ket(a: &Ket, b: &Ket) -> Ket {
    Ket {
        space: a.space.tensor(&b.space),
        vector: a.vector.kronecker(&b.vector),
    }
}

/// ab - ba
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    check_same("commutator", &a.space, &b.space)?;
    Ok(Operator {
        space: a.space.clone(),
        matrix: &a.matrix * &b.matrix - &b.matrix * &a.matrix,
    })
}

/// ab + ba
pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    check_same("anticommutator", &a.space, &b.space)?;
    Ok(Operator {
        space: a.space.clone(),
        matrix: &a.matrix * &b.matrix + &b.matrix * &a.matrix,
    })
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn eigenvector(&self, space: &SpaceDescriptor, k: usize) -> Ket {
        Ket {
            space: space.clone(),
            vector: self.eigenvectors.column(k).into_owned(),
        }
    }

    /// V Λ V†
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&x| c(x)),
        ));
        &self.eigenvectors * lambda * self.eigenvectors.adjoint()
    }
}

pub fn hermitian_eigensystem(a: &Operator) -> Result<Spectrum> {
    let deviation = a.hermiticity_error();
    let scale = a.max_abs().max(1.0);
    if deviation > TOL_HERM * scale {
        return Err(Error::NotHermitian {
            what: format!("operator on {}", a.space),
            deviation,
            tolerance: TOL_HERM * scale,
        });
    }
    // Feed the solver an exactly Hermitian matrix; the lower triangle is all it reads anyway.
    let sym = (&a.matrix + a.matrix.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(a.dim(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Tr[ρ a]
pub fn expectation(rho: &DensityMatrix, a: &Operator) -> Result<C64> {
    check_same("expectation", rho.space(), a.space())?;
    let r = rho.matrix();
    let m = a.matrix();
    // Tr[ρa] = Σ_ij ρ_ij a_ji, without forming the product.
    let d = a.dim();
    let mut acc = ZERO;
    for j in 0..d {
        for i in 0..d {
            acc += r[(i, j)] * m[(j, i)];
        }
    }
    Ok(acc)
}

/// Principal square root of a positive semidefinite Hermitian operator.
///
/// Eigenvalues inside the positivity floor are treated as zero.
pub fn psd_sqrt(a: &Operator) -> Result<Operator> {
    let spec = hermitian_eigensystem(a)?;
    if let Some(&lowest) = spec.eigenvalues.first() {
        if lowest < POSITIVITY_FLOOR {
            return Err(Error::InvalidState(format!(
                "square root of an operator with eigenvalue {lowest:.3e}"
            )));
        }
    }
    let roots = DVector::from_iterator(
        spec.eigenvalues.len(),
        spec.eigenvalues.iter().map(|&x| c(x.max(0.0).sqrt())),
    );
    let m = &spec.eigenvectors * DMatrix::from_diagonal(&roots) * spec.eigenvectors.adjoint();
    Operator::new(a.space.clone(), m)
}

/// Measured departures of a matrix from being a physical state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateValidity {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl StateValidity {
    pub fn measure(op: &Operator) -> Result<Self> {
        let hermiticity_error = op.hermiticity_error();
        let trace = op.trace();
        let trace_error = (trace - ONE).norm();
        let sym = Operator {
            space: op.space.clone(),
            matrix: (&op.matrix + op.matrix.adjoint()) * c(0.5),
        };
        let min_eigenvalue = hermitian_eigensystem(&sym)?.eigenvalues[0];
        Ok(Self {
            hermiticity_error,
            trace_error,
            min_eigenvalue,
        })
    }

    pub fn check(&self, herm_tol: f64) -> Result<()> {
        if self.hermiticity_error > herm_tol {
            return Err(Error::InvalidState(format!(
                "max |ρ - ρ†| = {:.3e} exceeds {herm_tol:.1e}",
                self.hermiticity_error
            )));
        }
        if self.trace_error > TOL_TRACE {
            return Err(Error::InvalidState(format!(
                "|Tr ρ - 1| = {:.3e} exceeds {TOL_TRACE:.1e}",
                self.trace_error
            )));
        }
        if self.min_eigenvalue < POSITIVITY_FLOOR {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {:.3e} below {POSITIVITY_FLOOR:.1e}",
                self.min_eigenvalue
            )));
        }
        Ok(())
    }
}

/// Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        StateValidity::measure(&op)?.check(TOL_HERM)?;
        Ok(Self { op })
    }

    /// Skips validation; the caller has already checked the state with its own tolerances.
    pub(crate) fn trusted(op: Operator) -> Self {
        Self { op }
    }

    pub fn pure(ket: &Ket) -> Result<Self> {
        let norm = ket.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("ket has norm {norm}")));
        }
        Ok(Self {
            op: ket.projector(),
        })
    }

    pub fn maximally_mixed(space: &SpaceDescriptor) -> Self {
        let d = space.total_dim() as f64;
        Self {
            op: Operator::identity(space).scale_real(1.0 / d),
        }
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.op.matrix()
    }

    pub fn space(&self) -> &SpaceDescriptor {
        self.op.space()
    }

    pub fn validity(&self) -> StateValidity {
        StateValidity::measure(&self.op).expect("density matrices are Hermitian by construction")
    }
}

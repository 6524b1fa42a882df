//! Dense complex linear algebra over small Hilbert spaces.
//!
//! Kets and operators are thin wrappers over `nalgebra` dynamic storage. The
//! computational basis of a composite space is ordered lexicographically, so
//! for two qubits the basis reads `↑↑, ↑↓, ↓↑, ↓↓` with `|↑⟩ = (1, 0)ᵀ`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// A complex probability amplitude.
pub type Amplitude = Complex64;

/// Singular values at or below this (relative to `max(1, σ_max)`) count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Maximum residual accepted from [`solve_linear`].
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Maximum entrywise `|M − M†|` for an operator to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilbertError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty vector or operator")]
    Empty,
    #[error("entry is NaN or infinite")]
    NonFinite,
    #[error("operator data of length {len} is not a square matrix")]
    NotSquare { len: usize },
    #[error("columns are linearly dependent (rank {rank} < {expected})")]
    SingularBasis { rank: usize, expected: usize },
    #[error("target is not in the span of the columns (residual {residual:e})")]
    Inconsistent { residual: f64 },
    #[error("operator is not Hermitian (max |M - M†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("invalid tensor factorization: {0}")]
    Factorization(String),
}

pub type Result<T> = std::result::Result<T, HilbertError>;

fn all_finite<'a>(it: impl IntoIterator<Item = &'a Complex64>) -> bool {
    it.into_iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// A column vector in a finite-dimensional Hilbert space.
#[derive(Clone, PartialEq)]
pub struct KetVector(DVector<Complex64>);

impl KetVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(HilbertError::Empty);
        }
        if !all_finite(&entries) {
            return Err(HilbertError::NonFinite);
        }
        Ok(Self(DVector::from_vec(entries)))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The `index`-th computational basis vector.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dim {dim}"
        );
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn from_vector(v: DVector<Complex64>) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(HilbertError::ZeroVector);
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(&self.0 * c)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &KetVector) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for KetVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Add for &KetVector {
    type Output = KetVector;
    fn add(self, rhs: &KetVector) -> KetVector {
        KetVector(&self.0 + &rhs.0)
    }
}

impl Sub for &KetVector {
    type Output = KetVector;
    fn sub(self, rhs: &KetVector) -> KetVector {
        KetVector(&self.0 - &rhs.0)
    }
}

/// A square matrix acting on kets of the same dimension.
#[derive(Clone, PartialEq)]
pub struct LinearOperator(DMatrix<Complex64>);

impl LinearOperator {
    /// Builds an operator from row-major entries.
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        let len = entries.len();
        let dim = (len as f64).sqrt().round() as usize;
        if len == 0 {
            return Err(HilbertError::Empty);
        }
        if dim * dim != len {
            return Err(HilbertError::NotSquare { len });
        }
        if !all_finite(&entries) {
            return Err(HilbertError::NonFinite);
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, &entries)))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(HilbertError::NotSquare { len: m.len() });
        }
        if m.is_empty() {
            return Err(HilbertError::Empty);
        }
        if !all_finite(m.iter()) {
            return Err(HilbertError::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    /// The outer product `|ket⟩⟨bra|`.
    pub fn outer(ket: &KetVector, bra: &KetVector) -> Self {
        Self(&ket.0 * bra.0.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let d = &self.0 - self.0.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(&self.0 * c)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(Complex64::new(x, 0.0))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &LinearOperator) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn anticommutator(&self, other: &LinearOperator) -> Self {
        Self(&self.0 * &other.0 + &other.0 * &self.0)
    }

    pub fn max_abs_diff(&self, other: &LinearOperator) -> f64 {
        assert_eq!(self.dim(), other.dim());
        (&self.0 - &other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `⟨a|self|b⟩`.
    pub fn matrix_element(&self, a: &KetVector, b: &KetVector) -> Result<Complex64> {
        inner(a, &apply(self, b)?)
    }

    pub fn expectation(&self, psi: &KetVector) -> Result<Complex64> {
        self.matrix_element(psi, psi)
    }
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<Complex64>> = self
            .0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        f.debug_list().entries(rows).finish()
    }
}

impl Mul for &LinearOperator {
    type Output = LinearOperator;
    fn mul(self, rhs: &LinearOperator) -> LinearOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        LinearOperator(&self.0 * &rhs.0)
    }
}

impl Add for &LinearOperator {
    type Output = LinearOperator;
    fn add(self, rhs: &LinearOperator) -> LinearOperator {
        LinearOperator(&self.0 + &rhs.0)
    }
}

impl Sub for &LinearOperator {
    type Output = LinearOperator;
    fn sub(self, rhs: &LinearOperator) -> LinearOperator {
        LinearOperator(&self.0 - &rhs.0)
    }
}

impl Neg for &LinearOperator {
    type Output = LinearOperator;
    fn neg(self) -> LinearOperator {
        LinearOperator(-&self.0)
    }
}

/// Kronecker product of two kets or two operators.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for KetVector {
    fn tensor(&self, other: &Self) -> Self {
        KetVector(self.0.kronecker(&other.0))
    }
}

impl Tensor for LinearOperator {
    fn tensor(&self, other: &Self) -> Self {
        LinearOperator(self.0.kronecker(&other.0))
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Tensor product of a non-empty sequence, left to right.
pub fn tensor_all<T: Tensor + Clone>(parts: &[T]) -> T {
    let (first, rest) = parts
        .split_first()
        .expect("tensor_all needs at least one factor");
    rest.iter().fold(first.clone(), |acc, p| acc.tensor(p))
}

/// `⟨bra|ket⟩`, conjugate-linear in `bra`.
pub fn inner(bra: &KetVector, ket: &KetVector) -> Result<Complex64> {
    if bra.dim() != ket.dim() {
        return Err(HilbertError::DimensionMismatch {
            expected: bra.dim(),
            found: ket.dim(),
        });
    }
    Ok(bra.0.dotc(&ket.0))
}

pub fn apply(op: &LinearOperator, ket: &KetVector) -> Result<KetVector> {
    if op.dim() != ket.dim() {
        return Err(HilbertError::DimensionMismatch {
            expected: op.dim(),
            found: ket.dim(),
        });
    }
    Ok(KetVector(&op.0 * &ket.0))
}

fn stack_columns(columns: &[KetVector]) -> Result<DMatrix<Complex64>> {
    let first = columns.first().ok_or(HilbertError::Empty)?;
    let n = first.dim();
    for c in columns {
        if c.dim() != n {
            return Err(HilbertError::DimensionMismatch {
                expected: n,
                found: c.dim(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, columns.len(), |r, c| columns[c].0[r]))
}

fn numerical_rank(m: &DMatrix<Complex64>, tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cutoff = tol * smax.max(1.0);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Numerical rank of the span of `vectors`.
pub fn rank(vectors: &[KetVector], tol: f64) -> Result<usize> {
    Ok(numerical_rank(&stack_columns(vectors)?, tol))
}

/// Ratio of the largest to the smallest singular value of the stacked columns.
pub fn condition_number(columns: &[KetVector]) -> Result<f64> {
    let sv = stack_columns(columns)?.singular_values();
    Ok(sv.max() / sv.min())
}

/// Finds the unique `c` with `Σ cᵢ·columnsᵢ = target`.
///
/// The columns must be linearly independent. Square systems go through a
/// fully pivoted LU factorization, tall ones through the SVD; either way one
/// step of iterative refinement follows.
pub fn solve_linear(columns: &[KetVector], target: &KetVector) -> Result<Vec<Complex64>> {
    let a = stack_columns(columns)?;
    if target.dim() != a.nrows() {
        return Err(HilbertError::DimensionMismatch {
            expected: a.nrows(),
            found: target.dim(),
        });
    }
    let k = a.ncols();
    let r = numerical_rank(&a, RANK_TOL);
    if r < k {
        return Err(HilbertError::SingularBasis {
            rank: r,
            expected: k,
        });
    }
    let b = &target.0;
    let solve = |rhs: &DVector<Complex64>| -> Option<DVector<Complex64>> {
        if a.is_square() {
            a.clone().full_piv_lu().solve(rhs)
        } else {
            a.clone().svd(true, true).solve(rhs, 0.0).ok()
        }
    };
    let mut x = solve(b).ok_or(HilbertError::SingularBasis {
        rank: r,
        expected: k,
    })?;
    let res = b - &a * &x;
    if let Some(dx) = solve(&res) {
        x += dx;
    }
    let residual = (b - &a * &x).iter().map(|z| z.norm()).fold(0.0, f64::max);
    // Scale by the largest term in Σ cᵢ·columnᵢ: large coefficients that
    // cancel leave rounding of their own size.
    let terms = columns
        .iter()
        .zip(x.iter())
        .map(|(c, xi)| c.norm() * xi.norm())
        .fold(target.norm().max(1.0), f64::max);
    if residual > RESIDUAL_TOL * terms {
        return Err(HilbertError::Inconsistent { residual });
    }
    Ok(x.iter().copied().collect())
}

/// Eigen-decomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<KetVector>,
}

impl HermitianEigen {
    pub fn new(op: &LinearOperator) -> Result<Self> {
        let deviation = op.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(HilbertError::NotHermitian { deviation });
        }
        // Symmetrize so rounding noise below the tolerance does not leak in.
        let h = (&op.0 + op.0.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        let values = eig.eigenvalues.iter().copied().collect();
        let vectors = eig
            .eigenvectors
            .column_iter()
            .map(|c| KetVector(c.into_owned()))
            .collect();
        Ok(Self { values, vectors })
    }

    /// `f(op) = Σ f(λ)|v⟩⟨v|`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64) -> LinearOperator {
        let dim = self.vectors[0].dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (&lambda, v) in self.values.iter().zip(&self.vectors) {
            m += &v.0 * v.0.adjoint() * f(lambda);
        }
        LinearOperator(m)
    }

    /// Distinct eigenvalues (merged within `tol`) with their spectral projectors.
    pub fn eigenspaces(&self, tol: f64) -> Vec<(f64, LinearOperator)> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        let dim = self.vectors[0].dim();
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        for i in order {
            match out.last_mut() {
                Some((lambda, members)) if (self.values[i] - *lambda).abs() <= tol => {
                    members.push(i)
                }
                _ => out.push((self.values[i], vec![i])),
            }
        }
        out.into_iter()
            .map(|(_, members)| {
                let mean =
                    members.iter().map(|&i| self.values[i]).sum::<f64>() / members.len() as f64;
                let mut p = DMatrix::zeros(dim, dim);
                for &i in &members {
                    p += &self.vectors[i].0 * self.vectors[i].0.adjoint();
                }
                (mean, LinearOperator(p))
            })
            .collect()
    }
}

/// `e^{−iHt}` for Hermitian `h`.
pub fn unitary_evolution(h: &LinearOperator, t: f64) -> Result<LinearOperator> {
    let eig = HermitianEigen::new(h)?;
    Ok(eig.apply_fn(|lambda| Complex64::new(0.0, -lambda * t).exp()))
}

/// Subsystem dimensions of a composite space, most significant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorFactorization {
    factors: Vec<usize>,
}

impl TensorFactorization {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(HilbertError::Factorization(format!(
                "factors must be non-empty and positive, got {factors:?}"
            )));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    /// Lifts `op` acting on subsystem `slot` to the full space.
    pub fn embed(&self, op: &LinearOperator, slot: usize) -> Result<LinearOperator> {
        let d = *self
            .factors
            .get(slot)
            .ok_or_else(|| HilbertError::Factorization(format!("slot {slot} out of range")))?;
        if op.dim() != d {
            return Err(HilbertError::DimensionMismatch {
                expected: d,
                found: op.dim(),
            });
        }
        let parts: Vec<LinearOperator> = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                if i == slot {
                    op.clone()
                } else {
                    LinearOperator::identity(f)
                }
            })
            .collect();
        Ok(tensor_all(&parts))
    }
}

/// Single-qubit states and Pauli matrices.
pub mod pauli {
    use super::{KetVector, LinearOperator};
    use num_complex::Complex64;

    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);
    const I: Complex64 = Complex64::new(0.0, 1.0);

    pub fn up() -> KetVector {
        KetVector::basis(2, 0)
    }

    pub fn down() -> KetVector {
        KetVector::basis(2, 1)
    }

    /// `(|↑⟩ + sign·|↓⟩)/√2`, the σ₁ eigenstates `|x±⟩`.
    pub fn x_state(sign: f64) -> KetVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        KetVector::from_real(&[s, sign * s]).expect("finite")
    }

    /// `(|↑⟩ + sign·e^{iθ}|↓⟩)/√2`, eigenstates of [`in_plane`]`(θ)`.
    pub fn in_plane_state(theta: f64, sign: f64) -> KetVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        KetVector::new(vec![
            Complex64::new(s, 0.0),
            Complex64::from_polar(sign * s, theta),
        ])
        .expect("finite")
    }

    pub fn identity() -> LinearOperator {
        LinearOperator::identity(2)
    }

    pub fn sigma1() -> LinearOperator {
        LinearOperator::new(vec![ZERO, ONE, ONE, ZERO]).expect("2x2")
    }

    pub fn sigma2() -> LinearOperator {
        LinearOperator::new(vec![ZERO, -I, I, ZERO]).expect("2x2")
    }

    pub fn sigma3() -> LinearOperator {
        LinearOperator::new(vec![ONE, ZERO, ZERO, -ONE]).expect("2x2")
    }

    /// σ₁, σ₂, σ₃ for `k` = 1, 2, 3; the identity for `k = 0`.
    pub fn sigma(k: usize) -> LinearOperator {
        match k {
            0 => identity(),
            1 => sigma1(),
            2 => sigma2(),
            3 => sigma3(),
            _ => panic!("Pauli index {k} out of range"),
        }
    }

    /// `cos θ·σ₁ + sin θ·σ₂`, the polarization along angle θ in the XY plane.
    pub fn in_plane(theta: f64) -> LinearOperator {
        &sigma1().scale_real(theta.cos()) + &sigma2().scale_real(theta.sin())
    }

    /// `n·σ⃗` for a (not necessarily unit) real 3-vector.
    pub fn along(n: [f64; 3]) -> LinearOperator {
        let a = &sigma1().scale_real(n[0]) + &sigma2().scale_real(n[1]);
        &a + &sigma3().scale_real(n[2])
    }
}

//! Changes of representation between path ensembles.
//!
//! Two orthonormal bases `{|ζᵢ⟩}` and `{|ξⱼ⟩}` give two ensembles of paths for
//! the same state. The complex weights
//!
//! ```text
//! p̃_{j/i} = ⟨ζᵢ|ξⱼ⟩⟨ξⱼ|Ψ⟩ / ⟨ζᵢ|Ψ⟩
//! ```
//!
//! act like conditional probabilities: each row sums to one, `Σᵢ pᵢ·p̃_{j/i} = pⱼ`,
//! and path values transform as `𝒪_cl(i) = Σⱼ p̃_{j/i}·𝒪_cl(j)`.
//!
//! The second half of the module is a classical toy model on an `n×n` grid
//! where the same structure is recovered by solving a linear system for the
//! conditional weights.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::hilbert::{self, inner, HilbertError, KetVector, LinearOperator};
use crate::singlet::{self, SingletError, OVERLAP_EPS};

/// Rank tolerance for the Ω vectors.
pub const OMEGA_RANK_TOL: f64 = 1e-8;
/// Residual accepted from the toy-model solve.
pub const TOY_TOL: f64 = 1e-9;
/// Tolerance used to detect the degenerate toy grid.
pub const TOY_SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepframeError {
    #[error("path {index} has zero overlap with the state (|⟨ζ|Ψ⟩| = {overlap:e})")]
    ZeroProbabilityPath { index: usize, overlap: f64 },
    #[error("basis is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("toy grid is singular: column averages are constant but row averages differ")]
    SingularToyModel,
    #[error("toy grid has a zero {axis} marginal at index {index}")]
    ZeroMarginal { axis: &'static str, index: usize },
    #[error("invalid toy grid: {0}")]
    InvalidGrid(String),
    #[error("toy constraints not satisfied (residual {residual:e})")]
    Unsatisfied { residual: f64 },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Singlet(#[from] SingletError),
}

pub type Result<T> = std::result::Result<T, RepframeError>;

fn check_orthonormal(basis: &[KetVector]) -> Result<()> {
    let mut deviation: f64 = 0.0;
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((inner(u, v)? - target).norm());
        }
    }
    if deviation > 1e-10 {
        return Err(RepframeError::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Matrix of conditional pseudo-probabilities `p̃_{j/i}` (rows `i`, columns `j`).
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoProbMatrix {
    entries: DMatrix<Complex64>,
    p_rows: Vec<f64>,
    p_cols: Vec<f64>,
}

impl PseudoProbMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    /// Born probabilities of the row basis.
    pub fn row_probabilities(&self) -> &[f64] {
        &self.p_rows
    }

    /// Born probabilities of the column basis.
    pub fn col_probabilities(&self) -> &[f64] {
        &self.p_cols
    }

    /// `maxᵢ |Σⱼ p̃_{j/i} − 1|`.
    pub fn row_sum_residual(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| (r.sum() - Complex64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    /// `maxⱼ |Σᵢ pᵢ·p̃_{j/i} − pⱼ|`.
    pub fn marginal_residual(&self) -> f64 {
        (0..self.ncols())
            .map(|j| {
                let s: Complex64 = (0..self.nrows())
                    .map(|i| self.entries[(i, j)] * self.p_rows[i])
                    .sum();
                (s - self.p_cols[j]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Chains `I → J` with `J → K` into `I → K`.
    pub fn compose(&self, next: &PseudoProbMatrix) -> Result<PseudoProbMatrix> {
        if self.ncols() != next.nrows() {
            return Err(RepframeError::SizeMismatch {
                expected: self.ncols(),
                found: next.nrows(),
            });
        }
        Ok(PseudoProbMatrix {
            entries: &self.entries * &next.entries,
            p_rows: self.p_rows.clone(),
            p_cols: next.p_cols.clone(),
        })
    }

    /// `(Σⱼ p̃_{j/i}·values[j])ᵢ`.
    pub fn transform(&self, values_j: &[Complex64]) -> Result<Vec<Complex64>> {
        if values_j.len() != self.ncols() {
            return Err(RepframeError::SizeMismatch {
                expected: self.ncols(),
                found: values_j.len(),
            });
        }
        let v = DVector::from_column_slice(values_j);
        Ok((&self.entries * v).iter().copied().collect())
    }
}

/// Builds `p̃_{j/i}` from a row basis `basis_i`, a column basis `basis_j` and the state.
pub fn pseudo_prob_matrix(
    basis_i: &[KetVector],
    basis_j: &[KetVector],
    psi: &KetVector,
) -> Result<PseudoProbMatrix> {
    check_orthonormal(basis_i)?;
    check_orthonormal(basis_j)?;
    let row_amps = basis_i
        .iter()
        .map(|z| inner(z, psi))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let col_amps = basis_j
        .iter()
        .map(|x| inner(x, psi))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if let Some((index, a)) = row_amps
        .iter()
        .enumerate()
        .find(|(_, a)| a.norm() <= OVERLAP_EPS)
    {
        return Err(RepframeError::ZeroProbabilityPath {
            index,
            overlap: a.norm(),
        });
    }
    let mut entries = DMatrix::zeros(basis_i.len(), basis_j.len());
    for (i, z) in basis_i.iter().enumerate() {
        for (j, x) in basis_j.iter().enumerate() {
            entries[(i, j)] = inner(z, x)? * col_amps[j] / row_amps[i];
        }
    }
    Ok(PseudoProbMatrix {
        entries,
        p_rows: row_amps.iter().map(|a| a.norm_sqr()).collect(),
        p_cols: col_amps.iter().map(|a| a.norm_sqr()).collect(),
    })
}

/// Weak values of `obs` post-selected on each state of `basis`.
pub fn weak_value_table(
    obs: &LinearOperator,
    basis: &[KetVector],
    psi: &KetVector,
) -> Result<Vec<Complex64>> {
    Ok(basis
        .iter()
        .map(|b| singlet::weak_value(obs, b, psi))
        .collect::<std::result::Result<Vec<_>, _>>()?)
}

/// `maxᵢ |values_i[i] − Σⱼ p̃_{j/i}·values_j[j]|`.
pub fn verify_transform(
    m: &PseudoProbMatrix,
    values_i: &[Complex64],
    values_j: &[Complex64],
) -> Result<f64> {
    if values_i.len() != m.nrows() {
        return Err(RepframeError::SizeMismatch {
            expected: m.nrows(),
            found: values_i.len(),
        });
    }
    let mapped = m.transform(values_j)?;
    Ok(values_i
        .iter()
        .zip(&mapped)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// `Ω⁽ⁱ⁾ = (values_j[j] − values_i[i])ⱼ` for one observable.
pub fn omega_vector(values_i: &[Complex64], values_j: &[Complex64], i: usize) -> KetVector {
    KetVector::from_vector(DVector::from_iterator(
        values_j.len(),
        values_j.iter().map(|v| v - values_i[i]),
    ))
}

/// `|Σⱼ p̃_{j/i}·Ω_j|`: zero when `Ω` lies in the hyperplane of row `i`.
pub fn hyperplane_residual(m: &PseudoProbMatrix, i: usize, omega: &KetVector) -> f64 {
    omega
        .entries()
        .iter()
        .enumerate()
        .map(|(j, w)| m.entry(i, j) * w)
        .sum::<Complex64>()
        .norm()
}

/// Rank of the Ω vectors of several observables for row `i`. Each element of
/// `tables` holds `(values on basis I, values on basis J)`.
pub fn omega_rank(tables: &[(Vec<Complex64>, Vec<Complex64>)], i: usize) -> Result<usize> {
    let omegas: Vec<KetVector> = tables
        .iter()
        .map(|(vi, vj)| omega_vector(vi, vj, i))
        .collect();
    Ok(hilbert::rank(&omegas, OMEGA_RANK_TOL)?)
}

/// Joint probabilities `p_{i,j}` and real values `z_{i,j}` on an `n×n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyGrid {
    probs: DMatrix<f64>,
    values: DMatrix<f64>,
}

impl ToyGrid {
    pub fn new(probs: DMatrix<f64>, values: DMatrix<f64>) -> Result<Self> {
        let n = probs.nrows();
        if n == 0 || !probs.is_square() || values.shape() != probs.shape() {
            return Err(RepframeError::InvalidGrid(format!(
                "probabilities {:?} and values {:?} must be equal non-empty squares",
                probs.shape(),
                values.shape()
            )));
        }
        if probs.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(RepframeError::InvalidGrid("non-finite entry".into()));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(RepframeError::InvalidGrid("negative probability".into()));
        }
        let total = probs.sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(RepframeError::InvalidGrid(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { probs, values })
    }

    /// Grid with uniformly drawn weights (normalized) and values in `[−1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let mut probs = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() + 1e-3);
        probs /= probs.sum();
        let values = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
        Self::new(probs, values)
    }

    pub fn n(&self) -> usize {
        self.probs.nrows()
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        self.probs.row_iter().map(|r| r.sum()).collect()
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        self.probs.column_iter().map(|c| c.sum()).collect()
    }

    /// Average of `z` over each row, `Z^row_i`.
    pub fn row_averages(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let w = self.probs.row(i);
                w.component_mul(&self.values.row(i)).sum() / w.sum()
            })
            .collect()
    }

    /// Average of `z` over each column, `Z^col_j`.
    pub fn col_averages(&self) -> Vec<f64> {
        (0..self.n())
            .map(|j| {
                let w = self.probs.column(j);
                w.component_mul(&self.values.column(j)).sum() / w.sum()
            })
            .collect()
    }
}

/// Conditional weights returned by [`toy_solve`], with the residual of each
/// constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySolution {
    pub ptilde: DMatrix<f64>,
    pub star_residual: f64,
    pub row_residual: f64,
    pub marginal_residual: f64,
}

impl ToySolution {
    pub fn max_residual(&self) -> f64 {
        self.star_residual
            .max(self.row_residual)
            .max(self.marginal_residual)
    }

    pub fn has_entry_outside_unit_interval(&self) -> bool {
        self.ptilde.iter().any(|&x| !(0.0..=1.0).contains(&x))
    }
}

/// Residuals of the three constraint families for a candidate `p̃`.
pub fn toy_residuals(grid: &ToyGrid, ptilde: &DMatrix<f64>) -> (f64, f64, f64) {
    let n = grid.n();
    let (z_row, z_col) = (grid.row_averages(), grid.col_averages());
    let (p_row, p_col) = (grid.row_marginals(), grid.col_marginals());
    let mut star: f64 = 0.0;
    let mut rows: f64 = 0.0;
    let mut marg: f64 = 0.0;
    for i in 0..n {
        let s: f64 = (0..n).map(|j| ptilde[(i, j)] * z_col[j]).sum();
        star = star.max((s - z_row[i]).abs());
        rows = rows.max((ptilde.row(i).sum() - 1.0).abs());
    }
    for j in 0..n {
        let s: f64 = (0..n).map(|i| p_row[i] * ptilde[(i, j)]).sum();
        marg = marg.max((s - p_col[j]).abs());
    }
    (star, rows, marg)
}

/// Minimum-norm `p̃` satisfying `Z^row_i = Σⱼ p̃_{j/i}·Z^col_j`, unit row sums and
/// `Σᵢ p^row_i·p̃_{j/i} = p^col_j`.
pub fn toy_solve(grid: &ToyGrid) -> Result<ToySolution> {
    let n = grid.n();
    let (p_row, p_col) = (grid.row_marginals(), grid.col_marginals());
    if let Some(index) = p_row.iter().position(|&p| p <= 0.0) {
        return Err(RepframeError::ZeroMarginal { axis: "row", index });
    }
    if let Some(index) = p_col.iter().position(|&p| p <= 0.0) {
        return Err(RepframeError::ZeroMarginal {
            axis: "column",
            index,
        });
    }
    let (z_row, z_col) = (grid.row_averages(), grid.col_averages());
    let spread = |v: &[f64]| {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        hi - lo
    };
    if spread(&z_col) <= TOY_SINGULAR_TOL && spread(&z_row) > TOY_SINGULAR_TOL {
        return Err(RepframeError::SingularToyModel);
    }

    // Unknowns x[i*n + j] = p̃_{j/i}; rows: n STAR, n row sums, n marginals.
    let mut a = DMatrix::<f64>::zeros(3 * n, n * n);
    let mut b = DVector::<f64>::zeros(3 * n);
    for i in 0..n {
        for j in 0..n {
            a[(i, i * n + j)] = z_col[j];
            a[(n + i, i * n + j)] = 1.0;
            a[(2 * n + j, i * n + j)] = p_row[i];
        }
        b[i] = z_row[i];
        b[n + i] = 1.0;
        b[2 * n + i] = p_col[i];
    }
    // Minimum-norm solution x = Aᵀy with (AAᵀ)y = b. The symmetric eigen route
    // is used because the SVD of A loses ~1e-5 on some clustered spectra.
    let gram = &a * a.transpose();
    let eig = gram.symmetric_eigen();
    let cutoff = 1e-12 * eig.eigenvalues.amax().max(1.0);
    let mut y = DVector::<f64>::zeros(3 * n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let u = eig.eigenvectors.column(k);
            y += u * (u.dot(&b) / lambda);
        }
    }
    let x = a.transpose() * y;
    let ptilde = DMatrix::from_fn(n, n, |i, j| x[i * n + j]);
    let (star_residual, row_residual, marginal_residual) = toy_residuals(grid, &ptilde);
    let solution = ToySolution {
        ptilde,
        star_residual,
        row_residual,
        marginal_residual,
    };
    if solution.max_residual() > TOY_TOL {
        return Err(RepframeError::Unsatisfied {
            residual: solution.max_residual(),
        });
    }
    Ok(solution)
}

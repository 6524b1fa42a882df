//! Pseudo-classical paths for two photons in the singlet state.
//!
//! A complete set of commuting observables `{σ₁⁽ᴬ⁾, σ_φ⁽ᴮ⁾}` fixes an
//! orthonormal eigenbasis `|±;±⟩`. Post-selecting on each basis state gives a
//! path carrying the probability `|⟨±;±|Ψ⟩|²`, and along that path every
//! observable takes its (generally complex) weak value. The same numbers are
//! obtained as eigenvalues of the commutative representative `𝒫_o`, the unique
//! combination of `1, σ₁⁽ᴬ⁾, σ_φ⁽ᴮ⁾, σ₁⁽ᴬ⁾σ_φ⁽ᴮ⁾` with `𝒪|Ψ⟩ = 𝒫_o|Ψ⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::ops::Index;

use num_complex::Complex64;
use thiserror::Error;

use crate::hilbert::{self, apply, inner, pauli, HilbertError, KetVector, LinearOperator, Tensor};

/// Distance from `0` or `π` below which a CSCO angle is rejected.
pub const PHI_EPS: f64 = 1e-12;
/// Overlaps `|⟨post|ψ⟩|` at or below this make a weak value undefined.
pub const OVERLAP_EPS: f64 = 1e-12;
/// Agreement required between a pseudo-value table and direct weak values.
pub const TABLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SingletError {
    #[error("CSCO angle φ = {phi} is degenerate; φ must avoid 0 and π")]
    DegenerateCsco { phi: f64 },
    #[error(
        "post-selected state is orthogonal to the pre-selected state (|⟨post|ψ⟩| = {overlap:e})"
    )]
    OrthogonalPostselection { overlap: f64 },
    #[error("basis is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

pub type Result<T> = std::result::Result<T, SingletError>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// `+1` for `x ≥ 0`, `−1` otherwise.
    pub fn of(x: f64) -> Sign {
        if x >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Eigenvalue signs of `(σ₁⁽ᴬ⁾, σ_φ⁽ᴮ⁾)` labelling one of the four paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathLabel {
    pub a: Sign,
    pub b: Sign,
}

impl PathLabel {
    /// `(+,+), (+,−), (−,+), (−,−)`; tables and ensembles use this order.
    pub const ALL: [PathLabel; 4] = [
        PathLabel::new(Sign::Plus, Sign::Plus),
        PathLabel::new(Sign::Plus, Sign::Minus),
        PathLabel::new(Sign::Minus, Sign::Plus),
        PathLabel::new(Sign::Minus, Sign::Minus),
    ];

    pub const fn new(a: Sign, b: Sign) -> Self {
        Self { a, b }
    }

    pub fn index(self) -> usize {
        let a = matches!(self.a, Sign::Minus) as usize;
        let b = matches!(self.b, Sign::Minus) as usize;
        2 * a + b
    }
}

impl fmt::Display for PathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// The photon an observable acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Photon {
    A,
    B,
}

/// Pauli matrix `σₖ` (or the identity for `k = 0`) on one photon of the pair.
pub fn pauli_on(photon: Photon, k: usize) -> LinearOperator {
    local(photon, &pauli::sigma(k))
}

/// Polarization `cos χ·σ₁ + sin χ·σ₂` of one photon.
pub fn polarization(photon: Photon, chi: f64) -> LinearOperator {
    local(photon, &pauli::in_plane(chi))
}

/// Lifts a single-photon operator to the two-photon space.
pub fn local(photon: Photon, op: &LinearOperator) -> LinearOperator {
    match photon {
        Photon::A => op.tensor(&pauli::identity()),
        Photon::B => pauli::identity().tensor(op),
    }
}

/// `(|↑↓⟩ − |↓↑⟩)/√2`.
pub fn build_singlet() -> KetVector {
    KetVector::from_real(&[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).expect("finite")
}

/// The commuting pair `{σ₁⁽ᴬ⁾, σ_φ⁽ᴮ⁾}`, parameterized by the angle of
/// photon B's polarizer relative to photon A's X axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CscoChoice {
    phi: f64,
}

impl CscoChoice {
    /// Wraps `phi` into `[0, 2π)` and rejects the degenerate angles `0` and `π`.
    pub fn new(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(SingletError::InvalidArgument(format!(
                "φ = {phi} is not finite"
            )));
        }
        let w = phi.rem_euclid(TAU);
        if w < PHI_EPS || (w - PI).abs() < PHI_EPS || TAU - w < PHI_EPS {
            return Err(SingletError::DegenerateCsco { phi });
        }
        Ok(Self { phi: w })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma_phi_b(&self) -> LinearOperator {
        polarization(Photon::B, self.phi)
    }

    /// `1, σ₁⁽ᴬ⁾, σ_φ⁽ᴮ⁾, σ₁⁽ᴬ⁾σ_φ⁽ᴮ⁾`.
    pub fn generators(&self) -> [LinearOperator; 4] {
        let a = pauli_on(Photon::A, 1);
        let b = self.sigma_phi_b();
        let ab = &a * &b;
        [LinearOperator::identity(4), a, b, ab]
    }
}

/// Simultaneous eigenvectors of `σ₁⁽ᴬ⁾` and `σ_φ⁽ᴮ⁾`, in [`PathLabel::ALL`] order.
pub fn csco_eigenbasis(c: &CscoChoice) -> [KetVector; 4] {
    PathLabel::ALL.map(|label| {
        pauli::x_state(label.a.value()).tensor(&pauli::in_plane_state(c.phi, label.b.value()))
    })
}

fn check_orthonormal(basis: &[KetVector]) -> Result<()> {
    let mut deviation: f64 = 0.0;
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let target = if i == j { ONE } else { ZERO };
            deviation = deviation.max((inner(u, v)? - target).norm());
        }
    }
    if deviation > 1e-10 {
        return Err(SingletError::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Four post-selection states with their Born probabilities for a fixed
/// pre-selected state.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    postselect: [KetVector; 4],
    amplitudes: [Complex64; 4],
    probabilities: [f64; 4],
    psi: KetVector,
}

impl PathEnsemble {
    /// Ensemble for an arbitrary orthonormal basis of the two-photon space.
    pub fn from_basis(basis: [KetVector; 4], psi: &KetVector) -> Result<Self> {
        check_orthonormal(&basis)?;
        let mut amplitudes = [ZERO; 4];
        for (q, b) in amplitudes.iter_mut().zip(&basis) {
            *q = inner(b, psi)?;
        }
        Ok(Self {
            probabilities: amplitudes.map(|q| q.norm_sqr()),
            amplitudes,
            postselect: basis,
            psi: psi.clone(),
        })
    }

    pub fn postselect_states(&self) -> &[KetVector; 4] {
        &self.postselect
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    pub fn probabilities(&self) -> &[f64; 4] {
        &self.probabilities
    }

    pub fn probability(&self, label: PathLabel) -> f64 {
        self.probabilities[label.index()]
    }

    pub fn pre_selected(&self) -> &KetVector {
        &self.psi
    }

    /// Direct weak values of `obs` on the four paths.
    pub fn weak_values(&self, obs: &LinearOperator) -> Result<PseudoValueTable> {
        let mut values = [ZERO; 4];
        for (v, post) in values.iter_mut().zip(&self.postselect) {
            *v = weak_value(obs, post, &self.psi)?;
        }
        Ok(PseudoValueTable { values })
    }
}

/// Path ensemble of the singlet for the CSCO `c`.
pub fn path_probabilities(c: &CscoChoice) -> PathEnsemble {
    PathEnsemble::from_basis(csco_eigenbasis(c), &build_singlet())
        .expect("CSCO eigenbasis is orthonormal")
}

/// `⟨post|𝒪|ψ⟩ / ⟨post|ψ⟩`.
pub fn weak_value(
    obs: &LinearOperator,
    postselect: &KetVector,
    psi: &KetVector,
) -> Result<Complex64> {
    let overlap = inner(postselect, psi)?;
    if overlap.norm() <= OVERLAP_EPS {
        return Err(SingletError::OrthogonalPostselection {
            overlap: overlap.norm(),
        });
    }
    Ok(obs.matrix_element(postselect, psi)? / overlap)
}

/// Coefficients of `𝒫_o = c₁·1 + c_A·σ₁⁽ᴬ⁾ + c_B·σ_φ⁽ᴮ⁾ + c_AB·σ₁⁽ᴬ⁾σ_φ⁽ᴮ⁾`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutativeRep {
    pub c1: Complex64,
    pub c_a: Complex64,
    pub c_b: Complex64,
    pub c_ab: Complex64,
}

impl CommutativeRep {
    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.c1, self.c_a, self.c_b, self.c_ab]
    }

    /// Eigenvalue of `𝒫_o` on the path `label`.
    pub fn eval(&self, label: PathLabel) -> Complex64 {
        let (a, b) = (label.a.value(), label.b.value());
        self.c1 + self.c_a * a + self.c_b * b + self.c_ab * (a * b)
    }

    pub fn operator(&self, c: &CscoChoice) -> LinearOperator {
        c.generators()
            .iter()
            .zip(self.coefficients())
            .fold(LinearOperator::zeros(4), |acc, (g, k)| &acc + &g.scale(k))
    }
}

/// Solves `𝒪|ψ⟩ = 𝒫_o|ψ⟩` for the four coefficients of `𝒫_o`.
pub fn commutative_representative(
    obs: &LinearOperator,
    c: &CscoChoice,
    psi: &KetVector,
) -> Result<CommutativeRep> {
    let columns = c
        .generators()
        .iter()
        .map(|g| apply(g, psi))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let target = apply(obs, psi)?;
    let x = hilbert::solve_linear(&columns, &target)?;
    Ok(CommutativeRep {
        c1: x[0],
        c_a: x[1],
        c_b: x[2],
        c_ab: x[3],
    })
}

/// Complex values of one observable on the four paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoValueTable {
    values: [Complex64; 4],
}

impl PseudoValueTable {
    pub fn new(values: [Complex64; 4]) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Complex64; 4] {
        &self.values
    }

    pub fn get(&self, label: PathLabel) -> Complex64 {
        self.values[label.index()]
    }

    pub fn max_abs_diff(&self, other: &PseudoValueTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<PathLabel> for PseudoValueTable {
    type Output = Complex64;
    fn index(&self, label: PathLabel) -> &Complex64 {
        &self.values[label.index()]
    }
}

impl Index<usize> for PseudoValueTable {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.values[i]
    }
}

/// Evaluates the commutative representative on the four eigenvalue tuples.
pub fn pseudo_value_table(
    obs: &LinearOperator,
    c: &CscoChoice,
    psi: &KetVector,
) -> Result<PseudoValueTable> {
    let rep = commutative_representative(obs, c, psi)?;
    let table = PseudoValueTable {
        values: PathLabel::ALL.map(|l| rep.eval(l)),
    };
    if cfg!(debug_assertions) {
        // Near φ = 0 or π the solve loses about log₁₀κ digits.
        let columns = c
            .generators()
            .iter()
            .map(|g| apply(g, psi))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let tol = TABLE_TOL.max(64.0 * f64::EPSILON * hilbert::condition_number(&columns)?);
        let basis = csco_eigenbasis(c);
        for (label, post) in PathLabel::ALL.iter().zip(&basis) {
            // Paths of vanishing weight have no weak value to compare against.
            if let Ok(w) = weak_value(obs, post, psi) {
                let v = table[*label];
                debug_assert!(
                    (v - w).norm() <= tol * (1.0 + w.norm()),
                    "pseudo-value {v} disagrees with weak value {w} on {label}"
                );
            }
        }
    }
    Ok(table)
}

/// `Σ p·𝒪_cl`, which equals `⟨ψ|𝒪|ψ⟩`.
pub fn reconstruct_average(table: &PseudoValueTable, ens: &PathEnsemble) -> Complex64 {
    table
        .values
        .iter()
        .zip(ens.probabilities())
        .map(|(v, &p)| v * p)
        .sum()
}

/// `Σ p·(𝒪₁)*_cl·(𝒪₂)_cl`, which equals `⟨ψ|𝒪₁𝒪₂|ψ⟩`.
pub fn reconstruct_correlation(
    t1: &PseudoValueTable,
    t2: &PseudoValueTable,
    ens: &PathEnsemble,
) -> Complex64 {
    t1.values
        .iter()
        .zip(&t2.values)
        .zip(ens.probabilities())
        .map(|((a, b), &p)| a.conj() * b * p)
        .sum()
}

/// Heisenberg picture `e^{+iHt}·𝒪·e^{−iHt}`.
pub fn heisenberg_evolve(
    obs: &LinearOperator,
    h: &LinearOperator,
    t: f64,
) -> Result<LinearOperator> {
    let u = hilbert::unitary_evolution(h, t)?;
    Ok(&(&u.adjoint() * obs) * &u)
}

/// Largest deviation, over the four paths, between the central difference of
/// `(𝒪(t))_cl` and `i([H, 𝒪(t)])_cl`.
pub fn eom_residual(
    obs: &LinearOperator,
    h: &LinearOperator,
    c: &CscoChoice,
    psi: &KetVector,
    t: f64,
    dt: f64,
) -> Result<f64> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(SingletError::InvalidArgument(format!(
            "dt = {dt} must be positive"
        )));
    }
    let forward = pseudo_value_table(&heisenberg_evolve(obs, h, t + dt)?, c, psi)?;
    let backward = pseudo_value_table(&heisenberg_evolve(obs, h, t - dt)?, c, psi)?;
    let commutator = h.commutator(&heisenberg_evolve(obs, h, t)?);
    let rhs = pseudo_value_table(&commutator, c, psi)?;
    Ok(PathLabel::ALL
        .iter()
        .map(|&l| {
            let derivative = (forward[l] - backward[l]) / (2.0 * dt);
            (derivative - I * rhs[l]).norm()
        })
        .fold(0.0, f64::max))
}

/// `(𝒪₁𝒪₂)_cl − (𝒪₁)*_cl·(𝒪₂)_cl` on one path.
pub fn covariance(
    product: &PseudoValueTable,
    t1: &PseudoValueTable,
    t2: &PseudoValueTable,
    label: PathLabel,
) -> Complex64 {
    product[label] - t1[label].conj() * t2[label]
}

/// Outcome of [`classicality_check`].
#[derive(Debug, Clone)]
pub struct ClassicalityReport {
    pub label: PathLabel,
    pub delta: f64,
    pub classical: bool,
    /// Covariance of each input pair, in input order.
    pub covariances: Vec<Complex64>,
    /// Indices of pairs with `|cov| ≥ delta`.
    pub offenders: Vec<usize>,
    pub max_abs_covariance: f64,
    /// For each pair's first observable, the gap between the exact
    /// `i([H, 𝒪])_cl` and its classical approximation
    /// `i(H*_cl·𝒪_cl − 𝒪*_cl·H_cl)`. Present only when a Hamiltonian is given.
    pub eom_gaps: Option<Vec<f64>>,
}

/// Tests whether every pair has `|cov| < delta` on the path `label`.
pub fn classicality_check(
    pairs: &[(LinearOperator, LinearOperator)],
    c: &CscoChoice,
    psi: &KetVector,
    label: PathLabel,
    delta: f64,
    hamiltonian: Option<&LinearOperator>,
) -> Result<ClassicalityReport> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(SingletError::InvalidArgument(format!(
            "Δ = {delta} must be positive"
        )));
    }
    let mut covariances = Vec::with_capacity(pairs.len());
    for (o1, o2) in pairs {
        let product = pseudo_value_table(&(o1 * o2), c, psi)?;
        let t1 = pseudo_value_table(o1, c, psi)?;
        let t2 = pseudo_value_table(o2, c, psi)?;
        covariances.push(covariance(&product, &t1, &t2, label));
    }
    let offenders: Vec<usize> = covariances
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() >= delta)
        .map(|(i, _)| i)
        .collect();
    let max_abs_covariance = covariances.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let eom_gaps = match hamiltonian {
        None => None,
        Some(h) => {
            let h_cl = pseudo_value_table(h, c, psi)?[label];
            let mut gaps = Vec::with_capacity(pairs.len());
            for (o, _) in pairs {
                let exact = I * pseudo_value_table(&h.commutator(o), c, psi)?[label];
                let o_cl = pseudo_value_table(o, c, psi)?[label];
                let approx = I * (h_cl.conj() * o_cl - o_cl.conj() * h_cl);
                gaps.push((exact - approx).norm());
            }
            Some(gaps)
        }
    };

    Ok(ClassicalityReport {
        label,
        delta,
        classical: offenders.is_empty(),
        covariances,
        offenders,
        max_abs_covariance,
        eom_gaps,
    })
}

/// Quantum correlation `⟨Ψ|σ_a⁽ᴬ⁾σ_b⁽ᴮ⁾|Ψ⟩` of the singlet for unit vectors `a`, `b`.
pub fn quantum_correlation(a: [f64; 3], b: [f64; 3]) -> f64 {
    let op = &local(Photon::A, &pauli::along(a)) * &local(Photon::B, &pauli::along(b));
    op.expectation(&build_singlet()).expect("4-dim").re
}

/// Both sides of `|E(a,b) − E(a,c)| ≤ 1 + E(b,c)` using singlet correlations.
pub fn bell_inequality_sides(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> (f64, f64) {
    let lhs = (quantum_correlation(a, b) - quantum_correlation(a, c)).abs();
    let rhs = 1.0 + quantum_correlation(b, c);
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn singlet_basics() {
        let psi = build_singlet();
        assert!(psi.is_normalized(1e-15));
        assert!(close(psi.entries()[1], c(FRAC_1_SQRT_2, 0.0), 1e-16));
        let xx = &pauli_on(Photon::A, 1) * &pauli_on(Photon::B, 1);
        assert!(close(xx.expectation(&psi).unwrap(), c(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn csco_rejects_degenerate_angles() {
        for phi in [0.0, PI, TAU, -PI, 3.0 * PI] {
            assert!(matches!(
                CscoChoice::new(phi),
                Err(SingletError::DegenerateCsco { .. })
            ));
        }
        assert!(CscoChoice::new(f64::NAN).is_err());
        assert!(CscoChoice::new(1e-6).is_ok());
        assert!((CscoChoice::new(-FRAC_PI_2).unwrap().phi() - 3.0 * FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn eigenbasis_at_right_angle() {
        let basis = csco_eigenbasis(&CscoChoice::new(FRAC_PI_2).unwrap());
        let expected =
            KetVector::new(vec![c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.0), c(0.0, 0.5)]).unwrap();
        assert!(basis[0].max_abs_diff(&expected) < 1e-15);
        let s1a = pauli_on(Photon::A, 1);
        assert!(close(s1a.expectation(&basis[0]).unwrap(), ONE, 1e-15));
        for i in 0..4 {
            for j in 0..4 {
                let z = inner(&basis[i], &basis[j]).unwrap();
                assert!(close(z, if i == j { ONE } else { ZERO }, 1e-15));
            }
        }
    }

    #[test]
    fn eigenbasis_eigenvalue_pattern() {
        let csco = CscoChoice::new(2.1).unwrap();
        let [_, s1a, sb, _] = csco.generators();
        for (label, v) in PathLabel::ALL.iter().zip(csco_eigenbasis(&csco)) {
            let av = apply(&s1a, &v).unwrap();
            let bv = apply(&sb, &v).unwrap();
            assert!(av.max_abs_diff(&v.scale(c(label.a.value(), 0.0))) < 1e-14);
            assert!(bv.max_abs_diff(&v.scale(c(label.b.value(), 0.0))) < 1e-14);
        }
    }

    #[test]
    fn amplitudes_match_closed_form() {
        let phi = 1.234;
        let ens = path_probabilities(&CscoChoice::new(phi).unwrap());
        let e = Complex64::from_polar(1.0, -phi);
        let k = 1.0 / (2.0 * 2f64.sqrt());
        let expected = [-(ONE - e) * k, -(ONE + e) * k, (ONE + e) * k, (ONE - e) * k];
        for (q, x) in ens.amplitudes().iter().zip(expected) {
            assert!(close(*q, x, 1e-15), "{q} vs {x}");
        }
    }

    #[test]
    fn probabilities_examples() {
        let p = path_probabilities(&CscoChoice::new(FRAC_PI_2).unwrap());
        for &x in p.probabilities() {
            assert!((x - 0.25).abs() < 1e-15);
        }
        let p = path_probabilities(&CscoChoice::new(1e-9).unwrap());
        let expected = [0.0, 0.5, 0.5, 0.0];
        for (x, e) in p.probabilities().iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn weak_value_examples() {
        let psi = build_singlet();
        let basis = csco_eigenbasis(&CscoChoice::new(FRAC_PI_2).unwrap());
        let id = LinearOperator::identity(4);
        assert!(close(weak_value(&id, &basis[2], &psi).unwrap(), ONE, 1e-15));
        let s1a = pauli_on(Photon::A, 1);
        assert!(close(
            weak_value(&s1a, &basis[0], &psi).unwrap(),
            ONE,
            1e-15
        ));
        assert!(close(
            weak_value(&s1a, &basis[1], &psi).unwrap(),
            ONE,
            1e-15
        ));
        let s3b = pauli_on(Photon::B, 3);
        assert!(close(weak_value(&s3b, &basis[0], &psi).unwrap(), -I, 1e-15));
    }

    #[test]
    fn weak_value_rejects_orthogonal_postselection() {
        let psi = build_singlet();
        let up_up = KetVector::basis(4, 0);
        assert!(matches!(
            weak_value(&LinearOperator::identity(4), &up_up, &psi),
            Err(SingletError::OrthogonalPostselection { .. })
        ));
    }

    #[test]
    fn representative_closed_forms() {
        let psi = build_singlet();
        for phi in [0.3, FRAC_PI_2, 2.5, 4.0, 5.9] {
            let csco = CscoChoice::new(phi).unwrap();
            let (s, co) = (phi.sin(), phi.cos());
            let rep = commutative_representative(&pauli_on(Photon::B, 1), &csco, &psi).unwrap();
            assert_coeffs(rep, [ZERO, -ONE, ZERO, ZERO]);
            let rep = commutative_representative(&pauli_on(Photon::B, 2), &csco, &psi).unwrap();
            assert_coeffs(rep, [ZERO, c(co / s, 0.0), c(1.0 / s, 0.0), ZERO]);
            let rep = commutative_representative(&pauli_on(Photon::B, 3), &csco, &psi).unwrap();
            assert_coeffs(rep, [c(0.0, -co / s), ZERO, ZERO, c(0.0, -1.0 / s)]);
        }
    }

    fn assert_coeffs(rep: CommutativeRep, expected: [Complex64; 4]) {
        for (x, e) in rep.coefficients().iter().zip(expected) {
            assert!(close(*x, e, 1e-12), "{rep:?} vs {expected:?}");
        }
    }

    #[test]
    fn representative_reconstructs_action() {
        let psi = build_singlet();
        let csco = CscoChoice::new(0.9).unwrap();
        let obs = &pauli_on(Photon::A, 3) * &pauli_on(Photon::B, 2);
        let rep = commutative_representative(&obs, &csco, &psi).unwrap();
        let lhs = apply(&obs, &psi).unwrap();
        let rhs = apply(&rep.operator(&csco), &psi).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn table_examples() {
        let psi = build_singlet();
        let csco = CscoChoice::new(FRAC_PI_2).unwrap();
        let t = pseudo_value_table(&csco.sigma_phi_b(), &csco, &psi).unwrap();
        for (v, e) in t.values().iter().zip([1.0, -1.0, 1.0, -1.0]) {
            assert!(close(*v, c(e, 0.0), 1e-12));
        }
        let pp = PathLabel::ALL[0];
        let t = pseudo_value_table(&pauli_on(Photon::A, 2), &csco, &psi).unwrap();
        assert!(close(t[pp], -ONE, 1e-12));
        let t = pseudo_value_table(&pauli_on(Photon::B, 3), &csco, &psi).unwrap();
        assert!(close(t[pp], -I, 1e-12));
    }

    #[test]
    fn sigma2_a_follows_anticorrelation_formula() {
        let psi = build_singlet();
        let phi = 2.2;
        let csco = CscoChoice::new(phi).unwrap();
        let t = pseudo_value_table(&pauli_on(Photon::A, 2), &csco, &psi).unwrap();
        for l in PathLabel::ALL {
            let expected = -(l.b.value() + phi.cos() * l.a.value()) / phi.sin();
            assert!(close(t[l], c(expected, 0.0), 1e-12));
        }
    }

    #[test]
    fn sigma3_anticorrelation_holds() {
        // σ₃⁽ᴬ⁾|Ψ⟩ = −σ₃⁽ᴮ⁾|Ψ⟩, so the σ₃ pseudo-values of the two photons are opposite.
        let psi = build_singlet();
        let a = apply(&pauli_on(Photon::A, 3), &psi).unwrap();
        let b = apply(&pauli_on(Photon::B, 3), &psi).unwrap();
        assert!((&a + &b).norm() < 1e-15);
        let csco = CscoChoice::new(1.1).unwrap();
        let ta = pseudo_value_table(&pauli_on(Photon::A, 3), &csco, &psi).unwrap();
        let tb = pseudo_value_table(&pauli_on(Photon::B, 3), &csco, &psi).unwrap();
        for l in PathLabel::ALL {
            assert!(close(ta[l], -tb[l], 1e-12));
        }
    }

    #[test]
    fn reconstruction_examples() {
        let psi = build_singlet();
        let phi = FRAC_PI_3;
        let csco = CscoChoice::new(phi).unwrap();
        let ens = path_probabilities(&csco);
        let id = pseudo_value_table(&LinearOperator::identity(4), &csco, &psi).unwrap();
        assert!(close(reconstruct_average(&id, &ens), ONE, 1e-12));
        let [_, _, _, ab] = csco.generators();
        let t = pseudo_value_table(&ab, &csco, &psi).unwrap();
        assert!(close(
            reconstruct_average(&t, &ens),
            c(-phi.cos(), 0.0),
            1e-12
        ));
        let t = pseudo_value_table(&pauli_on(Photon::B, 3), &csco, &psi).unwrap();
        assert!(close(reconstruct_average(&t, &ens), ZERO, 1e-12));

        let s1a = pseudo_value_table(&pauli_on(Photon::A, 1), &csco, &psi).unwrap();
        let s1b = pseudo_value_table(&pauli_on(Photon::B, 1), &csco, &psi).unwrap();
        assert!(close(reconstruct_correlation(&s1a, &s1a, &ens), ONE, 1e-12));
        assert!(close(
            reconstruct_correlation(&s1a, &s1b, &ens),
            -ONE,
            1e-12
        ));

        let csco = CscoChoice::new(FRAC_PI_2).unwrap();
        let ens = path_probabilities(&csco);
        let s1a = pseudo_value_table(&pauli_on(Photon::A, 1), &csco, &psi).unwrap();
        let s2b = pseudo_value_table(&pauli_on(Photon::B, 2), &csco, &psi).unwrap();
        assert!(close(
            reconstruct_correlation(&s1a, &s2b, &ens),
            ZERO,
            1e-12
        ));
    }

    #[test]
    fn heisenberg_examples() {
        let w = 1.7;
        let h = pauli_on(Photon::A, 3).scale_real(w / 2.0);
        let s1a = pauli_on(Photon::A, 1);
        assert!(heisenberg_evolve(&s1a, &h, 0.0).unwrap().max_abs_diff(&s1a) < 1e-14);
        let s3a = pauli_on(Photon::A, 3);
        assert!(heisenberg_evolve(&s3a, &h, 2.3).unwrap().max_abs_diff(&s3a) < 1e-14);
        let turned = heisenberg_evolve(&s1a, &h, FRAC_PI_2 / w).unwrap();
        assert!(turned.max_abs_diff(&-&pauli_on(Photon::A, 2)) < 1e-14);
        let bad = LinearOperator::identity(4).scale(I);
        assert!(heisenberg_evolve(&s1a, &bad, 1.0).is_err());
    }

    #[test]
    fn eom_residual_trivial_cases() {
        let psi = build_singlet();
        let csco = CscoChoice::new(1.0).unwrap();
        let h = pauli_on(Photon::A, 3).scale_real(0.8);
        let r = eom_residual(&pauli_on(Photon::A, 3), &h, &csco, &psi, 0.4, 0.1).unwrap();
        assert!(r <= 1e-10);
        let r = eom_residual(&LinearOperator::identity(4), &h, &csco, &psi, 0.4, 0.01).unwrap();
        assert!(r <= 1e-12);
        assert!(eom_residual(&h, &h, &csco, &psi, 0.0, 0.0).is_err());
    }

    #[test]
    fn covariance_examples() {
        let psi = build_singlet();
        let csco = CscoChoice::new(FRAC_PI_2).unwrap();
        let s1a = pauli_on(Photon::A, 1);
        let s2a = pauli_on(Photon::A, 2);
        let id = LinearOperator::identity(4);
        let table = |o: &LinearOperator| pseudo_value_table(o, &csco, &psi).unwrap();
        for l in PathLabel::ALL {
            let z = covariance(&table(&s1a), &table(&s1a), &table(&id), l);
            assert!(close(z, ZERO, 1e-12));
            let z = covariance(&table(&(&s1a * &s1a)), &table(&s1a), &table(&s1a), l);
            assert!(close(z, ZERO, 1e-12));
        }
        // Weak-value oracle for the (σ₁⁽ᴬ⁾, σ₂⁽ᴬ⁾) covariance on (+,+).
        let post = &csco_eigenbasis(&csco)[0];
        let prod = weak_value(&(&s1a * &s2a), post, &psi).unwrap();
        let w1 = weak_value(&s1a, post, &psi).unwrap();
        let w2 = weak_value(&s2a, post, &psi).unwrap();
        let pp = PathLabel::ALL[0];
        let z = covariance(&table(&(&s1a * &s2a)), &table(&s1a), &table(&s2a), pp);
        assert!(close(z, prod - w1.conj() * w2, 1e-12));
        assert!(close(w2, -ONE, 1e-12));
    }

    fn all_pauli_pairs() -> Vec<(LinearOperator, LinearOperator)> {
        let mut ops = Vec::new();
        for p in [Photon::A, Photon::B] {
            for k in 1..=3 {
                ops.push(pauli_on(p, k));
            }
        }
        let mut pairs = Vec::new();
        for a in &ops {
            for b in &ops {
                pairs.push((a.clone(), b.clone()));
            }
        }
        pairs
    }

    #[test]
    fn classicality_examples() {
        let psi = build_singlet();
        let csco = CscoChoice::new(FRAC_PI_2).unwrap();
        let pp = PathLabel::ALL[0];
        let only_identity = vec![(pauli_on(Photon::B, 2), LinearOperator::identity(4))];
        let r = classicality_check(&only_identity, &csco, &psi, pp, 1e-9, None).unwrap();
        assert!(r.classical);

        let pairs = all_pauli_pairs();
        let r = classicality_check(&pairs, &csco, &psi, pp, 1e-6, None).unwrap();
        assert!(!r.classical);
        assert!(r.max_abs_covariance > 0.5);
        let h = pauli_on(Photon::A, 3);
        let r = classicality_check(&pairs, &csco, &psi, pp, 10.0, Some(&h)).unwrap();
        assert!(r.classical && r.offenders.is_empty());
        assert_eq!(r.eom_gaps.as_ref().unwrap().len(), pairs.len());
        assert!(classicality_check(&pairs, &csco, &psi, pp, 0.0, None).is_err());
    }

    #[test]
    fn chsh_instance_from_vectors() {
        let s = FRAC_1_SQRT_2;
        let (lhs, rhs) = bell_inequality_sides([s, -s, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!((lhs - 2f64.sqrt()).abs() < 1e-12);
        assert!((rhs - 1.0).abs() < 1e-12);
    }
}

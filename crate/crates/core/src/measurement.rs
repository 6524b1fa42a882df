//! Measurement of photon A by a two-level device, and pointer models.
//!
//! The composite space is `device ⊗ A ⊗ B` (dimension 8, device most
//! significant). The device starts in `|↓⟩` and at `t = 0` the interaction
//!
//! ```text
//! U(t ≥ 0) = −σ₁⁽*⁾⊗P₊⁽ᴬ⁾ − σ₃⁽*⁾⊗P₋⁽ᴬ⁾,   P± = (1 ± σ₁⁽ᴬ⁾)/2
//! ```
//!
//! flips the device iff photon A is in `|x+⟩`. Adding a device observable
//! `σ_ρ⁽*⁾` to the CSCO gives eight paths. Reading the device after `t = 0`
//! and discarding the inconsistent paths leaves two paths for photon B whose
//! probabilities and values are those of the single-photon state `|x∓⟩⁽ᴮ⁾`.
//!
//! The second part implements the two pointer models: a projective measurement
//! with Born sampling and a weakly coupled Gaussian pointer whose
//! post-selected mean position moves by `η·Re 𝒪_w`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::hilbert::{
    self, apply, inner, pauli, HermitianEigen, HilbertError, KetVector, LinearOperator,
    TensorFactorization,
};
use crate::singlet::{self, CscoChoice, PathLabel, Sign, SingletError, OVERLAP_EPS};

/// Eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Points on the pointer grid.
pub const POINTER_GRID: usize = 4096;
/// Half-width of the pointer grid in units of `Δq`.
pub const POINTER_EXTENT: f64 = 10.0;
/// Trials drawn from one RNG stream.
pub const TRIAL_CHUNK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasurementError {
    #[error("path {index} has zero probability (|⟨post|Ψ⟩| = {overlap:e})")]
    ZeroProbabilityPath { index: usize, overlap: f64 },
    #[error("outcome {outcome} has zero probability")]
    ImpossibleOutcome { outcome: Sign },
    #[error("coupling η = {eta} must satisfy 0 ≤ η ≤ Δq/100 (Δq = {delta_q})")]
    StrongCoupling { eta: f64, delta_q: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Singlet(#[from] SingletError),
}

pub type Result<T> = std::result::Result<T, MeasurementError>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Subsystem of the composite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Device,
    A,
    B,
}

impl Slot {
    fn index(self) -> usize {
        match self {
            Slot::Device => 0,
            Slot::A => 1,
            Slot::B => 2,
        }
    }
}

fn factorization() -> TensorFactorization {
    TensorFactorization::new(vec![2, 2, 2]).expect("valid factors")
}

/// Lifts a 2×2 operator on `slot` to the composite space.
pub fn embed(slot: Slot, op: &LinearOperator) -> LinearOperator {
    factorization()
        .embed(op, slot.index())
        .expect("2×2 operator on a qubit slot")
}

/// `σₖ` (identity for `k = 0`) on `slot`.
pub fn pauli_at(slot: Slot, k: usize) -> LinearOperator {
    embed(slot, &pauli::sigma(k))
}

/// Normalized device ⊗ pair state.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeState {
    ket: KetVector,
}

impl CompositeState {
    pub fn ket(&self) -> &KetVector {
        &self.ket
    }

    pub fn factorization(&self) -> TensorFactorization {
        factorization()
    }
}

/// `|↓⟩⁽*⁾ ⊗ |Ψ⟩`.
pub fn build_composite() -> CompositeState {
    use hilbert::Tensor;
    CompositeState {
        ket: pauli::down().tensor(&singlet::build_singlet()),
    }
}

/// The device-photon interaction at time `t`.
#[derive(Debug, Clone)]
pub struct MeasurementUnitary {
    pub t: f64,
    pub matrix: LinearOperator,
}

/// Identity before `t = 0`, `−σ₁⁽*⁾⊗P₊⁽ᴬ⁾ − σ₃⁽*⁾⊗P₋⁽ᴬ⁾` from then on.
pub fn measurement_unitary(t: f64) -> MeasurementUnitary {
    let matrix = if t < 0.0 {
        LinearOperator::identity(8)
    } else {
        let id = pauli_at(Slot::A, 0);
        let s1a = pauli_at(Slot::A, 1);
        let p_plus = (&id + &s1a).scale_real(0.5);
        let p_minus = (&id - &s1a).scale_real(0.5);
        -&(&(&pauli_at(Slot::Device, 1) * &p_plus) + &(&pauli_at(Slot::Device, 3) * &p_minus))
    };
    MeasurementUnitary { t, matrix }
}

/// `U(t)†·𝒪·U(t)`.
pub fn evolve(obs: &LinearOperator, t: f64) -> LinearOperator {
    let u = measurement_unitary(t).matrix;
    &(&u.adjoint() * obs) * &u
}

/// One row of [`heisenberg_table`].
#[derive(Debug, Clone)]
pub struct HeisenbergEntry {
    pub name: &'static str,
    pub initial: LinearOperator,
    pub evolved: LinearOperator,
    pub closed_form: LinearOperator,
}

impl HeisenbergEntry {
    pub fn deviation(&self) -> f64 {
        self.evolved.max_abs_diff(&self.closed_form)
    }
}

/// Heisenberg-picture Pauli operators of all three qubits at time `t`,
/// alongside their closed forms.
pub fn heisenberg_table(t: f64) -> Vec<HeisenbergEntry> {
    let p = pauli_at;
    let after = t >= 0.0;
    let closed = |name: &str| -> LinearOperator {
        match name {
            "sigma2_A" => &p(Slot::Device, 2) * &p(Slot::A, 3),
            "sigma3_A" => -&(&p(Slot::Device, 2) * &p(Slot::A, 2)),
            "sigma1_dev" => &p(Slot::Device, 1) * &p(Slot::A, 1),
            "sigma2_dev" => -&p(Slot::Device, 2),
            "sigma3_dev" => -&(&p(Slot::Device, 3) * &p(Slot::A, 1)),
            _ => unreachable!(),
        }
    };
    let rows: [(&'static str, Slot, usize, bool); 9] = [
        ("sigma1_A", Slot::A, 1, false),
        ("sigma2_A", Slot::A, 2, true),
        ("sigma3_A", Slot::A, 3, true),
        ("sigma1_B", Slot::B, 1, false),
        ("sigma2_B", Slot::B, 2, false),
        ("sigma3_B", Slot::B, 3, false),
        ("sigma1_dev", Slot::Device, 1, true),
        ("sigma2_dev", Slot::Device, 2, true),
        ("sigma3_dev", Slot::Device, 3, true),
    ];
    rows.iter()
        .map(|&(name, slot, k, changes)| {
            let initial = p(slot, k);
            let closed_form = if after && changes {
                closed(name)
            } else {
                initial.clone()
            };
            HeisenbergEntry {
                name,
                evolved: evolve(&initial, t),
                initial,
                closed_form,
            }
        })
        .collect()
}

/// Eigenbasis used for the device in the eight-path CSCO.
#[derive(Debug, Clone)]
pub enum DeviceBasis {
    /// Eigenstates `(|↑⟩ ± e^{iρ}|↓⟩)/√2` of `cos ρ·σ₁ + sin ρ·σ₂`.
    InPlane(f64),
    /// Any orthonormal pair, ordered `(+, −)`.
    Custom([KetVector; 2]),
}

impl Default for DeviceBasis {
    fn default() -> Self {
        DeviceBasis::InPlane(0.0)
    }
}

impl DeviceBasis {
    pub fn states(&self) -> [KetVector; 2] {
        match self {
            DeviceBasis::InPlane(rho) => [
                pauli::in_plane_state(*rho, 1.0),
                pauli::in_plane_state(*rho, -1.0),
            ],
            DeviceBasis::Custom(s) => s.clone(),
        }
    }
}

/// Label `(s*, s_A, s_B)` of one of the eight paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EightLabel {
    pub device: Sign,
    pub pair: PathLabel,
}

impl EightLabel {
    pub fn all() -> [EightLabel; 8] {
        let mut out = [EightLabel {
            device: Sign::Plus,
            pair: PathLabel::ALL[0],
        }; 8];
        for (k, d) in Sign::BOTH.iter().enumerate() {
            for (j, pair) in PathLabel::ALL.iter().enumerate() {
                out[4 * k + j] = EightLabel {
                    device: *d,
                    pair: *pair,
                };
            }
        }
        out
    }
}

impl std::fmt::Display for EightLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.device, self.pair.a, self.pair.b)
    }
}

/// Eight paths of the device-plus-pair system, with weights possibly
/// conditioned on a device reading.
#[derive(Debug, Clone)]
pub struct EightPathEnsemble {
    phi: CscoChoice,
    labels: [EightLabel; 8],
    postselect: Vec<KetVector>,
    probabilities: [f64; 8],
    pre: KetVector,
    outcome: Option<Sign>,
}

impl EightPathEnsemble {
    pub fn labels(&self) -> &[EightLabel; 8] {
        &self.labels
    }

    pub fn probabilities(&self) -> &[f64; 8] {
        &self.probabilities
    }

    pub fn csco(&self) -> &CscoChoice {
        &self.phi
    }

    pub fn postselect_states(&self) -> &[KetVector] {
        &self.postselect
    }

    /// Device reading the ensemble was conditioned on, if any.
    pub fn outcome(&self) -> Option<Sign> {
        self.outcome
    }

    /// Weak values of a composite-space operator on the eight paths.
    pub fn values(&self, obs: &LinearOperator) -> Result<[Complex64; 8]> {
        let mut out = [ZERO; 8];
        for (v, post) in out.iter_mut().zip(&self.postselect) {
            *v = singlet::weak_value(obs, post, &self.pre)?;
        }
        Ok(out)
    }

    /// Weak values of `obs` in the Heisenberg picture at time `t`.
    pub fn values_at(&self, obs: &LinearOperator, t: f64) -> Result<[Complex64; 8]> {
        self.values(&evolve(obs, t))
    }
}

/// Eight-path ensemble for the CSCO `{σ_ρ⁽*⁾, σ₁⁽ᴬ⁾, σ_φ⁽ᴮ⁾}` and the initial composite state.
pub fn eight_paths(device: &DeviceBasis, phi: &CscoChoice) -> Result<EightPathEnsemble> {
    use hilbert::Tensor;
    let dev = device.states();
    for (i, u) in dev.iter().enumerate() {
        for (j, v) in dev.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            let deviation = (inner(u, v)? - target).norm();
            if u.dim() != 2 || deviation > 1e-10 {
                return Err(SingletError::NotOrthonormal { deviation }.into());
            }
        }
    }
    let pair = singlet::csco_eigenbasis(phi);
    let pre = build_composite().ket;
    let labels = EightLabel::all();
    let postselect: Vec<KetVector> = labels
        .iter()
        .map(|l| {
            let d = &dev[(l.device == Sign::Minus) as usize];
            d.tensor(&pair[l.pair.index()])
        })
        .collect();
    let mut probabilities = [0.0; 8];
    for (index, (p, post)) in probabilities.iter_mut().zip(&postselect).enumerate() {
        let overlap = inner(post, &pre)?;
        if overlap.norm() <= OVERLAP_EPS {
            return Err(MeasurementError::ZeroProbabilityPath {
                index,
                overlap: overlap.norm(),
            });
        }
        *p = overlap.norm_sqr();
    }
    Ok(EightPathEnsemble {
        phi: *phi,
        labels,
        postselect,
        probabilities,
        pre,
        outcome: None,
    })
}

/// Conditions the ensemble on the device reading `outcome` after `t = 0`,
/// i.e. on `(σ₃⁽*⁾(t ≥ 0))_cl = outcome`.
pub fn bayes_update(ens: &EightPathEnsemble, outcome: Sign) -> Result<EightPathEnsemble> {
    let reading = ens.values_at(&pauli_at(Slot::Device, 3), 0.0)?;
    let mut probabilities = ens.probabilities;
    for (p, v) in probabilities.iter_mut().zip(reading) {
        if (v - outcome.value()).norm() > 1e-9 {
            *p = 0.0;
        }
    }
    let total: f64 = probabilities.iter().sum();
    if total <= 0.0 {
        return Err(MeasurementError::ImpossibleOutcome { outcome });
    }
    probabilities.iter_mut().for_each(|p| *p /= total);
    Ok(EightPathEnsemble {
        probabilities,
        outcome: Some(outcome),
        ..ens.clone()
    })
}

/// Two coarse paths of photon B (labelled by `s_B`) left after a device reading.
#[derive(Debug, Clone)]
pub struct PhotonBEnsemble {
    source: EightPathEnsemble,
    outcome: Sign,
    probabilities: [f64; 2],
}

impl PhotonBEnsemble {
    pub fn outcome(&self) -> Sign {
        self.outcome
    }

    pub fn phi(&self) -> f64 {
        self.source.phi.phi()
    }

    /// `p_B(+)`, `p_B(−)`.
    pub fn probabilities(&self) -> [f64; 2] {
        self.probabilities
    }

    /// Values of a photon-B operator on the two coarse paths: the
    /// probability-weighted mean over the merged fine paths.
    pub fn values(&self, obs_b: &LinearOperator) -> Result<[Complex64; 2]> {
        let fine = self.source.values(&embed(Slot::B, obs_b))?;
        let mut out = [ZERO; 2];
        for (k, sb) in Sign::BOTH.iter().enumerate() {
            let mut weight = 0.0;
            let mut acc = ZERO;
            for ((l, &p), v) in self
                .source
                .labels
                .iter()
                .zip(&self.source.probabilities)
                .zip(fine)
            {
                if l.pair.b == *sb && p > 0.0 {
                    weight += p;
                    acc += v * p;
                }
            }
            out[k] = if weight > 0.0 { acc / weight } else { ZERO };
        }
        Ok(out)
    }
}

/// Sums a Bayes-updated ensemble over the device and photon A.
pub fn marginalize_device(ens: &EightPathEnsemble) -> Result<PhotonBEnsemble> {
    let outcome = ens.outcome.ok_or_else(|| {
        MeasurementError::InvalidArgument(
            "ensemble has not been conditioned on a device reading".into(),
        )
    })?;
    let mut probabilities = [0.0; 2];
    for (l, p) in ens.labels.iter().zip(&ens.probabilities) {
        probabilities[(l.pair.b == Sign::Minus) as usize] += p;
    }
    Ok(PhotonBEnsemble {
        source: ens.clone(),
        outcome,
        probabilities,
    })
}

/// The photon-B state the coarse paths should describe: `|x−⟩` after
/// reading `+1`, `|x+⟩` after `−1`.
pub fn collapsed_state(outcome: Sign) -> KetVector {
    pauli::x_state(-outcome.value())
}

/// Largest difference between the marginal ensemble and the path
/// representation of [`collapsed_state`] over the CSCO `{σ_φ⁽ᴮ⁾}`, across both
/// probabilities and the values of `1, σ₁, σ₂, σ₃`.
pub fn verify_collapse(marg: &PhotonBEnsemble) -> Result<f64> {
    let phi = marg.phi();
    let x = collapsed_state(marg.outcome);
    let sigma_phi = pauli::in_plane(phi);
    let columns = [x.clone(), apply(&sigma_phi, &x)?];
    let basis = [
        pauli::in_plane_state(phi, 1.0),
        pauli::in_plane_state(phi, -1.0),
    ];
    let mut residual: f64 = 0.0;
    let probs = marg.probabilities();
    for (b, p) in basis.iter().zip(probs) {
        residual = residual.max((inner(b, &x)?.norm_sqr() - p).abs());
    }
    for k in 0..=3 {
        let obs = pauli::sigma(k);
        let c = hilbert::solve_linear(&columns, &apply(&obs, &x)?)?;
        let got = marg.values(&obs)?;
        for (sb, v) in [1.0, -1.0].iter().zip(got) {
            residual = residual.max((c[0] + c[1] * sb - v).norm());
        }
    }
    Ok(residual)
}

/// One projective measurement.
#[derive(Debug, Clone)]
pub struct StrongOutcome {
    pub eigenvalue: f64,
    pub probability: f64,
    /// Pointer position `η·λ`.
    pub pointer: f64,
    pub post_state: KetVector,
}

/// Spectral data of an observable on a fixed state.
#[derive(Debug, Clone)]
struct Born {
    eigenvalues: Vec<f64>,
    projectors: Vec<LinearOperator>,
    probabilities: Vec<f64>,
}

impl Born {
    fn new(psi: &KetVector, obs: &LinearOperator) -> Result<Self> {
        let spaces = HermitianEigen::new(obs)?.eigenspaces(DEGENERACY_TOL);
        let mut born = Born {
            eigenvalues: Vec::new(),
            projectors: Vec::new(),
            probabilities: Vec::new(),
        };
        let norm = psi.norm_sqr();
        for (lambda, proj) in spaces {
            born.probabilities
                .push(proj.expectation(psi)?.re.max(0.0) / norm);
            born.eigenvalues.push(lambda);
            born.projectors.push(proj);
        }
        Ok(born)
    }

    fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // u landed in the rounding gap below 1; take the last possible outcome.
        self.probabilities
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.probabilities.len() - 1)
    }
}

/// Samples one outcome of a projective measurement of `obs` with pointer
/// coupling `eta`, returning the renormalized projected state.
pub fn strong_pointer_measure(
    psi: &KetVector,
    obs: &LinearOperator,
    eta: f64,
    seed: u64,
) -> Result<StrongOutcome> {
    let born = Born::new(psi, obs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i = born.pick(rng.random());
    let projected = apply(&born.projectors[i], psi)?;
    Ok(StrongOutcome {
        eigenvalue: born.eigenvalues[i],
        probability: born.probabilities[i],
        pointer: eta * born.eigenvalues[i],
        post_state: projected.normalized()?,
    })
}

/// Outcome counts from repeated projective measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongTrials {
    pub seed: u64,
    pub trials: usize,
    pub eigenvalues: Vec<f64>,
    pub born_probabilities: Vec<f64>,
    pub counts: Vec<usize>,
}

impl StrongTrials {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.trials as f64)
            .collect()
    }

    /// Largest `|frequency − p|/σ` with `σ = √(p(1−p)/N)`.
    pub fn max_z_score(&self) -> f64 {
        self.frequencies()
            .iter()
            .zip(&self.born_probabilities)
            .map(|(f, &p)| {
                let sigma = (p * (1.0 - p) / self.trials as f64).sqrt();
                let d = (f - p).abs();
                if sigma == 0.0 {
                    if d == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    d / sigma
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `trials` independent projective measurements; chunk `k` of
/// [`TRIAL_CHUNK`] trials uses stream `k` of a generator seeded with `seed`.
pub fn strong_pointer_trials(
    psi: &KetVector,
    obs: &LinearOperator,
    trials: usize,
    seed: u64,
) -> Result<StrongTrials> {
    if trials == 0 {
        return Err(MeasurementError::InvalidArgument(
            "trials must be positive".into(),
        ));
    }
    let born = Born::new(psi, obs)?;
    let k = born.eigenvalues.len();
    let n_chunks = trials.div_ceil(TRIAL_CHUNK);
    let partials: Vec<Vec<usize>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = TRIAL_CHUNK.min(trials - c * TRIAL_CHUNK);
            let mut counts = vec![0usize; k];
            for _ in 0..len {
                counts[born.pick(rng.random())] += 1;
            }
            counts
        })
        .collect();
    let mut counts = vec![0usize; k];
    for part in partials {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    Ok(StrongTrials {
        seed,
        trials,
        eigenvalues: born.eigenvalues,
        born_probabilities: born.probabilities,
        counts,
    })
}

/// Gaussian pointer `∝ exp(−q²/(4Δq²))` sampled on `[−L, L]`, `L = 10Δq`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerState {
    delta_q: f64,
    eta: f64,
    grid: Vec<f64>,
    amplitudes: Vec<f64>,
    norm: f64,
}

impl PointerState {
    pub fn gaussian(delta_q: f64, eta: f64) -> Result<Self> {
        if !(delta_q > 0.0 && delta_q.is_finite()) {
            return Err(MeasurementError::InvalidArgument(format!(
                "Δq = {delta_q} must be positive"
            )));
        }
        if !(0.0..=delta_q / 100.0).contains(&eta) {
            return Err(MeasurementError::StrongCoupling { eta, delta_q });
        }
        let l = POINTER_EXTENT * delta_q;
        let h = 2.0 * l / (POINTER_GRID - 1) as f64;
        let grid: Vec<f64> = (0..POINTER_GRID).map(|k| -l + k as f64 * h).collect();
        let raw: Vec<f64> = grid.iter().map(|&q| gauss(q, delta_q)).collect();
        let norm = (raw.iter().map(|a| a * a).sum::<f64>() * h).sqrt();
        Ok(Self {
            delta_q,
            eta,
            amplitudes: raw.iter().map(|a| a / norm).collect(),
            grid,
            norm,
        })
    }

    pub fn delta_q(&self) -> f64 {
        self.delta_q
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Normalized initial pointer amplitude at `q`.
    fn psi0(&self, q: f64) -> f64 {
        gauss(q, self.delta_q) / self.norm
    }

    fn dpsi0(&self, q: f64) -> f64 {
        -q / (2.0 * self.delta_q * self.delta_q) * self.psi0(q)
    }
}

fn gauss(q: f64, delta_q: f64) -> f64 {
    (-q * q / (4.0 * delta_q * delta_q)).exp()
}

/// Post-selected pointer moments from a weak measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakShift {
    pub mean_q: f64,
    pub mean_p: f64,
    pub weak_value: Complex64,
    /// Probability of the post-selection with the pointer coupled; differs
    /// from `|⟨post|ψ⟩|²` at order `η²/Δq²`.
    pub post_probability: f64,
}

/// Couples `obs` to the pointer through `e^{−iη𝒪⊗P}`, post-selects the
/// system on `postselect` and returns the pointer's mean position and momentum.
pub fn weak_pointer_shift(
    psi: &KetVector,
    obs: &LinearOperator,
    postselect: &KetVector,
    pointer: &PointerState,
) -> Result<WeakShift> {
    let weak_value = singlet::weak_value(obs, postselect, psi)?;
    let spaces = HermitianEigen::new(obs)?.eigenspaces(DEGENERACY_TOL);
    // Each eigenbranch translates the pointer by η·λ.
    let mut branches = Vec::with_capacity(spaces.len());
    for (lambda, proj) in &spaces {
        branches.push((pointer.eta * lambda, proj.matrix_element(postselect, psi)?));
    }
    let h = pointer.spacing();
    let mut weight = 0.0;
    let mut q_moment = 0.0;
    let mut p_moment = 0.0;
    for &q in &pointer.grid {
        let mut phi = ZERO;
        let mut dphi = ZERO;
        for &(shift, c) in &branches {
            phi += c * pointer.psi0(q - shift);
            dphi += c * pointer.dpsi0(q - shift);
        }
        let density = phi.norm_sqr();
        weight += density;
        q_moment += density * q;
        // Re φ*·(−i)φ'
        p_moment += (phi.conj() * Complex64::new(0.0, -1.0) * dphi).re;
    }
    Ok(WeakShift {
        mean_q: q_moment / weight,
        mean_p: p_moment / weight,
        weak_value,
        post_probability: weight * h,
    })
}

//! A local hidden-variable model on the unit circle.
//!
//! Each pair carries an angle `ω ∈ [−π, π)` drawn from the density
//! `g(ω) = |sin ω|/4`, measured from photon A's reference direction. Photon B's
//! observer, whose direction is rotated by `Δ`, uses the coordinate
//! `ω' = T_Δ(ω)` given by [`frame_transform`]; `T_Δ` preserves `g`.
//!
//! A strong measurement on either photon reads the sign of its own coordinate.
//! The two signs split the circle into four cells whose weights equal the
//! singlet path probabilities at `φ = Δ`, and the `g`-weighted averages of the
//! hidden polarizations over a cell equal the weak values on that path.
//!
//! Photon B's values are evaluated at `ω'`. Because B travels along `−Z`, its
//! right-handed frame is `(e₁', e₂', e₃') = (n_Δ, n_{Δ−π/2}, −Z)`, so its hidden
//! `s₁, s₂, s₃` correspond to `σ_Δ⁽ᴮ⁾, σ_{Δ−π/2}⁽ᴮ⁾, −σ₃⁽ᴮ⁾`.
//!
//! Pointwise products of A and B values reproduce weak values of product
//! observables only when one factor is constant on each cell (`s₁` of either
//! photon). Products such as `s₂⁽ᴬ⁾·s₂⁽ᴮ⁾` do not.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::hilbert::LinearOperator;
use crate::singlet::{self, PathLabel, Photon, Sign, SingletError};

/// Samples closer than this to `0` or `±π` are redrawn.
pub const SINGULAR_EPS: f64 = 1e-12;
/// acos arguments this close to `±1` are treated as `±1`.
pub const ACOS_EPS: f64 = 1e-12;
/// Samples generated from one RNG stream.
pub const CHUNK: usize = 65_536;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HiddenError {
    #[error("frame shift {delta} outside [0, π]")]
    InvalidShift { delta: f64 },
    #[error("frame shift Δ = π is only supported by the frame transformation")]
    LimitingShift,
    #[error("cell {cell} has zero weight at Δ = {delta}")]
    EmptyCell { cell: PathLabel, delta: f64 },
    #[error("hidden polarization is singular at ω = {omega}")]
    SingularAngle { omega: f64 },
    #[error("no samples fell in cell {cell}")]
    InsufficientSamples { cell: PathLabel },
    #[error("shifts must satisfy Δ' ≥ Δ'' ≥ 0 (got Δ' = {first}, Δ'' = {second})")]
    BellOrdering { first: f64, second: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Singlet(#[from] SingletError),
}

pub type Result<T> = std::result::Result<T, HiddenError>;

/// Wraps an angle into `[−π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let w = (x + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU.
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Hidden coordinate, canonicalized into `[−π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HiddenAngle(f64);

impl HiddenAngle {
    pub fn new(omega: f64) -> Self {
        Self(wrap_angle(omega))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for HiddenAngle {
    fn from(omega: f64) -> Self {
        Self::new(omega)
    }
}

/// Rotation `Δ ∈ [0, π]` between the two observers' reference directions.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FrameShift(f64);

impl FrameShift {
    pub fn new(delta: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&delta) {
            return Err(HiddenError::InvalidShift { delta });
        }
        Ok(Self(delta))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_limiting(self) -> bool {
        self.0 == PI
    }

    fn require_regular(self) -> Result<()> {
        if self.is_limiting() {
            Err(HiddenError::LimitingShift)
        } else {
            Ok(())
        }
    }
}

/// `|sin ω|/4`.
pub fn density(omega: HiddenAngle) -> f64 {
    omega.0.sin().abs() / 4.0
}

/// `∫_{−π}^{ω} g`.
pub fn cumulative(omega: HiddenAngle) -> f64 {
    0.5 + antiderivative(omega.0)
}

// ∫₀^ω g, odd in ω.
fn antiderivative(omega: f64) -> f64 {
    omega.signum() * (1.0 - omega.cos()) / 4.0
}

fn sign_of(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Coordinate of the same hidden state in the frame rotated by `shift`.
pub fn frame_transform(omega: HiddenAngle, shift: FrameShift) -> HiddenAngle {
    let (w, d) = (omega.0, shift.0);
    let (cd, cw) = (d.cos(), w.cos());
    let s = -sign_of(wrap_angle(w - d));
    let arg = if w < d - PI {
        -cd - cw - 1.0
    } else if w < 0.0 {
        cd + cw - 1.0
    } else if w < d {
        cd - cw + 1.0
    } else {
        -cd + cw + 1.0
    };
    HiddenAngle::new(s * snap_unit(arg).acos())
}

// Clamps into [−1, 1], snapping arguments within rounding of ±1 onto them.
fn snap_unit(x: f64) -> f64 {
    if x >= 1.0 - ACOS_EPS {
        1.0
    } else if x <= -1.0 + ACOS_EPS {
        -1.0
    } else {
        x
    }
}

/// Sign read by a strong measurement on `photon`.
pub fn strong_outcome(omega: HiddenAngle, shift: FrameShift, photon: Photon) -> Sign {
    let w = omega.0;
    match photon {
        Photon::A => Sign::of(w),
        Photon::B => {
            let d = shift.0;
            if (d - PI..d).contains(&w) {
                Sign::Plus
            } else {
                Sign::Minus
            }
        }
    }
}

/// Set of hidden states giving the outcome pair `label` at frame shift `shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseCell {
    pub label: PathLabel,
    pub shift: FrameShift,
}

impl CoarseCell {
    pub fn new(label: PathLabel, shift: FrameShift) -> Self {
        Self { label, shift }
    }

    pub fn all(shift: FrameShift) -> [CoarseCell; 4] {
        PathLabel::ALL.map(|l| CoarseCell::new(l, shift))
    }

    /// The half-open interval `[lo, hi)` covered by the cell.
    pub fn interval(&self) -> (f64, f64) {
        let d = self.shift.0;
        match (self.label.a, self.label.b) {
            (Sign::Plus, Sign::Plus) => (0.0, d),
            (Sign::Plus, Sign::Minus) => (d, PI),
            (Sign::Minus, Sign::Plus) => (d - PI, 0.0),
            (Sign::Minus, Sign::Minus) => (-PI, d - PI),
        }
    }

    pub fn contains(&self, omega: HiddenAngle) -> bool {
        let (lo, hi) = self.interval();
        (lo..hi).contains(&omega.0)
    }

    /// Cell of the A-partition that this cell maps onto in photon B's coordinate.
    pub fn image(&self) -> CoarseCell {
        CoarseCell::new(PathLabel::new(self.label.b, self.label.a), self.shift)
    }
}

/// Cell containing `omega`.
pub fn cell_of(omega: HiddenAngle, shift: FrameShift) -> CoarseCell {
    CoarseCell::new(
        PathLabel::new(
            strong_outcome(omega, shift, Photon::A),
            strong_outcome(omega, shift, Photon::B),
        ),
        shift,
    )
}

/// `∫_cell g`.
pub fn cell_probability(cell: &CoarseCell) -> Result<f64> {
    cell.shift.require_regular()?;
    let (lo, hi) = cell.interval();
    Ok(integral_of_density(lo, hi))
}

fn integral_of_density(lo: f64, hi: f64) -> f64 {
    antiderivative(hi) - antiderivative(lo)
}

/// Monte Carlo estimate of a real quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub count: usize,
}

impl Estimate {
    /// `|value − target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if self.std_err == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.std_err
        }
    }
}

/// Monte Carlo estimate of a complex quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub std_err_re: f64,
    pub std_err_im: f64,
    pub count: usize,
}

/// Draws `ω` from `g` with a fixed seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    seed: u64,
    omegas: Vec<f64>,
}

impl SampleBatch {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// The same states expressed in photon B's coordinate.
    pub fn transformed(&self, shift: FrameShift) -> Vec<f64> {
        self.omegas
            .par_iter()
            .map(|&w| frame_transform(HiddenAngle(w), shift).0)
            .collect()
    }
}

fn draw_one(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let positive = rng.random::<bool>();
        let u: f64 = rng.random();
        let w = if positive {
            (1.0 - 2.0 * u).acos()
        } else {
            -(2.0 * u - 1.0).acos()
        };
        let near_pole = w.abs() < SINGULAR_EPS || PI - w.abs() < SINGULAR_EPS;
        if !near_pole && w < PI {
            return w;
        }
    }
}

/// `count` independent draws from `g`. Chunk `k` of [`CHUNK`] draws uses
/// stream `k` of a ChaCha8 generator seeded with `seed`, so the batch does not
/// depend on the number of threads.
pub fn sample(count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(HiddenError::InvalidArgument(
            "sample count must be positive".into(),
        ));
    }
    let mut omegas = vec![0.0; count];
    omegas
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(k, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            for w in chunk {
                *w = draw_one(&mut rng);
            }
        });
    Ok(SampleBatch { seed, omegas })
}

// Chunk-wise partial sums reduced in a fixed order.
fn chunked_sum<T, F>(omegas: &[f64], f: F) -> T
where
    T: Send + Default + std::ops::Add<Output = T> + Copy,
    F: Fn(f64) -> T + Sync,
{
    let partials: Vec<T> = omegas
        .par_chunks(CHUNK)
        .map(|c| c.iter().fold(T::default(), |acc, &w| acc + f(w)))
        .collect();
    partials.into_iter().fold(T::default(), |a, b| a + b)
}

/// Fraction of `batch` falling in `cell`.
pub fn cell_probability_mc(cell: &CoarseCell, batch: &SampleBatch) -> Estimate {
    let hits: usize = chunked_sum(&batch.omegas, |w| cell.contains(HiddenAngle(w)) as usize);
    let n = batch.count();
    let p = hits as f64 / n as f64;
    Estimate {
        value: p,
        std_err: (p * (1.0 - p) / n as f64).sqrt(),
        count: n,
    }
}

/// Result of a χ² goodness-of-fit test against `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// χ² test of `omegas` against `g` with `bins` equal-probability bins.
pub fn chi_square(omegas: &[f64], bins: usize) -> Result<ChiSquare> {
    if bins < 2 || omegas.is_empty() {
        return Err(HiddenError::InvalidArgument(
            "need at least two bins and one sample".into(),
        ));
    }
    let mut counts = vec![0usize; bins];
    for &w in omegas {
        let u = cumulative(HiddenAngle::new(w));
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = omegas.len() as f64 / bins as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).expect("dof > 0");
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// Hidden polarization component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    S1,
    S2,
    S3,
    /// In-plane direction at angle `χ` from the observer's reference direction.
    Chi(f64),
}

impl Component {
    /// `(a₁, a₂, a₃)` with `s = a₁s₁ + a₂s₂ + a₃s₃`.
    fn weights(self) -> [f64; 3] {
        match self {
            Component::S1 => [1.0, 0.0, 0.0],
            Component::S2 => [0.0, 1.0, 0.0],
            Component::S3 => [0.0, 0.0, 1.0],
            Component::Chi(chi) => [chi.cos(), chi.sin(), 0.0],
        }
    }
}

/// Value of `component` at `omega`, in the frame where `omega` is measured.
pub fn hidden_polarization(omega: HiddenAngle, component: Component) -> Result<Complex64> {
    let w = omega.0;
    let [a1, a2, a3] = component.weights();
    let s1 = sign_of(w);
    if a2 == 0.0 && a3 == 0.0 {
        return Ok(Complex64::new(a1 * s1, 0.0));
    }
    if w.sin().abs() <= SINGULAR_EPS {
        return Err(HiddenError::SingularAngle { omega: w });
    }
    let cot = w.cos() / w.sin();
    let s2 = -s1 * cot;
    let s3 = Complex64::new(0.0, cot);
    Ok(a1 * s1 + a2 * s2 + a3 * s3)
}

/// Value of `component` for `photon`, taking B's value in its own frame.
pub fn photon_polarization(
    photon: Photon,
    omega: HiddenAngle,
    shift: FrameShift,
    component: Component,
) -> Result<Complex64> {
    match photon {
        Photon::A => hidden_polarization(omega, component),
        Photon::B => hidden_polarization(frame_transform(omega, shift), component),
    }
}

/// Two-photon observable whose weak values the coarse averages reproduce.
pub fn quantum_observable(
    photon: Photon,
    component: Component,
    shift: FrameShift,
) -> LinearOperator {
    let d = shift.0;
    match (photon, component) {
        (Photon::A, Component::S1) => singlet::pauli_on(Photon::A, 1),
        (Photon::A, Component::S2) => singlet::pauli_on(Photon::A, 2),
        (Photon::A, Component::S3) => singlet::pauli_on(Photon::A, 3),
        (Photon::A, Component::Chi(chi)) => singlet::polarization(Photon::A, chi),
        (Photon::B, Component::S1) => singlet::polarization(Photon::B, d),
        (Photon::B, Component::S2) => singlet::polarization(Photon::B, d - FRAC_PI_2),
        (Photon::B, Component::S3) => -&singlet::pauli_on(Photon::B, 3),
        (Photon::B, Component::Chi(chi)) => singlet::polarization(Photon::B, d - chi),
    }
}

/// `∫_cell g·s / ∫_cell g` in closed form.
pub fn coarse_average(
    photon: Photon,
    component: Component,
    cell: &CoarseCell,
) -> Result<Complex64> {
    cell.shift.require_regular()?;
    // B's coordinate maps the cell onto an A-partition cell with g preserved.
    let target = match photon {
        Photon::A => *cell,
        Photon::B => cell.image(),
    };
    let (lo, hi) = target.interval();
    let weight = integral_of_density(lo, hi);
    if weight <= 0.0 {
        return Err(HiddenError::EmptyCell {
            cell: cell.label,
            delta: cell.shift.0,
        });
    }
    // g·s₁ = sin/4, g·s₂ = −cos/4, g·s₃ = i·sign·cos/4; cells never straddle 0.
    let half = target.label.a.value();
    let i1 = (lo.cos() - hi.cos()) / 4.0;
    let i2 = -(hi.sin() - lo.sin()) / 4.0;
    let i3 = Complex64::new(0.0, half * (hi.sin() - lo.sin()) / 4.0);
    let [a1, a2, a3] = component.weights();
    Ok((a1 * i1 + a2 * i2 + a3 * i3) / weight)
}

/// Sample mean of `component` over the draws of `batch` falling in `cell`.
///
/// `s₂` and `s₃` have infinite variance under `g`, so their standard errors
/// are indicative only.
pub fn coarse_average_mc(
    photon: Photon,
    component: Component,
    cell: &CoarseCell,
    batch: &SampleBatch,
) -> Result<ComplexEstimate> {
    #[derive(Clone, Copy, Default)]
    struct Acc {
        n: usize,
        sum: Complex64,
        sq_re: f64,
        sq_im: f64,
    }
    impl std::ops::Add for Acc {
        type Output = Acc;
        fn add(self, o: Acc) -> Acc {
            Acc {
                n: self.n + o.n,
                sum: self.sum + o.sum,
                sq_re: self.sq_re + o.sq_re,
                sq_im: self.sq_im + o.sq_im,
            }
        }
    }
    let shift = cell.shift;
    let acc: Acc = chunked_sum(&batch.omegas, |w| {
        let omega = HiddenAngle(w);
        if !cell.contains(omega) {
            return Acc::default();
        }
        match photon_polarization(photon, omega, shift, component) {
            Ok(v) => Acc {
                n: 1,
                sum: v,
                sq_re: v.re * v.re,
                sq_im: v.im * v.im,
            },
            // Only reachable within rounding of a cell edge after transforming.
            Err(_) => Acc::default(),
        }
    });
    if acc.n == 0 {
        return Err(HiddenError::InsufficientSamples { cell: cell.label });
    }
    let n = acc.n as f64;
    let mean = acc.sum / n;
    let se = |sq: f64, m: f64| ((sq / n - m * m).max(0.0) / n).sqrt();
    Ok(ComplexEstimate {
        value: mean,
        std_err_re: se(acc.sq_re, mean.re),
        std_err_im: se(acc.sq_im, mean.im),
        count: acc.n,
    })
}

/// `Σ_cells p·s_A·s_B`, which equals `−cos Δ`.
pub fn correlation(shift: FrameShift) -> Result<f64> {
    CoarseCell::all(shift).iter().try_fold(0.0, |acc, cell| {
        let sign = cell.label.a.value() * cell.label.b.value();
        Ok(acc + sign * cell_probability(cell)?)
    })
}

/// Sample mean of `S_A·S_B` with standard error `√((1 − E²)/N)`.
pub fn correlation_mc(shift: FrameShift, batch: &SampleBatch) -> Result<Estimate> {
    shift.require_regular()?;
    let total: f64 = chunked_sum(&batch.omegas, |w| {
        let omega = HiddenAngle(w);
        strong_outcome(omega, shift, Photon::A).value()
            * strong_outcome(omega, shift, Photon::B).value()
    });
    let n = batch.count() as f64;
    let e = total / n;
    Ok(Estimate {
        value: e,
        std_err: ((1.0 - e * e).max(0.0) / n).sqrt(),
        count: batch.count(),
    })
}

/// Comparison of the model's correlations with Bell's inequality for the
/// settings `a` (photon A) and `b`, `c` (photon B), at shifts `Δ' = c − a`,
/// `Δ'' = b − a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellReport {
    pub delta_prime: f64,
    pub delta_double_prime: f64,
    /// `|E(a,c) − E(a,b)| = 4∫_{Δ''}^{Δ'} g`.
    pub lhs: f64,
    /// `1 + 2∫_{Δ''}^{Δ'} g`, the bound the model does satisfy.
    pub bound: f64,
    /// `2∫_{Δ''}^{Δ'} g`, weight of the interval in photon A's frame.
    pub interval_weight: f64,
    /// `2∫_0^{Δ'−Δ''} g`, weight of an interval of the same width in the frame of `b`.
    pub reframed_weight: f64,
    /// `E(b,c) = −cos(Δ' − Δ'')`.
    pub genuine_correlation: f64,
    /// `1 + E(b,c)`.
    pub bell_rhs: f64,
    /// `lhs > bell_rhs`.
    pub violation: bool,
}

/// Builds a [`BellReport`] from two shifts with `Δ' ≥ Δ'' ≥ 0`.
pub fn bell_test(delta_prime: f64, delta_double_prime: f64) -> Result<BellReport> {
    let (d1, d2) = (delta_prime, delta_double_prime);
    if !(d1.is_finite() && d2.is_finite()) || d2 < 0.0 || d1 < d2 || d1 > PI {
        return Err(HiddenError::BellOrdering {
            first: d1,
            second: d2,
        });
    }
    let interval_weight = 2.0 * integral_of_density(d2, d1);
    let lhs = 2.0 * interval_weight;
    let genuine_correlation = -(d1 - d2).cos();
    let bell_rhs = 1.0 + genuine_correlation;
    Ok(BellReport {
        delta_prime: d1,
        delta_double_prime: d2,
        lhs,
        bound: 1.0 + interval_weight,
        interval_weight,
        reframed_weight: 2.0 * integral_of_density(0.0, d1 - d2),
        genuine_correlation,
        bell_rhs,
        violation: lhs > bell_rhs + 1e-12,
    })
}

/// [`bell_test`] for in-plane polarizer angles `a`, `b`, `c`. Both `b` and `c`
/// must lie on the same side of `a`.
pub fn bell_test_angles(a: f64, b: f64, c: f64) -> Result<BellReport> {
    let (db, dc) = (wrap_angle(b - a), wrap_angle(c - a));
    if db * dc < 0.0 {
        return Err(HiddenError::InvalidArgument(format!(
            "b and c lie on opposite sides of a (b − a = {db}, c − a = {dc})"
        )));
    }
    let (x, y) = (db.abs(), dc.abs());
    bell_test(x.max(y), x.min(y))
}

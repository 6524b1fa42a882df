#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use pseudo_paths::hilbert::{KetVector, LinearOperator};
use rand::Rng;

/// Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> LinearOperator {
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        m[i * dim + i] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..dim {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[i * dim + j] = z;
            m[j * dim + i] = z.conj();
        }
    }
    LinearOperator::new(m).unwrap()
}

/// CSCO angle at least `margin` away from `0` and `π`.
pub fn random_phi<R: Rng + ?Sized>(rng: &mut R, margin: f64) -> f64 {
    let x = rng.random_range(margin..PI - margin);
    if rng.random::<bool>() {
        x
    } else {
        x + PI
    }
}

pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> KetVector {
    let v = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    KetVector::new(v).unwrap()
}

pub fn hermitian_strategy(dim: usize) -> impl Strategy<Value = LinearOperator> {
    proptest::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |xs| {
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let z = Complex64::new(xs[2 * (i * dim + j)], xs[2 * (i * dim + j) + 1]);
                m[i * dim + j] += z * 0.5;
                m[j * dim + i] += z.conj() * 0.5;
            }
        }
        LinearOperator::new(m).unwrap()
    })
}

pub fn ket_strategy(dim: usize) -> impl Strategy<Value = KetVector> {
    proptest::collection::vec(-1.0f64..1.0, 2 * dim).prop_map(|xs| {
        KetVector::new(xs.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()).unwrap()
    })
}

pub fn phi_strategy() -> impl Strategy<Value = f64> {
    (0.05f64..PI - 0.05, any::<bool>()).prop_map(|(x, flip)| if flip { x + PI } else { x })
}

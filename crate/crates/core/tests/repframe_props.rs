mod common;

use common::{hermitian_strategy, phi_strategy, random_phi};
use nalgebra::DMatrix;
use proptest::prelude::*;
use pseudo_paths::repframe::{
    pseudo_prob_matrix, toy_residuals, toy_solve, verify_transform, weak_value_table,
    RepframeError, ToyGrid, TOY_TOL,
};
use pseudo_paths::singlet::{build_singlet, csco_eigenbasis, CscoChoice};
use pseudo_paths::KetVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn basis(phi: f64) -> Vec<KetVector> {
    csco_eigenbasis(&CscoChoice::new(phi).unwrap()).to_vec()
}

proptest! {
    #[test]
    fn bayes_constraints_hold(phi_i in phi_strategy(), phi_j in phi_strategy()) {
        let m = pseudo_prob_matrix(&basis(phi_i), &basis(phi_j), &build_singlet()).unwrap();
        prop_assert!(m.row_sum_residual() <= 1e-10);
        prop_assert!(m.marginal_residual() <= 1e-10);
    }

    #[test]
    fn values_transform_between_representations(
        obs in hermitian_strategy(4),
        phi_i in phi_strategy(),
        phi_j in phi_strategy(),
    ) {
        let psi = build_singlet();
        let (bi, bj) = (basis(phi_i), basis(phi_j));
        let m = pseudo_prob_matrix(&bi, &bj, &psi).unwrap();
        let ti = weak_value_table(&obs, &bi, &psi).unwrap();
        let tj = weak_value_table(&obs, &bj, &psi).unwrap();
        let scale = ti.iter().chain(&tj).map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(verify_transform(&m, &ti, &tj).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn chained_transforms_agree(
        obs in hermitian_strategy(4),
        phis in (phi_strategy(), phi_strategy(), phi_strategy()),
    ) {
        let psi = build_singlet();
        let (bi, bj, bk) = (basis(phis.0), basis(phis.1), basis(phis.2));
        let ij = pseudo_prob_matrix(&bi, &bj, &psi).unwrap();
        let jk = pseudo_prob_matrix(&bj, &bk, &psi).unwrap();
        let chained = ij.compose(&jk).unwrap();
        let ti = weak_value_table(&obs, &bi, &psi).unwrap();
        let tk = weak_value_table(&obs, &bk, &psi).unwrap();
        let scale = ti.iter().chain(&tk).map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(verify_transform(&chained, &ti, &tk).unwrap() <= 1e-9 * scale);
    }

    #[test]
    fn toy_solutions_satisfy_constraints(seed in 0u64..10_000, n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = ToyGrid::random(n, &mut rng).unwrap();
        let s = toy_solve(&grid).unwrap();
        prop_assert!(s.max_residual() <= TOY_TOL);
        let (a, b, c) = toy_residuals(&grid, &s.ptilde);
        prop_assert!(a.max(b).max(c) <= TOY_TOL);
    }
}

#[test]
fn random_grids_produce_values_outside_unit_interval() {
    let found = (0..100).any(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = ToyGrid::random(3, &mut rng).unwrap();
        toy_solve(&grid).unwrap().has_entry_outside_unit_interval()
    });
    assert!(found);
}

#[test]
fn solution_is_no_larger_than_any_other_solution() {
    // With z depending only on the column, the true conditionals solve the
    // system too, so the minimum-norm answer cannot exceed them.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let probs = ToyGrid::random(4, &mut rng).unwrap().probs().clone();
    let g = ToyGrid::new(probs, DMatrix::from_fn(4, 4, |_, j| j as f64)).unwrap();
    let p_row = g.row_marginals();
    let truth = DMatrix::from_fn(4, 4, |i, j| g.probs()[(i, j)] / p_row[i]);
    let s = toy_solve(&g).unwrap();
    assert!(s.ptilde.norm() <= truth.norm() + 1e-12);
}

#[test]
fn singular_grid_is_rejected_at_any_size() {
    for n in 2..=5 {
        let probs = DMatrix::from_element(n, n, 1.0 / (n * n) as f64);
        let values = DMatrix::from_fn(n, n, |i, _| i as f64);
        let g = ToyGrid::new(probs, values).unwrap();
        assert_eq!(toy_solve(&g).unwrap_err(), RepframeError::SingularToyModel);
    }
}

#[test]
fn random_pairs_sharing_sigma1_a() {
    let psi = build_singlet();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let (bi, bj) = (
            basis(random_phi(&mut rng, 0.05)),
            basis(random_phi(&mut rng, 0.05)),
        );
        let m = pseudo_prob_matrix(&bi, &bj, &psi).unwrap();
        assert!(m.row_sum_residual() <= 1e-10 && m.marginal_residual() <= 1e-10);
    }
}

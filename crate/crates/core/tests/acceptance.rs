//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints its own line.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{random_hermitian, random_ket, random_phi};
use pseudo_paths::hidden_circle::{
    cell_probability, cell_probability_mc, chi_square, coarse_average, correlation, correlation_mc,
    quantum_observable, sample, CoarseCell, Component, FrameShift,
};
use pseudo_paths::measurement::{
    bayes_update, eight_paths, marginalize_device, strong_pointer_trials, verify_collapse,
    weak_pointer_shift, DeviceBasis, PointerState,
};
use pseudo_paths::repframe::{
    omega_rank, pseudo_prob_matrix, toy_solve, verify_transform, weak_value_table, RepframeError,
    ToyGrid,
};
use pseudo_paths::singlet::{
    bell_inequality_sides, build_singlet, csco_eigenbasis, eom_residual, path_probabilities,
    pauli_on, pseudo_value_table, reconstruct_average, reconstruct_correlation, CscoChoice,
    PathLabel, Photon, Sign,
};
use pseudo_paths::LinearOperator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn phi_sweep(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_phi(&mut rng, 0.05)).collect()
}

fn observables(count: usize, seed: u64) -> Vec<LinearOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_hermitian(4, &mut rng)).collect()
}

fn basis(phi: f64) -> Vec<pseudo_paths::KetVector> {
    csco_eigenbasis(&CscoChoice::new(phi).unwrap()).to_vec()
}

fn path_probabilities_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let phi = 0.01 + (TAU - 0.02) * k as f64 / 49.0;
        if (phi - PI).abs() < 1e-3 {
            continue;
        }
        let ens = path_probabilities(&CscoChoice::new(phi).unwrap());
        for (l, q) in PathLabel::ALL.iter().zip(ens.amplitudes()) {
            let expected = (1.0 - l.a.value() * l.b.value() * phi.cos()) / 4.0;
            worst = worst.max((q.norm_sqr() - expected).abs());
        }
    }
    check(worst <= 1e-12, format!("max error {worst:.1e}"))
}

fn table_equals_weak_values() -> Outcome {
    let psi = build_singlet();
    let mut worst: f64 = 0.0;
    for obs in observables(50, 1) {
        for phi in phi_sweep(20, 2) {
            let csco = CscoChoice::new(phi).unwrap();
            let table = pseudo_value_table(&obs, &csco, &psi).map_err(|e| e.to_string())?;
            let direct = path_probabilities(&csco).weak_values(&obs).unwrap();
            worst = worst.max(table.max_abs_diff(&direct));
        }
    }
    check(worst <= 1e-10, format!("max error {worst:.1e}"))
}

fn reconstruction() -> Outcome {
    let psi = build_singlet();
    let obs = observables(50, 1);
    let mut worst: f64 = 0.0;
    for phi in phi_sweep(20, 2) {
        let csco = CscoChoice::new(phi).unwrap();
        let ens = path_probabilities(&csco);
        let tables: Vec<_> = obs
            .iter()
            .map(|o| pseudo_value_table(o, &csco, &psi).unwrap())
            .collect();
        for (k, o) in obs.iter().enumerate() {
            let next = (k + 1) % obs.len();
            let avg = reconstruct_average(&tables[k], &ens);
            worst = worst.max((avg - o.expectation(&psi).unwrap()).norm());
            let corr = reconstruct_correlation(&tables[k], &tables[next], &ens);
            let exact = (o * &obs[next]).expectation(&psi).unwrap();
            worst = worst.max((corr - exact).norm());
        }
    }
    check(worst <= 1e-10, format!("max error {worst:.1e}"))
}

fn chsh_instance() -> Outcome {
    let a = [FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0];
    let (lhs, rhs) = bell_inequality_sides(a, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
    let ok = (lhs - 2f64.sqrt()).abs() <= 1e-12 && (rhs - 1.0).abs() <= 1e-12 && lhs > rhs;
    check(
        ok,
        format!("|E(a,b) − E(a,c)| = {lhs:.12}, 1 + E(b,c) = {rhs:.12}"),
    )
}

fn crossed_probabilities() -> Outcome {
    let batch = sample(1_000_000, 5).map_err(|e| e.to_string())?;
    let (mut worst, mut worst_z): (f64, f64) = (0.0, 0.0);
    for delta in [0.2, 0.9, FRAC_PI_3 * 2.0, 2.8] {
        let shift = FrameShift::new(delta).unwrap();
        for cell in CoarseCell::all(shift) {
            let p = cell_probability(&cell).map_err(|e| e.to_string())?;
            let expected = (1.0 - cell.label.a.value() * cell.label.b.value() * delta.cos()) / 4.0;
            worst = worst.max((p - expected).abs());
            worst_z = worst_z.max(cell_probability_mc(&cell, &batch).z_score(p).abs());
        }
    }
    check(
        worst <= 1e-12 && worst_z <= 5.0,
        format!("closed form error {worst:.1e}, max |z| {worst_z:.2}"),
    )
}

fn hidden_weak_value_equivalence() -> Outcome {
    let psi = build_singlet();
    let mut worst: f64 = 0.0;
    for k in 0..25 {
        let delta = PI * (k as f64 + 0.5) / 25.0;
        let shift = FrameShift::new(delta).unwrap();
        let csco = CscoChoice::new(delta).unwrap();
        for m in 0..5 {
            let chi = TAU * m as f64 / 5.0;
            let comps = [
                Component::S1,
                Component::S2,
                Component::S3,
                Component::Chi(chi),
            ];
            for photon in [Photon::A, Photon::B] {
                for comp in comps {
                    let obs = quantum_observable(photon, comp, shift);
                    let table = pseudo_value_table(&obs, &csco, &psi).unwrap();
                    for cell in CoarseCell::all(shift) {
                        let got = coarse_average(photon, comp, &cell).map_err(|e| e.to_string())?;
                        worst = worst.max((got - table[cell.label]).norm());
                    }
                }
            }
        }
    }
    check(worst <= 1e-9, format!("max error {worst:.1e}"))
}

fn correlation_curve() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let delta = PI * k as f64 / 100.0;
        let e = correlation(FrameShift::new(delta).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max((e + delta.cos()).abs());
    }
    let mut worst_z: f64 = 0.0;
    for k in 0..10 {
        let delta = PI * (k as f64 + 0.5) / 10.0;
        let batch = sample(1_000_000, 100 + k).map_err(|e| e.to_string())?;
        let est =
            correlation_mc(FrameShift::new(delta).unwrap(), &batch).map_err(|e| e.to_string())?;
        worst_z = worst_z.max(est.z_score(-delta.cos()).abs());
    }
    check(
        worst <= 1e-12 && worst_z <= 5.0,
        format!("closed form error {worst:.1e}, max |z| {worst_z:.2}"),
    )
}

fn measure_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut lowest: f64 = 1.0;
    for k in 0..20 {
        let shift = FrameShift::new(rng.random_range(0.0..PI)).unwrap();
        let batch = sample(100_000, 200 + k).map_err(|e| e.to_string())?;
        let out = chi_square(&batch.transformed(shift), 50).map_err(|e| e.to_string())?;
        lowest = lowest.min(out.p_value);
    }
    check(lowest > 1e-3, format!("smallest p-value {lowest:.3e}"))
}

fn representation_transform() -> Outcome {
    let psi = build_singlet();
    let obs = observables(50, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut bayes): (f64, f64) = (0.0, 0.0);
    let mut ranks = Vec::new();
    for _ in 0..20 {
        let (bi, bj) = (
            basis(random_phi(&mut rng, 0.05)),
            basis(random_phi(&mut rng, 0.05)),
        );
        let m = pseudo_prob_matrix(&bi, &bj, &psi).map_err(|e| e.to_string())?;
        bayes = bayes.max(m.row_sum_residual()).max(m.marginal_residual());
        let mut tables = Vec::with_capacity(obs.len());
        for o in &obs {
            let ti = weak_value_table(o, &bi, &psi).unwrap();
            let tj = weak_value_table(o, &bj, &psi).unwrap();
            worst = worst.max(verify_transform(&m, &ti, &tj).unwrap());
            tables.push((ti, tj));
        }
        for i in 0..4 {
            ranks.push(omega_rank(&tables, i).map_err(|e| e.to_string())?);
        }
    }
    let rank_ok = ranks.iter().all(|&r| r == 3);
    check(
        worst <= 1e-10 && bayes <= 1e-10 && rank_ok,
        format!(
            "transform residual {worst:.1e}, Bayes residual {bayes:.1e}, Ω ranks {}..={}",
            ranks.iter().min().unwrap(),
            ranks.iter().max().unwrap()
        ),
    )
}

fn toy_model() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut outside = 0;
    for seed in 0..100u64 {
        let n = 1 + (seed % 5) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = ToyGrid::random(n, &mut rng).map_err(|e| e.to_string())?;
        let s = toy_solve(&grid).map_err(|e| format!("seed {seed}: {e}"))?;
        worst = worst.max(s.max_residual());
        outside += s.has_entry_outside_unit_interval() as usize;
    }
    let probs = nalgebra::DMatrix::from_element(3, 3, 1.0 / 9.0);
    let values = nalgebra::DMatrix::from_fn(3, 3, |i, _| i as f64);
    let singular = toy_solve(&ToyGrid::new(probs, values).unwrap());
    let rejected = matches!(singular, Err(RepframeError::SingularToyModel));
    check(
        worst <= 1e-9 && outside > 0 && rejected,
        format!("max residual {worst:.1e}, {outside} grids outside [0, 1], singular rejected: {rejected}"),
    )
}

fn collapse() -> Outcome {
    let (mut worst, mut prob): (f64, f64) = (0.0, 0.0);
    for k in 0..10 {
        let phi = 0.15 + 0.3 * k as f64;
        let csco = CscoChoice::new(phi).unwrap();
        let ens = eight_paths(&DeviceBasis::default(), &csco).map_err(|e| e.to_string())?;
        for outcome in Sign::BOTH {
            let marg = marginalize_device(&bayes_update(&ens, outcome).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            worst = worst.max(verify_collapse(&marg).map_err(|e| e.to_string())?);
            let o = outcome.value();
            let [p, m] = marg.probabilities();
            prob = prob
                .max((p - (1.0 - o * phi.cos()) / 2.0).abs())
                .max((m - (1.0 + o * phi.cos()) / 2.0).abs());
        }
    }
    check(
        worst <= 1e-10 && prob <= 1e-12,
        format!("collapse residual {worst:.1e}, probability error {prob:.1e}"),
    )
}

fn pointer_models() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let psi = random_ket(4, &mut rng).normalized().unwrap();
    let obs = random_hermitian(4, &mut rng);
    let trials = strong_pointer_trials(&psi, &obs, 100_000, 9).map_err(|e| e.to_string())?;
    let z = trials.max_z_score();

    let singlet = build_singlet();
    let post = basis(FRAC_PI_3)[0].clone();
    let sigma = pauli_on(Photon::B, 2);
    let error = |eta: f64| -> Result<f64, String> {
        let pointer = PointerState::gaussian(1.0, eta).map_err(|e| e.to_string())?;
        let s = weak_pointer_shift(&singlet, &sigma, &post, &pointer).map_err(|e| e.to_string())?;
        Ok((s.mean_q - eta * s.weak_value.re).abs())
    };
    let (coarse, fine) = (error(1e-3)?, error(5e-4)?);
    // Error relative to the shift itself, which falls linearly with η.
    let ratio = (coarse / 1e-3) / (fine / 5e-4);
    check(
        z <= 5.0 && coarse <= 10.0 * 1e-6 && ratio >= 1.5,
        format!("Born max |z| {z:.2}, weak error {coarse:.2e}, halving ratio {ratio:.2}"),
    )
}

fn eom_scaling() -> Outcome {
    let psi = build_singlet();
    let csco = CscoChoice::new(1.0).unwrap();
    // Precession at angular frequency w = 2: H = (w/2)σ₃.
    let h = pauli_on(Photon::A, 3);
    let obs = pauli_on(Photon::A, 1);
    let coarse = eom_residual(&obs, &h, &csco, &psi, 0.3, 1e-3).map_err(|e| e.to_string())?;
    let fine = eom_residual(&obs, &h, &csco, &psi, 0.3, 1e-4).map_err(|e| e.to_string())?;
    let ratio = coarse / fine;
    check(
        (80.0..=120.0).contains(&ratio),
        format!("residuals {coarse:.2e} / {fine:.2e}, ratio {ratio:.1}"),
    )
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            name: "path probabilities",
            budget: secs(1),
            run: path_probabilities_closed_form,
        },
        Criterion {
            name: "table equals weak values",
            budget: secs(5),
            run: table_equals_weak_values,
        },
        Criterion {
            name: "reconstruction",
            budget: secs(5),
            run: reconstruction,
        },
        Criterion {
            name: "CHSH instance",
            budget: secs(1),
            run: chsh_instance,
        },
        Criterion {
            name: "crossed probabilities",
            budget: secs(10),
            run: crossed_probabilities,
        },
        Criterion {
            name: "hidden/quantum value equivalence",
            budget: secs(10),
            run: hidden_weak_value_equivalence,
        },
        Criterion {
            name: "correlation curve",
            budget: secs(30),
            run: correlation_curve,
        },
        Criterion {
            name: "measure invariance",
            budget: secs(30),
            run: measure_invariance,
        },
        Criterion {
            name: "representation transform",
            budget: secs(10),
            run: representation_transform,
        },
        Criterion {
            name: "toy model",
            budget: secs(5),
            run: toy_model,
        },
        Criterion {
            name: "collapse",
            budget: secs(2),
            run: collapse,
        },
        Criterion {
            name: "pointer models",
            budget: secs(60),
            run: pointer_models,
        },
        Criterion {
            name: "equation of motion",
            budget: secs(2),
            run: eom_scaling,
        },
    ];
    let mut failures = 0;
    for (k, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {:?}", c.budget)),
            Err(d) => (false, d),
        };
        failures += !ok as usize;
        let tag = if ok { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {:>2} {:<34} {:>8.3} s  {detail}",
            k + 1,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

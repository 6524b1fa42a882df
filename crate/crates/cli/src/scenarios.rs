use std::fmt::Display;

use num_complex::Complex64;
use pseudo_paths::hidden_circle::{
    bell_test_angles, cell_probability, cell_probability_mc, chi_square, coarse_average,
    correlation, correlation_mc, quantum_observable, sample, CoarseCell, Component, FrameShift,
};
use pseudo_paths::hilbert::{pauli, tensor, LinearOperator};
use pseudo_paths::measurement::{
    bayes_update, collapsed_state, eight_paths, marginalize_device, strong_pointer_trials,
    verify_collapse, weak_pointer_shift, DeviceBasis, PointerState,
};
use pseudo_paths::repframe::{
    omega_rank, pseudo_prob_matrix, toy_solve, verify_transform, weak_value_table, ToyGrid,
};
use pseudo_paths::singlet::{
    self, build_singlet, classicality_check, csco_eigenbasis, path_probabilities, pauli_on,
    polarization, pseudo_value_table, reconstruct_average, CscoChoice, PathLabel, Photon, Sign,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Parameters, Scenario};
use crate::report::{Check, Row};
use crate::CliError;

const EXACT: f64 = 1e-12;
const TABLE: f64 = 1e-10;
const SIGMA: f64 = 5.0;
const CHI_BINS: usize = 50;
const CHI_P_MIN: f64 = 1e-3;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn pair(l: PathLabel) -> String {
    format!("{}{}", l.a, l.b)
}

/// Computes the rows of `cfg`'s scenario.
pub fn rows(cfg: &ExperimentConfig) -> Result<Vec<Row>, CliError> {
    let p = &cfg.parameters;
    let sc = cfg.scenario;
    let lib = |e: &dyn Display| CliError::Library {
        scenario: sc,
        message: e.to_string(),
    };
    match sc {
        Scenario::BellTest => bell(p).map_err(|e| lib(&e)),
        Scenario::WeakValues => weak_values(p).map_err(|e| lib(&e)),
        Scenario::HiddenMc => hidden_mc(p).map_err(|e| lib(&e)),
        Scenario::RepframeCheck => repframe(p).map_err(|e| lib(&e)),
        Scenario::Collapse => collapse(p).map_err(|e| lib(&e)),
        Scenario::Pointer => pointer(p).map_err(|e| lib(&e)),
        Scenario::ToyModel => toy(p).map_err(|e| lib(&e)),
    }
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn bell(p: &Parameters) -> Res<Vec<Row>> {
    let [a, b, c] = p.angles.expect("resolved");
    let psi = build_singlet();
    let e = |x: f64, y: f64| -> Res<f64> {
        let op = &polarization(Photon::A, x) * &polarization(Photon::B, y);
        Ok(op.expectation(&psi)?.re)
    };
    let (ab, ac, bc) = (e(a, b)?, e(a, c)?, e(b, c)?);
    let mut rows = Vec::new();
    for (label, v, x, y) in [("ab", ab, a, b), ("ac", ac, a, c), ("bc", bc, b, c)] {
        rows.push(
            Row::real("correlation", label, v)
                .with_closed_form(re(-(x - y).cos()))
                .checked(Check::Abs(EXACT)),
        );
    }
    let (lhs, rhs) = ((ab - ac).abs(), 1.0 + bc);
    rows.push(
        Row::real("bell_lhs", "", lhs)
            .with_closed_form(re(((a - c).cos() - (a - b).cos()).abs()))
            .checked(Check::Abs(EXACT)),
    );
    rows.push(
        Row::real("bell_rhs", "", rhs)
            .with_closed_form(re(1.0 - (b - c).cos()))
            .checked(Check::Abs(EXACT)),
    );
    rows.push(Row::real("violation", "", (lhs > rhs) as u8 as f64));

    // The hidden-circle harness needs b and c on the same side of a.
    if let Ok(h) = bell_test_angles(a, b, c) {
        let (d1, d2) = (h.delta_prime, h.delta_double_prime);
        rows.push(
            Row::real("hidden_lhs", "", h.lhs)
                .with_closed_form(re((d2.cos() - d1.cos()).abs()))
                .checked(Check::Abs(EXACT)),
        );
        rows.push(Row::real("hidden_bound_gap", "", h.lhs - h.bound).checked(Check::AtMost(EXACT)));
        rows.push(
            Row::real("interval_weight", "", h.interval_weight)
                .with_closed_form(re((d2.cos() - d1.cos()) / 2.0))
                .checked(Check::Abs(EXACT)),
        );
        rows.push(
            Row::real("reframed_weight", "", h.reframed_weight)
                .with_closed_form(re((1.0 - (d1 - d2).cos()) / 2.0))
                .checked(Check::Abs(EXACT)),
        );
        rows.push(
            Row::real("genuine_correlation", "", h.genuine_correlation)
                .with_closed_form(re(-(d1 - d2).cos()))
                .checked(Check::Abs(EXACT)),
        );
        rows.push(Row::real("hidden_violation", "", h.violation as u8 as f64));
    }
    Ok(rows)
}

type ClosedForm = Box<dyn Fn(f64, f64) -> Complex64>;

/// Observables with their values on path `(s_A, s_B)` written out by hand.
fn pauli_catalogue(phi: f64, chi: f64) -> Vec<(String, LinearOperator, ClosedForm)> {
    let (s, c) = (phi.sin(), phi.cos());
    let sigma2 = move |a: f64, b: f64| (c * a + b) / s;
    let sigma3 = move |a: f64, b: f64| (c + a * b) / s;
    vec![
        (
            "sigma1_A".into(),
            pauli_on(Photon::A, 1),
            Box::new(|a, _| re(a)),
        ),
        (
            "sigma2_A".into(),
            pauli_on(Photon::A, 2),
            Box::new(move |a, b| re(-sigma2(a, b))),
        ),
        (
            "sigma3_A".into(),
            pauli_on(Photon::A, 3),
            Box::new(move |a, b| Complex64::new(0.0, sigma3(a, b))),
        ),
        (
            "sigma1_B".into(),
            pauli_on(Photon::B, 1),
            Box::new(|a, _| re(-a)),
        ),
        (
            "sigma2_B".into(),
            pauli_on(Photon::B, 2),
            Box::new(move |a, b| re(sigma2(a, b))),
        ),
        (
            "sigma3_B".into(),
            pauli_on(Photon::B, 3),
            Box::new(move |a, b| Complex64::new(0.0, -sigma3(a, b))),
        ),
        (
            "sigma_chi_B".into(),
            polarization(Photon::B, chi),
            Box::new(move |a, b| re(-chi.cos() * a + chi.sin() * sigma2(a, b))),
        ),
        (
            "sigma1_A*sigma2_B".into(),
            &pauli_on(Photon::A, 1) * &pauli_on(Photon::B, 2),
            Box::new(move |a, b| re(sigma3(a, b))),
        ),
    ]
}

fn weak_values(p: &Parameters) -> Res<Vec<Row>> {
    let (phi, chi) = (p.phi.expect("resolved"), p.chi.expect("resolved"));
    let delta = p.delta_threshold.expect("resolved");
    let csco = CscoChoice::new(phi)?;
    let psi = build_singlet();
    let ens = path_probabilities(&csco);
    let mut rows = Vec::new();
    for l in PathLabel::ALL {
        let closed = (1.0 - l.a.value() * l.b.value() * phi.cos()) / 4.0;
        rows.push(
            Row::real("probability", pair(l), ens.probability(l))
                .with_closed_form(re(closed))
                .checked(Check::Abs(EXACT)),
        );
    }
    for (name, obs, closed) in pauli_catalogue(phi, chi) {
        let table = pseudo_value_table(&obs, &csco, &psi)?;
        for l in PathLabel::ALL {
            rows.push(
                Row::value(&name, pair(l), table[l])
                    .with_closed_form(closed(l.a.value(), l.b.value()))
                    .checked(Check::Abs(TABLE)),
            );
        }
        rows.push(
            Row::value("average", name, reconstruct_average(&table, &ens))
                .with_closed_form(obs.expectation(&psi)?)
                .checked(Check::Abs(TABLE)),
        );
    }
    let pairs = [
        (pauli_on(Photon::A, 1), csco.sigma_phi_b()),
        (pauli_on(Photon::A, 2), pauli_on(Photon::B, 2)),
        (pauli_on(Photon::A, 3), pauli_on(Photon::B, 3)),
    ];
    for l in PathLabel::ALL {
        let report = classicality_check(&pairs, &csco, &psi, l, delta, None)?;
        rows.push(Row::real(
            "max_abs_covariance",
            pair(l),
            report.max_abs_covariance,
        ));
        rows.push(Row::real(
            "classical",
            pair(l),
            report.classical as u8 as f64,
        ));
    }
    Ok(rows)
}

fn hidden_mc(p: &Parameters) -> Res<Vec<Row>> {
    let delta = p.delta_omega.expect("resolved");
    let chi = p.chi.expect("resolved");
    let shift = FrameShift::new(delta)?;
    let batch = sample(p.samples.expect("resolved"), p.seed.expect("resolved"))?;
    let csco = CscoChoice::new(delta)?;
    let psi = build_singlet();
    let mut rows = Vec::new();
    for cell in CoarseCell::all(shift) {
        let l = cell.label;
        let closed = re((1.0 - l.a.value() * l.b.value() * delta.cos()) / 4.0);
        rows.push(
            Row::real("cell_probability", pair(l), cell_probability(&cell)?)
                .with_closed_form(closed)
                .checked(Check::Abs(EXACT)),
        );
        let mc = cell_probability_mc(&cell, &batch);
        rows.push(
            Row::real("cell_probability_mc", pair(l), mc.value)
                .with_std_err(mc.std_err)
                .with_closed_form(closed)
                .checked(Check::Sigma(SIGMA)),
        );
    }
    let closed = re(-delta.cos());
    rows.push(
        Row::real("correlation", "", correlation(shift)?)
            .with_closed_form(closed)
            .checked(Check::Abs(EXACT)),
    );
    let mc = correlation_mc(shift, &batch)?;
    rows.push(
        Row::real("correlation_mc", "", mc.value)
            .with_std_err(mc.std_err)
            .with_closed_form(closed)
            .checked(Check::Sigma(SIGMA)),
    );
    let comps = [
        ("s1", Component::S1),
        ("s2", Component::S2),
        ("s3", Component::S3),
        ("s_chi", Component::Chi(chi)),
    ];
    for (photon, tag) in [(Photon::A, "A"), (Photon::B, "B")] {
        for (name, comp) in comps {
            let table = pseudo_value_table(&quantum_observable(photon, comp, shift), &csco, &psi)?;
            for cell in CoarseCell::all(shift) {
                rows.push(
                    Row::value(
                        "coarse_average",
                        format!("{tag}/{name}/{}", pair(cell.label)),
                        coarse_average(photon, comp, &cell)?,
                    )
                    .with_closed_form(table[cell.label])
                    .checked(Check::Abs(1e-9)),
                );
            }
        }
    }
    let chi2 = chi_square(&batch.transformed(shift), CHI_BINS)?;
    rows.push(Row::real(
        "chi_square_statistic",
        format!("dof={}", chi2.dof),
        chi2.statistic,
    ));
    rows.push(Row::real("chi_square_p", "", chi2.p_value).checked(Check::Above(CHI_P_MIN)));
    Ok(rows)
}

fn repframe(p: &Parameters) -> Res<Vec<Row>> {
    let (phi_i, phi_j) = (p.phi.expect("resolved"), p.phi_j.expect("resolved"));
    let bi = csco_eigenbasis(&CscoChoice::new(phi_i)?).to_vec();
    let bj = csco_eigenbasis(&CscoChoice::new(phi_j)?).to_vec();
    let psi = build_singlet();
    let m = pseudo_prob_matrix(&bi, &bj, &psi)?;
    let mut rows = Vec::new();
    for (i, li) in PathLabel::ALL.iter().enumerate() {
        for (j, lj) in PathLabel::ALL.iter().enumerate() {
            rows.push(Row::value(
                "pseudo_probability",
                format!("{}|{}", pair(*lj), pair(*li)),
                m.entry(i, j),
            ));
        }
    }
    rows.push(
        Row::real("row_sum_residual", "", m.row_sum_residual()).checked(Check::AtMost(TABLE)),
    );
    rows.push(
        Row::real("marginal_residual", "", m.marginal_residual()).checked(Check::AtMost(TABLE)),
    );
    let mut tables = Vec::new();
    for mu in 0..4 {
        for nu in 0..4 {
            let obs = tensor(&pauli::sigma(mu), &pauli::sigma(nu));
            let (ti, tj) = (
                weak_value_table(&obs, &bi, &psi)?,
                weak_value_table(&obs, &bj, &psi)?,
            );
            rows.push(
                Row::real(
                    "transform_residual",
                    format!("sigma{mu}{nu}"),
                    verify_transform(&m, &ti, &tj)?,
                )
                .checked(Check::AtMost(TABLE)),
            );
            tables.push((ti, tj));
        }
    }
    for (i, l) in PathLabel::ALL.iter().enumerate() {
        rows.push(
            Row::real("omega_rank", pair(*l), omega_rank(&tables, i)? as f64)
                .with_closed_form(re(3.0))
                .checked(Check::Abs(0.0)),
        );
    }
    Ok(rows)
}

fn collapse(p: &Parameters) -> Res<Vec<Row>> {
    let phi = p.phi.expect("resolved");
    let ens = eight_paths(&DeviceBasis::default(), &CscoChoice::new(phi)?)?;
    let basis = [
        pauli::in_plane_state(phi, 1.0),
        pauli::in_plane_state(phi, -1.0),
    ];
    let mut rows = Vec::new();
    for o in Sign::BOTH {
        let marg = marginalize_device(&bayes_update(&ens, o)?)?;
        let x = collapsed_state(o);
        for (k, sb) in Sign::BOTH.iter().enumerate() {
            let label = format!("o={o} sB={sb}");
            let closed = (1.0 - o.value() * sb.value() * phi.cos()) / 2.0;
            rows.push(
                Row::real("p_B", label.clone(), marg.probabilities()[k])
                    .with_closed_form(re(closed))
                    .checked(Check::Abs(EXACT)),
            );
            for n in 1..=3 {
                let obs = pauli::sigma(n);
                let value = marg.values(&obs)?[k];
                let single = singlet::weak_value(&obs, &basis[k], &x)?;
                rows.push(
                    Row::value(&format!("sigma{n}_B"), label.clone(), value)
                        .with_closed_form(single)
                        .checked(Check::Abs(TABLE)),
                );
            }
        }
        rows.push(
            Row::real(
                "collapse_residual",
                format!("o={o}"),
                verify_collapse(&marg)?,
            )
            .checked(Check::AtMost(TABLE)),
        );
    }
    Ok(rows)
}

fn pointer(p: &Parameters) -> Res<Vec<Row>> {
    let phi = p.phi.expect("resolved");
    let (eta, delta_q) = (p.eta.expect("resolved"), p.delta_q.expect("resolved"));
    let (trials, seed) = (p.samples.expect("resolved"), p.seed.expect("resolved"));
    let csco = CscoChoice::new(phi)?;
    let psi = build_singlet();
    let mut rows = Vec::new();

    let product = &pauli_on(Photon::A, 1) * &csco.sigma_phi_b();
    let strong = strong_pointer_trials(&psi, &product, trials, seed)?;
    let n = trials as f64;
    for ((lambda, freq), count) in strong
        .eigenvalues
        .iter()
        .zip(strong.frequencies())
        .zip(&strong.counts)
    {
        let closed = (1.0 - lambda * phi.cos()) / 2.0;
        rows.push(
            Row::real("born_frequency", format!("{lambda:+.0}"), freq)
                .with_std_err((closed * (1.0 - closed) / n).sqrt())
                .with_closed_form(re(closed))
                .checked(Check::Sigma(SIGMA)),
        );
        rows.push(Row::real(
            "born_count",
            format!("{lambda:+.0}"),
            *count as f64,
        ));
    }

    let post = csco_eigenbasis(&csco)[0].clone();
    let obs = pauli_on(Photon::B, 2);
    let pointer = PointerState::gaussian(delta_q, eta)?;
    let shift = weak_pointer_shift(&psi, &obs, &post, &pointer)?;
    let w = shift.weak_value;
    rows.push(
        Row::value("weak_value", "sigma2_B/++", w)
            .with_closed_form(re((phi.cos() + 1.0) / phi.sin()))
            .checked(Check::Abs(TABLE)),
    );
    rows.push(
        Row::real("post_probability", "++", shift.post_probability)
            .with_closed_form(re((1.0 - phi.cos()) / 4.0))
            .checked(Check::Abs((eta * eta / (delta_q * delta_q)).max(EXACT))),
    );
    // Rounding floor so that η = 0 is judged sensibly.
    let tol = (10.0 * eta * eta / delta_q).max(1e-14 * delta_q);
    rows.push(
        Row::real("pointer_mean_q", "", shift.mean_q)
            .with_closed_form(re(eta * w.re))
            .checked(Check::Abs(tol)),
    );
    rows.push(Row::real("pointer_mean_p", "", shift.mean_p));
    Ok(rows)
}

fn toy(p: &Parameters) -> Res<Vec<Row>> {
    let n = p.grid.expect("resolved");
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed.expect("resolved"));
    let grid = ToyGrid::random(n, &mut rng)?;
    let sol = toy_solve(&grid)?;
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let ij = format!("i={i} j={j}");
            rows.push(Row::real(
                "joint_probability",
                ij.clone(),
                grid.probs()[(i, j)],
            ));
            rows.push(Row::real("value", ij, grid.values()[(i, j)]));
        }
    }
    let mut outside = 0;
    for i in 0..n {
        for j in 0..n {
            let x = sol.ptilde[(i, j)];
            outside += !(0.0..=1.0).contains(&x) as usize;
            rows.push(Row::real("conditional", format!("j={j}|i={i}"), x));
        }
    }
    for (name, r) in [
        ("star_residual", sol.star_residual),
        ("row_sum_residual", sol.row_residual),
        ("marginal_residual", sol.marginal_residual),
    ] {
        rows.push(Row::real(name, "", r).checked(Check::AtMost(pseudo_paths::repframe::TOY_TOL)));
    }
    rows.push(Row::real("outside_unit_interval", "", outside as f64));
    Ok(rows)
}

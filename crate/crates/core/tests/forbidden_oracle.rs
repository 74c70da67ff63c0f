mod common;

use common::*;
use qrecords_core::forbidden::{
    allowed_subspace, back_propagate, back_propagate_with_projections, evolve_span,
    forbidden_final_states, forward_transition_probability, pointer_partition, random_state_seeded,
    BackwardOptions, ProjectionPoint, DEFAULT_DIMENSION_BOUND,
};
use qrecords_core::measureframe::{MeasurementSetup, Observable};
use qrecords_core::qstate::inner_product;
use qrecords_core::sampling::seeded_rng;
use rand::Rng;

fn repeated(n: usize, env: u32) -> MeasurementSetup {
    let a = Observable::computational(n);
    MeasurementSetup::sequential(n, vec![a.clone(), a], env).unwrap()
}

/// Forbidden finals written out by hand: `|k⟩ ⊗ |j⟩ ⊗ |k⟩ ⊗ |e⟩`, `j ≠ k`.
fn brute_force_finals(n: usize, env: usize) -> Vec<CV> {
    let mut out = Vec::new();
    for j in 1..=n {
        for k in 1..=n {
            if j == k {
                continue;
            }
            for e in 0..env {
                let factors = [
                    CM::from_column_slice(n, 1, basis_vector(n, k - 1).as_slice()),
                    CM::from_column_slice(n + 1, 1, basis_vector(n + 1, j).as_slice()),
                    CM::from_column_slice(n + 1, 1, basis_vector(n + 1, k).as_slice()),
                    CM::from_column_slice(env, 1, basis_vector(env, e).as_slice()),
                ];
                let v = kron_all(&factors);
                out.push(CV::from_column_slice(v.as_slice()));
            }
        }
    }
    out
}

fn allowed_dim_oracle(n: usize, env: usize) -> (usize, usize) {
    let setup = repeated(n, env as u32);
    let u = schedule_matrix(&setup);
    let initials: Vec<CV> = brute_force_finals(n, env)
        .iter()
        .map(|f| u.adjoint() * f)
        .collect();
    let total = n * (n + 1) * (n + 1) * env;
    (total, total - rank(&initials, 1e-9))
}

#[test]
fn allowed_dim_matches_brute_force_on_18_dim_instance() {
    let (total, oracle) = allowed_dim_oracle(2, 1);
    assert_eq!(total, 18);
    assert_eq!(oracle, 16);
    let setup = repeated(2, 1);
    let finals = forbidden_final_states(&setup, &[]).unwrap();
    let report = allowed_subspace(&setup, &back_propagate(&setup, &finals).unwrap(), DEFAULT_DIMENSION_BOUND).unwrap();
    assert_eq!(report.allowed_dim as usize, oracle);
}

#[test]
fn allowed_dim_matches_brute_force_larger() {
    for (n, env) in [(2, 3), (3, 1), (3, 2)] {
        let (_, oracle) = allowed_dim_oracle(n, env);
        let setup = repeated(n, env as u32);
        let finals = forbidden_final_states(&setup, &[]).unwrap();
        let report =
            allowed_subspace(&setup, &back_propagate(&setup, &finals).unwrap(), DEFAULT_DIMENSION_BOUND).unwrap();
        assert_eq!(report.allowed_dim as usize, oracle, "n = {n}, env = {env}");
    }
}

#[test]
fn forbidden_span_matches_brute_force_span() {
    let setup = repeated(2, 1);
    let finals = forbidden_final_states(&setup, &[]).unwrap();
    let ours: Vec<CV> = finals.iter().map(dense).collect();
    let theirs = brute_force_finals(2, 1);
    let r_ours = rank(&ours, 1e-9);
    let mut joint = ours.clone();
    joint.extend(theirs.iter().cloned());
    assert_eq!(r_ours, rank(&theirs, 1e-9));
    assert_eq!(rank(&joint, 1e-9), r_ours);
}

#[test]
fn rank_is_invariant_in_time() {
    for n in 2..=3 {
        let setup = repeated(n, 1);
        let finals = forbidden_final_states(&setup, &[]).unwrap();
        let initials = back_propagate(&setup, &finals).unwrap();
        let report = allowed_subspace(&setup, &initials, DEFAULT_DIMENSION_BOUND).unwrap();
        let len = setup.schedule().len();
        for t in 0..=len {
            let moved = evolve_span(&setup, &report.forbidden_basis, 0..t).unwrap();
            assert_eq!(moved.len(), report.forbidden_dim, "n = {n}, t = {t}");
        }
        // evolving the initial span to the end gives back the final span
        let at_end: Vec<CV> = evolve_span(&setup, &report.forbidden_basis, 0..len)
            .unwrap()
            .iter()
            .map(dense)
            .collect();
        let mut joint = at_end.clone();
        joint.extend(finals.iter().map(dense));
        assert_eq!(rank(&joint, 1e-9), report.forbidden_dim);
    }
}

#[test]
fn back_propagation_matches_dense_adjoint() {
    let setup = repeated(3, 2);
    let u = schedule_matrix(&setup);
    let finals = forbidden_final_states(&setup, &[]).unwrap();
    for (f, i) in finals.iter().zip(back_propagate(&setup, &finals).unwrap()) {
        let want = u.adjoint() * dense(f);
        assert!((dense(&i) - want).camax() < 1e-12);
    }
}

fn generic_setup() -> MeasurementSetup {
    MeasurementSetup::sequential(2, vec![Observable::computational(2), Observable::rotated_qubit(0.3)], 1).unwrap()
}

fn diag_projector(setup: &MeasurementSetup, keep: impl Fn(usize) -> bool) -> CM {
    let layout = setup.layout();
    let dim = layout.total_dim() as usize;
    let mut p = CM::zeros(dim, dim);
    for i in 0..dim {
        if keep(i) {
            p[(i, i)] = c(1.0, 0.0);
        }
    }
    p
}

#[test]
fn unprojection_weights_are_forward_reach_probabilities() {
    let setup = generic_setup();
    let target = random_state_seeded(&setup.layout(), 77).unwrap();
    let family = pointer_partition(&setup, &[0]);
    let point = ProjectionPoint {
        after: 1,
        family: family.clone(),
    };
    let opts = BackwardOptions::default();
    let pre = back_propagate_with_projections(&setup, std::slice::from_ref(&target), std::slice::from_ref(&point), &opts).unwrap();
    let total: f64 = pre.iter().map(|p| p.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);

    // dense oracle: U₁, U₂ and the diagonal cell projectors
    let obs = setup.observables();
    let u1 = measurement_matrix(&setup, &obs[0], 0);
    let u2 = measurement_matrix(&setup, &obs[1], 1);
    let layout = setup.layout();
    let f = dense(&target);
    for p in &pre {
        let cell = p.path[0] as u32;
        let reg = setup.pointer_register(0);
        let proj = diag_projector(&setup, |i| layout.label_at(i as u128).get(reg) == cell);
        let x = dense(&p.state.normalized().unwrap());
        let after = &proj * (&u1 * &x);
        let cw = after.norm_squared();
        let fin = &u2 * (after / c(cw.sqrt(), 0.0));
        let oracle = cw * f.dotc(&fin).norm_sqr();
        assert!((oracle - p.weight).abs() < 1e-12, "cell {cell}");
        let lib = forward_transition_probability(&setup, &p.state, std::slice::from_ref(&point), &target, &opts).unwrap();
        assert!((lib - p.weight).abs() < 1e-12);
    }
}

#[test]
fn unprojection_weights_survive_monte_carlo() {
    let setup = generic_setup();
    let target = random_state_seeded(&setup.layout(), 78).unwrap();
    let family = pointer_partition(&setup, &[0]);
    let point = ProjectionPoint { after: 1, family };
    let pre = back_propagate_with_projections(&setup, std::slice::from_ref(&target), &[point], &BackwardOptions::default())
        .unwrap();
    let obs = setup.observables();
    let u1 = measurement_matrix(&setup, &obs[0], 0);
    let u2 = measurement_matrix(&setup, &obs[1], 1);
    let layout = setup.layout();
    let reg = setup.pointer_register(0);
    let f = dense(&target);
    let mut rng = seeded_rng(4242);
    let samples = 20_000;
    for p in pre.iter().filter(|p| p.weight > 0.05) {
        let x = &u1 * dense(&p.state.normalized().unwrap());
        // collapse probabilities over the pointer cells
        let cells: Vec<(u32, f64)> = (0..3)
            .map(|v| {
                let w: f64 = (0..x.len())
                    .filter(|&i| layout.label_at(i as u128).get(reg) == v)
                    .map(|i| x[i].norm_sqr())
                    .sum();
                (v, w)
            })
            .collect();
        let mut hits = 0usize;
        for _ in 0..samples {
            let mut r: f64 = rng.gen();
            let mut chosen = cells.last().unwrap().0;
            for &(v, w) in &cells {
                if r < w {
                    chosen = v;
                    break;
                }
                r -= w;
            }
            let proj = diag_projector(&setup, |i| layout.label_at(i as u128).get(reg) == chosen);
            let y = &proj * &x;
            let fin = &u2 * (&y / c(y.norm(), 0.0));
            if rng.gen::<f64>() < f.dotc(&fin).norm_sqr() {
                hits += 1;
            }
        }
        let est = hits as f64 / samples as f64;
        let sigma = (p.weight * (1.0 - p.weight) / samples as f64).sqrt();
        assert!((est - p.weight).abs() <= 4.0 * sigma + 1e-9, "est {est} vs {}", p.weight);
    }
}

#[test]
fn forbidden_states_are_orthogonal_to_allowed_complement() {
    let setup = repeated(2, 2);
    let finals = forbidden_final_states(&setup, &[]).unwrap();
    let initials = back_propagate(&setup, &finals).unwrap();
    let report = allowed_subspace(&setup, &initials, DEFAULT_DIMENSION_BOUND).unwrap();
    let allowed = report.allowed_basis().unwrap();
    assert_eq!(allowed.len() as u128, report.allowed_dim);
    for a in allowed.iter().take(8) {
        for f in &initials {
            assert!(inner_product(a, f).unwrap().norm() < 1e-12);
        }
    }
}

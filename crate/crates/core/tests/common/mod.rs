#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qrecords_core::measureframe::{MeasurementSetup, Observable};
use qrecords_core::qstate::StateVector;

pub type CM = DMatrix<Complex64>;
pub type CV = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn dense(s: &StateVector) -> CV {
    CV::from_vec(s.to_dense(1 << 20).unwrap())
}

pub fn kron_all(ms: &[CM]) -> CM {
    ms.iter()
        .skip(1)
        .fold(ms[0].clone(), |acc, m| acc.kronecker(m))
}

/// `|p⟩ ↦ |p + k mod d⟩`.
pub fn shift(d: usize, k: usize) -> CM {
    let mut m = CM::zeros(d, d);
    for p in 0..d {
        m[((p + k) % d, p)] = c(1.0, 0.0);
    }
    m
}

pub fn projector_onto(v: &[Complex64]) -> CM {
    let v = CV::from_column_slice(v);
    &v * v.adjoint()
}

/// Dense `Σ_j |ψ_j⟩⟨ψ_j| ⊗ X^{j+1}` acting on the system and one pointer of
/// `setup`, identity on every other register.
pub fn measurement_matrix(setup: &MeasurementSetup, obs: &Observable, pointer: usize) -> CM {
    let dims = setup.layout().dims().to_vec();
    let target = setup.pointer_register(pointer);
    let n = setup.n();
    let mut total = CM::zeros(
        dims.iter().product::<u32>() as usize,
        dims.iter().product::<u32>() as usize,
    );
    for (j, psi) in obs.basis.iter().enumerate() {
        let factors: Vec<CM> = dims
            .iter()
            .enumerate()
            .map(|(r, &d)| {
                if r == 0 {
                    projector_onto(psi)
                } else if r == target {
                    shift(n + 1, j + 1)
                } else {
                    CM::identity(d as usize, d as usize)
                }
            })
            .collect();
        total += kron_all(&factors);
    }
    total
}

/// Dense unitary of the whole schedule.
pub fn schedule_matrix(setup: &MeasurementSetup) -> CM {
    let dim = setup.layout().total_dim() as usize;
    let mut u = CM::identity(dim, dim);
    for m in setup.schedule() {
        u = measurement_matrix(setup, &setup.observables()[m.observable], m.pointer) * u;
    }
    u
}

pub fn rank(vectors: &[CV], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = CM::from_columns(vectors);
    m.singular_values().iter().filter(|&&s| s > tol).count()
}

pub fn basis_vector(dim: usize, i: usize) -> CV {
    let mut v = CV::zeros(dim);
    v[i] = c(1.0, 0.0);
    v
}

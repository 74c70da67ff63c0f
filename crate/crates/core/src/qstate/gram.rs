use num_complex::Complex64;

use super::state::{inner_product, StateVector};
use crate::error::Result;

/// Residual norm below which a vector is treated as linearly dependent.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Modified Gram–Schmidt with one re-orthogonalization pass.
///
/// Vectors whose residual norm after deflation falls below `rank_tol` are
/// dropped, so the output length is the numerical rank of the input.
pub fn orthonormalize(vs: &[StateVector], rank_tol: f64) -> Result<Vec<StateVector>> {
    let mut basis: Vec<StateVector> = Vec::new();
    if let Some(first) = vs.first() {
        for v in &vs[1..] {
            first.check_layout(v)?;
        }
    }
    for v in vs {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = inner_product(q, &r)?;
                if c.norm() > 0.0 {
                    r.accumulate(q, -c);
                }
            }
        }
        let n = r.norm();
        if n < rank_tol {
            continue;
        }
        basis.push(r.scaled(Complex64::new(1.0 / n, 0.0)));
    }
    Ok(basis)
}

/// `‖Π s‖²` where `Π` projects onto the span of an orthonormal `basis`.
pub fn span_weight(basis: &[StateVector], s: &StateVector) -> Result<f64> {
    let mut w = 0.0;
    for q in basis {
        w += inner_product(q, s)?.norm_sqr();
    }
    Ok(w)
}

/// `Π s` for an orthonormal `basis`.
pub fn project_onto_span(basis: &[StateVector], s: &StateVector) -> Result<StateVector> {
    let mut out = StateVector::zero(s.layout_arc().clone());
    for q in basis {
        let c = inner_product(q, s)?;
        out.accumulate(q, c);
    }
    Ok(out)
}

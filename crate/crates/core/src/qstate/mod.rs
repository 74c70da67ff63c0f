//! Sparse exact linear algebra over composite labeled bases.
//!
//! States are sparse maps from [`BasisLabel`] to complex amplitudes.
//! Operators are never stored as matrices: a [`UnitarySpec`] gives the image
//! of each basis label (and of its adjoint), and a [`Projector`] is a
//! predicate on labels. Everything iterates in label order so results are
//! reproducible bit for bit.

mod gram;
mod label;
mod macro_label;
mod matrix;
mod projector;
mod state;
mod unitary;

pub use gram::{orthonormalize, project_onto_span, span_weight, DEFAULT_RANK_TOL};
pub use label::{BasisLabel, RegisterLayout};
pub use macro_label::{DeviceReading, MacroLabel};
pub use matrix::SquareMatrix;
pub use projector::{check_partition, project, Projector};
pub use state::{inner_product, StateVector, DEFAULT_PRUNE_EPSILON};
pub use unitary::{
    apply_adjoint, apply_unitary, column_orthonormality_defect, Column, Identity, LocalUnitary,
    Permutation, Sequence, UnitarySpec,
};

pub use num_complex::Complex64;

/// `re + i·im`.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

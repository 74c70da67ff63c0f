use std::sync::Arc;

use num_complex::Complex64;

use super::label::{BasisLabel, RegisterLayout};
use super::matrix::SquareMatrix;
use super::state::StateVector;
use crate::error::{Error, Result};

/// A column of an operator: the image of one basis label.
pub type Column = Vec<(BasisLabel, Complex64)>;

/// A unitary defined by its action on basis labels.
///
/// Implementors supply both the column (`U|l⟩`) and the adjoint column
/// (`U†|l⟩`); neither is ever stored as a matrix.
pub trait UnitarySpec: Send + Sync {
    fn column(&self, label: &BasisLabel) -> Result<Column>;

    fn adjoint_column(&self, label: &BasisLabel) -> Result<Column>;

    /// Whether the implementor claims unitarity. Checked by property tests,
    /// not at runtime.
    fn declared_unitary(&self) -> bool {
        true
    }

    /// `U s`. Override when composing whole states is cheaper than columns.
    fn apply(&self, s: &StateVector) -> Result<StateVector> {
        apply_columns(s, |l| self.column(l))
    }

    /// `U† s`.
    fn apply_adjoint(&self, s: &StateVector) -> Result<StateVector> {
        apply_columns(s, |l| self.adjoint_column(l))
    }
}

impl<U: UnitarySpec + ?Sized> UnitarySpec for Arc<U> {
    fn column(&self, label: &BasisLabel) -> Result<Column> {
        (**self).column(label)
    }
    fn adjoint_column(&self, label: &BasisLabel) -> Result<Column> {
        (**self).adjoint_column(label)
    }
    fn declared_unitary(&self) -> bool {
        (**self).declared_unitary()
    }
    fn apply(&self, s: &StateVector) -> Result<StateVector> {
        (**self).apply(s)
    }
    fn apply_adjoint(&self, s: &StateVector) -> Result<StateVector> {
        (**self).apply_adjoint(s)
    }
}

impl<U: UnitarySpec + ?Sized> UnitarySpec for Box<U> {
    fn column(&self, label: &BasisLabel) -> Result<Column> {
        (**self).column(label)
    }
    fn adjoint_column(&self, label: &BasisLabel) -> Result<Column> {
        (**self).adjoint_column(label)
    }
    fn declared_unitary(&self) -> bool {
        (**self).declared_unitary()
    }
    fn apply(&self, s: &StateVector) -> Result<StateVector> {
        (**self).apply(s)
    }
    fn apply_adjoint(&self, s: &StateVector) -> Result<StateVector> {
        (**self).apply_adjoint(s)
    }
}

fn apply_columns<F>(s: &StateVector, col: F) -> Result<StateVector>
where
    F: Fn(&BasisLabel) -> Result<Column>,
{
    let mut out = StateVector::zero(s.layout_arc().clone()).with_prune_epsilon(s.prune_epsilon());
    for (label, &amp) in s.terms() {
        for (target, coef) in col(label)? {
            s.layout().check(&target)?;
            out.add_term(target, amp * coef);
        }
    }
    out.prune();
    Ok(out)
}

pub fn apply_unitary<U: UnitarySpec + ?Sized>(u: &U, s: &StateVector) -> Result<StateVector> {
    u.apply(s)
}

pub fn apply_adjoint<U: UnitarySpec + ?Sized>(u: &U, s: &StateVector) -> Result<StateVector> {
    u.apply_adjoint(s)
}

/// Largest deviation of `⟨U e_a|U e_b⟩` from `δ_ab` over the given labels.
pub fn column_orthonormality_defect<U: UnitarySpec + ?Sized>(
    u: &U,
    layout: &Arc<RegisterLayout>,
    labels: &[BasisLabel],
) -> Result<f64> {
    let cols = labels
        .iter()
        .map(|l| {
            let e = StateVector::basis(layout.clone(), l.clone())?;
            apply_unitary(u, &e)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for (i, a) in cols.iter().enumerate() {
        for (j, b) in cols.iter().enumerate().skip(i) {
            let expected = if labels[i] == labels[j] { 1.0 } else { 0.0 };
            let ip = super::state::inner_product(a, b)?;
            worst = worst.max((ip - Complex64::new(expected, 0.0)).norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl UnitarySpec for Identity {
    fn column(&self, label: &BasisLabel) -> Result<Column> {
        Ok(vec![(label.clone(), Complex64::new(1.0, 0.0))])
    }
    fn adjoint_column(&self, label: &BasisLabel) -> Result<Column> {
        self.column(label)
    }
}

type LabelMap = Arc<dyn Fn(&BasisLabel) -> Result<BasisLabel> + Send + Sync>;

/// Relabeling unitary `|l⟩ ↦ |π(l)⟩` with an explicit inverse.
#[derive(Clone)]
pub struct Permutation {
    forward: LabelMap,
    inverse: LabelMap,
}

impl Permutation {
    pub fn new<F, G>(forward: F, inverse: G) -> Self
    where
        F: Fn(&BasisLabel) -> Result<BasisLabel> + Send + Sync + 'static,
        G: Fn(&BasisLabel) -> Result<BasisLabel> + Send + Sync + 'static,
    {
        Self {
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
        }
    }
}

impl UnitarySpec for Permutation {
    fn column(&self, label: &BasisLabel) -> Result<Column> {
        Ok(vec![((self.forward)(label)?, Complex64::new(1.0, 0.0))])
    }
    fn adjoint_column(&self, label: &BasisLabel) -> Result<Column> {
        Ok(vec![((self.inverse)(label)?, Complex64::new(1.0, 0.0))])
    }
}

/// A dense matrix acting on a single register, identity elsewhere.
#[derive(Clone, Debug)]
pub struct LocalUnitary {
    register: usize,
    matrix: SquareMatrix,
    adjoint: SquareMatrix,
}

impl LocalUnitary {
    pub fn new(register: usize, matrix: SquareMatrix) -> Self {
        let adjoint = matrix.adjoint();
        Self {
            register,
            matrix,
            adjoint,
        }
    }

    fn col_of(&self, m: &SquareMatrix, label: &BasisLabel) -> Result<Column> {
        let v = *label.registers().get(self.register).ok_or_else(|| Error::OutsideDomain {
            label: label.clone(),
            reason: format!("no register {}", self.register),
        })? as usize;
        if v >= m.dim() {
            return Err(Error::OutsideDomain {
                label: label.clone(),
                reason: format!("register value {v} ≥ local dimension {}", m.dim()),
            });
        }
        Ok((0..m.dim())
            .map(|r| (r, m.get(r, v)))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .map(|(r, c)| (label.with(self.register, r as u32), c))
            .collect())
    }
}

impl UnitarySpec for LocalUnitary {
    fn column(&self, label: &BasisLabel) -> Result<Column> {
        self.col_of(&self.matrix, label)
    }
    fn adjoint_column(&self, label: &BasisLabel) -> Result<Column> {
        self.col_of(&self.adjoint, label)
    }
}

/// Product `U_k ⋯ U_1`: the first element acts first.
#[derive(Default)]
pub struct Sequence {
    steps: Vec<Box<dyn UnitarySpec>>,
}

impl Sequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn then<U: UnitarySpec + 'static>(mut self, u: U) -> Self {
        self.steps.push(Box::new(u));
        self
    }

    fn propagate(
        &self,
        label: &BasisLabel,
        order: &mut dyn Iterator<Item = &Box<dyn UnitarySpec>>,
        adjoint: bool,
    ) -> Result<Column> {
        let mut current: Column = vec![(label.clone(), Complex64::new(1.0, 0.0))];
        for u in order {
            let mut next = std::collections::BTreeMap::<BasisLabel, Complex64>::new();
            for (l, a) in &current {
                let col = if adjoint {
                    u.adjoint_column(l)?
                } else {
                    u.column(l)?
                };
                for (t, c) in col {
                    *next.entry(t).or_default() += a * c;
                }
            }
            current = next.into_iter().filter(|(_, a)| a.norm() > 0.0).collect();
        }
        Ok(current)
    }
}

impl UnitarySpec for Sequence {
    fn column(&self, label: &BasisLabel) -> Result<Column> {
        self.propagate(label, &mut self.steps.iter(), false)
    }
    fn adjoint_column(&self, label: &BasisLabel) -> Result<Column> {
        self.propagate(label, &mut self.steps.iter().rev(), true)
    }
    fn declared_unitary(&self) -> bool {
        self.steps.iter().all(|u| u.declared_unitary())
    }
    fn apply(&self, s: &StateVector) -> Result<StateVector> {
        self.steps.iter().try_fold(s.clone(), |acc, u| u.apply(&acc))
    }
    fn apply_adjoint(&self, s: &StateVector) -> Result<StateVector> {
        self.steps.iter().rev().try_fold(s.clone(), |acc, u| u.apply_adjoint(&acc))
    }
}

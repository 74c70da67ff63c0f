use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A computational basis element of a composite register space.
///
/// Each entry indexes into the matching register of a [`RegisterLayout`].
/// Ordering is lexicographic over registers, which is also the row-major
/// order used when a state is flattened to a dense vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisLabel(Vec<u32>);

impl BasisLabel {
    pub fn new(registers: Vec<u32>) -> Self {
        Self(registers)
    }

    pub fn registers(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, register: usize) -> u32 {
        self.0[register]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy of this label with one register replaced.
    pub fn with(&self, register: usize, value: u32) -> Self {
        let mut regs = self.0.clone();
        regs[register] = value;
        Self(regs)
    }

    pub fn set(&mut self, register: usize, value: u32) {
        self.0[register] = value;
    }

    /// Restriction of the label to the given registers, in the given order.
    pub fn select(&self, registers: &[usize]) -> Self {
        Self(registers.iter().map(|&r| self.0[r]).collect())
    }
}

impl From<Vec<u32>> for BasisLabel {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "⟩")
    }
}

/// Register dimensions of a composite Hilbert space `H_0 ⊗ H_1 ⊗ …`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterLayout {
    dims: Vec<u32>,
}

impl RegisterLayout {
    pub fn new(dims: Vec<u32>) -> Result<Self> {
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidParameter(format!(
                "register {pos} has dimension 0"
            )));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn num_registers(&self) -> usize {
        self.dims.len()
    }

    /// Product of register dimensions; `u128` so lattice layouts do not overflow.
    pub fn total_dim(&self) -> u128 {
        self.dims
            .iter()
            .fold(1u128, |acc, &d| acc.saturating_mul(d as u128))
    }

    pub fn contains(&self, label: &BasisLabel) -> bool {
        label.len() == self.dims.len() && label.0.iter().zip(&self.dims).all(|(v, d)| v < d)
    }

    pub fn check(&self, label: &BasisLabel) -> Result<()> {
        if self.contains(label) {
            Ok(())
        } else {
            Err(Error::LabelOutOfRange {
                label: label.clone(),
                dims: self.dims.clone(),
            })
        }
    }

    pub fn check_same(&self, other: &RegisterLayout) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LayoutMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            })
        }
    }

    /// Row-major flat index of a label (first register most significant).
    pub fn index_of(&self, label: &BasisLabel) -> u128 {
        label
            .0
            .iter()
            .zip(&self.dims)
            .fold(0u128, |acc, (&v, &d)| acc * d as u128 + v as u128)
    }

    pub fn label_at(&self, mut index: u128) -> BasisLabel {
        let mut regs = vec![0u32; self.dims.len()];
        for (slot, &d) in regs.iter_mut().zip(&self.dims).rev() {
            *slot = (index % d as u128) as u32;
            index /= d as u128;
        }
        BasisLabel(regs)
    }

    /// All labels in ascending order. Only sensible for small layouts.
    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.total_dim()).map(move |i| self.label_at(i))
    }

    /// Layout of the registers selected by `registers`, in that order.
    pub fn select(&self, registers: &[usize]) -> Result<RegisterLayout> {
        let dims = registers
            .iter()
            .map(|&r| {
                self.dims.get(r).copied().ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "register {r} out of range for {} registers",
                        self.dims.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RegisterLayout::new(dims)
    }
}

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::world::LatticeWorld;
use crate::error::{Error, Result};
use crate::qstate::{inner_product, BasisLabel, MacroLabel, StateVector};
use crate::sampling::{sample_counts, sample_indices};

/// One macro-distinct component of a state.
#[derive(Clone, Debug)]
pub struct Branch {
    pub label: MacroLabel,
    /// Normalized component.
    pub state: StateVector,
    pub weight: f64,
}

/// Splits `s` by macro label (device positions and pointer values). Branch
/// weights are relative to `‖s‖²`, so they sum to one.
pub fn branch_decompose(world: &LatticeWorld, s: &StateVector) -> Result<Vec<Branch>> {
    world.layout().check_same(s.layout())?;
    let total = s.norm_sqr();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut groups: BTreeMap<MacroLabel, Vec<(BasisLabel, Complex64)>> = BTreeMap::new();
    for (l, a) in s.terms() {
        groups.entry(world.macro_label(l)).or_default().push((l.clone(), *a));
    }
    groups
        .into_iter()
        .map(|(label, terms)| {
            let part = StateVector::from_terms(s.layout_arc().clone(), terms)?;
            let weight = part.norm_sqr() / total;
            Ok(Branch {
                label,
                state: part.normalized()?,
                weight,
            })
        })
        .collect()
}

/// Draws one branch with probability equal to its weight.
pub fn born_sample(branches: &[Branch], seed: u64) -> Result<MacroLabel> {
    let weights: Vec<f64> = branches.iter().map(|b| b.weight).collect();
    let idx = sample_indices(&weights, seed, 1)?[0];
    Ok(branches[idx].label.clone())
}

/// Counts per branch over `samples` seeded draws.
pub fn born_sample_counts(branches: &[Branch], seed: u64, samples: usize) -> Result<Vec<usize>> {
    let weights: Vec<f64> = branches.iter().map(|b| b.weight).collect();
    sample_counts(&weights, seed, samples)
}

/// `Tr(ρ_a ρ_b)` for the reduced states of `a` and `b` on `keep`.
///
/// Writing `a = Σ_r |r⟩ ⊗ |a_r⟩` over labels `r` of the traced-out registers,
/// this is `Σ_{r,r'} |⟨a_r|b_r'⟩|²`.
pub fn reduced_overlap(a: &StateVector, b: &StateVector, keep: &[usize]) -> Result<f64> {
    a.check_layout(b)?;
    let layout = a.layout();
    let rest: Vec<usize> = (0..layout.num_registers()).filter(|r| !keep.contains(r)).collect();
    let kept = std::sync::Arc::new(layout.select(keep)?);
    let split = |s: &StateVector| -> Result<Vec<StateVector>> {
        let mut groups: BTreeMap<BasisLabel, Vec<(BasisLabel, Complex64)>> = BTreeMap::new();
        for (l, amp) in s.terms() {
            groups.entry(l.select(&rest)).or_default().push((l.select(keep), *amp));
        }
        groups
            .into_values()
            .map(|t| StateVector::from_terms(kept.clone(), t))
            .collect()
    };
    let (pa, pb) = (split(a)?, split(b)?);
    let mut total = 0.0;
    for x in &pa {
        for y in &pb {
            total += inner_product(x, y)?.norm_sqr();
        }
    }
    Ok(total)
}

/// Probability that register `register` holds `value`.
pub fn register_population(s: &StateVector, register: usize, value: u32) -> f64 {
    s.terms()
        .filter(|(l, _)| l.get(register) == value)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

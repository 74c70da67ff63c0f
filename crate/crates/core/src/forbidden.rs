//! Forbidden initial states and the allowed subspace.
//!
//! Repeating a nondegenerate measurement cannot give two different results,
//! so final states `ψ_k ⊗ ζ_j ⊗ ζ_k ⊗ …` with `j ≠ k` carry records that the
//! Born rule excludes. Pulling those states back through the adjoint of the
//! schedule gives initial states that lead to them with certainty; any
//! initial state with a component along their span reaches a forbidden
//! record with nonzero probability. The allowed initial states are the
//! orthogonal complement of that span.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::measureframe::{run_schedule_range, MeasurementSetup, SYSTEM_REGISTER};
use crate::qstate::{
    apply_adjoint, apply_unitary, check_partition, inner_product, orthonormalize,
    project_onto_span, span_weight, BasisLabel, Projector, RegisterLayout, StateVector,
    DEFAULT_RANK_TOL,
};
use crate::sampling::seeded_rng;

/// Largest total dimension handled by exact subspace computations.
pub const DEFAULT_DIMENSION_BOUND: u128 = 4096;
/// Maximum number of projection times in backward enumeration.
pub const DEFAULT_DEPTH_CAP: usize = 8;
/// Overlap above which a product state counts as a witness.
pub const WITNESS_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_RANDOM_TRIALS: usize = 10_000;
pub const DEFAULT_WITNESS_SEED: u64 = 0x5eed;

/// Forbidden final states at the end of the schedule.
///
/// Every pair of consecutive scheduled measurements of the same observable
/// contributes `ψ_k ⊗ ζ_j ⊗ ζ_k` for all `j ≠ k`, with pointers measured
/// earlier ranging over all outcomes, pointers not yet used left ready, and
/// the environment over all its values. If the pair is not last in the
/// schedule, these states are carried forward through the remaining
/// measurements. `declared` states are appended as given.
pub fn forbidden_final_states(
    setup: &MeasurementSetup,
    declared: &[StateVector],
) -> Result<Vec<StateVector>> {
    let layout = setup.layout();
    let schedule = setup.schedule();
    let n = setup.n();
    let mut out = Vec::new();
    for q in 1..schedule.len() {
        let (first, second) = (schedule[q - 1], schedule[q]);
        let obs = setup.observables();
        if !obs[first.observable].same_basis(&obs[second.observable]) {
            continue;
        }
        let later_basis = &obs[second.observable].basis;
        let earlier: Vec<usize> = schedule[..q - 1].iter().map(|m| m.pointer).collect();
        let mut at_q = Vec::new();
        for j in 1..=n as u32 {
            for k in 1..=n as u32 {
                if j == k {
                    continue;
                }
                for prior in outcome_tuples(n, earlier.len()) {
                    for env in 0..setup.env_dim() {
                        let mut base = vec![0u32; layout.num_registers()];
                        for (&ptr, &v) in earlier.iter().zip(&prior) {
                            base[setup.pointer_register(ptr)] = v;
                        }
                        base[setup.pointer_register(first.pointer)] = j;
                        base[setup.pointer_register(second.pointer)] = k;
                        base[setup.env_register()] = env;
                        let psi_k = &later_basis[k as usize - 1];
                        let terms = psi_k.iter().enumerate().map(|(m, &a)| {
                            let mut l = base.clone();
                            l[SYSTEM_REGISTER] = m as u32;
                            (BasisLabel::new(l), a)
                        });
                        at_q.push(StateVector::from_terms(layout.clone(), terms)?);
                    }
                }
            }
        }
        for s in at_q {
            out.push(run_schedule_range(setup, &s, q + 1..schedule.len())?.state);
        }
    }
    for d in declared {
        layout.check_same(d.layout())?;
        out.push(d.clone());
    }
    Ok(out)
}

fn outcome_tuples(n: usize, len: usize) -> Vec<Vec<u32>> {
    let mut tuples = vec![Vec::new()];
    for _ in 0..len {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                (1..=n as u32).map(move |v| {
                    let mut t = t.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    tuples
}

/// `U†` of the whole schedule applied to each final state.
pub fn back_propagate(
    setup: &MeasurementSetup,
    finals: &[StateVector],
) -> Result<Vec<StateVector>> {
    let u = setup.schedule_unitary(0..setup.schedule().len())?;
    finals.iter().map(|f| apply_adjoint(&u, f)).collect()
}

/// Projection onto a family of macro cells after `after` scheduled
/// measurements have completed.
#[derive(Clone, Debug)]
pub struct ProjectionPoint {
    pub after: usize,
    pub family: Vec<Projector>,
}

/// One backward path through the projection tree.
#[derive(Clone, Debug)]
pub struct PreImage {
    pub final_index: usize,
    /// Cell chosen at each projection point, in forward time order.
    pub path: Vec<usize>,
    /// Normalized initial state.
    pub state: StateVector,
    /// Product of backward projection weights: the probability that this
    /// initial state reaches the final state under forward projective evolution.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct BackwardOptions {
    pub depth_cap: usize,
    pub dimension_bound: u128,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self {
            depth_cap: DEFAULT_DEPTH_CAP,
            dimension_bound: DEFAULT_DIMENSION_BOUND,
        }
    }
}

fn check_points(
    setup: &MeasurementSetup,
    points: &[ProjectionPoint],
    opts: &BackwardOptions,
) -> Result<Vec<ProjectionPoint>> {
    if points.len() > opts.depth_cap {
        return Err(Error::DepthCapExceeded {
            cap: opts.depth_cap,
            requested: points.len(),
        });
    }
    let layout = setup.layout();
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.after);
    for p in &sorted {
        if p.after > setup.schedule().len() {
            return Err(Error::InvalidParameter(format!(
                "projection after {} measurements but the schedule has {}",
                p.after,
                setup.schedule().len()
            )));
        }
        if layout.total_dim() <= opts.dimension_bound {
            let labels: Vec<_> = layout.labels().collect();
            check_partition(&p.family, &labels)?;
        } else if p.family.is_empty() {
            return Err(Error::NotAPartition("empty projector family".into()));
        }
    }
    Ok(sorted)
}

/// Back-propagation with "unprojection" at each projection point.
///
/// Walking backward from each final state, the state is projected onto
/// every cell of the family at each projection time; each cell with nonzero
/// weight opens a branch. The full tree is enumerated, so the cost is
/// exponential in the number of projection points (bounded by
/// `opts.depth_cap`).
pub fn back_propagate_with_projections(
    setup: &MeasurementSetup,
    finals: &[StateVector],
    points: &[ProjectionPoint],
    opts: &BackwardOptions,
) -> Result<Vec<PreImage>> {
    let sorted = check_points(setup, points, opts)?;
    let total = setup.schedule().len();
    let mut out = Vec::new();
    for (fi, f) in finals.iter().enumerate() {
        // (time index, reversed path, state, weight)
        let mut frontier = vec![(total, Vec::<usize>::new(), f.normalized()?, 1.0f64)];
        for p in sorted.iter().rev() {
            let mut next = Vec::new();
            for (t, path, s, w) in frontier {
                let back = apply_adjoint(&setup.schedule_unitary(p.after..t)?, &s)?;
                for (ci, cell) in p.family.iter().enumerate() {
                    let kept = cell.apply(&back);
                    let cw = kept.norm_sqr();
                    let eps = s.prune_epsilon();
                    if cw <= eps * eps || kept.is_empty() {
                        continue;
                    }
                    let mut path = path.clone();
                    path.push(ci);
                    next.push((p.after, path, kept.normalized()?, w * cw));
                }
            }
            frontier = next;
        }
        for (t, mut path, s, w) in frontier {
            path.reverse();
            let state = apply_adjoint(&setup.schedule_unitary(0..t)?, &s)?;
            out.push(PreImage {
                final_index: fi,
                path,
                state,
                weight: w,
            });
        }
    }
    Ok(out)
}

/// Probability that `initial` ends in `target` under the schedule with
/// projective collapse at each projection point, summed over all branches.
pub fn forward_transition_probability(
    setup: &MeasurementSetup,
    initial: &StateVector,
    points: &[ProjectionPoint],
    target: &StateVector,
    opts: &BackwardOptions,
) -> Result<f64> {
    let sorted = check_points(setup, points, opts)?;
    let total = setup.schedule().len();
    let mut frontier = vec![(0usize, initial.normalized()?, 1.0f64)];
    for p in &sorted {
        let mut next = Vec::new();
        for (t, s, w) in frontier {
            let fwd = apply_unitary(&setup.schedule_unitary(t..p.after)?, &s)?;
            for cell in &p.family {
                let kept = cell.apply(&fwd);
                let cw = kept.norm_sqr();
                if kept.is_empty() || cw <= 0.0 {
                    continue;
                }
                next.push((p.after, kept.normalized()?, w * cw));
            }
        }
        frontier = next;
    }
    let target = target.normalized()?;
    let mut prob = 0.0;
    for (t, s, w) in frontier {
        let fin = apply_unitary(&setup.schedule_unitary(t..total)?, &s)?;
        prob += w * inner_product(&target, &fin)?.norm_sqr();
    }
    Ok(prob)
}

/// Macro cells given by the joint values of the listed pointers.
pub fn pointer_partition(setup: &MeasurementSetup, pointers: &[usize]) -> Vec<Projector> {
    let regs: Vec<usize> = pointers.iter().map(|&p| setup.pointer_register(p)).collect();
    let dims: Vec<u32> = pointers.iter().map(|&p| setup.pointer_dims()[p]).collect();
    let mut cells = vec![Vec::<u32>::new()];
    for d in dims {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                (0..d).map(move |v| {
                    let mut c = c.clone();
                    c.push(v);
                    c
                })
            })
            .collect();
    }
    cells
        .into_iter()
        .map(|values| {
            let regs = regs.clone();
            Projector::new(format!("pointers={values:?}"), move |l: &BasisLabel| {
                regs.iter().zip(&values).all(|(&r, &v)| l.get(r) == v)
            })
        })
        .collect()
}

/// Forbidden span and the dimension of its orthogonal complement.
#[derive(Clone, Debug)]
pub struct SubspaceReport {
    pub layout: Arc<RegisterLayout>,
    pub forbidden_basis: Vec<StateVector>,
    pub forbidden_dim: usize,
    pub allowed_dim: u128,
    pub total_dim: u128,
}

impl SubspaceReport {
    /// `‖Π_forbidden s‖²`.
    pub fn forbidden_overlap(&self, s: &StateVector) -> Result<f64> {
        span_weight(&self.forbidden_basis, s)
    }

    /// Component of `s` in the allowed subspace (unnormalized).
    pub fn project_allowed(&self, s: &StateVector) -> Result<StateVector> {
        let forbidden_part = project_onto_span(&self.forbidden_basis, s)?;
        s.add_scaled(&forbidden_part, Complex64::new(-1.0, 0.0))
    }

    /// Explicit orthonormal basis of the allowed subspace.
    pub fn allowed_basis(&self) -> Result<Vec<StateVector>> {
        let mut candidates = self.forbidden_basis.clone();
        for label in self.layout.labels() {
            candidates.push(StateVector::basis(self.layout.clone(), label)?);
        }
        let full = orthonormalize(&candidates, DEFAULT_RANK_TOL)?;
        Ok(full[self.forbidden_dim..].to_vec())
    }
}

/// Orthonormalizes the forbidden initial states and reports the codimension.
pub fn allowed_subspace(
    setup: &MeasurementSetup,
    forbidden_initials: &[StateVector],
    dimension_bound: u128,
) -> Result<SubspaceReport> {
    let layout = setup.layout();
    let total_dim = layout.total_dim();
    if total_dim > dimension_bound {
        return Err(Error::DimensionTooLarge {
            dim: total_dim,
            bound: dimension_bound,
        });
    }
    for s in forbidden_initials {
        layout.check_same(s.layout())?;
    }
    let basis = orthonormalize(forbidden_initials, DEFAULT_RANK_TOL)?;
    let forbidden_dim = basis.len();
    Ok(SubspaceReport {
        layout,
        forbidden_dim,
        allowed_dim: total_dim - forbidden_dim as u128,
        total_dim,
        forbidden_basis: basis,
    })
}

/// Orthonormal basis of `U · span(vectors)` where `U` is scheduled
/// measurements `range`.
pub fn evolve_span(
    setup: &MeasurementSetup,
    vectors: &[StateVector],
    range: std::ops::Range<usize>,
) -> Result<Vec<StateVector>> {
    let u = setup.schedule_unitary(range)?;
    let moved = vectors
        .iter()
        .map(|v| apply_unitary(&u, v))
        .collect::<Result<Vec<_>>>()?;
    orthonormalize(&moved, DEFAULT_RANK_TOL)
}

/// A product state `system ⊗ rest` with weight on the forbidden span.
#[derive(Clone, Debug)]
pub struct SIWitness {
    /// Registers in the first factor, in layout order.
    pub group: Vec<usize>,
    pub system_state: StateVector,
    pub env_state: StateVector,
    pub forbidden_overlap: f64,
}

impl SIWitness {
    /// The witness as a state on the full layout.
    pub fn product_state(&self, layout: &Arc<RegisterLayout>) -> Result<StateVector> {
        embed_product(layout, &self.group, &self.system_state, &self.env_state)
    }
}

#[derive(Clone, Debug)]
pub struct WitnessOptions {
    pub random_trials: usize,
    pub seed: u64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            random_trials: DEFAULT_RANDOM_TRIALS,
            seed: DEFAULT_WITNESS_SEED,
        }
    }
}

fn complement(num_registers: usize, group: &[usize]) -> Vec<usize> {
    (0..num_registers).filter(|r| !group.contains(r)).collect()
}

fn embed_product(
    layout: &Arc<RegisterLayout>,
    group: &[usize],
    first: &StateVector,
    second: &StateVector,
) -> Result<StateVector> {
    let rest = complement(layout.num_registers(), group);
    let mut terms = Vec::with_capacity(first.len() * second.len());
    for (la, a) in first.terms() {
        for (lb, b) in second.terms() {
            let mut regs = vec![0u32; layout.num_registers()];
            for (&r, &v) in group.iter().zip(la.registers()) {
                regs[r] = v;
            }
            for (&r, &v) in rest.iter().zip(lb.registers()) {
                regs[r] = v;
            }
            terms.push((BasisLabel::new(regs), a * b));
        }
    }
    StateVector::from_terms(layout.clone(), terms)
}

fn random_state<R: Rng>(layout: &Arc<RegisterLayout>, rng: &mut R) -> Result<StateVector> {
    let terms: Vec<_> = layout
        .labels()
        .map(|l| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            (l, Complex64::new(re, im))
        })
        .collect();
    StateVector::from_terms(layout.clone(), terms)?.normalized()
}

/// Searches for a product state `ψ ⊗ ε` across the split `group | rest`
/// that overlaps the forbidden span by more than [`WITNESS_THRESHOLD`].
///
/// Computational basis labels are scanned first, in label order; then
/// `opts.random_trials` seeded random product states.
pub fn si_witness(
    report: &SubspaceReport,
    group: &[usize],
    opts: &WitnessOptions,
) -> Result<Option<SIWitness>> {
    let layout = &report.layout;
    let mut group = group.to_vec();
    group.sort_unstable();
    group.dedup();
    let rest = complement(layout.num_registers(), &group);
    if group.is_empty() || rest.is_empty() || group.iter().any(|&r| r >= layout.num_registers()) {
        return Err(Error::InvalidParameter(
            "factor split must divide the registers into two nonempty groups".into(),
        ));
    }
    if report.forbidden_basis.is_empty() {
        return Ok(None);
    }
    let first_layout = Arc::new(layout.select(&group)?);
    let second_layout = Arc::new(layout.select(&rest)?);

    for label in layout.labels() {
        let overlap: f64 = report
            .forbidden_basis
            .iter()
            .map(|q| q.amplitude(&label).norm_sqr())
            .sum();
        if overlap > WITNESS_THRESHOLD {
            return Ok(Some(SIWitness {
                system_state: StateVector::basis(first_layout.clone(), label.select(&group))?,
                env_state: StateVector::basis(second_layout.clone(), label.select(&rest))?,
                group,
                forbidden_overlap: overlap,
            }));
        }
    }

    let mut rng = seeded_rng(opts.seed);
    for _ in 0..opts.random_trials {
        let a = random_state(&first_layout, &mut rng)?;
        let b = random_state(&second_layout, &mut rng)?;
        let product = embed_product(layout, &group, &a, &b)?;
        let overlap = report.forbidden_overlap(&product)?;
        if overlap > WITNESS_THRESHOLD {
            return Ok(Some(SIWitness {
                group,
                system_state: a,
                env_state: b,
                forbidden_overlap: overlap,
            }));
        }
    }
    Ok(None)
}

/// Normalized random state on the given layout (seeded Gaussian amplitudes).
pub fn random_state_seeded(layout: &Arc<RegisterLayout>, seed: u64) -> Result<StateVector> {
    random_state(layout, &mut seeded_rng(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measureframe::Observable;

    fn repeated(n: usize) -> MeasurementSetup {
        let a = Observable::computational(n);
        MeasurementSetup::sequential(n, vec![a.clone(), a], 1).unwrap()
    }

    #[test]
    fn forbidden_final_counts() {
        assert_eq!(forbidden_final_states(&repeated(2), &[]).unwrap().len(), 2);
        assert_eq!(forbidden_final_states(&repeated(3), &[]).unwrap().len(), 6);
        let generic = MeasurementSetup::sequential(
            2,
            vec![Observable::computational(2), Observable::rotated_qubit(0.3)],
            1,
        )
        .unwrap();
        assert!(forbidden_final_states(&generic, &[]).unwrap().is_empty());
    }

    #[test]
    fn back_propagate_empty() {
        assert!(back_propagate(&repeated(2), &[]).unwrap().is_empty());
    }

    #[test]
    fn allowed_dims_for_repeated_qubit() {
        let setup = repeated(2);
        let finals = forbidden_final_states(&setup, &[]).unwrap();
        let initials = back_propagate(&setup, &finals).unwrap();
        let report = allowed_subspace(&setup, &initials, DEFAULT_DIMENSION_BOUND).unwrap();
        assert_eq!(report.total_dim, 18);
        assert_eq!(report.forbidden_dim, 2);
        assert_eq!(report.allowed_dim, 16);

        let mut doubled = initials.clone();
        doubled.extend(initials.iter().cloned());
        let again = allowed_subspace(&setup, &doubled, DEFAULT_DIMENSION_BOUND).unwrap();
        assert_eq!(again.forbidden_dim, 2);

        let none = allowed_subspace(&setup, &[], DEFAULT_DIMENSION_BOUND).unwrap();
        assert_eq!(none.allowed_dim, 18);
        assert_eq!(report.allowed_basis().unwrap().len(), 16);
    }

    #[test]
    fn dimension_bound_enforced() {
        let setup = repeated(2);
        assert!(matches!(
            allowed_subspace(&setup, &[], 10),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn witness_none_for_empty_span_and_bad_split() {
        let setup = repeated(2);
        let report = allowed_subspace(&setup, &[], DEFAULT_DIMENSION_BOUND).unwrap();
        assert!(si_witness(&report, &[0], &WitnessOptions::default()).unwrap().is_none());
        assert!(si_witness(&report, &[], &WitnessOptions::default()).is_err());
        assert!(si_witness(&report, &[0, 1, 2, 3], &WitnessOptions::default()).is_err());
    }

    #[test]
    fn non_partition_rejected() {
        let setup = repeated(2);
        let finals = forbidden_final_states(&setup, &[]).unwrap();
        let bad = ProjectionPoint {
            after: 1,
            family: vec![Projector::register_equals(1, 1)],
        };
        assert!(matches!(
            back_propagate_with_projections(&setup, &finals, &[bad], &BackwardOptions::default()),
            Err(Error::NotAPartition(_))
        ));
    }

    #[test]
    fn depth_cap_enforced() {
        let setup = repeated(2);
        let points: Vec<_> = (0..3)
            .map(|_| ProjectionPoint {
                after: 1,
                family: vec![Projector::identity()],
            })
            .collect();
        let opts = BackwardOptions {
            depth_cap: 2,
            ..Default::default()
        };
        assert!(matches!(
            back_propagate_with_projections(&setup, &[], &points, &opts),
            Err(Error::DepthCapExceeded { .. })
        ));
    }
}

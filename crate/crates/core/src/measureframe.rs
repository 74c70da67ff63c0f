//! Sequential ideal measurements of a finite-dimensional system.
//!
//! The composite space is `H_S ⊗ H_P0 ⊗ … ⊗ H_P(k-1) ⊗ H_E`: register 0 is
//! the observed system (dimension `n`), then one register of dimension
//! `n + 1` per pointer (value 0 is "ready", value `j` records outcome `j`),
//! then an inert environment register.
//!
//! A measurement of observable `A` with pointer `P` is the unitary
//! `Σ_j |ψ_j⟩⟨ψ_j| ⊗ X_P^j` where `X_P` shifts the pointer cyclically and
//! outcomes are numbered `1..=n`. On a ready pointer it produces the usual
//! entangled superposition `Σ_j ⟨ψ_j|ψ⟩ ψ_j ⊗ ζ_j`; on a non-ready pointer it
//! still acts, and the violation is reported as a [`Diagnostic`].

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{
    apply_unitary, BasisLabel, Column, RegisterLayout, Sequence, StateVector, UnitarySpec,
};

/// Register index of the observed system.
pub const SYSTEM_REGISTER: usize = 0;

const ORTHONORMAL_TOL: f64 = 1e-12;

/// A nondegenerate observable, given by its orthonormal eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    /// `basis[j]` is the eigenvector for outcome `j + 1`, in system coordinates.
    pub basis: Vec<Vec<Complex64>>,
    /// Eigenvalues; defaults to `1..=n`. Must be pairwise distinct.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
}

impl Observable {
    pub fn new(basis: Vec<Vec<Complex64>>) -> Self {
        Self {
            basis,
            eigenvalues: None,
        }
    }

    pub fn computational(n: usize) -> Self {
        Self::new(
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|i| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                        .collect()
                })
                .collect(),
        )
    }

    /// Two-dimensional basis rotated by `theta` from the computational one.
    pub fn rotated_qubit(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(vec![
            vec![Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
            vec![Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    pub fn with_eigenvalues(mut self, eigenvalues: Vec<f64>) -> Self {
        self.eigenvalues = Some(eigenvalues);
        self
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `⟨ψ_j|v⟩` for every eigenvector.
    pub fn coefficients(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.basis
            .iter()
            .map(|e| e.iter().zip(v).map(|(a, b)| a.conj() * b).sum())
            .collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.basis.len() != n || self.basis.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidSetup(format!(
                "eigenbasis must hold {n} vectors of {n} components"
            )));
        }
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate().skip(i) {
                let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (ip - Complex64::new(want, 0.0)).norm() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidSetup(format!(
                        "eigenbasis not orthonormal: ⟨ψ_{}|ψ_{}⟩ = {ip}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if let Some(ev) = &self.eigenvalues {
            if ev.len() != n {
                return Err(Error::InvalidSetup(format!("expected {n} eigenvalues")));
            }
            for (i, a) in ev.iter().enumerate() {
                if ev[i + 1..].iter().any(|b| (a - b).abs() <= ORTHONORMAL_TOL) {
                    return Err(Error::InvalidSetup(
                        "degenerate observable: repeated eigenvalue".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Same eigenvectors in the same order, up to a phase on each.
    pub fn same_basis(&self, other: &Observable) -> bool {
        self.dim() == other.dim()
            && self.basis.iter().zip(&other.basis).all(|(a, b)| {
                let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                (ip.norm() - 1.0).abs() <= ORTHONORMAL_TOL
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledMeasurement {
    pub time: u32,
    pub observable: usize,
    pub pointer: usize,
}

/// Observed system, observables, pointers, environment and schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetup {
    n: usize,
    pointer_dims: Vec<u32>,
    observables: Vec<Observable>,
    env_dim: u32,
    schedule: Vec<ScheduledMeasurement>,
}

impl MeasurementSetup {
    /// Validates and builds a setup. The schedule is stored sorted by time.
    pub fn new(
        n: usize,
        pointer_dims: Vec<u32>,
        observables: Vec<Observable>,
        env_dim: u32,
        mut schedule: Vec<ScheduledMeasurement>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSetup("system dimension must be ≥ 1".into()));
        }
        if env_dim == 0 {
            return Err(Error::InvalidSetup("environment dimension must be ≥ 1".into()));
        }
        if let Some(d) = pointer_dims.iter().find(|&&d| d as usize != n + 1) {
            return Err(Error::InvalidSetup(format!(
                "pointer dimension {d} must equal n + 1 = {}",
                n + 1
            )));
        }
        for o in &observables {
            o.validate(n)?;
        }
        schedule.sort_by_key(|m| m.time);
        let mut used = vec![false; pointer_dims.len()];
        for m in &schedule {
            if m.observable >= observables.len() {
                return Err(Error::InvalidSetup(format!(
                    "schedule references unknown observable {}",
                    m.observable
                )));
            }
            match used.get_mut(m.pointer) {
                None => {
                    return Err(Error::InvalidSetup(format!(
                        "schedule references unknown pointer {}",
                        m.pointer
                    )))
                }
                Some(true) => {
                    return Err(Error::InvalidSetup(format!(
                        "pointer {} is used by more than one measurement",
                        m.pointer
                    )))
                }
                Some(u) => *u = true,
            }
        }
        Ok(Self {
            n,
            pointer_dims,
            observables,
            env_dim,
            schedule,
        })
    }

    /// `k` pointers and a schedule measuring `observables[i]` with pointer `i`
    /// at time `i`, in order.
    pub fn sequential(n: usize, observables: Vec<Observable>, env_dim: u32) -> Result<Self> {
        let k = observables.len();
        let schedule = (0..k)
            .map(|i| ScheduledMeasurement {
                time: i as u32,
                observable: i,
                pointer: i,
            })
            .collect();
        Self::new(n, vec![n as u32 + 1; k], observables, env_dim, schedule)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pointer_dims(&self) -> &[u32] {
        &self.pointer_dims
    }

    pub fn num_pointers(&self) -> usize {
        self.pointer_dims.len()
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn env_dim(&self) -> u32 {
        self.env_dim
    }

    pub fn schedule(&self) -> &[ScheduledMeasurement] {
        &self.schedule
    }

    pub fn pointer_register(&self, pointer: usize) -> usize {
        1 + pointer
    }

    pub fn env_register(&self) -> usize {
        1 + self.pointer_dims.len()
    }

    pub fn layout(&self) -> Arc<RegisterLayout> {
        let mut dims = Vec::with_capacity(self.pointer_dims.len() + 2);
        dims.push(self.n as u32);
        dims.extend_from_slice(&self.pointer_dims);
        dims.push(self.env_dim);
        Arc::new(RegisterLayout::new(dims).expect("validated dimensions are nonzero"))
    }

    /// `system ⊗ ζ_0 ⊗ … ⊗ ζ_0 ⊗ e_0`.
    pub fn prepare(&self, system: &[Complex64]) -> Result<StateVector> {
        if system.len() != self.n {
            return Err(Error::InvalidSetup(format!(
                "system vector has {} components, expected {}",
                system.len(),
                self.n
            )));
        }
        let regs = self.pointer_dims.len() + 2;
        let terms = system.iter().enumerate().map(|(i, &a)| {
            let mut l = vec![0u32; regs];
            l[SYSTEM_REGISTER] = i as u32;
            (BasisLabel::new(l), a)
        });
        StateVector::from_terms(self.layout(), terms)
    }

    /// The measurement unitary for one (observable, pointer) pair.
    pub fn measurement_unitary(&self, obs_idx: usize, ptr_idx: usize) -> Result<MeasurementUnitary> {
        let obs = self.observables.get(obs_idx).ok_or_else(|| {
            Error::InvalidSetup(format!("unknown observable {obs_idx}"))
        })?;
        if ptr_idx >= self.pointer_dims.len() {
            return Err(Error::InvalidSetup(format!("unknown pointer {ptr_idx}")));
        }
        Ok(MeasurementUnitary {
            n: self.n,
            basis: obs.basis.clone(),
            pointer_register: self.pointer_register(ptr_idx),
        })
    }

    /// Scheduled measurements `range` composed in time order.
    pub fn schedule_unitary(&self, range: std::ops::Range<usize>) -> Result<Sequence> {
        let mut seq = Sequence::new();
        for m in &self.schedule[range] {
            seq = seq.then(self.measurement_unitary(m.observable, m.pointer)?);
        }
        Ok(seq)
    }
}

/// `Σ_j |ψ_j⟩⟨ψ_j| ⊗ X^j` on (system, pointer), identity elsewhere.
#[derive(Clone, Debug)]
pub struct MeasurementUnitary {
    n: usize,
    basis: Vec<Vec<Complex64>>,
    pointer_register: usize,
}

impl MeasurementUnitary {
    fn column_with_shift(&self, label: &BasisLabel, sign: i64) -> Result<Column> {
        let i = label.get(SYSTEM_REGISTER) as usize;
        let p = label.get(self.pointer_register) as i64;
        let modulus = self.n as i64 + 1;
        if i >= self.n || p >= modulus {
            return Err(Error::OutsideDomain {
                label: label.clone(),
                reason: "system or pointer value out of range".into(),
            });
        }
        let mut acc: BTreeMap<BasisLabel, Complex64> = BTreeMap::new();
        for (j, psi) in self.basis.iter().enumerate() {
            let overlap = psi[i].conj();
            if overlap == Complex64::new(0.0, 0.0) {
                continue;
            }
            let shifted = (p + sign * (j as i64 + 1)).rem_euclid(modulus) as u32;
            for (m, &amp) in psi.iter().enumerate() {
                if amp == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut target = label.with(self.pointer_register, shifted);
                target.set(SYSTEM_REGISTER, m as u32);
                *acc.entry(target).or_default() += overlap * amp;
            }
        }
        Ok(acc.into_iter().filter(|(_, a)| a.norm() > 0.0).collect())
    }
}

impl UnitarySpec for MeasurementUnitary {
    fn column(&self, label: &BasisLabel) -> Result<Column> {
        self.column_with_shift(label, 1)
    }
    fn adjoint_column(&self, label: &BasisLabel) -> Result<Column> {
        self.column_with_shift(label, -1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Diagnostic {
    /// A measurement acted on a pointer that was not ready on part of the
    /// state; `weight` is the squared norm of that part.
    DisturbingPrecondition { pointer: usize, time: Option<u32>, weight: f64 },
}

#[derive(Clone, Debug)]
pub struct Evolved {
    pub state: StateVector,
    pub diagnostics: Vec<Diagnostic>,
}

/// One ideal measurement of `obs_idx` recorded by pointer `ptr_idx`.
pub fn measure_step(
    setup: &MeasurementSetup,
    s: &StateVector,
    obs_idx: usize,
    ptr_idx: usize,
) -> Result<Evolved> {
    setup.layout().check_same(s.layout())?;
    let u = setup.measurement_unitary(obs_idx, ptr_idx)?;
    let reg = setup.pointer_register(ptr_idx);
    let not_ready: f64 = s
        .terms()
        .filter(|(l, _)| l.get(reg) != 0)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let mut diagnostics = Vec::new();
    if not_ready > 0.0 {
        diagnostics.push(Diagnostic::DisturbingPrecondition {
            pointer: ptr_idx,
            time: None,
            weight: not_ready,
        });
    }
    Ok(Evolved {
        state: apply_unitary(&u, s)?,
        diagnostics,
    })
}

/// Runs every scheduled measurement in time order.
pub fn run_schedule(setup: &MeasurementSetup, initial: &StateVector) -> Result<Evolved> {
    run_schedule_range(setup, initial, 0..setup.schedule.len())
}

pub fn run_schedule_range(
    setup: &MeasurementSetup,
    initial: &StateVector,
    range: std::ops::Range<usize>,
) -> Result<Evolved> {
    let mut state = initial.clone();
    let mut diagnostics = Vec::new();
    for m in &setup.schedule[range] {
        let step = measure_step(setup, &state, m.observable, m.pointer)?;
        state = step.state;
        diagnostics.extend(step.diagnostics.into_iter().map(|d| match d {
            Diagnostic::DisturbingPrecondition { pointer, weight, .. } => {
                Diagnostic::DisturbingPrecondition {
                    pointer,
                    time: Some(m.time),
                    weight,
                }
            }
        }));
    }
    Ok(Evolved { state, diagnostics })
}

/// Joint outcome probabilities keyed by the pointer values of the scheduled
/// measurements, in schedule order. Outcome `j` is pointer value `j`; a value
/// of 0 means the pointer still reads "ready".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub probabilities: BTreeMap<Vec<u32>, f64>,
}

impl OutcomeDistribution {
    pub fn get(&self, outcome: &[u32]) -> f64 {
        self.probabilities.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.values().sum()
    }

    /// Probability that the measurement at `position` in the schedule gave `value`.
    pub fn marginal(&self, position: usize, value: u32) -> f64 {
        self.probabilities
            .iter()
            .filter(|(k, _)| k[position] == value)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn outcomes(&self) -> Vec<Vec<u32>> {
        self.probabilities.keys().cloned().collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.probabilities.values().copied().collect()
    }
}

pub fn outcome_distribution(final_state: &StateVector, setup: &MeasurementSetup) -> OutcomeDistribution {
    let regs: Vec<usize> = setup
        .schedule
        .iter()
        .map(|m| setup.pointer_register(m.pointer))
        .collect();
    let mut probabilities = BTreeMap::new();
    for (label, amp) in final_state.terms() {
        let key: Vec<u32> = regs.iter().map(|&r| label.get(r)).collect();
        *probabilities.entry(key).or_insert(0.0) += amp.norm_sqr();
    }
    OutcomeDistribution { probabilities }
}

/// Two spin-½ particles measured jointly along directions `a_angle` and
/// `b_angle` in the x–z plane, as one nondegenerate observable on the
/// 4-dimensional system.
///
/// System index is `2·s_a + s_b` with `s = 0` for spin up along z. Outcomes:
/// 1 = (↑,↑), 2 = (↑,↓), 3 = (↓,↑), 4 = (↓,↓), relative to each direction.
pub fn epr_setup(a_angle: f64, b_angle: f64) -> MeasurementSetup {
    let spin = |theta: f64| {
        let (s, c) = (theta / 2.0).sin_cos();
        [[c, s], [-s, c]]
    };
    let (sa, sb) = (spin(a_angle), spin(b_angle));
    let mut basis = Vec::with_capacity(4);
    for ua in &sa {
        for ub in &sb {
            basis.push(
                (0..4)
                    .map(|idx| Complex64::new(ua[idx / 2] * ub[idx % 2], 0.0))
                    .collect(),
            );
        }
    }
    let observable = Observable::new(basis).with_eigenvalues(vec![1.0, 2.0, 3.0, 4.0]);
    MeasurementSetup::sequential(4, vec![observable], 1).expect("product spin bases are orthonormal")
}

/// `(|↑↓⟩ − |↓↑⟩)/√2` in the z basis.
pub fn singlet_system() -> Vec<Complex64> {
    vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(-FRAC_1_SQRT_2, 0.0),
        Complex64::new(0.0, 0.0),
    ]
}

/// Outcomes 1 and 4 (both spins along their axis, or both against).
pub fn epr_parallel_probability(dist: &OutcomeDistribution) -> f64 {
    dist.get(&[1]) + dist.get(&[4])
}

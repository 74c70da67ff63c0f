use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::label::{BasisLabel, RegisterLayout};
use crate::error::{Error, Result};

/// Amplitudes with modulus at or below this are dropped.
pub const DEFAULT_PRUNE_EPSILON: f64 = 1e-14;

/// Sparse exact state vector: basis label → complex amplitude.
///
/// Terms are kept in a `BTreeMap` so iteration is in label order and every
/// reduction over terms happens in the same order on every run.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: Arc<RegisterLayout>,
    terms: BTreeMap<BasisLabel, Complex64>,
    prune_epsilon: f64,
}

impl StateVector {
    pub fn zero(layout: Arc<RegisterLayout>) -> Self {
        Self {
            layout,
            terms: BTreeMap::new(),
            prune_epsilon: DEFAULT_PRUNE_EPSILON,
        }
    }

    pub fn basis(layout: Arc<RegisterLayout>, label: BasisLabel) -> Result<Self> {
        Self::from_terms(layout, [(label, Complex64::new(1.0, 0.0))])
    }

    /// Builds a state from (label, amplitude) pairs. Repeated labels accumulate.
    pub fn from_terms<I>(layout: Arc<RegisterLayout>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisLabel, Complex64)>,
    {
        let mut s = Self::zero(layout);
        for (label, amp) in terms {
            s.layout.check(&label)?;
            *s.terms.entry(label).or_default() += amp;
        }
        s.prune();
        Ok(s)
    }

    /// Dense vector in row-major label order.
    pub fn from_dense(layout: Arc<RegisterLayout>, amps: &[Complex64]) -> Result<Self> {
        if amps.len() as u128 != layout.total_dim() {
            return Err(Error::InvalidParameter(format!(
                "dense vector has length {} but layout dimension is {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        let terms: Vec<_> = amps
            .iter()
            .enumerate()
            .map(|(i, &a)| (layout.label_at(i as u128), a))
            .collect();
        Self::from_terms(layout, terms)
    }

    pub fn with_prune_epsilon(mut self, eps: f64) -> Self {
        self.prune_epsilon = eps.max(0.0);
        self.prune();
        self
    }

    pub fn prune_epsilon(&self) -> f64 {
        self.prune_epsilon
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn layout_arc(&self) -> &Arc<RegisterLayout> {
        &self.layout
    }

    pub fn check_layout(&self, other: &StateVector) -> Result<()> {
        self.layout.check_same(&other.layout)
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        self.terms.get(label).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisLabel, &Complex64)> {
        self.terms.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &BasisLabel> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= self.prune_epsilon || n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.terms.values_mut() {
            *a *= factor;
        }
        out.prune();
        out
    }

    /// `self + factor · other`.
    pub fn add_scaled(&self, other: &StateVector, factor: Complex64) -> Result<Self> {
        self.check_layout(other)?;
        let mut out = self.clone();
        out.accumulate(other, factor);
        Ok(out)
    }

    pub(crate) fn accumulate(&mut self, other: &StateVector, factor: Complex64) {
        for (label, &a) in &other.terms {
            *self.terms.entry(label.clone()).or_default() += factor * a;
        }
        self.prune();
    }

    pub(crate) fn add_term(&mut self, label: BasisLabel, amp: Complex64) {
        *self.terms.entry(label).or_default() += amp;
    }

    /// Drops amplitudes with modulus ≤ `prune_epsilon`.
    pub fn prune(&mut self) {
        let eps = self.prune_epsilon;
        self.terms.retain(|_, a| a.norm() > eps);
    }

    /// Keeps only the terms for which `keep` is true (unnormalized).
    pub fn filter<F: Fn(&BasisLabel) -> bool>(&self, keep: F) -> Self {
        Self {
            layout: self.layout.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(l, _)| keep(l))
                .map(|(l, a)| (l.clone(), *a))
                .collect(),
            prune_epsilon: self.prune_epsilon,
        }
    }

    /// Dense amplitudes, row-major. Rejected above `bound` entries.
    pub fn to_dense(&self, bound: u128) -> Result<Vec<Complex64>> {
        let dim = self.layout.total_dim();
        if dim > bound {
            return Err(Error::DimensionTooLarge { dim, bound });
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim as usize];
        for (label, &a) in &self.terms {
            v[self.layout.index_of(label) as usize] = a;
        }
        Ok(v)
    }

    /// Largest absolute amplitude difference over the union of supports.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, a) in &self.terms {
            worst = worst.max((a - other.amplitude(l)).norm());
        }
        for (l, b) in &other.terms {
            if !self.terms.contains_key(l) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    /// Tensor product `self ⊗ other`; registers of `self` come first.
    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        let mut dims = self.layout.dims().to_vec();
        dims.extend_from_slice(other.layout.dims());
        let layout = Arc::new(RegisterLayout::new(dims)?);
        let mut out = Self::zero(layout);
        out.prune_epsilon = self.prune_epsilon.min(other.prune_epsilon);
        for (la, a) in &self.terms {
            for (lb, b) in &other.terms {
                let mut regs = la.registers().to_vec();
                regs.extend_from_slice(lb.registers());
                out.add_term(BasisLabel::new(regs), a * b);
            }
        }
        out.prune();
        Ok(out)
    }
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    a.check_layout(b)?;
    let (small, large, conj_small) = if a.len() <= b.len() {
        (a, b, true)
    } else {
        (b, a, false)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (label, &x) in &small.terms {
        if let Some(&y) = large.terms.get(label) {
            acc += if conj_small { x.conj() * y } else { y.conj() * x };
        }
    }
    Ok(acc)
}

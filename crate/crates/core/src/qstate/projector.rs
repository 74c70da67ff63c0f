use std::fmt;
use std::sync::Arc;

use super::label::BasisLabel;
use super::state::StateVector;
use crate::error::{Error, Result};

type Predicate = Arc<dyn Fn(&BasisLabel) -> bool + Send + Sync>;

/// Diagonal projector in the computational basis: keeps labels for which
/// the predicate holds.
#[derive(Clone)]
pub struct Projector {
    name: String,
    predicate: Predicate,
}

impl fmt::Debug for Projector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Projector").field("name", &self.name).finish()
    }
}

impl Projector {
    pub fn new<F>(name: impl Into<String>, predicate: F) -> Self
    where
        F: Fn(&BasisLabel) -> bool + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            predicate: Arc::new(predicate),
        }
    }

    pub fn identity() -> Self {
        Self::new("identity", |_| true)
    }

    /// Keeps labels whose `register` holds `value`.
    pub fn register_equals(register: usize, value: u32) -> Self {
        Self::new(format!("r{register}={value}"), move |l| {
            l.registers().get(register) == Some(&value)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn keeps(&self, label: &BasisLabel) -> bool {
        (self.predicate)(label)
    }

    /// `P s` without normalization.
    pub fn apply(&self, s: &StateVector) -> StateVector {
        s.filter(|l| self.keeps(l))
    }
}

/// Projects and renormalizes. Returns the normalized state and the weight
/// `‖P s‖²`. Weights at or below `prune_epsilon²` signal an impossible outcome.
pub fn project(p: &Projector, s: &StateVector) -> Result<(StateVector, f64)> {
    let kept = p.apply(s);
    let weight = kept.norm_sqr();
    let eps = s.prune_epsilon();
    if weight <= eps * eps || kept.is_empty() {
        return Err(Error::NullProjection { weight });
    }
    let normalized = kept.normalized()?;
    Ok((normalized, weight))
}

/// Checks that exactly one projector keeps each of the given labels.
pub fn check_partition<'a, I>(family: &[Projector], labels: I) -> Result<()>
where
    I: IntoIterator<Item = &'a BasisLabel>,
{
    if family.is_empty() {
        return Err(Error::NotAPartition("empty projector family".into()));
    }
    for label in labels {
        let hits = family.iter().filter(|p| p.keeps(label)).count();
        if hits != 1 {
            return Err(Error::NotAPartition(format!(
                "label {label} is kept by {hits} projectors"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::RegisterLayout;
    use num_complex::Complex64;

    fn plus() -> StateVector {
        let l = Arc::new(RegisterLayout::new(vec![3]).unwrap());
        let r = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_terms(
            l,
            [
                (BasisLabel::new(vec![0]), Complex64::new(r, 0.0)),
                (BasisLabel::new(vec![1]), Complex64::new(r, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_projection_keeps_everything() {
        let s = plus();
        let (out, w) = project(&Projector::identity(), &s).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        assert!(out.max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn projection_onto_e0() {
        let (out, w) = project(&Projector::register_equals(0, 0), &plus()).unwrap();
        assert!((w - 0.5).abs() < 1e-15);
        assert_eq!(out.len(), 1);
        assert!((out.amplitude(&BasisLabel::new(vec![0])).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_support_is_a_null_projection() {
        assert!(matches!(
            project(&Projector::register_equals(0, 2), &plus()),
            Err(Error::NullProjection { .. })
        ));
    }

    #[test]
    fn idempotent() {
        let p = Projector::register_equals(0, 1);
        let once = p.apply(&plus());
        assert_eq!(p.apply(&once), once);
    }

    #[test]
    fn partition_check() {
        let labels: Vec<_> = (0..3).map(|i| BasisLabel::new(vec![i])).collect();
        let good: Vec<_> = (0..3).map(|v| Projector::register_equals(0, v)).collect();
        assert!(check_partition(&good, &labels).is_ok());
        let overlapping = vec![Projector::identity(), Projector::register_equals(0, 1)];
        assert!(check_partition(&overlapping, &labels).is_err());
        assert!(check_partition(&good[..2], &labels).is_err());
    }
}

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::world::{LatticeWorld, ParticleKind};
use crate::error::{Error, Result};
use crate::qstate::{apply_adjoint, apply_unitary, BasisLabel, Column, MacroLabel, SquareMatrix, StateVector, UnitarySpec};

type Terms = BTreeMap<BasisLabel, Complex64>;

/// One time step of the lattice dynamics as a column-defined unitary.
///
/// Per basis label, in order:
/// 1. every coincident pair, in ascending `(id, id)` order, interacts: in the
///    pair's partner bases the target's value is shifted by the control's,
///    `b ↦ b ⊕ a` (mod the target's `m`). A measuring particle is always the
///    target when paired with a non-measuring one; otherwise the higher id is.
/// 2. with `coupling > 0`, every coincident bath–measuring pair additionally
///    undergoes a partial swap of internal values by angle `coupling · π/2`.
/// 3. each particle's internal evolution is applied.
/// 4. each particle advances `x ↦ x + v (mod L)`.
#[derive(Clone, Debug)]
pub struct LatticeStep {
    world: Arc<LatticeWorld>,
    coupling: f64,
}

impl LatticeStep {
    pub fn new(world: &LatticeWorld) -> Self {
        Self {
            world: Arc::new(world.clone()),
            coupling: 0.0,
        }
    }

    pub fn with_coupling(world: &LatticeWorld, coupling: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&coupling) || coupling.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "coupling {coupling} outside [0, 1]"
            )));
        }
        if coupling > 0.0 {
            let mut ms = world
                .particles()
                .iter()
                .filter(|p| matches!(p.kind, ParticleKind::Bath | ParticleKind::Measuring))
                .map(|p| p.m);
            if let Some(first) = ms.next() {
                if ms.any(|m| m != first) {
                    return Err(Error::InvalidWorld(
                        "bath and measuring particles must share one internal dimension".into(),
                    ));
                }
            }
        }
        Ok(Self {
            world: Arc::new(world.clone()),
            coupling,
        })
    }

    pub fn world(&self) -> &LatticeWorld {
        &self.world
    }

    fn coincident_pairs(&self, label: &BasisLabel) -> Vec<(usize, usize)> {
        let w = &self.world;
        let n = w.particles().len();
        let positions: Vec<[u32; 3]> = (0..n).map(|i| w.position(label, i)).collect();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if positions[i] == positions[j] {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// (target, control) for a coincident pair with `i < j`.
    fn roles(&self, i: usize, j: usize) -> (usize, usize) {
        let ps = self.world.particles();
        match (ps[i].kind == ParticleKind::Measuring, ps[j].kind == ParticleKind::Measuring) {
            (true, false) => (i, j),
            _ => (j, i),
        }
    }

    fn swap_pair(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        let ps = self.world.particles();
        match (ps[i].kind, ps[j].kind) {
            (ParticleKind::Measuring, ParticleKind::Bath) => Some((i, j)),
            (ParticleKind::Bath, ParticleKind::Measuring) => Some((j, i)),
            _ => None,
        }
    }

    fn bases(&self, target: usize, control: usize) -> (Option<&SquareMatrix>, Option<&SquareMatrix>) {
        let ps = self.world.particles();
        (
            ps[target].basis_for(ps[control].id),
            ps[control].basis_for(ps[target].id),
        )
    }

    fn move_label(&self, label: &BasisLabel, sign: i64) -> BasisLabel {
        let w = &self.world;
        let l = w.extent() as i64;
        let mut out = label.clone();
        for i in 0..w.particles().len() {
            let v = w.velocity(label, i);
            for (axis, r) in w.position_registers(i).into_iter().enumerate() {
                let x = label.get(r) as i64 + sign * v[axis] as i64;
                out.set(r, x.rem_euclid(l) as u32);
            }
        }
        out
    }

    fn interact(&self, mut terms: Terms, target: usize, control: usize, sign: i64) -> Terms {
        let w = &self.world;
        let (bt, bc) = self.bases(target, control);
        let (rt, rc) = (w.internal_register(target), w.internal_register(control));
        if let Some(b) = bc {
            terms = apply_local(terms, rc, &b.adjoint());
        }
        if let Some(b) = bt {
            terms = apply_local(terms, rt, &b.adjoint());
        }
        terms = apply_shift(terms, rt, rc, w.particles()[target].m, sign);
        if let Some(b) = bt {
            terms = apply_local(terms, rt, b);
        }
        if let Some(b) = bc {
            terms = apply_local(terms, rc, b);
        }
        terms
    }

    fn forward(&self, label: &BasisLabel, mut sink: Option<&mut Vec<ContactTrace>>) -> Terms {
        let w = &self.world;
        let pairs = self.coincident_pairs(label);
        let mut terms: Terms = BTreeMap::from([(label.clone(), Complex64::new(1.0, 0.0))]);
        for &(i, j) in &pairs {
            let (t, c) = self.roles(i, j);
            if let Some(sink) = sink.as_deref_mut() {
                let ps = w.particles();
                if ps[t].kind == ParticleKind::Measuring && ps[c].kind != ParticleKind::Bath {
                    record_contact(w, &terms, t, c, sink);
                }
            }
            terms = self.interact(terms, t, c, 1);
        }
        if self.coupling > 0.0 {
            let theta = self.coupling * FRAC_PI_2;
            for &(i, j) in &pairs {
                if let Some((k, b)) = self.swap_pair(i, j) {
                    terms = apply_partial_swap(terms, w.internal_register(k), w.internal_register(b), theta);
                }
            }
        }
        for (i, p) in w.particles().iter().enumerate() {
            if !p.internal_unitary.is_identity(0.0) {
                terms = apply_local(terms, w.internal_register(i), &p.internal_unitary);
            }
        }
        terms
            .into_iter()
            .map(|(l, a)| (self.move_label(&l, 1), a))
            .collect()
    }

    fn backward(&self, label: &BasisLabel) -> Terms {
        let w = &self.world;
        let moved = self.move_label(label, -1);
        let pairs = self.coincident_pairs(&moved);
        let mut terms: Terms = BTreeMap::from([(moved, Complex64::new(1.0, 0.0))]);
        for (i, p) in w.particles().iter().enumerate() {
            if !p.internal_unitary.is_identity(0.0) {
                terms = apply_local(terms, w.internal_register(i), &p.internal_unitary.adjoint());
            }
        }
        if self.coupling > 0.0 {
            let theta = self.coupling * FRAC_PI_2;
            for &(i, j) in pairs.iter().rev() {
                if let Some((k, b)) = self.swap_pair(i, j) {
                    terms = apply_partial_swap(terms, w.internal_register(k), w.internal_register(b), -theta);
                }
            }
        }
        for &(i, j) in pairs.iter().rev() {
            let (t, c) = self.roles(i, j);
            terms = self.interact(terms, t, c, -1);
        }
        terms
    }
}

fn nonzero(terms: Terms) -> Column {
    terms.into_iter().filter(|(_, a)| a.norm() > 0.0).collect()
}

impl UnitarySpec for LatticeStep {
    fn column(&self, label: &BasisLabel) -> Result<Column> {
        self.world.layout().check(label)?;
        Ok(nonzero(self.forward(label, None)))
    }

    fn adjoint_column(&self, label: &BasisLabel) -> Result<Column> {
        self.world.layout().check(label)?;
        Ok(nonzero(self.backward(label)))
    }
}

fn apply_local(terms: Terms, register: usize, m: &SquareMatrix) -> Terms {
    let mut out = Terms::new();
    for (label, amp) in terms {
        let v = label.get(register) as usize;
        for r in 0..m.dim() {
            let c = m.get(r, v);
            if c != Complex64::new(0.0, 0.0) {
                *out.entry(label.with(register, r as u32)).or_default() += amp * c;
            }
        }
    }
    out
}

fn apply_shift(terms: Terms, target: usize, control: usize, m_target: u32, sign: i64) -> Terms {
    terms
        .into_iter()
        .map(|(label, amp)| {
            let b = label.get(target) as i64;
            let a = label.get(control) as i64;
            let shifted = (b + sign * a).rem_euclid(m_target as i64) as u32;
            (label.with(target, shifted), amp)
        })
        .collect()
}

/// Rotation by `theta` in each plane `{|p,q⟩, |q,p⟩}` with `p ≠ q`
/// (pointer value first): `|hi,lo⟩ ↦ cos|hi,lo⟩ + sin|lo,hi⟩` and
/// `|lo,hi⟩ ↦ cos|lo,hi⟩ − sin|hi,lo⟩`.
fn apply_partial_swap(terms: Terms, pointer: usize, bath: usize, theta: f64) -> Terms {
    let (s, c) = theta.sin_cos();
    let mut out = Terms::new();
    for (label, amp) in terms {
        let p = label.get(pointer);
        let q = label.get(bath);
        if p == q {
            *out.entry(label).or_default() += amp;
            continue;
        }
        let swapped = label.with(pointer, q).with(bath, p);
        let sign = if p > q { 1.0 } else { -1.0 };
        *out.entry(label).or_default() += amp * c;
        *out.entry(swapped).or_default() += amp * (sign * s);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactTag {
    /// The device pointer was ready (0) at contact.
    Ideal,
    /// The device pointer was not ready at contact.
    Disturbing,
}

#[derive(Clone, Debug)]
struct ContactTrace {
    device: usize,
    observed: usize,
    tag: ContactTag,
    weight: f64,
}

fn record_contact(w: &LatticeWorld, terms: &Terms, device: usize, observed: usize, sink: &mut Vec<ContactTrace>) {
    let reg = w.internal_register(device);
    let mut by_tag: BTreeMap<ContactTag, f64> = BTreeMap::new();
    for (label, amp) in terms {
        let tag = if label.get(reg) == 0 {
            ContactTag::Ideal
        } else {
            ContactTag::Disturbing
        };
        *by_tag.entry(tag).or_default() += amp.norm_sqr();
    }
    for (tag, weight) in by_tag {
        if weight > 0.0 {
            sink.push(ContactTrace {
                device,
                observed,
                tag,
                weight,
            });
        }
    }
}

/// A measuring particle met another particle during one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventDescriptor {
    /// Time at the start of the step in which the contact happened.
    pub time: u64,
    pub device: u32,
    pub observed: u32,
    pub position: [u32; 3],
    pub device_velocity: [i8; 3],
    pub observed_velocity: [i8; 3],
    pub tag: ContactTag,
    /// Probability weight of the contributing terms.
    pub weight: f64,
    /// Macro label right after the step → device pointer value there.
    pub outcomes: BTreeMap<MacroLabel, u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatticeDiagnostic {
    /// Three or more particles shared a site; pairs were applied in
    /// ascending id order.
    MultiCoincidence { time: u64, position: [u32; 3], particles: Vec<u32> },
}

#[derive(Clone, Debug)]
pub struct ContactStep {
    pub state: StateVector,
    pub events: Vec<EventDescriptor>,
    pub diagnostics: Vec<LatticeDiagnostic>,
}

/// Free motion and contact interaction for one step.
pub fn step(world: &LatticeWorld, s: &StateVector) -> Result<StateVector> {
    world.layout().check_same(s.layout())?;
    apply_unitary(&LatticeStep::new(world), s)
}

/// One step of the adjoint dynamics.
pub fn step_back(world: &LatticeWorld, s: &StateVector) -> Result<StateVector> {
    world.layout().check_same(s.layout())?;
    apply_adjoint(&LatticeStep::new(world), s)
}

pub fn run(world: &LatticeWorld, s: &StateVector, steps: usize) -> Result<StateVector> {
    let u = LatticeStep::new(world);
    let mut state = s.clone();
    for _ in 0..steps {
        state = apply_unitary(&u, &state)?;
    }
    Ok(state)
}

/// Applies the adjoint step `steps` times.
pub fn reverse_run(world: &LatticeWorld, s: &StateVector, steps: usize) -> Result<StateVector> {
    reverse_run_with_coupling(world, s, steps, 0.0)
}

pub fn reverse_run_with_coupling(
    world: &LatticeWorld,
    s: &StateVector,
    steps: usize,
    coupling: f64,
) -> Result<StateVector> {
    world.layout().check_same(s.layout())?;
    let u = LatticeStep::with_coupling(world, coupling)?;
    let mut state = s.clone();
    for _ in 0..steps {
        state = apply_adjoint(&u, &state)?;
    }
    Ok(state)
}

/// A step with weak bath coupling: coincident bath–measuring pairs also
/// undergo a partial swap of internal values (`coupling = 1` is a full swap,
/// `0` is the plain step).
pub fn thermal_step(world: &LatticeWorld, s: &StateVector, coupling: f64) -> Result<StateVector> {
    world.layout().check_same(s.layout())?;
    if !world.has_kind(ParticleKind::Bath) {
        return Err(Error::InvalidWorld("thermal step needs bath particles".into()));
    }
    apply_unitary(&LatticeStep::with_coupling(world, coupling)?, s)
}

/// Same action as [`step`], plus the contact events of every measuring
/// particle with a non-bath partner (bath contacts are thermal, not
/// measurements). Events are merged across terms by (device, observed, site,
/// velocities, tag).
pub fn measure_contact(world: &LatticeWorld, s: &StateVector) -> Result<ContactStep> {
    measure_contact_with_coupling(world, s, 0.0)
}

pub fn measure_contact_with_coupling(
    world: &LatticeWorld,
    s: &StateVector,
    coupling: f64,
) -> Result<ContactStep> {
    world.layout().check_same(s.layout())?;
    let u = LatticeStep::with_coupling(world, coupling)?;
    let ps = world.particles();
    let mut out = StateVector::zero(s.layout_arc().clone()).with_prune_epsilon(s.prune_epsilon());
    type Key = (u32, u32, [u32; 3], [i8; 3], [i8; 3], ContactTag);
    let mut merged: BTreeMap<Key, EventDescriptor> = BTreeMap::new();
    let mut diagnostics = Vec::new();
    let mut seen_crowds = std::collections::BTreeSet::new();

    for (label, &amp) in s.terms() {
        let mut traces = Vec::new();
        let column = u.forward(label, Some(&mut traces));

        let mut crowd: BTreeMap<[u32; 3], Vec<u32>> = BTreeMap::new();
        for (i, p) in ps.iter().enumerate() {
            crowd.entry(world.position(label, i)).or_default().push(p.id);
        }
        for (pos, ids) in crowd {
            if ids.len() >= 3 && seen_crowds.insert((pos, ids.clone())) {
                diagnostics.push(LatticeDiagnostic::MultiCoincidence {
                    time: world.time(),
                    position: pos,
                    particles: ids,
                });
            }
        }

        for tr in traces {
            let key = (
                ps[tr.device].id,
                ps[tr.observed].id,
                world.position(label, tr.device),
                world.velocity(label, tr.device),
                world.velocity(label, tr.observed),
                tr.tag,
            );
            let entry = merged.entry(key).or_insert_with(|| EventDescriptor {
                time: world.time(),
                device: key.0,
                observed: key.1,
                position: key.2,
                device_velocity: key.3,
                observed_velocity: key.4,
                tag: key.5,
                weight: 0.0,
                outcomes: BTreeMap::new(),
            });
            entry.weight += tr.weight * amp.norm_sqr();
            let reg = world.internal_register(tr.device);
            for (l, c) in &column {
                if c.norm() > 0.0 {
                    entry
                        .outcomes
                        .entry(world.macro_label(l))
                        .or_insert_with(|| l.get(reg));
                }
            }
        }
        for (l, c) in column {
            out.add_term(l, amp * c);
        }
    }
    out.prune();
    Ok(ContactStep {
        state: out,
        events: merged.into_values().collect(),
        diagnostics,
    })
}

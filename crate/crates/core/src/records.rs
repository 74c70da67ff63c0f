//! Ground-truth event logs and audits of the records that pointers hold.
//!
//! A simulation logs every contact of a measuring particle. Each log entry is
//! linked to the final macro branches it contributed to by running each final
//! branch backwards and collecting its ancestors. A claim "device `d` holds
//! value `v`" read off a final branch is then checked against that branch's
//! history: the latest contact of `d` must have been made with a ready pointer
//! and produced `v`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    branch_decompose, measure_contact, measure_contact_with_coupling, reverse_run, ContactTag,
    EventDescriptor, LatticeDiagnostic, LatticeStep, LatticeWorld, Particle, ParticleKind,
    ParticleState,
};
use crate::qstate::{apply_adjoint, MacroLabel, StateVector};

/// One contact in the ground-truth history.
#[derive(Clone, Debug, PartialEq)]
pub struct LogEntry {
    pub time: u64,
    pub device: u32,
    pub observed: u32,
    pub position: [u32; 3],
    pub tag: ContactTag,
    /// Probability weight of the contributing terms.
    pub weight: f64,
    /// Final macro branch → pointer value right after this contact.
    pub outcome_by_branch: BTreeMap<MacroLabel, u32>,
}

/// Append-only, time-ordered list of contacts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    entries: Vec<LogEntry>,
}

/// Flat form of one (entry, branch) pair for line-delimited output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLogLine {
    pub time: u64,
    pub device: u32,
    pub observed: u32,
    pub tag: ContactTag,
    pub branch: MacroLabel,
    pub value: u32,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an entry; times must not decrease.
    pub fn push(&mut self, entry: LogEntry) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if entry.time < last.time {
                return Err(Error::InvalidParameter(format!(
                    "log time {} precedes {}",
                    entry.time, last.time
                )));
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every entry with an outcome on `branch`, in log order.
    pub fn for_branch<'a>(&'a self, branch: &'a MacroLabel) -> impl Iterator<Item = &'a LogEntry> {
        self.entries.iter().filter(move |e| e.outcome_by_branch.contains_key(branch))
    }

    pub fn lines(&self) -> Vec<RunLogLine> {
        self.entries
            .iter()
            .flat_map(|e| {
                e.outcome_by_branch.iter().map(move |(branch, &value)| RunLogLine {
                    time: e.time,
                    device: e.device,
                    observed: e.observed,
                    tag: e.tag,
                    branch: branch.clone(),
                    value,
                })
            })
            .collect()
    }
}

/// "Device `device` holds value `value`."
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordClaim {
    pub device: u32,
    pub value: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    /// The latest contact was ideal and produced the claimed value.
    Valid,
    /// No contact supports the claimed value.
    Invalid,
    /// The latest contact found the pointer not ready.
    Unverifiable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    pub claim: RecordClaim,
    pub status: RecordStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub branch: MacroLabel,
    pub claims: Vec<ClaimVerdict>,
}

impl AuditVerdict {
    pub fn all_valid(&self) -> bool {
        self.claims.iter().all(|c| c.status == RecordStatus::Valid)
    }

    pub fn any_invalid(&self) -> bool {
        self.claims.iter().any(|c| c.status == RecordStatus::Invalid)
    }

    pub fn count(&self, status: RecordStatus) -> usize {
        self.claims.iter().filter(|c| c.status == status).count()
    }
}

/// Everything a forward simulation produces.
#[derive(Clone, Debug)]
pub struct Simulation {
    /// State at each time, `steps + 1` entries.
    pub states: Vec<StateVector>,
    pub events: Vec<EventDescriptor>,
    pub diagnostics: Vec<LatticeDiagnostic>,
    pub log: EventLog,
}

impl Simulation {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("at least the initial state")
    }
}

/// Runs `steps` steps from `initial` and builds the branch-linked event log.
pub fn simulate(world: &LatticeWorld, initial: &StateVector, steps: usize, coupling: f64) -> Result<Simulation> {
    world.layout().check_same(initial.layout())?;
    let t0 = world.time();
    let mut states = Vec::with_capacity(steps + 1);
    let mut events = Vec::new();
    let mut diagnostics = Vec::new();
    states.push(initial.clone());
    for t in 0..steps as u64 {
        let wt = world.at_time(t0 + t);
        let out = measure_contact_with_coupling(&wt, states.last().unwrap(), coupling)?;
        events.extend(out.events);
        diagnostics.extend(out.diagnostics);
        states.push(out.state);
    }
    let log = link_events(world, &states, &events, coupling)?;
    Ok(Simulation {
        states,
        events,
        diagnostics,
        log,
    })
}

/// Weight of each macro label at one time offset.
type Snapshot = BTreeMap<MacroLabel, f64>;

/// Macro labels (with weights) present in each final branch's history, by
/// time offset.
fn ancestry(
    world: &LatticeWorld,
    final_state: &StateVector,
    steps: usize,
    coupling: f64,
) -> Result<Vec<(MacroLabel, Vec<Snapshot>)>> {
    if final_state.is_empty() {
        return Ok(Vec::new());
    }
    let u = LatticeStep::with_coupling(world, coupling)?;
    let mut out = Vec::new();
    for branch in branch_decompose(world, final_state)? {
        let mut history = vec![BTreeMap::new(); steps + 1];
        let mut comp = branch.state;
        for t in (0..=steps).rev() {
            for (l, a) in comp.terms() {
                *history[t].entry(world.macro_label(l)).or_insert(0.0) += a.norm_sqr();
            }
            if t > 0 {
                comp = apply_adjoint(&u, &comp)?;
            }
        }
        out.push((branch.label, history));
    }
    Ok(out)
}

fn link_events(
    world: &LatticeWorld,
    states: &[StateVector],
    events: &[EventDescriptor],
    coupling: f64,
) -> Result<EventLog> {
    let steps = states.len() - 1;
    let histories = ancestry(world, &states[steps], steps, coupling)?;
    let t0 = world.time();
    let mut log = EventLog::new();
    for e in events {
        let after = (e.time - t0) as usize + 1;
        let mut outcome_by_branch = BTreeMap::new();
        for (final_label, history) in &histories {
            let best = e
                .outcomes
                .iter()
                .filter_map(|(l, &v)| history[after].get(l).map(|&w| (w, v)))
                .fold(None, |acc: Option<(f64, u32)>, (w, v)| match acc {
                    Some((bw, _)) if bw >= w => acc,
                    _ => Some((w, v)),
                });
            if let Some((_, v)) = best {
                outcome_by_branch.insert(final_label.clone(), v);
            }
        }
        log.push(LogEntry {
            time: e.time,
            device: e.device,
            observed: e.observed,
            position: e.position,
            tag: e.tag,
            weight: e.weight,
            outcome_by_branch,
        })?;
    }
    Ok(log)
}

/// Claims read off a single-branch state: one per non-ready pointer.
pub fn extract_records(world: &LatticeWorld, branch: &StateVector) -> Result<Vec<RecordClaim>> {
    let parts = branch_decompose(world, branch)?;
    if parts.len() != 1 {
        return Err(Error::NotASingleBranch(parts.len()));
    }
    Ok(parts[0]
        .label
        .devices
        .iter()
        .filter(|d| d.pointer != 0)
        .map(|d| RecordClaim {
            device: d.id,
            value: d.pointer,
        })
        .collect())
}

/// Checks each claim against the latest logged contact of its device on
/// `branch`.
pub fn audit(log: &EventLog, claims: &[RecordClaim], branch: &MacroLabel) -> AuditVerdict {
    let claims = claims
        .iter()
        .map(|&claim| {
            let entries: Vec<&LogEntry> = log.for_branch(branch).filter(|e| e.device == claim.device).collect();
            let status = match entries.iter().map(|e| e.time).max() {
                None => RecordStatus::Invalid,
                Some(latest) => {
                    let last: Vec<&&LogEntry> = entries.iter().filter(|e| e.time == latest).collect();
                    if last.iter().any(|e| e.tag == ContactTag::Disturbing) {
                        RecordStatus::Unverifiable
                    } else if last.iter().any(|e| e.outcome_by_branch[branch] == claim.value) {
                        RecordStatus::Valid
                    } else {
                        RecordStatus::Invalid
                    }
                }
            };
            ClaimVerdict { claim, status }
        })
        .collect();
    AuditVerdict {
        branch: branch.clone(),
        claims,
    }
}

/// Extracts and audits the claims of every final branch of a simulation.
pub fn audit_simulation(world: &LatticeWorld, sim: &Simulation) -> Result<Vec<AuditVerdict>> {
    branch_decompose(world, sim.final_state())?
        .into_iter()
        .map(|b| {
            let claims = extract_records(world, &b.state)?;
            Ok(audit(&sim.log, &claims, &b.label))
        })
        .collect()
}

fn check_claims(world: &LatticeWorld, claims: &[RecordClaim]) -> Result<BTreeMap<u32, u32>> {
    let mut by_device = BTreeMap::new();
    for c in claims {
        let p = world
            .particle(c.device)
            .ok_or_else(|| Error::InvalidParameter(format!("no particle {}", c.device)))?;
        if p.kind != ParticleKind::Measuring {
            return Err(Error::InvalidParameter(format!("particle {} is not a measuring particle", c.device)));
        }
        if c.value == 0 || c.value >= p.m {
            return Err(Error::InvalidParameter(format!(
                "claimed value {} for device {} outside 1..{}",
                c.value, c.device, p.m
            )));
        }
        if by_device.insert(c.device, c.value).is_some() {
            return Err(Error::InvalidParameter(format!("two claims for device {}", c.device)));
        }
    }
    Ok(by_device)
}

/// A time-0 state whose evolution over `horizon` steps ends in a basis
/// state carrying exactly `claims`, with no contact ever happening.
///
/// The final configuration puts particle `i` at `(0, i mod L, ⌊i/L⌋)`, all
/// moving along `+x`, so nobody ever meets; that configuration is run
/// backwards `horizon` steps.
pub fn forge_false_record_state(world: &LatticeWorld, claims: &[RecordClaim], horizon: usize) -> Result<StateVector> {
    let final_state = forged_final_state(world, claims)?;
    reverse_run(world, &final_state, horizon)
}

fn forged_final_state(world: &LatticeWorld, claims: &[RecordClaim]) -> Result<StateVector> {
    let by_device = check_claims(world, claims)?;
    let l = world.extent();
    let n = world.particles().len() as u64;
    if n > (l as u64) * (l as u64) {
        return Err(Error::InvalidParameter(format!(
            "{n} particles do not fit in distinct lanes of an L = {l} lattice"
        )));
    }
    let config: Vec<ParticleState> = world
        .particles()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let i = i as u32;
            ParticleState::new([0, i % l, i / l], [1, 0, 0], by_device.get(&p.id).copied().unwrap_or(0))
        })
        .collect();
    world.basis_state(&config)
}

/// Outcome of forging a state and then checking it.
#[derive(Clone, Debug)]
pub struct ForgeryReport {
    pub initial: StateVector,
    pub final_state: StateVector,
    /// Max amplitude error between the forward evolution and the intended
    /// final state.
    pub round_trip_error: f64,
    pub claims: Vec<RecordClaim>,
    pub verdict: AuditVerdict,
}

pub fn forge_and_audit(world: &LatticeWorld, claims: &[RecordClaim], horizon: usize) -> Result<ForgeryReport> {
    let initial = forge_false_record_state(world, claims, horizon)?;
    let sim = simulate(world, &initial, horizon, 0.0)?;
    let final_state = sim.final_state().clone();
    let target = forged_final_state(world, claims)?;
    let round_trip_error = final_state.max_abs_diff(&target);
    let branches = branch_decompose(world, &final_state)?;
    let branch = branches
        .into_iter()
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .ok_or(Error::EmptyBranches)?;
    let found = extract_records(world, &branch.state)?;
    let verdict = audit(&sim.log, &found, &branch.label);
    Ok(ForgeryReport {
        initial,
        final_state,
        round_trip_error,
        claims: found,
        verdict,
    })
}

/// Exhaustive check of the disturbing contact for one internal dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InformationAudit {
    pub m: u32,
    pub pairs_checked: usize,
    /// Every `(a, b)` gave pointer `b ⊕ a`.
    pub arithmetic_exact: bool,
    /// Smallest number of observed values `a` consistent with one pointer
    /// value once `b` is unknown. Equal to `m` when the pointer alone says
    /// nothing about `a`.
    pub min_candidates: usize,
    /// Mutual information in bits between `a` and the pointer, for uniform
    /// `a` and `b`.
    pub mutual_information: f64,
    pub passes: bool,
}

/// Runs one contact for every observed value `a` and pointer value `b` and
/// checks what the device record says about `a` afterwards.
pub fn information_audit(m: u32) -> Result<InformationAudit> {
    if m < 2 {
        return Err(Error::InvalidParameter("information audit needs m ≥ 2".into()));
    }
    let world = LatticeWorld::new(8, vec![Particle::ordinary(0, m), Particle::measuring(1, m)])?;
    let mut arithmetic_exact = true;
    let mut joint: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut candidates: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for a in 0..m {
        for b in 0..m {
            let s = world.basis_state(&[
                ParticleState::new([0, 0, 0], [1, 0, 0], a),
                ParticleState::new([0, 0, 0], [0, 0, 0], b),
            ])?;
            let out = measure_contact(&world, &s)?;
            if out.state.len() != 1 {
                arithmetic_exact = false;
                continue;
            }
            let label = out.state.labels().next().unwrap();
            let pointer = world.internal(label, 1);
            if pointer != (a + b) % m || out.state.amplitude(label).re != 1.0 {
                arithmetic_exact = false;
            }
            *joint.entry((a, pointer)).or_default() += 1;
            candidates.entry(pointer).or_default().insert(a);
        }
    }
    let total = (m * m) as f64;
    let mut p_a: BTreeMap<u32, f64> = BTreeMap::new();
    let mut p_p: BTreeMap<u32, f64> = BTreeMap::new();
    for (&(a, p), &n) in &joint {
        *p_a.entry(a).or_default() += n as f64 / total;
        *p_p.entry(p).or_default() += n as f64 / total;
    }
    let mutual_information = joint
        .iter()
        .map(|(&(a, p), &n)| {
            let pj = n as f64 / total;
            pj * (pj / (p_a[&a] * p_p[&p])).log2()
        })
        .sum::<f64>()
        .max(0.0);
    let min_candidates = candidates.values().map(BTreeSet::len).min().unwrap_or(0);
    Ok(InformationAudit {
        m,
        pairs_checked: (m * m) as usize,
        arithmetic_exact,
        min_candidates,
        mutual_information,
        passes: arithmetic_exact && min_candidates == m as usize && mutual_information < 1e-12,
    })
}

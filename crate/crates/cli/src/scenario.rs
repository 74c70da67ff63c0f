//! Scenario files: JSON describing a setup or world, an initial state, the
//! experiment to run and its parameters.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Deserialize;

use qrecords_core::lattice::{LatticeWorld, Particle, ParticleKind, ParticleState, DEFAULT_EXTENT};
use qrecords_core::measureframe::{MeasurementSetup, Observable, ScheduledMeasurement};
use qrecords_core::qstate::{SquareMatrix, StateVector};
use qrecords_core::records::RecordClaim;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Abstract,
    Lattice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Run,
    BornStats,
    ForbiddenSubspace,
    SiWitness,
    ForgeAudit,
    ReversalDemo,
    ThermalDemo,
    Epr,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::BornStats => "born-stats",
            Experiment::ForbiddenSubspace => "forbidden-subspace",
            Experiment::SiWitness => "si-witness",
            Experiment::ForgeAudit => "forge-audit",
            Experiment::ReversalDemo => "reversal-demo",
            Experiment::ThermalDemo => "thermal-demo",
            Experiment::Epr => "epr",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mode: Mode,
    pub experiment: Experiment,
    #[serde(default)]
    pub setup: Option<SetupSpec>,
    #[serde(default)]
    pub world: Option<WorldSpec>,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub parameters: Parameters,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Named(NamedObservable),
    Basis {
        basis: Vec<Vec<Complex64>>,
        #[serde(default)]
        eigenvalues: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NamedObservable {
    Computational,
    RotatedQubit { theta: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub time: u32,
    pub observable: usize,
    pub pointer: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupSpec {
    pub n: usize,
    pub observables: Vec<ObservableSpec>,
    #[serde(default = "one")]
    pub env_dim: u32,
    /// One pointer per entry, in order; defaults to measuring each
    /// observable once, in order.
    #[serde(default)]
    pub schedule: Option<Vec<ScheduleEntry>>,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    pub id: u32,
    pub kind: KindSpec,
    pub m: u32,
    #[serde(default)]
    pub internal_unitary: Option<Vec<Vec<Complex64>>>,
    /// Partner id → basis columns.
    #[serde(default)]
    pub partner_basis: BTreeMap<u32, Vec<Vec<Complex64>>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindSpec {
    Ordinary,
    Measuring,
    Bath,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    #[serde(default = "default_extent")]
    pub extent: u32,
    pub particles: Vec<ParticleSpec>,
}

fn default_extent() -> u32 {
    DEFAULT_EXTENT
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleStateSpec {
    pub position: [u32; 3],
    #[serde(default)]
    pub velocity: [i8; 3],
    #[serde(default)]
    pub internal: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeTerm {
    #[serde(default = "unit")]
    pub amplitude: Complex64,
    pub particles: Vec<ParticleStateSpec>,
}

fn unit() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    /// System amplitudes; pointers ready, environment in 0.
    System { system: Vec<Complex64> },
    Lattice { terms: Vec<LatticeTerm> },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub steps: Option<usize>,
    pub coupling: Option<f64>,
    pub contacts: Option<u32>,
    pub m: Option<u32>,
    pub angles: Option<[f64; 2]>,
    pub claims: Option<Vec<RecordClaim>>,
    pub group: Option<Vec<usize>>,
    pub random_trials: Option<usize>,
    pub dimension_bound: Option<u128>,
}

pub fn parse(text: &str) -> Result<Scenario, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

impl ObservableSpec {
    fn build(&self, n: usize) -> Observable {
        match self {
            ObservableSpec::Named(NamedObservable::Computational) => Observable::computational(n),
            ObservableSpec::Named(NamedObservable::RotatedQubit { theta }) => Observable::rotated_qubit(*theta),
            ObservableSpec::Basis { basis, eigenvalues } => {
                let o = Observable::new(basis.clone());
                match eigenvalues {
                    Some(ev) => o.with_eigenvalues(ev.clone()),
                    None => o,
                }
            }
        }
    }
}

impl SetupSpec {
    pub fn build(&self) -> Result<MeasurementSetup, CliError> {
        if self.observables.is_empty() {
            return Err(CliError::Validation("setup needs at least one observable".into()));
        }
        let observables: Vec<Observable> = self.observables.iter().map(|o| o.build(self.n)).collect();
        let setup = match &self.schedule {
            None => MeasurementSetup::sequential(self.n, observables, self.env_dim)?,
            Some(entries) => {
                let pointers = entries.iter().map(|e| e.pointer).max().map_or(0, |p| p + 1);
                let schedule = entries
                    .iter()
                    .map(|e| ScheduledMeasurement {
                        time: e.time,
                        observable: e.observable,
                        pointer: e.pointer,
                    })
                    .collect();
                MeasurementSetup::new(
                    self.n,
                    vec![self.n as u32 + 1; pointers],
                    observables,
                    self.env_dim,
                    schedule,
                )?
            }
        };
        Ok(setup)
    }
}

fn matrix(cols: &[Vec<Complex64>]) -> Result<SquareMatrix, CliError> {
    Ok(SquareMatrix::from_columns(cols)?)
}

impl WorldSpec {
    pub fn build(&self) -> Result<LatticeWorld, CliError> {
        let mut particles = Vec::with_capacity(self.particles.len());
        for p in &self.particles {
            let kind = match p.kind {
                KindSpec::Ordinary => ParticleKind::Ordinary,
                KindSpec::Measuring => ParticleKind::Measuring,
                KindSpec::Bath => ParticleKind::Bath,
            };
            let mut particle = Particle::new(p.id, kind, p.m);
            if let Some(u) = &p.internal_unitary {
                particle = particle.with_internal_unitary(matrix(u)?);
            }
            for (partner, cols) in &p.partner_basis {
                particle = particle.with_partner_basis(*partner, matrix(cols)?);
            }
            particles.push(particle);
        }
        Ok(LatticeWorld::new(self.extent, particles)?)
    }
}

impl InitialSpec {
    pub fn abstract_state(&self, setup: &MeasurementSetup) -> Result<StateVector, CliError> {
        match self {
            InitialSpec::System { system } => {
                let norm: f64 = system.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > crate::experiments::NORM_TOLERANCE {
                    return Err(CliError::Validation(format!(
                        "initial system state has norm {norm:.17e}, expected 1"
                    )));
                }
                Ok(setup.prepare(system)?)
            }
            InitialSpec::Lattice { .. } => Err(CliError::Validation(
                "abstract scenarios take `initial.system`".into(),
            )),
        }
    }

    pub fn lattice_state(&self, world: &LatticeWorld) -> Result<StateVector, CliError> {
        match self {
            InitialSpec::Lattice { terms } => {
                let terms: Vec<(Vec<ParticleState>, Complex64)> = terms
                    .iter()
                    .map(|t| {
                        (
                            t.particles
                                .iter()
                                .map(|p| ParticleState::new(p.position, p.velocity, p.internal))
                                .collect(),
                            t.amplitude,
                        )
                    })
                    .collect();
                let s = world.superposition(&terms)?;
                Ok(s.normalized()?)
            }
            InitialSpec::System { .. } => Err(CliError::Validation(
                "lattice scenarios take `initial.terms`".into(),
            )),
        }
    }
}

impl Scenario {
    pub fn setup(&self) -> Result<MeasurementSetup, CliError> {
        self.setup
            .as_ref()
            .ok_or_else(|| CliError::Validation("abstract scenario needs `setup`".into()))?
            .build()
    }

    pub fn world(&self) -> Result<LatticeWorld, CliError> {
        self.world
            .as_ref()
            .ok_or_else(|| CliError::Validation("lattice scenario needs `world`".into()))?
            .build()
    }

    pub fn initial(&self) -> Result<&InitialSpec, CliError> {
        self.initial
            .as_ref()
            .ok_or_else(|| CliError::Validation("scenario needs `initial`".into()))
    }
}

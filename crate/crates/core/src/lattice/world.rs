use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{BasisLabel, DeviceReading, MacroLabel, RegisterLayout, SquareMatrix, StateVector};

pub const DEFAULT_EXTENT: u32 = 16;
const UNITARY_TOL: f64 = 1e-12;

/// Registers per particle: x, y, z, vx, vy, vz, internal.
pub const REGISTERS_PER_PARTICLE: usize = 7;
const VELOCITY_OFFSET: usize = 3;
const INTERNAL_OFFSET: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticleKind {
    Ordinary,
    /// A one-particle measuring device; its internal value is the pointer.
    Measuring,
    /// Thermal bath particle.
    Bath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: u32,
    pub kind: ParticleKind,
    /// Internal dimension.
    pub m: u32,
    /// Free internal evolution per step.
    pub internal_unitary: SquareMatrix,
    /// Basis used when interacting with a given partner: column `a` is the
    /// basis vector `|a⟩` in internal coordinates. Missing partners use the
    /// computational basis.
    pub partner_basis: BTreeMap<u32, SquareMatrix>,
}

impl Particle {
    pub fn new(id: u32, kind: ParticleKind, m: u32) -> Self {
        Self {
            id,
            kind,
            m,
            internal_unitary: SquareMatrix::identity(m as usize),
            partner_basis: BTreeMap::new(),
        }
    }

    pub fn ordinary(id: u32, m: u32) -> Self {
        Self::new(id, ParticleKind::Ordinary, m)
    }

    pub fn measuring(id: u32, m: u32) -> Self {
        Self::new(id, ParticleKind::Measuring, m)
    }

    pub fn bath(id: u32, m: u32) -> Self {
        Self::new(id, ParticleKind::Bath, m)
    }

    pub fn with_internal_unitary(mut self, u: SquareMatrix) -> Self {
        self.internal_unitary = u;
        self
    }

    pub fn with_partner_basis(mut self, partner: u32, basis: SquareMatrix) -> Self {
        self.partner_basis.insert(partner, basis);
        self
    }

    pub fn basis_for(&self, partner: u32) -> Option<&SquareMatrix> {
        self.partner_basis.get(&partner)
    }

    fn validate(&self) -> Result<()> {
        let m = self.m as usize;
        if self.m < 2 {
            return Err(Error::InvalidWorld(format!(
                "particle {} has internal dimension {} < 2",
                self.id, self.m
            )));
        }
        if self.internal_unitary.dim() != m || !self.internal_unitary.is_unitary(UNITARY_TOL) {
            return Err(Error::InvalidWorld(format!(
                "particle {}: internal evolution is not a {m}×{m} unitary",
                self.id
            )));
        }
        for (partner, b) in &self.partner_basis {
            if b.dim() != m || !b.is_unitary(UNITARY_TOL) {
                return Err(Error::InvalidWorld(format!(
                    "particle {}: basis for partner {partner} is not a {m}×{m} unitary",
                    self.id
                )));
            }
        }
        if self.kind == ParticleKind::Measuring {
            if !self.internal_unitary.is_identity(UNITARY_TOL) {
                return Err(Error::InvalidWorld(format!(
                    "measuring particle {} must have identity internal evolution",
                    self.id
                )));
            }
            // pointer states are the computational basis of the register
            if self.partner_basis.values().any(|b| !b.is_identity(UNITARY_TOL)) {
                return Err(Error::InvalidWorld(format!(
                    "measuring particle {} must use its pointer basis for every partner",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Position, velocity and internal value of one particle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParticleState {
    pub position: [u32; 3],
    pub velocity: [i8; 3],
    pub internal: u32,
}

impl ParticleState {
    pub fn new(position: [u32; 3], velocity: [i8; 3], internal: u32) -> Self {
        Self {
            position,
            velocity,
            internal,
        }
    }
}

/// One basis label of a lattice world, decoded per particle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeBasisLabel {
    pub particles: Vec<ParticleState>,
}

/// Particles on the periodic lattice `(ℤ_L)³`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeWorld {
    extent: u32,
    particles: Vec<Particle>,
    time: u64,
    #[serde(skip)]
    layout: Option<Arc<RegisterLayout>>,
}

impl LatticeWorld {
    /// Particles are stored sorted by id.
    pub fn new(extent: u32, mut particles: Vec<Particle>) -> Result<Self> {
        if extent == 0 {
            return Err(Error::InvalidWorld("lattice extent must be ≥ 1".into()));
        }
        particles.sort_by_key(|p| p.id);
        for w in particles.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::InvalidWorld(format!("duplicate particle id {}", w[0].id)));
            }
        }
        for p in &particles {
            p.validate()?;
            for partner in p.partner_basis.keys() {
                if !particles.iter().any(|q| q.id == *partner && q.id != p.id) {
                    return Err(Error::InvalidWorld(format!(
                        "particle {}: partner basis refers to unknown particle {partner}",
                        p.id
                    )));
                }
            }
        }
        let mut world = Self {
            extent,
            particles,
            time: 0,
            layout: None,
        };
        world.layout = Some(Arc::new(world.build_layout()));
        Ok(world)
    }

    fn build_layout(&self) -> RegisterLayout {
        let mut dims = Vec::with_capacity(self.particles.len() * REGISTERS_PER_PARTICLE);
        for p in &self.particles {
            dims.extend_from_slice(&[self.extent, self.extent, self.extent, 3, 3, 3, p.m]);
        }
        RegisterLayout::new(dims).expect("extent and m are nonzero")
    }

    pub fn extent(&self) -> u32 {
        self.extent
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn particle(&self, id: u32) -> Option<&Particle> {
        self.particles.iter().find(|p| p.id == id)
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.particles.iter().position(|p| p.id == id)
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn at_time(&self, time: u64) -> Self {
        let mut w = self.clone();
        w.time = time;
        w
    }

    pub fn layout(&self) -> Arc<RegisterLayout> {
        self.layout
            .clone()
            .unwrap_or_else(|| Arc::new(self.build_layout()))
    }

    pub fn has_kind(&self, kind: ParticleKind) -> bool {
        self.particles.iter().any(|p| p.kind == kind)
    }

    pub fn position_registers(&self, index: usize) -> [usize; 3] {
        let b = index * REGISTERS_PER_PARTICLE;
        [b, b + 1, b + 2]
    }

    pub fn velocity_registers(&self, index: usize) -> [usize; 3] {
        let b = index * REGISTERS_PER_PARTICLE + VELOCITY_OFFSET;
        [b, b + 1, b + 2]
    }

    pub fn internal_register(&self, index: usize) -> usize {
        index * REGISTERS_PER_PARTICLE + INTERNAL_OFFSET
    }

    /// All registers belonging to particles of `kind`.
    pub fn registers_of_kind(&self, kind: ParticleKind) -> Vec<usize> {
        self.particles
            .iter()
            .enumerate()
            .filter(|(_, p)| p.kind == kind)
            .flat_map(|(i, _)| {
                let b = i * REGISTERS_PER_PARTICLE;
                b..b + REGISTERS_PER_PARTICLE
            })
            .collect()
    }

    pub fn position(&self, label: &BasisLabel, index: usize) -> [u32; 3] {
        self.position_registers(index).map(|r| label.get(r))
    }

    pub fn velocity(&self, label: &BasisLabel, index: usize) -> [i8; 3] {
        self.velocity_registers(index).map(|r| label.get(r) as i8 - 1)
    }

    pub fn internal(&self, label: &BasisLabel, index: usize) -> u32 {
        label.get(self.internal_register(index))
    }

    pub fn encode(&self, label: &LatticeBasisLabel) -> Result<BasisLabel> {
        if label.particles.len() != self.particles.len() {
            return Err(Error::InvalidWorld(format!(
                "label has {} particles, world has {}",
                label.particles.len(),
                self.particles.len()
            )));
        }
        let mut regs = Vec::with_capacity(self.particles.len() * REGISTERS_PER_PARTICLE);
        for (p, st) in self.particles.iter().zip(&label.particles) {
            if st.velocity.iter().any(|v| !(-1..=1).contains(v)) {
                return Err(Error::InvalidWorld(format!(
                    "particle {}: velocity components must lie in {{-1, 0, 1}}",
                    p.id
                )));
            }
            if st.internal >= p.m {
                return Err(Error::InvalidWorld(format!(
                    "particle {}: internal value {} ≥ m = {}",
                    p.id, st.internal, p.m
                )));
            }
            regs.extend(st.position.iter().map(|x| x % self.extent));
            regs.extend(st.velocity.iter().map(|&v| (v + 1) as u32));
            regs.push(st.internal);
        }
        Ok(BasisLabel::new(regs))
    }

    pub fn decode(&self, label: &BasisLabel) -> LatticeBasisLabel {
        LatticeBasisLabel {
            particles: (0..self.particles.len())
                .map(|i| ParticleState {
                    position: self.position(label, i),
                    velocity: self.velocity(label, i),
                    internal: self.internal(label, i),
                })
                .collect(),
        }
    }

    pub fn basis_state(&self, particles: &[ParticleState]) -> Result<StateVector> {
        let label = self.encode(&LatticeBasisLabel {
            particles: particles.to_vec(),
        })?;
        StateVector::basis(self.layout(), label)
    }

    /// Superposition of configurations with the given amplitudes.
    pub fn superposition(&self, terms: &[(Vec<ParticleState>, Complex64)]) -> Result<StateVector> {
        let encoded = terms
            .iter()
            .map(|(ps, a)| {
                Ok((
                    self.encode(&LatticeBasisLabel {
                        particles: ps.clone(),
                    })?,
                    *a,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        StateVector::from_terms(self.layout(), encoded)
    }

    /// Positions and pointers of all measuring particles for one label.
    pub fn macro_label(&self, label: &BasisLabel) -> MacroLabel {
        MacroLabel {
            devices: self
                .particles
                .iter()
                .enumerate()
                .filter(|(_, p)| p.kind == ParticleKind::Measuring)
                .map(|(i, p)| DeviceReading {
                    id: p.id,
                    position: self.position(label, i).to_vec(),
                    pointer: self.internal(label, i),
                })
                .collect(),
        }
    }
}

//! Small ready-made worlds used by the demos, the CLI and the benches.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::branches::{reduced_overlap, register_population};
use super::dynamics::LatticeStep;
use super::world::{LatticeWorld, Particle, ParticleKind, ParticleState, DEFAULT_EXTENT};
use crate::error::{Error, Result};
use crate::qstate::{apply_unitary, StateVector};

/// Observed particle id in the two-particle scenarios.
pub const OBSERVED_ID: u32 = 0;
/// Device id in the two-particle scenarios.
pub const DEVICE_ID: u32 = 1;

/// Observed particle heading for a ready device at the origin.
///
/// The observed particle starts one site to the left of the device moving
/// right with internal state `(|1⟩ + |2⟩)/√2`, so the two coincide at time 1
/// and the device records the value during the step from 1 to 2.
pub fn approach_measurement(m: u32) -> Result<(LatticeWorld, StateVector)> {
    if m < 3 {
        return Err(Error::InvalidParameter("approach scenario needs m ≥ 3".into()));
    }
    let world = LatticeWorld::new(
        DEFAULT_EXTENT,
        vec![Particle::ordinary(OBSERVED_ID, m), Particle::measuring(DEVICE_ID, m)],
    )?;
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let left = DEFAULT_EXTENT - 1;
    let state = world.superposition(&[
        (
            vec![
                ParticleState::new([left, 0, 0], [1, 0, 0], 1),
                ParticleState::new([0, 0, 0], [0, 0, 0], 0),
            ],
            r,
        ),
        (
            vec![
                ParticleState::new([left, 0, 0], [1, 0, 0], 2),
                ParticleState::new([0, 0, 0], [0, 0, 0], 0),
            ],
            r,
        ),
    ])?;
    Ok((world, state))
}

/// A device at rest at the origin met by `contacts` fresh bath particles,
/// one per step. Bath particle `i` (id `i`) starts `i` sites to the left
/// moving right with internal value 0, so it reaches the device at time `i`.
pub fn bath_world(m: u32, contacts: u32) -> Result<LatticeWorld> {
    let extent = DEFAULT_EXTENT.max(contacts + 4);
    let mut particles = vec![Particle::measuring(0, m)];
    particles.extend((1..=contacts).map(|i| Particle::bath(i, m)));
    LatticeWorld::new(extent, particles)
}

/// Configuration of [`bath_world`] with the device pointer at `pointer`.
pub fn bath_configuration(world: &LatticeWorld, pointer: u32) -> Vec<ParticleState> {
    let l = world.extent();
    world
        .particles()
        .iter()
        .map(|p| match p.kind {
            ParticleKind::Measuring => ParticleState::new([0, 0, 0], [0, 0, 0], pointer),
            _ => ParticleState::new([(l - p.id % l) % l, 0, 0], [1, 0, 0], 0),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermalSample {
    /// Completed steps.
    pub step: usize,
    /// Population of pointer value 0 in the combined state.
    pub ready_population: f64,
    /// `Tr(ρ_bath^(1) ρ_bath^(2))` between the two branches.
    pub bath_overlap: f64,
}

/// Evolves two branches (and their equal-weight superposition) under the
/// coupled dynamics, sampling the device's ready population and the bath
/// overlap between branches after each step.
pub fn thermal_trace(
    world: &LatticeWorld,
    branch_a: &StateVector,
    branch_b: &StateVector,
    steps: usize,
    coupling: f64,
) -> Result<Vec<ThermalSample>> {
    let u = LatticeStep::with_coupling(world, coupling)?;
    let device = world
        .particles()
        .iter()
        .position(|p| p.kind == ParticleKind::Measuring)
        .ok_or_else(|| Error::InvalidWorld("no measuring particle".into()))?;
    let pointer_reg = world.internal_register(device);
    let bath_regs = world.registers_of_kind(ParticleKind::Bath);
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let (mut a, mut b) = (branch_a.clone(), branch_b.clone());
    let mut out = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        if step > 0 {
            a = apply_unitary(&u, &a)?;
            b = apply_unitary(&u, &b)?;
        }
        let combined = a.scaled(r).add_scaled(&b, r)?;
        out.push(ThermalSample {
            step,
            ready_population: register_population(&combined, pointer_reg, 0) / combined.norm_sqr(),
            bath_overlap: reduced_overlap(&a, &b, &bath_regs)?,
        });
    }
    Ok(out)
}

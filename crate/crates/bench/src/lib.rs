//! Fixtures shared by the benchmarks and their smoke test.

use qrecords_core::forbidden::{allowed_subspace, back_propagate, forbidden_final_states, SubspaceReport};
use qrecords_core::lattice::scenarios::bath_world;
use qrecords_core::lattice::{LatticeWorld, Particle, ParticleState};
use qrecords_core::measureframe::{MeasurementSetup, Observable};
use qrecords_core::qstate::{Complex64, StateVector};
use qrecords_core::Result;

/// `n`-level system measured `repeats` times in the computational basis.
pub fn repeated_setup(n: usize, repeats: usize, env_dim: u32) -> Result<MeasurementSetup> {
    MeasurementSetup::sequential(n, vec![Observable::computational(n); repeats], env_dim)
}

pub fn uniform_system(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n]
}

pub fn subspace_report(setup: &MeasurementSetup) -> Result<SubspaceReport> {
    let finals = forbidden_final_states(setup, &[])?;
    let initials = back_propagate(setup, &finals)?;
    allowed_subspace(setup, &initials, u128::MAX)
}

/// `pairs` ordinary/measuring pairs in separate lanes; each ordinary particle
/// is in an equal superposition of internal values 1 and 2 and reaches its
/// device after one step, so the state branches into `2^pairs` terms.
pub fn branching_world(pairs: u32) -> Result<(LatticeWorld, StateVector)> {
    let extent = 8;
    let mut particles = Vec::new();
    for i in 0..pairs {
        particles.push(Particle::ordinary(2 * i, 3));
        particles.push(Particle::measuring(2 * i + 1, 3));
    }
    let world = LatticeWorld::new(extent, particles)?;
    let mut terms = vec![(Vec::new(), Complex64::new(1.0, 0.0))];
    for i in 0..pairs {
        let lane = [0, i % extent, i / extent];
        let device = ParticleState::new(lane, [0, 0, 0], 0);
        let mut next = Vec::with_capacity(terms.len() * 2);
        for (ps, amp) in &terms {
            for internal in [1, 2] {
                let mut ps: Vec<ParticleState> = ps.clone();
                ps.push(ParticleState::new([extent - 1, lane[1], lane[2]], [1, 0, 0], internal));
                ps.push(device);
                next.push((ps, *amp));
            }
        }
        terms = next;
    }
    let s = world.superposition(&terms)?.normalized()?;
    Ok((world, s))
}

pub fn thermal_fixture(contacts: u32) -> Result<LatticeWorld> {
    bath_world(3, contacts)
}

//! Particles on a periodic cubic lattice.
//!
//! Each particle carries a position in `(ℤ_L)³`, a velocity in `{-1,0,1}³`
//! and an internal value in `ℤ_m`. One step moves every particle by its
//! velocity and applies its internal evolution; particles sharing a site
//! interact first. Measuring particles record what they meet in their
//! internal register (the pointer, 0 = ready); bath particles can pull a
//! pointer back toward ready through a weak partial-swap coupling.
//!
//! The contact interaction is a controlled shift, target `b ↦ b ⊕ a`, in the
//! partner bases of the two particles. With a ready pointer this copies the
//! observed value; with pointer `b ≠ 0` the record becomes `b ⊕ a`.

mod branches;
mod dynamics;
pub mod scenarios;
mod world;

pub use branches::{
    born_sample, born_sample_counts, branch_decompose, reduced_overlap, register_population, Branch,
};
pub use dynamics::{
    measure_contact, measure_contact_with_coupling, reverse_run, reverse_run_with_coupling, run,
    step, step_back, thermal_step, ContactStep, ContactTag, EventDescriptor, LatticeDiagnostic,
    LatticeStep,
};
pub use world::{
    LatticeBasisLabel, LatticeWorld, Particle, ParticleKind, ParticleState, DEFAULT_EXTENT,
    REGISTERS_PER_PARTICLE,
};

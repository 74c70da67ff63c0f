//! Exact sparse state-vector simulation of measurement chains.
//!
//! * [`qstate`]: sparse states, column-defined unitaries, projectors.
//! * [`measureframe`]: sequential ideal measurements with pointer registers.
//! * [`forbidden`]: forbidden initial states, allowed subspaces, and
//!   product-state witnesses of broken statistical independence.
//! * [`lattice`]: particles on a periodic cubic lattice with contact
//!   interactions, measuring particles and a thermal bath.
//! * [`records`]: ground-truth event logs and record audits.

pub mod error;
pub mod forbidden;
pub mod lattice;
pub mod measureframe;
pub mod records;
pub mod qstate;
pub mod sampling;

pub use error::{Error, Result};

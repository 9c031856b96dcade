//! Heisenberg-picture spin dynamics driven by second-order Raman amplitudes.
//!
//! All quantities are in Hartree atomic units unless a name says otherwise
//! (`pulse::units` holds the conversions). The basis of every `2J+1`
//! dimensional space is ordered `J_z = J, J-1, ..., -J`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod antiferro;
pub mod effective_field;
mod error;
pub mod ode;
pub mod oracle;
pub mod pulse;
pub mod qm;
pub mod raman;
pub mod single_spin;

pub use error::{Error, Result};

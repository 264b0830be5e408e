//! Spin-motion dynamics of a trapped two-level atom.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: Hilbert-space layout, states, operators, channels.
//! * [`linalg`]: matrix exponential and small dense helpers.
//! * [`dynamics`]: the spin-motion Hamiltonian, jump operators and Lindblad evolution.
//! * [`cooling`]: sideband and erasure-correction cooling protocols.
//! * [`sequences`]: single-atom pulse programs (transduction, Ramsey, echo).
//! * [`entanglement`]: two-atom Bell and hyper-Bell protocols with parity readout.
//! * [`analysis`]: spectroscopy emulation and curve fitting.
//!
//! All frequencies are angular (rad/s) unless a name ends in `_hz`.

// `!(x >= 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cooling;
pub mod dynamics;
pub mod entanglement;
mod error;
pub mod linalg;
pub mod quantum;
pub mod sequences;

pub use error::{Result, SimError};
pub use num_complex::Complex64 as C64;

pub use analysis::{FitModel, FitResult};
pub use cooling::{CoolingConfig, CoolingVariant, ProtocolResult};
pub use dynamics::{Liouvillian, PhysicalParams, Sideband};
pub use entanglement::{BellKind, BellReport, TwoAtomConfig};
pub use quantum::{CMatrix, HilbertLayout, OperatorMatrix, QuantumChannel, QuantumState, Spin};
pub use sequences::{PulseKind, PulseSpec, SequenceOutcome};

/// Engine version recorded in result metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Convert a frequency in Hz to angular frequency.
pub fn hz(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f
}

/// Convert an angular frequency to Hz.
pub fn to_hz(w: f64) -> f64 {
    w / (2.0 * std::f64::consts::PI)
}

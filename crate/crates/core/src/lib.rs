//! Simulation and pulse-synthesis toolkit for trapped ²²⁹Th³⁺ nuclear-level
//! qubits.
//!
//! * [`physics`]: laser intensity, Rabi frequency, ion spacing, normal modes
//!   and Lamb–Dicke parameters.
//! * [`lindblad`]: single-ion Bloch dynamics, Rabi/Ramsey/T1 experiments and
//!   the two-ion sideband gate under decay and laser phase noise.
//! * [`magnus`], [`optimize`]: closed-form second-order Magnus integrals for
//!   piecewise-constant pulses, the Mølmer–Sørensen cost function and its
//!   optimizer.
//! * [`metrics`]: entropy, Uhlmann fidelity and negativity.
//! * [`eb`]: electronic-bridge enhancement rate and SPAM timing.

pub mod constants;
pub mod density;
pub mod eb;
pub mod error;
pub mod lindblad;
pub mod magnus;
pub mod metrics;
pub mod optimize;
pub mod physics;
pub mod pulse;
pub mod units;

pub use density::{DensityMatrix, HilbertSpace};
pub use error::{Error, Result};

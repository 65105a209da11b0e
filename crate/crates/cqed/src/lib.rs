//! Truncated-Fock-space simulation of a driven three-level atom coupled to
//! one or two cavity modes, together with the analytics needed to certify the
//! squeezed, EPR, and cat states the system generates.
//!
//! The crate is organized in layers:
//!
//! - [`fockspace`]: composite Hilbert spaces, states, and operators on them;
//! - [`hamiltonians`]: the lab-frame model, its rotating/interaction-picture
//!   forms, and the second-order effective Hamiltonians with their coupling
//!   constants;
//! - [`dynamics`]: propagators (constant and time-dependent Schroedinger,
//!   zero-temperature Lindblad);
//! - [`analytics`]: closed-form target states and figures of merit
//!   (quadrature variances, EPR correlations, squeezing factors, fidelities);
//! - [`experiments`]: a scenario catalogue tying parameter sets to the
//!   quantitative claims they reproduce, with CSV/JSON emission.
//!
//! Basis ordering is fixed globally: the atomic index varies slowest, then
//! mode a, then mode b. See [`fockspace::HilbertSpace`].

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fockspace;
pub mod hamiltonians;
pub mod linalg;

pub use error::{CqedError, Result};

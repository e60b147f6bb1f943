//! A numerics laboratory for the double-power nonlinear Schrodinger equation
//!
//! ```text
//! i u_t + Δu = |u|^{p0} u - |u|^{p1} u,       4/d < p1 < p0,
//! ```
//!
//! covering the variational threshold landscape (ground states, the two
//! critical masses, the threshold curves), the algebraic identities tying the
//! conserved quantities together (virial, Pohozaev, rescaling, Galilean
//! boost), and split-step time evolution with long-time behavior diagnostics.
//!
//! Start with the `examples/` directory for one runnable program per
//! capability, or the `dpnls` binary for the batch interface.

pub mod classify;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod model;
pub mod spectral;
pub mod varflow;

pub use error::{DpnlsError, Result};
pub use field::Field;
pub use grid::{Grid, LineGrid, RadialGrid};
pub use model::{classify_regime, derive_constants, omega_star, DerivedConstants, ModelParams, Regime};

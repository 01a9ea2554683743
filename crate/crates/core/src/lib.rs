//! Finite-size scaling of spin coherent states in collective spin models.
//!
//! Three models share one Dicke basis of spin `J` (dimension `N = 2J + 1`):
//! a rotor `H = alpha Jz` whose eigenbasis is the Dicke basis itself, the
//! Lipkin-Meshkov-Glick Hamiltonian `alpha Jz + (k / 2J) Jx^2`, and the
//! kicked top with Floquet operator `exp(-i alpha Jz) exp(-i (k / 2J) Jx^2)`.
//! A coherent state `|Q, P>` is expanded in the eigenbasis of a model and
//! the participation moments `IPR_q = sum p_i^q` are followed as `J` grows.
//! Their scaling exponents `tau_q` and dimensions `D_q` separate regular,
//! chaotic and mixed phase-space regions.
//!
//! Modules, bottom up:
//!
//! - [`spin`]: Dicke space, parity, coherent states, banded spin operators.
//! - [`spectra`]: parity-split eigensolvers for the three models.
//! - [`classical`]: the classical limit (flows, critical points, the kicked-top map).
//! - [`scaling`]: IPR, power-law fits, finite exponents, multifractal verdicts, `<r>`.
//! - [`sweep`] and [`cache`]: parallel grids over `J` with an on-disk spectrum cache.
//! - [`cli`]: the `spinscale` command and its figure presets.
//!
//! The `examples/` directory has one runnable program per capability:
//!
//! ```text
//! cargo run --example coherent_state
//! cargo run --example lmg_spectrum
//! cargo run --example floquet_quasienergies
//! cargo run --example classical_phase_space
//! cargo run --example dicke_scaling
//! cargo run --example multifractal_analysis
//! cargo run --example level_statistics
//! cargo run --example sweep_with_cache
//! ```

pub mod binomial;
pub mod cache;
pub mod classical;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod scaling;
pub mod spectra;
pub mod spin;
pub mod sweep;

pub use error::{Error, Result};

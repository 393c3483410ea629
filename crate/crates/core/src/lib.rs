//! Numerical laboratory for the two-dimensional complex Gross–Pitaevskii
//! equation with pumping and decay,
//!
//! ```text
//! iψ_t = −Δψ + V(x)ψ + |ψ|²ψ + i(αΘ(R − |x|) − σ|ψ|²)ψ.
//! ```
//!
//! Radial stationary states come from [`collocation`], their linear stability
//! from [`bdg`], solution branches from [`continuation`] and the full 2D
//! dynamics from [`splitstep`], with observables in [`diagnostics`]. The
//! [`harness`] runs whole experiments from [`config`] files.

pub mod bdg;
pub mod collocation;
pub mod config;
pub mod continuation;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod quadrature;
pub mod splitstep;

pub use collocation::{solve_stationary, BvpState, RadialProfile};
pub use error::{Error, Result};
pub use mesh::{LobattoScheme, RadialMesh};
pub use model::{ModelParams, Trap};
pub use num_complex::Complex64;

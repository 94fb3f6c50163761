//! Lyapunov exponents of weakly damped, weakly driven bilinear stochastic
//! systems, and exact verification of the Lie-algebraic spanning conditions
//! that guarantee projective hypoellipticity.
//!
//! The crate is split along the lines of the workflow:
//!
//! * [`models`]: Euler-like bilinear models (Lorenz-96, Galerkin 2D
//!   Navier-Stokes, Ornstein-Uhlenbeck benchmark).
//! * [`sde`]: additive-noise integration with counter-based noise streams.
//! * [`projective`]: the lifted process on the sphere bundle, QR spectra and
//!   Furstenberg-Khasminskii integrands.
//! * [`exponents`]: top-level estimators (top exponent, epsilon sweeps,
//!   moment exponents, Gaussian Fisher-information identity).
//! * [`liealg`]: exact rational matrix Lie algebras.
//! * [`spanning`]: `H^k` / `D^k` families, forcing propagation and the
//!   distinctness condition for Galerkin Navier-Stokes.
//! * [`config`]: TOML model/run descriptions.

pub mod config;
pub mod exponents;
pub mod liealg;
pub mod models;
pub mod projective;
pub mod rational;
pub mod sde;
pub mod spanning;

pub use exponents::ExponentEstimate;
pub use liealg::{ClosureResult, RationalMatrix};
pub use models::{BilinearForm, BilinearModel, GnseConfig, Scaling};
pub use projective::{ProjectiveState, SpectrumState};
pub use sde::{IntegratorConfig, Scheme, Trajectory};

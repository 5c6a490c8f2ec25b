//! Numerical laboratory for stable and finite-Morse-index radial solutions of
//! semilinear elliptic equations `-Δu = |x|^α f(u)` on the unit ball.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] radial grids on `(0, 1]` and quadrature against power weights,
//! * [`nonlinearity`] analytic and tabulated nonlinearities,
//! * [`profiles`] explicit radial solutions (Ψ-profiles, Hardy–Hénon families),
//! * [`spectral`] second-variation pencils, Morse indices and Hardy-type checks,
//! * [`estimates`] norms, energies and verifiers for pointwise/integral bounds,
//! * [`gelfand`] shooting construction of the Gelfand branch,
//! * [`degenerate`] penalised eigenvalues and sub/supersolution iteration.

pub mod degenerate;
pub mod error;
pub mod estimates;
pub mod gelfand;
pub mod grid;
pub mod nonlinearity;
pub mod ode;
pub mod params;
pub mod profiles;
mod quad;
pub mod spectral;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{GridKind, RadialGrid};
pub use nonlinearity::Nonlinearity;
pub use params::ProblemParams;
pub use profiles::RadialProfile;

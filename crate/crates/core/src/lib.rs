//! Numerical analysis of the damped oscillator
//! `u'' + α f(u') + β u = λ g(u)` with a convex, possibly singular forcing `g`.
//!
//! * [`model`]: forcing and damping families, assumption checks.
//! * [`stationary`]: fold point, `λ*`, `λ̄` and the branches `φ1 < φ2`.
//! * [`energy`]: the potential `J_λ`, energy `E_λ`, barrier point `l(λ)` and
//!   the global-existence set `D0`.
//! * [`dynamics`]: adaptive integration with event detection, blow-up and
//!   quench guards, orbit classification.
//! * [`manifold`]: equilibrium linearisation, stable-manifold shooting from
//!   the saddle, `α*(λ)` and the dynamical threshold `λ(0,0)(α)`.
//! * [`cli`]: the `pullin` command-line surface.

pub mod cli;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod manifold;
pub mod model;
pub mod ode;
pub mod output;
pub mod roots;
pub mod stationary;

pub use error::{Error, Result};
pub use model::{FModel, GModel};

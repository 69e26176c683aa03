//! Finite element solver for dynamic Monge-Kantorovich transport dynamics.
//!
//! The model couples an elliptic equation for a potential `u` with a
//! pointwise ODE for a transport conductivity `mu`:
//!
//! ```text
//!   -div(mu grad u) = f,          zero-flux boundary conditions,
//!   d(mu)/dt = (mu |grad u|)^beta - mu,
//! ```
//!
//! driven to steady state with explicit Euler steps and adaptive step size.
//! For `0 < beta < 1` the steady state solves a congested (p-Poisson)
//! problem; for `beta > 1` mass concentrates on branched network structures.
//!
//! Discretization: `mu` is piecewise constant (P0) on a coarse triangulation,
//! `u` is piecewise linear (P1) on its uniform refinement. [`mesh`] builds and
//! refines triangulations, [`forcing`] assembles load vectors, [`assembly`]
//! produces the weighted stiffness matrix, [`solver`] solves the singular
//! Neumann system with projected PCG, [`dynamics`] advances the conductivity,
//! and [`diagnostics`] evaluates Lyapunov values, exact radial references and
//! network geometry probes.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std` feature
//! only switches math intrinsics and error-trait impls.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assembly;
pub mod diagnostics;
pub mod dynamics;
pub mod forcing;
pub mod mesh;
pub mod solver;

pub use assembly::{FieldP0, FieldP1, SparseSymMatrix};
pub use dynamics::{SimConfig, SimState};
pub use mesh::{RefinedPair, Triangulation};

//! Classical numerical testbed for projected (quantum-Zeno) Hamiltonian
//! simulation of constrained linear differential-algebraic equations.
//!
//! The crate builds the moment-matching dilation of a constrained linear DAE
//! x' = Lx + C†λ, Cx = 0 into a projected Schrödinger evolution
//! Ψ' = −i PĤP Ψ, evolves it exactly, and checks every identity against
//! independent dense matrix-exponential oracles. On top of that sit the
//! MAC-discretized Stokes system, the Gaussian square-root (LCHS) simulation
//! of the reduced Stokes semigroup, the polynomial constraint-projector
//! surrogate, the RLC ladder example family, and the asymptotic cost model.
//!
//! Modules map one-to-one onto the subsystems:
//! - [`matrix`]: dense complex kernels (Kronecker, expm, kernel projector)
//! - [`dae`]: constrained DAE forms, Schur reduction, reference solutions
//! - [`dilation`]: moment ancilla, dilated system, recovery
//! - [`zeno`]: repeated-projection product and polynomial projector filter
//! - [`stokes`]: MAC staggered-grid Stokes operators
//! - [`gauss`]: Gaussian ancilla, heat dilation, Gauss–Hermite LCHS
//! - [`rlc`]: transmission-line ladder DAE family
//! - [`cost`]: query/gate-count calculator and crossover tables

pub mod config;
pub mod cost;
pub mod dae;
pub mod dilation;
pub mod error;
pub mod gauss;
pub mod matrix;
pub mod rlc;
pub mod stokes;
pub mod zeno;

pub use config::Tolerances;
pub use error::{Error, Result};

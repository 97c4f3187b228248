//! Numerical core for the stability analysis of a capillary water jet.
//!
//! The crate implements, on a periodic collocation grid:
//!
//! * spectral calculus on the torus (`spectral`): FFT pair, Fourier
//!   multipliers, Littlewood-Paley blocks, Sobolev norms;
//! * stable modified Bessel evaluation (`bessel`) feeding the flat
//!   Dirichlet-Neumann multiplier and the dispersion relation;
//! * the linearized theory at the undisturbed cylinder (`linear`):
//!   growing/dispersive eigen-speeds, spectral projections, the complex
//!   coordinate and the exact linear flow;
//! * the Dirichlet-Neumann operator for a deformed interface (`dno`) via a
//!   flattened-coordinate elliptic solve;
//! * the full nonlinear evolution (`dynamics`) with a Lawson exponential RK4
//!   integrator and the growth-rate scan harness;
//! * discrete paradifferential calculus (`paradiff`, `symbol`, `reduction`):
//!   quantization with an explicit cutoff, paraproducts and remainders,
//!   symbolic composition, the diagonalization symbols, good unknown and the
//!   diagonalized complex unknown, and the extended symbol/remainder;
//! * a paradifferential propagator (`propagator`) along stored background
//!   trajectories;
//! * Lyapunov-Perron solvers (`manifold`) for stable/unstable manifolds and
//!   the center set.
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion CLI
//! crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bessel;
pub mod dno;
pub mod dynamics;
pub mod error;
pub mod fft;
pub mod linalg;
pub mod linear;
pub mod manifold;
pub mod paradiff;
pub mod propagator;
pub mod reduction;
pub mod spectral;
pub mod symbol;

pub use error::{Error, Result};

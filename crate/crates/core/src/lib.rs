//! Desk-scale laboratory for the spectra of outputs of tensor products of
//! random quantum channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`symgroup`]: permutations of `S_m`, the Cayley metric, the fixed
//!   wirings of the diagram expansions and the geodesic `(A, B)` family.
//! * [`weingarten`]: exact rational unitary Weingarten tables and the
//!   leading-order Möbius approximation.
//! * [`linalg`]: dense complex matrices, partial traces, a Jacobi Hermitian
//!   eigensolver, Haar unitaries and von Neumann entropy.
//! * [`channels`]: Stinespring channels built from Haar unitaries, the input
//!   state families and the seeded Monte Carlo driver.
//! * [`moments`]: exact finite-dimension moment sums over `S_{2p} x S_{2p}`.
//! * [`asymptotics`]: closed-form limiting spectra, moments and the
//!   subset-sum oracles behind them.
//!
//! Data-parallel loops go through [`exec`], which dispatches to rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise. Every
//! reduction is merged in index order so results do not depend on the thread
//! count.

pub mod asymptotics;
pub mod channels;
mod error;
pub mod exec;
pub mod linalg;
pub mod moments;
pub mod rng;
pub mod symgroup;
pub mod weingarten;

pub use error::{Error, Result};
pub use exec::Exec;

pub use num_complex::Complex64;
pub use num_rational::BigRational;

//! Simulation of the quantum adiabatic algorithm on random 3-SAT.
//!
//! The crate is organised bottom-up:
//!
//! * [`sat`], [`dimacs`]: formulas, exhaustive counting, random generation.
//! * [`hamiltonian`]: implicit `H(s) = (1 - s) H(0) + s H(1)` and its
//!   degeneracy tables.
//! * [`eigen`]: thick-restart Lanczos for the lowest levels.
//! * [`spectra`]: spectrum sweeps, minimum-gap search, avoided-crossing fits
//!   and Landau-Zener times.
//! * [`dynamics`]: direct integration of the Schrödinger equation.
//! * [`gsat`]: the classical local-search baseline.
//! * [`harness`]: seeded experiment pipelines, CSV output, exponential fits.
//! * [`oracle`]: dense reference matrices for small `n`.

pub mod dimacs;
pub mod dynamics;
pub mod eigen;
pub mod gsat;
pub mod hamiltonian;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod sat;
pub mod spectra;

//! Structured-grid phase-field solver coupling Allen–Cahn, incompressible
//! Navier–Stokes and heat transport, with energy and entropy diagnostics.

pub mod constitutive;
pub mod grid;
pub mod solver;
pub mod timestepper;
pub mod diagnostics;
pub mod benchmarks;
pub mod app;

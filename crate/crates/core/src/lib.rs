//! Semi-Lagrangian Vlasov solver with a rotating velocity grid.
//!
//! The solver advances a distribution function `f(x, v, t)` on a periodic
//! phase-space grid of up to three spatial and three velocity axes, with a
//! constant magnetic field along `z`. Two split integrators are provided:
//! directional Strang splitting in the physical frame, and splitting on a
//! velocity grid that co-rotates with the gyration, where the `v×B` term
//! vanishes and only constant shifts remain.

pub mod cases;
pub mod cli;
pub mod diagnostics;
pub mod fields;
pub mod grid;
pub mod interpolation;
pub mod propagator;
pub mod rotation;

//! Solver library for multi-species Poisson--Nernst--Planck systems on
//! uniform cell-centered rectangular grids.
//!
//! The spatial discretization uses arithmetic-mean face mobilities with
//! summation-by-parts boundary handling, so the implicit steppers in
//! [`stepper`] conserve each species' discrete mass exactly, keep every
//! concentration strictly positive for any step size, and (for the
//! first-order scheme) dissipate the discrete free energy. Each step solves
//! one nonlinear system ([`nonlinear`]) by a damped Newton iteration with
//! ILU(0)-preconditioned GMRES; [`objective`] provides the strictly convex
//! functional whose constrained minimizer the step is, as an independent
//! dense oracle for small grids.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`];
//! the `*64` aliases below fix `f64` for everyday use.

pub mod boundary;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod model;
pub mod nonlinear;
pub mod objective;
pub mod ops;
pub mod poisson;
pub mod scalar;
pub mod sparse;
pub mod stepper;

pub use crate::error::Error;
pub use crate::scalar::Real;

/// `f64` grid.
pub type Grid64 = grid::Grid<f64>;
/// `f64` scalar field.
pub type Field64 = grid::Field<f64>;
/// `f64` boundary specification.
pub type BoundarySpec64 = boundary::BoundarySpec<f64>;
/// `f64` species specification.
pub type SpeciesSpec64 = model::SpeciesSpec<f64>;
/// `f64` problem specification.
pub type ProblemSpec64 = model::ProblemSpec<f64>;
/// `f64` state.
pub type State64 = model::State<f64>;
/// `f64` solver configuration.
pub type SolverConfig64 = nonlinear::SolverConfig<f64>;
/// `f64` step report.
pub type StepReport64 = diagnostics::StepReport<f64>;

/// `f32` grid.
pub type Grid32 = grid::Grid<f32>;
/// `f32` scalar field.
pub type Field32 = grid::Field<f32>;

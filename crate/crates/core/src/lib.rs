//! Desk-scale numerical laboratory for the density-dependent incompressible
//! Euler equations on the periodic torus, driven either by multiplicative
//! scalar noise (handled through the exponential change of variables) or by
//! an additive divergence-free Q-Wiener field.
//!
//! The solver constructs local solutions by successive approximation over
//! whole space-time trajectories: each sweep solves a density transport
//! problem, a variable-coefficient pressure equation, and a forced linear
//! transport problem, then projects onto divergence-free fields. Quantitative
//! side conditions (maximum principle, gradient growth, iterate boundedness,
//! Cauchy decay of iterate differences, pathwise uniqueness) are measured and
//! reported per run.

pub mod config;
pub mod elliptic;
pub mod fields;
pub mod io;
pub mod noise;
pub mod picard;
pub mod runner;
pub mod transport;

pub use fields::{GridSpec, ScalarField, ScalarSeries, TimeGrid, TimeSeries, VectorField, VectorSeries};

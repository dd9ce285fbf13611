//! Exponential functionals of killed subordinators: Bernstein–gamma
//! functions, Mellin inversion of the law of `∫₀^ζ e^{−ξ_t} dt`, large-x
//! asymptotics and Monte Carlo validation.

pub mod asymptotics;
pub mod bernstein;
pub mod bgamma;
pub mod cli;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod inversion;
pub mod montecarlo;
pub mod phi_star;
pub mod quad;
pub mod special;

pub use bernstein::{Atom, BernsteinSpec, ClosedForm, ComplexPoint, DensityMeasure, MeasureSpec};
pub use error::{Error, Result};
pub use special::C64;

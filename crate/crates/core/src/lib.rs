//! Entire radial solutions of `Δ^m u = ±e^u` in `R^N`, their conformal volume
//! `∫ e^u dx`, and shooting over initial data to prescribe that volume.
//!
//! The numerical core is generic over [`Real`] (`f32`/`f64`); the polynomial
//! Laplacian calculus in [`poly`] also works over exact rationals. Concrete
//! `f64` aliases are provided below for the common case.

pub mod error;
pub mod io;
pub mod ode;
pub mod poly;
pub mod problem;
pub mod quad;
pub mod scalar;
pub mod shooting;
pub mod verify;
pub mod volume;

pub use error::{Error, Result};
pub use ode::{integrate, reduce_rhs, Outcome, Trajectory};
pub use poly::{c0, laplacian_of_even_poly, EvenPolynomial};
pub use problem::{
    sphere_area, spherical_spec, IntegratorControls, ProblemSpec, RadialState, Sign,
};
pub use scalar::Real;
pub use shooting::{alpha_family, scan_branch, solve_for_volume, threshold_finder, Branch, PathSpec, ShootResult};
pub use verify::{run_suite, CheckReport, Suite};
pub use volume::{quad_volume, tail_bound, total_volume, TailMode, VolumeReport, VolumeSettings};

pub type ProblemSpecF64 = ProblemSpec<f64>;
pub type RadialStateF64 = RadialState<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type IntegratorControlsF64 = IntegratorControls<f64>;
pub type EvenPolynomialF64 = EvenPolynomial<f64>;
/// Exact rational polynomials for integer identities.
pub type EvenPolynomialQ = EvenPolynomial<num_rational::Rational64>;
pub type VolumeReportF64 = volume::VolumeReport<f64>;
pub type VolumeSettingsF64 = volume::VolumeSettings<f64>;
pub type PathSpecF64 = shooting::PathSpec<f64>;
pub type ShootResultF64 = shooting::ShootResult<f64>;

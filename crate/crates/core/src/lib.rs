//! Level-set wildfire spread with physics-informed networks.
//!
//! The crate trains a small dense network `û(t, x, y)` so that its zero
//! contour follows `ψ_t + S‖∇ψ‖ = 0`, solves the same equation with an
//! upwind finite-difference scheme for reference, and compares the two
//! through fireline Hausdorff distances. A residual assembly for the
//! flux-form Euler equations is included for loss-convergence studies.
//!
//! Most programs start from [`scenario::load_scenario`], then call
//! [`pinn::train`], [`classical::solve`] and [`geometry::compare_series`].

pub mod ad;
pub mod classical;
pub mod cli;
pub mod error;
pub mod euler;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod net;
pub mod optim;
pub mod pinn;
pub mod scenario;
pub mod spread;

pub use error::{Error, Result};

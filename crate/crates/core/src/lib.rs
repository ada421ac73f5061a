//! Conservative solutions of the two-component Camassa–Holm system.
//!
//! The equations are solved in Lagrangian variables, where they become a
//! semilinear system of ODEs that passes through wave breaking. The crate
//! provides the state spaces on both sides, the maps between them, the
//! time integrator, and two-sided estimates of a Lipschitz metric between
//! solutions.

pub mod dynamics;
pub mod error;
pub mod eulerian;
pub mod grid;
pub mod interp;
pub mod io;
pub mod lagrangian;
pub mod metric;
pub mod oracles;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::Grid;

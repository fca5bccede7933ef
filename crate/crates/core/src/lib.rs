//! Set computations for data-driven reachability of unknown linear systems.
//!
//! From noisy input-state trajectories the crate identifies sets of system
//! matrices consistent with the data, either as a plain matrix zonotope (MZ),
//! a constrained matrix zonotope (CMZ) that keeps the equality constraints
//! the data impose on the noise, or a nullspace matrix zonotope (NMZ) that
//! boxes the CMZ coefficient polytope in the nullspace of those constraints.
//! Each representation can be propagated forward to over-approximate the
//! reachable states, and each admits a Cai–Zhang style bound on how far the
//! singular subspaces of a member matrix can rotate away from the center's.
//!
//! ```
//! use ddreach::setrep::{Zonotope, interval_hull};
//! use nalgebra::{dmatrix, dvector};
//!
//! let z = Zonotope::new(dvector![1.0, 0.0], dmatrix![1.0, 0.5; 0.0, 0.25]).unwrap();
//! let hull = interval_hull(&z);
//! assert_eq!(hull.upper, dvector![2.5, 0.25]);
//! ```

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod identify;
pub mod lp;
pub mod nmz;
pub mod reach;
pub mod setrep;
pub mod spectral;

pub use error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;

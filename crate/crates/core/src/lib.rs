//! Volumetric topology-preservation toolkit for curvilinear structures.
//!
//! The crate is organised around a dense [`Volume`] carrier:
//!
//! * [`volume`]: dense arrays, NPY / raw+json IO, preprocessing, lattice rotations.
//! * [`morphology`]: truncated-window pooling, soft skeletonization and
//!   average-pooling topological smoothing.
//! * [`geometry`]: 2D Canny / exact EDT / medial axis, the mean pixel radius
//!   estimator for the iteration count, and 3D simple-point thinning.
//! * [`metrics`]: Dice, clDice, smoothing-based overlap score, ρ-Dice,
//!   adjusted Rand index and Betti numbers.
//! * [`loss`]: differentiable losses over a small reverse-mode tape.
//! * [`phantom`]: synthetic tubular volumes with analytic ground truth.
//!
//! Linear memory order is x-fastest everywhere: voxel `(x, y, z)` lives at
//! `x + nx * (y + ny * z)`.

pub mod error;
pub mod geometry;
pub mod loss;
pub mod metrics;
pub mod morphology;
pub mod numeric;
pub mod phantom;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{Adjacency, Axis, BinaryVolume, Connectivity, Shape, Volume};

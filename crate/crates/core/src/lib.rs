//! Computational geometry of the three-dimensional Heisenberg group and its
//! half-space cut metrics.
//!
//! - [`hgroup`]: group law, exponential coordinates, horizontal lifts.
//! - [`ccmetric`]: Carnot–Carathéodory distance, geodesics, lattice oracle.
//! - [`lines`]: horizontal lines, pair classification, joins and hyperbolas.
//! - [`cuts`]: half-spaces, cut measures and their cut metrics.
//! - [`monotone`]: set oracles and Monte-Carlo monotonicity along lines.
//! - [`distortion`]: exact minimal `L¹` distortion by an LP over the cut cone.

pub mod ccmetric;
pub mod cuts;
pub mod distortion;
pub mod error;
pub mod hgroup;
pub mod lines;
pub mod monotone;
pub mod quad;
pub mod rng;
pub mod window;

pub use error::{HeisError, Result};
pub use hgroup::{HPoint, Planar, Polyline2D, TangentVec};
pub use window::Box3;

//! Uniform random bipartite planar maps (2p-angulations) built from labelled
//! mobiles, discrete geodesic statistics on those maps, grid calculus for the
//! coding functions of the Brownian map, and a reproducible Monte Carlo harness
//! that checks the large-n scaling behaviour.
//!
//! The pipeline is
//!
//! ```text
//! sample_mobile ──► contour ──► build_map ──► geodesy / scalinglab
//!                      │
//!                      └──► continuum::from_mobile
//! ```

pub mod bdgmap;
pub mod continuum;
mod error;
pub mod fixtures;
pub mod geodesy;
pub mod mobile;
pub mod rmq;
pub mod rng;
pub mod scalinglab;
pub mod stats;

pub use bdgmap::{build_map, OrientedEdge, PlanarMap};
pub use error::{Error, Result};
pub use mobile::{contour, sample_mobile, ContourEncoding, Mobile, PTree, SamplerMode};

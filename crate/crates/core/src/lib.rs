//! Laboratory for boundary-penalized random walks on the integer lattice:
//! exact enumeration oracles, Markov-chain samplers for the penalized path
//! measures, spectral and electrical analysis of the tilted reference chain,
//! discrete isoperimetry checks, and scaling-exponent estimation.

pub mod error;
pub mod gibbs;
pub mod isoperimetry;
pub mod lattice;
pub mod oracle;
pub mod sampler;
pub mod scaling;
pub mod rng;
pub mod stats;
pub mod tilted;

pub use error::{Error, Result};
pub use lattice::boundary::{
    diameter, extents, inner_boundary, outer_boundary, parse_snapshot, snapshot_string,
    OuterBoundary,
};
pub use lattice::grid::OccupancyGrid;
pub use lattice::path::{sample_walk, sample_walk_edge_rate, JumpPath, OccupationField};
pub use lattice::{neighbors, LatticeSymmetry, Site, COORD_BOUND};
pub use rng::SeedSplitter;
pub use stats::{summarize, KahanSum, Summary};

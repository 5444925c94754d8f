//! Joint optimization of base-station vertical antenna tilts and RSS-based
//! cell partitions for a population of ground users and UAVs flying along
//! predefined aerial corridors.
//!
//! The crate is `no_std` (it needs `alloc`). The user domain is discretized
//! into a [`QuadratureGrid`]; the performance function is the density-weighted
//! mean RSS in dBm, and [`bs_vat`] alternates between the RSS-optimal
//! partition and decayed-step gradient ascent on the tilts.
//!
//! ## Features
//!
//! - `std`: links the standard library.
//! - `parallel`: evaluates partitions and link tables with `rayon`. Reductions
//!   stay sequential in grid order, so results are bit-identical to the
//!   single-threaded build.

#![cfg_attr(not(test), no_std)]
// `!(x >= y)` comparisons are written to also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(all(feature = "std", not(test)))]
extern crate std;

mod math;

pub mod cdf;
pub mod channel;
pub mod deployment;
pub mod error;
pub mod grid;
pub mod optimizer;
pub mod partition;
pub mod scenario;

pub use channel::{AntennaPattern, BaseStation, Link, Location, PathlossParams, Tilt};
pub use error::{Error, Result};
pub use grid::{
    discretize, GridPoint, MixtureDensity, Population, QuadratureGrid, RectRegion, RegionTag,
};
pub use optimizer::{
    bs_vat, centroid_tilts, finite_diff_check, gradient, gradient_ascent_inner, random_partition,
    ConvergenceTrace, InnerTrace, OptimizerConfig, OuterRecord, Termination, VatOutcome,
};
pub use partition::{
    compute_partition, performance, population_mean, rss_cdf, rss_field, Partition, TiltVector,
};
pub use scenario::{ChannelModel, Scenario};

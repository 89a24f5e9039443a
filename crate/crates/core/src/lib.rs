//! Time-series k-means clustering with elastic distances.
//!
//! The crate provides MSM and DTW distance kernels with alignment paths,
//! barycentre averaging (classic realign-and-mean and a seeded stochastic
//! subgradient search), the KASBA clusterer with elastic k-means++ seeding and
//! triangle-inequality-pruned assignment, Lloyd's baselines, and external
//! evaluation metrics. The [`cli`] module backs the `kasba` binary.

pub mod averaging;
pub mod cli;
pub mod clustering;
pub mod distances;
pub mod error;
pub mod metrics;
pub mod tsdata;

pub use averaging::{BarycentreConfig, BarycentreResult};
pub use clustering::{
    fit_baseline, fit_kasba, BaselineConfig, BaselineInit, BaselineKind, CentroidSeed, ClusterModel, KasbaConfig,
};
pub use distances::{AlignmentPath, CallCounter, CallCounts, DistanceKind, Stage};
pub use error::{Error, Result};
pub use metrics::{EvalReport, Scores};
pub use tsdata::{Dataset, Split, TimeSeries};

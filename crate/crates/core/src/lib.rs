//! Contiguous regionalization of spatial time series.
//!
//! Locations carrying discrete-valued time series are partitioned into
//! spatially contiguous regions, each summarised by a majority-vote "driver"
//! series. The partition minimises a two-part description length: bits to
//! describe the regions and drivers plus bits to describe every series given
//! its region's driver. The number of regions is chosen by the same
//! objective.
//!
//! The main entry points are [`optimizer::greedy_regionalize`] and, for small
//! instances, [`optimizer::exact_regionalize`].

pub mod cluster_state;
pub mod codelength;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod ingest;
pub mod optimizer;
pub mod synthetic;

pub use cluster_state::{ClusterModel, ClusterState, SymbolMatrix};
pub use codelength::{CodelengthBreakdown, GraphConstants};
pub use error::{Error, Result};
pub use graph::SpatialGraph;
pub use optimizer::{MergeTrajectory, Partition};

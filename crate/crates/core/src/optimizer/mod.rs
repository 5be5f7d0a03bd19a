//! Minimising the description length over contiguous partitions.

use serde::{Deserialize, Serialize};

use crate::cluster_state::{ClusterModel, ClusterState, SymbolMatrix};
use crate::codelength::{total_description_length, CodelengthBreakdown, GraphConstants};
use crate::error::{Error, Result};
use crate::graph::{canonicalize_labels, log_spanning_tree_count, DisjointSets, SpatialGraph};

mod exact;
mod greedy;

pub use exact::{
    enumerate_connected_partitions, exact_regionalize, exact_regionalize_with, ConnectedPartitions, MAX_EXACT_NODES,
};
pub use greedy::{
    greedy_regionalize, greedy_regionalize_opts, greedy_regionalize_with, regionalize_fixed_d,
    regionalize_fixed_d_opts, regionalize_fixed_d_with,
};

/// How the constant `log2 |spanning trees|` term is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SpanningTreeTerm {
    /// Factorise the graph Laplacian.
    #[default]
    Compute,
    /// Report zero. The term never changes which partition is selected.
    Skip,
    /// A value computed earlier for the same graph.
    Known(f64),
}

impl SpanningTreeTerm {
    pub fn resolve(self, g: &SpatialGraph) -> Result<f64> {
        match self {
            SpanningTreeTerm::Compute => log_spanning_tree_count(g),
            SpanningTreeTerm::Skip => Ok(0.0),
            SpanningTreeTerm::Known(bits) => Ok(bits),
        }
    }
}

/// When queued merge costs involving a freshly merged cluster are recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueueRefresh {
    /// Re-score every neighbour of the merged cluster immediately, so each
    /// step takes the adjacent pair of least cost. Work per merge grows with
    /// the merged cluster's boundary.
    #[default]
    Eager,
    /// Re-score a queued pair only when it reaches the top of the queue,
    /// then requeue it. A pair whose cost fell since it was queued can be
    /// taken later than the eager rule would take it.
    Lazy,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GreedyOptions {
    pub tree: SpanningTreeTerm,
    pub refresh: QueueRefresh,
}

/// A contiguous partition with its drivers and codelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Cluster id (`1..=D`) per location, numbered by smallest member.
    pub labels: Vec<usize>,
    /// 1-based driver symbols, indexed by `label - 1`.
    pub drivers: Vec<Vec<u16>>,
    pub breakdown: CodelengthBreakdown,
}

impl Partition {
    /// Evaluate an arbitrary labelling from scratch. Labels are canonicalised
    /// and every cluster must induce a connected subgraph of `g`.
    pub fn from_labels(z: &SymbolMatrix, g: &SpatialGraph, labels: &[usize], spanning_tree_bits: f64) -> Result<Self> {
        check_inputs(z, g)?;
        if labels.len() != z.n_series() {
            return Err(Error::Input(format!("{} labels for {} series", labels.len(), z.n_series())));
        }
        let labels = canonicalize_labels(labels);
        if !g.clusters_are_connected(&labels) {
            return Err(Error::Invariant("partition has a non-contiguous cluster".into()));
        }
        let states = cluster_states(z, &labels)?;
        let constants = constants(z, spanning_tree_bits);
        let breakdown = total_description_length(&states, &constants)?;
        Ok(Self { labels, drivers: states.iter().map(ClusterState::driver_symbols).collect(), breakdown })
    }

    pub fn n_clusters(&self) -> usize {
        self.drivers.len()
    }

    /// Member lists, indexed by `label - 1`.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l - 1].push(i);
        }
        out
    }
}

/// Cluster states for canonical labels `1..=D`.
pub fn cluster_states(z: &SymbolMatrix, labels: &[usize]) -> Result<Vec<ClusterState>> {
    let model = ClusterModel::new(z);
    let d = labels.iter().copied().max().unwrap_or(0);
    let mut members = vec![Vec::new(); d];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            return Err(Error::Input("labels must be positive".into()));
        }
        members[l - 1].push(i);
    }
    members.iter().map(|m| model.from_members(z, m)).collect()
}

/// One row of the merge trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// Number of clusters after this step.
    pub n_clusters: usize,
    /// Smallest members of the two clusters merged, `None` for the initial
    /// singleton state.
    pub merged: Option<(usize, usize)>,
    pub total_bits: f64,
}

/// Description length after every greedy merge, from `N` singletons down to
/// however far the run went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeTrajectory {
    pub steps: Vec<TrajectoryStep>,
    /// Index of the minimum `total_bits`, earliest on ties.
    pub best_step_index: usize,
    /// The all-singletons breakdown.
    pub baseline: CodelengthBreakdown,
}

impl MergeTrajectory {
    pub fn best(&self) -> &TrajectoryStep {
        &self.steps[self.best_step_index]
    }

    /// Canonical labels after the first `step` merges.
    pub fn labels_at(&self, step: usize) -> Result<Vec<usize>> {
        if step >= self.steps.len() {
            return Err(Error::Input(format!("step {step} is beyond the trajectory ({} steps)", self.steps.len())));
        }
        let n = self.steps[0].n_clusters;
        let mut sets = DisjointSets::new(n);
        for s in &self.steps[1..=step] {
            let (a, b) = s.merged.ok_or_else(|| Error::Invariant("merge step without a merged pair".into()))?;
            if !sets.union(a, b) {
                return Err(Error::Invariant(format!("step merges {a} and {b}, which are already joined")));
            }
        }
        Ok(sets.canonical_labels())
    }

    pub(crate) fn select_best(steps: &[TrajectoryStep]) -> usize {
        let mut best = 0;
        for (k, s) in steps.iter().enumerate() {
            if s.total_bits < steps[best].total_bits {
                best = k;
            }
        }
        best
    }
}

pub(crate) fn constants(z: &SymbolMatrix, spanning_tree_bits: f64) -> GraphConstants {
    GraphConstants {
        n_locations: z.n_series(),
        series_length: z.series_length(),
        alphabet_size: z.alphabet_size(),
        spanning_tree_bits,
    }
}

pub(crate) fn check_inputs(z: &SymbolMatrix, g: &SpatialGraph) -> Result<()> {
    if g.n_nodes() != z.n_series() {
        return Err(Error::Input(format!("graph has {} nodes but data has {} series", g.n_nodes(), z.n_series())));
    }
    g.ensure_connected()
}

/// All-singletons partition, the compression baseline.
pub fn singleton_partition(z: &SymbolMatrix, g: &SpatialGraph, spanning_tree_bits: f64) -> Result<Partition> {
    Partition::from_labels(z, g, &(1..=z.n_series()).collect::<Vec<_>>(), spanning_tree_bits)
}

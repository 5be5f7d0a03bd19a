use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::hash::BuildHasherDefault;

use super::{
    check_inputs, constants, GreedyOptions, MergeTrajectory, Partition, QueueRefresh, SpanningTreeTerm, TrajectoryStep,
};
use crate::cluster_state::{ClusterModel, ClusterStats, MergeScratch, SymbolMatrix};
use crate::codelength::{driver_cost, log_binomial, CodelengthBreakdown};
use crate::error::{Error, Result};
use crate::graph::SpatialGraph;

// Fixed hasher so iteration order does not depend on a random seed.
type NeighborSet = HashSet<usize, BuildHasherDefault<std::collections::hash_map::DefaultHasher>>;

/// Queue entry for merging the clusters in two slots. Stale once either
/// slot's version moves on.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    delta: f64,
    /// smallest members, ordered
    key: (usize, usize),
    slots: (usize, usize),
    versions: (u32, u32),
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // reversed: BinaryHeap is a max-heap and we want the smallest delta
    fn cmp(&self, other: &Self) -> Ordering {
        other.delta.total_cmp(&self.delta).then_with(|| other.key.cmp(&self.key))
    }
}

struct Greedy<'a> {
    model: ClusterModel,
    clusters: Vec<Option<ClusterStats>>,
    versions: Vec<u32>,
    neighbors: Vec<NeighborSet>,
    heap: BinaryHeap<Candidate>,
    g: &'a SpatialGraph,
    refresh: QueueRefresh,
    /// queue length that triggers dropping stale entries
    compact_at: usize,
    scratch: MergeScratch,
    evaluated: usize,
}

impl Greedy<'_> {
    fn candidate(&mut self, a: usize, b: usize) -> Candidate {
        self.evaluated += 1;
        let (ca, cb) = (self.clusters[a].as_ref().unwrap(), self.clusters[b].as_ref().unwrap());
        let (ra, rb) = (ca.representative(), cb.representative());
        Candidate {
            delta: self.model.stats_merge_delta_in(ca, cb, &mut self.scratch),
            key: (ra.min(rb), ra.max(rb)),
            slots: (a, b),
            versions: (self.versions[a], self.versions[b]),
        }
    }

    fn is_live(&self, c: &Candidate) -> bool {
        let (a, b) = c.slots;
        self.clusters[a].is_some()
            && self.clusters[b].is_some()
            && self.versions[a] == c.versions.0
            && self.versions[b] == c.versions.1
    }

    fn seed_queue(&mut self) {
        let edges = self.g.edges();
        let mut heap = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            let c = self.candidate(i, j);
            heap.push(c);
        }
        self.heap = BinaryHeap::from(heap);
        for (i, set) in self.neighbors.iter_mut().enumerate() {
            set.extend(self.g.neighbors(i).iter().copied());
        }
    }

    /// Merge the two slots; returns `(old costs, new cost, merged key)`.
    fn merge(&mut self, a: usize, b: usize) -> Result<(f64, f64, (usize, usize))> {
        // keep the slot with the larger neighbour set so unions move the smaller one
        let (keep, drop) = if self.neighbors[a].len() >= self.neighbors[b].len() { (a, b) } else { (b, a) };
        let ck = self.clusters[keep].take().unwrap();
        let cd = self.clusters[drop].take().unwrap();
        let old = ck.cached_cost() + cd.cached_cost();
        let key = {
            let (x, y) = (ck.representative(), cd.representative());
            (x.min(y), x.max(y))
        };
        let merged = self.model.stats_merge(ck, &cd)?;
        let new = merged.cached_cost();
        self.clusters[keep] = Some(merged);
        self.versions[keep] += 1;
        self.versions[drop] += 1;

        let moved = std::mem::take(&mut self.neighbors[drop]);
        let mut fresh = Vec::new();
        for n in moved {
            self.neighbors[n].remove(&drop);
            if n != keep {
                self.neighbors[n].insert(keep);
                if self.neighbors[keep].insert(n) {
                    fresh.push(n);
                }
            }
        }
        self.neighbors[keep].remove(&drop);

        // Lazy: pairs already adjacent to `keep` keep their queued entry and
        // are re-scored when it surfaces. Eager: re-score every neighbour now.
        if self.refresh == QueueRefresh::Eager {
            fresh = self.neighbors[keep].iter().copied().collect();
        }
        fresh.sort_unstable();
        for n in fresh {
            let c = self.candidate(keep, n);
            self.heap.push(c);
        }
        if self.heap.len() > self.compact_at {
            // at most one kept entry per adjacent pair, so this stays amortised O(1) per push
            let heap = std::mem::take(&mut self.heap);
            let live: Vec<Candidate> = heap.into_vec().into_iter().filter(|c| self.worth_keeping(c)).collect();
            self.heap = BinaryHeap::from(live);
        }
        Ok((old, new, key))
    }

    /// Lazy refresh still needs entries whose versions moved on.
    fn worth_keeping(&self, c: &Candidate) -> bool {
        match self.refresh {
            QueueRefresh::Eager => self.is_live(c),
            QueueRefresh::Lazy => self.clusters[c.slots.0].is_some() && self.clusters[c.slots.1].is_some(),
        }
    }

    fn pop_live(&mut self) -> Option<Candidate> {
        while let Some(c) = self.heap.pop() {
            let (a, b) = c.slots;
            if self.clusters[a].is_none() || self.clusters[b].is_none() {
                continue;
            }
            if self.is_live(&c) {
                return Some(c);
            }
            if self.refresh == QueueRefresh::Lazy {
                let c = self.candidate(a, b);
                self.heap.push(c);
            }
        }
        None
    }
}

/// Run greedy merges from singletons until `stop_at` clusters remain.
fn run(z: &SymbolMatrix, g: &SpatialGraph, options: &GreedyOptions, stop_at: usize) -> Result<MergeTrajectory> {
    run_compacting(z, g, options, stop_at, 1024)
}

/// `slack` is how far past twice the edge count the queue may grow before
/// stale entries are dropped.
fn run_compacting(
    z: &SymbolMatrix,
    g: &SpatialGraph,
    options: &GreedyOptions,
    stop_at: usize,
    slack: usize,
) -> Result<MergeTrajectory> {
    check_inputs(z, g)?;
    let n = z.n_series();
    let tree_bits = options.tree.resolve(g)?;
    let consts = constants(z, tree_bits);
    let model = ClusterModel::new(z);
    let clusters: Vec<Option<ClusterStats>> = (0..n).map(|i| Some(model.singleton_stats(z, i))).collect();

    let baseline = CodelengthBreakdown::from_terms(
        tree_bits,
        log_binomial(n as u64 - 1, n as u64 - 1)?,
        driver_cost(n, z.series_length(), z.alphabet_size()),
        clusters.iter().flatten().map(ClusterStats::table_bits).sum(),
        clusters.iter().flatten().map(ClusterStats::member_bits).sum(),
    );

    let mut local: f64 = clusters.iter().flatten().map(ClusterStats::cached_cost).sum();
    let mut steps = Vec::with_capacity(n - stop_at + 1);
    steps.push(TrajectoryStep { n_clusters: n, merged: None, total_bits: consts.global_bits(n)? + local });

    let mut state = Greedy {
        model,
        clusters,
        versions: vec![0; n],
        neighbors: vec![NeighborSet::default(); n],
        heap: BinaryHeap::new(),
        g,
        refresh: options.refresh,
        compact_at: usize::MAX,
        scratch: MergeScratch::default(),
        evaluated: 0,
    };
    state.seed_queue();
    state.compact_at = 2 * g.n_edges() + slack;

    let mut d = n;
    while d > stop_at {
        let c = state
            .pop_live()
            .ok_or_else(|| Error::Invariant("no admissible merge left before reaching the target".into()))?;
        let (old, new, key) = state.merge(c.slots.0, c.slots.1)?;
        local += new - old;
        d -= 1;
        steps.push(TrajectoryStep { n_clusters: d, merged: Some(key), total_bits: consts.global_bits(d)? + local });
    }

    log::debug!("greedy: {} candidate evaluations", state.evaluated);
    let best_step_index = MergeTrajectory::select_best(&steps);
    Ok(MergeTrajectory { steps, best_step_index, baseline })
}

/// Greedy agglomerative regionalisation with automatic choice of the number
/// of regions.
///
/// Starting from singletons, the adjacent pair whose merge increases the
/// description length least is merged until one region is left. The
/// returned partition is the one at the trajectory minimum.
pub fn greedy_regionalize(z: &SymbolMatrix, g: &SpatialGraph) -> Result<(MergeTrajectory, Partition)> {
    greedy_regionalize_with(z, g, SpanningTreeTerm::Compute)
}

pub fn greedy_regionalize_with(
    z: &SymbolMatrix,
    g: &SpatialGraph,
    tree: SpanningTreeTerm,
) -> Result<(MergeTrajectory, Partition)> {
    greedy_regionalize_opts(z, g, &GreedyOptions { tree, ..Default::default() })
}

pub fn greedy_regionalize_opts(
    z: &SymbolMatrix,
    g: &SpatialGraph,
    options: &GreedyOptions,
) -> Result<(MergeTrajectory, Partition)> {
    if z.n_series() == 0 {
        return Err(Error::Input("no series".into()));
    }
    let trajectory = run(z, g, options, 1)?;
    let partition = partition_at(z, g, &trajectory, trajectory.best_step_index)?;
    Ok((trajectory, partition))
}

/// Greedy merges stopped at exactly `target_d` regions.
pub fn regionalize_fixed_d(z: &SymbolMatrix, g: &SpatialGraph, target_d: usize) -> Result<Partition> {
    regionalize_fixed_d_with(z, g, target_d, SpanningTreeTerm::Compute).map(|(_, p)| p)
}

pub fn regionalize_fixed_d_with(
    z: &SymbolMatrix,
    g: &SpatialGraph,
    target_d: usize,
    tree: SpanningTreeTerm,
) -> Result<(MergeTrajectory, Partition)> {
    regionalize_fixed_d_opts(z, g, target_d, &GreedyOptions { tree, ..Default::default() })
}

pub fn regionalize_fixed_d_opts(
    z: &SymbolMatrix,
    g: &SpatialGraph,
    target_d: usize,
    options: &GreedyOptions,
) -> Result<(MergeTrajectory, Partition)> {
    if target_d == 0 || target_d > z.n_series() {
        return Err(Error::Input(format!("target cluster count {target_d} outside [1, {}]", z.n_series())));
    }
    let trajectory = run(z, g, options, target_d)?;
    let last = trajectory.steps.len() - 1;
    let partition = partition_at(z, g, &trajectory, last)?;
    Ok((trajectory, partition))
}

fn partition_at(z: &SymbolMatrix, g: &SpatialGraph, trajectory: &MergeTrajectory, step: usize) -> Result<Partition> {
    let labels = trajectory.labels_at(step)?;
    Partition::from_labels(z, g, &labels, trajectory.baseline.spanning_tree_bits)
}

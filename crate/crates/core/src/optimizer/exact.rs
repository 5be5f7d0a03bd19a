use std::collections::HashMap;

use super::{check_inputs, constants, Partition, SpanningTreeTerm};
use crate::cluster_state::{ClusterModel, SymbolMatrix};
use crate::error::{Error, Result};
use crate::graph::SpatialGraph;

/// Largest graph the exhaustive search accepts.
pub const MAX_EXACT_NODES: usize = 12;

struct Frame {
    assigned: u32,
    blocks: Vec<u32>,
    next: usize,
}

/// Iterator over every partition of the nodes into connected blocks, each
/// yielded once as canonical labels `1..=D`.
///
/// Blocks are grown by seeded expansion: the smallest unassigned node seeds
/// the next block, which ranges over all connected node sets containing the
/// seed and drawn from the unassigned nodes.
pub struct ConnectedPartitions {
    n: usize,
    adjacency: Vec<u32>,
    stack: Vec<Frame>,
}

impl ConnectedPartitions {
    fn full(&self) -> u32 {
        if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        }
    }

    fn is_connected(&self, set: u32) -> bool {
        let start = set & set.wrapping_neg();
        let mut reached = start;
        let mut frontier = start;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let new = self.adjacency[v] & set & !reached;
            reached |= new;
            frontier |= new;
        }
        reached == set
    }

    fn frame(&self, assigned: u32) -> Frame {
        let free = self.full() & !assigned;
        let seed = free & free.wrapping_neg();
        let rest = free & !seed;
        let mut blocks = Vec::new();
        // every subset of `rest`, via the standard submask walk
        let mut sub = rest;
        loop {
            let block = sub | seed;
            if self.is_connected(block) {
                blocks.push(block);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        blocks.sort_unstable();
        Frame { assigned, blocks, next: 0 }
    }

    fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (k, f) in self.stack.iter().enumerate() {
            let mut block = f.blocks[f.next - 1];
            while block != 0 {
                labels[block.trailing_zeros() as usize] = k + 1;
                block &= block - 1;
            }
        }
        labels
    }
}

impl Iterator for ConnectedPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        loop {
            let top = self.stack.last_mut()?;
            if top.next == top.blocks.len() {
                self.stack.pop();
                continue;
            }
            let assigned = top.assigned | top.blocks[top.next];
            top.next += 1;
            if assigned == self.full() {
                let labels = self.labels();
                return Some(labels);
            }
            let frame = self.frame(assigned);
            self.stack.push(frame);
        }
    }
}

pub fn enumerate_connected_partitions(g: &SpatialGraph) -> Result<ConnectedPartitions> {
    let n = g.n_nodes();
    if n > MAX_EXACT_NODES {
        return Err(Error::Input(format!(
            "exact enumeration is limited to {MAX_EXACT_NODES} nodes (got {n}); the number of \
             connected partitions grows super-exponentially, use the greedy optimiser instead"
        )));
    }
    let adjacency = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w))).collect();
    let mut it = ConnectedPartitions { n, adjacency, stack: Vec::new() };
    if n > 0 {
        let first = it.frame(0);
        it.stack.push(first);
    }
    Ok(it)
}

/// Global minimiser of the description length over all contiguous
/// partitions. Ties go to fewer clusters, then to the lexicographically
/// smaller label vector.
pub fn exact_regionalize(z: &SymbolMatrix, g: &SpatialGraph) -> Result<Partition> {
    exact_regionalize_with(z, g, SpanningTreeTerm::Compute)
}

pub fn exact_regionalize_with(z: &SymbolMatrix, g: &SpatialGraph, tree: SpanningTreeTerm) -> Result<Partition> {
    let partitions = enumerate_connected_partitions(g)?;
    check_inputs(z, g)?;
    let tree_bits = tree.resolve(g)?;
    let consts = constants(z, tree_bits);
    let model = ClusterModel::new(z);
    let global: Vec<f64> = (1..=z.n_series()).map(|d| consts.global_bits(d)).collect::<Result<_>>()?;

    let mut block_cost: HashMap<u32, f64> = HashMap::new();
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for labels in partitions {
        let d = *labels.iter().max().unwrap();
        let mut masks = vec![0u32; d];
        for (i, &l) in labels.iter().enumerate() {
            masks[l - 1] |= 1 << i;
        }
        let mut total = global[d - 1];
        for mask in masks {
            total += match block_cost.get(&mask) {
                Some(&c) => c,
                None => {
                    let members: Vec<usize> = (0..z.n_series()).filter(|&i| mask >> i & 1 == 1).collect();
                    let c = model.from_members(z, &members)?.cached_cost();
                    block_cost.insert(mask, c);
                    c
                }
            };
        }
        let better = match &best {
            None => true,
            Some((bt, bd, bl)) => total < *bt || (total == *bt && (d < *bd || (d == *bd && labels < *bl))),
        };
        if better {
            best = Some((total, d, labels));
        }
    }
    let (_, _, labels) = best.ok_or_else(|| Error::Input("empty graph".into()))?;
    Partition::from_labels(z, g, &labels, tree_bits)
}

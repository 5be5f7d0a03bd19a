//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

/// `log2(k!)` for `k <= max` by summing `log2(j)` directly.
pub struct NaiveLogFactorial(Vec<f64>);

impl NaiveLogFactorial {
    pub fn new(max: usize) -> Self {
        let mut v = vec![0.0; max + 1];
        for k in 1..=max {
            v[k] = v[k - 1] + (k as f64).log2();
        }
        Self(v)
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn binomial(&self, n: usize, k: usize) -> f64 {
        self.get(n) - self.get(k) - self.get(n - k)
    }
}

/// Per-time majority vote, ties to the smallest symbol. Symbols are 1-based.
pub fn naive_driver(rows: &[&Vec<u16>], s: usize) -> Vec<u16> {
    let t_len = rows[0].len();
    (0..t_len)
        .map(|t| {
            let mut counts = vec![0usize; s + 1];
            for r in rows {
                counts[r[t] as usize] += 1;
            }
            let mut best = 1;
            for sym in 2..=s {
                if counts[sym] > counts[best] {
                    best = sym;
                }
            }
            best as u16
        })
        .collect()
}

/// Bits for one cluster given an explicit driver, counted directly from the
/// rows: `sum_r [log C(S + n c_r - 1, n c_r) + log((n c_r)! / prod_s c_rs!)]`.
pub fn naive_cluster_bits(rows: &[&Vec<u16>], driver: &[u16], s: usize, lf: &NaiveLogFactorial) -> f64 {
    let n = rows.len();
    let mut marg = vec![0usize; s + 1];
    for &d in driver {
        marg[d as usize] += 1;
    }
    let mut table = vec![vec![0usize; s + 1]; s + 1];
    for r in rows {
        for (t, &d) in driver.iter().enumerate() {
            table[d as usize][r[t] as usize] += 1;
        }
    }
    let mut bits = 0.0;
    for r in 1..=s {
        let k = n * marg[r];
        bits += lf.binomial(s + k - 1, k);
        bits += lf.get(k) - (1..=s).map(|c| lf.get(table[r][c])).sum::<f64>();
    }
    bits
}

/// Total description length of a labelling, evaluated from scratch.
pub fn naive_total_bits(rows: &[Vec<u16>], labels: &[usize], s: usize, tree_bits: f64) -> f64 {
    let n = rows.len();
    let t = rows[0].len();
    let lf = NaiveLogFactorial::new(n * t + s + 1);
    let mut groups: HashMap<usize, Vec<&Vec<u16>>> = HashMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(&rows[i]);
    }
    let d = groups.len();
    let mut bits = tree_bits + lf.binomial(n - 1, d - 1) + (d * t) as f64 * (s as f64).log2();
    for members in groups.values() {
        let driver = naive_driver(members, s);
        bits += naive_cluster_bits(members, &driver, s, &lf);
    }
    bits
}

/// Undirected multigraph on at most 16 vertices as an edge-multiplicity matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Multigraph {
    n: usize,
    m: Vec<u32>,
}

impl Multigraph {
    fn mult(&self, i: usize, j: usize) -> u32 {
        self.m[i * self.n + j]
    }

    fn degree(&self, i: usize) -> u32 {
        (0..self.n).map(|j| self.mult(i, j)).sum()
    }

    fn remove_vertex(&self, v: usize) -> Self {
        let keep: Vec<usize> = (0..self.n).filter(|&i| i != v).collect();
        let n = keep.len();
        let mut m = vec![0; n * n];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                m[a * n + b] = self.mult(i, j);
            }
        }
        Self { n, m }
    }

    /// Merge `v` into `u`, dropping the resulting loops.
    fn contract(&self, u: usize, v: usize) -> Self {
        let mut g = self.clone();
        for k in 0..self.n {
            if k != u && k != v {
                let add = self.mult(v, k);
                g.m[u * self.n + k] += add;
                g.m[k * self.n + u] += add;
            }
        }
        g.m[u * self.n + v] = 0;
        g.m[v * self.n + u] = 0;
        g.remove_vertex(v)
    }

    fn connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, visited) in seen.iter_mut().enumerate() {
                if self.mult(i, j) > 0 && !*visited {
                    *visited = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

fn count_trees(g: &Multigraph, memo: &mut HashMap<Multigraph, u128>) -> u128 {
    if g.n <= 1 {
        return 1;
    }
    if let Some(&c) = memo.get(g) {
        return c;
    }
    let result = if !g.connected() {
        0
    } else if let Some(v) = (0..g.n).find(|&v| g.degree(v) > 0 && (0..g.n).filter(|&j| g.mult(v, j) > 0).count() == 1) {
        // a vertex with a single neighbour: every tree uses exactly one of its parallel edges
        g.degree(v) as u128 * count_trees(&g.remove_vertex(v), memo)
    } else {
        let (u, v) = (0..g.n).flat_map(|i| (i + 1..g.n).map(move |j| (i, j))).find(|&(i, j)| g.mult(i, j) > 0).unwrap();
        let k = g.mult(u, v) as u128;
        let mut deleted = g.clone();
        deleted.m[u * g.n + v] = 0;
        deleted.m[v * g.n + u] = 0;
        count_trees(&deleted, memo) + k * count_trees(&g.contract(u, v), memo)
    };
    memo.insert(g.clone(), result);
    result
}

/// Exact spanning-tree count by deletion-contraction.
pub fn spanning_tree_count(n: usize, edges: &[(usize, usize)]) -> u128 {
    let mut m = vec![0; n * n];
    for &(i, j) in edges {
        m[i * n + j] += 1;
        m[j * n + i] += 1;
    }
    count_trees(&Multigraph { n, m }, &mut HashMap::new())
}

/// Simple graph on `n <= 8` vertices as an upper-triangle bitmask.
pub type GraphBits = u32;

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = (i.min(j), i.max(j));
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn graph_edges(n: usize, bits: GraphBits) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| bits >> pair_index(n, i, j) & 1 == 1)
        .collect()
}

fn adjacency(n: usize, bits: GraphBits) -> Vec<u32> {
    let mut adj = vec![0u32; n];
    for (i, j) in graph_edges(n, bits) {
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    adj
}

/// Colour refinement: vertices end up in ordered classes that any
/// isomorphism must preserve.
fn refined_classes(n: usize, adj: &[u32]) -> Vec<Vec<usize>> {
    let mut color = vec![0usize; n];
    loop {
        let sig: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> = (0..n).filter(|&w| adj[v] >> w & 1 == 1).map(|w| color[w]).collect();
                nb.sort_unstable();
                (color[v], nb)
            })
            .collect();
        let mut distinct: Vec<&(usize, Vec<usize>)> = sig.iter().collect();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> = sig.iter().map(|s| distinct.binary_search(&s).unwrap()).collect();
        let stable = distinct.len() == color.iter().collect::<HashSet<_>>().len();
        color = next;
        if stable {
            break;
        }
    }
    let k = color.iter().max().map_or(0, |&c| c + 1);
    let mut classes = vec![Vec::new(); k];
    for (v, &c) in color.iter().enumerate() {
        classes[c].push(v);
    }
    classes
}

fn permutations_of(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let first = rest.remove(k);
        for mut p in permutations_of(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

/// Canonical form: the smallest relabelled bitmask over all vertex orders
/// that list the refined classes in order.
pub fn canonical_form(n: usize, bits: GraphBits) -> GraphBits {
    let adj = adjacency(n, bits);
    let classes = refined_classes(n, &adj);
    let per_class: Vec<Vec<Vec<usize>>> = classes.iter().map(|c| permutations_of(c)).collect();
    let mut best = GraphBits::MAX;
    let mut choice = vec![0usize; classes.len()];
    let edges = graph_edges(n, bits);
    loop {
        // order[new position] = old vertex
        let mut position = vec![0usize; n];
        let mut next = 0;
        for (c, perms) in per_class.iter().enumerate() {
            for &v in &perms[choice[c]] {
                position[v] = next;
                next += 1;
            }
        }
        let relabelled = edges.iter().fold(0, |acc, &(i, j)| acc | 1 << pair_index(n, position[i], position[j]));
        best = best.min(relabelled);
        let mut c = 0;
        loop {
            if c == choice.len() {
                return best;
            }
            choice[c] += 1;
            if choice[c] < per_class[c].len() {
                break;
            }
            choice[c] = 0;
            c += 1;
        }
    }
}

/// One representative of every isomorphism class of simple graphs on `n`
/// vertices, grown edge by edge from the empty graph.
pub fn all_graphs(n: usize) -> Vec<GraphBits> {
    let pairs = n * n.saturating_sub(1) / 2;
    let mut level: HashSet<GraphBits> = HashSet::from([0]);
    let mut all: Vec<GraphBits> = vec![0];
    for _ in 0..pairs {
        let mut next = HashSet::new();
        for &g in &level {
            for p in 0..pairs {
                if g >> p & 1 == 0 {
                    next.insert(canonical_form(n, g | 1 << p));
                }
            }
        }
        all.extend(next.iter().copied());
        level = next;
    }
    all
}

pub fn is_connected(n: usize, bits: GraphBits) -> bool {
    let adj = adjacency(n, bits);
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let new = adj[v] & !seen;
        seen |= new;
        frontier |= new;
    }
    seen.count_ones() as usize == n
}

/// Adjusted mutual information with the expectation taken by averaging over
/// every permutation of `b`.
pub fn brute_force_ami(a: &[usize], b: &[usize]) -> f64 {
    fn mi(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len() as f64;
        let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
        let mut pa: HashMap<usize, f64> = HashMap::new();
        let mut pb: HashMap<usize, f64> = HashMap::new();
        for (&x, &y) in a.iter().zip(b) {
            *joint.entry((x, y)).or_default() += 1.0 / n;
            *pa.entry(x).or_default() += 1.0 / n;
            *pb.entry(y).or_default() += 1.0 / n;
        }
        joint.iter().map(|(&(x, y), &p)| p * (p / (pa[&x] * pb[&y])).ln()).sum()
    }
    fn entropy(a: &[usize]) -> f64 {
        let n = a.len() as f64;
        let mut c: HashMap<usize, f64> = HashMap::new();
        for &x in a {
            *c.entry(x).or_default() += 1.0;
        }
        c.values().map(|&k| -(k / n) * (k / n).ln()).sum()
    }
    let idx: Vec<usize> = (0..b.len()).collect();
    let perms = permutations_of(&idx);
    let emi =
        perms.iter().map(|p| mi(a, &p.iter().map(|&k| b[k]).collect::<Vec<_>>())).sum::<f64>() / perms.len() as f64;
    (mi(a, b) - emi) / (entropy(a).max(entropy(b)) - emi)
}

//! Description-length arithmetic, in bits.
//!
//! Every term of the objective is a base-2 logarithm of a count of
//! configurations. Nothing here is rounded: codelengths are compared between
//! candidate models, never emitted as a bitstream.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `n!` for `n <= 20`, the largest factorial that fits in a `u64`.
const EXACT_FACTORIAL: [u64; 21] = {
    let mut table = [1u64; 21];
    let mut i = 1;
    while i <= 20 {
        table[i] = table[i - 1] * i as u64;
        i += 1;
    }
    table
};

/// `log2(n!)`.
///
/// Exact (up to `f64` rounding of the logarithm) for `n <= 20`, log-gamma
/// above that.
pub fn log_factorial(n: u64) -> f64 {
    if n <= 20 {
        (EXACT_FACTORIAL[n as usize] as f64).log2()
    } else {
        ln_gamma(n as f64 + 1.0) / std::f64::consts::LN_2
    }
}

/// `log2 C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("binomial C({n}, {k}) has k > n")));
    }
    Ok(log_binomial_unchecked(n, k))
}

#[inline]
fn log_binomial_unchecked(n: u64, k: u64) -> f64 {
    // Symmetric by construction: the same two terms are subtracted for k and n-k.
    let (lo, hi) = if k <= n - k { (k, n - k) } else { (n - k, k) };
    (log_factorial(n) - log_factorial(lo) - log_factorial(hi)).max(0.0)
}

/// `log2` of the multiset coefficient `C(n + k - 1, k)`: the number of ways to
/// distribute `k` indistinguishable items over `n` labelled bins.
pub fn log_multiset(n: u64, k: u64) -> Result<f64> {
    if n == 0 {
        return if k == 0 {
            Ok(0.0)
        } else {
            Err(Error::Domain(format!("multiset coefficient with n = 0 and k = {k}")))
        };
    }
    Ok(log_binomial_unchecked(n + k - 1, k))
}

/// Bits to specify a contiguous partition into `n_clusters` pieces: a spanning
/// tree of the adjacency graph plus the choice of `D - 1` tree edges to cut.
pub fn partition_cost(n_locations: usize, n_clusters: usize, spanning_tree_bits: f64) -> Result<f64> {
    if n_clusters == 0 || n_clusters > n_locations {
        return Err(Error::Domain(format!("cluster count {n_clusters} outside [1, {n_locations}]")));
    }
    Ok(spanning_tree_bits + log_binomial_unchecked(n_locations as u64 - 1, n_clusters as u64 - 1))
}

/// Bits for `D` driver series of length `T` over an alphabet of `S` symbols.
pub fn driver_cost(n_clusters: usize, series_length: usize, alphabet_size: usize) -> f64 {
    n_clusters as f64 * series_length as f64 * (alphabet_size as f64).log2()
}

/// Bits to transmit the rows of a cluster's contingency table given the
/// driver's symbol marginals: row `r` is a composition of `n_d * c_r` into `S`
/// nonnegative parts.
pub fn table_cost(driver_marginals: &[i64], cluster_size: usize, alphabet_size: usize) -> Result<f64> {
    let mut bits = 0.0;
    for &c in driver_marginals {
        if c < 0 {
            return Err(Error::Domain(format!("negative driver marginal {c}")));
        }
        bits += log_multiset(alphabet_size as u64, cluster_size as u64 * c as u64)?;
    }
    Ok(bits)
}

/// Bits to transmit the member series given the contingency table: one
/// multinomial coefficient per driver symbol row.
///
/// `contingency` is a dense row-major `S x S` table.
pub fn member_cost(contingency: &[u64], alphabet_size: usize) -> f64 {
    contingency
        .chunks(alphabet_size.max(1))
        .map(|row| {
            let total: u64 = row.iter().sum();
            log_factorial(total) - row.iter().map(|&c| log_factorial(c)).sum::<f64>()
        })
        .sum()
}

/// The five terms of the total description length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodelengthBreakdown {
    pub spanning_tree_bits: f64,
    pub partition_choice_bits: f64,
    pub driver_bits: f64,
    pub table_bits: f64,
    pub member_bits: f64,
    pub total_bits: f64,
}

impl CodelengthBreakdown {
    pub fn from_terms(
        spanning_tree_bits: f64,
        partition_choice_bits: f64,
        driver_bits: f64,
        table_bits: f64,
        member_bits: f64,
    ) -> Self {
        Self {
            spanning_tree_bits,
            partition_choice_bits,
            driver_bits,
            table_bits,
            member_bits,
            total_bits: spanning_tree_bits + partition_choice_bits + driver_bits + table_bits + member_bits,
        }
    }

    /// Terms that depend only on `(N, D, T, S)` and the graph.
    pub fn global_bits(&self) -> f64 {
        self.spanning_tree_bits + self.partition_choice_bits + self.driver_bits
    }
}

/// Problem-wide quantities shared by every partition of the same data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConstants {
    pub n_locations: usize,
    pub series_length: usize,
    pub alphabet_size: usize,
    pub spanning_tree_bits: f64,
}

impl GraphConstants {
    /// Partition-choice plus driver bits for a partition into `n_clusters`.
    pub fn global_bits(&self, n_clusters: usize) -> Result<f64> {
        Ok(partition_cost(self.n_locations, n_clusters, self.spanning_tree_bits)?
            + driver_cost(n_clusters, self.series_length, self.alphabet_size))
    }
}

/// Assemble the full objective from a set of cluster states that partition the
/// locations.
pub fn total_description_length(
    clusters: &[crate::cluster_state::ClusterState],
    constants: &GraphConstants,
) -> Result<CodelengthBreakdown> {
    let n = constants.n_locations;
    let mut seen = vec![false; n];
    let mut table_bits = 0.0;
    let mut member_bits = 0.0;
    for cluster in clusters {
        for &m in cluster.members() {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(Error::Invariant(format!("node {m} is out of range or appears in more than one cluster")));
            }
        }
        if cluster.series_length() != constants.series_length || cluster.alphabet_size() != constants.alphabet_size {
            return Err(Error::Invariant("cluster shape does not match the dataset".into()));
        }
        let (table, member) = cluster.cost_terms()?;
        table_bits += table;
        member_bits += member;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Invariant(format!("node {missing} is not assigned to any cluster")));
    }
    let d = clusters.len();
    let partition_choice_bits = log_binomial(n as u64 - 1, d as u64 - 1)?;
    Ok(CodelengthBreakdown::from_terms(
        constants.spanning_tree_bits,
        partition_choice_bits,
        driver_cost(d, constants.series_length, constants.alphabet_size),
        table_bits,
        member_bits,
    ))
}

/// Dense `log2(k!)` lookup for `k <= max`, filled from [`log_factorial`] so it
/// returns identical values.
#[derive(Debug, Clone)]
pub struct LogFactorialTable {
    values: Vec<f64>,
}

impl LogFactorialTable {
    pub fn new(max: usize) -> Self {
        Self { values: (0..=max as u64).map(log_factorial).collect() }
    }

    #[inline]
    pub fn get(&self, k: u64) -> f64 {
        match self.values.get(k as usize) {
            Some(&v) => v,
            None => log_factorial(k),
        }
    }

    #[inline]
    pub fn log_multiset(&self, n: u64, k: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        // same subtraction order as log_binomial, so results agree bit for bit
        let (lo, hi) = if k < n { (k, n - 1) } else { (n - 1, k) };
        (self.get(n + k - 1) - self.get(lo) - self.get(hi)).max(0.0)
    }
}

//! Partition-quality metrics.

use std::collections::HashMap;
use std::hash::Hash;

use statrs::function::gamma::ln_gamma;

use crate::codelength::CodelengthBreakdown;
use crate::error::{Error, Result};

fn ln_fact(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Dense contingency table between two labelings plus its margins.
struct Contingency {
    n: usize,
    table: Vec<Vec<usize>>,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl Contingency {
    fn new<A: Hash + Eq, B: Hash + Eq>(a: &[A], b: &[B]) -> Self {
        let mut a_ids: HashMap<&A, usize> = HashMap::new();
        let mut b_ids: HashMap<&B, usize> = HashMap::new();
        let ai: Vec<usize> = a
            .iter()
            .map(|x| {
                let next = a_ids.len();
                *a_ids.entry(x).or_insert(next)
            })
            .collect();
        let bi: Vec<usize> = b
            .iter()
            .map(|x| {
                let next = b_ids.len();
                *b_ids.entry(x).or_insert(next)
            })
            .collect();
        let mut table = vec![vec![0usize; b_ids.len()]; a_ids.len()];
        for (&i, &j) in ai.iter().zip(&bi) {
            table[i][j] += 1;
        }
        let rows = table.iter().map(|r| r.iter().sum()).collect();
        let cols = (0..b_ids.len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        Self { n: a.len(), table, rows, cols }
    }
}

fn entropy(margins: &[usize], n: usize) -> f64 {
    let n = n as f64;
    margins
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(c: &Contingency) -> f64 {
    let n = c.n as f64;
    let mut mi = 0.0;
    for (i, row) in c.table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (c.rows[i] as f64 * c.cols[j] as f64)).ln();
            }
        }
    }
    mi
}

/// Expected mutual information between two random labelings with the given
/// margins, under the hypergeometric (permutation) model.
fn expected_mutual_information(rows: &[usize], cols: &[usize], n: usize) -> f64 {
    let nf = n as f64;
    let ln_n_fact = ln_fact(n);
    let mut emi = 0.0;
    for &a in rows {
        for &b in cols {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let fixed = ln_fact(a) + ln_fact(b) + ln_fact(n - a) + ln_fact(n - b) - ln_n_fact;
            for nij in lo..=hi {
                let term = nij as f64 / nf * (nf * nij as f64 / (a as f64 * b as f64)).ln();
                let ln_p = fixed - ln_fact(nij) - ln_fact(a - nij) - ln_fact(b - nij) - ln_fact(n + nij - a - b);
                emi += term * ln_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information with the max-entropy normalisation,
/// `(MI - E[MI]) / (max(H(a), H(b)) - E[MI])`.
///
/// Returns 0 when either labeling has a single cluster. When the normaliser
/// vanishes otherwise (for example both labelings all-singletons) the result
/// is 1 for identical partitions and 0 otherwise.
pub fn adjusted_mutual_information<A: Hash + Eq, B: Hash + Eq>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Input(format!("label vectors differ in length ({} vs {})", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Input("label vectors are empty".into()));
    }
    let c = Contingency::new(a, b);
    if c.rows.len() == 1 || c.cols.len() == 1 {
        return Ok(0.0);
    }
    let mi = mutual_information(&c);
    let emi = expected_mutual_information(&c.rows, &c.cols, c.n);
    let h = entropy(&c.rows, c.n).max(entropy(&c.cols, c.n));
    let denom = h - emi;
    if denom.abs() < 1e-12 {
        let identical =
            c.rows.len() == c.cols.len() && c.table.iter().all(|r| r.iter().filter(|&&x| x > 0).count() == 1);
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((mi - emi) / denom)
}

/// Selected codelength over the all-singletons codelength; below 1 means the
/// regions compress the data.
pub fn inverse_compression_ratio(selected: &CodelengthBreakdown, baseline: &CodelengthBreakdown) -> Result<f64> {
    if baseline.total_bits <= 0.0 {
        return Err(Error::Domain("baseline description length is zero".into()));
    }
    Ok(selected.total_bits / baseline.total_bits)
}

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::LltRegularization;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, simplicial::SimplicialLltRef, supernodal::SupernodalLltRef, SymbolicCholeskyRaw,
    SymmetricOrdering,
};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Par, Side};

use super::{DisjointSets, SpatialGraph};
use crate::error::{Error, Result};

/// `log2` of the number of spanning trees of `g`.
///
/// Matrix-tree theorem: the count is the determinant of the Laplacian with
/// the last row and column removed. The reduced Laplacian of a connected graph
/// is positive definite, so its log-determinant is read off the diagonal of a
/// sparse Cholesky factor (AMD fill-reducing ordering).
pub fn log_spanning_tree_count(g: &SpatialGraph) -> Result<f64> {
    g.ensure_connected()?;
    let n = g.n_nodes();
    if n <= 2 || g.n_edges() == n - 1 {
        return Ok(0.0);
    }
    let dim = n - 1;
    let mut triplets = Vec::with_capacity(dim + 2 * g.n_edges());
    for v in 0..dim {
        triplets.push(Triplet::new(v, v, g.neighbors(v).len() as f64));
    }
    for &(i, j) in g.edges() {
        if j < dim {
            triplets.push(Triplet::new(i, j, -1.0));
            triplets.push(Triplet::new(j, i, -1.0));
        }
    }
    let laplacian = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &triplets)
        .map_err(|e| Error::Graph(format!("building reduced Laplacian: {e:?}")))?;

    let symbolic =
        factorize_symbolic_cholesky(laplacian.symbolic(), Side::Lower, SymmetricOrdering::Amd, Default::default())
            .map_err(|e| Error::Graph(format!("symbolic factorization: {e:?}")))?;
    let mut values = vec![0.0f64; symbolic.len_val()];
    let par = Par::Seq;
    let mut mem = MemBuffer::new(symbolic.factorize_numeric_llt_scratch::<f64>(par, Default::default()));
    symbolic
        .factorize_numeric_llt(
            &mut values,
            laplacian.as_ref(),
            Side::Lower,
            LltRegularization::default(),
            par,
            MemStack::new(&mut mem),
            Default::default(),
        )
        .map_err(|e| Error::Graph(format!("reduced Laplacian is not positive definite: {e:?}")))?;

    let mut log_det = 0.0;
    match symbolic.raw() {
        SymbolicCholeskyRaw::Simplicial(s) => {
            let llt = SimplicialLltRef::<usize, f64>::new(s, &values);
            let col_ptr = s.col_ptr();
            let row_idx = s.row_idx();
            for j in 0..dim {
                if row_idx[col_ptr[j]] != j {
                    return Err(Error::Invariant("unexpected Cholesky factor layout".into()));
                }
                log_det += llt.values()[col_ptr[j]].log2();
            }
        }
        SymbolicCholeskyRaw::Supernodal(s) => {
            let llt = SupernodalLltRef::<usize, f64>::new(s, &values);
            for k in 0..s.n_supernodes() {
                let block = llt.supernode(k).val();
                for c in 0..block.ncols() {
                    log_det += block[(c, c)].log2();
                }
            }
        }
    }
    // det = prod(diag(L))^2
    Ok((2.0 * log_det).max(0.0))
}

/// Per-edge Euclidean lengths, aligned with [`SpatialGraph::edges`].
pub fn euclidean_weights(g: &SpatialGraph) -> Result<Vec<f64>> {
    let coords = g.coordinates().ok_or_else(|| Error::Input("graph has no coordinates".into()))?;
    Ok(g.edges()
        .iter()
        .map(|&(i, j)| {
            let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
            dx.hypot(dy)
        })
        .collect())
}

/// Kruskal's algorithm. `weights[k]` belongs to `g.edges()[k]`; equal weights
/// are resolved by lexicographic `(i, j)` order.
pub fn minimum_spanning_tree(g: &SpatialGraph, weights: &[f64]) -> Result<SpatialGraph> {
    if weights.len() != g.n_edges() {
        return Err(Error::Input(format!("{} weights for {} edges", weights.len(), g.n_edges())));
    }
    if let Some(k) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Input(format!("edge weight {k} is negative or not finite")));
    }
    g.ensure_connected()?;
    let edges = g.edges();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    // edges() is already lexicographic, so a stable sort by weight keeps that order on ties
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
    let mut sets = DisjointSets::new(g.n_nodes());
    let tree: Vec<_> = order.into_iter().filter(|&k| sets.union(edges[k].0, edges[k].1)).map(|k| edges[k]).collect();
    SpatialGraph::from_edges(g.n_nodes(), tree, g.coordinates().map(<[_]>::to_vec))
}

use spade::{DelaunayTriangulation, InsertionError, Point2, Triangulation};

use super::SpatialGraph;
use crate::error::{Error, Result};

/// Voronoi-neighbour adjacency for scattered points, built as the edge set of
/// the Delaunay triangulation.
///
/// Points are inserted in index order, so degenerate (cocircular) inputs
/// always produce the same triangulation.
pub fn build_delaunay_adjacency(points: &[(f64, f64)]) -> Result<SpatialGraph> {
    if points.len() < 3 {
        return Err(Error::Graph(format!("Delaunay adjacency needs at least 3 points, got {}", points.len())));
    }
    if let Some(i) = points.iter().position(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Input(format!("point {i} has a non-finite coordinate")));
    }
    let duplicates = duplicate_groups(points);
    if !duplicates.is_empty() {
        return Err(Error::Input(format!("duplicate points at indices {duplicates:?}")));
    }

    let vertices: Vec<Point2<f64>> = points.iter().map(|&(x, y)| Point2::new(x, y)).collect();
    let tri = DelaunayTriangulation::<Point2<f64>>::bulk_load_stable(vertices).map_err(|e| {
        Error::Input(match e {
            InsertionError::NAN => "coordinate is NaN".to_string(),
            InsertionError::TooSmall | InsertionError::TooLarge => {
                "coordinate magnitude outside the supported range".to_string()
            }
        })
    })?;
    if tri.num_vertices() != points.len() {
        return Err(Error::Invariant("triangulation dropped vertices".into()));
    }
    if tri.num_inner_faces() == 0 {
        return Err(Error::Graph("all points are collinear".into()));
    }
    let edges = tri.undirected_edges().map(|e| {
        let [a, b] = e.vertices();
        (a.fix().index(), b.fix().index())
    });
    SpatialGraph::from_edges(points.len(), edges.collect::<Vec<_>>(), Some(points.to_vec()))
}

/// Groups of indices sharing identical coordinates (`-0.0 == 0.0`).
fn duplicate_groups(points: &[(f64, f64)]) -> Vec<Vec<usize>> {
    let key = |i: usize| {
        let (x, y) = points[i];
        ((x + 0.0).to_bits(), (y + 0.0).to_bits())
    };
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| (key(i), i));
    let mut groups = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && key(order[end]) == key(order[k]) {
            end += 1;
        }
        if end - k > 1 {
            groups.push(order[k..end].to_vec());
        }
        k = end;
    }
    groups
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cluster_state::SymbolMatrix;
use crate::codelength::CodelengthBreakdown;
use crate::error::{Error, Result};
use crate::evaluation::inverse_compression_ratio;
use crate::optimizer::{cluster_states, MergeTrajectory, Partition, TrajectoryStep};

/// Provenance of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub flags: BTreeMap<String, String>,
    /// SHA-256 of the symbol matrix, see [`SymbolMatrix::content_hash`].
    pub data_hash: String,
    pub n_locations: usize,
    pub series_length: usize,
    pub alphabet_size: usize,
    /// Sites dropped for incompleteness.
    pub removed_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub label: usize,
    pub size: usize,
    /// 1-based driver symbols.
    pub driver: Vec<u16>,
    /// Fraction of member time points that differ from the driver.
    pub mismatch_rate: f64,
    pub table_bits: f64,
    pub member_bits: f64,
    /// `table_bits + member_bits`.
    pub contingency_bits: f64,
}

/// The JSON result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub metadata: RunMetadata,
    pub site_ids: Vec<String>,
    pub labels: Vec<usize>,
    pub clusters: Vec<ClusterSummary>,
    pub breakdown: CodelengthBreakdown,
    pub baseline: CodelengthBreakdown,
    pub eta: f64,
    pub trajectory: Option<MergeTrajectory>,
}

impl ResultDocument {
    pub fn partition(&self) -> Partition {
        Partition {
            labels: self.labels.clone(),
            drivers: self.clusters.iter().map(|c| c.driver.clone()).collect(),
            breakdown: self.breakdown,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Assemble the result document. `baseline` is the all-singletons
/// breakdown on the same data and graph.
pub fn serialize_result(
    z: &SymbolMatrix,
    site_ids: &[String],
    partition: &Partition,
    trajectory: Option<&MergeTrajectory>,
    baseline: &CodelengthBreakdown,
    metadata: RunMetadata,
) -> Result<ResultDocument> {
    if site_ids.len() != partition.labels.len() {
        return Err(Error::Input(format!("{} site ids for {} labels", site_ids.len(), partition.labels.len())));
    }
    let states = cluster_states(z, &partition.labels)?;
    let clusters = states
        .iter()
        .enumerate()
        .map(|(k, c)| ClusterSummary {
            label: k + 1,
            size: c.size(),
            driver: c.driver_symbols(),
            mismatch_rate: c.mismatch_rate(),
            table_bits: c.table_bits(),
            member_bits: c.member_bits(),
            contingency_bits: c.table_bits() + c.member_bits(),
        })
        .collect();
    Ok(ResultDocument {
        metadata,
        site_ids: site_ids.to_vec(),
        labels: partition.labels.clone(),
        clusters,
        breakdown: partition.breakdown,
        baseline: *baseline,
        eta: inverse_compression_ratio(&partition.breakdown, baseline)?,
        trajectory: trajectory.cloned(),
    })
}

/// `id,cluster` rows.
pub fn write_labels_csv(path: &Path, site_ids: &[String], labels: &[usize]) -> Result<()> {
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(["id", "cluster"]).map_err(wrap)?;
    for (id, l) in site_ids.iter().zip(labels) {
        w.write_record([id.as_str(), &l.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read `id,cluster` rows; the cluster column is kept as text.
pub fn read_labels_csv(path: &Path) -> Result<Vec<(String, String)>> {
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(wrap)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(wrap)?;
            match (rec.get(0), rec.get(1)) {
                (Some(id), Some(c)) => Ok((id.to_owned(), c.to_owned())),
                _ => Err(Error::Input(format!("{}: expected id,cluster rows", path.display()))),
            }
        })
        .collect()
}

/// `D,merged_a,merged_b,total_bits`; the merged columns are empty for the
/// initial singleton row.
pub fn write_trajectory_csv(path: &Path, steps: &[TrajectoryStep]) -> Result<()> {
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(["D", "merged_a", "merged_b", "total_bits"]).map_err(wrap)?;
    for s in steps {
        let (a, b) = s.merged.map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
        w.write_record([s.n_clusters.to_string(), a, b, s.total_bits.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Point features with `id` and `cluster` properties.
pub fn geojson_points(site_ids: &[String], coordinates: &[(f64, f64)], labels: &[usize]) -> serde_json::Value {
    let features: Vec<_> = site_ids
        .iter()
        .zip(coordinates)
        .zip(labels)
        .map(|((id, (x, y)), l)| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [x, y] },
                "properties": { "id": id, "cluster": l },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

pub fn write_geojson(path: &Path, site_ids: &[String], coordinates: &[(f64, f64)], labels: &[usize]) -> Result<()> {
    let text = serde_json::to_string_pretty(&geojson_points(site_ids, coordinates, labels))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

//! Loading raw series, cleaning and binning them, and writing results.

use std::path::Path;

use crate::error::{Error, Result};

mod output;
mod table;

pub use output::{
    geojson_points, read_labels_csv, serialize_result, write_geojson, write_labels_csv, write_trajectory_csv,
    ClusterSummary, ResultDocument, RunMetadata,
};
pub use table::{
    discretize_uniform, discretize_values, filter_completeness, interpolate_missing, interpolate_series,
    passthrough_categorical, passthrough_integer, read_coordinates, write_wide, CompletenessReport, RawSeriesTable,
    SeriesTable,
};

/// Parse `key=value` lines. Blank lines and lines starting with `#` are
/// skipped; whitespace around keys and values is trimmed.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(k, line)| (k + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(k, line)| {
            line.split_once('=')
                .map(|(key, value)| (key.trim().to_owned(), value.trim().to_owned()))
                .ok_or_else(|| Error::Input(format!("config line {k}: expected key=value, got {line:?}")))
        })
        .collect()
}

pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// One category per non-empty line, in ordinal order.
pub fn read_categories(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect())
}

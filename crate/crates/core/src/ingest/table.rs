use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::cluster_state::SymbolMatrix;
use crate::error::{Error, Result};

/// Sites by time steps, with per-site coordinates and missing entries.
///
/// `V` is the cell type: `f64` for measurements, `String` for categorical
/// readings before they are mapped to symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable<V> {
    pub site_ids: Vec<String>,
    pub coordinates: Vec<(f64, f64)>,
    pub timestamps: Vec<String>,
    /// `values[i][t]`, `None` where missing.
    pub values: Vec<Vec<Option<V>>>,
}

pub type RawSeriesTable = SeriesTable<f64>;

/// Sites dropped by [`filter_completeness`] and why.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletenessReport {
    pub removed: Vec<(String, f64)>,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("NA")
}

fn parse_coordinate(path: &Path, row: usize, field: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Input(format!("{}: row {row}: {field} {value:?} is not a finite number", path.display())))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv { path: path.into(), source })
}

fn check_header(path: &Path, header: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = header.iter().take(expected.len()).collect();
    if got.len() < expected.len() || !got.iter().zip(expected).all(|(a, b)| a.eq_ignore_ascii_case(b)) {
        return Err(Error::Input(format!(
            "{}: header must start with {}, found {}",
            path.display(),
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

impl<V: Clone> SeriesTable<V> {
    pub fn n_sites(&self) -> usize {
        self.site_ids.len()
    }

    pub fn n_times(&self) -> usize {
        self.timestamps.len()
    }

    fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for (i, id) in self.site_ids.iter().enumerate() {
            if let Some(j) = seen.insert(id, i) {
                return Err(Error::Input(format!("site id {id:?} appears on rows {j} and {i}")));
            }
        }
        Ok(())
    }

    fn map_cells<W>(&self, mut f: impl FnMut(&V) -> Result<W>) -> Result<SeriesTable<W>> {
        let values = self
            .values
            .iter()
            .map(|row| row.iter().map(|c| c.as_ref().map(&mut f).transpose()).collect())
            .collect::<Result<_>>()?;
        Ok(SeriesTable {
            site_ids: self.site_ids.clone(),
            coordinates: self.coordinates.clone(),
            timestamps: self.timestamps.clone(),
            values,
        })
    }

    /// Fraction of non-missing entries in row `i`.
    pub fn completeness(&self, i: usize) -> f64 {
        let row = &self.values[i];
        row.iter().filter(|c| c.is_some()).count() as f64 / row.len() as f64
    }
}

impl SeriesTable<String> {
    /// Wide layout: header `id,x,y,t1,...,tT`. Empty cells and `NA` are missing.
    pub fn read_wide(path: &Path) -> Result<Self> {
        let mut reader = csv_reader(path)?;
        let header = reader.headers().map_err(|source| Error::Csv { path: path.into(), source })?.clone();
        check_header(path, &header, &["id", "x", "y"])?;
        let timestamps: Vec<String> = header.iter().skip(3).map(str::to_owned).collect();
        if timestamps.is_empty() {
            return Err(Error::Input(format!("{}: no time columns after id,x,y", path.display())));
        }
        let mut table = Self { site_ids: Vec::new(), coordinates: Vec::new(), timestamps, values: Vec::new() };
        for (k, record) in reader.records().enumerate() {
            let record = record.map_err(|source| Error::Csv { path: path.into(), source })?;
            let row = k + 2;
            if record.len() != header.len() {
                return Err(Error::Input(format!(
                    "{}: row {row} has {} fields, header has {}",
                    path.display(),
                    record.len(),
                    header.len()
                )));
            }
            table.site_ids.push(record[0].to_owned());
            table
                .coordinates
                .push((parse_coordinate(path, row, "x", &record[1])?, parse_coordinate(path, row, "y", &record[2])?));
            table.values.push(record.iter().skip(3).map(|c| (!is_missing(c)).then(|| c.to_owned())).collect());
        }
        table.check_unique_ids()?;
        Ok(table)
    }

    /// Long layout: header `id,x,y,timestamp,value`, one observation per
    /// line. Timestamps are ordered numerically when they all parse as
    /// numbers and lexicographically otherwise (ISO dates sort correctly).
    pub fn read_long(path: &Path) -> Result<Self> {
        let mut reader = csv_reader(path)?;
        let header = reader.headers().map_err(|source| Error::Csv { path: path.into(), source })?.clone();
        check_header(path, &header, &["id", "x", "y", "timestamp", "value"])?;
        let mut sites: Vec<String> = Vec::new();
        let mut site_index: HashMap<String, usize> = HashMap::new();
        let mut coordinates = Vec::new();
        let mut cells: HashMap<(usize, String), Option<String>> = HashMap::new();
        let mut stamps: Vec<String> = Vec::new();
        for (k, record) in reader.records().enumerate() {
            let record = record.map_err(|source| Error::Csv { path: path.into(), source })?;
            let row = k + 2;
            if record.len() < 5 {
                return Err(Error::Input(format!("{}: row {row} has fewer than 5 fields", path.display())));
            }
            let xy = (parse_coordinate(path, row, "x", &record[1])?, parse_coordinate(path, row, "y", &record[2])?);
            let site = match site_index.get(&record[0]) {
                Some(&i) => {
                    if coordinates[i] != xy {
                        return Err(Error::Input(format!(
                            "{}: row {row}: site {:?} changes coordinates",
                            path.display(),
                            &record[0]
                        )));
                    }
                    i
                }
                None => {
                    site_index.insert(record[0].to_owned(), sites.len());
                    sites.push(record[0].to_owned());
                    coordinates.push(xy);
                    sites.len() - 1
                }
            };
            let stamp = record[3].to_owned();
            let value = (!is_missing(&record[4])).then(|| record[4].to_owned());
            if cells.insert((site, stamp.clone()), value).is_some() {
                return Err(Error::Input(format!(
                    "{}: row {row}: duplicate observation for site {:?} at {stamp:?}",
                    path.display(),
                    &record[0]
                )));
            }
            stamps.push(stamp);
        }
        let numeric: Option<Vec<f64>> = stamps.iter().map(|s| s.parse::<f64>().ok()).collect();
        let timestamps: Vec<String> = match numeric {
            Some(_) => {
                let mut by_value: BTreeMap<u64, String> = BTreeMap::new();
                for s in &stamps {
                    let v: f64 = s.parse().unwrap();
                    // order-preserving key for finite and infinite doubles
                    let bits = v.to_bits();
                    let key = if v.is_sign_negative() { !bits } else { bits | (1 << 63) };
                    if let Some(prev) = by_value.insert(key, s.clone()) {
                        if &prev != s {
                            return Err(Error::Input(format!(
                                "{}: timestamps {prev:?} and {s:?} denote the same time",
                                path.display()
                            )));
                        }
                    }
                }
                by_value.into_values().collect()
            }
            None => {
                let mut t = stamps.clone();
                t.sort();
                t.dedup();
                t
            }
        };
        let values = (0..sites.len())
            .map(|i| timestamps.iter().map(|t| cells.get(&(i, t.clone())).cloned().flatten()).collect())
            .collect();
        Ok(Self { site_ids: sites, coordinates, timestamps, values })
    }

    /// Pick the layout from the header: a `timestamp` fourth column means long.
    pub fn read_auto(path: &Path) -> Result<Self> {
        let mut reader = csv_reader(path)?;
        let header = reader.headers().map_err(|source| Error::Csv { path: path.into(), source })?;
        let long = header.len() == 5 && header.get(3).is_some_and(|h| h.eq_ignore_ascii_case("timestamp"));
        if long {
            Self::read_long(path)
        } else {
            Self::read_wide(path)
        }
    }

    pub fn parse_numeric(&self) -> Result<RawSeriesTable> {
        self.map_cells(|c| {
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Input(format!("value {c:?} is not a finite number")))
        })
    }
}

/// Read `id,x,y` coordinates.
pub fn read_coordinates(path: &Path) -> Result<Vec<(String, (f64, f64))>> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|source| Error::Csv { path: path.into(), source })?.clone();
    check_header(path, &header, &["id", "x", "y"])?;
    reader
        .records()
        .enumerate()
        .map(|(k, r)| {
            let r = r.map_err(|source| Error::Csv { path: path.into(), source })?;
            let row = k + 2;
            Ok((r[0].to_owned(), (parse_coordinate(path, row, "x", &r[1])?, parse_coordinate(path, row, "y", &r[2])?)))
        })
        .collect()
}

/// Drop sites observed at fewer than `min_fraction` of the time steps.
pub fn filter_completeness<V: Clone>(
    table: &SeriesTable<V>,
    min_fraction: f64,
) -> Result<(SeriesTable<V>, CompletenessReport)> {
    if !(min_fraction > 0.0 && min_fraction <= 1.0) {
        return Err(Error::Domain(format!("completeness threshold {min_fraction} outside (0, 1]")));
    }
    let mut kept = SeriesTable {
        site_ids: Vec::new(),
        coordinates: Vec::new(),
        timestamps: table.timestamps.clone(),
        values: Vec::new(),
    };
    let mut removed = Vec::new();
    for i in 0..table.n_sites() {
        let fraction = table.completeness(i);
        // compare counts, not fractions, so 80 of 100 passes 0.8 exactly
        let observed = table.values[i].iter().filter(|c| c.is_some()).count() as f64;
        if observed + 1e-9 >= min_fraction * table.n_times() as f64 {
            kept.site_ids.push(table.site_ids[i].clone());
            kept.coordinates.push(table.coordinates[i]);
            kept.values.push(table.values[i].clone());
        } else {
            removed.push((table.site_ids[i].clone(), fraction));
        }
    }
    if kept.site_ids.is_empty() {
        return Err(Error::Input(format!(
            "no site reaches the completeness threshold {min_fraction} ({} removed)",
            removed.len()
        )));
    }
    Ok((kept, CompletenessReport { removed }))
}

/// Fill one series: linear between observations, nearest observation at
/// the ends.
pub fn interpolate_series(row: &[Option<f64>]) -> Result<Vec<f64>> {
    let observed: Vec<(usize, f64)> = row.iter().enumerate().filter_map(|(t, v)| v.map(|v| (t, v))).collect();
    let (&(first_t, first_v), &(last_t, last_v)) = match (observed.first(), observed.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Input("series has no observed values".into())),
    };
    let mut out = vec![0.0; row.len()];
    out[..=first_t].fill(first_v);
    out[last_t..].fill(last_v);
    for w in observed.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        for (t, slot) in out.iter_mut().enumerate().take(t1 + 1).skip(t0) {
            *slot = v0 + (v1 - v0) * (t - t0) as f64 / (t1 - t0) as f64;
        }
    }
    Ok(out)
}

/// Fill every gap; see [`interpolate_series`].
pub fn interpolate_missing(table: &RawSeriesTable) -> Result<RawSeriesTable> {
    let values = table
        .values
        .iter()
        .zip(&table.site_ids)
        .map(|(row, id)| {
            interpolate_series(row)
                .map(|r| r.into_iter().map(Some).collect())
                .map_err(|_| Error::Input(format!("site {id:?} has no observed values")))
        })
        .collect::<Result<_>>()?;
    Ok(SeriesTable { values, ..table.clone() })
}

fn complete_rows(table: &RawSeriesTable) -> Result<Vec<Vec<f64>>> {
    table
        .values
        .iter()
        .zip(&table.site_ids)
        .map(|(row, id)| {
            row.iter()
                .map(|c| c.ok_or_else(|| Error::Input(format!("site {id:?} has missing values; interpolate first"))))
                .collect()
        })
        .collect()
}

/// Equal-width binning over the global range:
/// `z = round((x - min) / (max - min + eps) * (S - 1)) + 1`, rounding half
/// to even, with `eps = 1e-9 * (max - min)` (or `1e-9` for a constant table).
pub fn discretize_values(rows: &[Vec<f64>], alphabet_size: usize) -> Result<SymbolMatrix> {
    if alphabet_size < 2 || alphabet_size > u16::MAX as usize {
        return Err(Error::Domain(format!("alphabet size must be at least 2, got {alphabet_size}")));
    }
    let all = rows.iter().flatten();
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Input("cannot discretize an empty or non-finite table".into()));
    }
    let range = hi - lo;
    if range == 0.0 {
        log::warn!("all values equal {lo}; every entry maps to symbol 1");
    }
    let eps = if range > 0.0 { 1e-9 * range } else { 1e-9 };
    let scale = (alphabet_size - 1) as f64 / (range + eps);
    let t = rows.first().map_or(0, Vec::len);
    let codes = rows.iter().flatten().map(|&x| ((x - lo) * scale).round_ties_even() as u16).collect();
    SymbolMatrix::from_codes(rows.len(), t, alphabet_size, codes)
}

/// [`discretize_values`] on a complete table.
pub fn discretize_uniform(table: &RawSeriesTable, alphabet_size: usize) -> Result<SymbolMatrix> {
    discretize_values(&complete_rows(table)?, alphabet_size)
}

/// Map categories to ordinals `1..=S` in the given order. Missing cells are
/// filled by interpolating the ordinal and rounding half to even.
pub fn passthrough_categorical(table: &SeriesTable<String>, category_order: &[String]) -> Result<SymbolMatrix> {
    if category_order.len() < 2 {
        return Err(Error::Domain(format!("need at least 2 categories, got {}", category_order.len())));
    }
    let mut index = HashMap::new();
    for (k, c) in category_order.iter().enumerate() {
        if index.insert(c.as_str(), k).is_some() {
            return Err(Error::Input(format!("category {c:?} listed twice")));
        }
    }
    let ordinals = table.map_cells(|c| {
        index.get(c.as_str()).map(|&k| k as f64).ok_or_else(|| Error::Input(format!("unknown category {c:?}")))
    })?;
    let filled = complete_rows(&interpolate_missing(&ordinals)?)?;
    let codes = filled.iter().flatten().map(|x| x.round_ties_even() as u16).collect();
    SymbolMatrix::from_codes(table.n_sites(), table.n_times(), category_order.len(), codes)
}

/// Use integer values `1..=S` as symbols directly; `S` is the largest value
/// seen. Missing cells are interpolated and rounded half to even.
pub fn passthrough_integer(table: &RawSeriesTable) -> Result<SymbolMatrix> {
    for row in &table.values {
        if let Some(v) = row.iter().flatten().find(|v| v.fract() != 0.0 || **v < 1.0) {
            return Err(Error::Input(format!(
                "value {v} is not a positive integer symbol; pass --bins or --categorical"
            )));
        }
    }
    let filled = complete_rows(&interpolate_missing(table)?)?;
    let s = filled.iter().flatten().fold(0.0f64, |m, &v| m.max(v)) as usize;
    if s < 2 {
        return Err(Error::Domain("integer symbols need at least 2 distinct levels".into()));
    }
    let codes = filled.iter().flatten().map(|x| x.round_ties_even() as u16 - 1).collect();
    SymbolMatrix::from_codes(table.n_sites(), table.n_times(), s, codes)
}

/// Write a symbol matrix as a wide CSV.
pub fn write_wide(path: &Path, ids: &[String], coordinates: &[(f64, f64)], z: &SymbolMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|source| Error::Csv { path: path.into(), source })?;
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut header = vec!["id".to_owned(), "x".into(), "y".into()];
    header.extend((1..=z.series_length()).map(|t| format!("t{t}")));
    w.write_record(&header).map_err(wrap)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone(), coordinates[i].0.to_string(), coordinates[i].1.to_string()];
        rec.extend(z.row_codes(i).iter().map(|c| (c + 1).to_string()));
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

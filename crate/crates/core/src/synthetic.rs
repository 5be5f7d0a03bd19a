//! Planted-partition benchmarks.
//!
//! Points are scattered uniformly in the unit square and joined by Delaunay
//! adjacency. Cutting `D - 1` random edges of the Euclidean minimum spanning
//! tree yields `D` contiguous planted clusters. Each cluster gets an iid
//! uniform driver series and its members copy the driver with symbol noise.
//!
//! All randomness comes from one 64-bit seed. The generator is ChaCha8 with
//! one stream per concern, so changing e.g. the noise level leaves the points,
//! the planted partition and the drivers untouched:
//!
//! | stream | used for |
//! |---|---|
//! | 0 | point coordinates |
//! | 1 | spanning-tree cuts |
//! | 2 | driver series |
//! | 3 | symbol noise (or Gaussian jitter) |
//! | 4 | confuser selection |
//! | 5 | redrawing points after degenerate geometry |

use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster_state::SymbolMatrix;
use crate::error::{Error, Result};
use crate::evaluation::{adjusted_mutual_information, inverse_compression_ratio};
use crate::graph::{build_delaunay_adjacency, euclidean_weights, minimum_spanning_tree, DisjointSets, SpatialGraph};
use crate::optimizer::{greedy_regionalize_with, SpanningTreeTerm};

const STREAM_POINTS: u64 = 0;
const STREAM_CUTS: u64 = 1;
const STREAM_DRIVERS: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_CONFUSERS: u64 = 4;
const STREAM_RETRY: u64 = 5;

const MAX_GEOMETRY_RETRIES: usize = 16;

/// How a noisy position is corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// With probability `noise`, replace the symbol by one of the other
    /// `S - 1` symbols. The corruption rate equals `noise` for every `S`.
    #[default]
    OtherSymbols,
    /// With probability `min(1, noise / (1 - 1/S))`, redraw uniformly from all
    /// `S` symbols, which can return the original symbol. Same corruption
    /// rate as `OtherSymbols` up to `noise = 1 - 1/S`.
    Uniform,
    /// With probability `noise`, redraw uniformly from all `S` symbols. The
    /// corruption rate is `noise * (1 - 1/S)` and `noise = 1` gives series
    /// independent of the driver.
    Resample,
}

impl std::str::FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "other" | "other_symbols" => Ok(Self::OtherSymbols),
            "uniform" => Ok(Self::Uniform),
            "resample" => Ok(Self::Resample),
            _ => Err(Error::Input(format!("unknown noise model {s:?} (expected other, uniform or resample)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n: usize,
    pub t: usize,
    pub s: usize,
    pub d: usize,
    pub noise: f64,
    pub seed: u64,
    pub noise_model: NoiseModel,
    /// Fraction of locations whose series follow a different cluster's
    /// driver while keeping their planted label.
    pub confuser_fraction: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n: 100,
            t: 51,
            s: 4,
            d: 5,
            noise: 0.0,
            seed: 0,
            noise_model: NoiseModel::OtherSymbols,
            confuser_fraction: 0.0,
        }
    }
}

impl SyntheticParams {
    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > self.n {
            return Err(Error::Domain(format!("need 1 <= D <= N, got D={} N={}", self.d, self.n)));
        }
        if self.s < 2 || self.s > u16::MAX as usize {
            return Err(Error::Domain(format!("alphabet size must be at least 2, got {}", self.s)));
        }
        if self.t == 0 {
            return Err(Error::Domain("series length must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Domain(format!("noise level {} outside [0, 1]", self.noise)));
        }
        if !(0.0..=1.0).contains(&self.confuser_fraction) {
            return Err(Error::Domain(format!("confuser fraction {} outside [0, 1]", self.confuser_fraction)));
        }
        Ok(())
    }
}

/// A generated instance with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub graph: SpatialGraph,
    pub points: Vec<(f64, f64)>,
    pub z: SymbolMatrix,
    /// Canonical cluster ids `1..=D`.
    pub planted_labels: Vec<usize>,
    /// 1-based symbols, indexed by `label - 1`.
    pub planted_drivers: Vec<Vec<u16>>,
    /// Locations that follow another cluster's driver.
    pub confusers: Vec<usize>,
    pub noise_level: f64,
    pub seed: u64,
}

/// Continuous-valued counterpart: each member is its driver plus Gaussian
/// jitter, to be binned before optimisation.
#[derive(Debug, Clone)]
pub struct ContinuousDataset {
    pub graph: SpatialGraph,
    pub points: Vec<(f64, f64)>,
    /// Row-major `N x T`.
    pub values: Vec<Vec<f64>>,
    pub planted_labels: Vec<usize>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn draw_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64)> {
    (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect()
}

fn adjacency(points: &[(f64, f64)]) -> Result<SpatialGraph> {
    match points.len() {
        0 => Err(Error::Domain("no points".into())),
        1 => SpatialGraph::from_edges(1, [], Some(points.to_vec())),
        2 => SpatialGraph::from_edges(2, [(0, 1)], Some(points.to_vec())),
        _ => build_delaunay_adjacency(points),
    }
}

type Geometry = (Vec<(f64, f64)>, SpatialGraph, Vec<usize>);

/// Points, adjacency and planted labels shared by both generators.
fn planted_geometry(n: usize, d: usize, seed: u64) -> Result<Geometry> {
    let mut points = draw_points(&mut stream(seed, STREAM_POINTS), n);
    let mut retry = stream(seed, STREAM_RETRY);
    let mut graph = adjacency(&points);
    for _ in 0..MAX_GEOMETRY_RETRIES {
        if graph.is_ok() {
            break;
        }
        log::warn!("degenerate point set for seed {seed}, redrawing");
        points = draw_points(&mut retry, n);
        graph = adjacency(&points);
    }
    let graph = graph?;
    let tree = minimum_spanning_tree(&graph, &euclidean_weights(&graph)?)?;
    let tree_edges = tree.edges();
    let mut cut = vec![false; tree_edges.len()];
    for k in sample(&mut stream(seed, STREAM_CUTS), tree_edges.len(), d - 1) {
        cut[k] = true;
    }
    let mut sets = DisjointSets::new(n);
    for (k, &(i, j)) in tree_edges.iter().enumerate() {
        if !cut[k] {
            sets.union(i, j);
        }
    }
    let labels = sets.canonical_labels();
    Ok((points, graph, labels))
}

fn corrupt(rng: &mut ChaCha8Rng, code: u16, s: usize, noise: f64, model: NoiseModel) -> u16 {
    match model {
        NoiseModel::OtherSymbols => {
            if rng.random::<f64>() < noise {
                let r = rng.random_range(0..s as u32 - 1) as u16;
                if r >= code {
                    r + 1
                } else {
                    r
                }
            } else {
                code
            }
        }
        NoiseModel::Uniform | NoiseModel::Resample => {
            let rate = match model {
                NoiseModel::Uniform => (noise / (1.0 - 1.0 / s as f64)).min(1.0),
                _ => noise,
            };
            if rng.random::<f64>() < rate {
                rng.random_range(0..s as u32) as u16
            } else {
                code
            }
        }
    }
}

/// Generate a planted-partition instance. Identical parameters give an
/// identical dataset.
pub fn generate(params: &SyntheticParams) -> Result<SyntheticDataset> {
    params.validate()?;
    let SyntheticParams { n, t, s, d, noise, seed, noise_model, confuser_fraction } = *params;
    let (points, graph, planted_labels) = planted_geometry(n, d, seed)?;

    let mut rng = stream(seed, STREAM_DRIVERS);
    let drivers: Vec<Vec<u16>> =
        (0..d).map(|_| (0..t).map(|_| rng.random_range(0..s as u32) as u16).collect()).collect();

    // follows[i] is the cluster whose driver location i copies
    let mut follows: Vec<usize> = planted_labels.iter().map(|&l| l - 1).collect();
    let mut confusers = Vec::new();
    if d >= 2 && confuser_fraction > 0.0 {
        let mut rng = stream(seed, STREAM_CONFUSERS);
        let count = (confuser_fraction * n as f64).round() as usize;
        confusers = sample(&mut rng, n, count).into_vec();
        confusers.sort_unstable();
        for &i in &confusers {
            let other = rng.random_range(0..d as u32 - 1) as usize;
            follows[i] = if other >= follows[i] { other + 1 } else { other };
        }
    }

    let mut rng = stream(seed, STREAM_NOISE);
    let mut codes = Vec::with_capacity(n * t);
    for &f in &follows {
        for &c in &drivers[f] {
            codes.push(corrupt(&mut rng, c, s, noise, noise_model));
        }
    }
    Ok(SyntheticDataset {
        graph,
        points,
        z: SymbolMatrix::from_codes(n, t, s, codes)?,
        planted_labels,
        planted_drivers: drivers.into_iter().map(|v| v.into_iter().map(|c| c + 1).collect()).collect(),
        confusers,
        noise_level: noise,
        seed,
    })
}

/// Continuous planted instance: drivers iid uniform on `[0, 1]`, members equal
/// to their driver plus independent `N(0, jitter_sd^2)` noise.
pub fn generate_continuous(n: usize, t: usize, d: usize, jitter_sd: f64, seed: u64) -> Result<ContinuousDataset> {
    if d == 0 || d > n || t == 0 {
        return Err(Error::Domain(format!("need 1 <= D <= N and T >= 1, got N={n} T={t} D={d}")));
    }
    let jitter = Normal::new(0.0, jitter_sd)
        .map_err(|e| Error::Domain(format!("invalid jitter standard deviation {jitter_sd}: {e}")))?;
    let (points, graph, planted_labels) = planted_geometry(n, d, seed)?;
    let mut rng = stream(seed, STREAM_DRIVERS);
    let drivers: Vec<Vec<f64>> = (0..d).map(|_| (0..t).map(|_| rng.random::<f64>()).collect()).collect();
    let mut rng = stream(seed, STREAM_NOISE);
    let values =
        planted_labels.iter().map(|&l| drivers[l - 1].iter().map(|&x| x + jitter.sample(&mut rng)).collect()).collect();
    Ok(ContinuousDataset { graph, points, values, planted_labels })
}

/// SplitMix64 finaliser, used to derive independent per-run seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one sweep cell: value index, noise index and repetition are
/// folded into the base seed in turn.
pub fn run_seed(base: u64, value_index: usize, noise_index: usize, rep: usize) -> u64 {
    let a = splitmix64(base ^ value_index as u64);
    let b = splitmix64(a ^ noise_index as u64);
    splitmix64(b ^ rep as u64)
}

/// The structural parameter varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    N,
    T,
    S,
    D,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::N => "N",
            Self::T => "T",
            Self::S => "S",
            Self::D => "D",
        }
    }

    fn apply(self, params: &mut SyntheticParams, value: usize) {
        match self {
            Self::N => params.n = value,
            Self::T => params.t = value,
            Self::S => params.s = value,
            Self::D => params.d = value,
        }
    }

    fn current(self, params: &SyntheticParams) -> usize {
        match self {
            Self::N => params.n,
            Self::T => params.t,
            Self::S => params.s,
            Self::D => params.d,
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "N" => Ok(Self::N),
            "T" => Ok(Self::T),
            "S" => Ok(Self::S),
            "D" => Ok(Self::D),
            _ => Err(Error::Input(format!("unknown sweep parameter {s:?} (expected N, T, S or D)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Fixed parameters; `noise` and `seed` inside are ignored.
    pub base: SyntheticParams,
    pub param: SweepParam,
    /// Values of `param`. Empty means just the base value.
    pub values: Vec<usize>,
    pub noise: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub skip_tree_count: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: SyntheticParams::default(),
            param: SweepParam::N,
            values: Vec::new(),
            noise: (0..=10).map(|k| k as f64 / 10.0).collect(),
            repetitions: 10,
            seed: 0,
            skip_tree_count: false,
        }
    }
}

impl SweepConfig {
    /// Build from `key=value` pairs. Keys: `param`, `values`, `noise`,
    /// `reps`, `seed`, `n`, `t`, `s`, `d`, `noise_model`,
    /// `confuser_fraction`, `skip_tree_count`. Lists are comma separated.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim().parse().map_err(|_| Error::Input(format!("bad value {v:?} for {key}")))
        }
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',').filter(|x| !x.trim().is_empty()).map(|x| num(key, x)).collect()
        }
        let mut c = Self::default();
        for (key, v) in pairs {
            match key {
                "param" => c.param = v.trim().parse()?,
                "values" => c.values = list(key, v)?,
                "noise" => c.noise = list(key, v)?,
                "reps" | "repetitions" => c.repetitions = num(key, v)?,
                "seed" => c.seed = num(key, v)?,
                "n" | "N" => c.base.n = num(key, v)?,
                "t" | "T" => c.base.t = num(key, v)?,
                "s" | "S" => c.base.s = num(key, v)?,
                "d" | "D" => c.base.d = num(key, v)?,
                "noise_model" => c.base.noise_model = v.trim().parse()?,
                "confuser_fraction" => c.base.confuser_fraction = num(key, v)?,
                "skip_tree_count" => c.skip_tree_count = num(key, v)?,
                _ => return Err(Error::Input(format!("unknown sweep key {key:?}"))),
            }
        }
        if c.noise.is_empty() || c.repetitions == 0 {
            return Err(Error::Input("sweep needs at least one noise level and one repetition".into()));
        }
        Ok(c)
    }
}

/// One sweep run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: usize,
    pub noise: f64,
    pub rep: usize,
    pub ami: f64,
    pub eta: f64,
    #[serde(rename = "selected_D")]
    pub selected_d: usize,
    pub runtime_s: f64,
}

/// Mean and two standard errors over the repetitions of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub param: String,
    pub value: usize,
    pub noise: f64,
    pub reps: usize,
    pub ami_mean: f64,
    pub ami_2se: f64,
    pub eta_mean: f64,
    pub eta_2se: f64,
    #[serde(rename = "selected_D_mean")]
    pub selected_d_mean: f64,
    pub runtime_s_mean: f64,
}

/// Generate, regionalise and score one instance.
pub fn evaluate_instance(params: &SyntheticParams, tree: SpanningTreeTerm) -> Result<(f64, f64, usize, f64)> {
    let data = generate(params)?;
    let start = Instant::now();
    let (trajectory, partition) = greedy_regionalize_with(&data.z, &data.graph, tree)?;
    let runtime = start.elapsed().as_secs_f64();
    let ami = adjusted_mutual_information(&partition.labels, &data.planted_labels)?;
    let eta = inverse_compression_ratio(&partition.breakdown, &trajectory.baseline)?;
    Ok((ami, eta, partition.n_clusters(), runtime))
}

/// Run every (value, noise, repetition) cell in parallel. Rows come back in
/// grid order regardless of scheduling.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let values =
        if config.values.is_empty() { vec![config.param.current(&config.base)] } else { config.values.clone() };
    let mut cells = Vec::new();
    for (vi, &value) in values.iter().enumerate() {
        for (ni, &noise) in config.noise.iter().enumerate() {
            for rep in 0..config.repetitions {
                let mut params = config.base.clone();
                config.param.apply(&mut params, value);
                params.noise = noise;
                params.seed = run_seed(config.seed, vi, ni, rep);
                cells.push((value, noise, rep, params));
            }
        }
    }
    let tree = if config.skip_tree_count { SpanningTreeTerm::Skip } else { SpanningTreeTerm::Compute };
    cells
        .into_par_iter()
        .map(|(value, noise, rep, params)| {
            let (ami, eta, selected_d, runtime_s) = evaluate_instance(&params, tree)?;
            Ok(SweepRow { param: config.param.name().into(), value, noise, rep, ami, eta, selected_d, runtime_s })
        })
        .collect()
}

fn mean_and_2se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 2.0 * (var / n).sqrt())
}

/// Aggregate rows by (param, value, noise), keeping first-seen order.
pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut groups: Vec<(String, usize, f64, Vec<&SweepRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g.0 == r.param && g.1 == r.value && g.2 == r.noise) {
            Some(g) => g.3.push(r),
            None => groups.push((r.param.clone(), r.value, r.noise, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(param, value, noise, rs)| {
            let col = |f: fn(&SweepRow) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (ami_mean, ami_2se) = mean_and_2se(&col(|r| r.ami));
            let (eta_mean, eta_2se) = mean_and_2se(&col(|r| r.eta));
            SweepSummary {
                param,
                value,
                noise,
                reps: rs.len(),
                ami_mean,
                ami_2se,
                eta_mean,
                eta_2se,
                selected_d_mean: mean_and_2se(&col(|r| r.selected_d as f64)).0,
                runtime_s_mean: mean_and_2se(&col(|r| r.runtime_s)).0,
            }
        })
        .collect()
}

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use regionmdl::evaluation::adjusted_mutual_information;
use regionmdl::graph::build_delaunay_adjacency;
use regionmdl::ingest::{self, filter_completeness, interpolate_missing, RunMetadata, SeriesTable};
use regionmdl::optimizer::{
    exact_regionalize_with, greedy_regionalize_opts, regionalize_fixed_d_opts, singleton_partition, GreedyOptions,
    QueueRefresh, SpanningTreeTerm,
};
use regionmdl::synthetic::{self, NoiseModel, SweepConfig, SyntheticParams};
use regionmdl::{Error, Result, SpatialGraph, SymbolMatrix};

#[derive(Parser)]
#[command(
    name = "regionmdl",
    version,
    about = "Contiguous regionalization of spatial time series by minimum description length"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy regionalization of a CSV dataset.
    Regionalize {
        #[command(flatten)]
        input: InputArgs,
        /// Stop at exactly k regions instead of choosing the count.
        #[arg(long = "fixed-D", alias = "fixed-d", value_name = "K")]
        fixed_d: Option<usize>,
        /// Re-score queued merges only when they reach the front of the queue.
        /// Much faster on large inputs; may take a different merge order.
        #[arg(long)]
        lazy_queue: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a planted-partition dataset into a directory.
    Synth {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 51)]
        t: usize,
        #[arg(long, default_value_t = 4)]
        s: usize,
        #[arg(long, default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `other` (replace by one of the other S-1 symbols), `uniform` or `resample`.
        #[arg(long, default_value = "other")]
        noise_model: NoiseModel,
        #[arg(long, default_value_t = 0.0)]
        confuser_fraction: f64,
        /// Output directory; receives data.csv, edges.txt, labels.csv, drivers.csv and params.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive optimum for graphs of at most 12 locations.
    Exact {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Noise sweep over synthetic instances, configured by a key=value file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Per-run CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional per-cell means and two-standard-error CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Adjusted mutual information between two id,cluster files.
    EvalAmi {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Wide (id,x,y,t1..tT) or long (id,x,y,timestamp,value) CSV.
    #[arg(long)]
    input: PathBuf,
    /// Edge list of 0-based input row indices; Delaunay adjacency otherwise.
    #[arg(long)]
    adjacency: Option<PathBuf>,
    /// Bin continuous values into S equal-width symbols.
    #[arg(long, value_name = "S", conflicts_with = "categorical")]
    bins: Option<usize>,
    /// File listing categories in ordinal order, one per line.
    #[arg(long)]
    categorical: Option<PathBuf>,
    /// Report 0 for the spanning-tree term instead of computing it.
    #[arg(long)]
    skip_tree_count: bool,
    /// Minimum fraction of observed time steps for a site to be kept.
    #[arg(long, default_value_t = 0.8)]
    min_completeness: f64,
}

#[derive(Args)]
struct OutputArgs {
    /// JSON result document.
    #[arg(long)]
    out: PathBuf,
    /// Also write id,cluster rows here.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Also write the merge trajectory here.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Also write a GeoJSON point collection here.
    #[arg(long)]
    geojson: Option<PathBuf>,
}

struct Problem {
    ids: Vec<String>,
    coordinates: Vec<(f64, f64)>,
    z: SymbolMatrix,
    graph: SpatialGraph,
    removed: Vec<String>,
    flags: BTreeMap<String, String>,
}

fn load(args: &InputArgs) -> Result<Problem> {
    let raw = SeriesTable::read_auto(&args.input)?;
    let original_ids = raw.site_ids.clone();
    let mut flags = BTreeMap::new();
    flags.insert("input".into(), args.input.display().to_string());
    flags.insert("min_completeness".into(), args.min_completeness.to_string());
    flags.insert("skip_tree_count".into(), args.skip_tree_count.to_string());

    let (ids, coordinates, z, removed) = if let Some(path) = &args.categorical {
        flags.insert("categorical".into(), path.display().to_string());
        let order = ingest::read_categories(path)?;
        let (kept, report) = filter_completeness(&raw, args.min_completeness)?;
        let z = ingest::passthrough_categorical(&kept, &order)?;
        (kept.site_ids, kept.coordinates, z, report.removed)
    } else {
        let (kept, report) = filter_completeness(&raw.parse_numeric()?, args.min_completeness)?;
        let table = interpolate_missing(&kept)?;
        let z = match args.bins {
            Some(s) => {
                flags.insert("bins".into(), s.to_string());
                ingest::discretize_uniform(&table, s)?
            }
            None => ingest::passthrough_integer(&table)?,
        };
        (table.site_ids, table.coordinates, z, report.removed)
    };
    for (id, fraction) in &removed {
        log::warn!("dropping site {id:?}: only {:.1}% observed", 100.0 * fraction);
    }

    let graph = match &args.adjacency {
        Some(path) => {
            flags.insert("adjacency".into(), path.display().to_string());
            let full = SpatialGraph::read_edge_list(path, original_ids.len(), None)?;
            let position: HashMap<&str, usize> = ids.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
            let index: Vec<Option<usize>> = original_ids.iter().map(|id| position.get(id.as_str()).copied()).collect();
            let edges = full.edges().iter().filter_map(|&(i, j)| Some((index[i]?, index[j]?)));
            SpatialGraph::from_edges(ids.len(), edges.collect::<Vec<_>>(), Some(coordinates.clone()))?
        }
        None => build_delaunay_adjacency(&coordinates)?,
    };
    let removed = removed.into_iter().map(|(id, _)| id).collect();
    Ok(Problem { ids, coordinates, z, graph, removed, flags })
}

fn tree_term(args: &InputArgs) -> SpanningTreeTerm {
    if args.skip_tree_count {
        SpanningTreeTerm::Skip
    } else {
        SpanningTreeTerm::Compute
    }
}

fn metadata(command: &str, p: &Problem) -> RunMetadata {
    RunMetadata {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        seed: None,
        flags: p.flags.clone(),
        data_hash: p.z.content_hash(),
        n_locations: p.z.n_series(),
        series_length: p.z.series_length(),
        alphabet_size: p.z.alphabet_size(),
        removed_ids: p.removed.clone(),
    }
}

fn write_outputs(doc: &ingest::ResultDocument, p: &Problem, out: &OutputArgs) -> Result<()> {
    doc.write_json(&out.out)?;
    if let Some(path) = &out.labels {
        ingest::write_labels_csv(path, &p.ids, &doc.labels)?;
    }
    if let Some(path) = &out.trajectory {
        let steps = doc.trajectory.as_ref().map_or(&[][..], |t| &t.steps[..]);
        ingest::write_trajectory_csv(path, steps)?;
    }
    if let Some(path) = &out.geojson {
        ingest::write_geojson(path, &p.ids, &p.coordinates, &doc.labels)?;
    }
    println!(
        "{} locations, {} regions, {:.3} bits, eta {:.4}",
        doc.labels.len(),
        doc.clusters.len(),
        doc.breakdown.total_bits,
        doc.eta
    );
    Ok(())
}

fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for r in rows {
        w.serialize(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Regionalize { input, fixed_d, lazy_queue, output } => {
            let p = load(&input)?;
            let mut meta = metadata("regionalize", &p);
            meta.flags.insert("lazy_queue".into(), lazy_queue.to_string());
            let refresh = if lazy_queue { QueueRefresh::Lazy } else { QueueRefresh::Eager };
            let options = GreedyOptions { tree: tree_term(&input), refresh };
            let (trajectory, partition) = match fixed_d {
                Some(k) => {
                    meta.flags.insert("fixed_D".into(), k.to_string());
                    regionalize_fixed_d_opts(&p.z, &p.graph, k, &options)?
                }
                None => greedy_regionalize_opts(&p.z, &p.graph, &options)?,
            };
            let doc =
                ingest::serialize_result(&p.z, &p.ids, &partition, Some(&trajectory), &trajectory.baseline, meta)?;
            write_outputs(&doc, &p, &output)
        }
        Command::Exact { input, output } => {
            let p = load(&input)?;
            let tree_bits = tree_term(&input).resolve(&p.graph)?;
            let partition = exact_regionalize_with(&p.z, &p.graph, SpanningTreeTerm::Known(tree_bits))?;
            let baseline = singleton_partition(&p.z, &p.graph, tree_bits)?.breakdown;
            let doc = ingest::serialize_result(&p.z, &p.ids, &partition, None, &baseline, metadata("exact", &p))?;
            write_outputs(&doc, &p, &output)
        }
        Command::Synth { n, t, s, d, noise, seed, noise_model, confuser_fraction, out } => {
            let params = SyntheticParams { n, t, s, d, noise, seed, noise_model, confuser_fraction };
            let data = synthetic::generate(&params)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            ingest::write_wide(&out.join("data.csv"), &ids, &data.points, &data.z)?;
            data.graph.write_edge_list(&out.join("edges.txt"))?;
            ingest::write_labels_csv(&out.join("labels.csv"), &ids, &data.planted_labels)?;
            let drivers = SymbolMatrix::from_rows(&data.planted_drivers, s)?;
            let cluster_ids: Vec<String> = (1..=d).map(|k| k.to_string()).collect();
            ingest::write_wide(&out.join("drivers.csv"), &cluster_ids, &vec![(0.0, 0.0); d], &drivers)?;
            let text = serde_json::to_string_pretty(&params)?;
            let path = out.join("params.json");
            std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
            println!("wrote {n} series of length {t} in {d} planted regions to {}", out.display());
            Ok(())
        }
        Command::Sweep { config, out, summary } => {
            let pairs = ingest::read_config(&config)?;
            let cfg = SweepConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
            let rows = synthetic::sweep(&cfg)?;
            write_csv(&out, &rows)?;
            let cells = synthetic::summarize(&rows);
            if let Some(path) = summary {
                write_csv(&path, &cells)?;
            }
            for c in &cells {
                println!(
                    "{}={} noise={:.2} ami={:.3}±{:.3} eta={:.3}±{:.3}",
                    c.param, c.value, c.noise, c.ami_mean, c.ami_2se, c.eta_mean, c.eta_2se
                );
            }
            Ok(())
        }
        Command::EvalAmi { a, b } => {
            let la = ingest::read_labels_csv(&a)?;
            let lb: HashMap<String, String> = ingest::read_labels_csv(&b)?.into_iter().collect();
            if la.len() != lb.len() {
                return Err(Error::Input(format!(
                    "{} labels in {} but {} in {}",
                    la.len(),
                    a.display(),
                    lb.len(),
                    b.display()
                )));
            }
            let mut xs = Vec::with_capacity(la.len());
            let mut ys = Vec::with_capacity(la.len());
            for (id, l) in la {
                let other =
                    lb.get(&id).ok_or_else(|| Error::Input(format!("id {id:?} missing from {}", b.display())))?;
                xs.push(l);
                ys.push(other.clone());
            }
            println!("{}", adjusted_mutual_information(&xs, &ys)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! The `sgcgen` command line.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiment::{parse_grid, phase_diagram, to_csv, PhaseConfig};
use crate::format::{json_num, num};
use crate::graph::{parse_edge_list, IdMapping, ParseOptions, ParsedGraph};
use crate::labels::{compact_labels, format_labels, parse_label_pairs, resolve_labels};
use crate::metrics::{accuracy, average_rank, MetricVector, Orientation};
use crate::sbm::{generate_sbm, Partition, SbmParams};
use crate::selection::{compute_candidates, Method, Mismatch, SelectionConfig};
use crate::spectral::SgcConfig;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "SGCGEN_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "sgcgen",
    version,
    about = "Spectral community detection with model selection"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a block-model graph and its planted labels.
    Generate(GenerateArgs),
    /// Choose K and cluster a graph.
    Detect(DetectArgs),
    /// Score a predicted labeling.
    Eval(EvalArgs),
    /// Accuracy and theta over a grid of two-community models.
    PhaseDiagram(PhaseArgs),
    /// Average competition rank of methods over metric columns.
    Rank(RankArgs),
    /// Re-score one set of candidates under several alpha values.
    SweepAlpha(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Sgc,
    Regsgc,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Sgc => Method::Sgc,
            MethodArg::Regsgc => Method::RegSgc,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MismatchArg {
    Eig,
    Mod,
    Aic,
    Bic,
}

impl From<MismatchArg> for Mismatch {
    fn from(m: MismatchArg) -> Mismatch {
        match m {
            MismatchArg::Eig => Mismatch::Eig,
            MismatchArg::Mod => Mismatch::Mod,
            MismatchArg::Aic => Mismatch::Aic,
            MismatchArg::Bic => Mismatch::Bic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Default)]
pub enum IdsArg {
    /// Relabel ids in order of first appearance.
    #[default]
    First,
    /// Ids are node indices starting at 0.
    Zero,
    /// Ids are node indices starting at 1.
    One,
}

impl From<IdsArg> for IdMapping {
    fn from(m: IdsArg) -> IdMapping {
        match m {
            IdsArg::First => IdMapping::FirstAppearance,
            IdsArg::Zero => IdMapping::ZeroIndexed,
            IdsArg::One => IdMapping::OneIndexed,
        }
    }
}

#[derive(Debug, Args)]
pub struct GraphInput {
    /// Edge list, one `u v` pair per line.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub ids: IdsArg,
    #[arg(long, default_value = "#")]
    pub comment: String,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model parameters as TOML with `k`, `sizes` and row-major `p`.
    #[arg(long, conflicts_with_all = ["sizes", "probs"])]
    pub params: Option<PathBuf>,
    /// Community sizes, e.g. `250,250`.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Probability matrix, rows separated by `;`, e.g. `0.2,0.02;0.02,0.1`.
    #[arg(long)]
    pub probs: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Edge-list path (stdout when omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Planted-label path.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    #[arg(long, value_enum, default_value = "sgc")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "mod")]
    pub mismatch: MismatchArg,
    /// Penalty weight (defaults to 1e-4 for sgc, 1e-6 for regsgc).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Largest K tried (defaults to min(50, n)).
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SelectionArgs {
    fn config(&self, n: usize) -> SelectionConfig {
        let method: Method = self.method.into();
        SelectionConfig {
            alpha: self.alpha.unwrap_or(method.default_alpha()),
            k_max: self.kmax.unwrap_or(n.min(50)),
            seed: self.seed,
            ..SelectionConfig::new(method, self.mismatch.into())
        }
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Ground-truth labels; adds metrics to the report.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Report path (stdout when omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the chosen labels here.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    /// Predicted labels.
    #[arg(long)]
    pub predicted: PathBuf,
    /// Ground-truth labels; without them only internal metrics are reported.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value = "dataset")]
    pub dataset: String,
    #[arg(long = "name", default_value = "method")]
    pub method_name: String,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// `start:stop:step` or a list.
    #[arg(long, default_value = "0.02:0.20:0.02")]
    pub grid_p1: String,
    #[arg(long, default_value = "0.01:0.15:0.01")]
    pub grid_q: String,
    #[arg(long, default_value_t = 0.1)]
    pub p2: f64,
    #[arg(long, default_value = "250,250")]
    pub sizes: String,
    #[arg(long, default_value_t = 10)]
    pub seeds_per_cell: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "sgc")]
    pub method: MethodArg,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// CSV with columns `dataset,method,metric,value`.
    #[arg(long, short)]
    pub input: PathBuf,
    /// CSV lines `metric,higher|lower`; built-in metrics need no entry.
    #[arg(long)]
    pub orientations: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Alpha values, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad {what} entry {s:?}")))
        })
        .collect()
}

fn load_graph(input: &GraphInput) -> Result<ParsedGraph> {
    let options = ParseOptions {
        comment_prefix: input.comment.clone(),
        ids: input.ids.into(),
    };
    parse_edge_list(&read(&input.input)?, &options)
}

fn load_labels(parsed: &ParsedGraph, path: &Path, comment: &str) -> Result<Vec<usize>> {
    let pairs = parse_label_pairs(&read(path)?, comment)?;
    Ok(compact_labels(&resolve_labels(parsed, &pairs)?))
}

/// Parses, then keeps the largest component; returns it with the number of dropped nodes.
fn load_lcc(input: &GraphInput) -> Result<(ParsedGraph, usize)> {
    let parsed = load_graph(input)?;
    let total = parsed.graph.n();
    let lcc = parsed.largest_connected_component();
    let dropped = total - lcc.graph.n();
    if dropped > 0 {
        info!("kept largest component: {} of {total} nodes", lcc.graph.n());
    }
    Ok((lcc, dropped))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let params = match (&args.params, &args.sizes, &args.probs) {
        (Some(path), _, _) => SbmParams::from_toml(&read(path)?)?,
        (None, Some(sizes), Some(probs)) => {
            let sizes: Vec<usize> = parse_list(sizes, "size")?;
            let mut p = Vec::new();
            for row in probs.split(';') {
                p.extend(parse_list::<f64>(row, "probability")?);
            }
            SbmParams::new(sizes, p)?
        }
        _ => {
            return Err(Error::InvalidArgument(
                "give --params, or both --sizes and --probs".into(),
            ))
        }
    };
    let (graph, planted) = generate_sbm(&params, args.seed)?;
    info!(
        "generated n = {}, m = {} with seed {}",
        graph.n(),
        graph.m(),
        args.seed
    );
    write_output(args.output.as_deref(), &graph.to_edge_list())?;
    if let Some(path) = &args.labels {
        let ids: Vec<i64> = (0..graph.n() as i64).collect();
        let text = format!(
            "# seed {}\n{}",
            args.seed,
            format_labels(&ids, planted.labels())
        );
        fs::write(path, text)?;
    }
    Ok(())
}

fn metrics_json(mv: &MetricVector, acc: Option<f64>) -> serde_json::Value {
    let mut v = serde_json::Map::new();
    for (name, value) in mv.entries() {
        v.insert(name.to_string(), json_num(value));
    }
    if let Some(a) = acc {
        v.insert("accuracy".into(), json_num(a));
    }
    serde_json::Value::Object(v)
}

pub fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let (parsed, dropped) = load_lcc(&args.graph)?;
    let config = args.selection.config(parsed.graph.n());
    let report = crate::selection::select(&parsed.graph, &config)?;
    let mut out = report.to_json();
    out["input"] = json!({
        "path": args.graph.input.display().to_string(),
        "nodes": parsed.graph.n() + dropped,
        "edges_in_component": parsed.graph.m(),
        "component_nodes": parsed.graph.n(),
        "dropped_nodes": dropped,
    });
    if dropped > 0 {
        let note = format!("kept the largest connected component; dropped {dropped} nodes");
        out["diagnostics"]
            .as_array_mut()
            .expect("array")
            .push(json!(note));
    }
    out["node_ids"] = json!(parsed.node_ids);
    if let Some(path) = &args.labels {
        let truth = load_labels(&parsed, path, &args.graph.comment)?;
        let mv = MetricVector::evaluate(&parsed.graph, &report.partition, Some(&truth))?;
        let acc = accuracy(report.partition.labels(), &truth)?;
        out["metrics"] = metrics_json(&mv, Some(acc));
    }
    if let Some(path) = &args.labels_out {
        fs::write(
            path,
            format_labels(&parsed.node_ids, report.partition.labels()),
        )?;
    }
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    write_output(args.output.as_deref(), &text)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let parsed = load_graph(&args.graph)?;
    let predicted = load_labels(&parsed, &args.predicted, &args.graph.comment)?;
    let partition = Partition::new(&parsed.graph, predicted)?;
    let truth = match &args.labels {
        Some(path) => Some(load_labels(&parsed, path, &args.graph.comment)?),
        None => None,
    };
    let mv = MetricVector::evaluate(&parsed.graph, &partition, truth.as_deref())?;
    let mut out = String::from("dataset,method,metric,value\n");
    for (name, value) in mv.entries() {
        out.push_str(&format!(
            "{},{},{name},{}\n",
            args.dataset,
            args.method_name,
            num(value)
        ));
    }
    write_output(args.output.as_deref(), &out)
}

pub fn cmd_phase_diagram(args: &PhaseArgs) -> Result<()> {
    let sizes: Vec<usize> = parse_list(&args.sizes, "size")?;
    let [n1, n2] = sizes[..] else {
        return Err(Error::InvalidArgument(
            "--sizes needs exactly two entries".into(),
        ));
    };
    let method: Method = args.method.into();
    let config = PhaseConfig {
        p1: parse_grid(&args.grid_p1)?,
        q: parse_grid(&args.grid_q)?,
        p2: args.p2,
        sizes: (n1, n2),
        seeds_per_cell: args.seeds_per_cell,
        seed: args.seed,
        sgc: SgcConfig {
            mode: method.mode(),
            ..SgcConfig::default()
        },
    };
    let cells = phase_diagram(&config)?;
    let text = format!("# seed {} method {}\n{}", args.seed, method, to_csv(&cells));
    write_output(args.output.as_deref(), &text)
}

fn read_orientations(path: &Path) -> Result<BTreeMap<String, Orientation>> {
    let mut map = BTreeMap::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let (Some(metric), Some(dir)) = (record.get(0), record.get(1)) else {
            continue;
        };
        let orientation = Orientation::parse(dir).ok_or_else(|| {
            Error::InvalidArgument(format!("bad orientation {dir:?} for {metric}"))
        })?;
        map.insert(metric.to_string(), orientation);
    }
    Ok(map)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn cmd_rank(args: &RankArgs) -> Result<()> {
    let overrides = match &args.orientations {
        Some(p) => read_orientations(p)?,
        None => BTreeMap::new(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(&args.input)
        .map_err(csv_error)?;
    // (dataset, metric) columns and methods, both in first-appearance order.
    let mut columns: Vec<(String, String)> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        if record.len() != 4 {
            return Err(Error::Parse {
                line: record.position().map_or(0, |p| p.line() as usize),
                message: "expected dataset,method,metric,value".into(),
            });
        }
        let column = (record[0].to_string(), record[2].to_string());
        let c = columns
            .iter()
            .position(|x| *x == column)
            .unwrap_or_else(|| {
                columns.push(column);
                columns.len() - 1
            });
        let m = methods
            .iter()
            .position(|x| x == &record[1])
            .unwrap_or_else(|| {
                methods.push(record[1].to_string());
                methods.len() - 1
            });
        let value: f64 = record[3].parse().map_err(|_| Error::Parse {
            line: record.position().map_or(0, |p| p.line() as usize),
            message: format!("bad value {:?}", &record[3]),
        })?;
        cells.insert((m, c), value);
    }
    let single_dataset = columns.iter().all(|(d, _)| *d == columns[0].0);
    let mut metrics = Vec::with_capacity(columns.len());
    for (dataset, metric) in &columns {
        let orientation = overrides
            .get(metric)
            .copied()
            .or_else(|| Orientation::for_metric(metric))
            .ok_or_else(|| {
                Error::InvalidArgument(format!("no orientation for metric {metric:?}"))
            })?;
        let name = if single_dataset {
            metric.clone()
        } else {
            format!("{dataset}:{metric}")
        };
        metrics.push((name, orientation));
    }
    let values = (0..methods.len())
        .map(|m| {
            (0..columns.len())
                .map(|c| cells.get(&(m, c)).copied())
                .collect()
        })
        .collect();
    let table = average_rank(methods, metrics, values)?;
    let mut out = String::from("method");
    for (name, _) in &table.metrics {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",avg_rank\n");
    for (m, method) in table.methods.iter().enumerate() {
        out.push_str(method);
        for r in &table.ranks[m] {
            out.push(',');
            if let Some(r) = r {
                out.push_str(&r.to_string());
            }
        }
        out.push(',');
        out.push_str(&table.avg_rank[m].map_or(String::new(), num));
        out.push('\n');
    }
    write_output(args.output.as_deref(), &out)
}

pub fn cmd_sweep_alpha(args: &SweepArgs) -> Result<()> {
    let (parsed, _) = load_lcc(&args.graph)?;
    let config = args.selection.config(parsed.graph.n());
    let truth = match &args.labels {
        Some(path) => Some(load_labels(&parsed, path, &args.graph.comment)?),
        None => None,
    };
    let candidates = compute_candidates(&parsed.graph, &config)?;
    let values = candidates.mismatch_values(&parsed.graph, config.mismatch, config.r1_tol);
    let mut out = format!(
        "# seed {} method {} mismatch {}\nalpha,k_star,objective,nmi,ri,fm,accuracy\n",
        config.seed, config.method, config.mismatch
    );
    for &alpha in &args.alphas {
        let report = candidates.select_with(config.mismatch, alpha, &values)?;
        let objective = report.record(report.k_star).and_then(|r| r.objective);
        let external = match &truth {
            Some(t) => {
                let p = report.partition.labels();
                let row = [
                    crate::metrics::nmi(p, t)?,
                    crate::metrics::rand_index(p, t)?,
                    crate::metrics::f_measure(p, t)?,
                    accuracy(p, t)?,
                ];
                row.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
            }
            None => ",,,".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{external}\n",
            num(alpha),
            report.k_star,
            objective.map_or(String::new(), num)
        ));
    }
    write_output(args.output.as_deref(), &out)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Eval(a) => cmd_eval(a),
        Command::PhaseDiagram(a) => cmd_phase_diagram(a),
        Command::Rank(a) => cmd_rank(a),
        Command::SweepAlpha(a) => cmd_sweep_alpha(a),
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            1
        }
    }
}

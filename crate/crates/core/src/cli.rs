use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use sparseperm::approx::{estimate_jobs, EstimateReport};
use sparseperm::datasets::builtin_dataset;
use sparseperm::exact::{
    evaluation_matrices, interpolate, per_hybrid, pre_expand, pre_expand_to_count, root_of_unity,
    ExpansionNode, RyserScalar, POLY_TOLERANCE,
};
use sparseperm::io::{parse_adjacency, parse_matrix_market, write_matrix_market, AdjacencyList};
use sparseperm::runtime::{
    efficiency_sweep, efficiency_sweep_replay, execute, map_parallel, RunPlan, RunResult, SweepRow,
    REPORT_SCHEMA,
};
use sparseperm::schedule::{parse_jobs_tsv, write_jobs_tsv, Job, Strategy};
use sparseperm::stats::{
    extract_features, kendall_tau, ols_fit, parse_observations_csv, rank_correlation_study,
    stepwise_select, write_observations_csv, Observation, RegressionFit, DEFAULT_ALPHA, FEATURE_NAMES,
};
use sparseperm::{ComplexMatrix, Error, FormatValue, IntMatrix, Scalar, SparseMatrix, DEFAULT_SEED};

type CliResult<T = ()> = std::result::Result<T, String>;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Parser, Debug)]
#[command(name = "sparseperm", version, about = "Exact and estimated permanents of sparse matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact permanent of a matrix, or of xI - A for a graph.
    Compute(ComputeArgs),
    /// Coefficients of per(xI - A), constant term first.
    Poly(PolyArgs),
    /// Pre-expand a matrix into independent jobs.
    Expand(ExpandCmd),
    /// Randomized estimates of every job's permanent.
    Estimate(EstimateArgs),
    /// Compare job orderings on recorded durations.
    Schedule(ScheduleArgs),
    /// Compute a permanent with a pool of workers.
    Run(RunArgs),
    /// Rank correlation, regression and feature tables.
    #[command(subcommand)]
    Stats(StatsCommand),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Adjacency list, or Matrix Market when the name ends in `.mtx`.
    #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
    pub input: Option<PathBuf>,
    /// Bundled graph: C60 or C100.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Override the format guessed from the file name.
    #[arg(long, value_enum)]
    pub input_format: Option<InputFormat>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Adj,
    Mtx,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Tsv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct ExpansionArgs {
    /// Number of expansion levels.
    #[arg(long, default_value_t = 0, conflicts_with = "jobs_at_least")]
    pub depth: usize,
    /// Expand level by level until at least this many jobs exist.
    #[arg(long)]
    pub jobs_at_least: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    /// Use xI - A with x the k-th of the (n+1)-th roots of unity.
    #[arg(long, conflicts_with = "shift")]
    pub root: Option<usize>,
    /// Use xI - A with x = RE,IM.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub shift: Option<Complex64>,
}

#[derive(Args, Debug, Clone)]
pub struct SeedArg {
    /// Seed for the estimator.
    #[arg(long, env = "SPARSEPERM_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Report format (each command has its own default).
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Allow long exact work on the bundled graphs.
    #[arg(long)]
    pub confirm_long: bool,
}

#[derive(Args, Debug)]
pub struct PolyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Allow long exact work on the bundled graphs.
    #[arg(long)]
    pub confirm_long: bool,
}

#[derive(Args, Debug)]
pub struct ExpandCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub expansion: ExpansionArgs,
    #[command(flatten)]
    pub point: PointArgs,
    /// Also write each job as `job_<id>.mtx` into this directory.
    #[arg(long)]
    pub write_dir: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub expansion: ExpansionArgs,
    /// Trials per job (default: square of the job order).
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    /// Recorded jobs as TSV: id, time, estimate.
    #[arg(long)]
    pub replay: PathBuf,
    /// Machine counts, starting at 1.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    pub machines: Vec<usize>,
    /// Only this ordering (default: all three).
    #[arg(long)]
    pub order: Option<Strategy>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub expansion: ExpansionArgs,
    #[command(flatten)]
    pub point: PointArgs,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Job order: natural, lpt (needs --replay) or estimated.
    #[arg(long, default_value = "natural")]
    pub order: Strategy,
    /// Estimator trials per job for the estimated order (default: square of the job order).
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Recorded durations (TSV) for the lpt order.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Add a speed-up table for these worker counts.
    #[arg(long, value_delimiter = ',')]
    pub machines: Option<Vec<usize>>,
    /// Build the speed-up table from real runs instead of replaying this one.
    #[arg(long)]
    pub real_sweep: bool,
    /// Write measured durations here for later replay.
    #[arg(long)]
    pub replay_out: Option<PathBuf>,
    /// Leave timings and worker ids out of the report.
    #[arg(long)]
    pub deterministic: bool,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Allow long exact work on the bundled graphs.
    #[arg(long)]
    pub confirm_long: bool,
}

#[derive(Subcommand, Debug)]
pub enum StatsCommand {
    /// Kendall tau between two series, or the correlation table of an observation file.
    Kendall(KendallArgs),
    /// Forward stepwise (or full) regression of T on P, absD, S, V1, V2.
    Regress(RegressArgs),
    /// Observation table (id,T,P,absD,S,V1,V2,AP) for the jobs of a matrix.
    Features(FeaturesArgs),
}

#[derive(Args, Debug)]
pub struct KendallArgs {
    #[arg(long, requires = "y", conflicts_with = "table")]
    pub x: Option<PathBuf>,
    #[arg(long, requires = "x")]
    pub y: Option<PathBuf>,
    /// Column to read from `--x` when it has several.
    #[arg(long)]
    pub x_col: Option<String>,
    #[arg(long)]
    pub y_col: Option<String>,
    /// Observation CSV; compares T with P and with AP.
    #[arg(long, required_unless_present = "x")]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct RegressArgs {
    /// Observation CSV with a T column.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Fit all five predictors instead of selecting.
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub expansion: ExpansionArgs,
    /// Recorded durations (TSV) to fill the T column.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Also fill AP with this many estimator trials per job.
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Write the table here instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Allow long exact work on the bundled graphs.
    #[arg(long)]
    pub confirm_long: bool,
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected RE,IM, got `{s}`"))?;
    let re: f64 = re.trim().parse().map_err(|_| format!("bad real part `{re}`"))?;
    let im: f64 = im.trim().parse().map_err(|_| format!("bad imaginary part `{im}`"))?;
    Ok(Complex64::new(re, im))
}

/// A loaded input: the integer matrix and, when it is a graph, its adjacency.
struct Loaded {
    source: String,
    matrix: IntMatrix,
    graph: Option<AdjacencyList>,
    builtin: bool,
}

fn load(args: &InputArgs) -> CliResult<Loaded> {
    if let Some(name) = &args.builtin {
        let adj = builtin_dataset(name).map_err(fail)?;
        return Ok(Loaded {
            source: format!("builtin:{}", name.to_ascii_uppercase()),
            matrix: adj.to_matrix(),
            graph: Some(adj),
            builtin: true,
        });
    }
    let path = args.input.as_ref().expect("clap requires an input");
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let format = args.input_format.unwrap_or_else(|| {
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx")) {
            InputFormat::Mtx
        } else {
            InputFormat::Adj
        }
    });
    let with_path = |e: Error| format!("{}: {e}", path.display());
    let (matrix, graph) = match format {
        InputFormat::Adj => {
            let adj = parse_adjacency(&text).map_err(with_path)?;
            (adj.to_matrix(), Some(adj))
        }
        InputFormat::Mtx => {
            let m = parse_matrix_market(&text).map_err(with_path)?;
            let g = AdjacencyList::from_matrix(&m).ok();
            (m, g)
        }
    };
    Ok(Loaded {
        source: path.display().to_string(),
        matrix,
        graph,
        builtin: false,
    })
}

/// Bundled graphs are slow for exact work on C100 and for complex entries on
/// either graph; those paths need `--confirm-long`.
fn guard_long(loaded: &Loaded, complex: bool, confirmed: bool) -> CliResult {
    let slow = loaded.builtin && (complex || loaded.matrix.order() >= 100);
    if slow && !confirmed {
        return Err(format!(
            "exact work on {} runs for a long time; pass --confirm-long to proceed",
            loaded.source
        ));
    }
    Ok(())
}

impl PointArgs {
    fn is_set(&self) -> bool {
        self.root.is_some() || self.shift.is_some()
    }
}

/// `x` for `--root`/`--shift`, if either was given.
fn point_of(point: &PointArgs, n: usize) -> Option<Complex64> {
    point
        .root
        .map(|k| root_of_unity(k, n + 1))
        .or(point.shift)
}

fn point_label(point: &PointArgs, n: usize) -> Option<String> {
    if let Some(k) = point.root {
        Some(format!("root {k} of {}", n + 1))
    } else {
        point.shift.map(|x| format!("{},{}", x.re, x.im))
    }
}

fn expand_nodes<T: Scalar>(m: &SparseMatrix<T>, e: &ExpansionArgs) -> CliResult<Vec<ExpansionNode<T>>> {
    match e.jobs_at_least {
        Some(target) => pre_expand_to_count(m, target),
        None => pre_expand(m, e.depth),
    }
    .map_err(fail)
}

fn emit(out: &OutputArgs, text: &str) -> CliResult {
    match &out.output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(fail)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(fail)
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Compute(a) => cmd_compute(a),
        Command::Poly(a) => cmd_poly(a),
        Command::Expand(a) => cmd_expand(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Schedule(a) => cmd_schedule(a),
        Command::Run(a) => cmd_run(a),
        Command::Stats(StatsCommand::Kendall(a)) => cmd_kendall(a),
        Command::Stats(StatsCommand::Regress(a)) => cmd_regress(a),
        Command::Stats(StatsCommand::Features(a)) => cmd_features(a),
    }
}

#[derive(Serialize)]
struct ValueReport<'a> {
    schema: u32,
    command: &'a str,
    source: String,
    order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<String>,
    kind: sparseperm::ScalarKind,
    permanent: String,
}

fn cmd_compute(a: ComputeArgs) -> CliResult {
    let loaded = load(&a.input)?;
    guard_long(&loaded, a.point.is_set(), a.confirm_long)?;
    let n = loaded.matrix.order();
    let (kind, value) = match point_of(&a.point, n) {
        Some(x) => {
            let m = ComplexMatrix::shifted_negation(&loaded.matrix, x);
            (Complex64::KIND, per_hybrid(&m).map_err(fail)?.format_value())
        }
        None => (i128::KIND, per_hybrid(&loaded.matrix).map_err(fail)?.format_value()),
    };
    let text = match a.out.format.unwrap_or(OutputFormat::Tsv) {
        OutputFormat::Tsv => format!("{value}\n"),
        OutputFormat::Json => to_json(&ValueReport {
            schema: REPORT_SCHEMA,
            command: "compute",
            source: loaded.source,
            order: n,
            point: point_label(&a.point, n),
            kind,
            permanent: value,
        })?,
    };
    emit(&a.out, &text)
}

#[derive(Serialize)]
struct PolyReport {
    schema: u32,
    command: &'static str,
    source: String,
    /// Constant term first.
    coefficients: Vec<i128>,
    max_residual: f64,
}

fn cmd_poly(a: PolyArgs) -> CliResult {
    let loaded = load(&a.input)?;
    guard_long(&loaded, true, a.confirm_long)?;
    let graph = loaded
        .graph
        .as_ref()
        .ok_or("the permanental polynomial needs a graph (0-1 matrix, zero diagonal)")?;
    let matrices = evaluation_matrices(graph).map_err(fail)?;
    let values = map_parallel(&matrices, a.workers, per_hybrid)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(fail)?;
    let poly = interpolate(&values, POLY_TOLERANCE).map_err(fail)?;
    let text = match a.out.format.unwrap_or(OutputFormat::Tsv) {
        OutputFormat::Tsv => {
            let cs: Vec<String> = poly.coefficients.iter().map(i128::to_string).collect();
            format!("{}\n", cs.join(" "))
        }
        OutputFormat::Json => to_json(&PolyReport {
            schema: REPORT_SCHEMA,
            command: "poly",
            source: loaded.source,
            coefficients: poly.coefficients,
            max_residual: poly.max_residual,
        })?,
    };
    emit(&a.out, &text)
}

#[derive(Serialize)]
struct JobSummary {
    id: usize,
    order: usize,
    nonzeros: usize,
    lineage: String,
}

fn lineage_label(l: &[u8]) -> String {
    if l.is_empty() {
        "-".to_string()
    } else {
        l.iter().map(|b| char::from(b'0' + b)).collect()
    }
}

fn summaries<T: Scalar>(nodes: &[ExpansionNode<T>]) -> Vec<JobSummary> {
    nodes
        .iter()
        .enumerate()
        .map(|(id, node)| JobSummary {
            id,
            order: node.matrix.order(),
            nonzeros: node.matrix.nnz(),
            lineage: lineage_label(&node.lineage),
        })
        .collect()
}

#[derive(Serialize)]
struct ExpandReport {
    schema: u32,
    command: &'static str,
    source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<String>,
    jobs: Vec<JobSummary>,
}

fn cmd_expand(a: ExpandCmd) -> CliResult {
    let loaded = load(&a.input)?;
    let n = loaded.matrix.order();
    let jobs = match point_of(&a.point, n) {
        Some(x) => {
            if a.write_dir.is_some() {
                return Err("--write-dir needs an integer matrix".into());
            }
            summaries(&expand_nodes(&ComplexMatrix::shifted_negation(&loaded.matrix, x), &a.expansion)?)
        }
        None => {
            let nodes = expand_nodes(&loaded.matrix, &a.expansion)?;
            if let Some(dir) = &a.write_dir {
                fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                for (id, node) in nodes.iter().enumerate() {
                    write_file(&dir.join(format!("job_{id}.mtx")), &write_matrix_market(&node.matrix))?;
                }
            }
            summaries(&nodes)
        }
    };
    let text = match a.out.format.unwrap_or(OutputFormat::Tsv) {
        OutputFormat::Tsv => {
            let mut s = String::from("id\torder\tnonzeros\tlineage\n");
            for j in &jobs {
                s.push_str(&format!("{}\t{}\t{}\t{}\n", j.id, j.order, j.nonzeros, j.lineage));
            }
            s
        }
        OutputFormat::Json => to_json(&ExpandReport {
            schema: REPORT_SCHEMA,
            command: "expand",
            source: loaded.source,
            point: point_label(&a.point, n),
            jobs,
        })?,
    };
    emit(&a.out, &text)
}

#[derive(Serialize)]
struct EstimateEntry {
    id: usize,
    lineage: String,
    #[serde(flatten)]
    report: EstimateReport,
}

#[derive(Serialize)]
struct EstimateFile {
    schema: u32,
    command: &'static str,
    source: String,
    jobs: Vec<EstimateEntry>,
}

fn cmd_estimate(a: EstimateArgs) -> CliResult {
    let loaded = load(&a.input)?;
    let nodes = expand_nodes(&loaded.matrix, &a.expansion)?;
    let t = Instant::now();
    let reports = estimate_jobs(&nodes, a.trials, a.seed.seed).map_err(fail)?;
    eprintln!(
        "estimated {} jobs in {:.3} s",
        reports.len(),
        t.elapsed().as_secs_f64()
    );
    let text = match a.out.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Tsv => {
            let mut s = String::from("id\torder\ttrials\tmean\tvariance\n");
            for (id, r) in reports.iter().enumerate() {
                s.push_str(&format!("{id}\t{}\t{}\t{}\t{}\n", r.n, r.trials, r.mean, r.variance));
            }
            s
        }
        OutputFormat::Json => to_json(&EstimateFile {
            schema: REPORT_SCHEMA,
            command: "estimate",
            source: loaded.source,
            jobs: reports
                .into_iter()
                .zip(&nodes)
                .enumerate()
                .map(|(id, (report, node))| EstimateEntry {
                    id,
                    lineage: lineage_label(&node.lineage),
                    report,
                })
                .collect(),
        })?,
    };
    emit(&a.out, &text)
}

#[derive(Serialize)]
struct StrategySweep {
    order: Strategy,
    rows: Vec<SweepRow>,
}

#[derive(Serialize)]
struct ScheduleReport {
    schema: u32,
    command: &'static str,
    jobs: usize,
    sweeps: Vec<StrategySweep>,
}

fn sweep_cell(v: Option<f64>, digits: usize) -> String {
    v.map_or("--".to_string(), |x| format!("{x:.digits$}"))
}

fn cmd_schedule(a: ScheduleArgs) -> CliResult {
    let jobs = parse_jobs_tsv(&read_file(&a.replay)?).map_err(fail)?;
    let strategies: Vec<Strategy> = match a.order {
        Some(s) => vec![s],
        None if jobs.iter().all(|j| j.estimate.is_some()) => Strategy::ALL.to_vec(),
        None => vec![Strategy::Natural, Strategy::Lpt],
    };
    let sweeps = strategies
        .into_iter()
        .map(|order| {
            efficiency_sweep_replay(&jobs, order, &a.machines).map(|rows| StrategySweep { order, rows })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(fail)?;
    let text = match a.out.format.unwrap_or(OutputFormat::Tsv) {
        OutputFormat::Tsv => {
            let many = sweeps.len() > 1;
            let mut s = String::from(if many {
                "order\tnum\ttime\tratio\tefficiency\n"
            } else {
                "num\ttime\tratio\tefficiency\n"
            });
            for sw in &sweeps {
                for r in &sw.rows {
                    if many {
                        s.push_str(&format!("{}\t", sw.order));
                    }
                    s.push_str(&format!(
                        "{}\t{:.2}\t{}\t{}\n",
                        r.num,
                        r.time,
                        sweep_cell(r.ratio, 2),
                        sweep_cell(r.efficiency, 4)
                    ));
                }
            }
            s
        }
        OutputFormat::Json => to_json(&ScheduleReport {
            schema: REPORT_SCHEMA,
            command: "schedule",
            jobs: jobs.len(),
            sweeps,
        })?,
    };
    emit(&a.out, &text)
}

#[derive(Serialize)]
struct PlanEcho {
    source: String,
    order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jobs_at_least: Option<usize>,
    jobs: usize,
    strategy: Strategy,
    workers: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
}

#[derive(Serialize)]
struct RecordOut {
    id: usize,
    order: usize,
    position: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    worker: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    finish: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<f64>,
    permanent: String,
}

#[derive(Serialize)]
struct RunReport {
    schema: u32,
    command: &'static str,
    plan: PlanEcho,
    kind: sparseperm::ScalarKind,
    total: String,
    records: Vec<RecordOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    makespan: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<SweepRow>>,
}

fn cmd_run(a: RunArgs) -> CliResult {
    let loaded = load(&a.input)?;
    guard_long(&loaded, a.point.is_set(), a.confirm_long)?;
    let n = loaded.matrix.order();
    match point_of(&a.point, n) {
        Some(x) => run_with(&a, &loaded, ComplexMatrix::shifted_negation(&loaded.matrix, x)),
        None => run_with(&a, &loaded, loaded.matrix.clone()),
    }
}

fn run_with<T: RyserScalar + FormatValue>(a: &RunArgs, loaded: &Loaded, m: SparseMatrix<T>) -> CliResult {
    let n = m.order();
    let nodes = expand_nodes(&m, &a.expansion)?;
    let mut plan = RunPlan::new(nodes, a.order, a.workers);
    plan.seed = a.seed.seed;
    plan.trials = a.trials;
    if let Some(path) = &a.replay {
        let jobs = parse_jobs_tsv(&read_file(path)?).map_err(fail)?;
        let mut durations = vec![None; plan.nodes.len()];
        for j in jobs {
            if let Some(slot) = durations.get_mut(j.id) {
                *slot = Some(j.time);
            }
        }
        let durations: Option<Vec<f64>> = durations.into_iter().collect();
        plan.durations = Some(durations.ok_or("replay file does not cover every job")?);
    }
    let result: RunResult<T> = execute(&plan).map_err(fail)?;

    if let Some(path) = &a.replay_out {
        write_file(path, &write_jobs_tsv(&result.replay_jobs()))?;
    }
    let sweep = match (&a.machines, a.deterministic) {
        (Some(counts), false) if a.real_sweep => Some(efficiency_sweep(&plan, counts).map_err(fail)?),
        (Some(counts), false) => {
            Some(efficiency_sweep_replay(&result.replay_jobs(), a.order, counts).map_err(fail)?)
        }
        _ => None,
    };

    let timed = !a.deterministic;
    let records = result
        .records
        .iter()
        .zip(&result.values)
        .map(|(r, v)| RecordOut {
            id: r.id,
            order: plan.nodes[r.id].matrix.order(),
            position: r.position,
            worker: timed.then_some(r.worker),
            start: timed.then_some(r.start),
            finish: timed.then_some(r.finish),
            duration: timed.then_some(r.duration),
            estimate: r.estimate,
            permanent: v.format_value(),
        })
        .collect();
    let report = RunReport {
        schema: REPORT_SCHEMA,
        command: "run",
        plan: PlanEcho {
            source: loaded.source.clone(),
            order: n,
            point: point_label(&a.point, loaded.matrix.order()),
            depth: a.expansion.jobs_at_least.is_none().then_some(a.expansion.depth),
            jobs_at_least: a.expansion.jobs_at_least,
            jobs: plan.nodes.len(),
            strategy: a.order,
            workers: a.workers,
            seed: a.seed.seed,
            trials: a.trials,
        },
        kind: T::KIND,
        total: result.total.format_value(),
        records,
        wall_seconds: timed.then_some(result.wall_seconds),
        makespan: timed.then_some(result.makespan),
        estimate_seconds: result.estimate_seconds.filter(|_| timed),
        sweep: sweep.clone(),
    };
    let text = match a.out.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Tsv => match &sweep {
            Some(rows) => sparseperm::runtime::write_sweep_tsv(rows),
            None => {
                let mut s = String::from("id\tposition\tpermanent\n");
                for r in &report.records {
                    s.push_str(&format!("{}\t{}\t{}\n", r.id, r.position, r.permanent));
                }
                s
            }
        },
    };
    emit(&a.out, &text)?;
    if a.out.output.is_some() {
        println!("{}", report.total);
    }
    Ok(())
}

/// Numbers from a one-column file, or from a named (or the first) column of a
/// CSV with a header row.
fn read_series(path: &Path, column: Option<&str>) -> CliResult<Vec<f64>> {
    let text = read_file(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for r in reader.records() {
        rows.push(r.map_err(|e| format!("{}: {e}", path.display()))?);
    }
    let numeric = |r: &csv::StringRecord| r.iter().all(|f| f.trim().parse::<f64>().is_ok());
    let header = rows.first().filter(|r| !numeric(r)).cloned();
    let index = match (column, &header) {
        (Some(name), Some(h)) => h
            .iter()
            .position(|f| f.trim() == name)
            .ok_or_else(|| format!("{}: no column `{name}`", path.display()))?,
        (Some(name), None) => return Err(format!("{}: no header to find `{name}` in", path.display())),
        (None, _) => 0,
    };
    rows.iter()
        .skip(header.is_some() as usize)
        .enumerate()
        .map(|(k, r)| {
            let field = r.get(index).unwrap_or("").trim();
            field.parse::<f64>().map_err(|_| {
                format!(
                    "{}: line {}: `{field}` is not a number",
                    path.display(),
                    k + 1 + header.is_some() as usize
                )
            })
        })
        .collect()
}

#[derive(Serialize)]
struct KendallRow {
    against: String,
    tau: f64,
    p_value: f64,
}

#[derive(Serialize)]
struct KendallReport {
    schema: u32,
    command: &'static str,
    n: usize,
    rows: Vec<KendallRow>,
}

fn cmd_kendall(a: KendallArgs) -> CliResult {
    let (n, rows) = if let Some(table) = &a.table {
        let obs = parse_observations_csv(&read_file(table)?).map_err(fail)?;
        let times = obs
            .iter()
            .map(|o| o.time.ok_or_else(|| format!("job {} has no time", o.id)))
            .collect::<CliResult<Vec<f64>>>()?;
        let values: Vec<f64> = obs.iter().map(|o| o.p).collect();
        let estimates = obs
            .iter()
            .map(|o| o.ap.ok_or_else(|| format!("job {} has no estimate", o.id)))
            .collect::<CliResult<Vec<f64>>>()?;
        let rows = rank_correlation_study(&times, &values, &estimates).map_err(fail)?;
        (
            obs.len(),
            rows.into_iter()
                .map(|r| KendallRow {
                    against: r.against,
                    tau: r.tau,
                    p_value: r.p_value,
                })
                .collect(),
        )
    } else {
        let x = read_series(a.x.as_ref().unwrap(), a.x_col.as_deref())?;
        let y = read_series(a.y.as_ref().unwrap(), a.y_col.as_deref())?;
        let k = kendall_tau(&x, &y).map_err(fail)?;
        (
            x.len(),
            vec![KendallRow {
                against: "y".into(),
                tau: k.tau,
                p_value: k.p_value,
            }],
        )
    };
    let text = match a.out.format.unwrap_or(OutputFormat::Tsv) {
        OutputFormat::Tsv => {
            let mut s = String::from("against\ttau\tp_value\n");
            for r in &rows {
                s.push_str(&format!("{}\t{}\t{:e}\n", r.against, r.tau, r.p_value));
            }
            s
        }
        OutputFormat::Json => to_json(&KendallReport {
            schema: REPORT_SCHEMA,
            command: "stats kendall",
            n,
            rows,
        })?,
    };
    emit(&a.out, &text)
}

#[derive(Serialize)]
struct RegressReport {
    schema: u32,
    command: &'static str,
    method: &'static str,
    alpha: f64,
    predictors: Vec<&'static str>,
    #[serde(flatten)]
    fit: RegressionFit,
}

fn cmd_regress(a: RegressArgs) -> CliResult {
    let obs = parse_observations_csv(&read_file(&a.table)?).map_err(fail)?;
    let y = obs
        .iter()
        .map(|o| o.time.ok_or_else(|| format!("job {} has no time", o.id)))
        .collect::<CliResult<Vec<f64>>>()?;
    let columns: Vec<Vec<f64>> = (0..FEATURE_NAMES.len())
        .map(|c| obs.iter().map(|o| o.predictors()[c]).collect())
        .collect();
    let fit = if a.full {
        ols_fit(&columns, &y)
    } else {
        stepwise_select(&columns, &y, a.alpha)
    }
    .map_err(fail)?;
    let names: Vec<&'static str> = fit.selected.iter().map(|&c| FEATURE_NAMES[c]).collect();
    let text = match a.out.format.unwrap_or(OutputFormat::Tsv) {
        OutputFormat::Tsv => {
            let mut s = String::from("term\tcoefficient\n");
            s.push_str(&format!("intercept\t{}\n", fit.coefficients[0]));
            for (name, c) in names.iter().zip(&fit.coefficients[1..]) {
                s.push_str(&format!("{name}\t{c}\n"));
            }
            s.push_str(&format!("R2\t{}\n", fit.r_squared));
            s
        }
        OutputFormat::Json => to_json(&RegressReport {
            schema: REPORT_SCHEMA,
            command: "stats regress",
            method: if a.full { "ols" } else { "forward-stepwise" },
            alpha: a.alpha,
            predictors: names,
            fit,
        })?,
    };
    emit(&a.out, &text)
}

fn cmd_features(a: FeaturesArgs) -> CliResult {
    let loaded = load(&a.input)?;
    guard_long(&loaded, false, a.confirm_long)?;
    let nodes = expand_nodes(&loaded.matrix, &a.expansion)?;
    let times: Vec<Option<f64>> = match &a.replay {
        Some(path) => {
            let jobs: Vec<Job> = parse_jobs_tsv(&read_file(path)?).map_err(fail)?;
            (0..nodes.len())
                .map(|k| jobs.iter().find(|j| j.id == k).map(|j| j.time))
                .collect()
        }
        None => vec![None; nodes.len()],
    };
    let estimates: Vec<Option<f64>> = match a.trials {
        Some(t) => estimate_jobs(&nodes, Some(t), a.seed.seed)
            .map_err(fail)?
            .into_iter()
            .map(|r| Some(r.mean))
            .collect(),
        None => vec![None; nodes.len()],
    };
    let rows = nodes
        .iter()
        .enumerate()
        .map(|(id, node)| {
            let mut f = extract_features(&node.matrix).map_err(|e| format!("job {id}: {e}"))?;
            f.time = times[id];
            Ok(Observation::from_features(id, &f, estimates[id]))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let text = write_observations_csv(&rows).map_err(fail)?;
    match &a.output {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

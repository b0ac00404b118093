//! Command-line front end for `hyreach`.
//!
//! `hyreach [flags]` analyzes one model with one engine. `hyreach bench
//! [flags]` runs a list of models under every engine and prints a
//! comparison table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use hyreach::automaton::{builtin, parse_model, HybridAutomaton, ModelError};
use hyreach::engines::{run, Engine, ExploreOptions, ReachResult, RunStats};
use hyreach::geometry::TemplateDirections;
use hyreach::postc::{flowpipe_template_union, ReachError, ReachParams};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("numerical failure: {0}")]
    Reach(#[from] ReachError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Model(_) => 2,
            CliError::Reach(ReachError::InvalidParams(_)) => 1,
            CliError::Reach(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        s == Switch::On
    }
}

/// Flags shared by single runs and benchmarks.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// BFS levels to expand beyond the initial one.
    #[arg(long, default_value_t = 5)]
    pub bound: usize,
    /// Time horizon of every flowpipe.
    #[arg(long = "T", default_value_t = 10.0)]
    pub horizon: f64,
    /// Time step; defaults depend on the model.
    #[arg(long)]
    pub step: Option<f64>,
    /// `box`, `oct` or `uniform:<k>`.
    #[arg(long, default_value = "box")]
    pub dirs: String,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub aggregate: Switch,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub containment: Switch,
}

#[derive(Debug, Parser)]
#[command(name = "hyreach", about = "Reachability analysis of linear hybrid automata")]
pub struct RunArgs {
    /// Model file, or one of `circle`, `ball`, `oscillator`, `nav:<n>`.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value = "seq")]
    pub engine: Engine,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Region file: one projected polygon per line.
    #[arg(long)]
    pub out_region: Option<PathBuf>,
    /// Stats report (JSON). Printed to stdout when absent.
    #[arg(long)]
    pub out_stats: Option<PathBuf>,
    /// Projection axes `i,j` for the region file.
    #[arg(long, default_value = "0,1")]
    pub project: String,
}

#[derive(Debug, Parser)]
#[command(name = "hyreach bench", about = "Compare all engines on a list of models")]
pub struct BenchArgs {
    /// Comma-separated models.
    #[arg(long, default_value = "circle,ball,oscillator,nav:3")]
    pub models: String,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Machine-readable table (JSON).
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

/// Validated settings of one analysis.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: String,
    pub engine: Engine,
    pub params: ReachParams,
    pub opts: ExploreOptions,
}

/// Step used when `--step` is not given.
pub fn default_step(model: &str) -> f64 {
    match model {
        "circle" => 1e-5,
        "nav:9" => 0.1,
        "ball" | "oscillator" => 1e-4,
        m if m.starts_with("nav:") => 1e-4,
        _ => 1e-3,
    }
}

pub fn load_model(source: &str) -> Result<HybridAutomaton, CliError> {
    if let Some(r) = builtin(source) {
        return Ok(r?);
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "`{source}` is neither a model file nor a built-in model"
        )));
    }
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_model(&text)?)
}

pub fn parse_dirs(arg: &str, dim: usize) -> Result<TemplateDirections, CliError> {
    let dirs = match arg {
        "box" => TemplateDirections::boxed(dim),
        "oct" => TemplateDirections::octagonal(dim),
        _ => {
            let k = arg
                .strip_prefix("uniform:")
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| CliError::Usage(format!("invalid --dirs `{arg}`")))?;
            if dim != 2 {
                return Err(CliError::Usage(format!(
                    "--dirs uniform:{k} needs a 2-dimensional model, got {dim} variables"
                )));
            }
            TemplateDirections::uniform_2d(k).map_err(|e| CliError::Usage(format!("--dirs: {e}")))?
        }
    };
    Ok(dirs)
}

pub fn parse_axes(arg: &str, dim: usize) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("invalid --project `{arg}`"));
    let (i, j) = arg.split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == j || i >= dim || j >= dim {
        return Err(CliError::Usage(format!(
            "--project {i},{j} must name two distinct axes below {dim}"
        )));
    }
    Ok((i, j))
}

impl RunConfig {
    pub fn new(model: &str, engine: Engine, common: &CommonArgs, ha: &HybridAutomaton) -> Result<Self, CliError> {
        if common.workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        let step = common.step.unwrap_or_else(|| default_step(model));
        if !(step > 0.0) {
            return Err(CliError::Usage(format!("--step must be positive, got {step}")));
        }
        let dirs = parse_dirs(&common.dirs, ha.dim())?;
        let params = ReachParams::new(common.horizon, step, Arc::new(dirs))?;
        Ok(RunConfig {
            model: model.to_string(),
            engine,
            params,
            opts: ExploreOptions {
                bound: common.bound,
                aggregate: common.aggregate.into(),
                containment: common.containment.into(),
                workers: common.workers,
                seed: common.seed,
            },
        })
    }

    pub fn execute(&self, ha: &HybridAutomaton) -> Result<ReachResult, CliError> {
        Ok(run(self.engine, ha, ha.init(), &self.params, &self.opts)?)
    }
}

/// Stats file layout. Field names are part of the output format.
#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub model: String,
    pub engine: String,
    pub workers: usize,
    pub bound: usize,
    pub horizon: f64,
    pub step: f64,
    pub directions: usize,
    pub levels: usize,
    pub post_c: u64,
    pub post_d: u64,
    pub successors: u64,
    pub total_posts: u64,
    pub support_samples: u64,
    pub check_samples: u64,
    pub jump_tasks: u64,
    pub frontier_remaining: usize,
    pub busy: Vec<f64>,
    pub level_busy: Vec<Vec<f64>>,
    pub level_assigned_cost: Vec<Vec<u64>>,
    pub level_tasks_per_core: Vec<u64>,
    pub level_max_task_cost: Vec<u64>,
    pub wall: f64,
    pub utilization: f64,
}

impl StatsReport {
    pub fn new(cfg: &RunConfig, s: &RunStats) -> Self {
        StatsReport {
            model: cfg.model.clone(),
            engine: s.engine.name().to_string(),
            workers: s.workers,
            bound: cfg.opts.bound,
            horizon: cfg.params.horizon(),
            step: cfg.params.step(),
            directions: cfg.params.directions().len(),
            levels: s.levels,
            post_c: s.post_c,
            post_d: s.post_d,
            successors: s.successors,
            total_posts: s.total_posts,
            support_samples: s.support_samples,
            check_samples: s.check_samples,
            jump_tasks: s.jump_tasks,
            frontier_remaining: s.frontier_remaining,
            busy: s.busy.clone(),
            level_busy: s.level_busy.clone(),
            level_assigned_cost: s.level_assigned_cost.clone(),
            level_tasks_per_core: s.level_tasks_per_core.clone(),
            level_max_task_cost: s.level_max_task_cost.clone(),
            wall: s.wall,
            utilization: s.utilization,
        }
    }
}

/// Region file contents: `loc level x1 y1 x2 y2 ...` per Ω polygon.
pub fn region_lines(r: &ReachResult, axes: (usize, usize)) -> Result<String, CliError> {
    let mut out = String::new();
    for e in r.entries() {
        for poly in flowpipe_template_union(&e.flowpipe, axes)? {
            write!(out, "{} {}", e.flowpipe.loc, e.level).expect("write to string");
            for [x, y] in poly {
                write!(out, " {x} {y}").expect("write to string");
            }
            out.push('\n');
        }
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_or_exit<P: Parser>(argv: Vec<String>) -> Result<P, i32> {
    P::try_parse_from(argv).map_err(|e| {
        let code = if e.use_stderr() { 1 } else { 0 };
        let _ = e.print();
        code
    })
}

fn report(e: CliError) -> i32 {
    eprintln!("hyreach: {e}");
    e.exit_code()
}

/// Entry point of the binary. `argv[0]` is the program name.
pub fn run_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    if argv.get(1).map(String::as_str) == Some("bench") {
        let mut rest = vec![format!("{} bench", argv[0])];
        rest.extend(argv.into_iter().skip(2));
        return bench_main(rest);
    }
    let args: RunArgs = match parse_or_exit(argv) {
        Ok(a) => a,
        Err(code) => return code,
    };
    match single_run(&args) {
        Ok(()) => 0,
        Err(e) => report(e),
    }
}

fn single_run(args: &RunArgs) -> Result<(), CliError> {
    let ha = load_model(&args.model)?;
    let axes = parse_axes(&args.project, ha.dim())?;
    let cfg = RunConfig::new(&args.model, args.engine, &args.common, &ha)?;
    let result = cfg.execute(&ha)?;
    if let Some(path) = &args.out_region {
        write_file(path, &region_lines(&result, axes)?)?;
    }
    let json = serde_json::to_string_pretty(&StatsReport::new(&cfg, &result.stats)).expect("stats serialize");
    match &args.out_stats {
        Some(path) => write_file(path, &(json + "\n"))?,
        None => println!("{json}"),
    }
    Ok(())
}

/// One engine's cell of a benchmark row.
#[derive(Debug, Clone, Serialize)]
pub struct BenchCell {
    pub engine: String,
    pub wall: f64,
    pub post_c: u64,
    pub post_d: u64,
    pub total_posts: u64,
    pub utilization: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub model: String,
    pub step: f64,
    pub cells: Vec<BenchCell>,
}

pub fn bench_rows(args: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = Vec::new();
    for model in args.models.split(',').map(str::trim).filter(|m| !m.is_empty()) {
        let ha = load_model(model)?;
        let mut cells = Vec::new();
        let mut step = 0.0;
        for engine in Engine::ALL {
            let cfg = RunConfig::new(model, engine, &args.common, &ha)?;
            step = cfg.params.step();
            let s = cfg.execute(&ha)?.stats;
            cells.push(BenchCell {
                engine: engine.name().to_string(),
                wall: s.wall,
                post_c: s.post_c,
                post_d: s.post_d,
                total_posts: s.total_posts,
                utilization: s.utilization,
            });
        }
        rows.push(BenchRow {
            model: model.to_string(),
            step,
            cells,
        });
    }
    Ok(rows)
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:<12} {:>9}", "model", "step");
    for e in Engine::ALL {
        write!(out, " | {:>10} {:>8} {:>6}", format!("{e} wall"), "posts", "util").expect("write to string");
    }
    out.push('\n');
    for r in rows {
        write!(out, "{:<12} {:>9.1e}", r.model, r.step).expect("write to string");
        for c in &r.cells {
            write!(out, " | {:>9.4}s {:>8} {:>6.3}", c.wall, c.total_posts, c.utilization).expect("write to string");
        }
        out.push('\n');
    }
    out
}

/// `hyreach bench`. `argv[0]` is the program name.
pub fn bench_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let args: BenchArgs = match parse_or_exit(argv) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let rows = match bench_rows(&args) {
        Ok(r) => r,
        Err(e) => return report(e),
    };
    print!("{}", bench_table(&rows));
    if let Some(path) = &args.out_json {
        let json = serde_json::to_string_pretty(&rows).expect("bench serialize");
        if let Err(e) = write_file(path, &(json + "\n")) {
            return report(e);
        }
    }
    0
}

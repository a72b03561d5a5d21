//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 disconnected graph where a
//! connected one is required, 4 infeasible gain design.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::agreement::{self, AgreementError};
use crate::dynamics::{self, AgentDynamics, DynamicsError, StabilityPartition};
use crate::graph::{self, WeightedGraph};
use crate::plot::{Chart, Series};
use crate::report::{ClusterReport, Method, ScanReport};
use crate::sim::{self, SimConfig, Trajectory};
use crate::spectral::{self, SpectralData, SpectralError};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DISCONNECTED: i32 = 3;
pub const EXIT_DESIGN: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "consensus-cluster",
    version,
    about = "Cluster graph vertices through group consensus of unstable linear agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print Laplacian eigenvalues and the connectivity verdict.
    Spectrum(SpectrumArgs),
    /// Cluster vertices with the zero-pattern agreement test.
    Cluster(ClusterArgs),
    /// Design second-order gains (A, F) realizing a given h.
    Design(DesignArgs),
    /// Integrate the agent system and extract quasi-consensus clusters.
    Simulate(SimulateArgs),
    /// Render an SVG chart from a trajectory CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Edge list (`u v w` lines) or adjacency CSV.
    pub graph: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["dynamics", "h", "scan"])))]
pub struct ClusterArgs {
    pub graph: PathBuf,
    /// Dynamics file (`d <d>`, then rows of A, then rows of F).
    #[arg(long)]
    pub dynamics: Option<PathBuf>,
    /// Use required-zero columns {2, …, h−1} directly.
    #[arg(long)]
    pub h: Option<usize>,
    /// Report every distinct partition over h = 2..N.
    #[arg(long)]
    pub scan: bool,
    /// Absolute zero tolerance for PT masses (default 1e-6 · max|PT|).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub h: usize,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Write the dynamics file here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("gains").required(true).args(["dynamics", "h"])))]
pub struct SimulateArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub dynamics: Option<PathBuf>,
    /// Design gains for this h instead of reading a dynamics file.
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long = "t-end", default_value_t = 5.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = sim::DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = sim::DEFAULT_RECORD_STRIDE)]
    pub stride: usize,
    /// Fraction of the run used for quasi-cluster extraction.
    #[arg(long, default_value_t = sim::DEFAULT_EVAL_WINDOW)]
    pub window: f64,
    /// Trajectory CSV path (standard output when absent; the report then goes to --report or is skipped).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Quasi-cluster JSON path (standard output when absent and --out is given).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("view").required(true).args(["pair", "phase"])))]
pub struct PlotArgs {
    pub trajectory: PathBuf,
    /// Plot agents i and j: raw coordinate difference with --coord, else normalized distance.
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    pub pair: Option<Vec<usize>>,
    #[arg(long, requires = "pair")]
    pub coord: Option<usize>,
    /// Phase portrait of coordinate 1 against coordinate 2, one curve per agent.
    #[arg(long)]
    pub phase: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<graph::GraphError> for CliError {
    fn from(e: graph::GraphError) -> Self {
        CliError::input(format!("invalid graph: {e}"))
    }
}

impl From<sim::SimError> for CliError {
    fn from(e: sim::SimError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::NotConnected { count } => disconnected(count),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<AgreementError> for CliError {
    fn from(e: AgreementError) -> Self {
        match e {
            AgreementError::Spectral(s) => s.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Disconnected { components } => disconnected(components),
            DynamicsError::DegenerateGap { .. }
            | DynamicsError::PartitionMismatch { .. }
            | DynamicsError::TargetOutOfRange { .. } => CliError {
                code: EXIT_DESIGN,
                message: format!("design infeasible: {e}"),
            },
            other => CliError::input(format!("invalid dynamics: {other}")),
        }
    }
}

fn disconnected(components: usize) -> CliError {
    CliError {
        code: EXIT_DISCONNECTED,
        message: format!(
            "graph has {components} connected components; the Laplacian zero eigenvalue must be simple, \
             and agents in different components never reach agreement"
        ),
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            if code == 0 {
                let _ = write!(stdout, "{}", e.render());
            } else {
                let _ = write!(stderr, "{}", e.render());
            }
            return code;
        }
    };
    match run(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a, stdout),
        Command::Cluster(a) => cmd_cluster(a, stdout),
        Command::Design(a) => cmd_design(a, stdout, stderr),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::Plot(a) => cmd_plot(a, stdout),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Adjacency CSV if any data line contains a comma, otherwise an edge list.
pub fn load_graph(path: &Path) -> Result<WeightedGraph, CliError> {
    let text = read(path)?;
    let is_csv = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .any(|l| l.contains(','));
    let g = if is_csv {
        graph::parse_adjacency(&text)
    } else {
        graph::parse_edge_list(&text)
    };
    g.map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_dynamics(path: &Path) -> Result<AgentDynamics, CliError> {
    AgentDynamics::parse(&read(path)?)
        .map_err(|e| CliError::input(format!("{}: invalid dynamics: {e}", path.display())))
}

fn spectrum_of(g: &WeightedGraph) -> Result<SpectralData, CliError> {
    Ok(spectral::eigendecompose(&graph::laplacian(g))?)
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

/// Six significant digits, trailing zeros trimmed.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

fn flags_text(flags: &[bool]) -> String {
    flags
        .iter()
        .map(|&f| if f { "T" } else { "F" })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn cmd_spectrum(a: &SpectrumArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let s = spectrum_of(&g)?;
    let vals: Vec<String> = s
        .eigenvalues()
        .iter()
        .map(|&v| sig6(if v < s.zero_tol() { 0.0 } else { v }))
        .collect();
    writeln!(out, "{}", vals.join(", "))?;
    let comps = graph::connected_components(&g);
    writeln!(out, "connected: {}", comps.len() == 1)?;
    if comps.len() != 1 {
        writeln!(out, "components: {}", comps.len())?;
    }
    Ok(())
}

pub fn cmd_cluster(a: &ClusterArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let s = spectrum_of(&g)?;
    s.require_connected()?;
    if let Some(t) = a.tol {
        if t.is_nan() || t <= 0.0 {
            return Err(CliError::input("--tol must be positive"));
        }
    }
    let json = if a.scan {
        let partitions = agreement::scan_h(&s, a.tol)?;
        let report = ScanReport {
            n: s.n(),
            eigenvalues: s.eigenvalues().to_vec(),
            zero_tolerance: a.tol,
            method: Method::Theorem1,
            partitions,
        };
        serde_json::to_string_pretty(&report).expect("serializable")
    } else {
        let (h, stability) = match (&a.dynamics, a.h) {
            (Some(path), _) => {
                let d = load_dynamics(path)?;
                let part = dynamics::stability_partition(&d, &s);
                (part.h, part)
            }
            (None, Some(h)) => {
                if h < 2 || h > s.n() {
                    return Err(CliError::input(format!("--h must be in 2..={}", s.n())));
                }
                (Some(h), StabilityPartition::for_h(s.n(), h))
            }
            (None, None) => unreachable!("clap enforces a mode"),
        };
        let r = agreement::analyze_partition(&s, &stability, a.tol)?;
        let report = ClusterReport::from_agreement(&s, h, &r, stability.warnings.clone());
        serde_json::to_string_pretty(&report).expect("serializable")
    };
    write_output(a.out.as_deref(), &(json + "\n"), out)
}

pub fn cmd_design(a: &DesignArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let s = spectrum_of(&g)?;
    if a.omega.is_nan() || a.omega <= 0.0 {
        return Err(CliError::input("--omega must be positive"));
    }
    let d = dynamics::design_second_order(&s, a.h, a.omega)?;
    let part = dynamics::stability_partition(&d, &s);
    let mut diag = String::new();
    let _ = writeln!(diag, "realized h = {}", part.h.map_or("none".into(), |h| h.to_string()));
    let _ = writeln!(diag, "hurwitz flags: {}", flags_text(&part.flags));
    match &a.out {
        Some(p) => {
            write_output(Some(p), &d.render(), out)?;
            out.write_all(diag.as_bytes())?;
        }
        None => {
            out.write_all(d.render().as_bytes())?;
            err.write_all(diag.as_bytes())?;
        }
    }
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let s = spectrum_of(&g)?;
    let d = match (&a.dynamics, a.h) {
        (Some(p), _) => load_dynamics(p)?,
        (None, Some(h)) => dynamics::design_second_order(&s, h, a.omega)?,
        (None, None) => unreachable!("clap enforces a gain source"),
    };
    let cfg = SimConfig {
        record_stride: a.stride,
        ..SimConfig::new(a.t_end, a.dt, a.seed)
    };
    let tr = sim::simulate(&graph::laplacian(&g), &d, &cfg)?;
    let mut warnings = Vec::new();
    if tr.truncated() {
        let msg = format!(
            "state magnitude exceeded {:e} at t = {}; trajectory truncated",
            cfg.blowup_cap,
            tr.final_time()
        );
        writeln!(err, "warning: {msg}")?;
        warnings.push(msg);
    }
    write_output(a.out.as_deref(), &tr.to_csv(), out)?;

    let report_json = if tr.len() >= 10 {
        let q = sim::quasi_clusters(&tr, a.window)?;
        let part = dynamics::stability_partition(&d, &s);
        let report = ClusterReport::from_quasi(&s, part.h, &part.required_zero, &q, warnings);
        Some(serde_json::to_string_pretty(&report).expect("serializable") + "\n")
    } else {
        writeln!(
            err,
            "warning: only {} recorded points; quasi-cluster extraction needs at least 10",
            tr.len()
        )?;
        None
    };
    if let Some(json) = report_json {
        match (&a.report, &a.out) {
            (Some(p), _) => write_output(Some(p), &json, out)?,
            (None, Some(_)) => out.write_all(json.as_bytes())?,
            (None, None) => {}
        }
    }
    Ok(())
}

pub fn cmd_plot(a: &PlotArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let tr = Trajectory::from_csv(&read(&a.trajectory)?)?;
    let chart = if let Some(pair) = &a.pair {
        let (i, j) = (pair[0], pair[1]);
        match a.coord {
            Some(c) => Chart {
                title: format!("x_{i}{c}(t) - x_{j}{c}(t)"),
                x_label: "t".into(),
                y_label: format!("difference in coordinate {c}"),
                series: vec![Series::new(
                    format!("agents {i} & {j}"),
                    sim::difference_series(&tr, i, j, c)?,
                )],
            },
            None => Chart {
                title: format!("normalized distance between agents {i} and {j}"),
                x_label: "t".into(),
                y_label: "||x_i - x_j|| / (1 + max ||x_k||)".into(),
                series: vec![Series::new(
                    format!("agents {i} & {j}"),
                    sim::normalized_distance_series(&tr, i, j)?,
                )],
            },
        }
    } else {
        if tr.dim() < 2 {
            return Err(CliError::input("--phase needs agents with at least 2 coordinates"));
        }
        let series = (0..tr.agents())
            .map(|i| {
                let pts = (0..tr.len()).map(|k| (tr.agent(k, i)[0], tr.agent(k, i)[1])).collect();
                Series::new(format!("agent {}", i + 1), pts).with_start_marker()
            })
            .collect();
        Chart {
            title: format!("agent states, t in [{}, {}]", tr.times()[0], tr.final_time()),
            x_label: "coordinate 1".into(),
            y_label: "coordinate 2".into(),
            series,
        }
    };
    write_output(a.out.as_deref(), &chart.render(), out)
}

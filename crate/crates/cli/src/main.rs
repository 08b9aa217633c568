//! Command line front end: graph generation, the representation pipeline,
//! verification and SVG rendering.

mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use homothet::assemble::{represent, AssembleError, PipelineConfig};
use homothet::geometry::Scalar;
use homothet::planar::{
    gen_four_connected, gen_stacked, gen_triangulation, is_stacked, separating_triangles, validate,
    GraphInput, PlanarError, Triangulation,
};
use homothet::solver::{snap_contacts, solve_contacts, solve_stacked, Representation, SolverError};
use homothet::verify::{extract_drawing, full_report, ReportOptions, VerificationReport};

#[derive(Parser, Debug)]
#[command(
    name = "homothet",
    version,
    about = "Intersection representations of planar triangulations by homothetic triangles"
)]
struct Cli {
    /// JSON pipeline configuration; command line flags take precedence.
    #[arg(long, global = true, env = "HOMOTHET_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a graph file and summarize it.
    Validate {
        #[arg(long, short)]
        input: PathBuf,
    },
    /// Generate a triangulation.
    Gen {
        kind: GenKind,
        #[arg(long, short)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Contact representation of a single piece (stacked or without separating triangles).
    Solve {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Full pipeline followed by verification.
    Run {
        #[arg(long, short)]
        input: PathBuf,
        /// Representation output.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Verification report output.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
        #[command(flatten)]
        checks: Checks,
    },
    /// Check a representation against a graph.
    Verify {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        rep: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Boundary budget; defaults to the one stored in the representation.
        #[arg(long)]
        epsilon: Option<Scalar>,
        #[command(flatten)]
        checks: Checks,
    },
    /// Draw a representation as SVG.
    Render {
        #[arg(long, short)]
        rep: PathBuf,
        /// Graph file; adds the planar drawing on top.
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Decimal places of SVG coordinates.
        #[arg(long, default_value_t = 6)]
        precision: usize,
        /// Highlight pairwise overlaps and contact points.
        #[arg(long)]
        overlaps: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GenKind {
    Stacked,
    Random,
    FourConnected,
}

#[derive(Args, Debug, Default)]
struct Tuning {
    #[arg(long)]
    epsilon: Option<Scalar>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct Checks {
    /// Also scan every triple of triangles.
    #[arg(long)]
    audit: bool,
    /// Extract and check the planar drawing.
    #[arg(long)]
    drawing: bool,
    /// Write the extracted drawing to this file (implies --drawing).
    #[arg(long)]
    drawing_out: Option<PathBuf>,
    /// Skip the face gap check.
    #[arg(long)]
    no_faces: bool,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
enum Failure {
    Io(anyhow::Error),
    Input(anyhow::Error),
    Solver(anyhow::Error),
    Pipeline(anyhow::Error),
    Verification(Vec<&'static str>),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Pipeline(_) => 4,
            Failure::Verification(_) => 5,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Io(e) => write!(f, "i/o error: {e:#}"),
            Failure::Input(e) => write!(f, "invalid input: {e:#}"),
            Failure::Solver(e) => write!(f, "solver failed: {e:#}"),
            Failure::Pipeline(e) => write!(f, "pipeline failed: {e:#}"),
            Failure::Verification(which) => write!(f, "verification failed: {}", which.join(", ")),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let base = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { input } => {
            let t = read_graph(&input)?;
            let summary = GraphSummary::of(&t);
            emit(None, &summary)
        }
        Command::Gen {
            kind,
            n,
            seed,
            output,
        } => {
            let t = match kind {
                GenKind::Stacked => gen_stacked(n, seed),
                GenKind::Random => gen_triangulation(n, seed),
                GenKind::FourConnected => gen_four_connected(n, seed),
            }
            .map_err(|e| Failure::Input(e.into()))?;
            emit(output.as_deref(), &t.to_input())
        }
        Command::Solve {
            input,
            output,
            tuning,
        } => {
            let t = read_graph(&input)?;
            let config = tuning.apply(base)?;
            let rep = solve_piece(&t, &config)?;
            emit(output.as_deref(), &rep)
        }
        Command::Run {
            input,
            output,
            report,
            tuning,
            checks,
        } => {
            let t = read_graph(&input)?;
            let config = tuning.apply(base)?;
            let assembly = represent(&t, &config).map_err(pipeline_failure)?;
            let rep = &assembly.representation;
            emit(output.as_deref(), rep)?;
            for piece in &assembly.pieces {
                eprintln!(
                    "piece {}: {} vertices, {:?}, epsilon {}, {} rounds",
                    piece.node,
                    piece.vertices.len(),
                    piece.method,
                    piece.epsilon,
                    piece.rounds
                );
            }
            if !config.verify {
                return Ok(());
            }
            let checks = checks.merge(&config);
            let result = check(rep, &t, &config.epsilon, &checks)?;
            if let Some(path) = report.as_deref() {
                write_json(path, &result.report)?;
            }
            conclude(&result.report)
        }
        Command::Verify {
            input,
            rep,
            output,
            epsilon,
            checks,
        } => {
            let t = read_graph(&input)?;
            let rep: Representation = read_json(&rep)?;
            let epsilon = epsilon.unwrap_or_else(|| rep.epsilon.clone());
            let result = check(&rep, &t, &epsilon, &checks)?;
            finish(output.as_deref(), &result)
        }
        Command::Render {
            rep,
            input,
            output,
            precision,
            overlaps,
        } => {
            let rep: Representation = read_json(&rep)?;
            let drawing = match input {
                Some(path) => {
                    let t = read_graph(&path)?;
                    Some(
                        extract_drawing(&rep, &t)
                            .map_err(|e| Failure::Verification(vec![leak(e.to_string())]))?,
                    )
                }
                None => None,
            };
            let svg = render::svg(
                &rep,
                drawing.as_ref(),
                &render::Style {
                    precision,
                    overlaps,
                },
            );
            write_text(output.as_deref(), &svg)
        }
    }
}

fn leak(s: String) -> &'static str {
    Box::leak(s.into_boxed_str())
}

impl Tuning {
    fn apply(&self, mut config: PipelineConfig) -> Result<PipelineConfig, Failure> {
        if let Some(e) = &self.epsilon {
            config.epsilon = e.clone();
        }
        let s = &mut config.solver;
        s.delta = self.delta.unwrap_or(s.delta);
        s.margin = self.margin.unwrap_or(s.margin);
        s.seed = self.seed.unwrap_or(s.seed);
        s.max_iters = self.max_iters.unwrap_or(s.max_iters);
        s.restarts = self.restarts.unwrap_or(s.restarts);
        config.validate().map_err(|e| Failure::Input(e.into()))?;
        Ok(config)
    }
}

impl Checks {
    fn merge(self, config: &PipelineConfig) -> Checks {
        Checks {
            audit: self.audit || config.audit,
            drawing: self.drawing || config.drawing,
            drawing_out: self.drawing_out,
            no_faces: self.no_faces,
        }
    }
}

struct Checked {
    report: VerificationReport,
}

fn check(
    rep: &Representation,
    t: &Triangulation,
    epsilon: &Scalar,
    checks: &Checks,
) -> Result<Checked, Failure> {
    let opts = ReportOptions {
        audit: checks.audit,
        faces: !checks.no_faces,
        drawing: checks.drawing || checks.drawing_out.is_some(),
    };
    let report = full_report(rep, t, epsilon, opts);
    if let Some(path) = &checks.drawing_out {
        if report.graph.ok && report.simple.ok {
            if let Ok(d) = extract_drawing(rep, t) {
                emit(Some(path), &d)?;
            }
        }
    }
    Ok(Checked { report })
}

fn finish(path: Option<&Path>, result: &Checked) -> Result<(), Failure> {
    emit(path, &result.report)?;
    conclude(&result.report)
}

fn conclude(report: &VerificationReport) -> Result<(), Failure> {
    if report.passed {
        eprintln!("verification passed");
        Ok(())
    } else {
        Err(Failure::Verification(report.failures()))
    }
}

fn solve_piece(t: &Triangulation, config: &PipelineConfig) -> Result<Representation, Failure> {
    let solver = |e: SolverError| Failure::Solver(e.into());
    if is_stacked(t) {
        return solve_stacked(t, config.outer.clone(), config.epsilon.clone()).map_err(solver);
    }
    if !separating_triangles(t).is_empty() {
        return Err(Failure::Input(anyhow::anyhow!(
            "graph has separating triangles; use `run`"
        )));
    }
    let float = solve_contacts(
        t,
        config.outer.clone(),
        config.epsilon.clone(),
        &config.solver,
    )
    .map_err(solver)?;
    eprintln!(
        "restarts {}, iterations {}, max edge residual {:e}",
        float.stats.restarts_used, float.stats.iterations, float.stats.max_edge_residual
    );
    snap_contacts(t, &float).map_err(solver)
}

fn pipeline_failure(e: AssembleError) -> Failure {
    match e {
        AssembleError::Config(_) => Failure::Input(e.into()),
        AssembleError::Solver { .. } => Failure::Solver(e.into()),
        _ => Failure::Pipeline(e.into()),
    }
}

#[derive(Serialize)]
struct GraphSummary {
    n: usize,
    edges: usize,
    outer: [usize; 3],
    stacked: bool,
    separating_triangles: Vec<[usize; 3]>,
}

impl GraphSummary {
    fn of(t: &Triangulation) -> Self {
        GraphSummary {
            n: t.n(),
            edges: t.edge_count(),
            outer: t.outer(),
            stacked: is_stacked(t),
            separating_triangles: separating_triangles(t),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        Some(p) => read_json(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn read_graph(path: &Path) -> Result<Triangulation, Failure> {
    let input: GraphInput = read_json(path)?;
    validate(&input).map_err(|e: PlanarError| {
        Failure::Input(anyhow::Error::new(e).context(path.display().to_string()))
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Io)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Input)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.into()))?;
    write_text(Some(path), &(text + "\n"))
}

/// JSON to the given file, or to stdout.
fn emit<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.into()))?;
            write_text(None, &(text + "\n"))
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(Failure::Io),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing stdout")
            .map_err(Failure::Io),
    }
}

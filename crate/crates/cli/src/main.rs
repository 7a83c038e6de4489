use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;
use vtm_core::io::{
    parse_context, parse_taxonomy, parse_world, serialize_report, serialize_taxonomy, IoError,
};
use vtm_core::{
    aggregate_collective, align, build_context_taxonomy, export_dot, propagated, prune, sd_of,
    AlignmentError, AlignmentVariant, CollectiveOp, ContextError, HolderError, PropagationError,
    RelevanceStrategy, Taxonomy, DEFAULT_TOL,
};

#[derive(Parser)]
#[command(
    name = "vtm",
    version,
    about = "Value taxonomy tools: propagate, contextualise, prune, align"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a taxonomy document against the structural rules.
    Validate { taxonomy: PathBuf },
    /// Fill in missing importances so every parent is the mean of its children.
    Propagate {
        taxonomy: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Build the taxonomy for a context from its property importances.
    Context {
        taxonomy: PathBuf,
        #[arg(long)]
        context: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Drop branches that lead to no relevant property node.
    Prune {
        taxonomy: PathBuf,
        /// nonzero, threshold:<t> or kmeans2
        #[arg(long, default_value = "nonzero")]
        strategy: RelevanceStrategy,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Score how well a world state aligns with the taxonomy.
    Align {
        taxonomy: PathBuf,
        #[arg(long)]
        world: PathBuf,
        /// simple or path-weighted
        #[arg(long, default_value = "simple")]
        variant: AlignmentVariant,
        /// Also write a per-property breakdown as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Combine structurally identical taxonomies into a collective one.
    Aggregate {
        #[arg(required = true, num_args = 1..)]
        taxonomies: Vec<PathBuf>,
        /// mean, median or min
        #[arg(long, default_value = "mean")]
        op: CollectiveOp,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Export GraphViz DOT.
    Dot {
        taxonomy: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Satisfaction degree of one property node.
    Sd {
        taxonomy: PathBuf,
        #[arg(long)]
        node: String,
        #[arg(long)]
        world: PathBuf,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Document { path: PathBuf, source: IoError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Propagation(PropagationError),
    #[error("{0}")]
    Evaluation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Document { .. } | CliError::Invalid(_) => 2,
            CliError::Propagation(PropagationError::Incoherent { .. }) => 3,
            CliError::Propagation(PropagationError::Infeasible { .. }) => 4,
            CliError::Evaluation(_) => 5,
        }
    }
}

impl From<PropagationError> for CliError {
    fn from(e: PropagationError) -> Self {
        CliError::Propagation(e)
    }
}

impl From<ContextError> for CliError {
    fn from(e: ContextError) -> Self {
        match e {
            ContextError::Propagation(p) => CliError::Propagation(p),
            ContextError::Grounding(g) => CliError::Evaluation(g.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<AlignmentError> for CliError {
    fn from(e: AlignmentError) -> Self {
        match e {
            AlignmentError::Grounding { .. } => CliError::Evaluation(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<HolderError> for CliError {
    fn from(e: HolderError) -> Self {
        match e {
            HolderError::Propagation(p) => CliError::Propagation(p),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load<T>(path: &Path, parse: fn(&str) -> Result<T, IoError>) -> Result<T, CliError> {
    parse(&read(path)?).map_err(|source| CliError::Document {
        path: path.to_owned(),
        source,
    })
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol.is_finite() && tol >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--tol must be a non-negative number, got {tol}"
        )))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { taxonomy } => {
            let t = load(&taxonomy, parse_taxonomy)?;
            println!("ok: {} nodes, {} edges", t.len(), t.edge_count());
        }
        Command::Propagate {
            taxonomy,
            tol,
            output,
        } => {
            check_tol(tol)?;
            let t = load(&taxonomy, parse_taxonomy)?;
            emit(
                output.as_deref(),
                &serialize_taxonomy(&propagated(&t, tol)?),
            )?;
        }
        Command::Context {
            taxonomy,
            context,
            tol,
            output,
        } => {
            check_tol(tol)?;
            let t = load(&taxonomy, parse_taxonomy)?;
            let ctx = load(&context, parse_context)?;
            emit(
                output.as_deref(),
                &serialize_taxonomy(&build_context_taxonomy(&t, &ctx, tol)?),
            )?;
        }
        Command::Prune {
            taxonomy,
            strategy,
            output,
        } => {
            let t = load(&taxonomy, parse_taxonomy)?;
            emit(
                output.as_deref(),
                &serialize_taxonomy(&prune(&t, strategy)?),
            )?;
        }
        Command::Align {
            taxonomy,
            world,
            variant,
            report,
        } => {
            let t = load(&taxonomy, parse_taxonomy)?;
            let w = load(&world, parse_world)?;
            let r = align(&t, &w, variant)?;
            if let Some(path) = report {
                emit(Some(&path), &serialize_report(&r))?;
            }
            println!("{:.6}", r.score);
        }
        Command::Aggregate {
            taxonomies,
            op,
            tol,
            output,
        } => {
            check_tol(tol)?;
            let members = taxonomies
                .iter()
                .map(|p| load(p, parse_taxonomy))
                .collect::<Result<Vec<Taxonomy>, _>>()?;
            emit(
                output.as_deref(),
                &serialize_taxonomy(&aggregate_collective(&members, op, tol)?),
            )?;
        }
        Command::Dot { taxonomy, output } => {
            let t = load(&taxonomy, parse_taxonomy)?;
            emit(output.as_deref(), &export_dot(&t))?;
        }
        Command::Sd {
            taxonomy,
            node,
            world,
        } => {
            let t = load(&taxonomy, parse_taxonomy)?;
            let w = load(&world, parse_world)?;
            println!("{:.6}", sd_of(&t, &node, &w)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

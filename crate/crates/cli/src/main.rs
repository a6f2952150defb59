use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xcity_cli::{
    cmd_ingest, cmd_phase1, cmd_phase2, cmd_render, cmd_validate, CliError, GroupSpec, Outcome, Overrides,
    Project,
};
use xcity_core::osm::DEFAULT_SIMPLIFY_TOL;

/// Road-asset layout synthesis: ingest, place, connect, validate, render.
#[derive(Parser)]
#[command(name = "xcity", version)]
struct Cli {
    /// Print diagnostics and warnings in the summary.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Solve {
    /// Project config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the solver seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the wall-clock budget, in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
}

impl Solve {
    fn project(&self) -> Result<Project, CliError> {
        let o = Overrides {
            seed: self.seed,
            time_budget: self.time_budget,
            threads: None,
        }
        .with_env_threads()?;
        Project::load(&self.config, o)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Cut road assets out of an .osm file.
    Ingest {
        osm: PathBuf,
        /// `NAME[:VALUE]=WAY,WAY,...`, one per asset.
        #[arg(long = "group")]
        groups: Vec<GroupSpec>,
        /// Output directory for the asset files.
        #[arg(long)]
        out: PathBuf,
        /// Down-sampling tolerance, in meters.
        #[arg(long, default_value_t = DEFAULT_SIMPLIFY_TOL)]
        simplify: f64,
    },
    /// Select and place the most valuable feasible asset subset.
    Phase1(Solve),
    /// Rearrange a phase-1 placement for direct connectivity.
    Phase2 {
        #[command(flatten)]
        solve: Solve,
        /// Result file written by `phase1`.
        #[arg(long)]
        phase1: PathBuf,
    },
    /// Check a placement or result file against the config's space.
    Validate {
        placement: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a phase-1 or phase-2 result as SVG.
    Render {
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit(outcome: Outcome, out: Option<&Path>, verbose: bool) -> Result<i32, CliError> {
    match out {
        Some(p) => std::fs::write(p, &outcome.json).map_err(|e| CliError::io(p, e))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(outcome.json.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    let summary = if verbose {
        outcome.summary.as_str()
    } else {
        outcome.summary.lines().next().unwrap_or("")
    };
    if !summary.is_empty() {
        eprintln!("{summary}");
    }
    Ok(outcome.code)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Ingest {
            osm,
            groups,
            out,
            simplify,
        } => {
            let o = cmd_ingest(&osm, &groups, &out, simplify)?;
            emit(o, None, cli.verbose)
        }
        Command::Phase1(s) => emit(cmd_phase1(&s.project()?)?, s.out.as_deref(), cli.verbose),
        Command::Phase2 { solve, phase1 } => {
            emit(cmd_phase2(&solve.project()?, &phase1)?, solve.out.as_deref(), cli.verbose)
        }
        Command::Validate { placement, config, out } => {
            let project = Project::load(&config, Overrides::default())?;
            emit(cmd_validate(&project, &placement)?, out.as_deref(), cli.verbose)
        }
        Command::Render { result, out } => {
            let svg = cmd_render(&result)?;
            std::fs::write(&out, svg).map_err(|e| CliError::io(&out, e))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

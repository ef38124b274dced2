use clap::{Parser, Subcommand};
use photonlab_cli::config::{CliResult, EngineKind, RunConfig};
use photonlab_cli::presets;
use photonlab_cli::run::{parse_axes, parse_axis, parse_fix, Command};
use photonlab_cli::{execute, CliError, Context};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "photonlab", version, about = "Photon-count statistics of two sources on several detectors")]
struct Cli {
    /// JSON run configuration; the Poissonian preset when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// meanfield, phase, radial, fock or auto
    #[arg(long, global = true)]
    engine: Option<String>,
    /// Permit runs the engines would otherwise refuse as too large
    #[arg(long, global = true)]
    allow_expensive: bool,
    #[command(subcommand)]
    cmd: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Joint distribution over all (or the listed) detectors
    Joint {
        /// e.g. n1,n2
        #[arg(long)]
        axes: Option<String>,
    },
    /// Single-detector marginal
    Marginal {
        #[arg(long, default_value = "n1")]
        axis: String,
    },
    /// Conditional distribution given pinned counts
    Conditional {
        /// e.g. n1=106; repeatable
        #[arg(long, required = true)]
        fix: Vec<String>,
        #[arg(long)]
        axes: Option<String>,
    },
    /// Mean-field trajectory over the relative phase
    Trajectory {
        #[arg(long, default_value_t = 512)]
        points: usize,
    },
    /// Draw count vectors
    Sample {
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Compare thinned sources with scaled detectors
    ScalingCheck {
        #[arg(long)]
        q: f64,
    },
    /// Regenerate a figure preset
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=7))]
        id: u8,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => presets::poissonian(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let engine = cli.engine.as_deref().map(EngineKind::parse).transpose()?;
    let ctx = Context {
        out,
        seed: cli.seed.or(config.seed).unwrap_or(0),
        engine,
        allow_expensive: cli.allow_expensive || config.engine.allow_expensive,
    };
    let cmd = match cli.cmd {
        Sub::Joint { axes } => Command::Joint {
            axes: axes.as_deref().map(parse_axes).transpose()?,
        },
        Sub::Marginal { axis } => Command::Marginal { axis: parse_axis(&axis)? },
        Sub::Conditional { fix, axes } => Command::Conditional {
            fix: fix.iter().map(|f| parse_fix(f)).collect::<CliResult<_>>()?,
            axes: axes.as_deref().map(parse_axes).transpose()?,
        },
        Sub::Trajectory { points } => Command::Trajectory { points },
        Sub::Sample { count } => Command::Sample { count },
        Sub::ScalingCheck { q } => Command::ScalingCheck { q },
        Sub::Figure { id } => Command::Figure { id },
    };
    let side = execute(&config, &cmd, &ctx)?;
    for w in side.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("PHOTONLAB_THREADS").ok().and_then(|v| v.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code: CliError = e;
            ExitCode::from(code.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tablescene::geometry::UpAxisHint;
use tablescene_cli::demo::write_demo_bundle;
use tablescene_cli::stages::{swap, MetricChoice, Run, RunOptions, SwapOptions};
use tablescene_cli::{CliError, CliResult, EXIT_OK};
use tablescene_services::Mode;

/// Tabletop layout recovery: rotation, scale, placement and evaluation.
///
/// Exit codes: 0 ok, 2 invalid input, 3 replay fixture missing, 4 stage failure.
#[derive(Parser)]
#[command(name = "tablescene", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Instance bundle directory (contains scene.json).
    #[arg(long)]
    bundle: PathBuf,
    /// Run directory for outputs and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// TOML config; omitted sections keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for per-instance stages. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "replay")]
    mode: Mode,
    /// Also write per-instance comparison images.
    #[arg(long)]
    debug_renders: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Mse,
    Feature,
}

impl From<MetricArg> for MetricChoice {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Mse => MetricChoice::Mse,
            MetricArg::Feature => MetricChoice::Feature,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rotate every mesh upright and normalize its pivot.
    Canonicalize(Common),
    /// Estimate yaw per object.
    Dro {
        #[command(flatten)]
        common: Common,
        /// Only this instance.
        #[arg(long)]
        instance: Option<String>,
    },
    /// Anchor, scale and placement from the top-view boxes.
    Tsa(Common),
    /// Build the scene, report collisions, export layout and GLB.
    Assemble(Common),
    /// Collision metrics, optionally the camera sweep against the reference.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sweep: bool,
        #[arg(long, value_enum, default_value = "mse")]
        metric: MetricArg,
    },
    /// canonicalize, dro, tsa, assemble (and evaluate with --evaluate).
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        evaluate: bool,
        #[arg(long, value_enum, default_value = "mse")]
        metric: MetricArg,
    },
    /// Replace one instance's model in an assembled run.
    Swap {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        instance: String,
        /// Replacement mesh (.obj or .glb).
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        label: Option<String>,
        /// e.g. "+Y up, -Z front"; defaults to +Z up.
        #[arg(long)]
        up_axis: Option<UpAxisHint>,
        /// Keep footprint area and height but adopt the new model's aspect.
        #[arg(long)]
        refit: bool,
    },
    /// List fixtures a replay run would need but the bundle lacks.
    Preflight(Common),
    /// Write the bundled demo scene.
    Demo {
        #[arg(long)]
        out: PathBuf,
    },
}

fn open(c: &Common) -> CliResult<Run> {
    if c.jobs == 0 {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(c.jobs)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    Run::open(&RunOptions {
        bundle: c.bundle.clone(),
        out: c.out.clone(),
        config: c.config.clone(),
        jobs: c.jobs,
        mode: c.mode,
        debug_renders: c.debug_renders,
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Canonicalize(c) => open(&c)?.canonicalize(),
        Command::Dro { common, instance } => open(&common)?.dro(instance.as_deref()),
        Command::Tsa(c) => open(&c)?.tsa(),
        Command::Assemble(c) => open(&c)?.assemble(),
        Command::Evaluate { common, sweep, metric } => open(&common)?.evaluate(sweep, metric.into()),
        Command::Pipeline { common, evaluate, metric } => open(&common)?.pipeline(evaluate, metric.into()),
        Command::Swap { out, instance, mesh, label, up_axis, refit } => swap(&SwapOptions {
            out,
            instance,
            mesh,
            label,
            up_axis,
            refit,
        }),
        Command::Preflight(c) => open(&c)?.preflight(),
        Command::Demo { out } => write_demo_bundle(&out).map(|p| println!("{}", p.display())),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match run(Cli::parse()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

mod commands;
mod render;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use holonomy_core::{Scene, Tolerances};

pub const DEFAULT_SEED: u64 = 61320;

#[derive(Parser, Debug)]
#[command(
    name = "holonomy",
    version,
    about = "Transport, blowup and holonomy experiments on punctured torus bundles"
)]
struct Cli {
    /// Scene JSON file.
    #[arg(long, global = true, default_value = "scenes/fig8_5_1.json")]
    scene: PathBuf,
    /// Seed for every randomized step. HOLONOMY_SEED takes precedence.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tolerances: ToleranceArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ToleranceArgs {
    /// Absolute tolerance for event comparisons.
    #[arg(long, global = true)]
    event_tol: Option<f64>,
    /// Value beyond which a section counts as blown up.
    #[arg(long, global = true)]
    blowup_threshold: Option<f64>,
    /// Event budget for one sweep.
    #[arg(long, global = true)]
    max_events: Option<u64>,
}

impl ToleranceArgs {
    fn apply(&self, mut t: Tolerances) -> Tolerances {
        if let Some(v) = self.event_tol {
            t.event = v;
        }
        if let Some(v) = self.blowup_threshold {
            t.blowup_threshold = v;
        }
        if let Some(v) = self.max_events {
            t.max_events = v;
        }
        t
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate the scene and its surgery slopes.
    Check,
    /// Event log of one section as CSV.
    Trace {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Ray base as `east,north`; sampled from the seed when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        base: Option<Vec<f64>>,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        #[arg(long, value_enum, default_value_t = HeadingArg::East)]
        heading: HeadingArg,
    },
    /// Blowup times on sampled rays as CSV.
    Tmax {
        /// Start values; all must be positive.
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        x: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        rays: usize,
    },
    /// Transport around the meridian of an orbit.
    Monodromy {
        #[arg(long, default_value_t = 0)]
        orbit: usize,
        #[arg(long, default_value_t = 0.05)]
        radius: f64,
        #[arg(long, default_value_t = 21)]
        samples: usize,
        #[arg(long, default_value_t = 10.0)]
        range: f64,
    },
    /// Residuals of the built-in relation words and the order witness.
    Relations {
        #[arg(long, default_value_t = 21)]
        samples: usize,
    },
    /// Density constants and counting statistics.
    Ergodic {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        placements: usize,
    },
    /// Checks the blowup-time bounds on random rays.
    Bounds {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 20)]
        rays: usize,
        #[arg(long = "s", value_delimiter = ',', default_value = "1,10,100")]
        s_grid: Vec<f64>,
    },
    /// Quotient of the truncated binary tree under a gluing.
    Tree {
        #[arg(long, value_enum, ignore_case = true, default_value_t = GluingArg::A)]
        gluing: GluingArg,
        #[arg(long, default_value_t = 8)]
        depth: u32,
        #[arg(long, default_value_t = 2)]
        resolution: u32,
        /// Random canonical pairs for the ancestor criterion (gluing B).
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        /// Also write the class DAG in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// SVG figures.
    Render {
        #[arg(long, value_enum)]
        figure: Figure,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        /// Ray base as `east,north` for the blowup and stepmap figures.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        base: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5)]
        slope: f64,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        #[arg(long, value_enum, ignore_case = true, default_value_t = GluingArg::B)]
        gluing: GluingArg,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadingArg {
    East,
    West,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GluingArg {
    A,
    B,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Blowup,
    Stepmap,
    Tree,
}

/// Exit status of a command, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Warning,
    Failure,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Warning => 2,
            Status::Failure => 1,
        }
    }
}

pub struct Outcome {
    pub text: String,
    pub status: Status,
}

fn seed(flag: u64) -> Result<u64, String> {
    match std::env::var("HOLONOMY_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("HOLONOMY_SEED is not an integer: {v:?}")),
        Err(_) => Ok(flag),
    }
}

fn load_scene(cli: &Cli) -> Result<Scene, String> {
    let text =
        fs::read_to_string(&cli.scene).map_err(|e| format!("{}: {e}", cli.scene.display()))?;
    let scene = Scene::from_json(&text).map_err(|e| format!("{}: {e}", cli.scene.display()))?;
    let tol = cli.tolerances.apply(scene.tolerances);
    Ok(scene.with_tolerances(tol))
}

fn run(cli: &Cli) -> Result<Outcome, String> {
    let seed = seed(cli.seed)?;
    if let Command::Trace { base: Some(b), .. } | Command::Render { base: Some(b), .. } =
        &cli.command
    {
        if b.len() != 2 {
            return Err(format!(
                "--base takes two values east,north, got {}",
                b.len()
            ));
        }
    }
    if let Command::Tree {
        gluing,
        depth,
        resolution,
        pairs,
        dot,
    } = &cli.command
    {
        return commands::tree(*gluing, *depth, *resolution, *pairs, dot.as_deref(), seed);
    }
    if let Command::Render {
        figure: Figure::Tree,
        depth,
        gluing,
        ..
    } = &cli.command
    {
        return render::tree_figure(*gluing, *depth);
    }
    let scene = load_scene(cli)?;
    match &cli.command {
        Command::Check => Ok(commands::check(&scene)),
        Command::Trace {
            x,
            base,
            horizon,
            heading,
        } => commands::trace(&scene, *x, base.as_deref(), *horizon, *heading, seed),
        Command::Tmax { x, rays } => commands::tmax(&scene, x, *rays, seed),
        Command::Monodromy {
            orbit,
            radius,
            samples,
            range,
        } => commands::monodromy(&scene, *orbit, *radius, *samples, *range),
        Command::Relations { samples } => commands::relations(&scene, *samples),
        Command::Ergodic {
            samples,
            placements,
        } => commands::ergodic(&scene, *samples, *placements, seed),
        Command::Bounds {
            samples,
            rays,
            s_grid,
        } => commands::bounds(&scene, *samples, *rays, s_grid, seed),
        Command::Render {
            figure,
            horizon,
            base,
            slope,
            ..
        } => match figure {
            Figure::Blowup => render::blowup_figure(&scene, *horizon, base.as_deref(), seed),
            Figure::Stepmap => render::stepmap_figure(&scene, base.as_deref(), *slope),
            Figure::Tree => unreachable!("handled before loading the scene"),
        },
        Command::Tree { .. } => unreachable!("handled before loading the scene"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are errors, not warnings.
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Status::Failure.code()),
            };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &outcome.text),
                None => std::io::stdout().write_all(outcome.text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(Status::Failure.code());
            }
            ExitCode::from(outcome.status.code())
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(Status::Failure.code())
        }
    }
}

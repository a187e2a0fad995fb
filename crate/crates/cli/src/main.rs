//! `vortex-nav`: geodesics, shooting, conjugate scans, wavefronts, cut locus
//! and synthesis for time-minimal navigation around a point vortex.

mod commands;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::{CliError, CliResult};
use zermelo_vortex::VortexProblem;

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  2  configuration error (bad flags, unreadable problem file, invalid instance)
  3  numeric failure (no convergence, failed integration, no solution found)
  4  precondition refused (e.g. synthesis with a strong drift at x0)

Environment:
  VZ_THREADS  number of worker threads (default: all cores)

Every run writes CSV and JSON files to --out and prints a JSON summary on
stdout. Errors are printed as JSON {\"error\": {kind, message, exit_code}}.";

#[derive(Parser, Debug)]
#[command(name = "vortex-nav", version, about = "Time-minimal navigation around a point vortex", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate geodesics from x0 for given initial directions.
    Geodesic(GeodesicArgs),
    /// Classify initial directions by fate and type; optionally tabulate the Reeb function.
    Classify(ClassifyArgs),
    /// Solve the shooting problem x(T) = xf for one target or a batch.
    Shoot(ShootArgs),
    /// Scan a uniform grid of directions for conjugate points.
    ConjugateScan(ConjugateArgs),
    /// Wavefronts (end points of all geodesics of a given duration).
    Wavefront(WavefrontArgs),
    /// Continue a splitting curve; without --seed, the cut locus.
    Splitting(SplittingArgs),
    /// Cut locus, injectivity radius, spheres and ball types.
    Synthesis(SynthesisArgs),
    /// Plot columns of a CSV file as SVG polylines.
    Render(RenderArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    /// JSON problem file: {"mu": .., "x0": [x1, x2], "tol": {..}}.
    #[arg(long, value_name = "FILE")]
    pub problem: Option<PathBuf>,
    /// Vortex circulation; overrides the problem file.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Initial point; overrides the problem file.
    #[arg(long, num_args = 2, value_names = ["X1", "X2"], allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// Relative integration tolerance.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute integration tolerance.
    #[arg(long)]
    pub atol: Option<f64>,
}

impl ProblemArgs {
    pub fn load(&self) -> CliResult<VortexProblem> {
        let mut p = match &self.problem {
            Some(path) => {
                let s = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read problem file {}: {e}", path.display())))?;
                Some(VortexProblem::from_json(&s)?)
            }
            None => None,
        };
        match (&mut p, self.mu, &self.x0) {
            (Some(p), mu, x0) => {
                if let Some(mu) = mu {
                    p.mu = mu;
                }
                if let Some(x0) = x0 {
                    p.x0 = [x0[0], x0[1]];
                }
            }
            (None, Some(mu), Some(x0)) => {
                p = Some(VortexProblem { mu, x0: [x0[0], x0[1]], tol: Default::default() });
            }
            _ => return Err(CliError::Config("give --problem FILE or both --mu and --x0".into())),
        }
        let mut p = p.unwrap();
        if let Some(r) = self.rtol {
            p.tol.rtol = r;
        }
        if let Some(a) = self.atol {
            p.tol.atol = a;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
    /// Fixed SVG viewport in problem units.
    #[arg(long, num_args = 4, value_names = ["XMIN", "XMAX", "YMIN", "YMAX"], allow_negative_numbers = true)]
    pub viewport: Option<Vec<f64>>,
}

impl OutArgs {
    pub fn viewport(&self) -> Option<[f64; 4]> {
        self.viewport.as_ref().map(|v| [v[0], v[1], v[2], v[3]])
    }
}

#[derive(Args, Debug)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Initial directions (angle of the initial control, radians).
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub alpha: Vec<f64>,
    /// Add N uniformly spaced directions.
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub fan: usize,
    /// Add the separating direction.
    #[arg(long)]
    pub separatrix: bool,
    /// Add the abnormal directions (strong drift only).
    #[arg(long)]
    pub abnormal: bool,
    /// Duration of each geodesic.
    #[arg(long)]
    pub t: f64,
    /// Samples per geodesic and time direction.
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
    /// Also integrate backward in time (dashed in the SVG).
    #[arg(long)]
    pub backward: bool,
    /// Repeat each geodesic rotated by multiples of 2 pi / K about the vortex.
    #[arg(long, default_value_t = 1, value_name = "K")]
    pub rotations: usize,
    /// Draw the circles of radius 2|mu| and 2|mu|/sqrt(3).
    #[arg(long)]
    pub reeb: bool,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Directions to classify.
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub alpha: Vec<f64>,
    /// Classify N uniformly spaced directions (default 360 when no --alpha).
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
    /// Tabulate -ln f(r) on (0, 2|mu|) and the leaves of the Reeb foliation.
    #[arg(long)]
    pub reeb: bool,
    /// Number of Reeb leaves.
    #[arg(long, default_value_t = 12)]
    pub leaves: usize,
}

#[derive(Args, Debug)]
pub struct ShootArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Target point.
    #[arg(long, num_args = 2, value_names = ["X1", "X2"], allow_negative_numbers = true, conflicts_with = "batch")]
    pub xf: Option<Vec<f64>>,
    /// JSON list of targets, each [x1, x2] or {"xf": [x1, x2]}.
    #[arg(long, value_name = "FILE")]
    pub batch: Option<PathBuf>,
    /// Number of multi-start seeds.
    #[arg(long, default_value_t = 16)]
    pub n_starts: usize,
    /// Samples of the optimal trajectory written to CSV.
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct ConjugateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Number of directions on the uniform grid.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Final time of each test.
    #[arg(long, default_value_t = 50.0)]
    pub tmax: f64,
    /// Samples of sigma_min per direction.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Write every sigma_min(t) curve to conjugate_curves.csv.
    #[arg(long)]
    pub curves: bool,
}

#[derive(Args, Debug)]
pub struct WavefrontArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Times of the wavefronts.
    #[arg(long, num_args = 1.., required = true)]
    pub t: Vec<f64>,
    /// Number of uniformly spaced directions before refinement.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Longest chord between neighbouring points after refinement.
    #[arg(long, default_value_t = 0.05)]
    pub max_chord: f64,
    /// Maximal bisection depth of the refinement.
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
    /// Skip the Newton polish of self-intersections.
    #[arg(long)]
    pub no_polish: bool,
    /// Draw the circles of radius 2|mu| and 2|mu|/sqrt(3).
    #[arg(long)]
    pub reeb: bool,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Inner and outer radius of the region where the splitting point may move.
    #[arg(long, num_args = 2, value_names = ["RIN", "ROUT"], default_values_t = [0.005, 100.0])]
    pub annulus: Vec<f64>,
    /// Largest distance travelled by the splitting point per step.
    #[arg(long, default_value_t = 0.02)]
    pub dx_max: f64,
    /// Stop the continuation above this time.
    #[arg(long)]
    pub t_cap: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SplittingArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Start from the splitting point (t, alpha1, x1, x2, alpha2) instead of the cut locus search.
    #[arg(long, num_args = 5, value_names = ["T", "A1", "X1", "X2", "A2"], allow_negative_numbers = true)]
    pub seed: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct SynthesisArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Times of the spheres and balls.
    #[arg(long, num_args = 1.., default_values_t = [1.5, 2.8, 2.9, 3.5])]
    pub t: Vec<f64>,
    /// Hide the part of the cut locus closer than this to the vortex in the SVG.
    #[arg(long, default_value_t = 0.0)]
    pub cut_clip: f64,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub out: OutArgs,
    /// CSV file with a header row.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Column for the horizontal axis.
    #[arg(long, default_value = "x1")]
    pub x: String,
    /// Column for the vertical axis.
    #[arg(long, default_value = "x2")]
    pub y: String,
    /// Column whose changes start a new polyline.
    #[arg(long)]
    pub group: Option<String>,
    /// Output file name inside --out.
    #[arg(long, default_value = "render.svg")]
    pub output: String,
    /// Independent axis scales (graph) instead of an equal-aspect plane.
    #[arg(long)]
    pub graph: bool,
    /// Mark the vortex at the origin.
    #[arg(long)]
    pub vortex: bool,
    /// Overlay the circles of radius 2|mu| and 2|mu|/sqrt(3).
    #[arg(long, value_name = "MU", allow_negative_numbers = true)]
    pub reeb_mu: Option<f64>,
}

fn set_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("VZ_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("VZ_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Config(e.render().to_string().trim().to_string());
            println!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match set_threads().and_then(|_| commands::run(cli.command)) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("json values serialize"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            println!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

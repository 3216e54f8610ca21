use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tfheat::config::KvDoc;

/// Numerical laboratory for the time-fractional semilinear heat equation
/// `∂_t^α u - Δu = u^p` on ℝ^N (N = 1, 2, 3) with measure-like data.
///
/// Every subcommand reads an optional config file (`key = value` lines
/// under `[section]` headers), applies the flags on top of it, writes its
/// outputs and a run manifest under the output directory, and exits with
/// 0 on success, 1 on an invalid input (the message names the key) and 2
/// on a numerical failure (the message names a diagnostics file).
/// A manifest passed back with `--config` reproduces the run.
#[derive(Debug, Parser)]
#[command(name = "tfheat", version, allow_negative_numbers = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Config file or run manifest. Flags override its values; unknown
    /// sections and keys are errors.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Sets any config key, as `section.key=value` (top-level keys as
    /// `key=value`). Applied after all other flags. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,

    /// Directory receiving every output file and the run manifest
    /// (created if missing).
    #[arg(long, global = true, env = "TFHEAT_OUTPUT_DIR", default_value = "tfheat-out", value_name = "DIR")]
    pub output_dir: PathBuf,

    /// Worker threads for sweeps and calibration; integer >= 1.
    /// Default: the number of logical processors.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluates a special function and prints its value.
    #[command(allow_negative_numbers = true)]
    Specfun(SpecfunArgs),
    /// Solves the equation on [0, T] and reports the outcome.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Evaluates the necessary and sufficient solvability conditions.
    #[command(allow_negative_numbers = true)]
    Check(CheckArgs),
    /// Brackets the lifespan by bisection in ln T.
    #[command(allow_negative_numbers = true)]
    Lifespan(LifespanArgs),
    /// Runs a parameter sweep (a predefined experiment or a custom spec)
    /// and fits its scaling law.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Regenerates the calibrated constants file.
    #[command(allow_negative_numbers = true)]
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct SpecfunArgs {
    /// Function: `ml` (E_{α,β}(z)), `mainardi` (h_α(θ)), `moment`
    /// (∫θ^δ h_α), `gamma` (Γ(x)), `beta` (B(x, y)) or `r-constants`
    /// (E_{α,1}(-1/2), α E_{α,α}(-1/2)). Config key `[specfun] function`.
    pub function: Option<String>,
    /// Order α; dimensionless, (0, 1] (`mainardi` needs α < 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Second Mittag-Leffler parameter β; dimensionless, > 0.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Real argument z of `ml`; dimensionless, any finite value.
    #[arg(long)]
    pub z: Option<f64>,
    /// Argument θ of `mainardi`; dimensionless, >= 0.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Moment order δ of `moment`; dimensionless, > -1.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Argument x of `gamma` and `beta`; dimensionless, not a pole
    /// (`beta` needs x > 0).
    #[arg(long)]
    pub x: Option<f64>,
    /// Second argument y of `beta`; dimensionless, > 0.
    #[arg(long)]
    pub y: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProblemFlags {
    /// Space dimension N; integer in {1, 2, 3}. Key `[problem] N`.
    #[arg(long = "N", value_name = "N")]
    pub dim: Option<usize>,
    /// Nonlinearity exponent p; dimensionless, > 1. Key `[problem] p`.
    #[arg(long)]
    pub p: Option<f64>,
    /// Order α of the Caputo derivative; dimensionless, (0, 1].
    /// Key `[problem] alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DatumFlags {
    /// Datum family: dirac_approx, log_singular, power_law, decaying,
    /// constant or grid_density. Key `[datum] family`.
    #[arg(long)]
    pub family: Option<String>,
    /// dirac_approx: inverse box volume j (box radius (j ω_N)^{-1/N});
    /// length^{-N}, > 0.
    #[arg(long)]
    pub j: Option<f64>,
    /// Amplitude κ of dirac_approx (total mass), log_singular, power_law
    /// and decaying; > 0.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// log_singular: exponent ε of the log factor; dimensionless,
    /// 0 < ε < N/2.
    #[arg(long)]
    pub eps: Option<f64>,
    /// log_singular: shift s of the log bracket (ln(1/|x|) + s);
    /// dimensionless, >= 0. Default 0.
    #[arg(long)]
    pub shift: Option<f64>,
    /// power_law: exponent p of |x|^{-2/(p-1)}; dimensionless, > 1.
    /// Key `[datum] p`.
    #[arg(long = "datum-p", value_name = "P")]
    pub datum_p: Option<f64>,
    /// decaying: decay rate A of (1 + |x|/scale)^{-A}; dimensionless, > 0.
    #[arg(long = "A", value_name = "A")]
    pub a: Option<f64>,
    /// decaying: length scale of the decay; length, > 0. Default 1.
    #[arg(long)]
    pub scale: Option<f64>,
    /// constant: value c; > 0.
    #[arg(long)]
    pub c: Option<f64>,
    /// grid_density: file of whitespace-separated cell values (row-major,
    /// last axis fastest), relative to the config file. Key `[datum] file`.
    #[arg(long = "datum-file", value_name = "PATH")]
    pub file: Option<PathBuf>,
    /// grid_density: half width of the sampled box; length, > 0.
    /// Key `[datum] half_width`.
    #[arg(long = "datum-half-width", value_name = "L")]
    pub datum_half_width: Option<f64>,
    /// grid_density: points per axis; even integer >= 8.
    /// Key `[datum] points`.
    #[arg(long = "datum-points", value_name = "N")]
    pub datum_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GridFlags {
    /// Half width L of the periodic box [-L, L)^N; length, > 0.
    /// Key `[grid] half_width`. Default 8.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Grid points per axis; even integer >= 8. Key `[grid] points`.
    /// Default 256.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    /// Time steps on the horizon; integer >= 16. Default 512.
    #[arg(long)]
    pub time_steps: Option<usize>,
    /// Relative tolerance of the implicit Picard solve; > 0. Default 1e-10.
    #[arg(long)]
    pub picard_tol: Option<f64>,
    /// Picard sweeps per step; integer >= 1. Default 200.
    #[arg(long)]
    pub picard_max_iters: Option<usize>,
    /// Sup-norm counted as blow-up; same unit as u, finite and > 0.
    /// Default 1e8.
    #[arg(long)]
    pub blowup_threshold: Option<f64>,
    /// Quadrature of the memory integral: product_rectangle or
    /// product_trapezoid. Default product_rectangle.
    #[arg(long)]
    pub kernel_rule: Option<String>,
    /// Stored field snapshots besides the first and last; integer >= 0.
    /// Default 16.
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// Confirm blow-up with a half-step re-solve: true or false.
    /// Default true.
    #[arg(long, value_name = "BOOL")]
    pub refine_blowup: Option<bool>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    #[command(flatten)]
    pub datum: DatumFlags,
    #[command(flatten)]
    pub grid: GridFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Horizon T; time, > 0. Key `[run] T`.
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    #[command(flatten)]
    pub datum: DatumFlags,
    /// Horizon T; time, > 0. Key `[check] T`.
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<f64>,
    /// Integrability exponent r of the p > p_F sufficient condition;
    /// dimensionless, 1 < r < N(p-1)/2. Default: the interval midpoint.
    #[arg(long)]
    pub r: Option<f64>,
    /// Smallness constant c* of the sufficient conditions; > 0.
    /// Default 0.25.
    #[arg(long)]
    pub c_star: Option<f64>,
    /// Radii in the ball sweep; integer >= 8. Default 64.
    #[arg(long)]
    pub sigma_points: Option<usize>,
    /// Calibrated constants file. Default: the shipped constants.
    #[arg(long, value_name = "PATH")]
    pub constants: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LifespanArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    #[command(flatten)]
    pub datum: DatumFlags,
    #[command(flatten)]
    pub grid: GridFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Solves spent on the bracket; integer >= 8. Default 16.
    #[arg(long)]
    pub budget: Option<usize>,
    /// First probed ln T; dimensionless, finite. Default 0.
    #[arg(long)]
    pub ln_start: Option<f64>,
    /// First expansion step in ln T (doubles until bracketed);
    /// dimensionless, > 0. Default ln 4.
    #[arg(long)]
    pub ln_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Experiment: dirac_lifespan, psi_j_threshold, feps_collapse,
    /// global_collapse, decaying_lifespan, or custom (a full spec in
    /// --config). Key `experiment`.
    #[arg(long)]
    pub experiment: Option<String>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Calibration suite file. Default: the built-in suite.
    /// Key `[calibrate] suite`.
    #[arg(long, value_name = "PATH")]
    pub suite: Option<PathBuf>,
    /// Constants file whose recorded suite hash freezes the suite.
    /// Default: the shipped constants. Key `[calibrate] reference`.
    #[arg(long, value_name = "PATH")]
    pub reference: Option<PathBuf>,
    /// Version written to the new file; integer >= 1. Default: the
    /// reference version plus one.
    #[arg(long)]
    pub version: Option<u32>,
    /// Date written to the new file, YYYY-MM-DD. Default: today (UTC).
    #[arg(long)]
    pub date: Option<String>,
    /// Run even though the suite hash differs from the reference.
    #[arg(long)]
    pub force: bool,
}

fn put<T: ToString>(doc: &mut KvDoc, section: &str, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        doc.set(section, key, v.to_string());
    }
}

fn put_path(doc: &mut KvDoc, section: &str, key: &str, v: &Option<PathBuf>) {
    if let Some(v) = v {
        doc.set(section, key, v.display());
    }
}

impl ProblemFlags {
    pub fn apply(&self, doc: &mut KvDoc) {
        put(doc, "problem", "N", &self.dim);
        put(doc, "problem", "p", &self.p);
        put(doc, "problem", "alpha", &self.alpha);
    }
}

impl DatumFlags {
    pub fn apply(&self, doc: &mut KvDoc) {
        let s = "datum";
        put(doc, s, "family", &self.family);
        put(doc, s, "j", &self.j);
        put(doc, s, "kappa", &self.kappa);
        put(doc, s, "eps", &self.eps);
        put(doc, s, "shift", &self.shift);
        put(doc, s, "p", &self.datum_p);
        put(doc, s, "A", &self.a);
        put(doc, s, "scale", &self.scale);
        put(doc, s, "c", &self.c);
        put_path(doc, s, "file", &self.file);
        put(doc, s, "half_width", &self.datum_half_width);
        put(doc, s, "points", &self.datum_points);
    }
}

impl GridFlags {
    pub fn apply(&self, doc: &mut KvDoc) {
        put(doc, "grid", "half_width", &self.half_width);
        put(doc, "grid", "points", &self.points);
    }
}

impl SolverFlags {
    pub fn apply(&self, doc: &mut KvDoc) {
        let s = "solver";
        put(doc, s, "time_steps", &self.time_steps);
        put(doc, s, "picard_tol", &self.picard_tol);
        put(doc, s, "picard_max_iters", &self.picard_max_iters);
        put(doc, s, "blowup_threshold", &self.blowup_threshold);
        put(doc, s, "kernel_rule", &self.kernel_rule);
        put(doc, s, "snapshots", &self.snapshots);
        put(doc, s, "refine_blowup", &self.refine_blowup);
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Specfun(_) => "specfun",
            Self::Solve(_) => "solve",
            Self::Check(_) => "check",
            Self::Lifespan(_) => "lifespan",
            Self::Sweep(_) => "sweep",
            Self::Calibrate(_) => "calibrate",
        }
    }

    /// The flags of this invocation as config entries.
    pub fn flag_doc(&self) -> KvDoc {
        let mut doc = KvDoc::new();
        match self {
            Self::Specfun(a) => {
                let s = "specfun";
                put(&mut doc, s, "function", &a.function);
                put(&mut doc, s, "alpha", &a.alpha);
                put(&mut doc, s, "beta", &a.beta);
                put(&mut doc, s, "z", &a.z);
                put(&mut doc, s, "theta", &a.theta);
                put(&mut doc, s, "delta", &a.delta);
                put(&mut doc, s, "x", &a.x);
                put(&mut doc, s, "y", &a.y);
            }
            Self::Solve(a) => {
                a.problem.apply(&mut doc);
                a.datum.apply(&mut doc);
                a.grid.apply(&mut doc);
                a.solver.apply(&mut doc);
                put(&mut doc, "run", "T", &a.horizon);
            }
            Self::Check(a) => {
                a.problem.apply(&mut doc);
                a.datum.apply(&mut doc);
                put(&mut doc, "check", "T", &a.horizon);
                put(&mut doc, "check", "r", &a.r);
                put(&mut doc, "check", "c_star", &a.c_star);
                put(&mut doc, "check", "sigma_points", &a.sigma_points);
                put_path(&mut doc, "check", "constants", &a.constants);
            }
            Self::Lifespan(a) => {
                a.problem.apply(&mut doc);
                a.datum.apply(&mut doc);
                a.grid.apply(&mut doc);
                a.solver.apply(&mut doc);
                put(&mut doc, "search", "budget", &a.budget);
                put(&mut doc, "search", "ln_start", &a.ln_start);
                put(&mut doc, "search", "ln_step", &a.ln_step);
            }
            Self::Sweep(a) => put(&mut doc, "", "experiment", &a.experiment),
            Self::Calibrate(a) => {
                put_path(&mut doc, "calibrate", "suite", &a.suite);
                put_path(&mut doc, "calibrate", "reference", &a.reference);
                put(&mut doc, "calibrate", "version", &a.version);
                put(&mut doc, "calibrate", "date", &a.date);
                if a.force {
                    doc.set("calibrate", "force", "true");
                }
            }
        }
        doc
    }
}

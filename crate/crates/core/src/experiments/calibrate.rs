use rayon::prelude::*;
use serde::Serialize;

use crate::config::sections::{check_keys, get_usize, read_grid, read_solver, write_datum, write_grid, write_solver};
use crate::config::KvDoc;
use crate::criteria::{
    analytic_necessary_floor, necessary_numbers, rescale_problem, sufficient_condition_sweep, CalibratedConstants,
    CalibrationEntry, Verdict,
};
use crate::datum::{InitialDatum, ProblemParams};
use crate::error::{Error, Result};
use crate::propagator::{Field, Grid};
use crate::solver::{picard_solve, SolveStatus, SolverConfig};

const DEFAULT_SUITE: &str = "\
N = 1
p = 2, 3, 5
alpha = 0.3, 0.5, 0.7, 0.9
T = 0.01, 1, 100
amplitudes = 0.1, 1, 10
c_star = 0.25
sigma_points = 64
[grid]
half_width = 8
points = 256
[solver]
time_steps = 256
refine_blowup = false
";

const TOP_KEYS: &[&str] = &["N", "p", "alpha", "T", "amplitudes", "c_star", "sigma_points"];

/// The calibration suite: a datum catalog crossed with `(p, α, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSuite {
    pub dim: usize,
    pub ps: Vec<f64>,
    pub alphas: Vec<f64>,
    pub horizons: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub c_star: f64,
    pub sigma_points: usize,
    pub grid: Grid,
    pub solver: SolverConfig,
}

fn list(doc: &KvDoc, key: &str) -> Result<Vec<f64>> {
    let v = doc
        .get("", key)
        .ok_or_else(|| Error::Config(format!("calibration suite is missing `{key}`")))?;
    v.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("calibration suite `{key}`: `{}` is not a number", t.trim())))
        })
        .collect()
}

fn render_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// One solved member of the suite.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationCase {
    pub params: ProblemParams,
    pub horizon: f64,
    pub family: &'static str,
    pub amplitude: f64,
    pub necessary_general: f64,
    /// Radius at which `necessary_general` peaks.
    pub worst_sigma: f64,
    pub necessary_critical: Option<f64>,
    pub sufficient_satisfied: bool,
    /// `None` when the datum cannot be solved on a grid (non-integrable,
    /// or its rescaling leaves the grid's resolution).
    pub status: Option<SolveStatus>,
    pub diagnostic: Option<String>,
}

impl Default for CalibrationSuite {
    fn default() -> Self {
        Self::parse(DEFAULT_SUITE).expect("default calibration suite is well formed")
    }
}

impl CalibrationSuite {
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        for (s, _) in doc.sections() {
            if !["", "grid", "solver"].contains(&s) {
                return Err(Error::Config(format!("unknown section [{s}] in calibration suite")));
            }
        }
        check_keys(&doc, "", TOP_KEYS)?;
        let dim = get_usize(&doc, "", "N")?.ok_or_else(|| Error::Config("calibration suite is missing `N`".into()))?;
        let suite = Self {
            dim,
            ps: list(&doc, "p")?,
            alphas: list(&doc, "alpha")?,
            horizons: list(&doc, "T")?,
            amplitudes: list(&doc, "amplitudes")?,
            c_star: doc.get_f64("", "c_star")?.unwrap_or(crate::criteria::DEFAULT_C_STAR),
            sigma_points: get_usize(&doc, "", "sigma_points")?.unwrap_or(crate::criteria::DEFAULT_SIGMA_POINTS),
            grid: read_grid(&doc, "grid", dim, (8.0, 256))?,
            solver: read_solver(&doc, "solver", SolverConfig::default())?,
        };
        for &p in &suite.ps {
            for &a in &suite.alphas {
                ProblemParams::new(dim, p, a).map_err(|e| Error::Config(format!("calibration suite: {e}")))?;
            }
        }
        if suite.horizons.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Config("calibration suite horizons must be > 0".into()));
        }
        if suite.amplitudes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::Config("calibration suite amplitudes must be > 0".into()));
        }
        Ok(suite)
    }

    /// Unit-amplitude catalog for exponent `p`.
    pub fn catalog(&self, p: f64) -> Vec<InitialDatum> {
        let n = self.dim as f64;
        let bump = Field::from_fn(self.grid, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 0.5).exp())
            .expect("bump on a valid grid");
        vec![
            InitialDatum::dirac(64.0, 1.0),
            InitialDatum::log_singular(n / 4.0, 1.0),
            InitialDatum::power_law(1.0, p),
            InitialDatum::decaying(1.0, n / 2.0),
            InitialDatum::decaying(1.0, 2.0 * n),
            InitialDatum::Constant { c: 1.0 },
            InitialDatum::GridDensity { field: bump },
        ]
    }

    /// Canonical text: the suite settings and the rendered catalog. Its hash
    /// freezes the suite.
    pub fn canonical_text(&self) -> String {
        let mut doc = KvDoc::new();
        doc.set("", "N", self.dim);
        doc.set("", "p", render_list(&self.ps));
        doc.set("", "alpha", render_list(&self.alphas));
        doc.set("", "T", render_list(&self.horizons));
        doc.set("", "amplitudes", render_list(&self.amplitudes));
        doc.set("", "c_star", self.c_star);
        doc.set("", "sigma_points", self.sigma_points);
        write_grid(&mut doc, "grid", &self.grid);
        write_solver(&mut doc, "solver", &self.solver);
        let mut text = doc.render();
        for &p in &self.ps {
            for (i, d) in self.catalog(p).iter().enumerate() {
                let mut cat = KvDoc::new();
                let sec = format!("catalog p={p} {i}");
                match d {
                    InitialDatum::GridDensity { .. } => cat.set(&sec, "family", "grid_density gaussian exp(-|x|^2/0.5)"),
                    _ => write_datum(&mut cat, &sec, d).expect("parametric"),
                }
                text.push('\n');
                text.push_str(&cat.render());
            }
        }
        text
    }

    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn run_case(suite: &CalibrationSuite, params: ProblemParams, t: f64, d: InitialDatum, amp: f64) -> CalibrationCase {
    let family = d.family();
    let mut case = CalibrationCase {
        params,
        horizon: t,
        family,
        amplitude: amp,
        necessary_general: f64::NAN,
        worst_sigma: f64::NAN,
        necessary_critical: None,
        sufficient_satisfied: false,
        status: None,
        diagnostic: None,
    };
    match necessary_numbers(&d, &params, t, suite.sigma_points) {
        Ok(n) => {
            case.necessary_general = n.general.0;
            case.worst_sigma = n.general.1;
            case.necessary_critical = n.critical.map(|c| c.0);
        }
        Err(e) => {
            case.diagnostic = Some(e.to_string());
            return case;
        }
    }
    case.sufficient_satisfied =
        sufficient_condition_sweep(&d, &params, t, None, suite.c_star, suite.sigma_points)
            .map(|r| r.verdict == Verdict::Satisfied)
            .unwrap_or(false);
    match rescale_problem(&d, &params, t).and_then(|(s, h)| picard_solve(&s, &params, h, &suite.grid, &suite.solver)) {
        Ok(out) => case.status = Some(out.status),
        Err(e) => case.diagnostic = Some(e.to_string()),
    }
    case
}

impl CalibrationCase {
    /// Whether the solve sees the scale that drives the condition number:
    /// the worst radius, in units of the horizon's diffusion length
    /// `T^{α/2}`, spans at least one cell of `grid`.
    pub fn is_resolved(&self, grid: &Grid) -> bool {
        let len = (self.params.alpha / 2.0 * self.horizon.ln()).exp();
        self.worst_sigma / len >= grid.spacing()
    }

    /// A converged solve that resolves its worst ball: evidence that the
    /// condition number is compatible with solvability.
    pub fn certifies_solvable(&self, grid: &Grid) -> bool {
        self.status == Some(SolveStatus::Converged) && self.is_resolved(grid)
    }
}

/// Evaluates the condition numbers and solves every member of the suite.
pub fn calibration_cases(suite: &CalibrationSuite, workers: usize) -> Result<Vec<CalibrationCase>> {
    let mut jobs = Vec::new();
    for &p in &suite.ps {
        let catalog = suite.catalog(p);
        for &alpha in &suite.alphas {
            let params = ProblemParams::new(suite.dim, p, alpha)?;
            for &t in &suite.horizons {
                for d in &catalog {
                    for &amp in &suite.amplitudes {
                        jobs.push((params, t, d.scaled(amp), amp));
                    }
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Sweep(format!("cannot start the worker pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.into_par_iter()
            .map(|(params, t, d, amp)| run_case(suite, params, t, d, amp))
            .collect()
    }))
}

/// Constants from solved cases: for each `(N, p, α)`, the largest condition
/// number among converged solves that resolve their worst ball, raised to
/// the analytic floor.
pub fn constants_from_cases(
    suite: &CalibrationSuite,
    cases: &[CalibrationCase],
    version: u32,
    date: &str,
) -> Result<CalibratedConstants> {
    let mut entries = Vec::new();
    for &p in &suite.ps {
        for &alpha in &suite.alphas {
            let params = ProblemParams::new(suite.dim, p, alpha)?;
            let (floor, floor_crit) = analytic_necessary_floor(&params, suite.c_star)?;
            let mut g1 = floor;
            let mut g1c = floor_crit;
            for c in cases.iter().filter(|c| c.params == params && c.certifies_solvable(&suite.grid)) {
                if c.necessary_general.is_finite() {
                    g1 = g1.max(c.necessary_general);
                }
                if let (Some(v), Some(g)) = (c.necessary_critical, g1c.as_mut()) {
                    if v.is_finite() {
                        *g = g.max(v);
                    }
                }
            }
            entries.push(CalibrationEntry {
                dim: suite.dim,
                p,
                alpha,
                gamma1: g1,
                gamma1_critical: g1c,
            });
        }
    }
    Ok(CalibratedConstants {
        version,
        date: date.to_string(),
        suite_hash: suite.hash(),
        c_star: suite.c_star,
        entries,
    })
}

/// Runs the suite and derives the constants file.
pub fn calibrate(suite: &CalibrationSuite, workers: usize, version: u32, date: &str) -> Result<CalibratedConstants> {
    let cases = calibration_cases(suite, workers)?;
    constants_from_cases(suite, &cases, version, date)
}

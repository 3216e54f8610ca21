//! Mild solutions by time marching of the Duhamel identity, blow-up
//! detection, lifespan bisection, and two scalar oracles.
//!
//! The Duhamel history is a discrete convolution in time. It is accumulated
//! in Fourier space, where every lag contributes one radial multiplier per
//! shell `Σ k_a²`.

mod lifespan;
mod ode;

use num_complex::Complex64;
use serde::Serialize;

pub use lifespan::{lifespan_estimate, lifespan_estimate_in, monotone_bracket, LifespanEstimate, LogBracket, Probe};
pub use ode::{caputo_ode_solve, ode_minorant_lifespan, MinorantInputs};

use crate::datum::{sample_on_grid, InitialDatum, ProblemParams};
use crate::error::{Error, Result};
use crate::propagator::{Field, Grid, Spectral};
use crate::specfun::{rgamma, MittagLefflerTable, TableKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelRule {
    /// Exact kernel weights against the integrand frozen on each step;
    /// explicit, first order.
    ProductRectangle,
    /// Exact kernel weights against the piecewise-linear interpolant;
    /// implicit in the newest value, solved pointwise by Picard iteration.
    ProductTrapezoid,
}

impl KernelRule {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ProductRectangle => "product_rectangle",
            Self::ProductTrapezoid => "product_trapezoid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "product_rectangle" | "rectangle" => Ok(Self::ProductRectangle),
            "product_trapezoid" | "trapezoid" => Ok(Self::ProductTrapezoid),
            _ => Err(Error::Config(format!(
                "unknown kernel rule `{s}` (expected product_rectangle or product_trapezoid)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Time steps on the requested horizon (lifespan probes always run on
    /// the unit horizon).
    pub time_steps: usize,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Sup-norm that counts as blow-up.
    pub blowup_threshold: f64,
    pub kernel_rule: KernelRule,
    /// Number of stored snapshots besides the initial and final ones.
    pub snapshots: usize,
    /// Confirm a threshold crossing with a second solve at half the step.
    pub refine_blowup: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_steps: 512,
            picard_tol: 1e-10,
            picard_max_iters: 200,
            blowup_threshold: 1e8,
            kernel_rule: KernelRule::ProductRectangle,
            snapshots: 16,
            refine_blowup: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.time_steps < 16 {
            return Err(Error::Config(format!("time_steps must be >= 16, got {}", self.time_steps)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::Config(format!("picard_tol must be > 0, got {}", self.picard_tol)));
        }
        if self.picard_max_iters == 0 {
            return Err(Error::Config("picard_max_iters must be >= 1".into()));
        }
        if !(self.blowup_threshold > 0.0 && self.blowup_threshold.is_finite()) {
            return Err(Error::Config(format!(
                "blowup_threshold must be finite and > 0, got {}",
                self.blowup_threshold
            )));
        }
        Ok(())
    }

}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    Blowup,
    Inconclusive,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Blowup => "blowup",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub sup: f64,
    /// Absent for the scalar solvers.
    pub field: Option<Field>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub time_steps: usize,
    /// Picard sweeps summed over all steps.
    pub iterations: usize,
    /// Largest final Picard residual of any step.
    pub max_residual: f64,
    pub max_sup: f64,
    /// Largest negative undershoot clipped before the power, relative to
    /// the sup at that step.
    pub max_clip: f64,
    /// `(t_k, sup u(t_k))` at every step.
    pub sup_history: Vec<(f64, f64)>,
    /// Interpolated threshold crossing time of this solve and of the
    /// half-step confirmation solve.
    pub crossing_time: Option<f64>,
    pub refined_crossing_time: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub trajectory: Vec<Snapshot>,
    pub blowup_bracket: Option<(f64, f64)>,
    pub diagnostics: SolveDiagnostics,
}

/// JSON-friendly summary of an outcome without the fields.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeSummary<'a> {
    pub status: SolveStatus,
    pub blowup_bracket: Option<(f64, f64)>,
    pub final_time: f64,
    pub final_sup: f64,
    pub time_steps: usize,
    pub iterations: usize,
    pub max_residual: f64,
    pub max_sup: f64,
    pub max_clip: f64,
    pub crossing_time: Option<f64>,
    pub refined_crossing_time: Option<f64>,
    pub message: Option<&'a str>,
}

impl SolveOutcome {
    pub fn final_time(&self) -> f64 {
        self.diagnostics.sup_history.last().map_or(0.0, |x| x.0)
    }

    pub fn summary(&self) -> OutcomeSummary<'_> {
        let last = self.diagnostics.sup_history.last().copied().unwrap_or((0.0, 0.0));
        OutcomeSummary {
            status: self.status,
            blowup_bracket: self.blowup_bracket,
            final_time: last.0,
            final_sup: last.1,
            time_steps: self.diagnostics.time_steps,
            iterations: self.diagnostics.iterations,
            max_residual: self.diagnostics.max_residual,
            max_sup: self.diagnostics.max_sup,
            max_clip: self.diagnostics.max_clip,
            crossing_time: self.diagnostics.crossing_time,
            refined_crossing_time: self.diagnostics.refined_crossing_time,
            message: self.diagnostics.message.as_deref(),
        }
    }

    /// Linear interpolation of the sup-norm history at `t`.
    pub fn sup_at(&self, t: f64) -> Option<f64> {
        let h = &self.diagnostics.sup_history;
        let i = h.partition_point(|x| x.0 < t);
        if i == h.len() {
            return None;
        }
        if i == 0 || h[i].0 == t {
            return Some(h[i].1);
        }
        let (a, b) = (h[i - 1], h[i]);
        Some(a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0))
    }
}

/// `t` where `ln sup` crosses `ln threshold` between two steps.
pub(crate) fn crossing(t0: f64, s0: f64, t1: f64, s1: f64, threshold: f64) -> f64 {
    if !(s0 > 0.0) || !s1.is_finite() || s1 <= s0 {
        return t1;
    }
    let w = (threshold.ln() - s0.ln()) / (s1.ln() - s0.ln());
    t0 + (t1 - t0) * w.clamp(0.0, 1.0)
}

/// Bracket from two crossing times at steps `dt` and `dt/2`: the
/// first-order extrapolation plus or minus their gap and one coarse step.
pub(crate) fn refined_bracket(coarse: f64, fine: f64, dt: f64) -> (f64, f64) {
    let ext = 2.0 * fine - coarse;
    let half = (coarse - fine).abs() + dt;
    ((ext - half).max(0.0), ext + half)
}

/// Raw result of one march.
struct March {
    status: SolveStatus,
    snapshots: Vec<Snapshot>,
    diag: SolveDiagnostics,
}

/// `(t_M - t_k)`-independent kernel weights of the two rules.
struct Weights {
    /// Rectangle: weight of lag `l` (index `l`, `l ≥ 1`).
    rect: Vec<f64>,
    /// Trapezoid: `B_l` and `A_l` for `l ≥ 1`.
    trap_b: Vec<f64>,
    trap_a: Vec<f64>,
}

fn weights(alpha: f64, dt: f64, m: usize) -> Weights {
    let dta = dt.powf(alpha);
    let pw = |l: usize, e: f64| (l as f64).powf(e);
    let mut rect = vec![0.0; m + 1];
    let mut trap_a = vec![0.0; m + 2];
    let mut trap_b = vec![0.0; m + 2];
    for l in 1..=m + 1 {
        let d0 = pw(l, alpha) - pw(l - 1, alpha);
        let d1 = pw(l, alpha + 1.0) - pw(l - 1, alpha + 1.0);
        if l <= m {
            rect[l] = dta * d0 / alpha;
        }
        trap_a[l] = dta * (d1 / (alpha + 1.0) - (l - 1) as f64 * d0 / alpha);
        trap_b[l] = dta * (l as f64 * d0 / alpha - d1 / (alpha + 1.0));
    }
    Weights { rect, trap_b, trap_a }
}

/// `E_{α,α}(-t^α |ξ|²)` on every shell.
fn kernel_shells(sp: &Spectral, table: &MittagLefflerTable, alpha: f64, t: f64) -> Vec<f64> {
    let unit = sp.grid().xi_sq_unit();
    let ta = t.powf(alpha);
    sp.shells().iter().map(|&k| table.eval(ta * k as f64 * unit)).collect()
}

fn spread<'a>(sp: &'a Spectral, shells: &'a [f64]) -> impl Fn(usize) -> f64 + 'a {
    let of = sp.shell_of();
    move |i| shells[of[i] as usize]
}

fn clip_power(values: &[f64], p: f64) -> (Vec<f64>, f64) {
    let mut undershoot: f64 = 0.0;
    let mut sup: f64 = 0.0;
    let out = values
        .iter()
        .map(|&v| {
            sup = sup.max(v);
            if v < 0.0 {
                undershoot = undershoot.max(-v);
                0.0
            } else {
                v.powf(p)
            }
        })
        .collect();
    let rel = if sup > 0.0 { undershoot / sup } else { 0.0 };
    (out, rel)
}

fn march(mu: &Field, params: &ProblemParams, horizon: f64, m: usize, cfg: &SolverConfig) -> Result<March> {
    let grid = *mu.grid();
    let sp = Spectral::for_grid(&grid);
    let alpha = params.alpha;
    let p = params.p;
    let dt = horizon / m as f64;
    let relax = MittagLefflerTable::shared(alpha, TableKind::Relaxation)?;
    let kern = MittagLefflerTable::shared(alpha, TableKind::Kernel)?;
    let w = weights(alpha, dt, m);
    let nmodes = grid.len();
    let unit = grid.xi_sq_unit();
    let shells = sp.shells();
    let mu_hat = sp.forward(mu.values());

    // Lag-l multipliers per shell. Rectangle: midpoint lag (l - 1/2)Δt.
    // Trapezoid: node lag lΔt.
    let lag_table: Vec<Vec<f64>> = (0..=m)
        .map(|l| match cfg.kernel_rule {
            KernelRule::ProductRectangle if l >= 1 => kernel_shells(&sp, &kern, alpha, (l as f64 - 0.5) * dt),
            KernelRule::ProductTrapezoid if l >= 1 => kernel_shells(&sp, &kern, alpha, l as f64 * dt),
            _ => Vec::new(),
        })
        .collect();

    let apply_relax = |t: f64| -> Vec<Complex64> {
        let ta = t.powf(alpha);
        let ms: Vec<f64> = shells.iter().map(|&k| relax.eval(ta * k as f64 * unit)).collect();
        let f = spread(&sp, &ms);
        mu_hat.iter().enumerate().map(|(i, c)| c * f(i)).collect()
    };

    let snap_every = if cfg.snapshots == 0 { usize::MAX } else { (m / cfg.snapshots).max(1) };
    let mut snapshots = vec![Snapshot {
        t: 0.0,
        sup: mu.sup(),
        field: Some(mu.clone()),
    }];
    let mut diag = SolveDiagnostics {
        time_steps: m,
        max_sup: mu.sup(),
        sup_history: vec![(0.0, mu.sup())],
        ..Default::default()
    };

    // Powered iterates in Fourier space; index j holds f(t_j) (rectangle:
    // index 0 holds f at the first midpoint).
    let mut f_hat: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let first = match cfg.kernel_rule {
        KernelRule::ProductRectangle => sp.inverse(apply_relax(0.5 * dt)),
        KernelRule::ProductTrapezoid => mu.values().to_vec(),
    };
    let (f0, clip0) = clip_power(&first, p);
    diag.max_clip = clip0;
    f_hat.push(sp.forward(&f0));

    let current_weight = w.trap_a[1] * rgamma(alpha);
    let mut status = SolveStatus::Converged;
    let mut acc = vec![Complex64::default(); nmodes];
    let (mut prev_t, mut prev_sup) = (0.0, mu.sup());
    for k in 1..=m {
        let t = k as f64 * dt;
        acc.iter_mut().for_each(|c| *c = Complex64::default());
        match cfg.kernel_rule {
            KernelRule::ProductRectangle => {
                for l in 1..=k {
                    let wl = w.rect[l];
                    let g = spread(&sp, &lag_table[l]);
                    for (i, (a, f)) in acc.iter_mut().zip(&f_hat[k - l]).enumerate() {
                        *a += f * (wl * g(i));
                    }
                }
            }
            KernelRule::ProductTrapezoid => {
                for l in 1..=k {
                    let wl = if l == k { w.trap_b[l] } else { w.trap_b[l] + w.trap_a[l + 1] };
                    let g = spread(&sp, &lag_table[l]);
                    for (i, (a, f)) in acc.iter_mut().zip(&f_hat[k - l]).enumerate() {
                        *a += f * (wl * g(i));
                    }
                }
            }
        }
        let lin = apply_relax(t);
        for (a, l) in acc.iter_mut().zip(&lin) {
            *a += l;
        }
        let mut u = sp.inverse(std::mem::take(&mut acc));
        acc = vec![Complex64::default(); nmodes];

        if cfg.kernel_rule == KernelRule::ProductTrapezoid {
            // u = R + c·max(u,0)^p pointwise, monotone from R.
            let rhs = u.clone();
            let mut converged = false;
            let mut residual = f64::INFINITY;
            for _ in 0..cfg.picard_max_iters {
                diag.iterations += 1;
                residual = 0.0;
                let mut exceeded = false;
                for (ui, &ri) in u.iter_mut().zip(&rhs) {
                    let next = ri + current_weight * ui.max(0.0).powf(p);
                    residual = f64::max(residual, (next - *ui).abs() / ui.abs().max(1.0));
                    *ui = next;
                    exceeded |= !(next <= cfg.blowup_threshold);
                }
                if exceeded {
                    converged = true;
                    break;
                }
                if residual <= cfg.picard_tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                diag.max_residual = diag.max_residual.max(residual);
                diag.message = Some(format!(
                    "pointwise Picard iteration did not reach {} in {} sweeps at t={t} (residual {residual:.3e})",
                    cfg.picard_tol, cfg.picard_max_iters
                ));
                status = SolveStatus::Inconclusive;
                break;
            }
            if residual.is_finite() {
                diag.max_residual = diag.max_residual.max(residual);
            }
        } else {
            diag.iterations += 1;
        }

        let sup = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if sup.is_nan() || u.iter().any(|v| v.is_nan()) {
            diag.message = Some(format!("non-finite values at t={t}"));
            status = SolveStatus::Inconclusive;
            break;
        }
        diag.sup_history.push((t, sup));
        if !(sup <= cfg.blowup_threshold) {
            diag.max_sup = diag.max_sup.max(sup);
            diag.crossing_time = Some(crossing(prev_t, prev_sup, t, sup, cfg.blowup_threshold));
            status = SolveStatus::Blowup;
            let field = u.iter().all(|v| v.is_finite()).then(|| Field::from_raw(grid, u.clone()));
            snapshots.push(Snapshot { t, sup, field });
            break;
        }
        diag.max_sup = diag.max_sup.max(sup);
        let (fk, clip) = clip_power(&u, p);
        diag.max_clip = diag.max_clip.max(clip);
        if k < m {
            f_hat.push(sp.forward(&fk));
        }
        if k % snap_every == 0 || k == m {
            snapshots.push(Snapshot {
                t,
                sup,
                field: Some(Field::from_raw(grid, u)),
            });
        }
        prev_t = t;
        prev_sup = sup;
    }
    Ok(March {
        status,
        snapshots,
        diag,
    })
}

fn check_threshold(mu: &Field, cfg: &SolverConfig) -> Result<()> {
    if !(cfg.blowup_threshold > 10.0 * mu.sup()) {
        return Err(Error::Config(format!(
            "blowup_threshold {} must exceed 10x the sampled initial sup {}",
            cfg.blowup_threshold,
            mu.sup()
        )));
    }
    Ok(())
}

/// Mild solution of `∂_t^α u - Δu = u^p`, `u(0) = d`, on `[0, T]`.
pub fn picard_solve(
    d: &InitialDatum,
    params: &ProblemParams,
    horizon: f64,
    grid: &Grid,
    cfg: &SolverConfig,
) -> Result<SolveOutcome> {
    if grid.dim() != params.dim {
        return Err(Error::domain(format!(
            "grid dimension {} does not match N={}",
            grid.dim(),
            params.dim
        )));
    }
    let mu = sample_on_grid(d, grid)?;
    picard_solve_field(&mu, params, horizon, cfg)
}

/// [`picard_solve`] from an already sampled initial field.
pub fn picard_solve_field(mu: &Field, params: &ProblemParams, horizon: f64, cfg: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    if mu.inf() < 0.0 {
        return Err(Error::domain("initial field must be nonnegative"));
    }
    check_threshold(mu, cfg)?;
    let m = cfg.time_steps;
    let coarse = march(mu, params, horizon, m, cfg)?;
    let mut out = SolveOutcome {
        status: coarse.status,
        trajectory: coarse.snapshots,
        blowup_bracket: None,
        diagnostics: coarse.diag,
    };
    if out.status != SolveStatus::Blowup {
        return Ok(out);
    }
    let tc = out.diagnostics.crossing_time.expect("blow-up records a crossing");
    let dt = horizon / m as f64;
    if !cfg.refine_blowup {
        let k = (tc / dt).ceil().max(1.0);
        out.blowup_bracket = Some(((k - 1.0) * dt, k * dt));
        return Ok(out);
    }
    let fine = march(mu, params, horizon, 2 * m, cfg)?;
    match (fine.status, fine.diag.crossing_time) {
        (SolveStatus::Blowup, Some(tf)) => {
            out.diagnostics.refined_crossing_time = Some(tf);
            out.diagnostics.iterations += fine.diag.iterations;
            out.blowup_bracket = Some(refined_bracket(tc, tf, dt));
        }
        _ => {
            out.status = SolveStatus::Inconclusive;
            out.diagnostics.message = Some(format!(
                "threshold crossed at t={tc:.6} with {m} steps but not confirmed with {} steps",
                2 * m
            ));
        }
    }
    Ok(out)
}

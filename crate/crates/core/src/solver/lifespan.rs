use serde::Serialize;

use crate::criteria::rescale_problem_log;
use crate::datum::{InitialDatum, ProblemParams};
use crate::error::{Error, Result};
use crate::propagator::Grid;

use super::{picard_solve, SolveStatus, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    /// The searched log variable (`ln T` for lifespans).
    pub ln_horizon: f64,
    pub status: SolveStatus,
}

/// Lifespan bracket. Horizons are kept in logs because the lifespans of
/// near-critical data leave the floating-point range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanEstimate {
    /// Largest converged horizon below `ln_t_high` (`-inf` if none).
    pub ln_t_low: f64,
    /// Smallest blow-up horizon (`+inf` if none).
    pub ln_t_high: f64,
    pub probes: Vec<Probe>,
}

impl LifespanEstimate {
    pub fn t_low(&self) -> f64 {
        self.ln_t_low.exp()
    }

    pub fn t_high(&self) -> f64 {
        self.ln_t_high.exp()
    }

    /// Geometric midpoint, in logs.
    pub fn ln_t_mid(&self) -> f64 {
        0.5 * (self.ln_t_low + self.ln_t_high)
    }

    pub fn is_bracketed(&self) -> bool {
        self.ln_t_low.is_finite() && self.ln_t_high.is_finite()
    }
}

/// Status of the problem on `[0, e^{ln_t}]`, solved as the equivalent
/// unit-horizon problem.
fn probe(d: &InitialDatum, params: &ProblemParams, grid: &Grid, cfg: &SolverConfig, ln_t: f64) -> Result<SolveStatus> {
    let (scaled, horizon) = rescale_problem_log(d, params, ln_t)?;
    match picard_solve(&scaled, params, horizon, grid, cfg) {
        Ok(out) => Ok(out.status),
        // The rescaled datum alone is within a decade of the threshold.
        Err(Error::Config(_)) => Ok(SolveStatus::Inconclusive),
        Err(e) => Err(e),
    }
}

/// Lifespan bracket with `budget` solves, starting the search at `T = 1`.
pub fn lifespan_estimate(
    d: &InitialDatum,
    params: &ProblemParams,
    grid: &Grid,
    cfg: &SolverConfig,
    budget: usize,
) -> Result<LifespanEstimate> {
    lifespan_estimate_in(d, params, grid, cfg, budget, 0.0, 2f64.ln() * 2.0)
}

/// Lifespan bracket starting at `ln T = ln_start`; see [`monotone_bracket`].
pub fn lifespan_estimate_in(
    d: &InitialDatum,
    params: &ProblemParams,
    grid: &Grid,
    cfg: &SolverConfig,
    budget: usize,
    ln_start: f64,
    ln_step: f64,
) -> Result<LifespanEstimate> {
    cfg.validate()?;
    let b = monotone_bracket(|x| probe(d, params, grid, cfg, x), budget, ln_start, ln_step)?;
    Ok(LifespanEstimate {
        ln_t_low: b.ln_low,
        ln_t_high: b.ln_high,
        probes: b.probes,
    })
}

/// Bracket `(ln_low, ln_high)` of the switch point of a predicate that is
/// `Converged` below it and `Blowup` above it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogBracket {
    /// Largest converged point below `ln_high` (`-inf` if none).
    pub ln_low: f64,
    /// Smallest blow-up point (`+inf` if none).
    pub ln_high: f64,
    pub probes: Vec<Probe>,
}

/// Searches from `ln_start`, stepping by `ln_step` (doubling each time)
/// until both a converged and a blow-up point are known, then bisects.
/// Inconclusive probes bound nothing; the next probe then splits the
/// widest remaining gap. Fails when every probe was inconclusive.
pub fn monotone_bracket<F>(mut probe: F, budget: usize, ln_start: f64, ln_step: f64) -> Result<LogBracket>
where
    F: FnMut(f64) -> Result<SolveStatus>,
{
    if budget < 8 {
        return Err(Error::domain(format!("bisection budget must be >= 8, got {budget}")));
    }
    if !(ln_step > 0.0) || !ln_start.is_finite() {
        return Err(Error::domain("the search needs a finite start and a step > 0"));
    }
    let mut probes: Vec<Probe> = Vec::new();
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    let mut record = |x: f64, status: SolveStatus, lo: &mut Option<f64>, hi: &mut Option<f64>| {
        probes.push(Probe { ln_horizon: x, status });
        match status {
            SolveStatus::Converged => {
                if hi.is_none_or(|h| x < h) && lo.is_none_or(|l| x > l) {
                    *lo = Some(x);
                }
            }
            SolveStatus::Blowup => {
                if hi.is_none_or(|h| x < h) {
                    *hi = Some(x);
                    if lo.is_some_and(|l| l >= x) {
                        *lo = None;
                    }
                }
            }
            SolveStatus::Inconclusive => {}
        }
    };

    let mut used = 0;
    let mut x = ln_start;
    let mut step = ln_step;
    let mut direction = -1.0;
    let mut inconclusive: Vec<f64> = Vec::new();
    while used < budget && (lo.is_none() || hi.is_none()) {
        let s = probe(x)?;
        used += 1;
        record(x, s, &mut lo, &mut hi);
        match s {
            SolveStatus::Converged => direction = 1.0,
            SolveStatus::Blowup => direction = -1.0,
            SolveStatus::Inconclusive => inconclusive.push(x),
        }
        if lo.is_some() && hi.is_some() {
            break;
        }
        x += direction * step;
        step *= 2.0;
    }
    while used < budget {
        let (Some(l), Some(h)) = (lo, hi) else { break };
        let mut cuts: Vec<f64> = inconclusive.iter().copied().filter(|&v| v > l && v < h).collect();
        cuts.push(l);
        cuts.push(h);
        cuts.sort_by(f64::total_cmp);
        let (a, b) = cuts
            .windows(2)
            .map(|w| (w[0], w[1]))
            .max_by(|u, v| (u.1 - u.0).total_cmp(&(v.1 - v.0)))
            .expect("at least two cut points");
        let mid = 0.5 * (a + b);
        let s = probe(mid)?;
        used += 1;
        record(mid, s, &mut lo, &mut hi);
        if s == SolveStatus::Inconclusive {
            inconclusive.push(mid);
        }
    }
    if lo.is_none() && hi.is_none() {
        return Err(Error::Estimation(format!(
            "all {} probes were inconclusive (search variable in [{:.3}, {:.3}])",
            probes.len(),
            probes.iter().map(|p| p.ln_horizon).fold(f64::INFINITY, f64::min),
            probes.iter().map(|p| p.ln_horizon).fold(f64::NEG_INFINITY, f64::max),
        )));
    }
    Ok(LogBracket {
        ln_low: lo.unwrap_or(f64::NEG_INFINITY),
        ln_high: hi.unwrap_or(f64::INFINITY),
        probes,
    })
}

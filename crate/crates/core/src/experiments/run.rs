use std::f64::consts::LN_10;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{global_window, rescale_problem_log};
use crate::datum::InitialDatum;
use crate::error::{Error, Result};
use crate::solver::{lifespan_estimate_in, monotone_bracket, picard_solve, SolveStatus};

use super::spec::{ExperimentId, HorizonUnits, PointSetup, Quantity, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Inconclusive,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Inconclusive => "inconclusive",
        }
    }
}

/// One sweep point. The measured quantity (a lifespan, an amplitude
/// threshold or a mass window) is kept as a bracket of logarithms, because
/// lifespans of near-critical data leave the floating-point range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub swept_value: f64,
    pub ln_low: f64,
    pub ln_high: f64,
    pub status: RowStatus,
    /// PDE solves spent on the point (solver iterations for `blowup_time`).
    pub iterations: usize,
    pub diagnostic: Option<String>,
}

impl SweepRow {
    pub fn is_conclusive(&self) -> bool {
        self.status == RowStatus::Ok && self.ln_low.is_finite() && self.ln_high.is_finite()
    }

    /// Log of the geometric midpoint of the bracket.
    pub fn ln_mid(&self) -> f64 {
        if self.is_conclusive() {
            0.5 * (self.ln_low + self.ln_high)
        } else {
            f64::NAN
        }
    }

    fn inconclusive(v: f64, iterations: usize, msg: String) -> Self {
        Self {
            swept_value: v,
            ln_low: f64::NEG_INFINITY,
            ln_high: f64::INFINITY,
            status: RowStatus::Inconclusive,
            iterations,
            diagnostic: Some(msg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub experiment: ExperimentId,
    pub quantity: Quantity,
    pub spec_hash: String,
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str = "swept_value,t_low,t_high,t_mid,status,iterations";

/// Decimal text of `e^{ln}` with 10 significant digits, valid far outside
/// the `f64` range (`0` for `-inf`).
pub fn format_from_ln(ln: f64) -> String {
    if ln.is_nan() {
        return "nan".into();
    }
    if ln == f64::NEG_INFINITY {
        return "0".into();
    }
    if ln == f64::INFINITY {
        return "inf".into();
    }
    let l10 = ln / LN_10;
    let mut e = l10.floor();
    let mut m = 10f64.powf(l10 - e);
    if format!("{m:.9}").starts_with("10") {
        m /= 10.0;
        e += 1.0;
    }
    format!("{m:.9}e{}", e as i64)
}

/// Inverse of [`format_from_ln`]: the natural log of a decimal literal.
pub fn parse_ln(s: &str) -> Result<f64> {
    let bad = || Error::Config(format!("`{s}` is not a number"));
    match s {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "0" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let m: f64 = m.parse().map_err(|_| bad())?;
            let e: i64 = e.parse().map_err(|_| bad())?;
            Ok(m.ln() + e as f64 * LN_10)
        }
        None => Ok(s.parse::<f64>().map_err(|_| bad())?.ln()),
    }
}

impl SweepResult {
    pub fn inconclusive_count(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_conclusive()).count()
    }

    /// The CSV table: one row per swept value, brackets as decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.swept_value,
                format_from_ln(r.ln_low),
                format_from_ln(r.ln_high),
                format_from_ln(r.ln_mid()),
                r.status.as_str(),
                r.iterations
            );
        }
        out
    }

    /// Rows of a table written by [`SweepResult::to_csv`] (diagnostics are
    /// not part of the table).
    pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(Error::Config(format!("table header must be `{CSV_HEADER}`")));
        }
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Config(format!("table row `{line}` does not have 6 fields")));
            }
            let status = match f[4] {
                "ok" => RowStatus::Ok,
                "inconclusive" => RowStatus::Inconclusive,
                s => return Err(Error::Config(format!("unknown row status `{s}`"))),
            };
            rows.push(SweepRow {
                swept_value: f[0]
                    .parse()
                    .map_err(|_| Error::Config(format!("`{}` is not a number", f[0])))?,
                ln_low: parse_ln(f[1])?,
                ln_high: parse_ln(f[2])?,
                status,
                iterations: f[5]
                    .parse()
                    .map_err(|_| Error::Config(format!("`{}` is not an integer", f[5])))?,
                diagnostic: None,
            });
        }
        Ok(rows)
    }

    /// Fails when more than half of the points are inconclusive.
    pub fn check(&self) -> Result<()> {
        let bad = self.inconclusive_count();
        if 2 * bad > self.rows.len() {
            let first = self
                .rows
                .iter()
                .find_map(|r| r.diagnostic.as_deref())
                .unwrap_or("no diagnostic");
            return Err(Error::Sweep(format!(
                "{bad} of {} points are inconclusive (first: {first}); widen [search] budget or ln_step, move ln_start, or refine [grid]/[solver]",
                self.rows.len()
            )));
        }
        Ok(())
    }
}

/// `ln` of the search horizon for a point.
fn ln_horizon(spec: &SweepSpec, pt: &PointSetup) -> f64 {
    let base = spec.search.horizon.ln();
    match spec.search.horizon_units {
        HorizonUnits::Absolute => base,
        HorizonUnits::Natural => {
            let scale = match &pt.datum {
                InitialDatum::DiracApprox { j, .. } => InitialDatum::dirac_radius(pt.params.dim, *j),
                InitialDatum::Decaying { scale, .. } => *scale,
                _ => 1.0,
            };
            base + 2.0 / pt.params.alpha * scale.ln()
        }
    }
}

/// Measures one point; failures become inconclusive rows.
pub fn measure_point(spec: &SweepSpec, v: f64) -> SweepRow {
    let pt = match spec.point(v) {
        Ok(p) => p,
        Err(e) => return SweepRow::inconclusive(v, 0, e.to_string()),
    };
    let s = &spec.search;
    match spec.quantity {
        Quantity::Lifespan => {
            match lifespan_estimate_in(&pt.datum, &pt.params, &spec.grid, &pt.solver, s.budget, s.ln_start, s.ln_step) {
                Ok(est) => bracket_row(v, est.ln_t_low, est.ln_t_high, est.probes.len()),
                Err(e) => SweepRow::inconclusive(v, s.budget, e.to_string()),
            }
        }
        Quantity::GlobalThreshold => {
            let ln_h = ln_horizon(spec, &pt);
            let probe = |x: f64| -> Result<SolveStatus> {
                let d = pt.datum.with_kappa(x.exp());
                let status = rescale_problem_log(&d, &pt.params, ln_h)
                    .and_then(|(scaled, h)| picard_solve(&scaled, &pt.params, h, &spec.grid, &pt.solver))
                    .map(|o| o.status)
                    .unwrap_or(SolveStatus::Inconclusive);
                Ok(status)
            };
            match monotone_bracket(probe, s.budget, s.ln_start, s.ln_step) {
                Ok(b) => bracket_row(v, b.ln_low, b.ln_high, b.probes.len()),
                Err(e) => SweepRow::inconclusive(v, s.budget, e.to_string()),
            }
        }
        Quantity::BlowupTime => {
            let h = ln_horizon(spec, &pt).exp();
            match picard_solve(&pt.datum, &pt.params, h, &spec.grid, &pt.solver) {
                Ok(out) => match (out.status, out.blowup_bracket) {
                    (SolveStatus::Blowup, Some((a, b))) if a > 0.0 => SweepRow {
                        swept_value: v,
                        ln_low: a.ln(),
                        ln_high: b.ln(),
                        status: RowStatus::Ok,
                        iterations: out.diagnostics.iterations,
                        diagnostic: None,
                    },
                    (st, _) => SweepRow::inconclusive(
                        v,
                        out.diagnostics.iterations,
                        format!("solve ended {} without a blow-up bracket on horizon {h}", st.as_str()),
                    ),
                },
                Err(e) => SweepRow::inconclusive(v, 0, e.to_string()),
            }
        }
        Quantity::Window => match global_window(pt.params.alpha, pt.params.dim) {
            Ok((lo, hi)) => bracket_row(v, lo.ln(), hi.ln(), 0),
            Err(e) => SweepRow::inconclusive(v, 0, e.to_string()),
        },
    }
}

fn bracket_row(v: f64, lo: f64, hi: f64, iterations: usize) -> SweepRow {
    if lo.is_finite() && hi.is_finite() {
        SweepRow {
            swept_value: v,
            ln_low: lo,
            ln_high: hi,
            status: RowStatus::Ok,
            iterations,
            diagnostic: None,
        }
    } else {
        SweepRow {
            swept_value: v,
            ln_low: lo,
            ln_high: hi,
            status: RowStatus::Inconclusive,
            iterations,
            diagnostic: Some(format!(
                "search not bracketed after {iterations} solves (ln bounds {lo:.3}, {hi:.3}); raise [search] budget or ln_step"
            )),
        }
    }
}

/// All points, measured on `workers` threads, without the inconclusive
/// check.
pub fn run_sweep_unchecked(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    spec.validate()?;
    let values = spec.sweep.values();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Sweep(format!("cannot start the worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| values.par_iter().map(|&v| measure_point(spec, v)).collect());
    Ok(SweepResult {
        experiment: spec.experiment,
        quantity: spec.quantity,
        spec_hash: spec.hash(),
        rows,
    })
}

/// Runs the sweep; more than half of the points inconclusive is an error.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    let r = run_sweep_unchecked(spec, workers)?;
    r.check()?;
    Ok(r)
}

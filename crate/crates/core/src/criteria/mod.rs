//! Necessary and sufficient solvability conditions as condition numbers.
//!
//! Each condition is reported as `max_σ LHS(σ)/RHS(σ)` with the unknown
//! multiplicative constant set to one, then compared with a constant: the
//! calibrated `γ₁` for the necessary side, the explicit `γ₂`/`γ₃` for the
//! sufficient side.

mod constants;

use serde::Serialize;

pub use constants::{
    auxiliary_q, check_r, default_r, gamma_constants, CalibratedConstants, CalibrationEntry, GammaConstants,
    DEFAULT_C_STAR,
};

use crate::datum::{sup_ball_mass, sup_ball_power_integral, unit_ball_volume, InitialDatum, ProblemParams, Regime};
use crate::error::{Error, Result};

/// Default number of radii in the σ-sweep.
pub const DEFAULT_SIGMA_POINTS: usize = 64;

/// Relative floor of the σ-sweep: radii below `1e-8·T^{α/2}` are not swept.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// Margin applied to the Hölder bound that ties the supercritical
/// sufficient constant to `γ₁`; absorbs the discrete ball stencils of
/// gridded data.
pub const HOLDER_MARGIN: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    NecessaryGeneral,
    NecessaryCritical,
    SufficientSubcritical,
    SufficientSupercritical,
}

impl CriterionKind {
    pub fn is_necessary(self) -> bool {
        matches!(self, Self::NecessaryGeneral | Self::NecessaryCritical)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::NecessaryGeneral => "necessary_general",
            Self::NecessaryCritical => "necessary_critical",
            Self::SufficientSubcritical => "sufficient_subcritical",
            Self::SufficientSupercritical => "sufficient_supercritical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Violated,
    Satisfied,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Violated => "violated",
            Self::Satisfied => "satisfied",
            Self::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConstantsUsed {
    /// Integrability exponent of the Morrey condition.
    pub r: Option<f64>,
    /// Auxiliary exponent of the Morrey condition.
    pub q: Option<f64>,
    /// The constant the condition number was compared with.
    pub gamma: Option<f64>,
    pub c_star: Option<f64>,
    /// Where `gamma` came from (`gamma2`, `gamma3`, or a constants file tag).
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub kind: CriterionKind,
    pub condition_number: f64,
    pub worst_sigma: f64,
    pub verdict: Verdict,
    pub constants_used: ConstantsUsed,
    pub diagnostic: Option<String>,
}

impl CriterionReport {
    /// One aligned line for terminal output.
    pub fn summary_line(&self) -> String {
        let gamma = self
            .constants_used
            .gamma
            .map_or_else(|| "-".to_string(), |g| format!("{g:.6e}"));
        let mut s = format!(
            "{:<26} cn={:<13.6e} sigma*={:<13.6e} gamma={:<13} {}",
            self.kind.as_str(),
            self.condition_number,
            self.worst_sigma,
            gamma,
            self.verdict.as_str()
        );
        if let Some(d) = &self.diagnostic {
            s.push_str("  (");
            s.push_str(d);
            s.push(')');
        }
        s
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("horizon T must be > 0, got {t}")))
    }
}

/// `∫_a^{1/4} t^{-α} dt` in closed form; zero for `a ≥ 1/4`, `ln(1/(4a))`
/// at `α = 1`.
pub fn critical_integral(alpha: f64, a: f64) -> f64 {
    if a >= 0.25 {
        return 0.0;
    }
    if a <= 0.0 {
        return if alpha < 1.0 {
            0.25f64.powf(1.0 - alpha) / (1.0 - alpha)
        } else {
            f64::INFINITY
        };
    }
    let log_ratio = (0.25 / a).ln();
    let e = 1.0 - alpha;
    if e == 0.0 {
        return log_ratio;
    }
    a.powf(e) * (e * log_ratio).exp_m1() / e
}

/// Radii of the σ-sweep on `(0, upper]`: `points` log-spaced values from
/// the floor to `upper` plus the datum's own break radii in that range.
/// Gridded data are swept between two cells and the largest ball that fits
/// in the box.
pub fn sigma_sweep(d: &InitialDatum, dim: usize, upper: f64, points: usize) -> Result<Vec<f64>> {
    if points < 32 {
        return Err(Error::domain(format!("the sigma sweep needs at least 32 points, got {points}")));
    }
    if !(upper > 0.0 && upper.is_finite()) {
        return Err(Error::domain(format!("sweep upper radius must be > 0, got {upper}")));
    }
    let mut lo = SIGMA_FLOOR * upper;
    let mut hi = upper;
    if let InitialDatum::GridDensity { field } = d {
        let g = field.grid();
        lo = lo.max(2.0 * g.spacing());
        hi = hi.min(g.half_width() - 2.0 * g.spacing());
        if lo >= hi {
            return Ok(vec![hi]);
        }
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> = (0..points)
        .map(|i| (llo + (lhi - llo) * i as f64 / (points - 1) as f64).exp())
        .collect();
    out[points - 1] = hi;
    out.extend(d.radial_breaks(dim).into_iter().filter(|&b| b > lo && b < hi));
    let edge_d = match d {
        InitialDatum::DiracApprox { j, .. } => Some(InitialDatum::dirac_radius(dim, *j)),
        _ => None,
    };
    out.extend(edge_d.filter(|&b| b > lo && b < hi));
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Largest sweep radius `T^{α/2}`.
fn sweep_upper(params: &ProblemParams, t: f64) -> f64 {
    t.powf(params.alpha / 2.0)
}

/// Condition numbers of the necessary conditions without any verdict:
/// `(general, worst σ)` and, at `p = p_F`, `(critical, worst σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NecessaryNumbers {
    pub general: (f64, f64),
    pub critical: Option<(f64, f64)>,
}

pub fn necessary_numbers(
    d: &InitialDatum,
    params: &ProblemParams,
    t: f64,
    sigma_points: usize,
) -> Result<NecessaryNumbers> {
    check_horizon(t)?;
    d.validate(params.dim)?;
    let n = params.dim as f64;
    let alpha = params.alpha;
    let mass_exp = n - 2.0 / (params.p - 1.0);
    let critical = params.regime() == Regime::Critical;
    let sigmas = sigma_sweep(d, params.dim, sweep_upper(params, t), sigma_points)?;
    let mut general = (0.0, sigmas[sigmas.len() - 1]);
    let mut crit = (0.0, general.1);
    for &s in &sigmas {
        let m = sup_ball_mass(d, params.dim, s)?;
        if !m.is_finite() {
            return Ok(NecessaryNumbers {
                general: (f64::INFINITY, s),
                critical: critical.then_some((f64::INFINITY, s)),
            });
        }
        let g = m / s.powf(mass_exp);
        if g > general.0 {
            general = (g, s);
        }
        if critical {
            // σ^{2/α}/(16T) in logs to survive tiny horizons.
            let a = (2.0 / alpha * s.ln() - t.ln() - 16f64.ln()).exp();
            let c = m * critical_integral(alpha, a).powf(n / 2.0);
            if c > crit.0 {
                crit = (c, s);
            }
        }
    }
    Ok(NecessaryNumbers {
        general,
        critical: critical.then_some(crit),
    })
}

/// Necessary conditions with the shipped calibrated constants.
pub fn necessary_condition(
    d: &InitialDatum,
    params: &ProblemParams,
    t: f64,
    sigma_points: usize,
) -> Result<Vec<CriterionReport>> {
    necessary_condition_with(d, params, t, sigma_points, Some(&CalibratedConstants::embedded()))
}

/// Necessary conditions against the given constants (none: indeterminate
/// unless the mass is infinite).
pub fn necessary_condition_with(
    d: &InitialDatum,
    params: &ProblemParams,
    t: f64,
    sigma_points: usize,
    constants: Option<&CalibratedConstants>,
) -> Result<Vec<CriterionReport>> {
    let nums = necessary_numbers(d, params, t, sigma_points)?;
    let entry = constants.and_then(|c| c.lookup(params));
    let source = constants.map(|c| c.tag()).unwrap_or_default();
    let mut missing = None;
    if entry.is_none() {
        missing = Some(format!(
            "no calibrated constant for N={} p={} alpha={}",
            params.dim, params.p, params.alpha
        ));
    }
    if params.alpha < 0.3 {
        missing = Some("calibrated constants are only valid for alpha >= 0.3".into());
    }
    let make = |kind, (cn, s): (f64, f64), gamma: Option<f64>| {
        let gamma = if params.alpha < 0.3 { None } else { gamma };
        let verdict = if cn == f64::INFINITY || gamma.is_some_and(|g| cn > g) {
            Verdict::Violated
        } else {
            Verdict::Indeterminate
        };
        let diagnostic = if cn == f64::INFINITY {
            Some("infinite ball mass".to_string())
        } else if gamma.is_none() {
            missing.clone()
        } else {
            None
        };
        CriterionReport {
            kind,
            condition_number: cn,
            worst_sigma: s,
            verdict,
            constants_used: ConstantsUsed {
                gamma,
                source: source.clone(),
                ..Default::default()
            },
            diagnostic,
        }
    };
    let mut out = vec![make(CriterionKind::NecessaryGeneral, nums.general, entry.map(|e| e.gamma1))];
    if let Some(c) = nums.critical {
        out.push(make(
            CriterionKind::NecessaryCritical,
            c,
            entry.and_then(|e| e.gamma1_critical),
        ));
    }
    Ok(out)
}

/// The sufficient condition of the regime: the mass bound at `σ = T^{α/2}`
/// for `p ≤ p_F`, the Morrey bound over the σ-sweep for `p > p_F`.
pub fn sufficient_condition(
    d: &InitialDatum,
    params: &ProblemParams,
    t: f64,
    r: Option<f64>,
    c_star: f64,
) -> Result<CriterionReport> {
    sufficient_condition_sweep(d, params, t, r, c_star, DEFAULT_SIGMA_POINTS)
}

pub fn sufficient_condition_sweep(
    d: &InitialDatum,
    params: &ProblemParams,
    t: f64,
    r: Option<f64>,
    c_star: f64,
    sigma_points: usize,
) -> Result<CriterionReport> {
    check_horizon(t)?;
    d.validate(params.dim)?;
    let n = params.dim as f64;
    let alpha = params.alpha;
    let upper = sweep_upper(params, t);
    if params.regime() != Regime::Supercritical {
        let kind = CriterionKind::SufficientSubcritical;
        let m = sup_ball_mass(d, params.dim, upper)?;
        let cn = m / t.powf(alpha * (n / 2.0 - 1.0 / (params.p - 1.0)));
        let (gamma, diagnostic) = match gamma_constants(params, c_star, None) {
            Ok(g) => (g.gamma2, None),
            Err(e) => (None, Some(e.to_string())),
        };
        let verdict = match gamma {
            Some(g) if cn <= g => Verdict::Satisfied,
            _ => Verdict::Indeterminate,
        };
        return Ok(CriterionReport {
            kind,
            condition_number: cn,
            worst_sigma: upper,
            verdict,
            constants_used: ConstantsUsed {
                gamma,
                c_star: Some(c_star),
                source: "gamma2".into(),
                ..Default::default()
            },
            diagnostic,
        });
    }
    let g = gamma_constants(params, c_star, r)?;
    let r = g.r.expect("supercritical constants carry r");
    let expo = n / r - 2.0 / (params.p - 1.0);
    let mut cn = 0.0;
    let mut worst = upper;
    let mut diagnostic = None;
    for s in sigma_sweep(d, params.dim, upper, sigma_points)? {
        let integral = sup_ball_power_integral(d, params.dim, s, r)?;
        if !integral.is_finite() {
            cn = f64::INFINITY;
            worst = s;
            diagnostic = Some(format!("the datum's power {r} is not integrable at the origin"));
            break;
        }
        let v = integral.powf(1.0 / r) / s.powf(expo);
        if v > cn {
            cn = v;
            worst = s;
        }
    }
    let gamma = g.gamma3;
    let verdict = match gamma {
        Some(g) if cn <= g => Verdict::Satisfied,
        _ => Verdict::Indeterminate,
    };
    Ok(CriterionReport {
        kind: CriterionKind::SufficientSupercritical,
        condition_number: cn,
        worst_sigma: worst,
        verdict,
        constants_used: ConstantsUsed {
            r: Some(r),
            q: g.q,
            gamma,
            c_star: Some(c_star),
            source: "gamma3".into(),
        },
        diagnostic,
    })
}

/// Lower bounds for `γ₁` and `γ′₁` implied by the sufficient conditions:
/// a datum passing the sufficient test can never exceed them.
pub fn analytic_necessary_floor(params: &ProblemParams, c_star: f64) -> Result<(f64, Option<f64>)> {
    let g = gamma_constants(params, c_star, None)?;
    let n = params.dim as f64;
    match params.regime() {
        Regime::Supercritical => {
            let r = g.r.expect("supercritical constants carry r");
            let g3 = g.gamma3.expect("supercritical constants carry gamma3");
            Ok((HOLDER_MARGIN * g3 * unit_ball_volume(params.dim).powf(1.0 - 1.0 / r), None))
        }
        Regime::Subcritical => Ok((g.gamma2.expect("gamma2"), None)),
        Regime::Critical => {
            let g2 = g.gamma2.expect("gamma2");
            let a = params.alpha;
            let crit = g2 * (4f64.powf(a - 1.0) / (1.0 - a)).powf(n / 2.0);
            Ok((g2, Some(crit)))
        }
    }
}

/// Ratio `γ₂(α)/(1-α)^{N/2}` at the Fujita exponent.
pub fn critical_gamma2_ratio(dim: usize, alpha: f64, c_star: f64) -> Result<f64> {
    let params = ProblemParams::new(dim, 1.0 + 2.0 / dim as f64, alpha)?;
    gamma_constants(&params, c_star, None)?
        .critical_ratio
        .ok_or_else(|| Error::domain("critical ratio needs alpha < 1"))
}

/// Grid on which the window constants are optimized.
fn window_alphas() -> impl Iterator<Item = f64> {
    (0..140).map(|i| 0.3 + 0.005 * i as f64).chain([0.999])
}

/// Total-mass window at `p = p_F`: mass below `lower` launches a global
/// solution, mass above `upper` rules one out. Both are constant multiples
/// of `(1-α)^{N/2}`.
pub fn global_window(alpha: f64, dim: usize) -> Result<(f64, f64)> {
    global_window_with(alpha, dim, &CalibratedConstants::embedded())
}

pub fn global_window_with(alpha: f64, dim: usize, constants: &CalibratedConstants) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("the global window needs alpha in (0, 1), got {alpha}")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::domain(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    let n = dim as f64;
    let c_star = constants.c_star;
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    for a in window_alphas() {
        let ratio = critical_gamma2_ratio(dim, a, c_star)?;
        c1 = c1.min(ratio);
        // γ′₁ ≥ γ₂ (4^{α-1}/(1-α))^{N/2} turns into C₂ ≥ γ₂/(1-α)^{N/2}.
        c2 = c2.max(ratio);
    }
    for e in constants.critical_entries(dim) {
        if let Some(g) = e.gamma1_critical {
            if e.alpha >= 0.3 && e.alpha < 1.0 {
                c2 = c2.max(g * 4f64.powf((1.0 - e.alpha) * n / 2.0));
            }
        }
    }
    let scale = (1.0 - alpha).powf(n / 2.0);
    Ok((c1 * scale, c2.max(c1) * scale))
}

/// The datum and horizon of the unit-horizon problem equivalent to solving
/// up to `T`: `T^{α/(p-1)} d(T^{α/2} ·)` on `[0, 1]`.
pub fn rescale_problem(d: &InitialDatum, params: &ProblemParams, t: f64) -> Result<(InitialDatum, f64)> {
    check_horizon(t)?;
    rescale_problem_log(d, params, t.ln())
}

/// [`rescale_problem`] with `ln T`, for horizons outside the floating-point
/// range.
pub fn rescale_problem_log(d: &InitialDatum, params: &ProblemParams, ln_t: f64) -> Result<(InitialDatum, f64)> {
    if !ln_t.is_finite() {
        return Err(Error::domain("ln T must be finite"));
    }
    if ln_t == 0.0 {
        return Ok((d.clone(), 1.0));
    }
    let a = params.alpha;
    let out = d.dilate_log(params.dim, a / (params.p - 1.0) * ln_t, a / 2.0 * ln_t)?;
    Ok((out, 1.0))
}

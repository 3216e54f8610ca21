use serde::Serialize;

use crate::error::{Error, Result};

use super::run::SweepResult;

/// Regression model on transformed coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `y = a·ln x + b`, with `y` already a logarithm.
    PowerLaw,
    /// `y = a·x + b`.
    LogLaw,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PowerLaw => "power_law",
            Self::LogLaw => "log_law",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "power_law" => Ok(Self::PowerLaw),
            "log_law" => Ok(Self::LogLaw),
            _ => Err(Error::Config(format!("[fit] model: unknown `{s}` (expected power_law or log_law)"))),
        }
    }
}

/// Transformation of the swept value before the model is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    Value,
    /// `1 - v`.
    OneMinus,
    /// `(1 - v)^e`.
    OneMinusPow(f64),
    /// `v^{-1} / ln(v^{-1})`, for `v < 1`.
    InverseOverLog,
}

impl Abscissa {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Value => "value",
            Self::OneMinus => "one_minus",
            Self::OneMinusPow(_) => "one_minus_pow",
            Self::InverseOverLog => "inverse_over_log",
        }
    }

    pub fn exponent(self) -> Option<f64> {
        match self {
            Self::OneMinusPow(e) => Some(e),
            _ => None,
        }
    }

    pub fn parse(s: &str, exponent: Option<f64>) -> Result<Self> {
        let a = match s {
            "value" => Self::Value,
            "one_minus" => Self::OneMinus,
            "one_minus_pow" => Self::OneMinusPow(
                exponent.ok_or_else(|| Error::Config("[fit] one_minus_pow needs abscissa_exponent".into()))?,
            ),
            "inverse_over_log" => Self::InverseOverLog,
            _ => {
                return Err(Error::Config(format!(
                    "[fit] abscissa: unknown `{s}` (expected value, one_minus, one_minus_pow or inverse_over_log)"
                )))
            }
        };
        if exponent.is_some() && !matches!(a, Self::OneMinusPow(_)) {
            return Err(Error::Config("[fit] abscissa_exponent only applies to one_minus_pow".into()));
        }
        Ok(a)
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Self::Value => v,
            Self::OneMinus => 1.0 - v,
            Self::OneMinusPow(e) => (1.0 - v).powf(e),
            Self::InverseOverLog => {
                let inv = 1.0 / v;
                inv / inv.ln()
            }
        }
    }
}

/// The regressed ordinate, as a function of `ln` of the measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordinate {
    /// `ln y`.
    LnValue,
    /// `ln(y^e · ln y) = e·ln y + ln ln y`, for `y > 1`.
    PowerLog(f64),
}

impl Ordinate {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LnValue => "ln_value",
            Self::PowerLog(_) => "power_log",
        }
    }

    pub fn exponent(self) -> Option<f64> {
        match self {
            Self::PowerLog(e) => Some(e),
            Self::LnValue => None,
        }
    }

    pub fn parse(s: &str, exponent: Option<f64>) -> Result<Self> {
        match (s, exponent) {
            ("ln_value", None) => Ok(Self::LnValue),
            ("power_log", Some(e)) => Ok(Self::PowerLog(e)),
            ("power_log", None) => Err(Error::Config("[fit] power_log needs ordinate_exponent".into())),
            ("ln_value", Some(_)) => Err(Error::Config("[fit] ordinate_exponent only applies to power_log".into())),
            _ => Err(Error::Config(format!("[fit] ordinate: unknown `{s}` (expected ln_value or power_log)"))),
        }
    }

    pub fn apply(self, ln_y: f64) -> f64 {
        match self {
            Self::LnValue => ln_y,
            Self::PowerLog(e) => e * ln_y + ln_y.ln(),
        }
    }
}

/// How the fitted slope is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `|slope - expected| ≤ tolerance·|expected|`.
    Relative,
    /// Same sign as `expected` (only the sign of `expected` matters).
    Sign,
    /// `slope ≥ expected - tolerance·|expected|`: a one-sided bound.
    OneSided,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Relative => "relative",
            Self::Sign => "sign",
            Self::OneSided => "one_sided",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relative" => Ok(Self::Relative),
            "sign" => Ok(Self::Sign),
            "one_sided" => Ok(Self::OneSided),
            _ => Err(Error::Config(format!("[fit] rule: unknown `{s}` (expected relative, sign or one_sided)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSpec {
    pub model: Model,
    pub abscissa: Abscissa,
    pub ordinate: Ordinate,
    pub expected_slope: f64,
    pub rule: Rule,
    /// Relative tolerance on the slope.
    pub tolerance: f64,
    pub min_r_squared: Option<f64>,
}

impl FitSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.expected_slope.is_finite() {
            return Err(Error::Config("[fit] expected_slope must be finite".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config(format!("[fit] tolerance must be >= 0, got {}", self.tolerance)));
        }
        if let Some(r) = self.min_r_squared {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("[fit] min_r_squared must lie in [0, 1], got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    pub model: Model,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub expected_slope: f64,
    pub rule: Rule,
    /// Absolute slope tolerance, `relative tolerance × |expected|`.
    pub tolerance: f64,
    pub min_r_squared: Option<f64>,
    pub within_tolerance: bool,
    pub points: usize,
}

impl RegressionReport {
    /// The slope rule and, when declared, the `r²` floor.
    pub fn passed(&self) -> bool {
        self.within_tolerance && self.min_r_squared.is_none_or(|m| self.r_squared >= m)
    }
}

/// Ordinary least squares `y = a x + b`: `(a, b, r²)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::Regression("abscissa and ordinate lengths differ".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) || (sxx / n).sqrt() <= 1e-13 * mx.abs() {
        return Err(Error::Regression("the abscissa column is constant (rank deficient)".into()));
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok((a, b, r2))
}

/// Fits `(x, ln y)` pairs: `x` is the raw swept value, `ln_y` the log of the
/// measured quantity. Non-finite pairs are dropped; at least 5 must remain.
pub fn fit_points(xs: &[f64], ln_ys: &[f64], fit: &FitSpec) -> Result<RegressionReport> {
    let mut tx = Vec::new();
    let mut ty = Vec::new();
    for (&x, &ly) in xs.iter().zip(ln_ys) {
        let ax = fit.abscissa.apply(x);
        let gx = match fit.model {
            Model::PowerLaw => ax.ln(),
            Model::LogLaw => ax,
        };
        let gy = fit.ordinate.apply(ly);
        if gx.is_finite() && gy.is_finite() {
            tx.push(gx);
            ty.push(gy);
        }
    }
    if tx.len() < 5 {
        return Err(Error::Regression(format!(
            "a regression needs at least 5 finite points, got {}",
            tx.len()
        )));
    }
    let (slope, intercept, r_squared) = least_squares(&tx, &ty)?;
    let tol = fit.tolerance * fit.expected_slope.abs();
    let within_tolerance = match fit.rule {
        Rule::Relative => (slope - fit.expected_slope).abs() <= tol,
        Rule::Sign => slope != 0.0 && slope.signum() == fit.expected_slope.signum(),
        Rule::OneSided => slope >= fit.expected_slope - tol,
    };
    Ok(RegressionReport {
        model: fit.model,
        slope,
        intercept,
        r_squared,
        expected_slope: fit.expected_slope,
        rule: fit.rule,
        tolerance: tol,
        min_r_squared: fit.min_r_squared,
        within_tolerance,
        points: tx.len(),
    })
}

/// Fits the conclusive rows of a sweep, using the geometric midpoint of
/// each bracket.
pub fn fit_scaling(result: &SweepResult, fit: &FitSpec) -> Result<RegressionReport> {
    let rows: Vec<_> = result.rows.iter().filter(|r| r.is_conclusive()).collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.swept_value).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ln_mid()).collect();
    fit_points(&xs, &ys, fit)
}

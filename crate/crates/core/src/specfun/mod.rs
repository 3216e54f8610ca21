//! Special functions behind the fractional propagators: Γ and B, the
//! Mittag-Leffler functions `E_{α,β}`, the subordination density `h_α`
//! (the Mainardi–Wright function `M_α`) and its moments.
//!
//! Everything here is a pure function of its arguments.

mod table;

use std::f64::consts::PI;

use statrs::function::gamma as sg;

pub use table::{MittagLefflerTable, TableKind};

use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, QuadTol};

/// Truncation controls for the power series evaluated in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Absolute truncation tolerance on the last retained term.
    pub abs_tol: f64,
    pub max_terms: usize,
    /// `|z|` above which the power series is not attempted on the negative axis.
    pub switch_radius: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            max_terms: 2000,
            switch_radius: 10.0,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::domain("SeriesControl.abs_tol must be > 0"));
        }
        if self.max_terms < 16 {
            return Err(Error::domain("SeriesControl.max_terms must be >= 16"));
        }
        if !(self.switch_radius > 0.0) {
            return Err(Error::domain("SeriesControl.switch_radius must be > 0"));
        }
        Ok(())
    }
}

/// Order of the Caputo derivative, `0 < α ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }
}

// ---------------------------------------------------------------------------
// Gamma and Beta
// ---------------------------------------------------------------------------

/// Γ at positive integers, exact up to rounding of the product.
fn factorial_gamma(x: f64) -> Option<f64> {
    if x == x.round() && x >= 1.0 && x <= 171.0 {
        Some((2..x as u32).fold(1.0, |acc, k| acc * k as f64))
    } else {
        None
    }
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("gamma requires x > 0, got {x}")));
    }
    Ok(factorial_gamma(x).unwrap_or_else(|| sg::gamma(x)))
}

/// log Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(sg::ln_gamma(x))
}

/// B(x, y) = Γ(x)Γ(y)/Γ(x+y), evaluated through log Γ.
pub fn beta(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("beta: first argument must be > 0, got {x}")));
    }
    if !(y > 0.0) {
        return Err(Error::domain(format!("beta: second argument must be > 0, got {y}")));
    }
    if x + y < 100.0 {
        // Direct product keeps full precision for moderate arguments.
        return Ok(sg::gamma(x) * sg::gamma(y) / sg::gamma(x + y));
    }
    Ok((sg::ln_gamma(x) + sg::ln_gamma(y) - sg::ln_gamma(x + y)).exp())
}

/// Γ(x), or B(x, y) when `y` is given.
pub fn gamma_beta(x: f64, y: Option<f64>) -> Result<f64> {
    match y {
        None => gamma(x),
        Some(y) => beta(x, y),
    }
}

/// `sin(πx)` with the argument reduced first, exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == r.round() {
        return 0.0;
    }
    (PI * r).sin()
}

/// `(ln|1/Γ(x)|, sign of 1/Γ(x))` for every real x. At the poles the
/// logarithm is `-∞` and the sign 0.
pub fn ln_abs_rgamma(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (-sg::ln_gamma(x), 1.0);
    }
    // 1/Γ(x) = Γ(1-x) sin(πx) / π
    let s = sin_pi(x);
    if s == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    (sg::ln_gamma(1.0 - x) + s.abs().ln() - PI.ln(), s.signum())
}

/// 1/Γ(x), an entire function.
pub fn rgamma(x: f64) -> f64 {
    if x > 0.0 && x < 170.0 {
        return 1.0 / factorial_gamma(x).unwrap_or_else(|| sg::gamma(x));
    }
    let (l, s) = ln_abs_rgamma(x);
    if s == 0.0 {
        0.0
    } else {
        s * l.exp()
    }
}

// ---------------------------------------------------------------------------
// Mittag-Leffler
// ---------------------------------------------------------------------------

/// Largest ratio of the biggest series term to the sum that is still
/// accepted; beyond it cancellation eats more than ~12 digits.
const MAX_CANCELLATION: f64 = 1e4;

struct SeriesSum {
    sum: f64,
    max_term: f64,
    terms: usize,
    converged: bool,
}

fn ml_series(alpha: f64, beta: f64, z: f64, ctrl: &SeriesControl) -> SeriesSum {
    let lz = z.abs().ln();
    let neg = z < 0.0;
    let mut sum = 0.0;
    let mut max_term: f64 = 0.0;
    let mut prev = f64::INFINITY;
    for k in 0..ctrl.max_terms {
        let kf = k as f64;
        let mag = if k == 0 {
            rgamma(beta)
        } else {
            (kf * lz - sg::ln_gamma(alpha * kf + beta)).exp()
        };
        let term = if neg && k % 2 == 1 { -mag } else { mag };
        sum += term;
        max_term = max_term.max(mag);
        if k > 0 && mag <= prev && mag <= ctrl.abs_tol * sum.abs().max(1e-300) {
            return SeriesSum {
                sum,
                max_term,
                terms: k + 1,
                converged: true,
            };
        }
        prev = mag;
    }
    SeriesSum {
        sum,
        max_term,
        terms: ctrl.max_terms,
        converged: false,
    }
}

/// Algebraic expansion `-Σ_{k≥1} z^{-k}/Γ(β-αk)` for `z → -∞`, `0 < α < 1`,
/// truncated at its smallest term.
fn ml_asymptotic(alpha: f64, beta: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    let x = -z;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..=ctrl.max_terms.min(200) {
        let kf = k as f64;
        // z^{-k} = (-1)^k x^{-k}
        let (lr, s) = ln_abs_rgamma(beta - alpha * kf);
        if s == 0.0 {
            continue;
        }
        let mag = (lr - kf * x.ln()).exp();
        if mag > prev {
            break;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum -= sign * s * mag;
        if mag <= ctrl.abs_tol * sum.abs().max(1e-300) {
            return Ok(sum);
        }
        prev = mag;
    }
    if prev <= 1e-10 * sum.abs() {
        Ok(sum)
    } else {
        Err(Error::Evaluation {
            what: format!("asymptotic Mittag-Leffler expansion at z={z}"),
            partial_sum: sum,
            terms: 200,
        })
    }
}

/// `E_{α,1}(-x)` and `E_{α,α}(-x)`, `0 < α < 1`, `x > 0`, from the spectral
/// (complete-monotonicity) representation of the relaxation function.
///
/// With `w = v/x` and `D(w) = w² + 2w cos(απ) + 1`:
///
/// ```text
/// E_{α,1}(-x) = sin(απ)/(απ x)  ∫₀^∞ exp(-v^{1/α}) / D(w) dv
/// E_{α,α}(-x) = sin(απ)/(απ x²) ∫₀^∞ v^{1/α} exp(-v^{1/α}) / D(w) dv
/// ```
fn ml_relaxation_integral(alpha: f64, second_kind: bool, x: f64) -> Result<f64> {
    let inv = 1.0 / alpha;
    let c = (alpha * PI).cos();
    let s = (alpha * PI).sin();
    let vmax = 800f64.powf(alpha);
    let integrand = |v: f64| {
        let w = v / x;
        let d = w * w + 2.0 * w * c + 1.0;
        let e = v.powf(inv);
        let num = if second_kind { e * (-e).exp() } else { (-e).exp() };
        num / d
    };
    let mut breaks = vec![0.0, 1.0f64.min(vmax), vmax];
    if x < vmax {
        // Near-pole of 1/D at w ≈ 1 when α → 1: give it its own panels.
        let width = (s * x).max(1e-12);
        for b in [x - 4.0 * width, x, x + 4.0 * width] {
            if b > 0.0 && b < vmax {
                breaks.push(b);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let (val, _) = integrate_breaks(integrand, &breaks, QuadTol::rel(1e-13))?;
    let pref = s / (alpha * PI);
    Ok(if second_kind {
        pref * val / (x * x)
    } else {
        pref * val / x
    })
}

/// `E_{1,β}(z)` for z < 0 and any β > 0.
fn ml_alpha_one(beta: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    if beta == 1.0 {
        return Ok(z.exp());
    }
    if beta < 1.0 {
        // E_{1,β}(z) = 1/Γ(β) + z E_{1,β+1}(z)
        return Ok(rgamma(beta) + z * ml_alpha_one(beta + 1.0, z, ctrl)?);
    }
    let s = ml_series(1.0, beta, z, ctrl);
    if s.converged && s.max_term <= MAX_CANCELLATION * s.sum.abs() {
        return Ok(s.sum);
    }
    // E_{1,β}(z) = 1/Γ(β-1) ∫₀¹ e^{zs} (1-s)^{β-2} ds, β > 1
    let f = |u: f64| (z * u).exp() * (1.0 - u).powf(beta - 2.0);
    let (v, _) = integrate_breaks(f, &[0.0, 0.5, 1.0], QuadTol::rel(1e-13))?;
    Ok(v * rgamma(beta - 1.0))
}

/// The two-parameter Mittag-Leffler function `E_{α,β}(z) = Σ z^k / Γ(αk+β)`
/// for real `z`, `0 < α ≤ 1`, `β > 0`.
///
/// Positive `z` and small `|z|` use the power series. On the negative axis the
/// cases `β = 1` and `β = α` (the only ones the propagators need) switch to an
/// integral representation that holds for every `x = -z > 0`; other `β` use the
/// algebraic asymptotic expansion beyond `ctrl.switch_radius`.
pub fn mittag_leffler(alpha: f64, beta: f64, z: f64, ctrl: &SeriesControl) -> Result<f64> {
    ctrl.validate()?;
    FracOrder::new(alpha)?;
    if !(beta > 0.0) {
        return Err(Error::domain(format!("mittag_leffler: beta must be > 0, got {beta}")));
    }
    if !z.is_finite() {
        return Err(Error::domain("mittag_leffler: z must be finite"));
    }
    if z == 0.0 {
        return Ok(rgamma(beta));
    }
    if alpha == 1.0 && z < 0.0 {
        return ml_alpha_one(beta, z, ctrl);
    }
    if z > 0.0 {
        let s = ml_series(alpha, beta, z, ctrl);
        return if s.converged {
            Ok(s.sum)
        } else {
            Err(Error::Evaluation {
                what: format!("Mittag-Leffler series E_{{{alpha},{beta}}}({z})"),
                partial_sum: s.sum,
                terms: s.terms,
            })
        };
    }
    let x = -z;
    let special = beta == 1.0 || beta == alpha;
    // Near the origin the series is both cheapest and exact to rounding.
    if x <= ctrl.switch_radius && (x <= 1.0 || !special) {
        let s = ml_series(alpha, beta, z, ctrl);
        if s.converged && s.max_term <= MAX_CANCELLATION * s.sum.abs() {
            return Ok(s.sum);
        }
        if !special && x < ctrl.switch_radius {
            return Err(Error::Evaluation {
                what: format!("Mittag-Leffler series E_{{{alpha},{beta}}}({z}) lost precision"),
                partial_sum: s.sum,
                terms: s.terms,
            });
        }
    }
    if special {
        return ml_relaxation_integral(alpha, beta != 1.0, x);
    }
    ml_asymptotic(alpha, beta, z, ctrl)
}

/// `E_{α,1}(z)` with default controls.
pub fn ml1(alpha: f64, z: f64) -> Result<f64> {
    mittag_leffler(alpha, 1.0, z, &SeriesControl::default())
}

/// `E_{α,α}(z)` with default controls.
pub fn ml_alpha(alpha: f64, z: f64) -> Result<f64> {
    mittag_leffler(alpha, alpha, z, &SeriesControl::default())
}

// ---------------------------------------------------------------------------
// Subordination density
// ---------------------------------------------------------------------------

fn mainardi_series(alpha: f64, theta: f64, ctrl: &SeriesControl) -> SeriesSum {
    let lt = theta.ln();
    let mut sum = 0.0;
    let mut max_term: f64 = 0.0;
    let mut small_run = 0;
    for n in 0..ctrl.max_terms {
        let nf = n as f64;
        let (lr, s) = ln_abs_rgamma(1.0 - alpha * (nf + 1.0));
        let mag = if s == 0.0 {
            0.0
        } else {
            (nf * lt - sg::ln_gamma(nf + 1.0) + lr).exp()
        };
        let sign = if n % 2 == 0 { s } else { -s };
        sum += sign * mag;
        max_term = max_term.max(mag);
        // 1/Γ vanishes at isolated n, so ask for a few small terms in a row.
        if n > 2 && mag <= ctrl.abs_tol * sum.abs().max(1e-300) {
            small_run += 1;
            if small_run >= 3 {
                return SeriesSum {
                    sum,
                    max_term,
                    terms: n + 1,
                    converged: true,
                };
            }
        } else {
            small_run = 0;
        }
    }
    SeriesSum {
        sum,
        max_term,
        terms: ctrl.max_terms,
        converged: false,
    }
}

/// `ln(sin x / x)` for `0 ≤ x < π`, accurate to relative precision near 0.
fn ln_sinc(x: f64) -> f64 {
    if x < 0.1 {
        let x2 = x * x;
        -x2 * (1.0 / 6.0 + x2 * (1.0 / 180.0 + x2 * (1.0 / 2835.0 + x2 * (1.0 / 37800.0))))
    } else {
        (x.sin() / x).ln()
    }
}

/// Integral form of `M_α(θ)` for θ > 0 obtained from the one-sided stable law:
///
/// ```text
/// M_α(θ) = θ^{α/(1-α)} / ((1-α)π) ∫₀^π A(φ) exp(-θ^{1/(1-α)} A(φ)) dφ
/// A(φ)   = (sin αφ / sin φ)^{1/(1-α)} · sin((1-α)φ) / sin αφ
/// ```
fn mainardi_integral(alpha: f64, theta: f64) -> Result<f64> {
    let q = 1.0 / (1.0 - alpha);
    let c = theta.powf(q);
    // ln A(φ) - ln A(0+), free of cancellation near φ = 0 where c is huge.
    let ln_ratio = |phi: f64| {
        q * (ln_sinc(alpha * phi) - ln_sinc(phi)) + ln_sinc((1.0 - alpha) * phi) - ln_sinc(alpha * phi)
    };
    let a0 = alpha.powf(q) * (1.0 - alpha) / alpha;
    let integrand = |phi: f64| {
        if phi <= 0.0 || phi >= PI {
            return 0.0;
        }
        let d = ln_ratio(phi);
        (d - c * a0 * d.exp_m1()).exp()
    };
    // The mass of the integrand sits near φ = 0 when c is large.
    let mut breaks = vec![0.0];
    let scale = 1.0 / c.max(1.0).sqrt();
    let mut b = (3.0 * scale).min(PI / 2.0);
    while b < PI / 2.0 {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.extend([PI / 2.0, PI]);
    let (val, _) = integrate_breaks(integrand, &breaks, QuadTol::rel(1e-13))?;
    if val == 0.0 {
        return Ok(0.0);
    }
    let ln_m = alpha * q * theta.ln() + a0.ln() - c * a0 + val.ln() - (q.recip() * PI).ln();
    Ok(ln_m.exp())
}

/// The subordination density `h_α(θ) = M_α(θ)` (Mainardi–Wright function),
/// `0 < α < 1`, `θ ≥ 0`.
pub fn mainardi_density(alpha: f64, theta: f64, ctrl: &SeriesControl) -> Result<f64> {
    ctrl.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "mainardi_density requires 0 < alpha < 1, got {alpha}"
        )));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("mainardi_density requires theta >= 0, got {theta}")));
    }
    if theta == 0.0 {
        return Ok(rgamma(1.0 - alpha));
    }
    if theta <= 1.0 {
        let s = mainardi_series(alpha, theta, ctrl);
        if s.converged && s.max_term <= MAX_CANCELLATION * s.sum.abs() {
            return Ok(s.sum.max(0.0));
        }
    }
    mainardi_integral(alpha, theta)
}

/// `∫₀^∞ θ^δ h_α(θ) dθ = Γ(1+δ)/Γ(1+αδ)`, δ > -1.
pub fn halpha_moment(alpha: f64, delta: f64) -> Result<f64> {
    FracOrder::new(alpha)?;
    if !(delta > -1.0) {
        return Err(Error::domain(format!(
            "halpha_moment: moment of order delta={delta} <= -1 diverges"
        )));
    }
    Ok((sg::ln_gamma(1.0 + delta) - sg::ln_gamma(1.0 + alpha * delta)).exp())
}

/// `(r₁, r₂) = (E_{α,1}(-1/2), α E_{α,α}(-1/2))`, the positive constants of
/// the ODE minorant.
pub fn r_constants(alpha: f64) -> Result<(f64, f64)> {
    FracOrder::new(alpha)?;
    let r1 = ml1(alpha, -0.5)?;
    let r2 = alpha * ml_alpha(alpha, -0.5)?;
    Ok((r1, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gamma_examples() {
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-13);
        assert!(rel(gamma(5.0).unwrap(), 24.0) < 1e-13);
        assert!(rel(beta(2.0, 3.0).unwrap(), 1.0 / 12.0) < 1e-13);
        assert!(rel(gamma_beta(2.0, Some(3.0)).unwrap(), 1.0 / 12.0) < 1e-13);
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
        assert!(beta(1.0, -0.1).is_err());
        // Large arguments go through log Γ without overflow.
        let b = beta(300.0, 400.0).unwrap();
        assert!(b > 0.0 && b.is_finite());
    }

    #[test]
    fn gamma_factorials_to_twelve_digits() {
        let mut f = 1.0f64;
        for n in 1..=150u32 {
            assert!(rel(gamma(n as f64).unwrap(), f) < 1e-12, "n={n}");
            f *= n as f64;
        }
    }

    #[test]
    fn reciprocal_gamma_reflection() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        // 1/Γ(-1/2) = -1/(2√π)
        assert!(rel(rgamma(-0.5), -0.5 / PI.sqrt()) < 1e-13);
        assert!(rel(rgamma(2.5), 1.0 / gamma(2.5).unwrap()) < 1e-14);
    }

    #[test]
    fn mittag_leffler_examples() {
        let c = SeriesControl::default();
        assert!(rel(mittag_leffler(1.0, 1.0, 1.0, &c).unwrap(), std::f64::consts::E) < 1e-14);
        for a in [0.2, 0.5, 0.9] {
            assert_eq!(mittag_leffler(a, 1.0, 0.0, &c).unwrap(), 1.0);
        }
        // e·erfc(1), brute-force series value 0.42758357615580700...
        let v = mittag_leffler(0.5, 1.0, -1.0, &c).unwrap();
        assert!((v - 0.427_583_576_155_807).abs() < 1e-13, "{v}");
    }

    #[test]
    fn half_order_closed_form_on_negative_axis() {
        // E_{1/2,1}(-x) = exp(x²) erfc(x)
        use statrs::function::erf::erfc;
        let c = SeriesControl::default();
        for x in [0.3f64, 1.0, 2.5, 5.0, 9.0, 20.0] {
            let exact = (x * x).exp() * erfc(x);
            let got = mittag_leffler(0.5, 1.0, -x, &c).unwrap();
            assert!(rel(got, exact) < 1e-9, "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn relaxation_integral_matches_series_where_both_work() {
        let c = SeriesControl::default();
        for a in [0.3, 0.5, 0.75, 0.95] {
            for x in [0.8, 1.5] {
                let s1 = ml_series(a, 1.0, -x, &c);
                let s2 = ml_series(a, a, -x, &c);
                assert!(s1.converged && s2.converged);
                assert!(s1.max_term < 1e3 * s1.sum.abs());
                let i1 = ml_relaxation_integral(a, false, x).unwrap();
                let i2 = ml_relaxation_integral(a, true, x).unwrap();
                assert!(rel(i1, s1.sum) < 1e-10, "a={a} x={x}: {i1} vs {}", s1.sum);
                assert!(rel(i2, s2.sum) < 1e-10, "a={a} x={x}: {i2} vs {}", s2.sum);
            }
        }
    }

    #[test]
    fn far_negative_axis_matches_asymptotics() {
        let c = SeriesControl::default();
        for a in [0.2, 0.5, 0.8, 0.97] {
            for x in [1e4, 1e6] {
                let direct = mittag_leffler(a, 1.0, -x, &c).unwrap();
                let asym = ml_asymptotic(a, 1.0, -x, &c).unwrap();
                assert!(rel(direct, asym) < 1e-8, "a={a} x={x}");
                let direct = mittag_leffler(a, a, -x, &c).unwrap();
                let asym = ml_asymptotic(a, a, -x, &c).unwrap();
                assert!(rel(direct, asym) < 1e-8, "a={a} x={x}");
            }
        }
    }

    #[test]
    fn classical_limit_is_exponential() {
        let c = SeriesControl::default();
        for i in -50..=50 {
            let z = i as f64;
            let v = mittag_leffler(1.0, 1.0, z, &c).unwrap();
            assert!(rel(v, z.exp()) < 1e-10, "z={z}");
        }
    }

    #[test]
    fn other_beta_uses_series_or_asymptotics() {
        let c = SeriesControl::default();
        // E_{α,β} with β ∉ {1, α}: small |z| by series, large by expansion.
        let v = mittag_leffler(0.6, 2.0, -0.5, &c).unwrap();
        assert!(v > 0.0 && v < 1.0);
        let v = mittag_leffler(0.6, 2.0, -1e5, &c).unwrap();
        let lead = -(-1e5f64).recip() * rgamma(2.0 - 0.6);
        assert!(rel(v, lead) < 1e-4);
        // E_{1,2}(z) = (e^z - 1)/z
        let v = mittag_leffler(1.0, 2.0, -30.0, &c).unwrap();
        assert!(rel(v, ((-30f64).exp() - 1.0) / -30.0) < 1e-12);
    }

    #[test]
    fn mittag_leffler_rejects_bad_input() {
        let c = SeriesControl::default();
        assert!(mittag_leffler(0.0, 1.0, -1.0, &c).is_err());
        assert!(mittag_leffler(1.2, 1.0, -1.0, &c).is_err());
        assert!(mittag_leffler(0.5, 0.0, -1.0, &c).is_err());
        let bad = SeriesControl {
            max_terms: 4,
            ..c
        };
        assert!(mittag_leffler(0.5, 1.0, -1.0, &bad).is_err());
        // Too few terms for a large positive argument is an evaluation error.
        let short = SeriesControl {
            max_terms: 16,
            ..c
        };
        match mittag_leffler(0.5, 1.0, 10.0, &short) {
            Err(Error::Evaluation { terms, .. }) => assert_eq!(terms, 16),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mainardi_half_order_closed_form() {
        let c = SeriesControl::default();
        let exact = |t: f64| (-t * t / 4.0).exp() / PI.sqrt();
        assert!(rel(mainardi_density(0.5, 0.0, &c).unwrap(), 1.0 / PI.sqrt()) < 1e-14);
        for t in [0.1, 0.7, 1.0, 1.3, 2.0, 4.0, 7.5, 12.0] {
            let got = mainardi_density(0.5, t, &c).unwrap();
            assert!(rel(got, exact(t)) < 1e-10, "theta={t}: {got} vs {}", exact(t));
        }
    }

    #[test]
    fn mainardi_series_and_integral_agree() {
        let c = SeriesControl::default();
        for a in [0.1, 0.3, 0.6, 0.85] {
            for t in [0.2, 0.6, 0.95] {
                let s = mainardi_series(a, t, &c);
                assert!(s.converged);
                let i = mainardi_integral(a, t).unwrap();
                assert!(rel(i, s.sum) < 1e-10, "a={a} t={t}: {i} vs {}", s.sum);
            }
        }
    }

    #[test]
    fn mainardi_domain() {
        let c = SeriesControl::default();
        assert!(mainardi_density(1.0, 0.5, &c).is_err());
        assert!(mainardi_density(0.0, 0.5, &c).is_err());
        assert!(mainardi_density(0.5, -0.1, &c).is_err());
    }

    #[test]
    fn moment_examples() {
        assert!(rel(halpha_moment(0.5, 1.0).unwrap(), 2.0 / PI.sqrt()) < 1e-14);
        assert!(rel(halpha_moment(0.5, 2.0).unwrap(), 2.0) < 1e-14);
        assert_eq!(halpha_moment(0.3, 0.0).unwrap(), 1.0);
        assert!(halpha_moment(0.5, -1.0).is_err());
    }

    #[test]
    fn r_constants_at_classical_limit() {
        let (r1, r2) = r_constants(1.0).unwrap();
        assert!(rel(r1, (-0.5f64).exp()) < 1e-14);
        assert!(rel(r2, (-0.5f64).exp()) < 1e-14);
        let (r1, r2) = r_constants(0.5).unwrap();
        assert!(r1 > 0.0 && r2 > 0.0);
    }
}

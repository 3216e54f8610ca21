use std::f64::consts::PI;

use super::{norms, unit_ball_volume, unit_sphere_area, InitialDatum};
use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, GaussLegendre, QuadTol};
use crate::specfun::beta;

/// Mass of `B(z, σ)` as returned by [`ball_mass`]; `f64::INFINITY` marks a
/// density that is not integrable on the ball.
pub type Mass = f64;

/// `∫₀^v u^{N-1} (1+u)^{-A} du`.
fn decaying_profile_integral(dim: usize, a: f64, v: f64) -> f64 {
    if v < 1.0 {
        let rule = GaussLegendre::new(24);
        return rule.integrate(0.0, v, |u| u.powi(dim as i32 - 1) * (1.0 + u).powf(-a));
    }
    // Binomial expansion of ((1+u) - 1)^{N-1}.
    let m = dim - 1;
    let w = 1.0 + v;
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=m {
        let e = k as f64 - a + 1.0;
        let piece = if e.abs() < 1e-12 {
            w.ln()
        } else {
            (w.powf(e) - 1.0) / e
        };
        let sign = if (m - k) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * piece;
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    total
}

/// Exact mass of `B(0, σ)` for the radial families.
fn centered_mass(d: &InitialDatum, dim: usize, sigma: f64) -> f64 {
    let n = dim as f64;
    match d {
        InitialDatum::DiracApprox { j, kappa } => {
            let r = InitialDatum::dirac_radius(dim, *j);
            kappa * (sigma.min(r) / r).powf(n)
        }
        InitialDatum::LogSingular { eps, kappa, shift } => {
            let b1 = n / 2.0 - eps;
            let u = ((1.0 / sigma).ln() + shift).max(1.0);
            kappa * unit_sphere_area(dim) * u.powf(-b1) / b1
        }
        InitialDatum::PowerLaw { kappa, p } => {
            let a = 2.0 / (p - 1.0);
            if a >= n {
                f64::INFINITY
            } else {
                kappa * unit_sphere_area(dim) * sigma.powf(n - a) / (n - a)
            }
        }
        InitialDatum::Decaying { kappa, a, scale } => {
            kappa * unit_sphere_area(dim) * scale.powf(n) * decaying_profile_integral(dim, *a, sigma / scale)
        }
        InitialDatum::Constant { c } => c * unit_ball_volume(dim) * sigma.powf(n),
        InitialDatum::GridDensity { .. } => unreachable!("gridded data have no closed form"),
    }
}

/// Measure of the sphere `|x| = r` inside the ball `B(z, σ)`, `|z| = dist`.
fn sphere_in_ball(dim: usize, r: f64, dist: f64, sigma: f64) -> f64 {
    if r + dist <= sigma {
        return unit_sphere_area(dim) * r.powi(dim as i32 - 1);
    }
    if r >= sigma + dist || r <= dist - sigma {
        return 0.0;
    }
    if dim == 1 {
        // The points ±r; only +r (toward the center) can be inside here.
        return if (r - dist).abs() < sigma { 1.0 } else { 0.0 };
    }
    let cos = ((r * r + dist * dist - sigma * sigma) / (2.0 * r * dist)).clamp(-1.0, 1.0);
    match dim {
        2 => 2.0 * r * cos.acos(),
        _ => 2.0 * PI * r * r * (1.0 - cos),
    }
}

fn off_center_mass(d: &InitialDatum, dim: usize, dist: f64, sigma: f64) -> Result<f64> {
    if dist == 0.0 {
        return Ok(centered_mass(d, dim, sigma));
    }
    let (inner, lo) = if dist < sigma {
        (centered_mass(d, dim, sigma - dist), sigma - dist)
    } else {
        if let InitialDatum::PowerLaw { p, .. } = d {
            if dist == sigma && 2.0 / (p - 1.0) >= dim as f64 {
                return Ok(f64::INFINITY);
            }
        }
        (0.0, dist - sigma)
    };
    if !inner.is_finite() {
        return Ok(inner);
    }
    let hi = sigma + dist;
    let (mut inner, mut lo) = (inner, lo);
    if d.is_singular() && lo < 1e-6 * hi {
        // The ball nearly touches the singularity: the sphere fraction is
        // close to its tangent-plane value on [lo, ρ], so use the exact
        // shell mass times that fraction there.
        let rho = 1e-6 * hi;
        let frac = sphere_in_ball(dim, rho, dist, sigma) / (unit_sphere_area(dim) * rho.powi(dim as i32 - 1));
        let shell = centered_mass(d, dim, rho) - if lo > 0.0 { centered_mass(d, dim, lo) } else { 0.0 };
        if !shell.is_finite() {
            return Ok(f64::INFINITY);
        }
        inner += frac * shell;
        lo = rho;
    }
    let mut breaks = vec![lo, hi];
    breaks.extend(d.radial_breaks(dim).into_iter().filter(|&b| b > lo && b < hi));
    breaks.sort_by(f64::total_cmp);
    let f = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        d.radial_density(dim, r).unwrap_or(0.0) * sphere_in_ball(dim, r, dist, sigma)
    };
    let (shell, _) = integrate_breaks(f, &breaks, QuadTol::rel(1e-10))?;
    Ok(inner + shell)
}

fn norm(center: &[f64]) -> f64 {
    center.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("ball radius must be > 0, got {sigma}")))
    }
}

/// `μ(B(center, σ))`. Exact for radial families centered at the origin,
/// radial quadrature off center, partial-cell sums for gridded data.
pub fn ball_mass(d: &InitialDatum, dim: usize, center: &[f64], sigma: f64) -> Result<Mass> {
    check_sigma(sigma)?;
    d.validate(dim)?;
    if let InitialDatum::GridDensity { field } = d {
        return Ok(norms::grid_ball_sum(field, center, sigma, 1.0));
    }
    off_center_mass(d, dim, norm(center), sigma)
}

/// `sup_z μ(B(z, σ))`.
pub fn sup_ball_mass(d: &InitialDatum, dim: usize, sigma: f64) -> Result<Mass> {
    check_sigma(sigma)?;
    d.validate(dim)?;
    match d {
        InitialDatum::GridDensity { field } => {
            let sums = norms::ball_integrals(field, 1.0, sigma)?;
            Ok(sums.sup())
        }
        InitialDatum::LogSingular { shift, eps, .. } => {
            // The profile increases again just inside the edge of its support
            // (where the log bracket is below N/2+1-ε), so scan centers.
            let edge = (shift - 1.0).exp();
            let b = dim as f64 / 2.0 + 1.0 - eps;
            let bump = (shift - b).exp();
            let mut best = centered_mass(d, dim, sigma);
            let lo = (bump - sigma).max(0.0);
            // Off-center balls meet densities of at most κ lo^{-N}; skip the
            // scan when that cannot beat the centered ball.
            if let InitialDatum::LogSingular { kappa, .. } = d {
                let bound = kappa * lo.powi(-(dim as i32)) * unit_ball_volume(dim) * sigma.powi(dim as i32);
                if lo > 0.0 && bound <= best {
                    return Ok(best);
                }
            }
            let hi = edge + sigma;
            let steps = 48;
            let mut arg = 0.0;
            for k in 1..=steps {
                let z = lo + (hi - lo) * k as f64 / steps as f64;
                let m = off_center_mass(d, dim, z, sigma)?;
                if m > best {
                    best = m;
                    arg = z;
                }
            }
            if arg > 0.0 {
                // Golden-section polish around the best scanned center.
                let w = (hi - lo) / steps as f64;
                let (mut a, mut c) = ((arg - w).max(0.0), arg + w);
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..30 {
                    let x1 = c - g * (c - a);
                    let x2 = a + g * (c - a);
                    let (m1, m2) = (off_center_mass(d, dim, x1, sigma)?, off_center_mass(d, dim, x2, sigma)?);
                    best = best.max(m1).max(m2);
                    if m1 > m2 {
                        c = x2;
                    } else {
                        a = x1;
                    }
                }
            }
            Ok(best)
        }
        _ => Ok(centered_mass(d, dim, sigma)),
    }
}

/// `μ(R^N)`; infinite for data that are not integrable at the origin or at
/// infinity.
pub fn total_mass(d: &InitialDatum, dim: usize) -> Result<Mass> {
    d.validate(dim)?;
    let n = dim as f64;
    Ok(match d {
        InitialDatum::DiracApprox { kappa, .. } => *kappa,
        InitialDatum::LogSingular { eps, kappa, .. } => kappa * unit_sphere_area(dim) / (n / 2.0 - eps),
        InitialDatum::PowerLaw { .. } => f64::INFINITY,
        InitialDatum::Decaying { kappa, a, scale } => {
            if *a <= n {
                f64::INFINITY
            } else {
                kappa * unit_sphere_area(dim) * scale.powf(n) * beta(n, a - n)?
            }
        }
        InitialDatum::Constant { c } => {
            if *c == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        }
        InitialDatum::GridDensity { field } => field.integral(),
    })
}

/// `sup_z ∫_{B(z,σ)} μ^r`. The radial families are radially nonincreasing
/// apart from `LogSingular`, whose `r`-th power is never locally integrable
/// for `r > 1`; infinite values mark non-integrability.
pub fn sup_ball_power_integral(d: &InitialDatum, dim: usize, sigma: f64, r: f64) -> Result<f64> {
    check_sigma(sigma)?;
    d.validate(dim)?;
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::domain(format!("integrability exponent must be >= 1, got {r}")));
    }
    let n = dim as f64;
    Ok(match d {
        InitialDatum::DiracApprox { j, kappa } => {
            let rj = InitialDatum::dirac_radius(dim, *j);
            (kappa * j).powf(r) * unit_ball_volume(dim) * sigma.min(rj).powf(n)
        }
        InitialDatum::LogSingular { .. } => {
            if r == 1.0 {
                sup_ball_mass(d, dim, sigma)?
            } else {
                f64::INFINITY
            }
        }
        InitialDatum::PowerLaw { kappa, p } => {
            let a = 2.0 / (p - 1.0) * r;
            if a >= n {
                f64::INFINITY
            } else {
                kappa.powf(r) * unit_sphere_area(dim) * sigma.powf(n - a) / (n - a)
            }
        }
        InitialDatum::Decaying { kappa, a, scale } => {
            kappa.powf(r) * unit_sphere_area(dim) * scale.powf(n) * decaying_profile_integral(dim, a * r, sigma / scale)
        }
        InitialDatum::Constant { c } => c.powf(r) * unit_ball_volume(dim) * sigma.powf(n),
        InitialDatum::GridDensity { field } => norms::ball_integrals(field, r, sigma)?.sup(),
    })
}

//! Initial data families, their exact ball masses, sampling onto grids and
//! the uniformly local and Morrey norms.

mod mass;
mod norms;
mod sampling;

pub use mass::{ball_mass, sup_ball_mass, sup_ball_power_integral, total_mass, Mass};
pub use norms::{ball_integrals, morrey_norm, uloc_norm};
pub use sampling::{resample, resolution_warning, sample_on_grid};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::propagator::Field;
use crate::specfun::gamma;

/// Volume of the unit ball in `R^N`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    PI.powf(dim as f64 / 2.0) / gamma(dim as f64 / 2.0 + 1.0).expect("positive argument")
}

/// Surface measure of the unit sphere in `R^N`, `N ω_N`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

/// Position of the nonlinearity power relative to the Fujita exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

/// `(N, p, α)` of the problem `∂_t^α u - Δu = u^p` in `R^N`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub p: f64,
    pub alpha: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, p: f64, alpha: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::domain(format!("N must be 1, 2 or 3, got {dim}")));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::domain(format!("p must be > 1, got {p}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Self { dim, p, alpha })
    }

    /// Fujita exponent `1 + 2/N`.
    pub fn fujita(&self) -> f64 {
        1.0 + 2.0 / self.dim as f64
    }

    pub fn regime(&self) -> Regime {
        let pf = self.fujita();
        if (self.p - pf).abs() <= 1e-12 {
            Regime::Critical
        } else if self.p < pf {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }

    /// Exponent `N - 2/(p-1)` of the ball-mass condition.
    pub fn mass_exponent(&self) -> f64 {
        self.dim as f64 - 2.0 / (self.p - 1.0)
    }

    /// Amplitude exponent of the dilation `u ↦ λ^{2α/(p-1)} u(λ^α x, λ² t)`.
    pub fn amplitude_exponent(&self) -> f64 {
        2.0 * self.alpha / (self.p - 1.0)
    }
}

/// The initial data of the problem.
///
/// `LogSingular` and `Decaying` carry an extra dilation parameter (`shift`,
/// `scale`) and `DiracApprox` takes a real `j`, so that every parametric
/// family is closed under the problem's scaling; the plain families are
/// `shift = 0`, `scale = 1` and integer `j`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDatum {
    /// `κ j 1_{B(0, r_j)}` with `r_j = (j ω_N)^{-1/N}`; total mass κ.
    DiracApprox { j: f64, kappa: f64 },
    /// `κ |x|^{-N} (log(1/|x|) + shift)^{-N/2-1+ε}` where the bracket is ≥ 1.
    LogSingular { eps: f64, kappa: f64, shift: f64 },
    /// `κ |x|^{-2/(p-1)}`.
    PowerLaw { kappa: f64, p: f64 },
    /// `κ (1 + |x|/scale)^{-A}`.
    Decaying { kappa: f64, a: f64, scale: f64 },
    Constant { c: f64 },
    GridDensity { field: Field },
}

impl InitialDatum {
    pub fn dirac(j: f64, kappa: f64) -> Self {
        Self::DiracApprox { j, kappa }
    }

    pub fn log_singular(eps: f64, kappa: f64) -> Self {
        Self::LogSingular {
            eps,
            kappa,
            shift: 0.0,
        }
    }

    pub fn power_law(kappa: f64, p: f64) -> Self {
        Self::PowerLaw { kappa, p }
    }

    pub fn decaying(kappa: f64, a: f64) -> Self {
        Self::Decaying {
            kappa,
            a,
            scale: 1.0,
        }
    }

    /// Tag used in config files.
    pub fn family(&self) -> &'static str {
        match self {
            Self::DiracApprox { .. } => "dirac_approx",
            Self::LogSingular { .. } => "log_singular",
            Self::PowerLaw { .. } => "power_law",
            Self::Decaying { .. } => "decaying",
            Self::Constant { .. } => "constant",
            Self::GridDensity { .. } => "grid_density",
        }
    }

    /// Checks the parameter ranges in dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{}: {name} must be > 0, got {v}", self.family())))
            }
        };
        match self {
            Self::DiracApprox { j, kappa } => {
                pos("j", *j)?;
                pos("kappa", *kappa)
            }
            Self::LogSingular { eps, kappa, shift } => {
                if !(*eps > 0.0 && *eps < dim as f64 / 2.0) {
                    return Err(Error::domain(format!(
                        "log_singular: eps must lie in (0, N/2) = (0, {}), got {eps}",
                        dim as f64 / 2.0
                    )));
                }
                if !shift.is_finite() {
                    return Err(Error::domain("log_singular: shift must be finite"));
                }
                pos("kappa", *kappa)
            }
            Self::PowerLaw { kappa, p } => {
                if !(*p > 1.0) {
                    return Err(Error::domain(format!("power_law: p must be > 1, got {p}")));
                }
                pos("kappa", *kappa)
            }
            Self::Decaying { kappa, a, scale } => {
                pos("kappa", *kappa)?;
                pos("A", *a)?;
                pos("scale", *scale)
            }
            Self::Constant { c } => {
                if *c >= 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!("constant: c must be >= 0, got {c}")))
                }
            }
            Self::GridDensity { field } => {
                if field.grid().dim() != dim {
                    return Err(Error::domain(format!(
                        "grid_density lives in dimension {}, problem has N={dim}",
                        field.grid().dim()
                    )));
                }
                if field.inf() < 0.0 {
                    return Err(Error::domain("grid_density must be nonnegative"));
                }
                Ok(())
            }
        }
    }

    /// The amplitude `κ` (or `c`); `None` for gridded data.
    pub fn kappa(&self) -> Option<f64> {
        match self {
            Self::DiracApprox { kappa, .. }
            | Self::LogSingular { kappa, .. }
            | Self::PowerLaw { kappa, .. }
            | Self::Decaying { kappa, .. } => Some(*kappa),
            Self::Constant { c } => Some(*c),
            Self::GridDensity { .. } => None,
        }
    }

    /// The same datum multiplied by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut d = self.clone();
        match &mut d {
            Self::DiracApprox { kappa, .. }
            | Self::LogSingular { kappa, .. }
            | Self::PowerLaw { kappa, .. }
            | Self::Decaying { kappa, .. } => *kappa *= factor,
            Self::Constant { c } => *c *= factor,
            Self::GridDensity { field } => *field = field.scaled(factor),
        }
        d
    }

    /// The same family with amplitude replaced by `kappa`.
    pub fn with_kappa(&self, kappa: f64) -> Self {
        let mut d = self.clone();
        match &mut d {
            Self::DiracApprox { kappa: k, .. }
            | Self::LogSingular { kappa: k, .. }
            | Self::PowerLaw { kappa: k, .. }
            | Self::Decaying { kappa: k, .. } => *k = kappa,
            Self::Constant { c } => *c = kappa,
            Self::GridDensity { .. } => {}
        }
        d
    }

    /// `amp · d(mu · x)`, computed within the family. Gridded data are
    /// resampled onto their own grid.
    pub fn dilate(&self, dim: usize, amp: f64, mu: f64) -> Result<Self> {
        if !(amp > 0.0 && mu > 0.0) {
            return Err(Error::domain(format!("dilation needs amp > 0 and mu > 0, got {amp}, {mu}")));
        }
        self.dilate_log(dim, amp.ln(), mu.ln())
    }

    /// [`InitialDatum::dilate`] with `ln amp` and `ln mu`, for dilations far
    /// outside the floating-point range.
    pub fn dilate_log(&self, dim: usize, ln_amp: f64, ln_mu: f64) -> Result<Self> {
        let n = dim as f64;
        let d = match self {
            Self::DiracApprox { j, kappa } => Self::DiracApprox {
                j: j * (n * ln_mu).exp(),
                kappa: kappa * (ln_amp - n * ln_mu).exp(),
            },
            Self::LogSingular { eps, kappa, shift } => Self::LogSingular {
                eps: *eps,
                kappa: kappa * (ln_amp - n * ln_mu).exp(),
                shift: shift - ln_mu,
            },
            Self::PowerLaw { kappa, p } => Self::PowerLaw {
                kappa: kappa * (ln_amp - 2.0 / (p - 1.0) * ln_mu).exp(),
                p: *p,
            },
            Self::Decaying { kappa, a, scale } => Self::Decaying {
                kappa: kappa * ln_amp.exp(),
                a: *a,
                scale: scale * (-ln_mu).exp(),
            },
            Self::Constant { c } => Self::Constant { c: c * ln_amp.exp() },
            Self::GridDensity { field } => Self::GridDensity {
                field: sampling::dilate_field(field, ln_amp.exp(), ln_mu.exp())?,
            },
        };
        d.validate(dim).map_err(|e| Error::domain(format!("dilation left the family's range: {e}")))?;
        Ok(d)
    }

    /// Radius `r_j` of the Dirac approximant.
    pub fn dirac_radius(dim: usize, j: f64) -> f64 {
        (j * unit_ball_volume(dim)).powf(-1.0 / dim as f64)
    }

    /// Pointwise value of a radial family at distance `r` from the origin.
    /// `None` for gridded data.
    pub fn radial_density(&self, dim: usize, r: f64) -> Option<f64> {
        let n = dim as f64;
        Some(match self {
            Self::DiracApprox { j, kappa } => {
                if r < Self::dirac_radius(dim, *j) {
                    kappa * j
                } else {
                    0.0
                }
            }
            Self::LogSingular { eps, kappa, shift } => {
                if r <= 0.0 {
                    return Some(f64::INFINITY);
                }
                let u = (1.0 / r).ln() + shift;
                if u >= 1.0 {
                    kappa * r.powf(-n) * u.powf(-(n / 2.0 + 1.0 - eps))
                } else {
                    0.0
                }
            }
            Self::PowerLaw { kappa, p } => kappa * r.powf(-2.0 / (p - 1.0)),
            Self::Decaying { kappa, a, scale } => kappa * (1.0 + r / scale).powf(-a),
            Self::Constant { c } => *c,
            Self::GridDensity { .. } => return None,
        })
    }

    /// Radii at which the density has a jump or kink, in increasing order.
    pub(crate) fn radial_breaks(&self, dim: usize) -> Vec<f64> {
        match self {
            Self::DiracApprox { j, .. } => vec![Self::dirac_radius(dim, *j)],
            Self::LogSingular { shift, .. } => vec![(shift - 1.0).exp()],
            _ => vec![],
        }
    }

    /// Whether the density is singular (unbounded) at the origin.
    pub fn is_singular(&self) -> bool {
        matches!(self, Self::LogSingular { .. } | Self::PowerLaw { .. })
    }
}

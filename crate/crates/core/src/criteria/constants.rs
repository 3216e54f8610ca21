use serde::Serialize;

use crate::config::KvDoc;
use crate::datum::{ProblemParams, Regime};
use crate::error::{Error, Result};
use crate::specfun::beta;

/// Default smallness factor in the explicit sufficient-side constants.
pub const DEFAULT_C_STAR: f64 = 0.25;

/// Explicit constants of the sufficient conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaConstants {
    pub c_star: f64,
    /// Mass constant for `p ≤ p_F`.
    pub gamma2: Option<f64>,
    /// Morrey constant for `p > p_F`.
    pub gamma3: Option<f64>,
    /// Integrability exponent and auxiliary exponent of the Morrey branch.
    pub r: Option<f64>,
    pub q: Option<f64>,
    /// `γ₂ / (1-α)^{N/2}` at `p = p_F`.
    pub critical_ratio: Option<f64>,
}

/// Midpoint of the admissible range `1 < r < N(p-1)/2`.
pub fn default_r(params: &ProblemParams) -> f64 {
    0.5 * (1.0 + params.dim as f64 * (params.p - 1.0) / 2.0)
}

/// Checks `1 < r` and `2r/(p-1) < N`.
pub fn check_r(params: &ProblemParams, r: f64) -> Result<()> {
    if !(r > 1.0) {
        return Err(Error::domain(format!("r must be > 1, got {r}")));
    }
    if !(2.0 * r / (params.p - 1.0) < params.dim as f64) {
        return Err(Error::domain(format!(
            "r = {r} violates 2r/(p-1) < N (needs r < {})",
            params.dim as f64 * (params.p - 1.0) / 2.0
        )));
    }
    Ok(())
}

/// The auxiliary exponent: `p(1+r)/2` when admissible, otherwise the
/// midpoint of the admissible interval. Admissible means `1 < q/p < r < q`
/// and a positive second Beta argument.
pub fn auxiliary_q(params: &ProblemParams, r: f64) -> Result<f64> {
    let (p, a) = (params.p, params.alpha);
    let lower = p.max(r);
    let mut upper = p * r;
    let s = (p - 1.0) / (p * a);
    if s < 1.0 {
        upper = upper.min(r / (1.0 - s));
    }
    if !(lower < upper) {
        return Err(Error::domain(format!(
            "no admissible q for p={p}, r={r}, alpha={a}: need max(p, r) < q < {upper}"
        )));
    }
    let q = p * (1.0 + r) / 2.0;
    Ok(if q > lower && q < upper {
        q
    } else {
        0.5 * (lower + upper)
    })
}

/// `γ₂ = c_* B(α - (Nα/2)(1-1/p), 1 - (Nα/2)(p-1))^{-1/(p-1)}` for `p ≤ p_F`,
/// `γ₃ = c_* B(α(1-r/q), 1 - (pα/(p-1))(1-r/q))^{-1/(p-1)}` for `p > p_F`.
pub fn gamma_constants(params: &ProblemParams, c_star: f64, r: Option<f64>) -> Result<GammaConstants> {
    if !(c_star > 0.0) {
        return Err(Error::domain(format!("c_star must be > 0, got {c_star}")));
    }
    let n = params.dim as f64;
    let (p, a) = (params.p, params.alpha);
    let mut out = GammaConstants {
        c_star,
        gamma2: None,
        gamma3: None,
        r: None,
        q: None,
        critical_ratio: None,
    };
    if params.regime() == Regime::Supercritical {
        let r = r.unwrap_or_else(|| default_r(params));
        check_r(params, r)?;
        let q = auxiliary_q(params, r)?;
        let x = a * (1.0 - r / q);
        let y = 1.0 - p * a / (p - 1.0) * (1.0 - r / q);
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::domain(format!(
                "gamma3: Beta arguments ({x}, {y}) must be positive; 1 - (p alpha/(p-1))(1 - r/q) <= 0"
            )));
        }
        out.gamma3 = Some(c_star * beta(x, y)?.powf(-1.0 / (p - 1.0)));
        out.r = Some(r);
        out.q = Some(q);
    } else {
        let x = a - n * a / 2.0 * (1.0 - 1.0 / p);
        let y = 1.0 - n * a / 2.0 * (p - 1.0);
        if !(x > 0.0) {
            return Err(Error::domain(format!(
                "gamma2: first Beta argument alpha - (N alpha/2)(1 - 1/p) = {x} must be positive"
            )));
        }
        if !(y > 0.0) {
            return Err(Error::domain(format!(
                "gamma2: second Beta argument 1 - (N alpha/2)(p - 1) = {y} must be positive"
            )));
        }
        let g2 = c_star * beta(x, y)?.powf(-1.0 / (p - 1.0));
        out.gamma2 = Some(g2);
        if params.regime() == Regime::Critical {
            out.critical_ratio = Some(g2 / (1.0 - a).powf(n / 2.0));
        }
    }
    Ok(out)
}

/// Calibrated necessary-side constants for one `(N, p, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub dim: usize,
    pub p: f64,
    pub alpha: f64,
    /// Ball-mass constant of the general necessary condition.
    pub gamma1: f64,
    /// Constant of the critical (`p = p_F`) necessary condition.
    pub gamma1_critical: Option<f64>,
}

/// The versioned constants file.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedConstants {
    pub version: u32,
    pub date: String,
    pub suite_hash: String,
    pub c_star: f64,
    pub entries: Vec<CalibrationEntry>,
}

const EMBEDDED: &str = include_str!("constants.txt");

fn section_name(e: &CalibrationEntry) -> String {
    format!("N={} p={} alpha={}", e.dim, e.p, e.alpha)
}

fn parse_section_name(name: &str) -> Result<(usize, f64, f64)> {
    let mut dim = None;
    let mut p = None;
    let mut alpha = None;
    for part in name.split_whitespace() {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad constants section `{name}`")))?;
        let bad = || Error::Config(format!("bad value in constants section `{name}`"));
        match k {
            "N" => dim = Some(v.parse::<usize>().map_err(|_| bad())?),
            "p" => p = Some(v.parse::<f64>().map_err(|_| bad())?),
            "alpha" => alpha = Some(v.parse::<f64>().map_err(|_| bad())?),
            _ => return Err(Error::Config(format!("unknown key `{k}` in section `{name}`"))),
        }
    }
    match (dim, p, alpha) {
        (Some(d), Some(p), Some(a)) => Ok((d, p, a)),
        _ => Err(Error::Config(format!("constants section `{name}` needs N, p and alpha"))),
    }
}

impl CalibratedConstants {
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let version = doc
            .get("", "version")
            .ok_or_else(|| Error::Config("constants file lacks `version`".into()))?
            .parse::<u32>()
            .map_err(|_| Error::Config("constants `version` must be an integer".into()))?;
        let date = doc.get("", "date").unwrap_or("").to_string();
        let suite_hash = doc.get("", "suite_hash").unwrap_or("").to_string();
        let c_star = doc.get_f64("", "c_star")?.unwrap_or(DEFAULT_C_STAR);
        let mut entries = Vec::new();
        for (name, _) in doc.sections() {
            if name.is_empty() {
                continue;
            }
            let (dim, p, alpha) = parse_section_name(name)?;
            for k in doc.keys(name) {
                if !matches!(k, "gamma1" | "gamma1_critical") {
                    return Err(Error::Config(format!("unknown constant `{k}` in [{name}]")));
                }
            }
            let gamma1 = doc
                .get_f64(name, "gamma1")?
                .ok_or_else(|| Error::Config(format!("[{name}] lacks gamma1")))?;
            entries.push(CalibrationEntry {
                dim,
                p,
                alpha,
                gamma1,
                gamma1_critical: doc.get_f64(name, "gamma1_critical")?,
            });
        }
        Ok(Self {
            version,
            date,
            suite_hash,
            c_star,
            entries,
        })
    }

    /// The constants shipped with the library.
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED).expect("embedded constants file is well formed")
    }

    pub fn render(&self) -> String {
        let mut doc = KvDoc::new();
        doc.set("", "version", self.version);
        doc.set("", "date", &self.date);
        doc.set("", "suite_hash", &self.suite_hash);
        doc.set("", "c_star", self.c_star);
        for e in &self.entries {
            let s = section_name(e);
            doc.set(&s, "gamma1", format!("{:.9e}", e.gamma1));
            if let Some(g) = e.gamma1_critical {
                doc.set(&s, "gamma1_critical", format!("{g:.9e}"));
            }
        }
        let header = "# Calibrated necessary-side constants.\n\
             # gamma1: smallest ball-mass constant not exceeded by any datum the\n\
             # solver integrates on the calibration suite while resolving its\n\
             # worst ball (radius >= one grid cell), raised to the bound\n\
             # implied by the sufficient condition (gamma2, or gamma3 omega_N^(1-1/r)\n\
             # with the default r and q = p(1+r)/2 clipped to 1 < q/p < r < q).\n\
             # gamma1_critical: the same for the p = p_F condition.\n";
        format!("{header}{}", doc.render())
    }

    /// `version/suite_hash`, recorded in run manifests.
    pub fn tag(&self) -> String {
        format!("v{}/{}", self.version, self.suite_hash)
    }

    pub fn lookup(&self, params: &ProblemParams) -> Option<&CalibrationEntry> {
        self.entries.iter().find(|e| {
            e.dim == params.dim && (e.p - params.p).abs() < 1e-9 && (e.alpha - params.alpha).abs() < 1e-9
        })
    }

    /// All entries in dimension `dim` at the Fujita exponent.
    pub fn critical_entries(&self, dim: usize) -> impl Iterator<Item = &CalibrationEntry> {
        let pf = 1.0 + 2.0 / dim as f64;
        self.entries
            .iter()
            .filter(move |e| e.dim == dim && (e.p - pf).abs() < 1e-9)
    }
}

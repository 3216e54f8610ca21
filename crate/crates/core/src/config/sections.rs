//! Readers and writers for the `[problem]`, `[datum]`, `[grid]` and
//! `[solver]` sections shared by experiment specs, CLI configs and run
//! manifests. Every reader rejects keys it does not know.

use std::path::Path;

use super::KvDoc;
use crate::datum::{InitialDatum, ProblemParams};
use crate::error::{Error, Result};
use crate::propagator::{Field, Grid};
use crate::solver::{KernelRule, SolverConfig};

/// Fails on any key of `section` outside `allowed`.
pub fn check_keys(doc: &KvDoc, section: &str, allowed: &[&str]) -> Result<()> {
    for k in doc.keys(section) {
        if !allowed.contains(&k) {
            let shown = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
            return Err(Error::Config(format!(
                "unknown key `{k}` in {shown} (allowed: {})",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

pub fn require<'a>(doc: &'a KvDoc, section: &str, key: &str) -> Result<&'a str> {
    doc.get(section, key)
        .ok_or_else(|| Error::Config(format!("[{section}] is missing `{key}`")))
}

pub fn require_f64(doc: &KvDoc, section: &str, key: &str) -> Result<f64> {
    doc.get_f64(section, key)?
        .ok_or_else(|| Error::Config(format!("[{section}] is missing `{key}`")))
}

pub fn get_usize(doc: &KvDoc, section: &str, key: &str) -> Result<Option<usize>> {
    doc.get(section, key)
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("[{section}] {key}: `{v}` is not a nonnegative integer")))
        })
        .transpose()
}

pub fn get_bool(doc: &KvDoc, section: &str, key: &str) -> Result<Option<bool>> {
    doc.get(section, key)
        .map(|v| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(Error::Config(format!("[{section}] {key}: `{v}` is not true/false"))),
        })
        .transpose()
}

/// Tags the offending key onto a domain error from a constructor.
fn keyed(section: &str, e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(format!("[{section}] {m}")),
        other => other,
    }
}

pub const PROBLEM_KEYS: &[&str] = &["N", "p", "alpha"];

pub fn read_params(doc: &KvDoc, section: &str) -> Result<ProblemParams> {
    check_keys(doc, section, PROBLEM_KEYS)?;
    let dim = get_usize(doc, section, "N")?.ok_or_else(|| Error::Config(format!("[{section}] is missing `N`")))?;
    let p = require_f64(doc, section, "p")?;
    let alpha = require_f64(doc, section, "alpha")?;
    ProblemParams::new(dim, p, alpha).map_err(|e| keyed(section, e))
}

pub fn write_params(doc: &mut KvDoc, section: &str, params: &ProblemParams) {
    doc.set(section, "N", params.dim);
    doc.set(section, "p", params.p);
    doc.set(section, "alpha", params.alpha);
}

/// Keys allowed in a datum section for `family`.
pub fn datum_keys(family: &str) -> Result<&'static [&'static str]> {
    Ok(match family {
        "dirac_approx" => &["family", "j", "kappa"],
        "log_singular" => &["family", "eps", "kappa", "shift"],
        "power_law" => &["family", "kappa", "p"],
        "decaying" => &["family", "kappa", "A", "scale"],
        "constant" => &["family", "c"],
        "grid_density" => &["family", "file", "half_width", "points"],
        other => {
            return Err(Error::Config(format!(
                "unknown datum family `{other}` (expected dirac_approx, log_singular, power_law, decaying, constant or grid_density)"
            )))
        }
    })
}

/// Reads a datum. `grid_density` loads whitespace-separated cell values
/// (row-major, last axis fastest) from `file`, resolved against `base`.
pub fn read_datum(doc: &KvDoc, section: &str, dim: usize, base: Option<&Path>) -> Result<InitialDatum> {
    let family = require(doc, section, "family")?;
    check_keys(doc, section, datum_keys(family)?)?;
    let f = |k: &str| require_f64(doc, section, k);
    let d = match family {
        "dirac_approx" => InitialDatum::dirac(f("j")?, f("kappa")?),
        "log_singular" => InitialDatum::LogSingular {
            eps: f("eps")?,
            kappa: f("kappa")?,
            shift: doc.get_f64(section, "shift")?.unwrap_or(0.0),
        },
        "power_law" => InitialDatum::power_law(f("kappa")?, f("p")?),
        "decaying" => InitialDatum::Decaying {
            kappa: f("kappa")?,
            a: f("A")?,
            scale: doc.get_f64(section, "scale")?.unwrap_or(1.0),
        },
        "constant" => InitialDatum::Constant { c: f("c")? },
        "grid_density" => {
            let file = require(doc, section, "file")?;
            let path = match base {
                Some(b) if Path::new(file).is_relative() => b.join(file),
                _ => Path::new(file).to_path_buf(),
            };
            let n = get_usize(doc, section, "points")?
                .ok_or_else(|| Error::Config(format!("[{section}] is missing `points`")))?;
            let grid = Grid::new(dim, f("half_width")?, n).map_err(|e| keyed(section, e))?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("[{section}] file `{}`: {e}", path.display())))?;
            let values = text
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Config(format!("[{section}] file: `{t}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            InitialDatum::GridDensity {
                field: Field::new(grid, values).map_err(|e| keyed(section, e))?,
            }
        }
        _ => unreachable!("family checked by datum_keys"),
    };
    d.validate(dim).map_err(|e| keyed(section, e))?;
    Ok(d)
}

/// Writes a parametric datum. Gridded data cannot be written inline.
pub fn write_datum(doc: &mut KvDoc, section: &str, d: &InitialDatum) -> Result<()> {
    doc.set(section, "family", d.family());
    match d {
        InitialDatum::DiracApprox { j, kappa } => {
            doc.set(section, "j", j);
            doc.set(section, "kappa", kappa);
        }
        InitialDatum::LogSingular { eps, kappa, shift } => {
            doc.set(section, "eps", eps);
            doc.set(section, "kappa", kappa);
            doc.set(section, "shift", shift);
        }
        InitialDatum::PowerLaw { kappa, p } => {
            doc.set(section, "kappa", kappa);
            doc.set(section, "p", p);
        }
        InitialDatum::Decaying { kappa, a, scale } => {
            doc.set(section, "kappa", kappa);
            doc.set(section, "A", a);
            doc.set(section, "scale", scale);
        }
        InitialDatum::Constant { c } => doc.set(section, "c", c),
        InitialDatum::GridDensity { .. } => {
            return Err(Error::Config("grid_density data are referenced by file and cannot be written inline".into()))
        }
    }
    Ok(())
}

pub const GRID_KEYS: &[&str] = &["half_width", "points"];

pub fn read_grid(doc: &KvDoc, section: &str, dim: usize, default: (f64, usize)) -> Result<Grid> {
    check_keys(doc, section, GRID_KEYS)?;
    let l = doc.get_f64(section, "half_width")?.unwrap_or(default.0);
    let n = get_usize(doc, section, "points")?.unwrap_or(default.1);
    Grid::new(dim, l, n).map_err(|e| keyed(section, e))
}

pub fn write_grid(doc: &mut KvDoc, section: &str, grid: &Grid) {
    doc.set(section, "half_width", grid.half_width());
    doc.set(section, "points", grid.points_per_axis());
}

pub const SOLVER_KEYS: &[&str] = &[
    "time_steps",
    "picard_tol",
    "picard_max_iters",
    "blowup_threshold",
    "kernel_rule",
    "snapshots",
    "refine_blowup",
];

pub fn read_solver(doc: &KvDoc, section: &str, default: SolverConfig) -> Result<SolverConfig> {
    check_keys(doc, section, SOLVER_KEYS)?;
    let mut c = default;
    if let Some(v) = get_usize(doc, section, "time_steps")? {
        c.time_steps = v;
    }
    if let Some(v) = doc.get_f64(section, "picard_tol")? {
        c.picard_tol = v;
    }
    if let Some(v) = get_usize(doc, section, "picard_max_iters")? {
        c.picard_max_iters = v;
    }
    if let Some(v) = doc.get_f64(section, "blowup_threshold")? {
        c.blowup_threshold = v;
    }
    if let Some(v) = doc.get(section, "kernel_rule") {
        c.kernel_rule = KernelRule::parse(v)?;
    }
    if let Some(v) = get_usize(doc, section, "snapshots")? {
        c.snapshots = v;
    }
    if let Some(v) = get_bool(doc, section, "refine_blowup")? {
        c.refine_blowup = v;
    }
    c.validate().map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("[{section}] {m}")),
        other => other,
    })?;
    Ok(c)
}

pub fn write_solver(doc: &mut KvDoc, section: &str, c: &SolverConfig) {
    doc.set(section, "time_steps", c.time_steps);
    doc.set(section, "picard_tol", c.picard_tol);
    doc.set(section, "picard_max_iters", c.picard_max_iters);
    doc.set(section, "blowup_threshold", c.blowup_threshold);
    doc.set(section, "kernel_rule", c.kernel_rule.as_str());
    doc.set(section, "snapshots", c.snapshots);
    doc.set(section, "refine_blowup", c.refine_blowup);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datum_round_trip() {
        for d in [
            InitialDatum::dirac(64.0, 0.5),
            InitialDatum::log_singular(0.5, 1.0),
            InitialDatum::power_law(0.1, 5.0),
            InitialDatum::decaying(0.3, 0.5),
            InitialDatum::Constant { c: 2.0 },
        ] {
            let mut doc = KvDoc::new();
            write_datum(&mut doc, "datum", &d).unwrap();
            let text = doc.render();
            let back = read_datum(&KvDoc::parse(&text).unwrap(), "datum", 2, None).unwrap();
            assert_eq!(back, d);
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        let doc = KvDoc::parse("[datum]\nfamily = constant\nc = 1\ncolour = red\n").unwrap();
        let e = read_datum(&doc, "datum", 1, None).unwrap_err().to_string();
        assert!(e.contains("colour"), "{e}");
        let doc = KvDoc::parse("[solver]\ntime_step = 10\n").unwrap();
        assert!(read_solver(&doc, "solver", SolverConfig::default()).unwrap_err().to_string().contains("time_step"));
    }

    #[test]
    fn out_of_range_values_name_the_section() {
        let doc = KvDoc::parse("[problem]\nN = 1\np = 0.5\nalpha = 0.5\n").unwrap();
        let e = read_params(&doc, "problem").unwrap_err().to_string();
        assert!(e.contains("[problem]") && e.contains("p must be"), "{e}");
    }

    #[test]
    fn solver_round_trip() {
        let c = SolverConfig {
            time_steps: 300,
            kernel_rule: KernelRule::ProductTrapezoid,
            refine_blowup: false,
            ..Default::default()
        };
        let mut doc = KvDoc::new();
        write_solver(&mut doc, "solver", &c);
        let back = read_solver(&KvDoc::parse(&doc.render()).unwrap(), "solver", SolverConfig::default()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn grid_density_from_file() {
        let dir = std::env::temp_dir().join(format!("tfheat-sections-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let vals: Vec<String> = (0..16).map(|i| format!("{}", i as f64 * 0.5)).collect();
        std::fs::write(dir.join("f.txt"), vals.join("\n")).unwrap();
        let doc = KvDoc::parse("[datum]\nfamily = grid_density\nfile = f.txt\nhalf_width = 2\npoints = 16\n").unwrap();
        let d = read_datum(&doc, "datum", 1, Some(&dir)).unwrap();
        match d {
            InitialDatum::GridDensity { field } => assert_eq!(field.values()[3], 1.5),
            _ => panic!("expected gridded datum"),
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}

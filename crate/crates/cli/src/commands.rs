use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tfheat::config::sections::{
    check_keys, datum_keys, get_bool, get_usize, read_datum, read_grid, read_params, read_solver, require,
    write_datum, write_grid, write_params, write_solver,
};
use tfheat::config::KvDoc;
use tfheat::criteria::{
    necessary_condition_with, sufficient_condition_sweep, CalibratedConstants, DEFAULT_C_STAR, DEFAULT_SIGMA_POINTS,
};
use tfheat::datum::{InitialDatum, ProblemParams};
use tfheat::experiments::{
    calibration_cases, constants_from_cases, fit_scaling, format_from_ln, predefined_spec, run_sweep_unchecked,
    write_outputs, CalibrationSuite, ExperimentId, SweepSpec, DEFAULT_GRID,
};
use tfheat::solver::{lifespan_estimate_in, picard_solve, SolveStatus, SolverConfig};
use tfheat::specfun::{beta, gamma, halpha_moment, mainardi_density, mittag_leffler, r_constants, SeriesControl};
use tfheat::Error;

use crate::args::{Cli, Command};

/// A failed run: exit code, message and, for numerical failures, the file
/// holding the diagnostics.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    pub diagnostics: Option<PathBuf>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Config(_) | Error::Io(_) | Error::Sampling(_) => 1,
            Error::Evaluation { .. } | Error::Estimation(_) | Error::Regression(_) | Error::Sweep(_) => 2,
        };
        Self {
            code,
            message: e.to_string(),
            diagnostics: None,
        }
    }
}

impl Failure {
    fn numerical(message: impl Into<String>, diagnostics: PathBuf) -> Self {
        Self {
            code: 2,
            message: message.into(),
            diagnostics: Some(diagnostics),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Keys holding file paths, made absolute when a config is read so that a
/// manifest stays valid wherever it is moved.
const PATH_KEYS: &[(&str, &str)] = &[
    ("datum", "file"),
    ("check", "constants"),
    ("calibrate", "suite"),
    ("calibrate", "reference"),
];

fn absolutize(doc: &mut KvDoc, base: &Path) {
    for &(s, k) in PATH_KEYS {
        if let Some(v) = doc.get(s, k) {
            let p = Path::new(v);
            if p.is_relative() {
                let abs = base.join(p);
                doc.set(s, k, abs.display());
            }
        }
    }
}

fn read_text(path: &Path, what: &str) -> tfheat::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{what} `{}`: {e}", path.display())))
}

/// Config file, then flags, then `--set` entries.
fn resolve(cli: &Cli) -> tfheat::Result<KvDoc> {
    let cwd = std::env::current_dir()?;
    let mut doc = match &cli.common.config {
        Some(path) => {
            let mut d = KvDoc::parse(&read_text(path, "config file")?)?;
            let base = path.parent().map(|b| cwd.join(b)).unwrap_or_else(|| cwd.clone());
            absolutize(&mut d, &base);
            d
        }
        None => KvDoc::new(),
    };
    let mut overlay = cli.command.flag_doc();
    for entry in &cli.common.set {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set `{entry}`: expected SECTION.KEY=VALUE")))?;
        let (section, key) = key.split_once('.').unwrap_or(("", key));
        if key.trim().is_empty() {
            return Err(Error::Config(format!("--set `{entry}`: empty key")));
        }
        overlay.set(section.trim(), key.trim(), value.trim());
    }
    absolutize(&mut overlay, &cwd);
    doc.merge(&overlay);
    let name = cli.command.name();
    if let Some(c) = doc.get("", "command") {
        if c != name {
            return Err(Error::Config(format!("key `command` is `{c}` but the subcommand is `{name}`")));
        }
    }
    Ok(doc)
}

fn check_sections(doc: &KvDoc, allowed: &[&str]) -> tfheat::Result<()> {
    for (s, _) in doc.sections() {
        if !allowed.contains(&s) {
            return Err(Error::Config(format!(
                "unknown section [{s}] (allowed here: {})",
                allowed.iter().filter(|s| !s.is_empty()).map(|s| format!("[{s}]")).collect::<Vec<_>>().join(", ")
            )));
        }
    }
    Ok(())
}

/// Warns when a manifest was produced with other constants.
fn note_constants(doc: &KvDoc, tag: &str) {
    if let Some(recorded) = doc.get("", "constants") {
        if recorded != tag {
            eprintln!("warning: the config was produced with constants {recorded}; this run uses {tag}");
        }
    }
}

fn manifest_head(command: &str, constants: &CalibratedConstants) -> KvDoc {
    let mut m = KvDoc::new();
    m.set("", "command", command);
    m.set("", "constants", constants.tag());
    m
}

fn write_file(path: &Path, text: &str) -> tfheat::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("cannot write `{}`: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> tfheat::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

fn workers(cli: &Cli) -> tfheat::Result<usize> {
    match cli.common.workers {
        Some(0) => Err(Error::Config("--workers must be >= 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let doc = resolve(cli)?;
    let out = &cli.common.output_dir;
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Io(format!("cannot create output directory `{}`: {e}", out.display())))?;
    match &cli.command {
        Command::Specfun(_) => specfun(&doc, out),
        Command::Solve(_) => solve(&doc, out),
        Command::Check(_) => check(&doc, out),
        Command::Lifespan(_) => lifespan(&doc, out),
        Command::Sweep(_) => sweep(&doc, out, workers(cli)?),
        Command::Calibrate(_) => calibrate(&doc, out, workers(cli)?),
    }
}

const TOP_KEYS: &[&str] = &["command", "constants"];

fn number(doc: &KvDoc, key: &str) -> tfheat::Result<f64> {
    doc.get_f64("specfun", key)?
        .ok_or_else(|| Error::Config(format!("[specfun] is missing `{key}`")))
}

fn specfun(doc: &KvDoc, out: &Path) -> Outcome {
    check_sections(doc, &["", "specfun"])?;
    check_keys(doc, "", TOP_KEYS)?;
    let function = require(doc, "specfun", "function")?;
    let needs: &[&str] = match function {
        "ml" => &["alpha", "beta", "z"],
        "mainardi" => &["alpha", "theta"],
        "moment" => &["alpha", "delta"],
        "gamma" => &["x"],
        "beta" => &["x", "y"],
        "r-constants" => &["alpha"],
        other => {
            return Err(Error::Config(format!(
                "[specfun] function: unknown `{other}` (expected ml, mainardi, moment, gamma, beta or r-constants)"
            ))
            .into())
        }
    };
    let mut allowed = vec!["function"];
    allowed.extend_from_slice(needs);
    check_keys(doc, "specfun", &allowed)?;
    let ctrl = SeriesControl::default();
    let values: Vec<f64> = match function {
        "ml" => {
            let b = doc.get_f64("specfun", "beta")?.unwrap_or(1.0);
            vec![mittag_leffler(number(doc, "alpha")?, b, number(doc, "z")?, &ctrl)?]
        }
        "mainardi" => vec![mainardi_density(number(doc, "alpha")?, number(doc, "theta")?, &ctrl)?],
        "moment" => vec![halpha_moment(number(doc, "alpha")?, number(doc, "delta")?)?],
        "gamma" => vec![gamma(number(doc, "x")?)?],
        "beta" => vec![beta(number(doc, "x")?, number(doc, "y")?)?],
        _ => {
            let (r1, r2) = r_constants(number(doc, "alpha")?)?;
            vec![r1, r2]
        }
    };
    let text: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    println!("{}", text.join(" "));

    let constants = CalibratedConstants::embedded();
    let mut manifest = manifest_head("specfun", &constants);
    manifest.set("specfun", "function", function);
    for k in needs {
        if let Some(v) = doc.get("specfun", k) {
            manifest.set("specfun", k, v);
        }
    }
    #[derive(Serialize)]
    struct Report<'a> {
        function: &'a str,
        values: &'a [f64],
    }
    write_json(&out.join("specfun.json"), &Report { function, values: &values })?;
    write_file(&out.join("specfun.manifest"), &manifest.render())?;
    Ok(())
}

/// Reads `[problem]` and `[datum]`, and writes their canonical form.
fn problem_and_datum(doc: &KvDoc, manifest: &mut KvDoc) -> tfheat::Result<(ProblemParams, InitialDatum)> {
    let params = read_params(doc, "problem")?;
    let datum = read_datum(doc, "datum", params.dim, None)?;
    write_params(manifest, "problem", &params);
    match &datum {
        InitialDatum::GridDensity { .. } => {
            for k in datum_keys("grid_density")? {
                if let Some(v) = doc.get("datum", k) {
                    manifest.set("datum", k, v);
                }
            }
        }
        d => write_datum(manifest, "datum", d)?,
    }
    Ok((params, datum))
}

fn solver_and_grid(doc: &KvDoc, dim: usize, manifest: &mut KvDoc) -> tfheat::Result<(tfheat::propagator::Grid, SolverConfig)> {
    let grid = read_grid(doc, "grid", dim, DEFAULT_GRID)?;
    let solver = read_solver(doc, "solver", SolverConfig::default())?;
    write_grid(manifest, "grid", &grid);
    write_solver(manifest, "solver", &solver);
    Ok((grid, solver))
}

fn solve(doc: &KvDoc, out: &Path) -> Outcome {
    check_sections(doc, &["", "problem", "datum", "grid", "solver", "run"])?;
    check_keys(doc, "", TOP_KEYS)?;
    check_keys(doc, "run", &["T"])?;
    let constants = CalibratedConstants::embedded();
    note_constants(doc, &constants.tag());
    let mut manifest = manifest_head("solve", &constants);
    let (params, datum) = problem_and_datum(doc, &mut manifest)?;
    let (grid, solver) = solver_and_grid(doc, params.dim, &mut manifest)?;
    let horizon = doc
        .get_f64("run", "T")?
        .ok_or_else(|| Error::Config("[run] is missing `T` (flag --T)".into()))?;
    manifest.set("run", "T", horizon);
    write_file(&out.join("solve.manifest"), &manifest.render())?;

    let outcome = picard_solve(&datum, &params, horizon, &grid, &solver)?;
    #[derive(Serialize)]
    struct Report<'a> {
        params: ProblemParams,
        family: &'a str,
        horizon: f64,
        outcome: tfheat::solver::OutcomeSummary<'a>,
    }
    let json_path = out.join("solve.json");
    write_json(
        &json_path,
        &Report {
            params,
            family: datum.family(),
            horizon,
            outcome: outcome.summary(),
        },
    )?;
    let mut csv = String::from("t,sup\n");
    for (t, s) in &outcome.diagnostics.sup_history {
        let _ = writeln!(csv, "{t},{s}");
    }
    write_file(&out.join("solve_sup.csv"), &csv)?;

    match (outcome.status, outcome.blowup_bracket) {
        (SolveStatus::Converged, _) => {
            println!("converged on [0, {horizon}], final sup {}", outcome.diagnostics.max_sup);
            Ok(())
        }
        (SolveStatus::Blowup, Some((a, b))) => {
            println!("blow-up at T* in [{a}, {b}]");
            Ok(())
        }
        (SolveStatus::Blowup, None) => {
            println!("blow-up before {horizon}");
            Ok(())
        }
        (SolveStatus::Inconclusive, _) => Err(Failure::numerical(
            format!(
                "inconclusive solve: {}",
                outcome.diagnostics.message.as_deref().unwrap_or("no diagnostic")
            ),
            json_path,
        )),
    }
}

fn check(doc: &KvDoc, out: &Path) -> Outcome {
    check_sections(doc, &["", "problem", "datum", "check"])?;
    check_keys(doc, "", TOP_KEYS)?;
    check_keys(doc, "check", &["T", "r", "c_star", "sigma_points", "constants"])?;
    let constants = match doc.get("check", "constants") {
        Some(path) => CalibratedConstants::parse(&read_text(Path::new(path), "[check] constants")?)?,
        None => CalibratedConstants::embedded(),
    };
    note_constants(doc, &constants.tag());
    let mut manifest = manifest_head("check", &constants);
    let (params, datum) = problem_and_datum(doc, &mut manifest)?;
    let horizon = doc
        .get_f64("check", "T")?
        .ok_or_else(|| Error::Config("[check] is missing `T` (flag --T)".into()))?;
    let r = doc.get_f64("check", "r")?;
    let c_star = doc.get_f64("check", "c_star")?.unwrap_or(DEFAULT_C_STAR);
    let sigma_points = get_usize(doc, "check", "sigma_points")?.unwrap_or(DEFAULT_SIGMA_POINTS);
    if sigma_points < 8 {
        return Err(Error::Config(format!("[check] sigma_points must be >= 8, got {sigma_points}")).into());
    }
    if !(c_star > 0.0) {
        return Err(Error::Config(format!("[check] c_star must be > 0, got {c_star}")).into());
    }
    manifest.set("check", "T", horizon);
    if let Some(r) = r {
        manifest.set("check", "r", r);
    }
    manifest.set("check", "c_star", c_star);
    manifest.set("check", "sigma_points", sigma_points);
    if let Some(p) = doc.get("check", "constants") {
        manifest.set("check", "constants", p);
    }
    write_file(&out.join("check.manifest"), &manifest.render())?;

    let mut reports = necessary_condition_with(&datum, &params, horizon, sigma_points, Some(&constants))?;
    reports.push(sufficient_condition_sweep(&datum, &params, horizon, r, c_star, sigma_points)?);
    for rep in &reports {
        println!("{}", rep.summary_line());
    }
    write_json(&out.join("check.json"), &reports)?;
    Ok(())
}

fn lifespan(doc: &KvDoc, out: &Path) -> Outcome {
    check_sections(doc, &["", "problem", "datum", "grid", "solver", "search"])?;
    check_keys(doc, "", TOP_KEYS)?;
    check_keys(doc, "search", &["budget", "ln_start", "ln_step"])?;
    let constants = CalibratedConstants::embedded();
    note_constants(doc, &constants.tag());
    let mut manifest = manifest_head("lifespan", &constants);
    let (params, datum) = problem_and_datum(doc, &mut manifest)?;
    let (grid, solver) = solver_and_grid(doc, params.dim, &mut manifest)?;
    let budget = get_usize(doc, "search", "budget")?.unwrap_or(16);
    let ln_start = doc.get_f64("search", "ln_start")?.unwrap_or(0.0);
    let ln_step = doc.get_f64("search", "ln_step")?.unwrap_or(4f64.ln());
    if budget < 8 {
        return Err(Error::Config(format!("[search] budget must be >= 8, got {budget}")).into());
    }
    if !(ln_step > 0.0 && ln_step.is_finite()) || !ln_start.is_finite() {
        return Err(Error::Config("[search] needs a finite ln_start and ln_step > 0".into()).into());
    }
    manifest.set("search", "budget", budget);
    manifest.set("search", "ln_start", ln_start);
    manifest.set("search", "ln_step", ln_step);
    write_file(&out.join("lifespan.manifest"), &manifest.render())?;

    let est = lifespan_estimate_in(&datum, &params, &grid, &solver, budget, ln_start, ln_step);
    let json_path = out.join("lifespan.json");
    let est = match est {
        Ok(e) => e,
        Err(e) => {
            let f = Failure::from(e);
            write_json(&json_path, &serde_json::json!({ "error": f.message }))?;
            return Err(Failure::numerical(f.message, json_path));
        }
    };
    #[derive(Serialize)]
    struct Report<'a> {
        t_low: String,
        t_high: String,
        t_mid: String,
        estimate: &'a tfheat::solver::LifespanEstimate,
    }
    write_json(
        &json_path,
        &Report {
            t_low: format_from_ln(est.ln_t_low),
            t_high: format_from_ln(est.ln_t_high),
            t_mid: format_from_ln(est.ln_t_mid()),
            estimate: &est,
        },
    )?;
    if est.is_bracketed() {
        println!(
            "lifespan in [{}, {}] after {} solves",
            format_from_ln(est.ln_t_low),
            format_from_ln(est.ln_t_high),
            est.probes.len()
        );
        Ok(())
    } else {
        Err(Failure::numerical(
            format!(
                "lifespan not bracketed after {} solves (bounds {}, {}); raise --budget or --ln-step",
                est.probes.len(),
                format_from_ln(est.ln_t_low),
                format_from_ln(est.ln_t_high)
            ),
            json_path,
        ))
    }
}

/// `doc` without the given top-level keys.
fn strip_top(doc: &KvDoc, keys: &[&str]) -> KvDoc {
    let mut out = KvDoc::new();
    for (s, kv) in doc.sections() {
        for (k, v) in kv {
            if !(s.is_empty() && keys.contains(&k.as_str())) {
                out.set(s, k, v);
            }
        }
    }
    out
}

fn sweep(doc: &KvDoc, out: &Path, workers: usize) -> Outcome {
    let constants = CalibratedConstants::embedded();
    note_constants(doc, &constants.tag());
    let body = strip_top(doc, TOP_KEYS);
    let id = ExperimentId::parse(
        body.get("", "experiment")
            .ok_or_else(|| Error::Config("missing key `experiment` (flag --experiment)".into()))?,
    )?;
    let spec = match id {
        ExperimentId::Custom => SweepSpec::from_doc(&body)?,
        _ => predefined_spec(id, &body)?,
    };
    let mut manifest = manifest_head("sweep", &constants);
    manifest.merge(&spec.to_doc());
    write_file(&out.join(format!("{}.manifest", spec.file_stem())), &manifest.render())?;

    let result = run_sweep_unchecked(&spec, workers)?;
    let report = match &spec.fit {
        Some(fit) if result.check().is_ok() => Some(fit_scaling(&result, fit)),
        _ => None,
    };
    let ok_report = report.as_ref().and_then(|r| r.as_ref().ok());
    let paths = write_outputs(out, &spec, &result, ok_report)?;
    print!("{}", result.to_csv());
    result.check().map_err(|e| Failure::numerical(e.to_string(), paths.json.clone()))?;
    match report {
        None => Ok(()),
        Some(Err(e)) => Err(Failure::numerical(e.to_string(), paths.json)),
        Some(Ok(r)) => {
            let verdict = if r.passed() { "PASS" } else { "FAIL" };
            println!(
                "{verdict}: slope {:.6} (expected {:.6}, {} rule, tolerance {:.4}), r^2 {:.4}",
                r.slope,
                r.expected_slope,
                r.rule.as_str(),
                r.tolerance,
                r.r_squared
            );
            if r.passed() {
                Ok(())
            } else {
                Err(Failure::numerical("the fitted slope misses the scaling law", paths.json))
            }
        }
    }
}

fn calibrate(doc: &KvDoc, out: &Path, workers: usize) -> Outcome {
    check_sections(doc, &["", "calibrate"])?;
    check_keys(doc, "", TOP_KEYS)?;
    check_keys(doc, "calibrate", &["suite", "reference", "version", "date", "force"])?;
    let suite = match doc.get("calibrate", "suite") {
        Some(p) => CalibrationSuite::parse(&read_text(Path::new(p), "[calibrate] suite")?)?,
        None => CalibrationSuite::default(),
    };
    let reference = match doc.get("calibrate", "reference") {
        Some(p) => CalibratedConstants::parse(&read_text(Path::new(p), "[calibrate] reference")?)?,
        None => CalibratedConstants::embedded(),
    };
    let force = get_bool(doc, "calibrate", "force")?.unwrap_or(false);
    let hash = suite.hash();
    if !reference.suite_hash.is_empty() && reference.suite_hash != hash && !force {
        return Err(Error::Config(format!(
            "[calibrate] suite: its hash {hash} differs from the frozen hash {} of constants v{}; \
             commit the suite change with force = true (--force)",
            reference.suite_hash, reference.version
        ))
        .into());
    }
    let version = match doc.get("calibrate", "version") {
        Some(v) => v
            .parse::<u32>()
            .ok()
            .filter(|&v| v >= 1)
            .ok_or_else(|| Error::Config(format!("[calibrate] version: `{v}` is not an integer >= 1")))?,
        None => reference.version + 1,
    };
    let date = match doc.get("calibrate", "date") {
        Some(d) => {
            chrono::NaiveDate::parse_from_str(d, "%Y-%m-%d")
                .map_err(|_| Error::Config(format!("[calibrate] date: `{d}` is not YYYY-MM-DD")))?;
            d.to_string()
        }
        None => chrono::Utc::now().format("%Y-%m-%d").to_string(),
    };
    let mut manifest = manifest_head("calibrate", &reference);
    for k in ["suite", "reference"] {
        if let Some(v) = doc.get("calibrate", k) {
            manifest.set("calibrate", k, v);
        }
    }
    manifest.set("calibrate", "version", version);
    manifest.set("calibrate", "date", &date);
    manifest.set("calibrate", "force", force);
    write_file(&out.join("calibrate.manifest"), &manifest.render())?;

    let cases = calibration_cases(&suite, workers)?;
    let constants = constants_from_cases(&suite, &cases, version, &date)?;
    let mut csv = String::from(
        "family,p,alpha,T,amplitude,necessary_general,worst_sigma,necessary_critical,sufficient_satisfied,status\n",
    );
    for c in &cases {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{:e},{:e},{},{},{}",
            c.family,
            c.params.p,
            c.params.alpha,
            c.horizon,
            c.amplitude,
            c.necessary_general,
            c.worst_sigma,
            c.necessary_critical.map_or_else(String::new, |v| format!("{v:e}")),
            c.sufficient_satisfied,
            c.status.map_or("unsolved", |s| s.as_str()),
        );
    }
    write_file(&out.join("calibration_cases.csv"), &csv)?;
    let path = out.join("constants.txt");
    write_file(&path, &constants.render())?;
    println!(
        "wrote {} (v{}, suite {hash}, {} entries from {} cases)",
        path.display(),
        version,
        constants.entries.len(),
        cases.len()
    );
    Ok(())
}

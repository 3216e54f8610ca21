use serde::Serialize;

use crate::config::sections::{
    check_keys, get_usize, read_datum, read_grid, read_params, read_solver, require, require_f64, write_datum,
    write_grid, write_params, write_solver,
};
use crate::config::KvDoc;
use crate::datum::{InitialDatum, ProblemParams};
use crate::error::{Error, Result};
use crate::propagator::Grid;
use crate::solver::SolverConfig;

use super::fit::{Abscissa, FitSpec, Model, Ordinate, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    DiracLifespan,
    PsiJThreshold,
    FepsCollapse,
    GlobalCollapse,
    DecayingLifespan,
    Custom,
}

impl ExperimentId {
    pub const PREDEFINED: [ExperimentId; 5] = [
        Self::DiracLifespan,
        Self::PsiJThreshold,
        Self::FepsCollapse,
        Self::GlobalCollapse,
        Self::DecayingLifespan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DiracLifespan => "dirac_lifespan",
            Self::PsiJThreshold => "psi_j_threshold",
            Self::FepsCollapse => "feps_collapse",
            Self::GlobalCollapse => "global_collapse",
            Self::DecayingLifespan => "decaying_lifespan",
            Self::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [Self::Custom]
            .into_iter()
            .chain(Self::PREDEFINED)
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown experiment `{s}` (expected dirac_lifespan, psi_j_threshold, feps_collapse, global_collapse, decaying_lifespan or custom)"
                ))
            })
    }
}

/// What each sweep point measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Lifespan bracket by bisection in `ln T`.
    Lifespan,
    /// Amplitude bracket separating no blow-up on the search horizon from
    /// blow-up, by bisection in `ln κ`.
    GlobalThreshold,
    /// Refined blow-up bracket of a single solve on the search horizon.
    BlowupTime,
    /// The total-mass window of the global set at `p = p_F`.
    Window,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lifespan => "lifespan",
            Self::GlobalThreshold => "global_threshold",
            Self::BlowupTime => "blowup_time",
            Self::Window => "window",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lifespan" => Ok(Self::Lifespan),
            "global_threshold" => Ok(Self::GlobalThreshold),
            "blowup_time" => Ok(Self::BlowupTime),
            "window" => Ok(Self::Window),
            _ => Err(Error::Config(format!(
                "unknown quantity `{s}` (expected lifespan, global_threshold, blowup_time or window)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParam {
    Kappa,
    J,
    Alpha,
    A,
    Eps,
    P,
    TimeSteps,
}

impl SweptParam {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Kappa => "kappa",
            Self::J => "j",
            Self::Alpha => "alpha",
            Self::A => "A",
            Self::Eps => "eps",
            Self::P => "p",
            Self::TimeSteps => "time_steps",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "kappa" => Ok(Self::Kappa),
            "j" => Ok(Self::J),
            "alpha" => Ok(Self::Alpha),
            "A" => Ok(Self::A),
            "eps" => Ok(Self::Eps),
            "p" => Ok(Self::P),
            "time_steps" => Ok(Self::TimeSteps),
            _ => Err(Error::Config(format!(
                "unknown swept parameter `{s}` (expected kappa, j, alpha, A, eps, p or time_steps)"
            ))),
        }
    }
}

/// The swept values, kept in the form they were declared in so that the
/// rendered spec (and its hash) is stable.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepGrid {
    Log { start: f64, stop: f64, points: usize },
    Linear { start: f64, stop: f64, points: usize },
    List(Vec<f64>),
}

impl SweepGrid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Self::Log { start, stop, points } => {
                (0..points)
                    .map(|i| {
                        if points == 1 {
                            start
                        } else {
                            round_sig(start * (stop / start).powf(i as f64 / (points - 1) as f64))
                        }
                    })
                    .collect()
            }
            Self::Linear { start, stop, points } => (0..points)
                .map(|i| {
                    if points == 1 {
                        start
                    } else {
                        round_sig(start + (stop - start) * i as f64 / (points - 1) as f64)
                    }
                })
                .collect(),
            Self::List(ref v) => v.clone(),
        }
    }
}

/// Rounds to 12 significant digits, so grid values print cleanly.
fn round_sig(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// How the search horizon is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonUnits {
    Absolute,
    /// Multiples of the datum's own time scale `ℓ^{2/α}`, with `ℓ` the
    /// Dirac radius or the decay scale (1 for other families).
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSpec {
    /// Solves per point.
    pub budget: usize,
    /// Start of the search in the log variable (`ln T` or `ln κ`).
    pub ln_start: f64,
    pub ln_step: f64,
    /// Horizon for `global_threshold` and `blowup_time`.
    pub horizon: f64,
    pub horizon_units: HorizonUnits,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            budget: 16,
            ln_start: 0.0,
            ln_step: 2.0 * 2f64.ln(),
            horizon: 1.0,
            horizon_units: HorizonUnits::Absolute,
        }
    }
}

/// A declarative parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub experiment: ExperimentId,
    pub quantity: Quantity,
    pub param: SweptParam,
    pub sweep: SweepGrid,
    pub params: ProblemParams,
    pub datum: InitialDatum,
    pub grid: Grid,
    pub solver: SolverConfig,
    pub search: SearchSpec,
    pub fit: Option<FitSpec>,
    /// Free-text record of known limitations.
    pub note: Option<String>,
}

/// One sweep point: the fully substituted inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSetup {
    pub params: ProblemParams,
    pub datum: InitialDatum,
    pub solver: SolverConfig,
}

const TOP_KEYS: &[&str] = &["experiment", "quantity", "note"];
const SWEEP_KEYS: &[&str] = &["parameter", "spacing", "start", "stop", "points", "values"];
const SEARCH_KEYS: &[&str] = &["budget", "ln_start", "ln_step", "horizon", "horizon_units"];
const FIT_KEYS: &[&str] = &[
    "model",
    "abscissa",
    "abscissa_exponent",
    "ordinate",
    "ordinate_exponent",
    "expected_slope",
    "rule",
    "tolerance",
    "min_r_squared",
];
const SECTIONS: &[&str] = &["", "sweep", "problem", "datum", "grid", "solver", "search", "fit"];

/// Grid used when a spec leaves `[grid]` unset.
pub const DEFAULT_GRID: (f64, usize) = (8.0, 256);

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("[sweep] values: `{t}` is not a number")))
        })
        .collect()
}

fn render_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl SweepSpec {
    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        for (s, _) in doc.sections() {
            if !SECTIONS.contains(&s) {
                return Err(Error::Config(format!("unknown section [{s}]")));
            }
        }
        check_keys(doc, "", TOP_KEYS)?;
        let experiment = ExperimentId::parse(require(doc, "", "experiment")?)?;
        let quantity = Quantity::parse(require(doc, "", "quantity")?)?;
        let note = doc.get("", "note").map(str::to_string);

        check_keys(doc, "sweep", SWEEP_KEYS)?;
        let param = SweptParam::parse(require(doc, "sweep", "parameter")?)?;
        let sweep = match doc.get("sweep", "values") {
            Some(list) => {
                for k in ["spacing", "start", "stop", "points"] {
                    if doc.get("sweep", k).is_some() {
                        return Err(Error::Config(format!("[sweep] `{k}` cannot be combined with `values`")));
                    }
                }
                SweepGrid::List(parse_list(list)?)
            }
            None => {
                let start = require_f64(doc, "sweep", "start")?;
                let stop = require_f64(doc, "sweep", "stop")?;
                let points = get_usize(doc, "sweep", "points")?
                    .ok_or_else(|| Error::Config("[sweep] is missing `points`".into()))?;
                match doc.get("sweep", "spacing").unwrap_or("log") {
                    "log" => {
                        if !(start > 0.0 && stop > 0.0) {
                            return Err(Error::Config("[sweep] log spacing needs start, stop > 0".into()));
                        }
                        SweepGrid::Log { start, stop, points }
                    }
                    "linear" => SweepGrid::Linear { start, stop, points },
                    other => {
                        return Err(Error::Config(format!(
                            "[sweep] spacing: unknown `{other}` (expected log or linear)"
                        )))
                    }
                }
            }
        };

        let params = read_params(doc, "problem")?;
        let datum = read_datum(doc, "datum", params.dim, None)?;
        if matches!(datum, InitialDatum::GridDensity { .. }) {
            return Err(Error::Config("[datum] sweeps need a parametric family, not grid_density".into()));
        }
        let grid = read_grid(doc, "grid", params.dim, DEFAULT_GRID)?;
        let solver = read_solver(doc, "solver", SolverConfig::default())?;

        check_keys(doc, "search", SEARCH_KEYS)?;
        let mut search = SearchSpec::default();
        if let Some(b) = get_usize(doc, "search", "budget")? {
            search.budget = b;
        }
        if let Some(v) = doc.get_f64("search", "ln_start")? {
            search.ln_start = v;
        }
        if let Some(v) = doc.get_f64("search", "ln_step")? {
            search.ln_step = v;
        }
        if let Some(v) = doc.get_f64("search", "horizon")? {
            search.horizon = v;
        }
        if let Some(v) = doc.get("search", "horizon_units") {
            search.horizon_units = match v {
                "absolute" => HorizonUnits::Absolute,
                "natural" => HorizonUnits::Natural,
                _ => {
                    return Err(Error::Config(format!(
                        "[search] horizon_units: unknown `{v}` (expected absolute or natural)"
                    )))
                }
            };
        }

        check_keys(doc, "fit", FIT_KEYS)?;
        let fit = if doc.keys("fit").is_empty() {
            None
        } else {
            let model = Model::parse(doc.get("fit", "model").unwrap_or("power_law"))?;
            let abscissa = Abscissa::parse(
                doc.get("fit", "abscissa").unwrap_or("value"),
                doc.get_f64("fit", "abscissa_exponent")?,
            )?;
            let ordinate = Ordinate::parse(
                doc.get("fit", "ordinate").unwrap_or("ln_value"),
                doc.get_f64("fit", "ordinate_exponent")?,
            )?;
            Some(FitSpec {
                model,
                abscissa,
                ordinate,
                expected_slope: require_f64(doc, "fit", "expected_slope")?,
                rule: Rule::parse(doc.get("fit", "rule").unwrap_or("relative"))?,
                tolerance: require_f64(doc, "fit", "tolerance")?,
                min_r_squared: doc.get_f64("fit", "min_r_squared")?,
            })
        };

        let spec = Self {
            experiment,
            quantity,
            param,
            sweep,
            params,
            datum,
            grid,
            solver,
            search,
            fit,
            note,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_doc(&KvDoc::parse(text)?)
    }

    pub fn to_doc(&self) -> KvDoc {
        let mut doc = KvDoc::new();
        doc.set("", "experiment", self.experiment.as_str());
        doc.set("", "quantity", self.quantity.as_str());
        if let Some(n) = &self.note {
            doc.set("", "note", n);
        }
        doc.set("sweep", "parameter", self.param.as_str());
        match &self.sweep {
            SweepGrid::Log { start, stop, points } | SweepGrid::Linear { start, stop, points } => {
                let spacing = if matches!(self.sweep, SweepGrid::Log { .. }) { "log" } else { "linear" };
                doc.set("sweep", "spacing", spacing);
                doc.set("sweep", "start", start);
                doc.set("sweep", "stop", stop);
                doc.set("sweep", "points", points);
            }
            SweepGrid::List(v) => doc.set("sweep", "values", render_list(v)),
        }
        write_params(&mut doc, "problem", &self.params);
        write_datum(&mut doc, "datum", &self.datum).expect("sweep data are parametric");
        write_grid(&mut doc, "grid", &self.grid);
        write_solver(&mut doc, "solver", &self.solver);
        doc.set("search", "budget", self.search.budget);
        doc.set("search", "ln_start", self.search.ln_start);
        doc.set("search", "ln_step", self.search.ln_step);
        doc.set("search", "horizon", self.search.horizon);
        doc.set(
            "search",
            "horizon_units",
            match self.search.horizon_units {
                HorizonUnits::Absolute => "absolute",
                HorizonUnits::Natural => "natural",
            },
        );
        if let Some(f) = &self.fit {
            doc.set("fit", "model", f.model.as_str());
            doc.set("fit", "abscissa", f.abscissa.as_str());
            if let Some(e) = f.abscissa.exponent() {
                doc.set("fit", "abscissa_exponent", e);
            }
            doc.set("fit", "ordinate", f.ordinate.as_str());
            if let Some(e) = f.ordinate.exponent() {
                doc.set("fit", "ordinate_exponent", e);
            }
            doc.set("fit", "expected_slope", f.expected_slope);
            doc.set("fit", "rule", f.rule.as_str());
            doc.set("fit", "tolerance", f.tolerance);
            if let Some(r) = f.min_r_squared {
                doc.set("fit", "min_r_squared", r);
            }
        }
        doc
    }

    /// Canonical text; parsing it gives back the same spec.
    pub fn render(&self) -> String {
        self.to_doc().render()
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.render().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// `<experiment_id>__<hash>`, the stem of the output files.
    pub fn file_stem(&self) -> String {
        format!("{}__{}", self.experiment.as_str(), self.hash())
    }

    pub fn validate(&self) -> Result<()> {
        let values = self.sweep.values();
        if values.is_empty() {
            return Err(Error::Config("[sweep] has no values".into()));
        }
        if self.fit.is_some() && values.len() < 5 {
            return Err(Error::Config(format!(
                "[sweep] a regression needs at least 5 points, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("[sweep] values must be finite".into()));
        }
        for &v in &values {
            self.point(v)?;
        }
        if self.search.budget < 8 && matches!(self.quantity, Quantity::Lifespan | Quantity::GlobalThreshold) {
            return Err(Error::Config(format!("[search] budget must be >= 8, got {}", self.search.budget)));
        }
        if !(self.search.ln_step > 0.0) || !self.search.ln_start.is_finite() {
            return Err(Error::Config("[search] needs a finite ln_start and ln_step > 0".into()));
        }
        if !(self.search.horizon > 0.0 && self.search.horizon.is_finite()) {
            return Err(Error::Config(format!("[search] horizon must be > 0, got {}", self.search.horizon)));
        }
        if self.quantity == Quantity::Window && self.params.regime() != crate::datum::Regime::Critical {
            return Err(Error::Config("quantity = window needs p = p_F".into()));
        }
        if let Some(f) = &self.fit {
            f.validate()?;
        }
        Ok(())
    }

    /// The inputs of the point with swept value `v`.
    pub fn point(&self, v: f64) -> Result<PointSetup> {
        let mut params = self.params;
        let mut datum = self.datum.clone();
        let mut solver = self.solver;
        let bad = |what: &str| Error::Config(format!("[sweep] parameter {} does not apply to {what}", self.param.as_str()));
        match self.param {
            SweptParam::Kappa => {
                if matches!(datum, InitialDatum::GridDensity { .. }) {
                    return Err(bad("grid_density"));
                }
                datum = datum.with_kappa(v);
            }
            SweptParam::J => match &mut datum {
                InitialDatum::DiracApprox { j, .. } => *j = v,
                d => return Err(bad(d.family())),
            },
            SweptParam::A => match &mut datum {
                InitialDatum::Decaying { a, .. } => *a = v,
                d => return Err(bad(d.family())),
            },
            SweptParam::Eps => match &mut datum {
                InitialDatum::LogSingular { eps, .. } => *eps = v,
                d => return Err(bad(d.family())),
            },
            SweptParam::Alpha => params.alpha = v,
            SweptParam::P => params.p = v,
            SweptParam::TimeSteps => {
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(Error::Config(format!("[sweep] time_steps must be integers, got {v}")));
                }
                solver.time_steps = v as usize;
            }
        }
        let params = ProblemParams::new(params.dim, params.p, params.alpha)
            .map_err(|e| Error::Config(format!("[sweep] value {v}: {e}")))?;
        datum
            .validate(params.dim)
            .map_err(|e| Error::Config(format!("[sweep] value {v}: {e}")))?;
        solver
            .validate()
            .map_err(|e| Error::Config(format!("[sweep] value {v}: {e}")))?;
        Ok(PointSetup { params, datum, solver })
    }
}

use crate::config::KvDoc;
use crate::datum::{InitialDatum, Regime};
use crate::error::{Error, Result};

use super::fit::{fit_scaling, RegressionReport};
use super::run::{run_sweep, SweepResult};
use super::spec::{ExperimentId, Quantity, SweepSpec};

const DIRAC_LIFESPAN: &str = "\
experiment = dirac_lifespan
quantity = lifespan
note = lifespans of a narrow box of mass kappa; the box is far below the grid scale, so it acts as a point mass
[sweep]
parameter = kappa
spacing = log
start = 0.25
stop = 8
points = 6
[problem]
N = 1
p = 1.5
alpha = 0.7
[datum]
family = dirac_approx
j = 1000000
kappa = 1
[grid]
half_width = 8
points = 512
[solver]
time_steps = 512
refine_blowup = false
[search]
budget = 18
ln_start = 0
ln_step = 1.3862943611198906
[fit]
model = power_law
rule = relative
tolerance = 0.1
min_r_squared = 0.98
";

const PSI_J_THRESHOLD: &str = "\
experiment = psi_j_threshold
quantity = global_threshold
note = amplitude threshold for no blow-up within 10 natural time units of the box, r_j^(2/alpha)
[sweep]
parameter = j
spacing = log
start = 1
stop = 32
points = 6
[problem]
N = 3
p = 2
alpha = 0.7
[datum]
family = dirac_approx
j = 1
kappa = 1
[grid]
half_width = 4
points = 32
[solver]
time_steps = 96
refine_blowup = false
[search]
budget = 10
ln_start = 0
ln_step = 0.5
horizon = 10
horizon_units = natural
[fit]
model = power_law
rule = relative
tolerance = 0.15
";

const FEPS_COLLAPSE: &str = "\
experiment = feps_collapse
quantity = lifespan
note = only the sign and linearity of ln T against (1-alpha)^(-N/(N-2 eps)) are tested; absolute constants are not reproducible
[sweep]
parameter = alpha
values = 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95
[problem]
N = 2
p = 2
alpha = 0.6
[datum]
family = log_singular
eps = 0.5
kappa = 1
shift = 0
[grid]
half_width = 4
points = 64
[solver]
time_steps = 256
refine_blowup = false
[search]
budget = 20
ln_start = 0
ln_step = 8
[fit]
model = log_law
abscissa = one_minus_pow
rule = sign
tolerance = 0
min_r_squared = 0.95
";

const GLOBAL_COLLAPSE: &str = "\
experiment = global_collapse
quantity = global_threshold
note = total-mass threshold for no blow-up up to T = 1000 (unit box datum); only the exponent of (1-alpha) is tested
[sweep]
parameter = alpha
values = 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.97
[problem]
N = 1
p = 3
alpha = 0.5
[datum]
family = dirac_approx
j = 1
kappa = 1
[grid]
half_width = 8
points = 512
[solver]
time_steps = 512
refine_blowup = false
[search]
budget = 14
ln_start = 0
ln_step = 0.25
horizon = 1000
horizon_units = absolute
[fit]
model = power_law
abscissa = one_minus
rule = relative
tolerance = 0.15
";

const DECAYING_LIFESPAN: &str = "\
experiment = decaying_lifespan
quantity = lifespan
note = small-amplitude lifespans of kappa (1+|x|)^(-A); at p = p_F with A >= N only the direction of the one-sided bound is tested
[sweep]
parameter = kappa
spacing = log
start = 0.005
stop = 0.08
points = 6
[problem]
N = 1
p = 2
alpha = 0.7
[datum]
family = decaying
kappa = 1
A = 0.5
scale = 1
[grid]
half_width = 16
points = 512
[solver]
time_steps = 512
refine_blowup = false
[search]
budget = 18
ln_start = 4
ln_step = 1.3862943611198906
[fit]
model = power_law
rule = relative
tolerance = 0.1
";

/// The documented default spec text of a predefined experiment.
pub fn default_spec_text(id: ExperimentId) -> Result<&'static str> {
    Ok(match id {
        ExperimentId::DiracLifespan => DIRAC_LIFESPAN,
        ExperimentId::PsiJThreshold => PSI_J_THRESHOLD,
        ExperimentId::FepsCollapse => FEPS_COLLAPSE,
        ExperimentId::GlobalCollapse => GLOBAL_COLLAPSE,
        ExperimentId::DecayingLifespan => DECAYING_LIFESPAN,
        ExperimentId::Custom => return Err(Error::Config("custom experiments have no defaults".into())),
    })
}

/// The regression branch (`[fit]` keys) mandated by the scaling law for the
/// experiment's final parameters.
fn law_fit(spec: &SweepSpec) -> Result<Vec<(&'static str, String)>> {
    let p = spec.params.p;
    let a = spec.params.alpha;
    let n = spec.params.dim as f64;
    let regime = spec.params.regime();
    let need = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(format!("{}: {msg}", spec.experiment.as_str()))) };
    let mut out: Vec<(&'static str, String)> = Vec::new();
    match spec.experiment {
        ExperimentId::DiracLifespan => {
            need(regime == Regime::Subcritical, "the lifespan law needs p < p_F")?;
            need(spec.param == super::spec::SweptParam::Kappa, "the swept parameter must be kappa")?;
            out.push(("expected_slope", (-2.0 * (p - 1.0) / (a * (2.0 - n * (p - 1.0)))).to_string()));
        }
        ExperimentId::PsiJThreshold => {
            need(spec.param == super::spec::SweptParam::J, "the swept parameter must be j")?;
            match spec.quantity {
                Quantity::GlobalThreshold => {
                    need(regime == Regime::Supercritical, "the threshold law needs p > p_F")?;
                    out.push(("expected_slope", (2.0 / (n * (p - 1.0)) - 1.0).to_string()));
                }
                Quantity::Lifespan => {
                    need(regime == Regime::Critical, "the lifespan law in j needs p = p_F")?;
                    out.push(("expected_slope", (-2.0 / (a * n)).to_string()));
                }
                _ => need(false, "quantity must be global_threshold or lifespan")?,
            }
        }
        ExperimentId::FepsCollapse => {
            need(regime == Regime::Critical, "the collapse law needs p = p_F")?;
            need(spec.param == super::spec::SweptParam::Alpha, "the swept parameter must be alpha")?;
            let eps = match spec.datum {
                InitialDatum::LogSingular { eps, .. } => eps,
                _ => return Err(Error::Config("feps_collapse needs a log_singular datum".into())),
            };
            out.push(("abscissa_exponent", (-n / (n - 2.0 * eps)).to_string()));
            out.push(("expected_slope", "-1".into()));
        }
        ExperimentId::GlobalCollapse => {
            need(regime == Regime::Critical, "the collapse law needs p = p_F")?;
            need(spec.param == super::spec::SweptParam::Alpha, "the swept parameter must be alpha")?;
            out.push(("expected_slope", (n / 2.0).to_string()));
        }
        ExperimentId::DecayingLifespan => {
            need(spec.param == super::spec::SweptParam::Kappa, "the swept parameter must be kappa")?;
            let big_a = match spec.datum {
                InitialDatum::Decaying { a, .. } => a,
                _ => return Err(Error::Config("decaying_lifespan needs a decaying datum".into())),
            };
            let two_over = 2.0 / (p - 1.0);
            if regime == Regime::Subcritical || big_a < two_over {
                let rate = a / (p - 1.0) - a * big_a.min(n) / 2.0;
                if (big_a - n).abs() < 1e-12 {
                    out.push(("abscissa", "inverse_over_log".into()));
                    out.push(("expected_slope", (1.0 / rate).to_string()));
                } else {
                    out.push(("abscissa", "value".into()));
                    out.push(("expected_slope", (-1.0 / rate).to_string()));
                }
                out.push(("ordinate", "ln_value".into()));
            } else {
                need(regime == Regime::Critical && big_a >= n, "no lifespan law for p > p_F with A >= 2/(p-1)")?;
                out.push(("abscissa", "value".into()));
                out.push(("ordinate", "power_log".into()));
                out.push(("rule", "one_sided".into()));
                if (big_a - n).abs() < 1e-12 {
                    out.push(("ordinate_exponent", ((a - 1.0) / (2.0 * p)).to_string()));
                    out.push(("expected_slope", (-(p - 1.0) / p).to_string()));
                } else {
                    out.push(("ordinate_exponent", ((a - 1.0) / 2.0).to_string()));
                    out.push(("expected_slope", (-(p - 1.0)).to_string()));
                }
            }
        }
        ExperimentId::Custom => {}
    }
    Ok(out)
}

/// The canonical spec of `id` with `overrides` applied. `[fit]` keys that
/// follow from the scaling law are filled in unless overridden.
pub fn predefined_spec(id: ExperimentId, overrides: &KvDoc) -> Result<SweepSpec> {
    if id == ExperimentId::Custom {
        return Err(Error::Config("custom experiments need a spec file".into()));
    }
    if let Some(e) = overrides.get("", "experiment") {
        if e != id.as_str() {
            return Err(Error::Config(format!("override names experiment `{e}`, expected `{}`", id.as_str())));
        }
    }
    let mut doc = KvDoc::parse(default_spec_text(id)?)?;
    doc.merge(overrides);
    // Placeholder so the draft parses; replaced by the law below.
    if doc.get("fit", "expected_slope").is_none() {
        doc.set("fit", "expected_slope", "-1");
    }
    if id == ExperimentId::FepsCollapse && doc.get("fit", "abscissa_exponent").is_none() {
        doc.set("fit", "abscissa_exponent", "-2");
    }
    let draft = SweepSpec::from_doc(&doc)?;
    for (k, v) in law_fit(&draft)? {
        if overrides.get("fit", k).is_none() {
            doc.set("fit", k, v);
        }
    }
    // Keys made irrelevant by the branch.
    if !matches!(doc.get("fit", "ordinate"), Some("power_log")) && overrides.get("fit", "ordinate_exponent").is_none() {
        doc = without(&doc, "fit", "ordinate_exponent");
    }
    SweepSpec::from_doc(&doc)
}

fn without(doc: &KvDoc, section: &str, key: &str) -> KvDoc {
    let mut out = KvDoc::new();
    for (s, kv) in doc.sections() {
        for (k, v) in kv {
            if !(s == section && k == key) {
                out.set(s, k, v);
            }
        }
    }
    out
}

/// Outcome of a predefined experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub spec: SweepSpec,
    pub result: SweepResult,
    pub report: RegressionReport,
    pub passed: bool,
}

/// Runs the canonical spec of `id` and judges the fitted slope at the
/// declared tolerance.
pub fn predefined_experiment(id: ExperimentId, overrides: &KvDoc, workers: usize) -> Result<ExperimentOutcome> {
    let spec = predefined_spec(id, overrides)?;
    run_and_fit(spec, workers)
}

/// Runs any spec that declares a `[fit]` section.
pub fn run_and_fit(spec: SweepSpec, workers: usize) -> Result<ExperimentOutcome> {
    let fit = spec
        .fit
        .ok_or_else(|| Error::Config("the sweep declares no [fit] section".into()))?;
    let result = run_sweep(&spec, workers)?;
    let report = fit_scaling(&result, &fit)?;
    let passed = report.passed();
    Ok(ExperimentOutcome {
        spec,
        result,
        report,
        passed,
    })
}

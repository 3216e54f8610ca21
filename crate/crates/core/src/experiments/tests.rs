use super::*;
use crate::config::KvDoc;
use crate::error::Error;
use proptest::prelude::*;

fn fit(model: Model, expected: f64, rule: Rule, tol: f64) -> FitSpec {
    FitSpec {
        model,
        abscissa: Abscissa::Value,
        ordinate: Ordinate::LnValue,
        expected_slope: expected,
        rule,
        tolerance: tol,
        min_r_squared: None,
    }
}

const CHEAP_LIFESPAN: &str = "\
experiment = custom
quantity = lifespan
[sweep]
parameter = kappa
spacing = log
start = 1
stop = 16
points = 5
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
points = 128
[solver]
time_steps = 64
refine_blowup = false
[search]
budget = 8
ln_step = 1.3862943611198906
";

#[test]
fn synthetic_power_law_recovers_the_slope() {
    let xs: Vec<f64> = (0..7).map(|i| 0.5 * 1.7f64.powi(i)).collect();
    let ln_ys: Vec<f64> = xs.iter().map(|x| 0.3 - 1.25 * x.ln()).collect();
    let r = fit_points(&xs, &ln_ys, &fit(Model::PowerLaw, -1.25, Rule::Relative, 0.01)).unwrap();
    assert!((r.slope + 1.25).abs() < 1e-12, "{}", r.slope);
    assert!((r.intercept - 0.3).abs() < 1e-12);
    assert_eq!(r.r_squared, 1.0);
    assert!(r.within_tolerance && r.passed());
}

#[test]
fn synthetic_log_law_recovers_the_slope() {
    let xs: Vec<f64> = (0..6).map(|i| 0.6 + 0.05 * i as f64).collect();
    let mut f = fit(Model::LogLaw, -1.0, Rule::Sign, 0.0);
    f.abscissa = Abscissa::OneMinusPow(-2.0);
    let ln_ys: Vec<f64> = xs.iter().map(|&a| 4.0 - 0.5 * (1.0 - a).powi(-2)).collect();
    let r = fit_points(&xs, &ln_ys, &f).unwrap();
    assert!((r.slope + 0.5).abs() < 1e-10, "{}", r.slope);
    assert!(r.within_tolerance);
}

#[test]
fn constant_abscissa_is_rank_deficient() {
    let xs = [2.0; 6];
    let ys = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let e = fit_points(&xs, &ys, &fit(Model::PowerLaw, 1.0, Rule::Relative, 0.1)).unwrap_err();
    assert!(matches!(e, Error::Regression(_)), "{e}");
}

#[test]
fn fewer_than_five_finite_points_is_an_error() {
    let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
    let ys = [0.0, 1.0, f64::NAN, 3.0, 4.0];
    let e = fit_points(&xs, &ys, &fit(Model::LogLaw, 1.0, Rule::Relative, 0.1)).unwrap_err();
    assert!(matches!(e, Error::Regression(_)), "{e}");
}

#[test]
fn rules_judge_the_slope() {
    let xs: Vec<f64> = (1..=5).map(f64::from).collect();
    let ys: Vec<f64> = xs.iter().map(|x| -0.8 * x).collect();
    let judge = |rule, expected, tol| fit_points(&xs, &ys, &fit(Model::LogLaw, expected, rule, tol)).unwrap().within_tolerance;
    assert!(judge(Rule::Relative, -1.0, 0.25));
    assert!(!judge(Rule::Relative, -1.0, 0.1));
    assert!(judge(Rule::Sign, -3.0, 0.0));
    assert!(!judge(Rule::Sign, 3.0, 0.0));
    assert!(judge(Rule::OneSided, -1.0, 0.0));
    assert!(!judge(Rule::OneSided, -0.5, 0.1));
}

#[test]
fn transformed_axes() {
    assert_eq!(Abscissa::OneMinus.apply(0.75), 0.25);
    let v = 0.01f64;
    assert!((Abscissa::InverseOverLog.apply(v) - 100.0 / 100f64.ln()).abs() < 1e-12);
    let ln_y = 3.0f64;
    assert!((Ordinate::PowerLog(-0.2).apply(ln_y) - (-0.6 + 3f64.ln())).abs() < 1e-15);
}

#[test]
fn ln_formatting_round_trips_far_outside_f64() {
    for ln in [-5000.0, -31.96, -1.0, 0.0, 1e-3, 2.302585092994046, 700.0, 1.5e4] {
        let s = format_from_ln(ln);
        let back = parse_ln(&s).unwrap();
        assert!((back - ln).abs() < 1e-9 * ln.abs().max(1.0), "{ln} -> {s} -> {back}");
    }
    assert_eq!(format_from_ln(0.0), "1.000000000e0");
    assert_eq!(format_from_ln(10f64.ln()), "1.000000000e1");
    assert_eq!(format_from_ln(f64::NEG_INFINITY), "0");
    assert_eq!(parse_ln("inf").unwrap(), f64::INFINITY);
    assert!(parse_ln("abc").is_err());
    assert!(format_from_ln(-5000.0).ends_with("e-2172"));
}

#[test]
fn spec_round_trips_and_hash_is_stable() {
    for id in ExperimentId::PREDEFINED {
        let spec = predefined_spec(id, &KvDoc::new()).unwrap();
        let again = SweepSpec::parse(&spec.render()).unwrap();
        assert_eq!(spec, again, "{}", id.as_str());
        assert_eq!(spec.hash(), again.hash());
        assert_eq!(spec.hash().len(), 16);
        assert!(spec.file_stem().starts_with(id.as_str()));
    }
    let a = SweepSpec::parse(CHEAP_LIFESPAN).unwrap();
    let mut doc = KvDoc::parse(CHEAP_LIFESPAN).unwrap();
    doc.set("search", "budget", 9);
    let b = SweepSpec::from_doc(&doc).unwrap();
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn unknown_keys_and_sections_are_rejected() {
    let e = SweepSpec::parse(&format!("{CHEAP_LIFESPAN}[search]\nbudgett = 3\n")).unwrap_err();
    assert!(e.to_string().contains("budgett"), "{e}");
    let e = SweepSpec::parse(&format!("{CHEAP_LIFESPAN}[plot]\ncolor = red\n")).unwrap_err();
    assert!(e.to_string().contains("plot"), "{e}");
    let e = SweepSpec::parse(&CHEAP_LIFESPAN.replace("points = 5", "points = 5\nvalues = 1, 2")).unwrap_err();
    assert!(e.to_string().contains("values"), "{e}");
}

#[test]
fn regression_needs_five_grid_points() {
    let text = format!("{}[fit]\nexpected_slope = -1\ntolerance = 0.1\n", CHEAP_LIFESPAN.replace("points = 5", "points = 4"));
    let e = SweepSpec::parse(&text).unwrap_err();
    assert!(e.to_string().contains("at least 5"), "{e}");
}

#[test]
fn predefined_laws_fill_expected_slopes() {
    let s = predefined_spec(ExperimentId::DiracLifespan, &KvDoc::new()).unwrap();
    let expected = -2.0 * 0.5 / (0.7 * 1.5);
    assert!((s.fit.unwrap().expected_slope - expected).abs() < 1e-12);
    assert!((expected + 0.952).abs() < 1e-3);

    let s = predefined_spec(ExperimentId::GlobalCollapse, &KvDoc::new()).unwrap();
    assert_eq!(s.fit.unwrap().expected_slope, 0.5);

    let s = predefined_spec(ExperimentId::FepsCollapse, &KvDoc::new()).unwrap();
    let f = s.fit.unwrap();
    assert_eq!(f.abscissa, Abscissa::OneMinusPow(-2.0));
    assert_eq!(f.model, Model::LogLaw);
    assert_eq!(f.expected_slope, -1.0);

    let s = predefined_spec(ExperimentId::DecayingLifespan, &KvDoc::new()).unwrap();
    let rate = 0.7 / 1.0 - 0.7 * 0.5 / 2.0;
    assert!((s.fit.unwrap().expected_slope + 1.0 / rate).abs() < 1e-12);

    // A = N switches to the log-corrected abscissa.
    let ov = KvDoc::parse("[datum]\nA = 1\n").unwrap();
    let f = predefined_spec(ExperimentId::DecayingLifespan, &ov).unwrap().fit.unwrap();
    assert_eq!(f.abscissa, Abscissa::InverseOverLog);
    assert!((f.expected_slope - 1.0 / (0.7 - 0.35)).abs() < 1e-12);

    // p = p_F with A > N: one-sided bound on the power-log ordinate.
    let ov = KvDoc::parse("[problem]\np = 3\n[datum]\nA = 1.5\n").unwrap();
    let f = predefined_spec(ExperimentId::DecayingLifespan, &ov).unwrap().fit.unwrap();
    assert_eq!(f.rule, Rule::OneSided);
    assert_eq!(f.ordinate, Ordinate::PowerLog((0.7 - 1.0) / 2.0));
    assert_eq!(f.expected_slope, -2.0);

    let ov = KvDoc::parse("[problem]\np = 3\n").unwrap();
    assert!(predefined_spec(ExperimentId::DiracLifespan, &ov).is_err());
    assert!(predefined_spec(ExperimentId::Custom, &KvDoc::new()).is_err());
}

#[test]
fn overrides_win_over_law_keys() {
    let ov = KvDoc::parse("[fit]\nexpected_slope = -3\n").unwrap();
    let s = predefined_spec(ExperimentId::DiracLifespan, &ov).unwrap();
    assert_eq!(s.fit.unwrap().expected_slope, -3.0);
}

#[test]
fn window_sweep_shrinks_to_zero() {
    let text = "\
experiment = custom
quantity = window
[sweep]
parameter = alpha
values = 0.5, 0.7, 0.9, 0.99, 0.999
[problem]
N = 1
p = 3
alpha = 0.5
[datum]
family = dirac_approx
j = 1
kappa = 1
";
    let spec = SweepSpec::parse(text).unwrap();
    let r = run_sweep(&spec, 1).unwrap();
    let highs: Vec<f64> = r.rows.iter().map(|row| row.ln_high).collect();
    assert!(highs.windows(2).all(|w| w[1] < w[0]), "{highs:?}");
    assert!(highs.last().unwrap().exp() < 0.1);
}

#[test]
fn lifespan_sweep_is_monotone_and_deterministic() {
    let spec = SweepSpec::parse(CHEAP_LIFESPAN).unwrap();
    let a = run_sweep(&spec, 1).unwrap();
    assert_eq!(a.inconclusive_count(), 0, "{a:?}");
    let mids: Vec<f64> = a.rows.iter().map(|r| r.ln_mid()).collect();
    assert!(mids.windows(2).all(|w| w[1] < w[0]), "{mids:?}");
    for r in &a.rows {
        assert!(r.ln_low < r.ln_high);
    }
    let b = run_sweep(&spec, 2).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());

    let rows = SweepResult::rows_from_csv(&a.to_csv()).unwrap();
    assert_eq!(rows.len(), a.rows.len());
    for (x, y) in rows.iter().zip(&a.rows) {
        assert_eq!(x.swept_value, y.swept_value);
        assert!((x.ln_low - y.ln_low).abs() < 1e-8 * y.ln_low.abs().max(1.0));
        assert_eq!(x.status, y.status);
    }
    assert!(a.to_csv().starts_with(CSV_HEADER));
}

#[test]
fn refinement_sweep_narrows_the_bracket() {
    let text = "\
experiment = custom
quantity = blowup_time
[sweep]
parameter = time_steps
values = 64, 256, 1024
[problem]
N = 1
p = 2
alpha = 1
[datum]
family = constant
c = 1
[grid]
half_width = 4
points = 16
[search]
horizon = 1.5
";
    let spec = SweepSpec::parse(text).unwrap();
    let r = run_sweep(&spec, 1).unwrap();
    let widths: Vec<f64> = r.rows.iter().map(|row| row.ln_high - row.ln_low).collect();
    assert!(r.inconclusive_count() == 0, "{r:?}");
    assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");
}

#[test]
fn mostly_inconclusive_sweeps_are_errors() {
    let mut r = SweepResult {
        experiment: ExperimentId::Custom,
        quantity: Quantity::Lifespan,
        spec_hash: "0".into(),
        rows: Vec::new(),
    };
    for i in 0..5 {
        r.rows.push(SweepRow {
            swept_value: i as f64,
            ln_low: if i < 2 { 0.0 } else { f64::NEG_INFINITY },
            ln_high: if i < 2 { 1.0 } else { f64::INFINITY },
            status: if i < 2 { RowStatus::Ok } else { RowStatus::Inconclusive },
            iterations: 8,
            diagnostic: (i >= 2).then(|| "all probes inconclusive".to_string()),
        });
    }
    let e = r.check().unwrap_err();
    assert!(matches!(e, Error::Sweep(_)));
    assert!(e.to_string().contains("[search]"), "{e}");
    r.rows[2] = r.rows[0].clone();
    assert!(r.check().is_ok());
    let csv = r.to_csv();
    assert!(csv.contains(",0,inf,nan,inconclusive,8"), "{csv}");
}

#[test]
fn outputs_are_named_by_hash() {
    let dir = std::env::temp_dir().join(format!("tfheat-exp-{}", std::process::id()));
    let spec = SweepSpec::parse(CHEAP_LIFESPAN).unwrap();
    let result = SweepResult {
        experiment: spec.experiment,
        quantity: spec.quantity,
        spec_hash: spec.hash(),
        rows: Vec::new(),
    };
    let paths = write_outputs(&dir, &spec, &result, None).unwrap();
    assert!(paths.csv.file_name().unwrap().to_string_lossy().starts_with(&spec.file_stem()));
    let back = SweepSpec::parse(&std::fs::read_to_string(&paths.spec).unwrap()).unwrap();
    assert_eq!(back, spec);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&paths.json).unwrap()).unwrap();
    assert_eq!(json["spec_hash"], spec.hash());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn calibration_suite_hash_tracks_content() {
    let s = CalibrationSuite::default();
    assert_eq!(s.hash(), CalibrationSuite::default().hash());
    let mut t = s.clone();
    t.c_star = 0.3;
    assert_ne!(s.hash(), t.hash());
    assert!(CalibrationSuite::parse("N = 1\np = 2\nalpha = 0.5\nT = 1\namplitudes = 1\nbogus = 1\n").is_err());
}

proptest! {
    #[test]
    fn r_squared_is_a_fraction_and_verdict_matches_rule(
        ys in proptest::collection::vec(-50.0f64..50.0, 5..12),
        expected in -3.0f64..3.0,
        tol in 0.0f64..1.0,
    ) {
        let xs: Vec<f64> = (0..ys.len()).map(|i| 1.0 + i as f64).collect();
        let r = fit_points(&xs, &ys, &fit(Model::PowerLaw, expected, Rule::Relative, tol)).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.r_squared));
        prop_assert_eq!(r.within_tolerance, (r.slope - expected).abs() <= tol * expected.abs());
    }

    #[test]
    fn noiseless_lines_fit_exactly(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.7 - 1.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let (sa, sb, r2) = least_squares(&xs, &ys).unwrap();
        prop_assert!((sa - a).abs() < 1e-9 && (sb - b).abs() < 1e-9);
        prop_assert!(r2 > 1.0 - 1e-9 || a.abs() < 1e-9);
    }

    #[test]
    fn ln_format_round_trip(ln in -1.0e5f64..1.0e5) {
        let back = parse_ln(&format_from_ln(ln)).unwrap();
        prop_assert!((back - ln).abs() <= 1e-9 * ln.abs().max(1.0));
    }
}

//! Predefined experiments that are not acceptance criteria.

use tfheat::config::KvDoc;
use tfheat::experiments::{predefined_experiment, ExperimentId};

fn run(id: ExperimentId) {
    let o = predefined_experiment(id, &KvDoc::new(), 1).unwrap();
    let r = &o.report;
    println!("{}: slope {} expected {} r^2 {}", id.as_str(), r.slope, r.expected_slope, r.r_squared);
    assert!(o.passed, "{r:?}");
}

#[test]
fn decaying_lifespan_follows_its_power_law() {
    run(ExperimentId::DecayingLifespan);
}

#[test]
fn dilated_dirac_threshold_follows_its_power_law() {
    run(ExperimentId::PsiJThreshold);
}

mod common;

use common::PROPERTY_CASES;

#[test]
fn norm_and_metric_axioms() {
    common::norm_metric_axioms(PROPERTY_CASES).unwrap();
}

#[test]
fn snf_contracts() {
    common::snf_contracts(PROPERTY_CASES).unwrap();
}

#[test]
fn profile_subadditivity() {
    common::profile_subadditivity(PROPERTY_CASES).unwrap();
}

#[test]
fn characters_leave_the_windows() {
    common::window_exit(PROPERTY_CASES).unwrap();
}

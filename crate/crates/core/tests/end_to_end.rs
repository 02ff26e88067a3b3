use junctio::junction::{solve_limit, JunctionMode};
use junctio::model::{Scenario, ThermostatConfig};
use junctio::verify::{liminf_over_families, run_convergence, ThresholdFamily};
use junctio::{solve_thermostatic, Scenario32, Scenario64};
use proptest::prelude::*;

const FORCED_CYCLE: &str = include_str!("../../../scenarios/forced_cycle.json");
const SYMMETRIC: &str = include_str!("../../../scenarios/symmetric.json");

fn twofold(c_left: f64, c_right: f64, lambda: f64) -> Scenario64 {
    Scenario::from_json(&format!(
        r#"{{"branches":[{{"id":-1,"dynamics":"a","cost":"{c_left}"}},{{"id":1,"dynamics":"a","cost":"{c_right}"}}],
            "controls":[-1,0,1],"lambda":{lambda},"domain_radius":1,"grid_step":0.02}}"#
    ))
    .unwrap()
}

#[test]
fn liminf_over_families_is_the_nonuniform_junction_value() {
    let s = Scenario64::from_json(FORCED_CYCLE).unwrap();
    let report = solve_limit(&s, JunctionMode::ThreefoldNonuniform, 1e-10).unwrap().report;
    let (liminf, per_family) = liminf_over_families(&report).unwrap();
    assert!((liminf - report.v_junction).abs() < 1e-9);
    assert_eq!(per_family.len(), ThresholdFamily::CANONICAL.len());
    let uniform = solve_limit(&s, JunctionMode::ThreefoldUniform, 1e-10).unwrap().report.v_junction;
    assert!(report.v_junction <= uniform + 1e-12);
}

#[test]
fn convergence_study_is_deterministic() {
    let s = Scenario64::from_json(&FORCED_CYCLE.replace("\"grid_step\": 0.001", "\"grid_step\": 0.01")).unwrap();
    assert_eq!(s.grid_step(), 0.01);
    let report = solve_limit(&s, JunctionMode::ThreefoldNonuniform, 1e-10).unwrap().report;
    let eps = [0.2, 0.1];
    let a = run_convergence(&s, ThresholdFamily::Uniform, &report, &eps, 1e-10).unwrap();
    let b = run_convergence(&s, ThresholdFamily::Uniform, &report, &eps, 1e-10).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.errors_decreasing());
}

#[test]
fn single_precision_solves_the_symmetric_case() {
    let s = Scenario32::from_json(SYMMETRIC).unwrap();
    let v = solve_thermostatic(&s, &ThermostatConfig::twofold(0.1f32), 1e-5).unwrap();
    assert!((v.min_value() - 3.0).abs() < 1e-4 && (v.max_value() - 3.0).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equal_costs_give_a_flat_field(c in 0.1f64..10.0, lambda in 0.2f64..3.0, eps in 0.05f64..0.4) {
        let s = twofold(c, c, lambda);
        let v = solve_thermostatic(&s, &ThermostatConfig::twofold(eps), 1e-11).unwrap();
        prop_assert!((v.min_value() - c / lambda).abs() < 1e-8);
        prop_assert!((v.max_value() - c / lambda).abs() < 1e-8);
    }

    #[test]
    fn value_stays_between_cost_bounds(c1 in 0.1f64..10.0, c2 in 0.1f64..10.0, eps in 0.05f64..0.4) {
        let s = twofold(c1, c2, 1.0);
        let v = solve_thermostatic(&s, &ThermostatConfig::twofold(eps), 1e-11).unwrap();
        prop_assert!(v.min_value() >= c1.min(c2) - 1e-9);
        prop_assert!(v.max_value() <= c1.max(c2) + 1e-9);
        // the limit sits at the cheaper cost
        let limit = solve_limit(&s, JunctionMode::Twofold, 1e-11).unwrap();
        prop_assert!((limit.report.v_junction - c1.min(c2)).abs() < 1e-9);
    }
}

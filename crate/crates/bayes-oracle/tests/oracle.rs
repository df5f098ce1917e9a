//! Reference-oracle checks against closed forms and the cross-check targets
//! used elsewhere in the workspace.

use bayes_oracle::{
    bayes_posterior, chained_posterior, enumerate_bel, ErrFn, OracleError, PriorGrid,
};
use expr_core::{Formula, Value};
use theory_dsl::ast::TheorySpec;
use theory_dsl::{parse_query, parse_theory};

const ROBOT1D: &str = include_str!("../../../theories/robot1d.bat");
const NOISY1D: &str = include_str!("../../../theories/noisy1d.bat");
const SENSEWALL: &str = include_str!("../../../theories/sensewall.bat");

/// The window theory with its irrelevant continuous fluent dropped, so the
/// whole state space is finite and enumeration is exact.
const WINONLY: &str = "
    theory winonly
    fluent win : { 0, 1 }
    init p = cases { 0.6 if win = 1 ; 0.4 }
    action setwin(x: { 0, 1 } ~ y: { 0, 1 }) { likelihood = cases { 0.75 if y = x ; 0.25 } win' = y }
    action seewin(z: { 0, 1 }) sensing {
        likelihood = cases {
            0.8 if z = 1 and win = 1 ;
            0.2 if z = 1 and win = 0 ;
            0.3 if z = 0 and win = 1 ;
            0.7
        }
    }
";

fn spec(src: &str) -> TheorySpec {
    parse_theory(src).expect("theory parses")
}

fn phi(spec: &TheorySpec, text: &str) -> Formula {
    // Reuse the query parser for formulas to avoid building ASTs by hand.
    match parse_query(&format!("bel ({text}) after []"), spec).unwrap().kind {
        theory_dsl::ast::QueryKind::Bel(f) => f,
        _ => unreachable!(),
    }
}

#[test]
fn sonar_reading_concentrates_the_posterior() {
    let robot = spec(ROBOT1D);
    let prior = PriorGrid::from_init(&robot, 400).unwrap();
    let err = ErrFn::for_sensing_action(&robot, "sonar").unwrap();
    let p = bayes_posterior(&prior, &err, &Value::Real(5.0), &phi(&robot, "h <= 9")).unwrap();
    assert!((p - 0.97).abs() < 0.01, "got {p}");
    // Agreement with the engine's quadrature value for the same query.
    assert!((p - 0.9759078335417833).abs() < 2e-3, "got {p}");
}

#[test]
fn constant_error_likelihood_changes_nothing() {
    let src = "
        theory flat
        fluent h : real
        init p = cases { 0.1 if 2 <= h and h <= 12 ; 0 }
        action ping(z: real) sensing { likelihood = 0.5 }
    ";
    let flat = spec(src);
    let prior = PriorGrid::from_init(&flat, 1000).unwrap();
    let err = ErrFn::for_sensing_action(&flat, "ping").unwrap();
    let formula = phi(&flat, "h <= 9");
    let posterior = bayes_posterior(&prior, &err, &Value::Real(3.25), &formula).unwrap();
    let before = prior.belief(&formula).unwrap();
    assert!((posterior - before).abs() < 1e-12);
    assert!((before - 0.7).abs() < 1e-12);
}

#[test]
fn wall_sensor_posterior_is_the_exact_rational() {
    let wall = spec(SENSEWALL);
    let prior = PriorGrid::from_init(&wall, 1000).unwrap();
    let err = ErrFn::for_sensing_action(&wall, "sensewall").unwrap();
    let formula = phi(&wall, "h <= 4");
    let p = bayes_posterior(&prior, &err, &Value::sym("close"), &formula).unwrap();
    assert!((p - 3.0 / 11.0).abs() < 1e-12, "got {p}");

    // Step one unit closer first, then sense: progression shifts every cell.
    let mv = wall.action_index("move").unwrap();
    let stepped = prior.progress(&wall, mv, &[Value::Real(1.0)]).unwrap();
    let p = bayes_posterior(&stepped, &err, &Value::sym("close"), &formula).unwrap();
    assert!((p - 5.0 / 12.0).abs() < 1e-12, "got {p}");
}

#[test]
fn tautology_posterior_is_exactly_one() {
    let robot = spec(ROBOT1D);
    let prior = PriorGrid::from_init(&robot, 50).unwrap();
    let err = ErrFn::for_sensing_action(&robot, "sonar").unwrap();
    let p = bayes_posterior(&prior, &err, &Value::Real(5.0), &Formula::True).unwrap();
    assert_eq!(p, 1.0);
}

#[test]
fn impossible_reading_is_zero_evidence() {
    let robot = spec(ROBOT1D);
    let prior = PriorGrid::from_init(&robot, 50).unwrap();
    let err = ErrFn::for_sensing_action(&robot, "sonar").unwrap();
    // The sonar never returns negative readings: likelihood 0 everywhere.
    let out = bayes_posterior(&prior, &err, &Value::Real(-1.0), &phi(&robot, "h <= 9"));
    assert_eq!(out.unwrap_err(), OracleError::ZeroEvidence);
}

#[test]
fn chained_conditioning_matches_the_engine_targets() {
    let robot = spec(ROBOT1D);
    let q = parse_query("bel (h <= 9) after [sonar(5), sonar(5)]", &robot).unwrap();
    let p = chained_posterior(&robot, &q, 400).unwrap();
    assert!((p - 0.9976290674451134).abs() < 2e-3, "got {p}");

    let wall = spec(SENSEWALL);
    let q = parse_query("bel (h <= 4) after [move(1), sensewall(close)]", &wall).unwrap();
    let p = chained_posterior(&wall, &q, 1000).unwrap();
    assert!((p - 5.0 / 12.0).abs() < 1e-12, "got {p}");
}

#[test]
fn noisy_actions_are_outside_the_conditioning_oracle() {
    let noisy = spec(NOISY1D);
    let q = parse_query("bel (h >= 11) after [nmove(-2)]", &noisy).unwrap();
    assert!(matches!(
        chained_posterior(&noisy, &q, 100),
        Err(OracleError::Unsupported(_))
    ));
}

#[test]
fn enumeration_reproduces_the_exact_discrete_values() {
    let win = spec(WINONLY);
    let cases = [
        ("bel (win = 0) after []", 0.4),
        ("bel (win = 0) after [setwin(0)]", 0.75),
        ("bel (win = 0) after [setwin(0), seewin(0)]", 0.875),
    ];
    for (text, expected) in cases {
        let q = parse_query(text, &win).unwrap();
        let p = enumerate_bel(&win, &q).unwrap();
        assert!((p - expected).abs() < 1e-12, "{text}: got {p}");
    }
}

#[test]
fn enumeration_ignores_supplied_actual_arguments() {
    let win = spec(WINONLY);
    let tagged = enumerate_bel(&win, &parse_query("bel (win = 0) after [setwin(0, 1)]", &win).unwrap())
        .unwrap();
    let plain = enumerate_bel(&win, &parse_query("bel (win = 0) after [setwin(0)]", &win).unwrap())
        .unwrap();
    assert_eq!(tagged.to_bits(), plain.to_bits());
}

#[test]
fn certain_prior_gives_belief_one() {
    let src = "
        theory twoval
        fluent f : { 0, 1 }
        init p = cases { 1 if f = 0 ; 0 }
    ";
    let two = spec(src);
    let q = parse_query("bel (f = 0) after []", &two).unwrap();
    assert_eq!(enumerate_bel(&two, &q).unwrap(), 1.0);
}

#[test]
fn enumeration_requires_finite_domains() {
    let robot = spec(ROBOT1D);
    let q = parse_query("bel (h <= 9) after []", &robot).unwrap();
    assert_eq!(
        enumerate_bel(&robot, &q).unwrap_err(),
        OracleError::InfiniteDomain("h".into())
    );
}

#[test]
fn contradictory_observation_is_zero_evidence() {
    let src = "
        theory pinned
        fluent f : { 0, 1 }
        init p = cases { 1 if f = 0 ; 0 }
        action see(z: { 0, 1 }) sensing { likelihood = cases { 1 if z = f ; 0 } }
    ";
    let pinned = spec(src);
    let q = parse_query("bel (f = 0) after [see(1)]", &pinned).unwrap();
    assert_eq!(enumerate_bel(&pinned, &q).unwrap_err(), OracleError::ZeroEvidence);
}

#[test]
fn non_bel_queries_are_refused() {
    let win = spec(WINONLY);
    let q = parse_query("knows (win = 0) after []", &win).unwrap();
    assert!(matches!(enumerate_bel(&win, &q), Err(OracleError::Unsupported(_))));
}

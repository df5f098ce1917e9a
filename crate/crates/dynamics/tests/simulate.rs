//! Progression, likelihood and trajectory tests over the shipped theories.

use dynamics::{
    ground_alt, likelihood, poss, progress, simulate, DynError, ResolvedAction, WorldPoint,
};
use expr_core::Value;
use proptest::prelude::*;
use theory_dsl::{parse_query, parse_theory, ActionKind, Domain, TheorySpec};

const ROBOT1D: &str = include_str!("../../../theories/robot1d.bat");
const NOISY1D: &str = include_str!("../../../theories/noisy1d.bat");
const SENSEWALL: &str = include_str!("../../../theories/sensewall.bat");
const WINDOW: &str = include_str!("../../../theories/window.bat");

fn robot1d() -> TheorySpec {
    parse_theory(ROBOT1D).unwrap()
}

/// Resolves the single intended action of `after [...]` query text and
/// grounds it with the given outcome.
fn act(spec: &TheorySpec, query: &str, outcome: &[Value]) -> ResolvedAction {
    let q = parse_query(query, spec).unwrap();
    ground_alt(spec, &q.alpha[0], outcome).unwrap()
}

#[test]
fn move_clamps_at_the_wall() {
    let spec = robot1d();
    let w = WorldPoint(vec![Value::Real(2.0), Value::Real(0.0)]);
    let a = act(&spec, "bel (true) after [move(4)]", &[]);
    let w2 = progress(&spec, &w, &a, 0.0).unwrap();
    assert_eq!(w2.get(0), &Value::Real(0.0));
    assert_eq!(w2.get(1), &Value::Real(0.0));
}

#[test]
fn up_shifts_the_second_fluent_only() {
    let spec = robot1d();
    let w = WorldPoint(vec![Value::Real(7.0), Value::Real(0.0)]);
    let a = act(&spec, "bel (true) after [up(2.5)]", &[]);
    let w2 = progress(&spec, &w, &a, 0.0).unwrap();
    assert_eq!(w2.get(0), &Value::Real(7.0));
    assert_eq!(w2.get(1), &Value::Real(2.5));
}

#[test]
fn noisy_window_toggle_applies_the_actual_outcome() {
    let spec = parse_theory(WINDOW).unwrap();
    let w = WorldPoint(vec![Value::Real(11.0), Value::sym("1")]);
    // Intended setwin(0); the world's actual outcome is 1.
    let q = parse_query("bel (true) after [setwin(0)]", &spec).unwrap();
    let outcome = [spec.fluents[1].domain.find_sym("1").map(Value::Sym).unwrap()];
    let a = ground_alt(&spec, &q.alpha[0], &outcome).unwrap();
    let w2 = progress(&spec, &w, &a, 0.0).unwrap();
    assert_eq!(w2.get(1), &Value::sym("1"));
}

#[test]
fn sensing_leaves_the_world_unchanged() {
    let spec = robot1d();
    let w = WorldPoint(vec![Value::Real(5.5), Value::Real(-3.0)]);
    let a = act(&spec, "bel (true) after [sonar(5)]", &[]);
    assert_eq!(progress(&spec, &w, &a, 0.0).unwrap(), w);
}

#[test]
fn preconditions_default_to_true_and_can_fail() {
    let spec = robot1d();
    let w = WorldPoint(vec![Value::Real(0.0), Value::Real(0.0)]);
    let a = act(&spec, "bel (true) after [move(1)]", &[]);
    assert!(poss(&spec, &w, &a, 0.0).unwrap());

    let guarded = parse_theory(
        "theory t\nfluent h : real\ninit p = cases { 1 if 0 <= h and h <= 1 ; 0 }\n\
         action pump() { poss = h > 0  h' = h - 1 }",
    )
    .unwrap();
    let w = WorldPoint(vec![Value::Real(0.0)]);
    let q = parse_query("bel (true) after [pump()]", &guarded).unwrap();
    let a = ground_alt(&guarded, &q.alpha[0], &[]).unwrap();
    assert!(!poss(&guarded, &w, &a, 0.0).unwrap());

    let t = simulate(&guarded, &w, &[a], 0.0).unwrap();
    assert_eq!(t.inexecutable_at, Some(0));
    assert_eq!(t.points.len(), 1);
    assert!(t.actions.is_empty());
}

#[test]
fn sonar_likelihood_is_the_error_density() {
    let spec = robot1d();
    let w = WorldPoint(vec![Value::Real(5.0), Value::Real(0.0)]);
    let a = act(&spec, "bel (true) after [sonar(5)]", &[]);
    // Independently computed 1/sqrt(8 pi).
    assert_eq!(likelihood(&spec, &w, &a, 0.0).unwrap(), 0.19947114020071635);

    // Negative readings are impossible: the guard zeroes the density.
    let a = act(&spec, "bel (true) after [sonar(-1)]", &[]);
    assert_eq!(likelihood(&spec, &w, &a, 0.0).unwrap(), 0.0);
}

#[test]
fn deterministic_likelihood_is_one() {
    let spec = robot1d();
    let w = WorldPoint(vec![Value::Real(9.0), Value::Real(1.0)]);
    let a = act(&spec, "bel (true) after [move(4)]", &[]);
    assert_eq!(likelihood(&spec, &w, &a, 0.0).unwrap(), 1.0);
}

#[test]
fn discrete_sensor_likelihood_follows_the_table() {
    let spec = parse_theory(SENSEWALL).unwrap();
    let close = Value::sym("close");
    let w = WorldPoint(vec![Value::Real(2.0)]);
    let q = parse_query("bel (true) after [sensewall(close)]", &spec).unwrap();
    let a = ground_alt(&spec, &q.alpha[0], &[]).unwrap();
    let _ = close;
    assert_eq!(likelihood(&spec, &w, &a, 0.0).unwrap(), 2.0 / 3.0);

    let w = WorldPoint(vec![Value::Real(9.0)]);
    assert_eq!(likelihood(&spec, &w, &a, 0.0).unwrap(), 1.0 / 3.0);
}

#[test]
fn ground_alt_replaces_actuals_and_checks_arity() {
    let spec = parse_theory(NOISY1D).unwrap();
    let q = parse_query("bel (true) after [nmove(-2)]", &spec).unwrap();

    let a = ground_alt(&spec, &q.alpha[0], &[Value::Real(-2.3)]).unwrap();
    assert_eq!(a.nominal, vec![Value::Real(-2.0)]);
    assert_eq!(a.actual, vec![Value::Real(-2.3)]);

    // A written actual argument is ignored: the outcome decides.
    let q = parse_query("bel (true) after [nmove(-2, -9)]", &spec).unwrap();
    let a = ground_alt(&spec, &q.alpha[0], &[Value::Real(-2.3)]).unwrap();
    assert_eq!(a.actual, vec![Value::Real(-2.3)]);

    assert!(matches!(
        ground_alt(&spec, &q.alpha[0], &[]),
        Err(DynError::ArityMismatch { .. })
    ));
}

#[test]
fn sensing_and_deterministic_actions_are_self_alternatives() {
    let spec = robot1d();
    let q = parse_query("bel (true) after [sonar(5)]", &spec).unwrap();
    let a = ground_alt(&spec, &q.alpha[0], &[]).unwrap();
    assert_eq!(a.nominal, vec![Value::Real(5.0)]);
    assert!(a.actual.is_empty());
}

#[test]
fn simulate_collapse_then_shift() {
    let spec = robot1d();
    let w0 = WorldPoint(vec![Value::Real(3.0), Value::Real(0.0)]);
    let beta = [
        act(&spec, "bel (true) after [move(4)]", &[]),
        act(&spec, "bel (true) after [move(-4)]", &[]),
    ];
    let t = simulate(&spec, &w0, &beta, 0.0).unwrap();
    let hs: Vec<f64> = t.points.iter().map(|p| p.get(0).as_real().unwrap()).collect();
    assert_eq!(hs, vec![3.0, 0.0, 4.0]);
    assert_eq!(t.inexecutable_at, None);
}

#[test]
fn empty_sequence_is_a_single_point_trajectory() {
    let spec = robot1d();
    let w0 = WorldPoint(vec![Value::Real(5.0), Value::Real(0.0)]);
    let t = simulate(&spec, &w0, &[], 0.0).unwrap();
    assert_eq!(t.points.len(), 1);
    assert_eq!(t.points[0], w0);
}

#[test]
fn noisy_move_applies_the_actual_not_the_nominal() {
    let spec = parse_theory(NOISY1D).unwrap();
    let q = parse_query("bel (true) after [nmove(-2)]", &spec).unwrap();
    let a = ground_alt(&spec, &q.alpha[0], &[Value::Real(-2.01)]).unwrap();
    let w0 = WorldPoint(vec![Value::Real(10.0)]);
    let t = simulate(&spec, &w0, &[a], 0.0).unwrap();
    assert_eq!(t.last().get(0), &Value::Real(12.01));
}

#[test]
fn runtime_domain_escape_is_reported() {
    let spec = parse_theory(
        "theory t\nfluent w : { a, b }\nfluent h : real\n\
         init p = cases { 1 if 0 <= h and h <= 1 ; 0 }\n\
         action set(x: { a, b, c }) { w' = x }",
    )
    .unwrap();
    let q = parse_query("bel (true) after [set(c)]", &spec).unwrap();
    let a = ground_alt(&spec, &q.alpha[0], &[]).unwrap();
    let w = WorldPoint(vec![Value::sym("a"), Value::Real(0.5)]);
    assert!(matches!(
        progress(&spec, &w, &a, 0.0),
        Err(DynError::DomainViolation { .. })
    ));
}

// ---- property tests ------------------------------------------------------

proptest! {
    /// Fluents without an update rule keep their exact value, across every
    /// action of every shipped theory.
    #[test]
    fn frame_invariance(
        src in prop::sample::select(vec![ROBOT1D, NOISY1D, SENSEWALL, WINDOW]),
        reals in proptest::collection::vec(-50.0f64..50.0, 12),
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 12),
        which in any::<prop::sample::Index>(),
    ) {
        let spec = parse_theory(src).unwrap();
        let idx = which.index(spec.actions.len());
        let decl = &spec.actions[idx];

        let mut reals = reals.into_iter();
        let mut picks = picks.into_iter();
        let mut value_of = |d: &Domain| match d {
            Domain::Real => Value::Real(reals.next().unwrap()),
            Domain::Finite(syms) => {
                Value::Sym(syms[picks.next().unwrap().index(syms.len())].clone())
            }
        };

        let w = WorldPoint(spec.fluents.iter().map(|f| value_of(&f.domain)).collect());
        let nominal = decl.nominal.iter().map(|p| value_of(&p.domain)).collect();
        let actual = decl.actual.iter().map(|p| value_of(&p.domain)).collect();
        let a = ResolvedAction { action: idx, nominal, actual };
        let w2 = progress(&spec, &w, &a, 0.0).unwrap();

        let updated: Vec<usize> = decl.ssa.iter().map(|(s, _)| *s).collect();
        for slot in 0..spec.fluents.len() {
            if decl.kind == ActionKind::Sensing || !updated.contains(&slot) {
                prop_assert_eq!(w2.get(slot), w.get(slot), "slot {} drifted", slot);
            }
        }
    }

    /// move(4) collapses every starting point at or below 4 to exactly 0.
    #[test]
    fn collapse_is_exact(h in -50.0f64..=4.0) {
        let spec = robot1d();
        let w = WorldPoint(vec![Value::Real(h), Value::Real(0.0)]);
        let a = act(&spec, "bel (true) after [move(4)]", &[]);
        let w2 = progress(&spec, &w, &a, 0.0).unwrap();
        prop_assert_eq!(w2.get(0).as_real().unwrap().to_bits(), 0.0f64.to_bits());
    }

    /// Simulation is a pure function: identical inputs give identical bits.
    #[test]
    fn simulate_is_deterministic(h in 2.0f64..12.0, x in -5.0f64..5.0) {
        let spec = robot1d();
        let src = format!("bel (true) after [move({x}), sonar(5)]");
        let q = parse_query(&src, &spec).unwrap();
        let beta: Vec<ResolvedAction> = q
            .alpha
            .iter()
            .map(|g| ground_alt(&spec, g, &[]).unwrap())
            .collect();
        let w0 = WorldPoint(vec![Value::Real(h), Value::Real(0.0)]);
        let t1 = simulate(&spec, &w0, &beta, 0.0).unwrap();
        let t2 = simulate(&spec, &w0, &beta, 0.0).unwrap();
        prop_assert_eq!(t1, t2);
    }
}

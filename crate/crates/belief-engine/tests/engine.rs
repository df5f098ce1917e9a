//! End-to-end engine checks on the shipped theories, pinned against
//! independently computed reference values (mpmath/numpy, midpoint rule on
//! the same grids) and closed forms.

use belief_engine::{
    bel, evaluate, knows, marginal, sample_initial, sample_outcome, Backend, BelError,
    BeliefResult, EngineConfig, QueryAnswer,
};
use expr_core::Value;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use theory_dsl::ast::{Overrides, Query, Severity, TheorySpec};
use theory_dsl::{parse_query, parse_theory, validate};

const ROBOT1D: &str = include_str!("../../../theories/robot1d.bat");
const NOISY1D: &str = include_str!("../../../theories/noisy1d.bat");
const SENSEWALL: &str = include_str!("../../../theories/sensewall.bat");
const WINDOW: &str = include_str!("../../../theories/window.bat");

fn theory(src: &str) -> TheorySpec {
    let spec = parse_theory(src).expect("theory parses");
    let errors: Vec<_> = validate(&spec)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    assert!(errors.is_empty(), "validation errors: {errors:?}");
    spec
}

fn q(spec: &TheorySpec, text: &str) -> Query {
    parse_query(text, spec).expect("query parses")
}

fn quad() -> EngineConfig {
    EngineConfig::default()
}

fn mc() -> EngineConfig {
    EngineConfig { backend: Backend::Mc, ..EngineConfig::default() }
}

fn bel_val(spec: &TheorySpec, text: &str, cfg: &EngineConfig) -> BeliefResult {
    bel(spec, &q(spec, text), cfg).expect("query evaluates")
}

#[test]
fn uniform_prior_mass_left_of_nine() {
    let spec = theory(ROBOT1D);
    let r = bel_val(&spec, "bel (h <= 9) after []", &quad());
    assert!((r.value - 0.7001499250374813).abs() < 1e-12, "got {}", r.value);
    assert!((r.value - 0.7).abs() < 1e-3);
    assert!((r.gamma - 1.0).abs() < 1e-9);
    assert_eq!(r.backend, Backend::Quad);
    // v is never observed, so its gaussian factor integrates out.
    assert_eq!(r.diagnostics.pruned_fluents, vec!["v".to_string()]);
    assert_eq!(r.diagnostics.continuous_dims, 1);
}

#[test]
fn wall_collapse_creates_an_atom() {
    let spec = theory(ROBOT1D);
    let at_wall = bel_val(&spec, "bel (h = 0) after [move(4)]", &quad());
    assert!((at_wall.value - 0.19990004997501248).abs() < 1e-12, "got {}", at_wall.value);

    let below3 = bel_val(&spec, "bel (h <= 3) after [move(4)]", &quad());
    assert!((below3.value - 0.5002498750624688).abs() < 1e-12, "got {}", below3.value);

    let back = bel_val(&spec, "bel (h = 4) after [move(4), move(-4)]", &quad());
    assert!((back.value - 0.19990004997501248).abs() < 1e-12, "got {}", back.value);

    // Reversed order: away first, so nothing ever collapses onto the wall.
    let rev = bel_val(&spec, "bel (h = 4) after [move(-4), move(4)]", &quad());
    assert_eq!(rev.value, 0.0);
}

#[test]
fn trivial_formula_has_belief_exactly_one() {
    let spec = theory(ROBOT1D);
    for query in ["bel (true) after []", "bel (true) after [move(4), up(1)]"] {
        let r = bel_val(&spec, query, &quad());
        assert_eq!(r.value, 1.0, "{query}");
        assert_eq!(r.numerator.to_bits(), r.gamma.to_bits(), "{query}");
    }
    let spec = theory(WINDOW);
    let r = bel_val(&spec, "bel (true) after [setwin(0), seewin(1)]", &quad());
    assert_eq!(r.value, 1.0);
}

#[test]
fn sonar_readings_sharpen_belief_monotonically() {
    let spec = theory(ROBOT1D);
    let b0 = bel_val(&spec, "bel (h <= 9) after []", &quad()).value;
    let b1 = bel_val(&spec, "bel (h <= 9) after [sonar(5)]", &quad()).value;
    let b2 = bel_val(&spec, "bel (h <= 9) after [sonar(5), sonar(5)]", &quad()).value;
    assert!((b1 - 0.9759078335417833).abs() < 1e-12, "got {b1}");
    assert!((b2 - 0.9976290674451134).abs() < 1e-12, "got {b2}");
    assert!(b0 < b1 && b1 < b2);
}

#[test]
fn cross_fluent_comparison_integrates_both_dims() {
    let spec = theory(ROBOT1D);
    let r = bel_val(&spec, "bel (h > 7 * v) after []", &quad());
    assert!((r.value - 0.5982010591070946).abs() < 5e-11, "got {}", r.value);
    assert_eq!(r.diagnostics.continuous_dims, 2);
    assert_eq!(r.diagnostics.total_nodes, Some(2001 * 2001));
}

#[test]
fn beliefs_about_unaffected_fluents_are_invariant() {
    let spec = theory(ROBOT1D);
    let moved = bel_val(&spec, "bel (-1 <= v and v <= 1) after [move(4)]", &quad());
    let still = bel_val(&spec, "bel (-1 <= v and v <= 1) after []", &quad());
    assert_eq!(moved.value.to_bits(), still.value.to_bits());
    assert_eq!(moved.value - still.value, 0.0);
    // P(|v| <= 1) for v ~ N(0, 16) is 2*Phi(0.25) - 1 ~ 0.1974; the midpoint
    // grid puts the interval edges mid-cell, so allow a cell of slack.
    assert!((still.value - 0.1974).abs() < 5e-3, "got {}", still.value);
}

#[test]
fn deterministic_shift_translates_belief() {
    let spec = theory(ROBOT1D);
    let shifted = bel_val(&spec, "bel (v <= 7) after [up(2.5)]", &quad());
    let direct = bel_val(&spec, "bel (v <= 4.5) after []", &quad());
    assert!((shifted.value - direct.value).abs() < 1e-6);
}

#[test]
fn point_predicates_carry_no_mass() {
    let spec = theory(ROBOT1D);
    let r = bel_val(&spec, "bel (h = 3 or h = 4 or h = 7) after []", &quad());
    assert!(r.value <= 2e-3, "got {}", r.value);

    let fine = EngineConfig { quad_points_per_dim: 20001, ..quad() };
    let r = bel_val(&spec, "bel (h = 3 or h = 4 or h = 7) after []", &fine);
    assert!(r.value <= 2e-4, "got {}", r.value);
}

#[test]
fn knowledge_is_support_not_probability() {
    let spec = theory(ROBOT1D);
    assert!(knows(&spec, &q(&spec, "knows (h >= 2 and h <= 12) after []"), &quad()).unwrap());
    assert!(!knows(&spec, &q(&spec, "knows (h <= 9) after []"), &quad()).unwrap());
    // After moving 4 towards the wall, every surviving initial state had h > 1.
    assert!(knows(&spec, &q(&spec, "knows (h@0 > 1) after [move(4)]"), &quad()).unwrap());

    assert!(knows(&spec, &q(&spec, "knows (h >= 2 and h <= 12) after []"), &mc()).unwrap());
    assert!(!knows(&spec, &q(&spec, "knows (h <= 9) after []"), &mc()).unwrap());
}

#[test]
fn noisy_effector_spreads_the_posterior() {
    let spec = theory(NOISY1D);
    let r = bel_val(&spec, "bel (h >= 11) after [nmove(-2)]", &quad());
    assert!((r.value - 0.9585728574616483).abs() < 5e-11, "got {}", r.value);
    assert!((r.value - 0.9585333418646808).abs() < 1e-2);
    assert_eq!(r.diagnostics.continuous_dims, 2);
}

#[test]
fn two_noisy_moves_cap_the_grid_resolution() {
    let spec = theory(NOISY1D);
    let r = bel_val(&spec, "bel (h >= 10) after [nmove(-2), nmove(2)]", &quad());
    assert!((r.value - 0.743032479056128).abs() < 2e-3, "got {}", r.value);
    assert_eq!(r.diagnostics.continuous_dims, 3);
    // 161^3 is the largest cube under the node budget.
    assert_eq!(r.diagnostics.grid_points_per_dim, Some(161));
    assert!(!r.diagnostics.notes.is_empty());
}

#[test]
fn sensing_after_noise_recovers_precision() {
    let spec = theory(NOISY1D);
    let r = bel_val(&spec, "bel (h >= 11) after [nmove(-2), sonar2(11.5)]", &quad());
    assert!((r.value - 0.9456887921693771).abs() < 5e-11, "got {}", r.value);

    let r = bel_val(&spec, "bel (h >= 11) after [nmove(-2), sonar2(11.5), sonar2(12.6)]", &quad());
    assert!((r.value - 0.9995866256840292).abs() < 5e-11, "got {}", r.value);
}

#[test]
fn binary_sensor_matches_closed_form_rationals() {
    let spec = theory(SENSEWALL);
    let r = bel_val(&spec, "bel (h <= 4) after [sensewall(close)]", &quad());
    assert!((r.value - 0.27260336210813263).abs() < 1e-12, "got {}", r.value);
    assert!((r.value - 3.0 / 11.0).abs() < 1e-3);

    let r = bel_val(&spec, "bel (h <= 4) after [move(1), sensewall(close)]", &quad());
    assert!((r.value - 0.4164931278633902).abs() < 1e-12, "got {}", r.value);
    assert!((r.value - 5.0 / 12.0).abs() < 1e-3);
}

#[test]
fn all_finite_questions_are_exact() {
    let spec = theory(WINDOW);
    let prior = bel_val(&spec, "bel (win = 0) after []", &quad());
    assert!((prior.value - 0.4).abs() < 1e-12, "got {}", prior.value);

    let set = bel_val(&spec, "bel (win = 0) after [setwin(0)]", &quad());
    assert!((set.value - 0.75).abs() < 1e-12, "got {}", set.value);

    let seen = bel_val(&spec, "bel (win = 0) after [setwin(0), seewin(0)]", &quad());
    assert!((seen.value - 0.875).abs() < 1e-12, "got {}", seen.value);

    // h plays no part: its uniform factor is pruned, leaving a pure sum.
    assert_eq!(seen.diagnostics.continuous_dims, 0);
    assert_eq!(seen.diagnostics.pruned_fluents, vec!["h".to_string()]);
}

#[test]
fn supplied_actual_arguments_change_nothing() {
    let spec = theory(NOISY1D);
    let tagged = bel_val(&spec, "bel (h >= 11) after [nmove(-2, -2.5)]", &quad());
    let plain = bel_val(&spec, "bel (h >= 11) after [nmove(-2)]", &quad());
    assert_eq!(tagged.value.to_bits(), plain.value.to_bits());
    assert_eq!(tagged.numerator.to_bits(), plain.numerator.to_bits());
    assert_eq!(tagged.gamma.to_bits(), plain.gamma.to_bits());

    let tagged = bel_val(&spec, "bel (h >= 11) after [nmove(-2, -2.5)]", &mc());
    let plain = bel_val(&spec, "bel (h >= 11) after [nmove(-2)]", &mc());
    assert_eq!(tagged.value.to_bits(), plain.value.to_bits());
}

#[test]
fn complementarity_within_backend_tolerance() {
    let spec = theory(ROBOT1D);
    let yes = bel_val(&spec, "bel (h <= 9) after [sonar(5)]", &quad());
    let no = bel_val(&spec, "bel (h > 9) after [sonar(5)]", &quad());
    assert!((yes.value + no.value - 1.0).abs() < 1e-9);

    let yes = bel_val(&spec, "bel (h <= 9) after [sonar(5)]", &mc());
    let no = bel_val(&spec, "bel (h > 9) after [sonar(5)]", &mc());
    let tol = 3.0 * (yes.stderr.unwrap() + no.stderr.unwrap()) + 1e-9;
    assert!((yes.value + no.value - 1.0).abs() <= tol);
}

#[test]
fn backends_agree_on_shipped_queries() {
    for (src, query) in [
        (ROBOT1D, "bel (h <= 9) after []"),
        (ROBOT1D, "bel (h = 0) after [move(4)]"),
        (ROBOT1D, "bel (h <= 9) after [sonar(5), sonar(5)]"),
        (NOISY1D, "bel (h >= 11) after [nmove(-2)]"),
        (NOISY1D, "bel (h >= 11) after [nmove(-2), sonar2(11.5)]"),
        (SENSEWALL, "bel (h <= 4) after [sensewall(close)]"),
        (WINDOW, "bel (win = 0) after [setwin(0), seewin(0)]"),
    ] {
        let spec = theory(src);
        let a = bel_val(&spec, query, &quad());
        let b = bel_val(&spec, query, &mc());
        let tol = (3.0 * b.stderr.unwrap()).max(1e-3);
        assert!(
            (a.value - b.value).abs() <= tol,
            "{query}: quad {} vs mc {} (tol {tol})",
            a.value,
            b.value
        );
    }
}

#[test]
fn same_seed_same_bits_any_thread_count() {
    let spec = theory(NOISY1D);
    let query = "bel (h >= 11) after [nmove(-2), sonar2(11.5)]";

    for cfg in [quad(), mc()] {
        let once = bel_val(&spec, query, &cfg);
        let twice = bel_val(&spec, query, &cfg);
        assert_eq!(once.value.to_bits(), twice.value.to_bits());
        assert_eq!(once.numerator.to_bits(), twice.numerator.to_bits());
        assert_eq!(once.gamma.to_bits(), twice.gamma.to_bits());

        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| bel_val(&spec, query, &cfg));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| bel_val(&spec, query, &cfg));
        assert_eq!(single.value.to_bits(), four.value.to_bits());
        assert_eq!(single.numerator.to_bits(), four.numerator.to_bits());
        assert_eq!(single.gamma.to_bits(), four.gamma.to_bits());
        assert_eq!(single.value.to_bits(), once.value.to_bits());
    }

    let r1 = bel_val(&spec, query, &EngineConfig { seed: 1, ..mc() });
    let r0 = bel_val(&spec, query, &mc());
    assert_ne!(r1.value.to_bits(), r0.value.to_bits());
}

#[test]
fn marginal_reports_the_wall_atom() {
    let spec = theory(ROBOT1D);
    let h = marginal(&spec, "h", &q(&spec, "bel (true) after [move(4)]").alpha, 16, (0.0, 8.0), &quad())
        .unwrap();
    assert_eq!(h.atoms.len(), 1);
    assert_eq!(h.atoms[0].value, 0.0);
    assert!((h.atoms[0].mass - 0.19990004997501248).abs() < 1e-12);
    // Off the atom the density stays flat at 0.1/unit: 0.05 per half-unit bin.
    for bin in &h.bins[1..] {
        assert!((bin.mass - 0.05).abs() < 2e-3, "bin {bin:?}");
    }
    assert!((h.reported_mass() - 1.0).abs() < 1e-9);
    assert_eq!(h.outside_mass, 0.0);

    let h = marginal(&spec, "h", &[], 10, (2.0, 12.0), &quad()).unwrap();
    assert!(h.atoms.is_empty());
    for bin in &h.bins {
        assert!((bin.mass - 0.1).abs() < 1e-3, "bin {bin:?}");
    }
}

#[test]
fn marginal_through_query_parser_and_mc() {
    let spec = theory(ROBOT1D);
    let query = q(&spec, "marginal h after [move(4)] bins=16 range=0,8");
    let QueryAnswer::Marginal(h) = evaluate(&spec, &query, &quad()).unwrap() else {
        panic!("expected a marginal answer");
    };
    assert_eq!(h.bins.len(), 16);
    assert_eq!(h.atoms.len(), 1);

    let QueryAnswer::Marginal(h) = evaluate(&spec, &query, &mc()).unwrap() else {
        panic!("expected a marginal answer");
    };
    assert_eq!(h.atoms.len(), 1);
    assert_eq!(h.atoms[0].value, 0.0);
    assert!((h.atoms[0].mass - 0.2).abs() < 1e-2);
    assert!((h.reported_mass() - 1.0).abs() < 1e-9);
}

#[test]
fn marginal_over_finite_fluent_is_refused() {
    let spec = theory(WINDOW);
    let err = marginal(&spec, "win", &[], 4, (0.0, 1.0), &quad()).unwrap_err();
    assert!(matches!(err, BelError::FiniteFluentMarginal(name) if name == "win"));
}

#[test]
fn impossible_history_is_a_degenerate_belief() {
    let src = "
        theory blocked
        fluent h : real
        init p = cases { 0.1 if 2 <= h and h <= 12 ; 0 }
        action stuck() { poss = false }
    ";
    let spec = theory(src);
    for cfg in [quad(), mc()] {
        let err = bel(&spec, &q(&spec, "bel (h <= 9) after [stuck()]"), &cfg).unwrap_err();
        assert!(matches!(err, BelError::DegenerateBelief), "{cfg:?}");
    }
}

#[test]
fn too_many_continuous_dimensions_are_refused() {
    let spec = theory(NOISY1D);
    let query = q(&spec, "bel (h >= 0) after [nmove(1), nmove(1), nmove(1), nmove(1)]");
    let err = bel(&spec, &query, &quad()).unwrap_err();
    assert!(matches!(err, BelError::DimensionLimit { needed: 5, limit: 4 }));
}

#[test]
fn unnormalizable_noisy_likelihood_is_refused() {
    let src = "
        theory odd
        fluent h : real
        init p = cases { 0.1 if 2 <= h and h <= 12 ; 0 }
        action jump(x: real ~ y: real) { likelihood = y * y  h' = h - y }
    ";
    let spec = parse_theory(src).unwrap();
    for cfg in [quad(), mc()] {
        let err = bel(&spec, &q(&spec, "bel (h <= 9) after [jump(1)]"), &cfg).unwrap_err();
        assert!(
            matches!(err, BelError::UnrecognizedLikelihoodForm { ref action, .. } if action == "jump"),
            "{cfg:?}: {err}"
        );
    }
}

#[test]
fn truncated_gaussian_prior_falls_back_to_pointwise_grid() {
    let src = "
        theory bump
        fluent h : real
        init p = cases { gauss(h; 5, 1) if 0 <= h and h <= 10 ; 0 }
    ";
    let spec = parse_theory(src).unwrap();
    let r = bel_val(&spec, "bel (h <= 5) after []", &quad());
    assert!((r.value - 0.5).abs() < 1e-2, "got {}", r.value);

    let r = bel_val(&spec, "bel (h <= 5) after []", &mc());
    assert!((r.value - 0.5).abs() < 1e-2, "got {}", r.value);
    assert!(!r.diagnostics.low_ess);
}

#[test]
fn gaussian_support_hint_tightens_the_proposal_box() {
    // A narrow truncated gaussian: the support scan intersects the guard
    // with the factor's 8-sigma envelope, so the box proposal stays usable.
    let src = "
        theory spike
        fluent h : real
        init p = cases { gauss(h; 5, 0.0001) if 0 <= h and h <= 10 ; 0 }
    ";
    let spec = parse_theory(src).unwrap();
    let r = bel_val(&spec, "bel (h <= 5) after []", &mc());
    assert!(!r.diagnostics.low_ess);
    let ess = r.diagnostics.effective_sample_size.unwrap();
    assert!(ess > 20_000.0, "ess {ess}");
    assert!((r.value - 0.5).abs() < 2e-2, "got {}", r.value);
}

#[test]
fn concentrated_mass_under_box_proposal_flags_low_ess() {
    // An opaque spike the support scan cannot tighten: the proposal stays
    // the full guard box and nearly all mass lands on a few particles.
    let src = "
        theory spike
        fluent h : real
        init p = cases { 1 / (0.0001 + (h - 5) * (h - 5)) if 0 <= h and h <= 10 ; 0 }
    ";
    let spec = parse_theory(src).unwrap();
    let r = bel_val(&spec, "bel (h <= 5) after []", &mc());
    assert!(r.diagnostics.low_ess);
    let ess = r.diagnostics.effective_sample_size.unwrap();
    assert!(ess < 20_000.0, "ess {ess}");
    assert!((r.value - 0.5).abs() < 5e-2, "got {}", r.value);
}

#[test]
fn equality_epsilon_widens_point_predicates() {
    let spec = theory(ROBOT1D);
    let exact = bel_val(&spec, "bel (h = 3) after []", &quad());
    assert_eq!(exact.value, 0.0);

    let wide = EngineConfig { equality_epsilon: 0.05, ..quad() };
    let r = bel_val(&spec, "bel (h = 3) after []", &wide);
    assert!((r.value - 0.01).abs() < 2e-3, "got {}", r.value);
}

#[test]
fn query_overrides_replace_run_configuration() {
    let spec = theory(ROBOT1D);
    let mut query = q(&spec, "bel (h <= 9) after []");
    query.overrides = Overrides {
        use_monte_carlo: Some(true),
        mc_samples: Some(5000),
        seed: Some(7),
        ..Overrides::default()
    };
    let r = bel(&spec, &query, &quad()).unwrap();
    assert_eq!(r.backend, Backend::Mc);
    assert_eq!(r.diagnostics.samples, Some(5000));
    assert!(r.stderr.is_some());
}

#[test]
fn initial_sampler_draws_from_the_recognized_product() {
    let spec = theory(ROBOT1D);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..500 {
        let (point, weight) = sample_initial(&spec, &mut rng).unwrap();
        let h = point.get(0).as_real().unwrap();
        assert!((2.0..=12.0).contains(&h));
        assert_eq!(weight, 1.0);
    }

    let spec = theory(WINDOW);
    let mut open = 0;
    for _ in 0..2000 {
        let (point, weight) = sample_initial(&spec, &mut rng).unwrap();
        assert_eq!(weight, 1.0);
        if point.get(1).as_sym().unwrap().as_ref() == "1" {
            open += 1;
        }
    }
    let frac = open as f64 / 2000.0;
    assert!((frac - 0.6).abs() < 0.05, "open fraction {frac}");
}

#[test]
fn outcome_sampler_follows_the_likelihood() {
    let noisy = theory(NOISY1D);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = dynamics::WorldPoint(vec![Value::Real(11.0)]);
    let nmove = noisy.action_index("nmove").unwrap();
    let mut sum = 0.0;
    for _ in 0..4000 {
        let (outcome, weight) =
            sample_outcome(&noisy, nmove, &[Value::Real(-2.0)], &start, &mut rng).unwrap();
        assert_eq!(weight, 1.0);
        sum += outcome[0].as_real().unwrap();
    }
    let mean = sum / 4000.0;
    assert!((mean + 2.0).abs() < 0.06, "outcome mean {mean}");

    let window = theory(WINDOW);
    let setwin = window.action_index("setwin").unwrap();
    let start = dynamics::WorldPoint(vec![Value::Real(11.0), Value::sym("0")]);
    let mut zeros = 0;
    for _ in 0..4000 {
        let (outcome, weight) =
            sample_outcome(&window, setwin, &[Value::sym("0")], &start, &mut rng).unwrap();
        assert_eq!(weight, 1.0);
        if outcome[0].as_sym().unwrap().as_ref() == "0" {
            zeros += 1;
        }
    }
    let frac = zeros as f64 / 4000.0;
    assert!((frac - 0.75).abs() < 0.04, "set-to-0 fraction {frac}");

    // Deterministic and sensing actions have empty outcomes.
    let robot = theory(ROBOT1D);
    let start = dynamics::WorldPoint(vec![Value::Real(5.0), Value::Real(0.0)]);
    let mv = robot.action_index("move").unwrap();
    let (outcome, weight) = sample_outcome(&robot, mv, &[Value::Real(4.0)], &start, &mut rng).unwrap();
    assert!(outcome.is_empty());
    assert_eq!(weight, 1.0);
}

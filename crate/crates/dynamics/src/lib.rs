//! Deterministic simulation of world points through ground action sequences.
//!
//! A [`WorldPoint`] assigns one value to every declared fluent and uniquely
//! identifies an initial situation. [`progress`] advances a point through one
//! fully-ground action: fluents with an update rule get the rule's value (all
//! right-hand sides read the pre-state, so updates within one action are
//! simultaneous), every other fluent keeps its value, and sensing actions
//! change nothing. [`simulate`] chains progressions into a [`Trajectory`],
//! stopping early — not failing — when a precondition is violated: an
//! inexecutable trajectory carries zero weight in belief, so simulation marks
//! it and lets the caller discard it.
//!
//! [`ground_alt`] enumerates how an intended action can actually turn out:
//! the alternative has the same action type and nominal arguments, with the
//! actual parameters replaced by a supplied outcome vector. Deterministic
//! and sensing actions take the empty outcome and are their own sole
//! alternative. Any actual arguments written in the intended action are
//! deliberately ignored here — belief ranges over all outcomes regardless of
//! what the query author typed.
//!
//! Everything is pure: trajectories for disjoint world points may be
//! computed concurrently.

use std::sync::Arc;

use thiserror::Error;

use expr_core::{eval_expr, eval_formula, Env, EvalError, Value};
use theory_dsl::{ActionDecl, ActionKind, GroundAction, TheorySpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynError {
    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("update of `{fluent}` by `{action}` produced `{value}`, outside its finite domain")]
    DomainViolation { action: String, fluent: String, value: String },

    #[error("likelihood of `{action}` evaluated to the negative value {value}")]
    NegativeLikelihood { action: String, value: f64 },

    #[error("outcome for `{action}` needs {expected} value(s), got {got}")]
    ArityMismatch { action: String, expected: usize, got: usize },

    #[error("outcome value `{value}` is outside the domain of parameter `{param}` of `{action}`")]
    DomainMismatch { action: String, param: String, value: String },
}

pub type DynResult<T> = Result<T, DynError>;

/// One value per declared fluent, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldPoint(pub Vec<Value>);

impl WorldPoint {
    pub fn get(&self, slot: usize) -> &Value {
        &self.0[slot]
    }
}

/// A fully-ground action occurrence: the declaration index plus concrete
/// nominal and actual argument values. For deterministic and sensing actions
/// `actual` is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedAction {
    pub action: usize,
    pub nominal: Vec<Value>,
    pub actual: Vec<Value>,
}

impl ResolvedAction {
    pub fn decl<'s>(&self, spec: &'s TheorySpec) -> &'s ActionDecl {
        &spec.actions[self.action]
    }

    /// Parameter bindings for evaluation environments: nominal then actual,
    /// in declaration order.
    pub fn bindings(&self, spec: &TheorySpec) -> Vec<(Arc<str>, Value)> {
        let decl = self.decl(spec);
        decl.nominal
            .iter()
            .zip(&self.nominal)
            .chain(decl.actual.iter().zip(&self.actual))
            .map(|(p, v)| (p.name.clone(), v.clone()))
            .collect()
    }
}

/// The result of pushing one action onto a trajectory buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Whether the precondition held. When false the successor state was
    /// *not* appended and the likelihood is meaningless (the whole
    /// trajectory weighs zero).
    pub possible: bool,
    /// The action's occurrence likelihood at the pre-state.
    pub likelihood: f64,
}

/// A simulated history: `points[0]` is the initial point and `points[k+1] =
/// progress(points[k], actions[k])`. When a precondition fails, `actions`
/// holds only the executed prefix and `inexecutable_at` names the offending
/// index (so `points.len() == actions.len() + 1` always holds).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<WorldPoint>,
    pub actions: Vec<ResolvedAction>,
    pub inexecutable_at: Option<usize>,
}

impl Trajectory {
    pub fn last(&self) -> &WorldPoint {
        self.points.last().expect("trajectories hold at least the initial point")
    }
}

/// Appends the successor of the last state in `buf` (a time-major trajectory
/// buffer holding `now + 1` states) under `decl` with the given parameter
/// bindings. This is the allocation-light core that `progress` and
/// `simulate` wrap and that belief backends drive directly.
///
/// On `possible: false`, and on error, `buf` is left exactly as it was.
pub fn step_into(
    spec: &TheorySpec,
    buf: &mut Vec<Value>,
    now: usize,
    decl: &ActionDecl,
    params: &[(Arc<str>, Value)],
    eps: f64,
) -> DynResult<StepOutcome> {
    let n = spec.fluents.len();
    debug_assert_eq!(buf.len(), (now + 1) * n, "buffer must end at state `now`");
    let old_len = buf.len();

    // Frame default: the successor starts as a copy of the pre-state, then
    // update rules overwrite their slots. Sensing actions skip the rules
    // entirely — they never change the world.
    buf.extend_from_within(old_len - n..old_len);
    let run = |buf: &mut Vec<Value>| -> DynResult<StepOutcome> {
        let (pre, succ) = buf.split_at_mut(old_len);
        let env = Env::new(pre, n, params, now).with_equality_epsilon(eps);

        if !eval_formula(&decl.precondition, &env)? {
            return Ok(StepOutcome { possible: false, likelihood: 0.0 });
        }
        let likelihood = eval_expr(&decl.likelihood, &env)?.as_real()?;
        if likelihood < 0.0 {
            return Err(DynError::NegativeLikelihood {
                action: decl.name.to_string(),
                value: likelihood,
            });
        }
        if decl.kind != ActionKind::Sensing {
            for (slot, e) in &decl.ssa {
                let v = eval_expr(e, &env)?;
                if !spec.fluents[*slot].domain.is_real()
                    && !spec.fluents[*slot].domain.contains(&v)
                {
                    return Err(DynError::DomainViolation {
                        action: decl.name.to_string(),
                        fluent: spec.fluents[*slot].name.to_string(),
                        value: v.to_string(),
                    });
                }
                succ[*slot] = v;
            }
        }
        Ok(StepOutcome { possible: true, likelihood })
    };

    match run(buf) {
        Ok(out) => {
            if !out.possible {
                buf.truncate(old_len);
            }
            Ok(out)
        }
        Err(e) => {
            buf.truncate(old_len);
            Err(e)
        }
    }
}

/// One-step progression. Sensing actions return the point unchanged.
pub fn progress(
    spec: &TheorySpec,
    w: &WorldPoint,
    a: &ResolvedAction,
    eps: f64,
) -> DynResult<WorldPoint> {
    let mut buf = w.0.clone();
    let params = a.bindings(spec);
    let out = step_into(spec, &mut buf, 0, a.decl(spec), &params, eps)?;
    if out.possible {
        let n = spec.fluents.len();
        Ok(WorldPoint(buf.split_off(n)))
    } else {
        // Progression through an inexecutable action is the frame default;
        // belief discards the weight separately via `poss`.
        Ok(w.clone())
    }
}

/// Evaluates the action's precondition at `w` (default `true`).
pub fn poss(spec: &TheorySpec, w: &WorldPoint, a: &ResolvedAction, eps: f64) -> DynResult<bool> {
    let params = a.bindings(spec);
    let env =
        Env::new(&w.0, spec.fluents.len(), &params, 0).with_equality_epsilon(eps);
    Ok(eval_formula(&a.decl(spec).precondition, &env)?)
}

/// Evaluates the action's occurrence likelihood at `w`; must be nonnegative.
pub fn likelihood(
    spec: &TheorySpec,
    w: &WorldPoint,
    a: &ResolvedAction,
    eps: f64,
) -> DynResult<f64> {
    let params = a.bindings(spec);
    let env =
        Env::new(&w.0, spec.fluents.len(), &params, 0).with_equality_epsilon(eps);
    let value = eval_expr(&a.decl(spec).likelihood, &env)?.as_real()?;
    if value < 0.0 {
        return Err(DynError::NegativeLikelihood {
            action: a.decl(spec).name.to_string(),
            value,
        });
    }
    Ok(value)
}

/// Grounds the alternative of an intended action for one outcome vector:
/// same action type, same nominal arguments, actual arguments set to the
/// outcome. Deterministic and sensing actions take the empty outcome and are
/// their own sole alternative. Intended actual arguments, if any were
/// written, are ignored.
pub fn ground_alt(
    spec: &TheorySpec,
    intended: &GroundAction,
    outcome: &[Value],
) -> DynResult<ResolvedAction> {
    let decl = &spec.actions[intended.action];
    if outcome.len() != decl.actual.len() {
        return Err(DynError::ArityMismatch {
            action: decl.name.to_string(),
            expected: decl.actual.len(),
            got: outcome.len(),
        });
    }
    for (p, v) in decl.actual.iter().zip(outcome) {
        if !p.domain.contains(v) {
            return Err(DynError::DomainMismatch {
                action: decl.name.to_string(),
                param: p.name.to_string(),
                value: v.to_string(),
            });
        }
    }
    Ok(ResolvedAction {
        action: intended.action,
        nominal: intended.nominal_args.clone(),
        actual: outcome.to_vec(),
    })
}

/// Runs a world point through a sequence of fully-ground actions.
pub fn simulate(
    spec: &TheorySpec,
    w0: &WorldPoint,
    beta: &[ResolvedAction],
    eps: f64,
) -> DynResult<Trajectory> {
    let n = spec.fluents.len();
    let mut buf = w0.0.clone();
    let mut executed = Vec::with_capacity(beta.len());
    let mut inexecutable_at = None;

    for (k, a) in beta.iter().enumerate() {
        let params = a.bindings(spec);
        let out = step_into(spec, &mut buf, k, a.decl(spec), &params, eps)?;
        if !out.possible {
            inexecutable_at = Some(k);
            break;
        }
        executed.push(a.clone());
    }

    let points = buf
        .chunks_exact(n)
        .map(|c| WorldPoint(c.to_vec()))
        .collect();
    Ok(Trajectory { points, actions: executed, inexecutable_at })
}

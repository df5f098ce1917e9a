//! Query planning: turns (theory, action sequence, asked-about fluents) into
//! an integration problem.
//!
//! Planning decides three things:
//! * which initial-state factors must be integrated and which can be pruned
//!   to their marginal masses (valid because a recognized initial weight is a
//!   product of independent per-fluent factors);
//! * how each noisy action's outcome space is represented — a gaussian
//!   density over one real parameter, or exhaustive enumeration of finite
//!   parameters;
//! * the evaluation epsilon threaded into every formula comparison.
//!
//! Weights are always computed from the declared likelihood and precondition
//! expressions along the simulated trajectory; recognition only places grid
//! points and sampling proposals.

use std::sync::Arc;

use expr_core::{Expr, Value};
use theory_dsl::ast::{ActionDecl, ActionKind, Domain, GroundAction, TheorySpec};
use theory_dsl::init::{analyze_init, const_eval, InitAnalysis, InitModel};

use crate::BelError;

/// Per-action parameter rows (name, value) plus, for each action, the row
/// indices of its actual parameters.
pub(crate) type BindingTemplates = (Vec<Vec<(Arc<str>, Value)>>, Vec<Vec<usize>>);

/// A recognized gaussian outcome density: the likelihood is
/// `gauss(sign*(y - center); mean, variance)` in the single real outcome
/// parameter `y`, so `y ~ Normal(center + sign*mean, variance)`.
pub(crate) struct GaussOutcome {
    pub center: Expr,
    /// Whether `center` is free of fluents. Quadrature needs a static centre
    /// to place a fixed grid; sampling evaluates it per particle.
    pub center_static: bool,
    pub sign: f64,
    pub mean: f64,
    pub variance: f64,
}

/// One finite-domain outcome parameter, enumerated exhaustively.
pub(crate) struct FiniteActual {
    /// Position in the action's actual-parameter list.
    pub index: usize,
    pub syms: Vec<Arc<str>>,
}

pub(crate) enum OutcomePlan {
    /// Deterministic or sensing action: no outcome dimensions.
    None,
    Gauss(GaussOutcome),
    Finite(Vec<FiniteActual>),
}

pub(crate) struct PlannedAction<'s> {
    pub decl: &'s ActionDecl,
    pub nominal: Vec<Value>,
    pub outcome: OutcomePlan,
}

pub(crate) enum InitPlan {
    /// Recognized product of independent per-fluent factors.
    Product {
        model: InitModel,
        /// Per slot: whether the factor must be integrated (`false` means
        /// prune to its marginal mass).
        kept: Vec<bool>,
        /// Product of the pruned factors' masses.
        pruned_mass: f64,
        /// One value per slot: pruned slots hold their representative point,
        /// kept slots a placeholder that each node/particle overwrites.
        template: Vec<Value>,
    },
    /// Fallback: the initial weight is evaluated pointwise on a grid over
    /// the inferred support box. No pruning is possible.
    Grid {
        /// Real slots with their support interval, in slot order.
        real_slots: Vec<(usize, f64, f64)>,
        /// Finite slots with their domain symbols, in slot order.
        finite_slots: Vec<(usize, Vec<Arc<str>>)>,
        template: Vec<Value>,
    },
}

pub(crate) struct QueryPlan<'s> {
    pub spec: &'s TheorySpec,
    pub actions: Vec<PlannedAction<'s>>,
    pub init: InitPlan,
    pub pruned_fluents: Vec<String>,
    pub eps: f64,
}

impl<'s> QueryPlan<'s> {
    pub fn n_fluents(&self) -> usize {
        self.spec.fluents.len()
    }

    pub fn template(&self) -> &[Value] {
        match &self.init {
            InitPlan::Product { template, .. } | InitPlan::Grid { template, .. } => template,
        }
    }

    /// Parameter-binding template for each action: nominal values first, then
    /// a placeholder per actual parameter (overwritten before every step).
    /// The second component maps actual-parameter positions to binding rows.
    pub fn binding_templates(&self) -> BindingTemplates {
        let mut templates = Vec::with_capacity(self.actions.len());
        let mut positions = Vec::with_capacity(self.actions.len());
        for pa in &self.actions {
            let mut rows: Vec<(Arc<str>, Value)> = pa
                .decl
                .nominal
                .iter()
                .zip(&pa.nominal)
                .map(|(p, v)| (p.name.clone(), v.clone()))
                .collect();
            let mut pos = Vec::with_capacity(pa.decl.actual.len());
            for p in &pa.decl.actual {
                pos.push(rows.len());
                let placeholder = match &p.domain {
                    Domain::Real => Value::Real(0.0),
                    Domain::Finite(syms) => Value::Sym(syms[0].clone()),
                };
                rows.push((p.name.clone(), placeholder));
            }
            templates.push(rows);
            positions.push(pos);
        }
        (templates, positions)
    }
}

/// Builds the integration plan for a query over `alpha` whose formula (or
/// marginal target) mentions exactly the fluent slots in `asked`.
pub(crate) fn build_plan<'s>(
    spec: &'s TheorySpec,
    alpha: &[GroundAction],
    asked: &[usize],
    eps: f64,
) -> Result<QueryPlan<'s>, BelError> {
    let actions: Vec<PlannedAction<'s>> = alpha
        .iter()
        .map(|ga| {
            let decl = &spec.actions[ga.action];
            Ok(PlannedAction {
                decl,
                nominal: ga.nominal_args.clone(),
                outcome: recognize_outcome(decl)?,
            })
        })
        .collect::<Result<_, BelError>>()?;

    let needed = needed_slots(spec, &actions, asked);

    let (init, pruned_fluents) = match analyze_init(spec) {
        InitAnalysis::Product(model) => {
            let kept: Vec<bool> = needed.clone();
            let mut pruned_mass = 1.0;
            let mut pruned_names = Vec::new();
            let mut template = Vec::with_capacity(spec.fluents.len());
            for (slot, factor) in model.factors.iter().enumerate() {
                template.push(factor.representative(&spec.fluents[slot].domain));
                if !kept[slot] {
                    pruned_mass *= factor.mass();
                    pruned_names.push(spec.fluents[slot].name.to_string());
                }
            }
            (InitPlan::Product { model, kept, pruned_mass, template }, pruned_names)
        }
        InitAnalysis::GridOnly { bounds } => {
            let mut real_slots = Vec::new();
            let mut finite_slots = Vec::new();
            let mut template = Vec::with_capacity(spec.fluents.len());
            for (slot, f) in spec.fluents.iter().enumerate() {
                match &f.domain {
                    Domain::Real => {
                        let (lo, hi) = bounds[slot].ok_or_else(|| {
                            BelError::UnrecognizedInitForm(format!(
                                "no finite support interval for `{}`",
                                f.name
                            ))
                        })?;
                        real_slots.push((slot, lo, hi));
                        template.push(Value::Real(0.5 * (lo + hi)));
                    }
                    Domain::Finite(syms) => {
                        finite_slots.push((slot, syms.clone()));
                        template.push(Value::Sym(syms[0].clone()));
                    }
                }
            }
            (InitPlan::Grid { real_slots, finite_slots, template }, Vec::new())
        }
        InitAnalysis::Unrecognized => {
            return Err(BelError::UnrecognizedInitForm(
                "the initial weight is not a recognized product of uniform, gaussian, and \
                 finite-table factors, and no support box could be inferred"
                    .into(),
            ));
        }
    };

    Ok(QueryPlan { spec, actions, init, pruned_fluents, eps })
}

/// Slot-level closure of the fluents a query can observe: the asked-about
/// slots, everything any likelihood or precondition in `alpha` reads, and
/// transitively everything the successor-state expressions of needed slots
/// read. All other slots only ever feed values nobody looks at, so their
/// independent initial factors integrate out to constant masses.
fn needed_slots(spec: &TheorySpec, actions: &[PlannedAction<'_>], asked: &[usize]) -> Vec<bool> {
    let n = spec.fluents.len();
    let mut needed = vec![false; n];
    for &s in asked {
        needed[s] = true;
    }
    for pa in actions {
        pa.decl.precondition.for_each_fluent(&mut |slot, _| needed[slot] = true);
        pa.decl.likelihood.for_each_fluent(&mut |slot, _| needed[slot] = true);
    }
    loop {
        let mut grew = false;
        for s in 0..n {
            if !needed[s] {
                continue;
            }
            for pa in actions {
                if let Some(e) = pa.decl.ssa_for(s) {
                    e.for_each_fluent(&mut |slot, _| {
                        if !needed[slot] {
                            needed[slot] = true;
                            grew = true;
                        }
                    });
                }
            }
        }
        if !grew {
            return needed;
        }
    }
}

/// Classifies an action's outcome space. Deterministic and sensing actions
/// have none; a noisy action needs either a single real parameter with a
/// gaussian-form likelihood, or finite parameters (enumerated exhaustively
/// under any likelihood shape).
pub(crate) fn recognize_outcome(decl: &ActionDecl) -> Result<OutcomePlan, BelError> {
    if decl.kind != ActionKind::Noisy {
        return Ok(OutcomePlan::None);
    }
    let n_real = decl.actual.iter().filter(|p| p.domain.is_real()).count();
    if n_real == 0 {
        let finites = decl
            .actual
            .iter()
            .enumerate()
            .map(|(index, p)| {
                let Domain::Finite(syms) = &p.domain else { unreachable!() };
                FiniteActual { index, syms: syms.clone() }
            })
            .collect();
        return Ok(OutcomePlan::Finite(finites));
    }
    if decl.actual.len() > 1 {
        return Err(BelError::UnrecognizedLikelihoodForm {
            action: decl.name.to_string(),
            detail: "a real outcome parameter cannot be combined with further outcome \
                     parameters"
                .into(),
        });
    }
    recognize_gauss(decl).map(OutcomePlan::Gauss)
}

fn recognize_gauss(decl: &ActionDecl) -> Result<GaussOutcome, BelError> {
    let y = &decl.actual[0].name;
    let fail = |detail: &str| BelError::UnrecognizedLikelihoodForm {
        action: decl.name.to_string(),
        detail: detail.into(),
    };
    let Expr::Gauss { arg, mean, variance } = &decl.likelihood else {
        return Err(fail(
            "the likelihood must be a single gauss(...) density in the outcome parameter",
        ));
    };
    let mean = const_eval(mean).ok_or_else(|| fail("the gauss mean must be a constant"))?;
    let variance = const_eval(variance)
        .filter(|v| *v > 0.0)
        .ok_or_else(|| fail("the gauss variance must be a positive constant"))?;

    let is_y = |e: &Expr| matches!(e, Expr::Param { name } if name.as_ref() == y.as_ref());
    let mentions_y = |e: &Expr| {
        let mut found = false;
        e.for_each_param(&mut |p| found |= p.as_ref() == y.as_ref());
        found
    };
    let (sign, center) = match arg.as_ref() {
        e if is_y(e) => (1.0, Expr::num(0.0)),
        Expr::Binary(expr_core::BinOp::Sub, lhs, rhs) if is_y(lhs) && !mentions_y(rhs) => {
            (1.0, rhs.as_ref().clone())
        }
        Expr::Binary(expr_core::BinOp::Sub, lhs, rhs) if is_y(rhs) && !mentions_y(lhs) => {
            (-1.0, lhs.as_ref().clone())
        }
        _ => {
            return Err(fail(
                "the gauss argument must be `y`, `y - e`, or `e - y`, with `e` not \
                 mentioning the outcome parameter `y`",
            ));
        }
    };
    let center_static = center.is_fluent_free();
    Ok(GaussOutcome { center, center_static, sign, mean, variance })
}

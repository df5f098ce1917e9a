//! Static well-formedness checks over a parsed theory.
//!
//! Validation returns diagnostics rather than failing: the caller decides
//! whether warnings are acceptable. An empty list means the theory
//! type-checks, sensing actions leave the world alone, noisy updates read
//! only actual outcome parameters, constant Gaussian variances are positive,
//! likelihoods stayed nonnegative under a deterministic sample sweep, and
//! the initial weight is in the recognized product form.

use expr_core::{eval_expr, CmpOp, Env, Expr, Formula, Value};

use crate::ast::{ActionDecl, ActionKind, Diagnostic, Domain, Span, TheorySpec};
use crate::init::{analyze_init, const_eval, InitAnalysis};

pub fn validate(spec: &TheorySpec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    match analyze_init(spec) {
        InitAnalysis::Product(_) => {}
        InitAnalysis::GridOnly { .. } => diags.push(Diagnostic::warning(
            spec.init_span,
            "initial weight is not a recognized product of interval, gauss and finite-table \
             factors; it is grid-only (evaluated pointwise, no factor-wise sampling)",
        )),
        InitAnalysis::Unrecognized => diags.push(Diagnostic::warning(
            spec.init_span,
            "initial weight exposes no support bounds for its real fluents; belief queries \
             over this theory will be rejected",
        )),
    }

    let no_params = &[][..];
    check_expr_statics(spec, no_params, &spec.init_p, spec.init_span, &mut diags);

    for a in &spec.actions {
        check_action(spec, a, &mut diags);
    }
    diags
}

fn check_action(spec: &TheorySpec, a: &ActionDecl, diags: &mut Vec<Diagnostic>) {
    if a.kind == ActionKind::Sensing {
        for (slot, _) in &a.ssa {
            diags.push(Diagnostic::error(
                a.span,
                format!(
                    "sensing action `{}` mutates fluent `{}`; sensing must leave every \
                     fluent unchanged",
                    a.name, spec.fluents[*slot].name
                ),
            ));
        }
    }

    if a.kind == ActionKind::Noisy {
        let nominal: Vec<&str> = a.nominal.iter().map(|p| &*p.name).collect();
        for (slot, e) in &a.ssa {
            e.for_each_param(&mut |p| {
                if nominal.contains(&&**p) {
                    diags.push(Diagnostic::error(
                        a.span,
                        format!(
                            "update of `{}` in noisy action `{}` reads nominal parameter \
                             `{p}`; updates see only the actual outcome parameters",
                            spec.fluents[*slot].name, a.name
                        ),
                    ));
                }
            });
        }
        let mut reads_actual = false;
        a.likelihood.for_each_param(&mut |p| {
            if a.actual.iter().any(|q| *q.name == **p) {
                reads_actual = true;
            }
        });
        if !reads_actual {
            diags.push(Diagnostic::warning(
                a.span,
                format!(
                    "likelihood of noisy action `{}` never reads its actual parameters, \
                     so every outcome weighs alike",
                    a.name
                ),
            ));
        }
    }

    for (slot, e) in &a.ssa {
        check_ssa_domain(spec, a, *slot, e, diags);
    }

    let params: Vec<_> = a.all_params().cloned().collect();
    check_expr_statics(spec, &params, &a.likelihood, a.span, diags);
    check_formula_statics(spec, &params, &a.precondition, a.span, diags);
    for (_, e) in &a.ssa {
        check_expr_statics(spec, &params, e, a.span, diags);
    }

    check_likelihood_samples(spec, a, diags);
}

// ---- SSA domain typing --------------------------------------------------

fn check_ssa_domain(
    spec: &TheorySpec,
    a: &ActionDecl,
    slot: usize,
    e: &Expr,
    diags: &mut Vec<Diagnostic>,
) {
    let fluent = &spec.fluents[slot];
    match &fluent.domain {
        Domain::Finite(_) => check_finite_update(spec, a, slot, e, diags),
        Domain::Real => check_real_update(spec, a, slot, e, diags),
    }
}

/// Every value position of a finite fluent's update must provably stay in
/// its domain: symbol literals of the domain, parameters/fluents whose whole
/// domain is a subset, or `cases` over such values. This is the exhaustive
/// check — each leaf ranges over a known finite set.
fn check_finite_update(
    spec: &TheorySpec,
    a: &ActionDecl,
    slot: usize,
    e: &Expr,
    diags: &mut Vec<Diagnostic>,
) {
    let target = &spec.fluents[slot].domain;
    let fname = &spec.fluents[slot].name;
    match e {
        Expr::Const(Value::Sym(s)) => {
            if target.find_sym(s).is_none() {
                diags.push(Diagnostic::error(
                    a.span,
                    format!(
                        "update of `{fname}` in `{}` can produce `{s}`, which is outside \
                         its domain",
                        a.name
                    ),
                ));
            }
        }
        Expr::Const(Value::Real(x)) => diags.push(Diagnostic::error(
            a.span,
            format!(
                "update of `{fname}` in `{}` produces the real {x}, but `{fname}` ranges \
                 over a finite domain",
                a.name
            ),
        )),
        Expr::Param { name } => {
            let dom = a.all_params().find(|p| p.name == *name).map(|p| &p.domain);
            check_subset(dom, target, &a.name, fname, name, a.span, diags);
        }
        Expr::Fluent { slot: s2, name, .. } => {
            check_subset(
                Some(&spec.fluents[*s2].domain),
                target,
                &a.name,
                fname,
                name,
                a.span,
                diags,
            );
        }
        Expr::Cases { branches, default } => {
            for (_, v) in branches {
                check_finite_update(spec, a, slot, v, diags);
            }
            check_finite_update(spec, a, slot, default, diags);
        }
        Expr::Unary(_, _) | Expr::Binary(_, _, _) | Expr::Gauss { .. } => {
            diags.push(Diagnostic::error(
                a.span,
                format!(
                    "update of `{fname}` in `{}` computes an arithmetic (real) result, \
                     but `{fname}` ranges over a finite domain",
                    a.name
                ),
            ))
        }
    }
}

fn check_subset(
    dom: Option<&Domain>,
    target: &Domain,
    action: &str,
    fname: &str,
    ident: &str,
    span: Span,
    diags: &mut Vec<Diagnostic>,
) {
    match dom {
        Some(Domain::Finite(syms)) => {
            for s in syms {
                if target.find_sym(s).is_none() {
                    diags.push(Diagnostic::error(
                        span,
                        format!(
                            "update of `{fname}` in `{action}` copies `{ident}`, which may \
                             be `{s}` — outside the domain of `{fname}`"
                        ),
                    ));
                }
            }
        }
        Some(Domain::Real) => diags.push(Diagnostic::error(
            span,
            format!(
                "update of `{fname}` in `{action}` copies the real-valued `{ident}`, but \
                 `{fname}` ranges over a finite domain"
            ),
        )),
        None => {} // unbound; cannot happen for parsed specs
    }
}

/// Real-fluent updates must not leak finite-domain values into value
/// positions (guards may mention them freely).
fn check_real_update(
    spec: &TheorySpec,
    a: &ActionDecl,
    slot: usize,
    e: &Expr,
    diags: &mut Vec<Diagnostic>,
) {
    let fname = &spec.fluents[slot].name;
    let mut flag = |ident: &str| {
        diags.push(Diagnostic::error(
            a.span,
            format!(
                "update of the real fluent `{fname}` in `{}` uses the finite-domain value \
                 `{ident}`",
                a.name
            ),
        ));
    };
    match e {
        Expr::Const(Value::Sym(s)) => flag(s),
        Expr::Const(Value::Real(_)) => {}
        Expr::Param { name } => {
            if a
                .all_params()
                .find(|p| p.name == *name)
                .is_some_and(|p| !p.domain.is_real())
            {
                flag(name);
            }
        }
        Expr::Fluent { slot: s2, name, .. } => {
            if !spec.fluents[*s2].domain.is_real() {
                flag(name);
            }
        }
        Expr::Unary(_, x) => check_real_update(spec, a, slot, x, diags),
        Expr::Binary(_, x, y) => {
            check_real_update(spec, a, slot, x, diags);
            check_real_update(spec, a, slot, y, diags);
        }
        Expr::Gauss { arg, mean, variance } => {
            check_real_update(spec, a, slot, arg, diags);
            check_real_update(spec, a, slot, mean, diags);
            check_real_update(spec, a, slot, variance, diags);
        }
        Expr::Cases { branches, default } => {
            for (_, v) in branches {
                check_real_update(spec, a, slot, v, diags);
            }
            check_real_update(spec, a, slot, default, diags);
        }
    }
}

// ---- constant structure checks ------------------------------------------

/// The static type of an expression: definitely real, definitely symbolic,
/// or not statically determined (`cases`).
#[derive(PartialEq, Clone, Copy)]
enum Kind {
    Real,
    Sym,
    Unknown,
}

fn kind_of(spec: &TheorySpec, params: &[crate::ast::ParamDecl], e: &Expr) -> Kind {
    match e {
        Expr::Const(Value::Real(_)) => Kind::Real,
        Expr::Const(Value::Sym(_)) => Kind::Sym,
        Expr::Fluent { slot, .. } => {
            if spec.fluents[*slot].domain.is_real() {
                Kind::Real
            } else {
                Kind::Sym
            }
        }
        Expr::Param { name } => match params.iter().find(|p| p.name == *name) {
            Some(p) if p.domain.is_real() => Kind::Real,
            Some(_) => Kind::Sym,
            None => Kind::Unknown,
        },
        Expr::Unary(_, _) | Expr::Binary(_, _, _) | Expr::Gauss { .. } => Kind::Real,
        Expr::Cases { .. } => Kind::Unknown,
    }
}

/// Walks an expression flagging statically-evident evaluation errors:
/// constant non-positive Gaussian variances, and comparisons that can only
/// fail at runtime (symbol vs real, ordered symbols).
fn check_expr_statics(
    spec: &TheorySpec,
    params: &[crate::ast::ParamDecl],
    e: &Expr,
    span: Span,
    diags: &mut Vec<Diagnostic>,
) {
    match e {
        Expr::Const(_) | Expr::Fluent { .. } | Expr::Param { .. } => {}
        Expr::Unary(_, a) => check_expr_statics(spec, params, a, span, diags),
        Expr::Binary(_, a, b) => {
            check_expr_statics(spec, params, a, span, diags);
            check_expr_statics(spec, params, b, span, diags);
        }
        Expr::Gauss { arg, mean, variance } => {
            check_expr_statics(spec, params, arg, span, diags);
            check_expr_statics(spec, params, mean, span, diags);
            check_expr_statics(spec, params, variance, span, diags);
            if let Some(v) = const_eval(variance) {
                if v.is_nan() || v <= 0.0 {
                    diags.push(Diagnostic::error(
                        span,
                        format!("NonPositiveVariance: gauss variance must be positive, got {v}"),
                    ));
                }
            }
        }
        Expr::Cases { branches, default } => {
            for (g, v) in branches {
                check_formula_statics(spec, params, g, span, diags);
                check_expr_statics(spec, params, v, span, diags);
            }
            check_expr_statics(spec, params, default, span, diags);
        }
    }
}

fn check_formula_statics(
    spec: &TheorySpec,
    params: &[crate::ast::ParamDecl],
    f: &Formula,
    span: Span,
    diags: &mut Vec<Diagnostic>,
) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Not(g) => check_formula_statics(spec, params, g, span, diags),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            check_formula_statics(spec, params, a, span, diags);
            check_formula_statics(spec, params, b, span, diags);
        }
        Formula::Compare(op, a, b) => {
            check_expr_statics(spec, params, a, span, diags);
            check_expr_statics(spec, params, b, span, diags);
            let (ka, kb) = (kind_of(spec, params, a), kind_of(spec, params, b));
            if (ka == Kind::Real && kb == Kind::Sym) || (ka == Kind::Sym && kb == Kind::Real) {
                diags.push(Diagnostic::error(
                    span,
                    "comparison between a finite-domain value and a real can never \
                     evaluate"
                        .to_string(),
                ));
            } else if (ka == Kind::Sym || kb == Kind::Sym)
                && !matches!(op, CmpOp::Eq | CmpOp::Ne)
            {
                diags.push(Diagnostic::error(
                    span,
                    format!("ordered comparison `{op}` is undefined on finite-domain values"),
                ));
            }
        }
    }
}

// ---- likelihood sign sweep ----------------------------------------------

/// Probe values for real dimensions in the sweep. Chosen to straddle zero,
/// hit integers and non-integers, and reach past the example ranges.
const REAL_PROBES: [f64; 6] = [-7.5, -1.0, 0.0, 0.5, 3.25, 11.0];
const MAX_SWEEP: usize = 4096;

/// Evaluates the likelihood on a cross-product sweep of probe values for
/// every fluent and parameter, flagging any negative result. Evaluation
/// errors at a probe point are skipped: guards may legitimately shield
/// partial operations, and unrelated runtime errors surface elsewhere.
fn check_likelihood_samples(spec: &TheorySpec, a: &ActionDecl, diags: &mut Vec<Diagnostic>) {
    if spec.fluents.is_empty() {
        return;
    }
    let dims: Vec<Vec<Value>> = spec
        .fluents
        .iter()
        .map(|f| probe_values(&f.domain))
        .chain(a.all_params().map(|p| probe_values(&p.domain)))
        .collect();
    let n_fluents = spec.fluents.len();

    let mut idx = vec![0usize; dims.len()];
    for _ in 0..MAX_SWEEP {
        let point: Vec<Value> = idx
            .iter()
            .zip(&dims)
            .map(|(&i, vals)| vals[i].clone())
            .collect();
        let (state, param_vals) = point.split_at(n_fluents);
        let params: Vec<_> = a
            .all_params()
            .zip(param_vals)
            .map(|(p, v)| (p.name.clone(), v.clone()))
            .collect();
        let env = Env::new(state, n_fluents, &params, 0);
        if let Ok(v) = eval_expr(&a.likelihood, &env) {
            if let Ok(x) = v.as_real() {
                if x < 0.0 {
                    diags.push(Diagnostic::error(
                        a.span,
                        format!(
                            "likelihood of `{}` evaluates to the negative value {x} at a \
                             sampled point; likelihoods must be nonnegative",
                            a.name
                        ),
                    ));
                    return;
                }
            }
        }
        // Mixed-radix increment; stop after the last combination.
        let mut done = true;
        for (i, vals) in idx.iter_mut().zip(&dims) {
            *i += 1;
            if *i < vals.len() {
                done = false;
                break;
            }
            *i = 0;
        }
        if done {
            break;
        }
    }
}

fn probe_values(d: &Domain) -> Vec<Value> {
    match d {
        Domain::Real => REAL_PROBES.iter().copied().map(Value::Real).collect(),
        Domain::Finite(syms) => syms.iter().cloned().map(Value::Sym).collect(),
    }
}

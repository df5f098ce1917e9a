//! Independent reference computations for belief queries.
//!
//! Two deliberately simple evaluators live here, used to cross-check the main
//! engine rather than to be fast:
//!
//! * [`bayes_posterior`] — direct Bayesian conditioning of a fixed prior grid
//!   on one sensor reading: `posterior(φ) = Σ mass·err(z, state)·1[φ] / Σ
//!   mass·err(z, state)`.
//! * [`enumerate_bel`] — exhaustive enumeration of every initial-state and
//!   outcome combination for theories whose fluents and actual parameters all
//!   range over finite domains. Exponential cost is accepted.
//!
//! Both share the expression evaluator with the rest of the workspace (so
//! densities agree bit for bit) but none of the engine's integration code:
//! every loop below is written from the declarations directly.

use std::sync::Arc;

use dynamics::WorldPoint;
use expr_core::{eval_expr, eval_formula, gauss_density, Env, EvalError, Expr, Formula, Value};
use theory_dsl::ast::{ActionDecl, ActionKind, Domain, Query, QueryKind, TheorySpec};
use theory_dsl::init::{analyze_init, InitAnalysis, InitFactor};
use thiserror::Error;

/// Hard cap on grid nodes / enumeration branches; beyond this the oracle
/// refuses rather than grinding.
pub const MAX_ORACLE_NODES: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    /// Exhaustive enumeration needs every domain finite.
    #[error("`{0}` ranges over an infinite domain; exhaustive enumeration needs finite domains")]
    InfiniteDomain(String),
    /// The conditioning denominator is zero: the reading has likelihood zero
    /// against the whole prior.
    #[error("zero evidence: the observation has likelihood 0 everywhere on the prior")]
    ZeroEvidence,
    /// Anything outside the oracle's deliberately small scope.
    #[error("unsupported by the reference oracle: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

type Result<T> = std::result::Result<T, OracleError>;

// ---------------------------------------------------------------------------
// Prior grids
// ---------------------------------------------------------------------------

/// A fixed, explicit prior: world points with nonnegative masses summing to
/// something positive. Continuous fluents are represented by midpoint cells
/// whose mass is `density(center) × width`.
#[derive(Debug, Clone)]
pub struct PriorGrid {
    n_fluents: usize,
    nodes: Vec<(WorldPoint, f64)>,
}

impl PriorGrid {
    pub fn new(n_fluents: usize, nodes: Vec<(WorldPoint, f64)>) -> Result<Self> {
        let mut total = 0.0;
        for (point, mass) in &nodes {
            if point.0.len() != n_fluents {
                return Err(OracleError::Unsupported(format!(
                    "grid node has {} values, theory has {} fluents",
                    point.0.len(),
                    n_fluents
                )));
            }
            if mass.is_nan() || *mass < 0.0 {
                return Err(OracleError::Unsupported(format!("negative node mass {mass}")));
            }
            total += mass;
        }
        if total.is_nan() || total <= 0.0 {
            return Err(OracleError::ZeroEvidence);
        }
        Ok(PriorGrid { n_fluents, nodes })
    }

    pub fn n_fluents(&self) -> usize {
        self.n_fluents
    }

    pub fn nodes(&self) -> &[(WorldPoint, f64)] {
        &self.nodes
    }

    /// Builds the tensor-product midpoint grid of a recognized product-form
    /// initial weight: uniform factors get `cells` equal cells over their
    /// interval, gaussian factors `cells` cells over mean ± 8σ, finite
    /// factors one node per symbol.
    pub fn from_init(spec: &TheorySpec, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(OracleError::Unsupported("a prior grid needs at least one cell".into()));
        }
        let model = match analyze_init(spec) {
            InitAnalysis::Product(model) => model,
            _ => {
                return Err(OracleError::Unsupported(
                    "the initial weight is not a recognized product of independent factors"
                        .into(),
                ))
            }
        };

        // Per slot: the candidate (value, mass) pairs of that dimension.
        let mut axes: Vec<Vec<(Value, f64)>> = Vec::with_capacity(spec.fluents.len());
        for factor in &model.factors {
            let axis = match factor {
                InitFactor::Uniform { lo, hi, .. } => midpoints(*lo, *hi, cells)
                    .map(|x| (Value::Real(x), (hi - lo) / cells as f64))
                    .collect(),
                InitFactor::Gauss { mean, variance, .. } => {
                    let r = 8.0 * variance.sqrt();
                    let width = 2.0 * r / cells as f64;
                    midpoints(mean - r, mean + r, cells)
                        .map(|x| Ok((Value::Real(x), gauss_density(x, *mean, *variance)? * width)))
                        .collect::<Result<Vec<_>>>()?
                }
                InitFactor::Finite { slot, masses } => {
                    let Domain::Finite(syms) = &spec.fluents[*slot].domain else {
                        return Err(OracleError::Unsupported(format!(
                            "finite factor over real fluent `{}`",
                            spec.fluents[*slot].name
                        )));
                    };
                    syms.iter()
                        .zip(masses)
                        .map(|(s, m)| (Value::Sym(s.clone()), *m))
                        .collect()
                }
            };
            axes.push(axis);
        }

        let total: usize = axes.iter().map(Vec::len).try_fold(1usize, |a, b| {
            a.checked_mul(b).filter(|t| *t <= MAX_ORACLE_NODES)
        })
        .ok_or_else(|| {
            OracleError::Unsupported(format!("prior grid exceeds {MAX_ORACLE_NODES} nodes"))
        })?;

        let mut nodes = Vec::with_capacity(total);
        let mut stack = vec![(Vec::with_capacity(axes.len()), model.coeff)];
        while let Some((prefix, mass)) = stack.pop() {
            let depth = prefix.len();
            if depth == axes.len() {
                nodes.push((WorldPoint(prefix), mass));
                continue;
            }
            // Reverse keeps the emitted order equal to an odometer with the
            // last axis fastest; order is cosmetic, sums are order-checked.
            for (value, m) in axes[depth].iter().rev() {
                let mut next = prefix.clone();
                next.push(value.clone());
                stack.push((next, mass * m));
            }
        }
        PriorGrid::new(spec.fluents.len(), nodes)
    }

    /// Pushes every node through one deterministic action: masses are
    /// multiplied by the indicator of the precondition (and the likelihood,
    /// which defaults to 1), values by the per-fluent update rules.
    pub fn progress(&self, spec: &TheorySpec, action: usize, args: &[Value]) -> Result<PriorGrid> {
        let decl = &spec.actions[action];
        if decl.kind != ActionKind::Deterministic {
            return Err(OracleError::Unsupported(format!(
                "`{}` is not deterministic; the chained oracle only progresses \
                 noise-free actions",
                decl.name
            )));
        }
        let params = bind(decl, args, &[])?;
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (point, mass) in &self.nodes {
            let env = Env::new(&point.0, self.n_fluents, &params, 0);
            if !eval_formula(&decl.precondition, &env)? {
                continue;
            }
            let lik = eval_expr(&decl.likelihood, &env)?.as_real()?;
            if lik.is_nan() || lik < 0.0 {
                return Err(OracleError::Unsupported(format!(
                    "negative likelihood {lik} for `{}`",
                    decl.name
                )));
            }
            let mut next = point.0.clone();
            for (slot, rhs) in &decl.ssa {
                next[*slot] = eval_expr(rhs, &env)?;
            }
            nodes.push((WorldPoint(next), mass * lik));
        }
        PriorGrid::new(self.n_fluents, nodes)
    }

    /// Conditions the grid on one sensor reading: node masses are multiplied
    /// by the sensing precondition's indicator and the error likelihood.
    pub fn condition(&self, err: &ErrFn<'_>, z: &Value) -> Result<PriorGrid> {
        let params = bind(err.decl, std::slice::from_ref(z), &[])?;
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (point, mass) in &self.nodes {
            let env = Env::new(&point.0, self.n_fluents, &params, 0);
            if !eval_formula(&err.decl.precondition, &env)? {
                continue;
            }
            nodes.push((point.clone(), mass * err.eval(z, point)?));
        }
        PriorGrid::new(self.n_fluents, nodes)
    }

    /// The prior probability of `phi`: Σ mass·1[φ] / Σ mass.
    pub fn belief(&self, phi: &Formula) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (point, mass) in &self.nodes {
            let env = Env::new(&point.0, self.n_fluents, &[], 0);
            den += mass;
            if eval_formula(phi, &env)? {
                num += mass;
            }
        }
        if den.is_nan() || den <= 0.0 {
            return Err(OracleError::ZeroEvidence);
        }
        Ok(num / den)
    }
}

fn midpoints(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(move |i| lo + (i as f64 + 0.5) * step)
}

fn bind(
    decl: &ActionDecl,
    nominal: &[Value],
    actual: &[Value],
) -> Result<Vec<(Arc<str>, Value)>> {
    if nominal.len() != decl.nominal.len() || actual.len() != decl.actual.len() {
        return Err(OracleError::Unsupported(format!(
            "`{}` takes {}+{} parameters, got {}+{}",
            decl.name,
            decl.nominal.len(),
            decl.actual.len(),
            nominal.len(),
            actual.len()
        )));
    }
    Ok(decl
        .nominal
        .iter()
        .chain(&decl.actual)
        .zip(nominal.iter().chain(actual))
        .map(|(p, v)| (p.name.clone(), v.clone()))
        .collect())
}

// ---------------------------------------------------------------------------
// Sensor error functions
// ---------------------------------------------------------------------------

/// The error likelihood of one sensing action, `err(z, state)`: its declared
/// likelihood expression with the reading parameter bound to `z`.
#[derive(Debug, Clone, Copy)]
pub struct ErrFn<'s> {
    spec: &'s TheorySpec,
    decl: &'s ActionDecl,
}

impl<'s> ErrFn<'s> {
    /// Looks up a sensing action with a single reading parameter.
    pub fn for_sensing_action(spec: &'s TheorySpec, action: &str) -> Result<Self> {
        let decl = spec
            .actions
            .iter()
            .find(|d| &*d.name == action)
            .ok_or_else(|| OracleError::Unsupported(format!("unknown action `{action}`")))?;
        if decl.kind != ActionKind::Sensing {
            return Err(OracleError::Unsupported(format!("`{action}` is not a sensing action")));
        }
        if decl.nominal.len() != 1 {
            return Err(OracleError::Unsupported(format!(
                "`{action}` takes {} parameters; a sensor error function takes exactly one \
                 reading",
                decl.nominal.len()
            )));
        }
        Ok(ErrFn { spec, decl })
    }

    pub fn action_name(&self) -> &str {
        &self.decl.name
    }

    /// Evaluates the error likelihood of reading `z` at `state`.
    pub fn eval(&self, z: &Value, state: &WorldPoint) -> Result<f64> {
        let params = bind(self.decl, std::slice::from_ref(z), &[])?;
        let env = Env::new(&state.0, self.spec.fluents.len(), &params, 0);
        let lik = eval_expr(&self.decl.likelihood, &env)?.as_real()?;
        if lik.is_nan() || lik < 0.0 {
            return Err(OracleError::Unsupported(format!(
                "negative error likelihood {lik} for `{}`",
                self.decl.name
            )));
        }
        Ok(lik)
    }
}

/// Direct Bayesian conditioning: the posterior probability of `phi` after
/// observing reading `z` through the sensor described by `err`, starting
/// from `prior`. One reading only; chain [`PriorGrid::condition`] for more.
pub fn bayes_posterior(
    prior: &PriorGrid,
    err: &ErrFn<'_>,
    z: &Value,
    phi: &Formula,
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (point, mass) in prior.nodes() {
        let weight = mass * err.eval(z, point)?;
        den += weight;
        let env = Env::new(&point.0, prior.n_fluents, &[], 0);
        if eval_formula(phi, &env)? {
            num += weight;
        }
    }
    if den.is_nan() || den <= 0.0 {
        return Err(OracleError::ZeroEvidence);
    }
    Ok(num / den)
}

/// Answers a `bel` query over sensing and deterministic actions by chaining
/// [`PriorGrid::progress`] and [`PriorGrid::condition`] from the product-form
/// initial weight. Noisy actions and history references are out of scope.
pub fn chained_posterior(spec: &TheorySpec, q: &Query, cells: usize) -> Result<f64> {
    let phi = bel_formula(q)?;
    if !q.alpha.is_empty() && mentions_history(phi) {
        return Err(OracleError::Unsupported(
            "history references after actions are out of the oracle's scope".into(),
        ));
    }
    let mut grid = PriorGrid::from_init(spec, cells)?;
    for ga in &q.alpha {
        let decl = &spec.actions[ga.action];
        match decl.kind {
            ActionKind::Deterministic => {
                grid = grid.progress(spec, ga.action, &ga.nominal_args)?;
            }
            ActionKind::Sensing => {
                let err = ErrFn::for_sensing_action(spec, &decl.name)?;
                grid = grid.condition(&err, &ga.nominal_args[0])?;
            }
            ActionKind::Noisy => {
                return Err(OracleError::Unsupported(format!(
                    "`{}` is noisy; Bayesian conditioning covers sensing and deterministic \
                     actions only",
                    decl.name
                )));
            }
        }
    }
    grid.belief(phi)
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

/// Evaluates a `bel` query exactly by summing over every combination of
/// initial fluent values and action outcomes. Requires every fluent and
/// every actual parameter of the performed actions to have a finite domain.
pub fn enumerate_bel(spec: &TheorySpec, q: &Query) -> Result<f64> {
    let phi = bel_formula(q)?;
    let n = spec.fluents.len();
    for decl in &spec.fluents {
        if decl.domain.is_real() {
            return Err(OracleError::InfiniteDomain(decl.name.to_string()));
        }
    }
    for ga in &q.alpha {
        let decl = &spec.actions[ga.action];
        for p in &decl.actual {
            if matches!(p.domain, Domain::Real) {
                return Err(OracleError::InfiniteDomain(format!("{}.{}", decl.name, p.name)));
            }
        }
    }
    let eps = q.overrides.equality_epsilon.unwrap_or(0.0);

    // Every joint assignment of initial values, as one growing trace each.
    let mut branches: Vec<(Vec<Value>, f64)> = Vec::new();
    for state in finite_states(spec)? {
        let env = Env::new(&state, n, &[], 0).with_equality_epsilon(eps);
        let w = eval_expr(&spec.init_p, &env)?.as_real()?;
        if w.is_nan() || w < 0.0 {
            return Err(OracleError::Unsupported(format!("negative initial weight {w}")));
        }
        if w > 0.0 {
            branches.push((state, w));
        }
    }

    for (k, ga) in q.alpha.iter().enumerate() {
        // Supplied actual arguments describe what really happened; belief
        // still ranges over every alternative, so they are ignored here.
        let decl = &spec.actions[ga.action];
        let outcomes = outcome_combinations(decl)?;
        let mut next = Vec::with_capacity(branches.len() * outcomes.len());
        for (trace, w) in &branches {
            for outcome in &outcomes {
                if next.len() > MAX_ORACLE_NODES {
                    return Err(OracleError::Unsupported(format!(
                        "enumeration exceeds {MAX_ORACLE_NODES} branches"
                    )));
                }
                let params = bind(decl, &ga.nominal_args, outcome)?;
                let env = Env::new(trace, n, &params, k).with_equality_epsilon(eps);
                if !eval_formula(&decl.precondition, &env)? {
                    continue;
                }
                let lik = eval_expr(&decl.likelihood, &env)?.as_real()?;
                if lik.is_nan() || lik < 0.0 {
                    return Err(OracleError::Unsupported(format!(
                        "negative likelihood {lik} for `{}`",
                        decl.name
                    )));
                }
                if lik == 0.0 {
                    continue;
                }
                let mut grown = Vec::with_capacity(trace.len() + n);
                grown.extend_from_slice(trace);
                for slot in 0..n {
                    let value = match decl.ssa_for(slot) {
                        Some(rhs) => eval_expr(rhs, &env)?,
                        None => trace[k * n + slot].clone(),
                    };
                    grown.push(value);
                }
                next.push((grown, w * lik));
            }
        }
        branches = next;
    }

    let now = q.alpha.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for (trace, w) in &branches {
        den += w;
        let env = Env::new(trace, n, &[], now).with_equality_epsilon(eps);
        if eval_formula(phi, &env)? {
            num += w;
        }
    }
    if den.is_nan() || den <= 0.0 {
        return Err(OracleError::ZeroEvidence);
    }
    Ok(num / den)
}

fn bel_formula(q: &Query) -> Result<&Formula> {
    match &q.kind {
        QueryKind::Bel(phi) => Ok(phi),
        QueryKind::Knows(_) | QueryKind::Marginal { .. } => Err(OracleError::Unsupported(
            "the reference oracles answer `bel` queries only".into(),
        )),
    }
}

/// All joint assignments over the (finite) fluent domains, odometer order.
fn finite_states(spec: &TheorySpec) -> Result<Vec<Vec<Value>>> {
    let mut states = vec![Vec::new()];
    for decl in &spec.fluents {
        let Domain::Finite(syms) = &decl.domain else {
            return Err(OracleError::InfiniteDomain(decl.name.to_string()));
        };
        let mut grown = Vec::with_capacity(states.len() * syms.len());
        for state in &states {
            for sym in syms {
                if grown.len() > MAX_ORACLE_NODES {
                    return Err(OracleError::Unsupported(format!(
                        "state space exceeds {MAX_ORACLE_NODES} points"
                    )));
                }
                let mut next = state.clone();
                next.push(Value::Sym(sym.clone()));
                grown.push(next);
            }
        }
        states = grown;
    }
    Ok(states)
}

/// The outcome vectors an action can produce: one per joint assignment of
/// its actual parameters (a single empty outcome when there are none).
fn outcome_combinations(decl: &ActionDecl) -> Result<Vec<Vec<Value>>> {
    let mut combos = vec![Vec::new()];
    for p in &decl.actual {
        let Domain::Finite(syms) = &p.domain else {
            return Err(OracleError::InfiniteDomain(format!("{}.{}", decl.name, p.name)));
        };
        let mut grown = Vec::with_capacity(combos.len() * syms.len());
        for combo in &combos {
            for sym in syms {
                let mut next = combo.clone();
                next.push(Value::Sym(sym.clone()));
                grown.push(next);
            }
        }
        combos = grown;
    }
    Ok(combos)
}

fn mentions_history(f: &Formula) -> bool {
    fn in_expr(e: &Expr) -> bool {
        match e {
            Expr::Fluent { history, .. } => history.is_some(),
            Expr::Const(_) | Expr::Param { .. } => false,
            Expr::Unary(_, a) => in_expr(a),
            Expr::Binary(_, a, b) => in_expr(a) || in_expr(b),
            Expr::Gauss { arg, mean, variance } => {
                in_expr(arg) || in_expr(mean) || in_expr(variance)
            }
            Expr::Cases { branches, default } => {
                branches.iter().any(|(g, v)| mentions_history(g) || in_expr(v))
                    || in_expr(default)
            }
        }
    }
    match f {
        Formula::True | Formula::False => false,
        Formula::Compare(_, a, b) => in_expr(a) || in_expr(b),
        Formula::Not(a) => mentions_history(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            mentions_history(a) || mentions_history(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints_cover_the_interval() {
        let xs: Vec<f64> = midpoints(0.0, 1.0, 4).collect();
        assert_eq!(xs, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn grid_rejects_negative_and_empty_mass() {
        let node = |x: f64, m: f64| (WorldPoint(vec![Value::Real(x)]), m);
        assert!(PriorGrid::new(1, vec![node(0.0, -1.0)]).is_err());
        assert!(PriorGrid::new(1, vec![node(0.0, 0.0)]).is_err());
        assert!(PriorGrid::new(1, vec![node(0.0, 0.5), node(1.0, 0.0)]).is_ok());
    }
}

//! Expression and formula ASTs shared by every layer of the belief calculator,
//! together with a deterministic evaluator over fluent-value environments.
//!
//! Values are either finite machine reals or interned symbolic constants from
//! a declared finite domain. Expressions cover arithmetic, `min`/`max`/`abs`,
//! a Gaussian density atom `gauss(u; mean, var)`, and piecewise `cases`
//! blocks whose guards are formulas. Formulas are quantifier-free comparisons
//! closed under the usual connectives. A fluent reference may carry a history
//! index (`h@k`), pinning it to the state after the k-th action of the
//! trajectory held by the [`Env`]; without one it reads the environment's
//! "now" state.
//!
//! Evaluation is total over well-typed input: every path that would produce a
//! NaN or infinity — division by zero, non-positive Gaussian variance,
//! overflow — raises a typed [`EvalError`] instead.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Errors raised while evaluating expressions or formulas.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("gauss variance must be positive (got {0})")]
    NonPositiveVariance(f64),
    #[error("unbound reference `{0}`")]
    UnboundReference(String),
    #[error("history index {index} out of range (trajectory has {len} points)")]
    HistoryIndexOutOfRange { index: usize, len: usize },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("non-finite result in {0}")]
    NonFinite(&'static str),
}

pub type EvalResult<T> = Result<T, EvalError>;

/// A runtime value: a finite machine real, or a symbolic constant drawn from
/// a declared finite domain. Symbols are interned strings; the numerals of a
/// finite domain such as `{ 0, 1 }` are symbols, not reals, so equality on
/// them is exact identity.
#[derive(Debug, Clone)]
pub enum Value {
    Real(f64),
    Sym(Arc<str>),
}

impl Value {
    /// Wraps a real, rejecting NaN and infinities up front.
    pub fn real(x: f64) -> EvalResult<Value> {
        if x.is_finite() {
            Ok(Value::Real(x))
        } else {
            Err(EvalError::NonFinite("literal"))
        }
    }

    pub fn sym(s: impl Into<Arc<str>>) -> Value {
        Value::Sym(s.into())
    }

    /// The real inside, or a type error for symbols.
    pub fn as_real(&self) -> EvalResult<f64> {
        match self {
            Value::Real(x) => Ok(*x),
            Value::Sym(s) => Err(EvalError::TypeMismatch(format!(
                "expected a real, found symbol `{s}`"
            ))),
        }
    }

    pub fn as_sym(&self) -> EvalResult<&Arc<str>> {
        match self {
            Value::Sym(s) => Ok(s),
            Value::Real(x) => Err(EvalError::TypeMismatch(format!(
                "expected a symbol, found real {x}"
            ))),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => a == b,
            (Value::Sym(a), Value::Sym(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(x) => write!(f, "{x:?}"),
            Value::Sym(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        };
        f.write_str(s)
    }
}

/// Arithmetic expression AST. Fluent references carry the slot assigned by
/// the declaring theory so evaluation is an index lookup, and keep the name
/// for printing and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Value),
    Fluent {
        name: Arc<str>,
        slot: usize,
        /// `Some(k)`: the value after the k-th action (0 = initial state);
        /// `None`: the value at the environment's current state.
        history: Option<usize>,
    },
    Param { name: Arc<str> },
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// The Gaussian density N(arg; mean, variance) — a density in `arg`, not
    /// a probability; it integrates to 1 and requires variance > 0.
    Gauss {
        arg: Box<Expr>,
        mean: Box<Expr>,
        variance: Box<Expr>,
    },
    /// Piecewise definition: guards are tried in order and the first match
    /// selects the branch; the default applies when none matches.
    Cases {
        branches: Vec<(Formula, Expr)>,
        default: Box<Expr>,
    },
}

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Const(Value::Real(x))
    }

    pub fn fluent(name: impl Into<Arc<str>>, slot: usize) -> Expr {
        Expr::Fluent { name: name.into(), slot, history: None }
    }

    pub fn param(name: impl Into<Arc<str>>) -> Expr {
        Expr::Param { name: name.into() }
    }

    /// Visits every fluent reference in the expression.
    pub fn for_each_fluent(&self, f: &mut impl FnMut(usize, Option<usize>)) {
        match self {
            Expr::Const(_) | Expr::Param { .. } => {}
            Expr::Fluent { slot, history, .. } => f(*slot, *history),
            Expr::Unary(_, e) => e.for_each_fluent(f),
            Expr::Binary(_, a, b) => {
                a.for_each_fluent(f);
                b.for_each_fluent(f);
            }
            Expr::Gauss { arg, mean, variance } => {
                arg.for_each_fluent(f);
                mean.for_each_fluent(f);
                variance.for_each_fluent(f);
            }
            Expr::Cases { branches, default } => {
                for (g, e) in branches {
                    g.for_each_fluent(f);
                    e.for_each_fluent(f);
                }
                default.for_each_fluent(f);
            }
        }
    }

    /// Visits every parameter reference in the expression.
    pub fn for_each_param(&self, f: &mut impl FnMut(&Arc<str>)) {
        match self {
            Expr::Const(_) | Expr::Fluent { .. } => {}
            Expr::Param { name } => f(name),
            Expr::Unary(_, e) => e.for_each_param(f),
            Expr::Binary(_, a, b) => {
                a.for_each_param(f);
                b.for_each_param(f);
            }
            Expr::Gauss { arg, mean, variance } => {
                arg.for_each_param(f);
                mean.for_each_param(f);
                variance.for_each_param(f);
            }
            Expr::Cases { branches, default } => {
                for (g, e) in branches {
                    g.for_each_param(f);
                    e.for_each_param(f);
                }
                default.for_each_param(f);
            }
        }
    }

    /// True when the expression mentions no fluent at all (it then depends
    /// only on parameters and constants).
    pub fn is_fluent_free(&self) -> bool {
        let mut found = false;
        self.for_each_fluent(&mut |_, _| found = true);
        !found
    }
}

/// Quantifier-free boolean formulas over expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Formula {
        Formula::Compare(op, Box::new(a), Box::new(b))
    }

    /// Builder alongside `and`/`or`; not the `std::ops::Not` trait, which
    /// would put `!formula` syntax on a type that is not a boolean value.
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn for_each_fluent(&self, f: &mut impl FnMut(usize, Option<usize>)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Compare(_, a, b) => {
                a.for_each_fluent(f);
                b.for_each_fluent(f);
            }
            Formula::Not(g) => g.for_each_fluent(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.for_each_fluent(f);
                b.for_each_fluent(f);
            }
        }
    }

    pub fn for_each_param(&self, f: &mut impl FnMut(&Arc<str>)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Compare(_, a, b) => {
                a.for_each_param(f);
                b.for_each_param(f);
            }
            Formula::Not(g) => g.for_each_param(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.for_each_param(f);
                b.for_each_param(f);
            }
        }
    }
}

/// Evaluation environment: a trajectory of fluent-value states (index 0 is
/// the initial state, index k the state after k actions), the current state
/// index, and the parameter bindings of the action under evaluation.
///
/// States are stored time-major in one flat slice — `values[t * n_fluents +
/// slot]` — so environments are cheap to stack-allocate in inner loops.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    values: &'a [Value],
    n_fluents: usize,
    params: &'a [(Arc<str>, Value)],
    now: usize,
    equality_epsilon: f64,
}

impl<'a> Env<'a> {
    /// Builds an environment over `values`, which must hold a whole number of
    /// states of `n_fluents` values each, with `now` a valid state index.
    ///
    /// # Panics
    /// Panics on malformed shape; shapes are fixed by construction at every
    /// call site, so a violation is a programming error rather than input error.
    pub fn new(
        values: &'a [Value],
        n_fluents: usize,
        params: &'a [(Arc<str>, Value)],
        now: usize,
    ) -> Env<'a> {
        assert!(n_fluents > 0, "environment needs at least one fluent");
        assert_eq!(values.len() % n_fluents, 0, "ragged trajectory buffer");
        assert!(
            (now + 1) * n_fluents <= values.len(),
            "`now` index {now} out of range"
        );
        Env { values, n_fluents, params, now, equality_epsilon: 0.0 }
    }

    /// Widens `=`/`!=` on reals to |a - b| <= eps. Zero keeps them exact.
    pub fn with_equality_epsilon(mut self, eps: f64) -> Env<'a> {
        self.equality_epsilon = eps;
        self
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / self.n_fluents
    }

    pub fn now(&self) -> usize {
        self.now
    }

    fn fluent(&self, name: &str, slot: usize, history: Option<usize>) -> EvalResult<&Value> {
        let t = match history {
            None => self.now,
            Some(k) if k < self.n_states() => k,
            Some(k) => {
                return Err(EvalError::HistoryIndexOutOfRange { index: k, len: self.n_states() })
            }
        };
        if slot >= self.n_fluents {
            return Err(EvalError::UnboundReference(name.to_string()));
        }
        Ok(&self.values[t * self.n_fluents + slot])
    }

    fn param(&self, name: &str) -> EvalResult<&Value> {
        self.params
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, v)| v)
            .ok_or_else(|| EvalError::UnboundReference(name.to_string()))
    }
}

/// The Gaussian density N(u; mean, var) = exp(-(u-mean)^2 / 2 var) / sqrt(2 pi var).
///
/// Exposed so samplers and oracles compute bit-identical densities to the
/// evaluator. Variance must be positive.
pub fn gauss_density(u: f64, mean: f64, variance: f64) -> EvalResult<f64> {
    if variance.is_nan() || variance <= 0.0 {
        return Err(EvalError::NonPositiveVariance(variance));
    }
    let d = u - mean;
    let e = (-d * d / (2.0 * variance)).exp();
    let x = e / (2.0 * std::f64::consts::PI * variance).sqrt();
    if x.is_finite() {
        Ok(x)
    } else {
        Err(EvalError::NonFinite("gauss"))
    }
}

fn finite(x: f64, what: &'static str) -> EvalResult<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(EvalError::NonFinite(what))
    }
}

/// Evaluates an expression in an environment. Deterministic: identical
/// `(e, env)` always yields identical output bits.
pub fn eval_expr(e: &Expr, env: &Env<'_>) -> EvalResult<Value> {
    match e {
        Expr::Const(v) => Ok(v.clone()),
        Expr::Fluent { name, slot, history } => Ok(env.fluent(name, *slot, *history)?.clone()),
        Expr::Param { name } => Ok(env.param(name)?.clone()),
        Expr::Unary(op, a) => {
            let x = eval_expr(a, env)?.as_real()?;
            let y = match op {
                UnOp::Neg => -x,
                UnOp::Abs => x.abs(),
            };
            Ok(Value::Real(finite(y, "unary op")?))
        }
        Expr::Binary(op, a, b) => {
            let x = eval_expr(a, env)?.as_real()?;
            let y = eval_expr(b, env)?.as_real()?;
            let z = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x / y
                }
                BinOp::Min => x.min(y),
                BinOp::Max => x.max(y),
            };
            Ok(Value::Real(finite(z, "binary op")?))
        }
        Expr::Gauss { arg, mean, variance } => {
            let u = eval_expr(arg, env)?.as_real()?;
            let m = eval_expr(mean, env)?.as_real()?;
            let v = eval_expr(variance, env)?.as_real()?;
            Ok(Value::Real(gauss_density(u, m, v)?))
        }
        Expr::Cases { branches, default } => {
            for (guard, value) in branches {
                if eval_formula(guard, env)? {
                    return eval_expr(value, env);
                }
            }
            eval_expr(default, env)
        }
    }
}

/// Evaluates a formula in an environment; two-valued, never partial.
///
/// `and`/`or`/`->` short-circuit left to right, so case guards can shield
/// partial operations (`y != 0 and x / y > 1` never divides by zero).
/// Comparisons other than `=`/`!=` require both sides real; `=`/`!=` also
/// accept two symbols (identity), and on reals honor the environment's
/// equality epsilon.
pub fn eval_formula(f: &Formula, env: &Env<'_>) -> EvalResult<bool> {
    match f {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Not(g) => Ok(!eval_formula(g, env)?),
        Formula::And(a, b) => Ok(eval_formula(a, env)? && eval_formula(b, env)?),
        Formula::Or(a, b) => Ok(eval_formula(a, env)? || eval_formula(b, env)?),
        Formula::Implies(a, b) => Ok(!eval_formula(a, env)? || eval_formula(b, env)?),
        Formula::Compare(op, a, b) => {
            let va = eval_expr(a, env)?;
            let vb = eval_expr(b, env)?;
            compare_values(*op, &va, &vb, env.equality_epsilon)
        }
    }
}

/// Compares two values; symbols admit only `=`/`!=`.
pub fn compare_values(op: CmpOp, a: &Value, b: &Value, eps: f64) -> EvalResult<bool> {
    match (a, b) {
        (Value::Real(x), Value::Real(y)) => Ok(match op {
            CmpOp::Eq => (x - y).abs() <= eps,
            CmpOp::Ne => (x - y).abs() > eps,
            CmpOp::Lt => x < y,
            CmpOp::Le => x <= y,
            CmpOp::Gt => x > y,
            CmpOp::Ge => x >= y,
        }),
        (Value::Sym(x), Value::Sym(y)) => {
            let eq = Arc::ptr_eq(x, y) || x == y;
            match op {
                CmpOp::Eq => Ok(eq),
                CmpOp::Ne => Ok(!eq),
                _ => Err(EvalError::TypeMismatch(format!(
                    "ordered comparison `{op}` between symbols `{x}` and `{y}`"
                ))),
            }
        }
        _ => Err(EvalError::TypeMismatch(format!(
            "comparison `{op}` between a symbol and a real"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn env_of(values: &[Value]) -> Env<'_> {
        Env::new(values, 1, &[], 0)
    }

    #[test]
    fn max_clamps_move_at_the_wall() {
        // max(0, h - 4) with h = 2 collapses to exactly zero.
        let e = Expr::Binary(
            BinOp::Max,
            Box::new(Expr::num(0.0)),
            Box::new(Expr::Binary(
                BinOp::Sub,
                Box::new(Expr::fluent("h", 0)),
                Box::new(Expr::num(4.0)),
            )),
        );
        let vals = [Value::Real(2.0)];
        assert_eq!(eval_expr(&e, &env_of(&vals)).unwrap(), Value::Real(0.0));
    }

    #[test]
    fn standard_gauss_at_its_mean() {
        // Independently computed: 1/sqrt(2 pi).
        assert_eq!(gauss_density(0.0, 0.0, 1.0).unwrap(), 0.3989422804014327);
        // 1/sqrt(8 pi).
        assert_eq!(gauss_density(0.0, 0.0, 4.0).unwrap(), 0.19947114020071635);
    }

    #[test]
    fn cases_defaults_outside_the_guard() {
        // cases { 0.1 if 2 <= h and h <= 12 ; 0 } at h = 13 takes the default.
        let guard = Formula::and(
            Formula::cmp(CmpOp::Le, Expr::num(2.0), Expr::fluent("h", 0)),
            Formula::cmp(CmpOp::Le, Expr::fluent("h", 0), Expr::num(12.0)),
        );
        let e = Expr::Cases {
            branches: vec![(guard, Expr::num(0.1))],
            default: Box::new(Expr::num(0.0)),
        };
        let vals = [Value::Real(13.0)];
        assert_eq!(eval_expr(&e, &env_of(&vals)).unwrap(), Value::Real(0.0));
        let vals = [Value::Real(5.0)];
        assert_eq!(eval_expr(&e, &env_of(&vals)).unwrap(), Value::Real(0.1));
    }

    #[test]
    fn comparisons_and_collapse_point() {
        let vals = [Value::Real(5.0)];
        let f = Formula::cmp(CmpOp::Le, Expr::fluent("h", 0), Expr::num(9.0));
        assert!(eval_formula(&f, &env_of(&vals)).unwrap());

        // h = max(0, 2 - 4) satisfies h = 0 under exact comparison.
        let h = Expr::Binary(
            BinOp::Max,
            Box::new(Expr::num(0.0)),
            Box::new(Expr::Binary(
                BinOp::Sub,
                Box::new(Expr::num(2.0)),
                Box::new(Expr::num(4.0)),
            )),
        );
        let f = Formula::cmp(CmpOp::Eq, h, Expr::num(0.0));
        assert!(eval_formula(&f, &env_of(&vals)).unwrap());
    }

    #[test]
    fn history_reference_reads_the_initial_state() {
        // Trajectory h: 3 -> 0; (h@0 > 1) holds at now = 1.
        let vals = [Value::Real(3.0), Value::Real(0.0)];
        let env = Env::new(&vals, 1, &[], 1);
        let h0 = Expr::Fluent { name: "h".into(), slot: 0, history: Some(0) };
        let f = Formula::cmp(CmpOp::Gt, h0, Expr::num(1.0));
        assert!(eval_formula(&f, &env).unwrap());

        let h9 = Expr::Fluent { name: "h".into(), slot: 0, history: Some(9) };
        let f = Formula::cmp(CmpOp::Gt, h9, Expr::num(1.0));
        assert_eq!(
            eval_formula(&f, &env),
            Err(EvalError::HistoryIndexOutOfRange { index: 9, len: 2 })
        );
    }

    #[test]
    fn partial_operations_raise_typed_errors() {
        let vals = [Value::Real(1.0)];
        let env = env_of(&vals);
        let div = Expr::Binary(BinOp::Div, Box::new(Expr::num(1.0)), Box::new(Expr::num(0.0)));
        assert_eq!(eval_expr(&div, &env), Err(EvalError::DivisionByZero));

        let g = Expr::Gauss {
            arg: Box::new(Expr::num(0.0)),
            mean: Box::new(Expr::num(0.0)),
            variance: Box::new(Expr::num(-1.0)),
        };
        assert_eq!(eval_expr(&g, &env), Err(EvalError::NonPositiveVariance(-1.0)));

        let p = Expr::param("missing");
        assert_eq!(
            eval_expr(&p, &env),
            Err(EvalError::UnboundReference("missing".into()))
        );
    }

    #[test]
    fn short_circuit_guards_shield_partial_terms() {
        // false and (1/0 < 2) evaluates to false instead of raising.
        let vals = [Value::Real(1.0)];
        let div = Expr::Binary(BinOp::Div, Box::new(Expr::num(1.0)), Box::new(Expr::num(0.0)));
        let f = Formula::and(Formula::False, Formula::cmp(CmpOp::Lt, div, Expr::num(2.0)));
        assert_eq!(eval_formula(&f, &env_of(&vals)), Ok(false));
    }

    #[test]
    fn sym_comparison_is_identity_and_unordered() {
        let a = Value::sym("open");
        let b = Value::sym("closed");
        assert_eq!(compare_values(CmpOp::Eq, &a, &a, 0.0), Ok(true));
        assert_eq!(compare_values(CmpOp::Ne, &a, &b, 0.0), Ok(true));
        assert!(matches!(
            compare_values(CmpOp::Lt, &a, &b, 0.0),
            Err(EvalError::TypeMismatch(_))
        ));
        assert!(matches!(
            compare_values(CmpOp::Eq, &a, &Value::Real(0.0), 0.0),
            Err(EvalError::TypeMismatch(_))
        ));
    }

    #[test]
    fn equality_epsilon_widens_real_equality() {
        let a = Value::Real(1.0);
        let b = Value::Real(1.0 + 1e-9);
        assert_eq!(compare_values(CmpOp::Eq, &a, &b, 0.0), Ok(false));
        assert_eq!(compare_values(CmpOp::Eq, &a, &b, 1e-6), Ok(true));
        assert_eq!(compare_values(CmpOp::Ne, &a, &b, 1e-6), Ok(false));
    }

    proptest! {
        /// gauss is symmetric about its mean and nonnegative.
        #[test]
        fn gauss_symmetry(x in -1e6f64..1e6, m in -1e6f64..1e6, v in 1e-6f64..1e6) {
            let a = gauss_density(x, m, v).unwrap();
            let b = gauss_density(2.0 * m - x, m, v).unwrap();
            prop_assert!(a >= 0.0);
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }

        /// A cases block with guards G, not G and equal branch values is that
        /// value for every environment.
        #[test]
        fn cases_partition_is_invisible(h in -100.0f64..100.0, t in -100.0f64..100.0, val in -10.0f64..10.0) {
            let guard = Formula::cmp(CmpOp::Le, Expr::fluent("h", 0), Expr::num(t));
            let e = Expr::Cases {
                branches: vec![
                    (guard.clone(), Expr::num(val)),
                    (Formula::not(guard), Expr::num(val)),
                ],
                default: Box::new(Expr::num(f64::MAX)),
            };
            let vals = [Value::Real(h)];
            prop_assert_eq!(eval_expr(&e, &env_of(&vals)).unwrap(), Value::Real(val));
        }

        /// Evaluation is deterministic: same expression, same bits.
        #[test]
        fn evaluation_is_deterministic(h in -1e3f64..1e3, z in -1e3f64..1e3) {
            let e = Expr::Gauss {
                arg: Box::new(Expr::Binary(
                    BinOp::Sub,
                    Box::new(Expr::num(z)),
                    Box::new(Expr::fluent("h", 0)),
                )),
                mean: Box::new(Expr::num(0.0)),
                variance: Box::new(Expr::num(4.0)),
            };
            let vals = [Value::Real(h)];
            let a = eval_expr(&e, &env_of(&vals)).unwrap().as_real().unwrap();
            let b = eval_expr(&e, &env_of(&vals)).unwrap().as_real().unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

//! Structural analysis of the initial weight expression.
//!
//! Belief backends work best when `init p` is a product of independent
//! per-fluent factors: a uniform block on an interval, a Gaussian density, or
//! a finite weight table. The recognizer here decomposes the expression into
//! that form when it syntactically is one. Products admit exact per-factor
//! marginal masses (so unqueried dimensions can be integrated out in closed
//! form) and direct factor-wise sampling.
//!
//! Expressions that are not products but still expose two-sided support
//! bounds for every real fluent fall back to [`InitAnalysis::GridOnly`]: a
//! grid covers the support envelope and the weight is evaluated pointwise.
//! Anything else is [`InitAnalysis::Unrecognized`] and belief queries over
//! the theory are rejected downstream.

use std::sync::Arc;

use expr_core::{BinOp, CmpOp, Expr, Formula, UnOp, Value};

use crate::ast::{Domain, TheorySpec};

/// One independent factor of a recognized product-form initial weight.
#[derive(Clone, Debug, PartialEq)]
pub enum InitFactor {
    /// Constant density 1 on `[lo, hi]` (total mass `hi - lo`). Strict and
    /// non-strict interval bounds are not distinguished: the boundary has
    /// measure zero and midpoint grids never place a node on it.
    Uniform { slot: usize, lo: f64, hi: f64 },
    /// The normalized Gaussian density (total mass 1).
    Gauss { slot: usize, mean: f64, variance: f64 },
    /// One nonnegative weight per symbol of the finite domain, in
    /// declaration order.
    Finite { slot: usize, masses: Vec<f64> },
}

impl InitFactor {
    pub fn slot(&self) -> usize {
        match self {
            InitFactor::Uniform { slot, .. }
            | InitFactor::Gauss { slot, .. }
            | InitFactor::Finite { slot, .. } => *slot,
        }
    }

    /// Total unnormalized mass of the factor: ∫ for continuous factors, Σ
    /// for finite ones. Integrating a factor out multiplies weights by this.
    pub fn mass(&self) -> f64 {
        match self {
            InitFactor::Uniform { lo, hi, .. } => hi - lo,
            InitFactor::Gauss { .. } => 1.0,
            InitFactor::Finite { masses, .. } => masses.iter().sum(),
        }
    }

    /// A point of positive weight, used to fill fluent slots whose value is
    /// provably never read: the interval midpoint, the mean, or the heaviest
    /// symbol.
    pub fn representative(&self, domain: &Domain) -> Value {
        match self {
            InitFactor::Uniform { lo, hi, .. } => Value::Real(0.5 * (lo + hi)),
            InitFactor::Gauss { mean, .. } => Value::Real(*mean),
            InitFactor::Finite { masses, .. } => {
                let syms = match domain {
                    Domain::Finite(syms) => syms,
                    Domain::Real => unreachable!("finite factor over a real fluent"),
                };
                let best = masses
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map_or(0, |(i, _)| i);
                Value::Sym(syms[best].clone())
            }
        }
    }
}

/// A fully recognized product: `init_p(x⃗) = coeff · ∏ factorᵢ(xᵢ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitModel {
    pub coeff: f64,
    /// Exactly one factor per declared fluent, in slot order.
    pub factors: Vec<InitFactor>,
}

impl InitModel {
    /// Total mass of the whole initial weight (coeff times factor masses).
    pub fn total_mass(&self) -> f64 {
        self.coeff * self.factors.iter().map(InitFactor::mass).product::<f64>()
    }
}

/// Outcome of analyzing `init p`.
#[derive(Clone, Debug, PartialEq)]
pub enum InitAnalysis {
    Product(InitModel),
    /// Not an independent product, but every real fluent has a recognizable
    /// two-sided support envelope (entry per slot; `None` for finite
    /// slots). The weight must be evaluated pointwise on a grid.
    GridOnly { bounds: Vec<Option<(f64, f64)>> },
    Unrecognized,
}

/// Evaluates an expression built only from constants and arithmetic.
/// Division by zero and non-finite results yield `None`.
pub fn const_eval(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(Value::Real(x)) => Some(*x),
        Expr::Const(Value::Sym(_)) => None,
        Expr::Unary(UnOp::Neg, a) => Some(-const_eval(a)?),
        Expr::Unary(UnOp::Abs, a) => Some(const_eval(a)?.abs()),
        Expr::Binary(op, a, b) => {
            let x = const_eval(a)?;
            let y = const_eval(b)?;
            let z = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return None;
                    }
                    x / y
                }
                BinOp::Min => x.min(y),
                BinOp::Max => x.max(y),
            };
            z.is_finite().then_some(z)
        }
        _ => None,
    }
}

pub fn analyze_init(spec: &TheorySpec) -> InitAnalysis {
    if let Some(model) = try_product(spec) {
        return InitAnalysis::Product(model);
    }
    match try_bounds(spec) {
        Some(bounds) => InitAnalysis::GridOnly { bounds },
        None => InitAnalysis::Unrecognized,
    }
}

// ---- product recognition ------------------------------------------------

struct Collector<'a> {
    spec: &'a TheorySpec,
    coeff: f64,
    factors: Vec<Option<InitFactor>>,
}

fn try_product(spec: &TheorySpec) -> Option<InitModel> {
    let mut c = Collector { spec, coeff: 1.0, factors: vec![None; spec.fluents.len()] };
    c.collect(&spec.init_p)?;
    let mut factors = Vec::with_capacity(spec.fluents.len());
    for (slot, f) in c.factors.into_iter().enumerate() {
        match (f, &spec.fluents[slot].domain) {
            (Some(f), _) => factors.push(f),
            // A weight that never mentions a finite fluent is constant in
            // it: an implicit factor of mass 1 per symbol.
            (None, Domain::Finite(syms)) => {
                factors.push(InitFactor::Finite { slot, masses: vec![1.0; syms.len()] })
            }
            // Constant over all of ℝ is not integrable: no product form.
            (None, Domain::Real) => return None,
        }
    }
    Some(InitModel { coeff: c.coeff, factors })
}

impl Collector<'_> {
    fn collect(&mut self, e: &Expr) -> Option<()> {
        match e {
            Expr::Const(Value::Real(x)) if *x >= 0.0 => {
                self.coeff *= *x;
                Some(())
            }
            Expr::Binary(BinOp::Mul, a, b) => {
                self.collect(a)?;
                self.collect(b)
            }
            Expr::Gauss { arg, mean, variance } => {
                let slot = match &**arg {
                    Expr::Fluent { slot, history: None, .. } => *slot,
                    _ => return None,
                };
                if !self.spec.fluents[slot].domain.is_real() {
                    return None;
                }
                let mean = const_eval(mean)?;
                let variance = const_eval(variance)?;
                if variance.is_nan() || variance <= 0.0 {
                    return None;
                }
                self.add_factor(InitFactor::Gauss { slot, mean, variance })
            }
            Expr::Cases { branches, default } => self.collect_cases(branches, default),
            _ => None,
        }
    }

    fn collect_cases(&mut self, branches: &[(Formula, Expr)], default: &Expr) -> Option<()> {
        // Shape 1: a single guarded block with default 0 — the guard carves
        // the support (interval bounds and finite pins) and the branch value
        // is itself a product.
        if branches.len() == 1 && const_eval(default) == Some(0.0) {
            let (guard, value) = &branches[0];
            let mut bounds: Vec<(Option<f64>, Option<f64>)> =
                vec![(None, None); self.spec.fluents.len()];
            let mut pins: Vec<(usize, Arc<str>)> = Vec::new();
            conjuncts(self.spec, guard, &mut bounds, &mut pins)?;
            self.collect(value)?;
            for (slot, (lo, hi)) in bounds.iter().enumerate() {
                match (lo, hi) {
                    (None, None) => {}
                    (Some(lo), Some(hi)) if lo < hi => {
                        self.add_factor(InitFactor::Uniform { slot, lo: *lo, hi: *hi })?
                    }
                    _ => return None, // one-sided or empty interval
                }
            }
            for (slot, sym) in pins {
                let masses = one_hot(&self.spec.fluents[slot].domain, &sym)?;
                self.add_factor(InitFactor::Finite { slot, masses })?;
            }
            return Some(());
        }
        // Shape 2: a weight table over one finite fluent — every guard pins
        // the same fluent to a symbol and all values are constants.
        let table = self.finite_table(branches, default)?;
        self.add_factor(table)
    }

    /// Recognizes `cases { w₁ if f = s₁ ; … ; w_default }` over one finite
    /// fluent.
    fn finite_table(&self, branches: &[(Formula, Expr)], default: &Expr) -> Option<InitFactor> {
        let dflt = const_eval(default)?;
        if dflt.is_nan() || dflt < 0.0 {
            return None;
        }
        let mut slot: Option<usize> = None;
        let mut entries: Vec<(Arc<str>, f64)> = Vec::new();
        for (guard, value) in branches {
            let (s, sym) = pin_of(self.spec, guard)?;
            if *slot.get_or_insert(s) != s {
                return None; // mixes different fluents
            }
            let w = const_eval(value)?;
            if w.is_nan() || w < 0.0 {
                return None;
            }
            entries.push((sym, w));
        }
        let slot = slot?;
        let syms = match &self.spec.fluents[slot].domain {
            Domain::Finite(syms) => syms,
            Domain::Real => return None,
        };
        let masses = syms
            .iter()
            .map(|sym| {
                entries
                    .iter()
                    .find(|(s, _)| s == sym)
                    .map_or(dflt, |(_, w)| *w)
            })
            .collect();
        Some(InitFactor::Finite { slot, masses })
    }

    fn add_factor(&mut self, f: InitFactor) -> Option<()> {
        let slot = f.slot();
        match (&mut self.factors[slot], f) {
            (taken @ None, f) => {
                *taken = Some(f);
                Some(())
            }
            // Two tables over the same finite fluent multiply pointwise.
            (
                Some(InitFactor::Finite { masses, .. }),
                InitFactor::Finite { masses: other, .. },
            ) => {
                for (m, o) in masses.iter_mut().zip(other) {
                    *m *= o;
                }
                Some(())
            }
            // Any other collision (e.g. a Gaussian restricted to an
            // interval) is no longer an independent product.
            _ => None,
        }
    }
}

/// Decomposes a guard into per-slot interval bounds and finite pins.
/// Conjunctions only; repeated bounds tighten (max of lows, min of highs).
fn conjuncts(
    spec: &TheorySpec,
    f: &Formula,
    bounds: &mut [(Option<f64>, Option<f64>)],
    pins: &mut Vec<(usize, Arc<str>)>,
) -> Option<()> {
    match f {
        Formula::And(a, b) => {
            conjuncts(spec, a, bounds, pins)?;
            conjuncts(spec, b, bounds, pins)
        }
        Formula::Compare(op, lhs, rhs) => {
            if let Some((slot, sym)) = pin_of_compare(spec, *op, lhs, rhs) {
                pins.push((slot, sym));
                return Some(());
            }
            let (slot, is_upper, c) = interval_of_compare(spec, *op, lhs, rhs)?;
            let (lo, hi) = &mut bounds[slot];
            if is_upper {
                *hi = Some(hi.map_or(c, |h: f64| h.min(c)));
            } else {
                *lo = Some(lo.map_or(c, |l: f64| l.max(c)));
            }
            Some(())
        }
        _ => None,
    }
}

/// `f = sym` (either side) for a finite fluent.
fn pin_of(spec: &TheorySpec, f: &Formula) -> Option<(usize, Arc<str>)> {
    match f {
        Formula::Compare(op, lhs, rhs) => pin_of_compare(spec, *op, lhs, rhs),
        _ => None,
    }
}

fn pin_of_compare(
    spec: &TheorySpec,
    op: CmpOp,
    lhs: &Expr,
    rhs: &Expr,
) -> Option<(usize, Arc<str>)> {
    if op != CmpOp::Eq {
        return None;
    }
    let (slot, sym) = match (lhs, rhs) {
        (Expr::Fluent { slot, history: None, .. }, Expr::Const(Value::Sym(s))) => (*slot, s),
        (Expr::Const(Value::Sym(s)), Expr::Fluent { slot, history: None, .. }) => (*slot, s),
        _ => return None,
    };
    // The symbol must belong to this fluent's domain for the pin to make
    // sense as a table entry.
    spec.fluents[slot].domain.find_sym(sym).map(|s| (slot, s))
}

/// An ordered comparison bounding one real fluent by a constant. Returns
/// `(slot, is_upper_bound, constant)`. Strict and non-strict bounds are
/// treated alike (measure zero).
fn interval_of_compare(
    spec: &TheorySpec,
    op: CmpOp,
    lhs: &Expr,
    rhs: &Expr,
) -> Option<(usize, bool, f64)> {
    let fluent_slot = |e: &Expr| match e {
        Expr::Fluent { slot, history: None, .. } if spec.fluents[*slot].domain.is_real() => {
            Some(*slot)
        }
        _ => None,
    };
    match op {
        CmpOp::Le | CmpOp::Lt => {
            if let Some(slot) = fluent_slot(lhs) {
                Some((slot, true, const_eval(rhs)?)) // f <= c
            } else if let Some(slot) = fluent_slot(rhs) {
                Some((slot, false, const_eval(lhs)?)) // c <= f
            } else {
                None
            }
        }
        CmpOp::Ge | CmpOp::Gt => {
            if let Some(slot) = fluent_slot(lhs) {
                Some((slot, false, const_eval(rhs)?)) // f >= c
            } else if let Some(slot) = fluent_slot(rhs) {
                Some((slot, true, const_eval(lhs)?)) // c >= f
            } else {
                None
            }
        }
        CmpOp::Eq | CmpOp::Ne => None,
    }
}

fn one_hot(domain: &Domain, sym: &Arc<str>) -> Option<Vec<f64>> {
    match domain {
        Domain::Finite(syms) => {
            let idx = syms.iter().position(|s| s == sym)?;
            let mut masses = vec![0.0; syms.len()];
            masses[idx] = 1.0;
            Some(masses)
        }
        Domain::Real => None,
    }
}

// ---- grid-only support envelope -----------------------------------------

/// Walks the same product structure as the recognizer but only gathers
/// support bounds, tolerating factor collisions and joint (multi-fluent)
/// branch values. Succeeds when every real fluent ends up two-sided.
/// Gaussian atoms contribute an 8-sigma envelope.
fn try_bounds(spec: &TheorySpec) -> Option<Vec<Option<(f64, f64)>>> {
    let mut bounds: Vec<(Option<f64>, Option<f64>)> = vec![(None, None); spec.fluents.len()];
    scan(spec, &spec.init_p, &mut bounds)?;
    let mut out = Vec::with_capacity(spec.fluents.len());
    for (slot, decl) in spec.fluents.iter().enumerate() {
        match decl.domain {
            Domain::Finite(_) => out.push(None),
            Domain::Real => match bounds[slot] {
                (Some(lo), Some(hi)) if lo < hi => out.push(Some((lo, hi))),
                _ => return None,
            },
        }
    }
    Some(out)
}

fn scan(
    spec: &TheorySpec,
    e: &Expr,
    bounds: &mut [(Option<f64>, Option<f64>)],
) -> Option<()> {
    match e {
        Expr::Const(Value::Real(x)) if *x >= 0.0 => Some(()),
        Expr::Binary(BinOp::Mul, a, b) => {
            scan(spec, a, bounds)?;
            scan(spec, b, bounds)
        }
        Expr::Gauss { arg, mean, variance } => {
            if let Expr::Fluent { slot, history: None, .. } = &**arg {
                let m = const_eval(mean)?;
                let v = const_eval(variance)?;
                if v.is_nan() || v <= 0.0 {
                    return None;
                }
                let r = 8.0 * v.sqrt();
                let (lo, hi) = &mut bounds[*slot];
                *lo = Some(lo.map_or(m - r, |l: f64| l.max(m - r)));
                *hi = Some(hi.map_or(m + r, |h: f64| h.min(m + r)));
                Some(())
            } else {
                None
            }
        }
        Expr::Cases { branches, default } => {
            if branches.len() == 1 && const_eval(default) == Some(0.0) {
                let (guard, value) = &branches[0];
                let mut pins = Vec::new();
                conjuncts(spec, guard, bounds, &mut pins)?;
                // The branch value may mention several fluents jointly; it
                // only needs to be nonnegative, which the validator samples.
                // Gather any further bounds it exposes, but tolerate opaque
                // sub-expressions.
                let _ = scan(spec, value, bounds);
                return Some(());
            }
            // A finite table constrains no real fluent.
            let c = Collector { spec, coeff: 1.0, factors: vec![None; spec.fluents.len()] };
            c.finite_table(branches, default).map(|_| ())
        }
        _ => None,
    }
}

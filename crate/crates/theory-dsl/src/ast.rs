//! Declaration-level AST for action theories and queries.

use std::fmt;
use std::sync::Arc;

use expr_core::{Expr, Formula, Value};

/// A half-open region of the source text, with 1-based line/column of its
/// start. Spans never participate in structural equality: two parses of
/// equivalent text are equal even when whitespace shifted the positions.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A parse or validation finding, anchored to a source span.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn error(span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Error, span, message: message.into() }
    }

    pub fn warning(span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, span, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}: {}", self.span, self.message)
    }
}

/// The range of a fluent or action parameter: all machine reals, or a finite
/// set of symbolic constants. Integer numerals inside a finite domain are
/// symbols (`{ 0, 1 }` declares the symbols "0" and "1").
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Real,
    Finite(Vec<Arc<str>>),
}

impl Domain {
    pub fn is_real(&self) -> bool {
        matches!(self, Domain::Real)
    }

    /// Looks a symbol up by name, returning the interned instance from the
    /// declaration so all users share one allocation.
    pub fn find_sym(&self, name: &str) -> Option<Arc<str>> {
        match self {
            Domain::Real => None,
            Domain::Finite(vals) => vals.iter().find(|v| &***v == name).cloned(),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Real, Value::Real(_)) => true,
            (Domain::Finite(vals), Value::Sym(s)) => vals.iter().any(|d| d == s),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluentDecl {
    pub name: Arc<str>,
    pub domain: Domain,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: Arc<str>,
    pub domain: Domain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionKind {
    /// No noise: a single outcome, likelihood defaulting to 1.
    Deterministic,
    /// Reads the world without changing it; its reading argument is supplied
    /// by the world, and the action is its own sole alternative.
    Sensing,
    /// Carries nominal parameters (what the agent intends) and actual
    /// parameters (what the world executes); belief ranges over the actual
    /// values weighted by the likelihood.
    Noisy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionDecl {
    pub name: Arc<str>,
    pub nominal: Vec<ParamDecl>,
    /// Empty unless `kind` is `Noisy`.
    pub actual: Vec<ParamDecl>,
    pub kind: ActionKind,
    /// Executability condition over the pre-state; defaults to `true`.
    pub precondition: Formula,
    /// Occurrence likelihood over the pre-state and parameters; defaults to 1.
    pub likelihood: Expr,
    /// Per-fluent update rules `(slot, new-value expression)`, evaluated on
    /// the pre-state. Fluents absent from the map keep their value.
    pub ssa: Vec<(usize, Expr)>,
    pub span: Span,
}

impl ActionDecl {
    pub fn ssa_for(&self, slot: usize) -> Option<&Expr> {
        self.ssa.iter().find(|(s, _)| *s == slot).map(|(_, e)| e)
    }

    /// Nominal parameters followed by actual parameters.
    pub fn all_params(&self) -> impl Iterator<Item = &ParamDecl> {
        self.nominal.iter().chain(self.actual.iter())
    }
}

/// A parsed basic action theory: fluent and action declarations plus the
/// unnormalized initial weight expression over the fluents.
#[derive(Clone, Debug, PartialEq)]
pub struct TheorySpec {
    pub name: Arc<str>,
    pub fluents: Vec<FluentDecl>,
    pub actions: Vec<ActionDecl>,
    pub init_p: Expr,
    /// Span of the `init` keyword, for anchoring diagnostics about `init_p`.
    pub init_span: Span,
}

impl TheorySpec {
    pub fn n_fluents(&self) -> usize {
        self.fluents.len()
    }

    pub fn fluent_slot(&self, name: &str) -> Option<usize> {
        self.fluents.iter().position(|f| &*f.name == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| &*a.name == name)
    }
}

/// One intended ground action of a query. For noisy actions the actual
/// arguments may be written out but play no role in belief: the engine
/// ranges over all alternatives regardless.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundAction {
    /// Index into `TheorySpec::actions`.
    pub action: usize,
    pub nominal_args: Vec<Value>,
    pub actual_args: Option<Vec<Value>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum QueryKind {
    Bel(Formula),
    Knows(Formula),
    Marginal { fluent: usize, bins: usize, range: (f64, f64) },
}

/// Per-query engine overrides; unset fields inherit the run configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub use_monte_carlo: Option<bool>,
    pub mc_samples: Option<usize>,
    pub seed: Option<u64>,
    pub quad_points_per_dim: Option<usize>,
    pub gauss_truncation_sigmas: Option<f64>,
    pub equality_epsilon: Option<f64>,
}

/// A resolved belief/knowledge/marginal request against one theory.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub kind: QueryKind,
    /// The intended ground action sequence, first action first.
    pub alpha: Vec<GroundAction>,
    pub overrides: Overrides,
    /// The source text the query was parsed from.
    pub source: String,
}

//! Degrees of belief for noisy action theories.
//!
//! Given a theory (fluent declarations, an initial weight over fluent
//! vectors, and actions with preconditions, likelihoods, and update rules),
//! this crate evaluates `Bel(φ, after α)`: the normalized weight of the
//! initial states and noise outcomes whose simulated trajectory through the
//! intended action sequence `α` satisfies `φ`. Two interchangeable backends
//! share all trajectory semantics with the `dynamics` crate:
//!
//! * **quad** — midpoint quadrature on a tensor grid over the continuous
//!   dimensions, with finite dimensions enumerated exhaustively;
//! * **mc** — sequential importance sampling with per-particle counter-based
//!   RNG streams.
//!
//! Both produce the numerator and the normalizer γ on the same point set so
//! discretization bias largely cancels in the ratio, and both reduce with a
//! fixed chunk structure so results are bitwise reproducible for a given
//! configuration regardless of thread count.

use dynamics::{DynError, WorldPoint};
use expr_core::{EvalError, Formula, Value};
use rand::Rng;
use serde::Serialize;
use theory_dsl::ast::{Domain, GroundAction, Overrides, Query, QueryKind, TheorySpec};
use theory_dsl::init::{analyze_init, InitAnalysis};
use thiserror::Error;

mod histogram;
mod mc;
mod plan;
mod quad;
mod sum;

pub use histogram::{Histogram, HistogramAtom, HistogramBin};
pub use quad::MAX_QUAD_NODES;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BelError {
    #[error("degenerate belief: the normalizer gamma is zero for this query")]
    DegenerateBelief,

    #[error("quadrature needs {needed} continuous dimensions, above the limit of {limit}")]
    DimensionLimit { needed: usize, limit: usize },

    #[error("unsupported initial weight: {0}")]
    UnrecognizedInitForm(String),

    #[error("unsupported likelihood on `{action}`: {detail}")]
    UnrecognizedLikelihoodForm { action: String, detail: String },

    #[error("`{0}` ranges over a finite domain; marginal histograms need a real-valued fluent")]
    FiniteFluentMarginal(String),

    #[error("invalid engine configuration: {0}")]
    Config(String),

    #[error("negative weight from {context}: {value}")]
    NegativeWeight { context: String, value: f64 },

    #[error(transparent)]
    Dynamics(#[from] DynError),

    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Quad,
    Mc,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Quad => "quad",
            Backend::Mc => "mc",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EngineConfig {
    pub backend: Backend,
    /// Particle count for the mc backend.
    pub mc_samples: usize,
    /// Base seed; particle `i` uses RNG stream `i` of this seed.
    pub seed: u64,
    /// Requested grid resolution per continuous dimension (quad). May be
    /// reduced to respect the node budget; the diagnostics say when.
    pub quad_points_per_dim: usize,
    /// Gaussian axes extend this many standard deviations either side of
    /// their mean; the omitted tail mass is erfc(k/√2) per dimension.
    pub gauss_truncation_sigmas: f64,
    /// Most continuous dimensions quad will integrate.
    pub max_quad_dims: usize,
    /// Tolerance for `=`/`!=` between reals in formulas, preconditions, and
    /// case guards. Zero keeps equality exact.
    pub equality_epsilon: f64,
    /// A marginal reports an atom when at least this share of normalized
    /// weight lands on one bitwise-identical value.
    pub atom_threshold: f64,
}

impl Default for EngineConfig {
    fn default() -> EngineConfig {
        EngineConfig {
            backend: Backend::Quad,
            mc_samples: 200_000,
            seed: 0,
            quad_points_per_dim: 2001,
            gauss_truncation_sigmas: 8.0,
            max_quad_dims: 4,
            equality_epsilon: 0.0,
            atom_threshold: 0.01,
        }
    }
}

impl EngineConfig {
    /// Applies per-query overrides; unset fields keep their current value.
    pub fn with_overrides(mut self, ov: &Overrides) -> EngineConfig {
        if let Some(mc) = ov.use_monte_carlo {
            self.backend = if mc { Backend::Mc } else { Backend::Quad };
        }
        if let Some(n) = ov.mc_samples {
            self.mc_samples = n;
        }
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(n) = ov.quad_points_per_dim {
            self.quad_points_per_dim = n;
        }
        if let Some(t) = ov.gauss_truncation_sigmas {
            self.gauss_truncation_sigmas = t;
        }
        if let Some(e) = ov.equality_epsilon {
            self.equality_epsilon = e;
        }
        self
    }

    fn validate(&self) -> Result<(), BelError> {
        let bad = |msg: String| Err(BelError::Config(msg));
        if self.mc_samples == 0 {
            return bad("mc_samples must be positive".into());
        }
        if self.quad_points_per_dim == 0 {
            return bad("quad_points_per_dim must be positive".into());
        }
        if self.gauss_truncation_sigmas.is_nan() || self.gauss_truncation_sigmas <= 0.0 {
            return bad(format!(
                "gauss_truncation_sigmas must be positive, got {}",
                self.gauss_truncation_sigmas
            ));
        }
        if self.max_quad_dims == 0 {
            return bad("max_quad_dims must be positive".into());
        }
        if self.equality_epsilon.is_nan() || self.equality_epsilon < 0.0 {
            return bad(format!("equality_epsilon must be ≥ 0, got {}", self.equality_epsilon));
        }
        if !(0.0..=1.0).contains(&self.atom_threshold) {
            return bad(format!("atom_threshold must be in [0,1], got {}", self.atom_threshold));
        }
        Ok(())
    }
}

/// What a marginal backend hands to histogram assembly: per-node
/// `(value-bits, weight)` entries, the raw and display normalizers, and the
/// run diagnostics.
pub(crate) type MarginalParts = (Vec<(u64, f64)>, f64, f64, Diagnostics);

/// Run-level facts a caller may want to report alongside a result.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub continuous_dims: usize,
    pub finite_dims: usize,
    pub grid_points_per_dim: Option<usize>,
    pub total_nodes: Option<u64>,
    pub samples: Option<usize>,
    pub effective_sample_size: Option<f64>,
    /// Set when the effective sample size fell below 10% of the particle
    /// count.
    pub low_ess: bool,
    pub truncation_sigmas: f64,
    /// Fluents whose initial factors were integrated out to constant masses
    /// because nothing the query observes depends on them.
    pub pruned_fluents: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BeliefResult {
    /// numerator / gamma, clamped to [0, 1].
    pub value: f64,
    pub numerator: f64,
    /// The normalizer γ (always positive; a zero normalizer is an error).
    pub gamma: f64,
    /// Delta-method standard error (mc backend only).
    pub stderr: Option<f64>,
    pub backend: Backend,
    pub diagnostics: Diagnostics,
}

/// The answer to one parsed query, whichever kind it was.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryAnswer {
    Belief(BeliefResult),
    Knows { holds: bool, backend: Backend, samples: Option<usize> },
    Marginal(Histogram),
}

fn check_spec(spec: &TheorySpec) -> Result<(), BelError> {
    if spec.fluents.is_empty() {
        return Err(BelError::Config("the theory declares no fluents".into()));
    }
    Ok(())
}

fn formula_of(q: &Query) -> Result<&Formula, BelError> {
    match &q.kind {
        QueryKind::Bel(f) | QueryKind::Knows(f) => Ok(f),
        QueryKind::Marginal { .. } => {
            Err(BelError::Config("expected a formula query, got a marginal".into()))
        }
    }
}

fn asked_slots(phi: &Formula) -> Vec<usize> {
    let mut slots = Vec::new();
    phi.for_each_fluent(&mut |slot, _| {
        if !slots.contains(&slot) {
            slots.push(slot);
        }
    });
    slots
}

/// Evaluates `Bel(φ, after α)` for a `bel` (or `knows`) query.
pub fn bel(spec: &TheorySpec, q: &Query, cfg: &EngineConfig) -> Result<BeliefResult, BelError> {
    check_spec(spec)?;
    let cfg = cfg.with_overrides(&q.overrides);
    cfg.validate()?;
    let phi = formula_of(q)?;
    let plan = plan::build_plan(spec, &q.alpha, &asked_slots(phi), cfg.equality_epsilon)?;
    match cfg.backend {
        Backend::Quad => quad::run_bel(&plan, phi, &cfg),
        Backend::Mc => mc::run_bel(&plan, phi, &cfg),
    }
}

/// True when no positive-weight grid node (quad) or sampled particle (mc)
/// falsifies the formula.
pub fn knows(spec: &TheorySpec, q: &Query, cfg: &EngineConfig) -> Result<bool, BelError> {
    check_spec(spec)?;
    let cfg = cfg.with_overrides(&q.overrides);
    cfg.validate()?;
    let phi = formula_of(q)?;
    let plan = plan::build_plan(spec, &q.alpha, &asked_slots(phi), cfg.equality_epsilon)?;
    match cfg.backend {
        Backend::Quad => quad::run_knows(&plan, phi, &cfg),
        Backend::Mc => mc::run_knows(&plan, phi, &cfg),
    }
}

/// The marginal distribution of one real fluent after `alpha`, as per-bin
/// masses over `range` plus detected atoms.
pub fn marginal(
    spec: &TheorySpec,
    fluent: &str,
    alpha: &[GroundAction],
    bins: usize,
    range: (f64, f64),
    cfg: &EngineConfig,
) -> Result<Histogram, BelError> {
    let slot = spec
        .fluent_slot(fluent)
        .ok_or_else(|| BelError::Config(format!("unknown fluent `{fluent}`")))?;
    marginal_slot(spec, slot, alpha, bins, range, cfg, &Overrides::default())
}

#[allow(clippy::too_many_arguments)]
fn marginal_slot(
    spec: &TheorySpec,
    slot: usize,
    alpha: &[GroundAction],
    bins: usize,
    range: (f64, f64),
    cfg: &EngineConfig,
    overrides: &Overrides,
) -> Result<Histogram, BelError> {
    check_spec(spec)?;
    let cfg = cfg.with_overrides(overrides);
    cfg.validate()?;
    let decl = &spec.fluents[slot];
    if !decl.domain.is_real() {
        return Err(BelError::FiniteFluentMarginal(decl.name.to_string()));
    }
    if bins == 0 {
        return Err(BelError::Config("a marginal needs at least one bin".into()));
    }
    let (lo, hi) = range;
    // NaN bounds fail this check too.
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(BelError::Config(format!("empty marginal range {lo}..{hi}")));
    }
    let plan = plan::build_plan(spec, alpha, &[slot], cfg.equality_epsilon)?;
    let (entries, raw_gamma, display_gamma, diagnostics) = match cfg.backend {
        Backend::Quad => quad::run_marginal(&plan, slot, &cfg)?,
        Backend::Mc => mc::run_marginal(&plan, slot, &cfg)?,
    };
    Ok(histogram::assemble(
        decl.name.to_string(),
        range,
        bins,
        cfg.atom_threshold,
        entries,
        raw_gamma,
        display_gamma,
        cfg.backend,
        diagnostics,
    ))
}

/// Evaluates any parsed query, dispatching on its kind.
pub fn evaluate(spec: &TheorySpec, q: &Query, cfg: &EngineConfig) -> Result<QueryAnswer, BelError> {
    match &q.kind {
        QueryKind::Bel(_) => bel(spec, q, cfg).map(QueryAnswer::Belief),
        QueryKind::Knows(_) => {
            let effective = cfg.with_overrides(&q.overrides);
            let holds = knows(spec, q, cfg)?;
            let samples =
                matches!(effective.backend, Backend::Mc).then_some(effective.mc_samples);
            Ok(QueryAnswer::Knows { holds, backend: effective.backend, samples })
        }
        QueryKind::Marginal { fluent, bins, range } => {
            marginal_slot(spec, *fluent, &q.alpha, *bins, *range, cfg, &q.overrides)
                .map(QueryAnswer::Marginal)
        }
    }
}

/// Draws an initial world point from the recognized product form of the
/// initial weight. The returned proposal weight is the constant
/// `init_p(x) / proposal-density(x)` (the total initial mass).
pub fn sample_initial<R: Rng + ?Sized>(
    spec: &TheorySpec,
    rng: &mut R,
) -> Result<(WorldPoint, f64), BelError> {
    check_spec(spec)?;
    match analyze_init(spec) {
        InitAnalysis::Product(model) => {
            let mut values: Vec<Value> = vec![Value::Real(0.0); spec.fluents.len()];
            for factor in &model.factors {
                let slot = factor.slot();
                values[slot] = mc::draw_factor(factor, &spec.fluents[slot].domain, rng);
            }
            Ok((WorldPoint(values), model.total_mass()))
        }
        _ => Err(BelError::UnrecognizedInitForm(
            "the initial weight is not a recognized product of uniform, gaussian, and \
             finite-table factors; integrate on a grid instead"
                .into(),
        )),
    }
}

/// Draws an outcome vector for one noisy action occurrence at pre-state `w`,
/// using the action's likelihood as the proposal. The importance weight is
/// exactly 1 for gaussian outcomes and the enumeration total for finite
/// outcomes; deterministic and sensing actions yield an empty outcome.
pub fn sample_outcome<R: Rng + ?Sized>(
    spec: &TheorySpec,
    action: usize,
    nominal_args: &[Value],
    w: &WorldPoint,
    rng: &mut R,
) -> Result<(Vec<Value>, f64), BelError> {
    use rand_distr::StandardNormal;

    check_spec(spec)?;
    let decl = &spec.actions[action];
    if nominal_args.len() != decl.nominal.len() {
        return Err(BelError::Config(format!(
            "`{}` takes {} nominal argument(s), got {}",
            decl.name,
            decl.nominal.len(),
            nominal_args.len()
        )));
    }
    let n = spec.fluents.len();
    let bindings: Vec<_> = decl
        .nominal
        .iter()
        .zip(nominal_args)
        .map(|(p, v)| (p.name.clone(), v.clone()))
        .collect();

    match plan::recognize_outcome(decl)? {
        plan::OutcomePlan::None => Ok((Vec::new(), 1.0)),
        plan::OutcomePlan::Gauss(go) => {
            let env = expr_core::Env::new(&w.0, n, &bindings, 0);
            let c = expr_core::eval_expr(&go.center, &env)?.as_real()?;
            let z: f64 = rng.sample(StandardNormal);
            let y = c + go.sign * go.mean + go.variance.sqrt() * z;
            Ok((vec![Value::Real(y)], 1.0))
        }
        plan::OutcomePlan::Finite(fas) => {
            let mut cands: Vec<Vec<Value>> = vec![Vec::new()];
            for fa in &fas {
                cands = cands
                    .into_iter()
                    .flat_map(|prefix| {
                        fa.syms.iter().map(move |s| {
                            let mut c = prefix.clone();
                            c.push(Value::Sym(s.clone()));
                            c
                        })
                    })
                    .collect();
            }
            let mut liks = Vec::with_capacity(cands.len());
            let mut total = 0.0;
            for cand in &cands {
                let mut full = bindings.clone();
                for (p, v) in decl.actual.iter().zip(cand) {
                    full.push((p.name.clone(), v.clone()));
                }
                let env = expr_core::Env::new(&w.0, n, &full, 0);
                let l = expr_core::eval_expr(&decl.likelihood, &env)?.as_real()?;
                if l < 0.0 {
                    return Err(BelError::NegativeWeight {
                        context: format!("likelihood of `{}`", decl.name),
                        value: l,
                    });
                }
                liks.push(l);
                total += l;
            }
            if total <= 0.0 {
                return Err(BelError::DegenerateBelief);
            }
            let u: f64 = rng.gen();
            let target = u * total;
            let mut acc = 0.0;
            let mut chosen = cands.len() - 1;
            for (k, &l) in liks.iter().enumerate() {
                acc += l;
                if target < acc {
                    chosen = k;
                    break;
                }
            }
            Ok((cands.swap_remove(chosen), total))
        }
    }
}

/// Name lookup helper mirroring `Domain::is_real` checks CLI code needs.
pub fn is_real_fluent(spec: &TheorySpec, slot: usize) -> bool {
    matches!(spec.fluents[slot].domain, Domain::Real)
}

//! Tensor-grid midpoint quadrature.
//!
//! Every integration dimension gets a fixed axis: uniform initial factors
//! use their exact support interval, gaussian factors (initial or outcome)
//! are truncated at ±`gauss_truncation_sigmas` around their mean, finite
//! dimensions enumerate their domain. A node is one joint choice of
//! coordinates; its weight is the product of the initial-factor weights and
//! the likelihoods along the simulated trajectory, zero when a precondition
//! fails. The numerator and the normalizer γ are accumulated over the
//! identical grid in the same pass, so grid bias largely cancels in the
//! ratio.

use expr_core::{eval_expr, eval_formula, gauss_density, Env, Formula, Value};
use rayon::prelude::*;
use theory_dsl::ast::Domain;
use theory_dsl::init::InitFactor;

use crate::plan::{InitPlan, OutcomePlan, QueryPlan};
use crate::sum::{chunk_ranges, Kahan, QUAD_CHUNK};
use crate::{Backend, BelError, BeliefResult, Diagnostics, EngineConfig, MarginalParts};

/// Hard ceiling on grid nodes; the per-dimension resolution of continuous
/// axes is reduced (below `quad_points_per_dim`) to stay under it. Finite
/// dimensions are always enumerated exhaustively.
pub const MAX_QUAD_NODES: u64 = 1 << 22;

/// Absolute ceiling on the full node count (finite dimensions included)
/// before the query is refused outright.
const MAX_TOTAL_NODES: u64 = 1 << 33;

enum Dim {
    /// Initial uniform factor: density 1 on [lo, lo + n*step).
    ContUniform { slot: usize, lo: f64, step: f64 },
    /// Initial gaussian factor, truncated.
    ContGauss { slot: usize, mean: f64, variance: f64, lo: f64, step: f64 },
    /// Grid-fallback real slot; the density comes from evaluating the
    /// initial weight pointwise.
    ContGridReal { slot: usize, lo: f64, step: f64 },
    /// Noisy-action real outcome, truncated around its static centre. The
    /// weight is the declared likelihood evaluated along the trajectory.
    ContOutcome { lo: f64, step: f64 },
    /// Initial finite factor with explicit masses.
    DiscFinite { slot: usize, syms: Vec<std::sync::Arc<str>>, masses: Vec<f64> },
    /// Grid-fallback finite slot; mass comes from the pointwise initial
    /// weight.
    DiscGridFinite { slot: usize, syms: Vec<std::sync::Arc<str>> },
    /// Noisy-action finite outcome parameter.
    DiscOutcome { actual_index: usize, syms: Vec<std::sync::Arc<str>> },
}

impl Dim {
    fn is_cont(&self) -> bool {
        matches!(
            self,
            Dim::ContUniform { .. }
                | Dim::ContGauss { .. }
                | Dim::ContGridReal { .. }
                | Dim::ContOutcome { .. }
        )
    }

    fn card(&self, npd: usize) -> u64 {
        match self {
            Dim::DiscFinite { syms, .. }
            | Dim::DiscGridFinite { syms, .. }
            | Dim::DiscOutcome { syms, .. } => syms.len() as u64,
            _ => npd as u64,
        }
    }
}

pub(crate) struct Grid<'p, 's> {
    plan: &'p QueryPlan<'s>,
    dims: Vec<Dim>,
    /// Indices into `dims` that assemble the initial state.
    init_dims: Vec<usize>,
    /// Per action: indices into `dims` that bind its outcome parameters.
    act_dims: Vec<Vec<usize>>,
    npd: usize,
    total: u64,
    /// Constant factor applied to both sums after reduction: the initial
    /// coefficient, pruned marginal masses, and the cell widths of all
    /// continuous dimensions.
    scale: f64,
    /// Whether the initial weight is evaluated pointwise (grid fallback).
    pointwise_init: bool,
    pub diagnostics: Diagnostics,
}

struct Scratch {
    digits: Vec<usize>,
    buf: Vec<Value>,
    bindings: Vec<Vec<(std::sync::Arc<str>, Value)>>,
    actual_pos: Vec<Vec<usize>>,
    template: Vec<Value>,
}

pub(crate) fn build_grid<'p, 's>(
    plan: &'p QueryPlan<'s>,
    cfg: &EngineConfig,
) -> Result<Grid<'p, 's>, BelError> {
    let mut dims = Vec::new();
    let mut init_dims = Vec::new();
    let mut act_dims: Vec<Vec<usize>> = vec![Vec::new(); plan.actions.len()];
    let mut scale;
    let pointwise_init;
    let trunc = cfg.gauss_truncation_sigmas;

    match &plan.init {
        InitPlan::Product { model, kept, pruned_mass, .. } => {
            scale = model.coeff * pruned_mass;
            pointwise_init = false;
            for (slot, factor) in model.factors.iter().enumerate() {
                if !kept[slot] {
                    continue;
                }
                init_dims.push(dims.len());
                dims.push(match factor {
                    InitFactor::Uniform { slot, lo, hi } => {
                        Dim::ContUniform { slot: *slot, lo: *lo, step: *hi - *lo }
                    }
                    InitFactor::Gauss { slot, mean, variance } => {
                        let half = trunc * variance.sqrt();
                        Dim::ContGauss {
                            slot: *slot,
                            mean: *mean,
                            variance: *variance,
                            lo: *mean - half,
                            step: 2.0 * half,
                        }
                    }
                    InitFactor::Finite { slot, masses } => {
                        let Domain::Finite(syms) = &plan.spec.fluents[*slot].domain else {
                            unreachable!("finite factor on a real fluent");
                        };
                        Dim::DiscFinite {
                            slot: *slot,
                            syms: syms.clone(),
                            masses: masses.clone(),
                        }
                    }
                });
            }
        }
        InitPlan::Grid { real_slots, finite_slots, .. } => {
            scale = 1.0;
            pointwise_init = true;
            for &(slot, lo, hi) in real_slots {
                init_dims.push(dims.len());
                dims.push(Dim::ContGridReal { slot, lo, step: hi - lo });
            }
            for (slot, syms) in finite_slots {
                init_dims.push(dims.len());
                dims.push(Dim::DiscGridFinite { slot: *slot, syms: syms.clone() });
            }
        }
    }

    for (j, pa) in plan.actions.iter().enumerate() {
        match &pa.outcome {
            OutcomePlan::None => {}
            OutcomePlan::Gauss(go) => {
                if !go.center_static {
                    return Err(BelError::UnrecognizedLikelihoodForm {
                        action: pa.decl.name.to_string(),
                        detail: "quadrature needs a state-independent gauss centre (the \
                                 nominal expression mentions a fluent)"
                            .into(),
                    });
                }
                let center = static_center(plan, j)?;
                let half = trunc * go.variance.sqrt();
                act_dims[j].push(dims.len());
                dims.push(Dim::ContOutcome { lo: center - half, step: 2.0 * half });
            }
            OutcomePlan::Finite(fas) => {
                for fa in fas {
                    act_dims[j].push(dims.len());
                    dims.push(Dim::DiscOutcome {
                        actual_index: fa.index,
                        syms: fa.syms.clone(),
                    });
                }
            }
        }
    }

    let n_cont = dims.iter().filter(|d| d.is_cont()).count();
    if n_cont > cfg.max_quad_dims {
        return Err(BelError::DimensionLimit { needed: n_cont, limit: cfg.max_quad_dims });
    }
    let finite_prod: u128 = dims
        .iter()
        .filter(|d| !d.is_cont())
        .map(|d| d.card(1) as u128)
        .product();

    let mut notes = Vec::new();
    let npd = if n_cont == 0 {
        1
    } else {
        let budget = (MAX_QUAD_NODES as u128) / finite_prod.max(1);
        let requested = cfg.quad_points_per_dim as u128;
        let capped = largest_root(budget, n_cont as u32).max(1);
        if capped < requested {
            notes.push(format!(
                "continuous resolution capped at {capped} points per dimension (node \
                 budget {MAX_QUAD_NODES})"
            ));
        }
        requested.min(capped) as usize
    };

    let total128 = finite_prod * (npd as u128).pow(n_cont as u32);
    if total128 > MAX_TOTAL_NODES as u128 {
        return Err(BelError::Config(format!(
            "the grid would need {total128} nodes; refusing beyond {MAX_TOTAL_NODES}"
        )));
    }
    let total = total128 as u64;

    // Fix each continuous step width now that the resolution is known, and
    // fold the cell widths into the constant scale.
    for d in &mut dims {
        match d {
            Dim::ContUniform { step, .. }
            | Dim::ContGauss { step, .. }
            | Dim::ContGridReal { step, .. }
            | Dim::ContOutcome { step, .. } => {
                *step /= npd as f64;
                scale *= *step;
            }
            _ => {}
        }
    }

    let diagnostics = Diagnostics {
        continuous_dims: n_cont,
        finite_dims: dims.len() - n_cont,
        grid_points_per_dim: (n_cont > 0).then_some(npd),
        total_nodes: Some(total),
        samples: None,
        effective_sample_size: None,
        low_ess: false,
        truncation_sigmas: trunc,
        pruned_fluents: plan.pruned_fluents.clone(),
        notes,
    };

    Ok(Grid { plan, dims, init_dims, act_dims, npd, total, scale, pointwise_init, diagnostics })
}

/// Largest `n` with `n^k <= budget`.
fn largest_root(budget: u128, k: u32) -> u128 {
    if k == 1 {
        return budget;
    }
    let mut lo = 0u128;
    let mut hi = budget.min(1 << 40);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if mid.checked_pow(k).is_some_and(|p| p <= budget) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Evaluates a gaussian outcome's centre, which planning guarantees is
/// fluent-free, under the action's nominal bindings.
fn static_center(plan: &QueryPlan<'_>, act: usize) -> Result<f64, BelError> {
    let pa = &plan.actions[act];
    let OutcomePlan::Gauss(go) = &pa.outcome else { unreachable!() };
    let bindings: Vec<_> = pa
        .decl
        .nominal
        .iter()
        .zip(&pa.nominal)
        .map(|(p, v)| (p.name.clone(), v.clone()))
        .collect();
    let env = Env::new(plan.template(), plan.n_fluents(), &bindings, 0);
    let c = eval_expr(&go.center, &env)?.as_real()?;
    Ok(c + go.sign * go.mean)
}

impl<'p, 's> Grid<'p, 's> {
    fn scratch(&self) -> Scratch {
        let (bindings, actual_pos) = self.plan.binding_templates();
        Scratch {
            digits: vec![0; self.dims.len()],
            buf: Vec::with_capacity(self.plan.n_fluents() * (self.plan.actions.len() + 1)),
            bindings,
            actual_pos,
            template: self.plan.template().to_vec(),
        }
    }

    /// The variable part of a node's weight (the constant `scale` factor is
    /// applied after reduction). Fills `sc.buf` with the full trajectory
    /// whenever the returned weight is positive.
    fn node_weight(&self, idx: u64, sc: &mut Scratch) -> Result<f64, BelError> {
        let mut rem = idx;
        for d in (0..self.dims.len()).rev() {
            let card = self.dims[d].card(self.npd);
            sc.digits[d] = (rem % card) as usize;
            rem /= card;
        }

        sc.buf.clear();
        sc.buf.extend_from_slice(&sc.template);
        let mut w = 1.0f64;
        for &d in &self.init_dims {
            let k = sc.digits[d];
            match &self.dims[d] {
                Dim::ContUniform { slot, lo, step } | Dim::ContGridReal { slot, lo, step } => {
                    sc.buf[*slot] = Value::Real(lo + (k as f64 + 0.5) * step);
                }
                Dim::ContGauss { slot, mean, variance, lo, step } => {
                    let x = lo + (k as f64 + 0.5) * step;
                    w *= gauss_density(x, *mean, *variance)?;
                    sc.buf[*slot] = Value::Real(x);
                }
                Dim::DiscFinite { slot, syms, masses } => {
                    w *= masses[k];
                    sc.buf[*slot] = Value::Sym(syms[k].clone());
                }
                Dim::DiscGridFinite { slot, syms } => {
                    sc.buf[*slot] = Value::Sym(syms[k].clone());
                }
                Dim::ContOutcome { .. } | Dim::DiscOutcome { .. } => unreachable!(),
            }
        }
        if self.pointwise_init {
            let env = Env::new(&sc.buf, self.plan.n_fluents(), &[], 0)
                .with_equality_epsilon(self.plan.eps);
            let p = eval_expr(&self.plan.spec.init_p, &env)?.as_real()?;
            if p < 0.0 {
                return Err(BelError::NegativeWeight { context: "initial weight".into(), value: p });
            }
            w *= p;
        }
        if w == 0.0 {
            return Ok(0.0);
        }

        for (j, pa) in self.plan.actions.iter().enumerate() {
            for &d in &self.act_dims[j] {
                let k = sc.digits[d];
                match &self.dims[d] {
                    Dim::ContOutcome { lo, step } => {
                        let pos = sc.actual_pos[j][0];
                        sc.bindings[j][pos].1 = Value::Real(lo + (k as f64 + 0.5) * step);
                    }
                    Dim::DiscOutcome { actual_index, syms } => {
                        let pos = sc.actual_pos[j][*actual_index];
                        sc.bindings[j][pos].1 = Value::Sym(syms[k].clone());
                    }
                    _ => unreachable!(),
                }
            }
            let out = dynamics::step_into(
                self.plan.spec,
                &mut sc.buf,
                j,
                pa.decl,
                &sc.bindings[j],
                self.plan.eps,
            )?;
            if !out.possible {
                return Ok(0.0);
            }
            w *= out.likelihood;
            if w == 0.0 {
                return Ok(0.0);
            }
        }
        Ok(w)
    }

    fn final_env<'a>(&self, sc: &'a Scratch) -> Env<'a> {
        Env::new(&sc.buf, self.plan.n_fluents(), &[], self.plan.actions.len())
            .with_equality_epsilon(self.plan.eps)
    }
}

pub(crate) fn run_bel(
    plan: &QueryPlan<'_>,
    phi: &Formula,
    cfg: &EngineConfig,
) -> Result<BeliefResult, BelError> {
    let grid = build_grid(plan, cfg)?;
    let partials: Vec<(f64, f64)> = chunk_ranges(grid.total, QUAD_CHUNK)
        .into_par_iter()
        .map_init(
            || grid.scratch(),
            |sc, (start, end)| -> Result<(f64, f64), BelError> {
                let mut num = Kahan::default();
                let mut gamma = Kahan::default();
                for idx in start..end {
                    let w = grid.node_weight(idx, sc)?;
                    gamma.add(w);
                    let sat = w > 0.0 && eval_formula(phi, &grid.final_env(sc))?;
                    num.add(if sat { w } else { 0.0 });
                }
                Ok((num.value(), gamma.value()))
            },
        )
        .collect::<Result<_, _>>()?;

    let mut num = Kahan::default();
    let mut gamma = Kahan::default();
    for (a, b) in partials {
        num.add(a);
        gamma.add(b);
    }
    let numerator = grid.scale * num.value();
    let gamma = grid.scale * gamma.value();
    if gamma == 0.0 {
        return Err(BelError::DegenerateBelief);
    }
    Ok(BeliefResult {
        value: (numerator / gamma).clamp(0.0, 1.0),
        numerator,
        gamma,
        stderr: None,
        backend: Backend::Quad,
        diagnostics: grid.diagnostics,
    })
}

pub(crate) fn run_knows(
    plan: &QueryPlan<'_>,
    phi: &Formula,
    cfg: &EngineConfig,
) -> Result<bool, BelError> {
    let grid = build_grid(plan, cfg)?;
    let partials: Vec<(bool, f64)> = chunk_ranges(grid.total, QUAD_CHUNK)
        .into_par_iter()
        .map_init(
            || grid.scratch(),
            |sc, (start, end)| -> Result<(bool, f64), BelError> {
                let mut violated = false;
                let mut gamma = Kahan::default();
                for idx in start..end {
                    let w = grid.node_weight(idx, sc)?;
                    gamma.add(w);
                    if w > 0.0 && !eval_formula(phi, &grid.final_env(sc))? {
                        violated = true;
                    }
                }
                Ok((violated, gamma.value()))
            },
        )
        .collect::<Result<_, _>>()?;

    let violated = partials.iter().any(|(v, _)| *v);
    let gamma: f64 = {
        let mut k = Kahan::default();
        partials.iter().for_each(|(_, g)| k.add(*g));
        k.value()
    };
    if gamma == 0.0 {
        return Err(BelError::DegenerateBelief);
    }
    Ok(!violated)
}

/// Collects `(value-bits, weight)` for every positive-weight node plus the
/// raw normalizer; the histogram layer does grouping and binning.
pub(crate) fn run_marginal(
    plan: &QueryPlan<'_>,
    slot: usize,
    cfg: &EngineConfig,
) -> Result<MarginalParts, BelError> {
    let grid = build_grid(plan, cfg)?;
    let partials: Vec<(Vec<(u64, f64)>, f64)> = chunk_ranges(grid.total, QUAD_CHUNK)
        .into_par_iter()
        .map_init(
            || grid.scratch(),
            |sc, (start, end)| -> Result<(Vec<(u64, f64)>, f64), BelError> {
                let mut entries = Vec::new();
                let mut gamma = Kahan::default();
                for idx in start..end {
                    let w = grid.node_weight(idx, sc)?;
                    gamma.add(w);
                    if w > 0.0 {
                        let now = plan.actions.len();
                        let v = sc.buf[now * plan.n_fluents() + slot].as_real()?;
                        entries.push((v.to_bits(), w));
                    }
                }
                Ok((entries, gamma.value()))
            },
        )
        .collect::<Result<_, _>>()?;

    let mut entries = Vec::new();
    let mut gamma = Kahan::default();
    for (chunk, g) in partials {
        entries.extend(chunk);
        gamma.add(g);
    }
    let raw_gamma = gamma.value();
    if raw_gamma == 0.0 {
        return Err(BelError::DegenerateBelief);
    }
    Ok((entries, raw_gamma, grid.scale * raw_gamma, grid.diagnostics))
}

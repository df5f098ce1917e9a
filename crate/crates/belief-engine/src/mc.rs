//! Sequential importance sampling.
//!
//! Each particle draws an initial state from the recognized form of the
//! initial weight and an outcome per noisy action from its likelihood (the
//! proposal), then simulates the trajectory. Recognized gaussian proposals
//! cancel exactly, so a particle's weight is the product of the constant
//! initial mass, the likelihoods of sensing/deterministic actions at their
//! pre-states, and the enumeration totals of finite outcomes — zero when a
//! precondition fails. There is no resampling between actions; the standard
//! error of the ratio estimate comes from the delta method, and a low
//! effective sample size is flagged in the diagnostics.
//!
//! Particle `i` draws from its own counter-based stream (stream `i` of a
//! ChaCha8 generator seeded with the configured seed), so results are
//! bitwise reproducible for a given configuration regardless of the number
//! of worker threads or the order particles are evaluated in.

use expr_core::{eval_expr, eval_formula, Env, Formula, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use theory_dsl::ast::Domain;
use theory_dsl::init::InitFactor;

use crate::plan::{InitPlan, OutcomePlan, QueryPlan};
use crate::sum::{chunk_ranges, Kahan, MC_CHUNK};
use crate::{Backend, BelError, BeliefResult, Diagnostics, EngineConfig, MarginalParts};

/// Largest joint finite-outcome space enumerated per action when building
/// the categorical proposal.
const MAX_JOINT_OUTCOMES: usize = 4096;

/// Per-action proposal, precomputed once per query.
enum Proposal {
    None,
    Gauss {
        /// The centre when it is state-independent; evaluated per particle
        /// otherwise.
        static_center: Option<f64>,
        sign_mean: f64,
        sd: f64,
    },
    /// Joint candidates over all (finite) actual parameters, in odometer
    /// order with the last parameter fastest.
    Finite { cands: Vec<Vec<Value>> },
}

struct McCtx<'p, 's> {
    plan: &'p QueryPlan<'s>,
    proposals: Vec<Proposal>,
    seed: u64,
    diagnostics_base: Diagnostics,
}

struct Scratch {
    buf: Vec<Value>,
    bindings: Vec<Vec<(std::sync::Arc<str>, Value)>>,
    actual_pos: Vec<Vec<usize>>,
    template: Vec<Value>,
    lik: Vec<f64>,
}

fn build_ctx<'p, 's>(
    plan: &'p QueryPlan<'s>,
    cfg: &EngineConfig,
) -> Result<McCtx<'p, 's>, BelError> {
    let mut proposals = Vec::with_capacity(plan.actions.len());
    for pa in &plan.actions {
        proposals.push(match &pa.outcome {
            OutcomePlan::None => Proposal::None,
            OutcomePlan::Gauss(go) => {
                let static_center = if go.center_static {
                    let bindings: Vec<_> = pa
                        .decl
                        .nominal
                        .iter()
                        .zip(&pa.nominal)
                        .map(|(p, v)| (p.name.clone(), v.clone()))
                        .collect();
                    let env = Env::new(plan.template(), plan.n_fluents(), &bindings, 0);
                    Some(eval_expr(&go.center, &env)?.as_real()?)
                } else {
                    None
                };
                Proposal::Gauss {
                    static_center,
                    sign_mean: go.sign * go.mean,
                    sd: go.variance.sqrt(),
                }
            }
            OutcomePlan::Finite(fas) => {
                let space: usize = fas.iter().map(|fa| fa.syms.len()).product();
                if space > MAX_JOINT_OUTCOMES {
                    return Err(BelError::UnrecognizedLikelihoodForm {
                        action: pa.decl.name.to_string(),
                        detail: format!(
                            "finite outcome space of {space} exceeds the enumeration \
                             limit {MAX_JOINT_OUTCOMES}"
                        ),
                    });
                }
                let mut cands: Vec<Vec<Value>> = vec![Vec::new()];
                for fa in fas {
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
                Proposal::Finite { cands }
            }
        });
    }
    let diagnostics_base = Diagnostics {
        continuous_dims: 0,
        finite_dims: 0,
        grid_points_per_dim: None,
        total_nodes: None,
        samples: Some(cfg.mc_samples),
        effective_sample_size: None,
        low_ess: false,
        truncation_sigmas: cfg.gauss_truncation_sigmas,
        pruned_fluents: Vec::new(),
        notes: Vec::new(),
    };
    Ok(McCtx { plan, proposals, seed: cfg.seed, diagnostics_base })
}

/// Draws one value from an initial factor; `domain` is the declaring
/// fluent's domain (needed to name finite outcomes).
pub(crate) fn draw_factor<R: Rng + ?Sized>(
    factor: &InitFactor,
    domain: &Domain,
    rng: &mut R,
) -> Value {
    match factor {
        InitFactor::Uniform { lo, hi, .. } => {
            let u: f64 = rng.gen();
            Value::Real(lo + u * (hi - lo))
        }
        InitFactor::Gauss { mean, variance, .. } => {
            let z: f64 = rng.sample(StandardNormal);
            Value::Real(mean + variance.sqrt() * z)
        }
        InitFactor::Finite { masses, .. } => {
            let Domain::Finite(syms) = domain else {
                unreachable!("finite factor over a real fluent");
            };
            let total: f64 = masses.iter().sum();
            let u: f64 = rng.gen();
            let target = u * total;
            let mut acc = 0.0;
            let mut k = masses.len() - 1;
            for (i, m) in masses.iter().enumerate() {
                acc += m;
                if target < acc {
                    k = i;
                    break;
                }
            }
            Value::Sym(syms[k].clone())
        }
    }
}

impl<'p, 's> McCtx<'p, 's> {
    fn scratch(&self) -> Scratch {
        let (bindings, actual_pos) = self.plan.binding_templates();
        Scratch {
            buf: Vec::with_capacity(self.plan.n_fluents() * (self.plan.actions.len() + 1)),
            bindings,
            actual_pos,
            template: self.plan.template().to_vec(),
            lik: Vec::new(),
        }
    }

    /// Simulates particle `i`; returns its weight, filling `sc.buf` with the
    /// trajectory whenever the weight is positive.
    fn particle(&self, i: u64, sc: &mut Scratch) -> Result<f64, BelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i);
        let n = self.plan.n_fluents();

        sc.buf.clear();
        sc.buf.extend_from_slice(&sc.template);
        let mut w = match &self.plan.init {
            InitPlan::Product { model, .. } => {
                for factor in &model.factors {
                    let slot = factor.slot();
                    let domain = &self.plan.spec.fluents[slot].domain;
                    sc.buf[slot] = draw_factor(factor, domain, &mut rng);
                }
                model.total_mass()
            }
            InitPlan::Grid { real_slots, finite_slots, .. } => {
                let mut volume = 1.0;
                for &(slot, lo, hi) in real_slots {
                    let u: f64 = rng.gen();
                    sc.buf[slot] = Value::Real(lo + u * (hi - lo));
                    volume *= hi - lo;
                }
                for (slot, syms) in finite_slots {
                    let u: f64 = rng.gen();
                    let k = ((u * syms.len() as f64) as usize).min(syms.len() - 1);
                    sc.buf[*slot] = Value::Sym(syms[k].clone());
                    volume *= syms.len() as f64;
                }
                let env = Env::new(&sc.buf, n, &[], 0).with_equality_epsilon(self.plan.eps);
                let p = eval_expr(&self.plan.spec.init_p, &env)?.as_real()?;
                if p < 0.0 {
                    return Err(BelError::NegativeWeight {
                        context: "initial weight".into(),
                        value: p,
                    });
                }
                volume * p
            }
        };
        if w == 0.0 {
            return Ok(0.0);
        }

        for (j, pa) in self.plan.actions.iter().enumerate() {
            match &self.proposals[j] {
                Proposal::None => {
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
                }
                Proposal::Gauss { static_center, sign_mean, sd } => {
                    let center = match static_center {
                        Some(c) => *c,
                        None => {
                            let OutcomePlan::Gauss(go) = &pa.outcome else { unreachable!() };
                            let state = &sc.buf[j * n..(j + 1) * n];
                            let env = Env::new(state, n, &sc.bindings[j], 0)
                                .with_equality_epsilon(self.plan.eps);
                            eval_expr(&go.center, &env)?.as_real()?
                        }
                    };
                    let z: f64 = rng.sample(StandardNormal);
                    let y = center + sign_mean + sd * z;
                    let pos = sc.actual_pos[j][0];
                    sc.bindings[j][pos].1 = Value::Real(y);
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
                    // The proposal density equals the likelihood, so the
                    // importance ratio is exactly 1: no weight update.
                }
                Proposal::Finite { cands } => {
                    sc.lik.clear();
                    let mut total = 0.0f64;
                    for cand in cands {
                        for (k, v) in cand.iter().enumerate() {
                            let pos = sc.actual_pos[j][k];
                            sc.bindings[j][pos].1 = v.clone();
                        }
                        let state = &sc.buf[j * n..(j + 1) * n];
                        let env = Env::new(state, n, &sc.bindings[j], 0)
                            .with_equality_epsilon(self.plan.eps);
                        let l = eval_expr(&pa.decl.likelihood, &env)?.as_real()?;
                        if l < 0.0 {
                            return Err(BelError::NegativeWeight {
                                context: format!("likelihood of `{}`", pa.decl.name),
                                value: l,
                            });
                        }
                        sc.lik.push(l);
                        total += l;
                    }
                    if total <= 0.0 {
                        return Ok(0.0);
                    }
                    let u: f64 = rng.gen();
                    let target = u * total;
                    let mut acc = 0.0;
                    let mut chosen = cands.len() - 1;
                    for (k, &l) in sc.lik.iter().enumerate() {
                        acc += l;
                        if target < acc {
                            chosen = k;
                            break;
                        }
                    }
                    for (k, v) in cands[chosen].iter().enumerate() {
                        let pos = sc.actual_pos[j][k];
                        sc.bindings[j][pos].1 = v.clone();
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
                    w *= total;
                }
            }
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

struct Sums {
    w: f64,
    w_phi: f64,
    w2: f64,
    w2_phi: f64,
    violated: bool,
}

/// One pass over all particles: weight sums for the ratio and its variance,
/// a falsification flag, and optionally `(value-bits, weight)` entries for a
/// marginal over `collect_slot`.
fn run_sums(
    ctx: &McCtx<'_, '_>,
    phi: &Formula,
    n_samples: usize,
    collect_slot: Option<usize>,
) -> Result<(Sums, Vec<(u64, f64)>), BelError> {
    struct Partial {
        w: f64,
        w_phi: f64,
        w2: f64,
        w2_phi: f64,
        violated: bool,
        entries: Vec<(u64, f64)>,
    }

    let partials: Vec<Partial> = chunk_ranges(n_samples as u64, MC_CHUNK)
        .into_par_iter()
        .map_init(
            || ctx.scratch(),
            |sc, (start, end)| -> Result<Partial, BelError> {
                let mut w_sum = Kahan::default();
                let mut w_phi = Kahan::default();
                let mut w2 = Kahan::default();
                let mut w2_phi = Kahan::default();
                let mut violated = false;
                let mut entries = Vec::new();
                for i in start..end {
                    let w = ctx.particle(i, sc)?;
                    let sat = w > 0.0 && eval_formula(phi, &ctx.final_env(sc))?;
                    if w > 0.0 && !sat {
                        violated = true;
                    }
                    w_sum.add(w);
                    w_phi.add(if sat { w } else { 0.0 });
                    w2.add(w * w);
                    w2_phi.add(if sat { w * w } else { 0.0 });
                    if let Some(slot) = collect_slot {
                        if w > 0.0 {
                            let now = ctx.plan.actions.len();
                            let v = sc.buf[now * ctx.plan.n_fluents() + slot].as_real()?;
                            entries.push((v.to_bits(), w));
                        }
                    }
                }
                Ok(Partial {
                    w: w_sum.value(),
                    w_phi: w_phi.value(),
                    w2: w2.value(),
                    w2_phi: w2_phi.value(),
                    violated,
                    entries,
                })
            },
        )
        .collect::<Result<_, _>>()?;

    let mut w = Kahan::default();
    let mut w_phi = Kahan::default();
    let mut w2 = Kahan::default();
    let mut w2_phi = Kahan::default();
    let mut violated = false;
    let mut entries = Vec::new();
    for p in partials {
        w.add(p.w);
        w_phi.add(p.w_phi);
        w2.add(p.w2);
        w2_phi.add(p.w2_phi);
        violated |= p.violated;
        entries.extend(p.entries);
    }
    Ok((
        Sums {
            w: w.value(),
            w_phi: w_phi.value(),
            w2: w2.value(),
            w2_phi: w2_phi.value(),
            violated,
        },
        entries,
    ))
}

fn finish_diagnostics(mut d: Diagnostics, sums: &Sums, n: usize) -> Diagnostics {
    if sums.w2 > 0.0 {
        let ess = sums.w * sums.w / sums.w2;
        d.low_ess = ess < 0.1 * n as f64;
        d.effective_sample_size = Some(ess);
    }
    d
}

pub(crate) fn run_bel(
    plan: &QueryPlan<'_>,
    phi: &Formula,
    cfg: &EngineConfig,
) -> Result<BeliefResult, BelError> {
    let ctx = build_ctx(plan, cfg)?;
    let n = cfg.mc_samples;
    let (sums, _) = run_sums(&ctx, phi, n, None)?;
    if sums.w == 0.0 {
        return Err(BelError::DegenerateBelief);
    }
    let numerator = sums.w_phi / n as f64;
    let gamma = sums.w / n as f64;
    let value = (numerator / gamma).clamp(0.0, 1.0);
    // Delta-method variance of the ratio: Σ w²(φ - R)² / (Σ w)², expanded so
    // one pass suffices (φ² = φ for an indicator).
    let r = value;
    let var_num = (sums.w2_phi * (1.0 - 2.0 * r) + r * r * sums.w2).max(0.0);
    let stderr = var_num.sqrt() / sums.w;
    Ok(BeliefResult {
        value,
        numerator,
        gamma,
        stderr: Some(stderr),
        backend: Backend::Mc,
        diagnostics: finish_diagnostics(ctx.diagnostics_base.clone(), &sums, n),
    })
}

pub(crate) fn run_knows(
    plan: &QueryPlan<'_>,
    phi: &Formula,
    cfg: &EngineConfig,
) -> Result<bool, BelError> {
    let ctx = build_ctx(plan, cfg)?;
    let (sums, _) = run_sums(&ctx, phi, cfg.mc_samples, None)?;
    if sums.w == 0.0 {
        return Err(BelError::DegenerateBelief);
    }
    Ok(!sums.violated)
}

pub(crate) fn run_marginal(
    plan: &QueryPlan<'_>,
    slot: usize,
    cfg: &EngineConfig,
) -> Result<MarginalParts, BelError> {
    let ctx = build_ctx(plan, cfg)?;
    let n = cfg.mc_samples;
    let (sums, entries) = run_sums(&ctx, &Formula::True, n, Some(slot))?;
    if sums.w == 0.0 {
        return Err(BelError::DegenerateBelief);
    }
    let diagnostics = finish_diagnostics(ctx.diagnostics_base.clone(), &sums, n);
    Ok((entries, sums.w, sums.w / n as f64, diagnostics))
}

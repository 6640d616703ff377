//! Search for new neurons: mutate programs, screen them in stages of
//! growing cost and keep a complexity/loss Pareto front.
//!
//! This is a small stand-in for a full program-synthesis system. A
//! generation takes the front members and tournament-selected earlier
//! candidates as parents, mutates each once, evaluates all children and
//! updates the front in candidate order.

mod mutate;
mod pareto;

use std::collections::HashMap;
use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, Series, Splits};
use crate::dsl::{complexity, pretty_print, SymbolCost, TypedProgram};
use crate::model::{Network, NetworkConfig};
use crate::rng;
use crate::tensor::InitOptions;
use crate::trainer::{self, TrainConfig};

pub use mutate::{grow, mutate, mutate_with, Mutation, GROW_DEPTH, MAX_ATTEMPTS, MAX_NODES};
pub use pareto::{dominates, FrontEntry, FrontSnapshot, ParetoFront, SnapshotEntry, FRONT_FORMAT, FRONT_VERSION};

/// How much longer the final stage runs than the middle one.
pub const STAGE3_OVER_STAGE2: f64 = 128.0;

/// Cost of a middle-stage evaluation relative to a first-stage one for a
/// layer of `l` nodes and series of `n_t` steps.
pub fn stage_cost_multiplier(l: usize, n_t: usize) -> f64 {
    let r = l as f64 / 16.0;
    8.0 * r * r * n_t as f64 / 5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub nodes: usize,
    pub examples: usize,
    /// Train and validate on only the final steps of every series.
    #[serde(default)]
    pub last_timesteps: Option<usize>,
    #[serde(default = "default_pass_fraction")]
    pub pass_fraction: f64,
}

fn default_pass_fraction() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagePlan {
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid stage plan: {0}")]
    Invalid(String),
    #[error("cannot parse stage plan: {0}")]
    Parse(String),
}

impl StagePlan {
    /// Three stages: 4 nodes / 5000 examples / last 5 steps, then `l/4`
    /// nodes / 40000 examples, then `l` nodes / 320000 examples.
    pub fn three_stage(l: usize) -> Self {
        StagePlan {
            stages: vec![
                Stage { nodes: 4, examples: 5_000, last_timesteps: Some(5), pass_fraction: 0.01 },
                Stage { nodes: (l / 4).max(2), examples: 40_000, last_timesteps: None, pass_fraction: 0.01 },
                Stage { nodes: l, examples: 320_000, last_timesteps: None, pass_fraction: 0.01 },
            ],
        }
    }

    pub fn first_stage_only() -> Self {
        StagePlan { stages: vec![Self::three_stage(16).stages[0]] }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::Invalid(m));
        if self.stages.is_empty() {
            return bad("no stages".into());
        }
        for (i, s) in self.stages.iter().enumerate() {
            if !s.nodes.is_power_of_two() || !(2..=128).contains(&s.nodes) {
                return bad(format!("stage {}: nodes must be a power of two in 2..=128", i + 1));
            }
            if !(s.pass_fraction > 0.0 && s.pass_fraction <= 1.0) {
                return bad(format!("stage {}: pass_fraction must lie in (0, 1]", i + 1));
            }
            if s.last_timesteps == Some(0) {
                return bad(format!("stage {}: last_timesteps must be positive", i + 1));
            }
            if i > 0 && s.examples <= self.stages[i - 1].examples {
                return bad(format!("stage {}: examples must increase across stages", i + 1));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, PlanError> {
        let p: StagePlan = toml::from_str(text).map_err(|e| PlanError::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serialises")
    }
}

/// Training config of one stage derived from the session defaults: the
/// example budget is replaced and the decay length scaled to match.
pub fn stage_config(base: &TrainConfig, stage: &Stage) -> TrainConfig {
    let mut c = *base;
    let b = base.batch_size;
    c.total_examples = (stage.examples / b).max(1) * b;
    c.checkpoint_every = ((base.checkpoint_every.min(c.total_examples)) / b).max(1) * b;
    let frac = base.schedule.decay_steps as f64 / base.updates() as f64;
    c.schedule.decay_steps = (frac * c.updates() as f64).round() as usize;
    c
}

/// Preprocessed data and everything fixed during a search.
pub struct EvalContext {
    pub plan: StagePlan,
    pub base: TrainConfig,
    pub inputs: usize,
    pub outputs: usize,
    pub task: crate::model::Task,
    pub costs: SymbolCost,
    pub init: InitOptions,
    /// Per stage: (train, validation) series, truncated where the stage asks.
    stage_data: Vec<(Vec<Series>, Vec<Series>)>,
}

impl EvalContext {
    pub fn new(data: &Dataset, splits: &Splits, plan: StagePlan, base: TrainConfig) -> Result<Self, PlanError> {
        plan.validate()?;
        base.validate().map_err(|e| PlanError::Invalid(e.to_string()))?;
        let take = |idx: &[usize], k: Option<usize>| -> Vec<Series> {
            idx.iter()
                .map(|&i| match k {
                    Some(k) => data.series[i].last_steps(k),
                    None => data.series[i].clone(),
                })
                .collect()
        };
        let stage_data = plan
            .stages
            .iter()
            .map(|s| (take(&splits.train, s.last_timesteps), take(&splits.validation, s.last_timesteps)))
            .collect();
        Ok(EvalContext {
            plan,
            base,
            inputs: data.inputs,
            outputs: data.outputs,
            task: data.task,
            costs: SymbolCost::default(),
            init: InitOptions::default(),
            stage_data,
        })
    }

    /// Best validation loss of `program` after training under stage `k`,
    /// `+inf` when compilation fails or training diverges.
    pub fn evaluate_stage(&self, program: &TypedProgram, k: usize, seed: u64) -> Result<f64, String> {
        let stage = &self.plan.stages[k];
        let cfg = NetworkConfig { nodes: stage.nodes, inputs: self.inputs, outputs: self.outputs, task: self.task };
        let mut net = Network::new(program, cfg, seed, &self.init).map_err(|e| e.to_string())?;
        let mut tc = stage_config(&self.base, stage);
        tc.seed = seed;
        let (train, val) = &self.stage_data[k];
        let tr: Vec<&Series> = train.iter().collect();
        let va: Vec<&Series> = val.iter().collect();
        let r = trainer::train(&mut net, &tr, &va, &tc).map_err(|e| e.to_string())?;
        Ok(r.score())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub generation: usize,
    pub program: TypedProgram,
    pub complexity: f64,
    /// Validation loss per stage reached.
    pub stage_losses: Vec<f64>,
    pub parent: Option<usize>,
    pub mutation: Option<Mutation>,
    pub diagnostic: Option<String>,
}

impl Candidate {
    pub fn new(id: usize, generation: usize, program: TypedProgram, costs: &SymbolCost) -> Self {
        let complexity = complexity(&program.program, costs).unwrap_or(f64::INFINITY);
        Candidate { id, generation, program, complexity, stage_losses: Vec::new(), parent: None, mutation: None, diagnostic: None }
    }

    /// Loss at the deepest stage reached, `+inf` if none.
    pub fn value(&self) -> f64 {
        self.stage_losses.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// FNV-1a, used to derive evaluation seeds from program text.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Memoised stage results keyed by program text. Evaluation seeds depend
/// only on the run seed, the text and the stage, so cached values equal
/// recomputed ones.
#[derive(Default)]
pub struct EvalCache {
    results: HashMap<(String, usize), (f64, Option<String>)>,
}

/// Runs the stage pipeline over one generation. Every candidate takes
/// stage 1; at each stage the best `pass_fraction` of the finite results
/// (at least one, ties by index) advance.
pub fn evaluate_staged(cands: &mut [Candidate], ctx: &EvalContext, run_seed: u64, cache: &mut EvalCache) {
    let texts: Vec<String> = cands.iter().map(|c| pretty_print(&c.program.program)).collect();
    let mut entering: Vec<usize> = (0..cands.len()).collect();
    for k in 0..ctx.plan.stages.len() {
        if entering.is_empty() {
            break;
        }
        let mut todo: Vec<usize> = Vec::new();
        for &i in &entering {
            let key = (texts[i].clone(), k);
            if !cache.results.contains_key(&key) && !todo.iter().any(|&j| texts[j] == texts[i]) {
                todo.push(i);
            }
        }
        let fresh: Vec<(f64, Option<String>)> = todo
            .par_iter()
            .map(|&i| {
                let seed = rng::derive_seed(rng::derive_seed(run_seed, fnv1a(&texts[i])), k as u64);
                match ctx.evaluate_stage(&cands[i].program, k, seed) {
                    Ok(v) => (v, None),
                    Err(e) => (f64::INFINITY, Some(e)),
                }
            })
            .collect();
        for (&i, r) in todo.iter().zip(fresh) {
            cache.results.insert((texts[i].clone(), k), r);
        }
        for &i in &entering {
            let (v, diag) = cache.results[&(texts[i].clone(), k)].clone();
            cands[i].stage_losses.push(v);
            if diag.is_some() {
                cands[i].diagnostic = diag;
            }
        }
        let mut finite: Vec<usize> = entering.iter().copied().filter(|&i| cands[i].value().is_finite()).collect();
        finite.sort_by(|&a, &b| cands[a].value().total_cmp(&cands[b].value()).then(a.cmp(&b)));
        let pass = ((ctx.plan.stages[k].pass_fraction * entering.len() as f64).ceil() as usize).max(1);
        finite.truncate(pass);
        finite.sort_unstable();
        entering = finite;
    }
}

/// One line of the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub id: usize,
    pub generation: usize,
    pub parent: Option<usize>,
    pub mutation: Option<Mutation>,
    pub complexity: f64,
    /// `null` encodes a non-finite loss.
    pub stage_losses: Vec<Option<f64>>,
    pub on_front: bool,
    pub diagnostic: Option<String>,
    pub program: String,
}

impl AuditRecord {
    fn of(c: &Candidate, on_front: bool) -> Self {
        AuditRecord {
            id: c.id,
            generation: c.generation,
            parent: c.parent,
            mutation: c.mutation,
            complexity: c.complexity,
            stage_losses: c.stage_losses.iter().map(|v| v.is_finite().then_some(*v)).collect(),
            on_front,
            diagnostic: c.diagnostic.clone(),
            program: pretty_print(&c.program.program),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub generations: usize,
    pub population: usize,
    pub seed: u64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { generations: 30, population: 256, seed: 0 }
    }
}

pub struct EvolveResult {
    pub front: ParetoFront,
    pub seed_value: f64,
    pub audit: Vec<AuditRecord>,
    pub evaluations: usize,
}

/// Per-generation hook, called with the generation number (0 is the seed)
/// and the front after that generation.
pub type Observer<'a> = dyn FnMut(usize, &ParetoFront, &[AuditRecord]) + 'a;

/// The search loop. Generation 0 evaluates `seed`; each later generation
/// evaluates `population` mutants. Passing `resume` starts from a saved
/// front instead of an empty one.
pub fn evolve_run(seed: &TypedProgram, ctx: &EvalContext, cfg: &EvolveConfig, resume: Option<ParetoFront>, observer: &mut Observer<'_>) -> EvolveResult {
    let mut cache = EvalCache::default();
    let mut front = resume.unwrap_or_default();
    let mut audit = Vec::new();
    let mut next_id = front.entries().iter().map(|e| e.id + 1).max().unwrap_or(0);
    let final_stage = ctx.plan.stages.len();
    // (program, value) of every candidate that finished the last stage
    let mut pool: Vec<(TypedProgram, f64, usize)> = Vec::new();
    for e in front.entries() {
        if let Ok(tp) = crate::dsl::typecheck(&e.program) {
            pool.push((tp, e.loss, e.id));
        }
    }

    let admit = |cands: &[Candidate], front: &mut ParetoFront, pool: &mut Vec<(TypedProgram, f64, usize)>| -> Vec<AuditRecord> {
        cands
            .iter()
            .map(|c| {
                let finished = c.stage_losses.len() == final_stage && c.value().is_finite();
                let on_front = finished
                    && front.update(FrontEntry { complexity: c.complexity, loss: c.value(), id: c.id, program: c.program.program.clone() });
                if finished {
                    pool.push((c.program.clone(), c.value(), c.id));
                }
                AuditRecord::of(c, on_front)
            })
            .collect()
    };

    let mut seed_c = Candidate::new(next_id, 0, seed.clone(), &ctx.costs);
    next_id += 1;
    evaluate_staged(std::slice::from_mut(&mut seed_c), ctx, cfg.seed, &mut cache);
    let seed_value = seed_c.value();
    let records = admit(std::slice::from_ref(&seed_c), &mut front, &mut pool);
    observer(0, &front, &records);
    audit.extend(records);
    let mut evaluations = 1;

    let mut r = rng::stream(cfg.seed, rng::streams::EVOLVE);
    for g in 1..=cfg.generations {
        let members: Vec<(TypedProgram, usize)> = front
            .entries()
            .iter()
            .filter_map(|e| crate::dsl::typecheck(&e.program).ok().map(|tp| (tp, e.id)))
            .collect();
        let mut children = Vec::with_capacity(cfg.population);
        for i in 0..cfg.population {
            let (parent, pid) = if i < members.len() {
                members[i].clone()
            } else if pool.is_empty() {
                (seed.clone(), seed_c.id)
            } else {
                let a = r.random_range(0..pool.len());
                let b = r.random_range(0..pool.len());
                let w = if pool[b].1 < pool[a].1 { b } else { a };
                (pool[w].0.clone(), pool[w].2)
            };
            let mut mr = rng::stream(rng::derive_seed(cfg.seed, (g * cfg.population + i) as u64), rng::streams::EVOLVE);
            let (child, kind) = mutate(&parent, &mut mr);
            let mut c = Candidate::new(next_id, g, child, &ctx.costs);
            next_id += 1;
            c.parent = Some(pid);
            c.mutation = Some(kind);
            children.push(c);
        }
        evaluate_staged(&mut children, ctx, cfg.seed, &mut cache);
        evaluations += children.len();
        let records = admit(&children, &mut front, &mut pool);
        observer(g, &front, &records);
        audit.extend(records);
    }
    EvolveResult { front, seed_value, audit, evaluations }
}

/// Writes the audit records as JSON lines.
pub fn write_audit<W: Write>(records: &[AuditRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Complexity/loss pairs of the front as CSV for plotting.
pub fn write_scatter<W: Write>(front: &ParetoFront, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# arn-front-scatter 1")?;
    writeln!(out, "complexity_bits,validation_loss,id")?;
    for e in front.entries() {
        writeln!(out, "{:?},{:?},{}", e.complexity, e.loss, e.id)?;
    }
    Ok(())
}

/// Reads a snapshot written from [`ParetoFront::to_snapshot`].
pub fn load_front(json: &str) -> Result<(ParetoFront, usize), String> {
    let s: FrontSnapshot = serde_json::from_str(json).map_err(|e| e.to_string())?;
    if s.format != FRONT_FORMAT || s.version != FRONT_VERSION {
        return Err(format!("unsupported front snapshot {} v{}", s.format, s.version));
    }
    let f = ParetoFront::from_snapshot(&s).map_err(|e| e.to_string())?;
    Ok((f, s.generation))
}

//! Program transformations used by the search: subtree regrowth, constant
//! perturbation, activation swaps and output-slot rewiring.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsl::{typecheck, Activation, BinOp, Expr, NeuronProgram, Param, Pattern, Type, TypedProgram};
use crate::rng::Rng;

/// Attempts before giving up and returning the parent.
pub const MAX_ATTEMPTS: usize = 20;
/// Mutants larger than this are discarded.
pub const MAX_NODES: usize = 250;
/// Depth limit of freshly grown subtrees.
pub const GROW_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    Regrow,
    PerturbConstant,
    SwapActivation,
    RewireOutput,
    /// All attempts failed; the parent is returned unchanged.
    None,
}

impl Mutation {
    pub const KINDS: [Mutation; 4] = [Mutation::Regrow, Mutation::PerturbConstant, Mutation::SwapActivation, Mutation::RewireOutput];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::Regrow => "regrow",
            Mutation::PerturbConstant => "perturb-constant",
            Mutation::SwapActivation => "swap-activation",
            Mutation::RewireOutput => "rewire-output",
            Mutation::None => "none",
        }
    }
}

const SCALAR_PARAMS: [Param; 5] = [Param::SelfPeep0, Param::SelfPeep1, Param::SelfPeep2, Param::SelfPeep3, Param::SelfOutput];
const LIST_PARAMS: [Param; 3] = [Param::InputsLC, Param::OtherOutputsLC, Param::OtherPeepsLC];
const EVOLVED_ACTS: [Activation; 3] = [Activation::Tanh, Activation::Relu, Activation::Srelu];

/// Scalar-typed variables visible at each node, indexed by pre-order id.
fn scopes(tp: &TypedProgram) -> Vec<Vec<String>> {
    fn go(e: &Expr, tp: &TypedProgram, next: &mut usize, scope: &mut Vec<(String, bool)>, out: &mut Vec<Vec<String>>) {
        let id = *next;
        *next += 1;
        let visible: Vec<String> = {
            let mut v: Vec<String> = Vec::new();
            for (i, (name, scalar)) in scope.iter().enumerate() {
                let shadowed = scope[i + 1..].iter().any(|(n, _)| n == name);
                if *scalar && !shadowed {
                    v.push(name.clone());
                }
            }
            v
        };
        out[id] = visible;
        match e {
            Expr::Case(s, pat, body) => {
                let sid = *next;
                go(s, tp, next, scope, out);
                let mark = scope.len();
                match (pat, tp.type_of(sid)) {
                    (Pattern::Var(v), t) => scope.push((v.clone(), *t == Type::Scalar)),
                    (Pattern::Tuple(vs), Type::Tuple(ts)) => {
                        for (v, t) in vs.iter().zip(ts) {
                            scope.push((v.clone(), *t == Type::Scalar));
                        }
                    }
                    (Pattern::Tuple(vs), _) => scope.extend(vs.iter().map(|v| (v.clone(), false))),
                }
                go(body, tp, next, scope, out);
                scope.truncate(mark);
            }
            Expr::Let { name, param, body, rest } => {
                let mark = scope.len();
                scope.push((param.clone(), false));
                go(body, tp, next, scope, out);
                scope.truncate(mark);
                scope.push((name.clone(), false));
                go(rest, tp, next, scope, out);
                scope.truncate(mark);
            }
            _ => {
                for c in e.children() {
                    go(c, tp, next, scope, out);
                }
            }
        }
    }
    let n = tp.program.node_count();
    let mut out = vec![Vec::new(); n];
    go(&tp.program.body, tp, &mut 0, &mut Vec::new(), &mut out);
    out
}

fn pick<T: Copy>(xs: &[T], r: &mut Rng) -> T {
    xs[r.random_range(0..xs.len())]
}

fn gaussian(r: &mut Rng) -> f64 {
    StandardNormal.sample(r)
}

/// A random scalar expression of depth at most `depth`.
pub fn grow(depth: usize, vars: &[String], r: &mut Rng) -> Expr {
    if depth == 0 || r.random_bool(0.3) {
        return match r.random_range(0..4) {
            0 => Expr::Param(pick(&SCALAR_PARAMS, r)),
            1 if !vars.is_empty() => Expr::Var(vars[r.random_range(0..vars.len())].clone()),
            2 => Expr::Const(gaussian(r)),
            _ => Expr::lc(r.random_range(0..5), terminus(r)),
        };
    }
    match r.random_range(0..10) {
        0..=3 => {
            let op = pick(&[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div], r);
            Expr::bin(op, grow(depth - 1, vars, r), grow(depth - 1, vars, r))
        }
        4..=6 => Expr::act(pick(&EVOLVED_ACTS, r), grow(depth - 1, vars, r)),
        _ => Expr::lc(r.random_range(0..5), grow_list(depth - 1, vars, r)),
    }
}

fn terminus(r: &mut Rng) -> Expr {
    if r.random_range(0..4) == 0 {
        Expr::Bias
    } else {
        Expr::Param(pick(&LIST_PARAMS, r))
    }
}

fn grow_list(depth: usize, vars: &[String], r: &mut Rng) -> Expr {
    if depth == 0 || r.random_bool(0.6) {
        terminus(r)
    } else {
        Expr::cons(grow(depth - 1, vars, r), grow_list(depth - 1, vars, r))
    }
}

/// The tuple nodes producing the final quintuple.
fn quintuple_ids(tp: &TypedProgram) -> Vec<usize> {
    tp.program
        .body
        .preorder()
        .iter()
        .enumerate()
        .filter(|(id, e)| matches!(e, Expr::Tuple(es) if es.len() == 5) && *tp.type_of(*id) == Type::quintuple())
        .map(|(id, _)| id)
        .collect()
}

/// Applies one transformation of the given kind; `None` if it does not
/// apply to this program.
pub fn mutate_with(tp: &TypedProgram, kind: Mutation, r: &mut Rng) -> Option<NeuronProgram> {
    let nodes = tp.program.body.preorder();
    let mut body = tp.program.body.clone();
    match kind {
        Mutation::Regrow => {
            let sc = scopes(tp);
            let ids: Vec<usize> = (0..nodes.len()).filter(|&i| *tp.type_of(i) == Type::Scalar).collect();
            if ids.is_empty() {
                return None;
            }
            let id = pick(&ids, r);
            let e = grow(GROW_DEPTH, &sc[id], r);
            *body.node_mut(id)? = e;
        }
        Mutation::PerturbConstant => {
            let ids: Vec<usize> = (0..nodes.len()).filter(|&i| matches!(nodes[i], Expr::Const(_))).collect();
            if ids.is_empty() {
                return None;
            }
            let id = pick(&ids, r);
            let Expr::Const(v) = body.node_mut(id)? else { unreachable!() };
            let old = *v;
            *v = old + 0.1 * old.abs().max(1.0) * gaussian(r);
            if *v == old {
                return None;
            }
        }
        Mutation::SwapActivation => {
            let ids: Vec<usize> = (0..nodes.len()).filter(|&i| matches!(nodes[i], Expr::Act(..))).collect();
            if ids.is_empty() {
                return None;
            }
            let id = pick(&ids, r);
            let Expr::Act(f, _) = body.node_mut(id)? else { unreachable!() };
            let choices: Vec<Activation> = EVOLVED_ACTS.iter().copied().filter(|a| a != f).collect();
            *f = pick(&choices, r);
        }
        Mutation::RewireOutput => {
            let tuples = quintuple_ids(tp);
            if tuples.is_empty() {
                return None;
            }
            let id = pick(&tuples, r);
            let sc = scopes(tp);
            let slot = r.random_range(0..4);
            let mut sources: Vec<Expr> = SCALAR_PARAMS.iter().map(|&p| Expr::Param(p)).collect();
            // the tuple's own fields are evaluated in the tuple's scope
            sources.extend(sc[id].iter().map(|v| Expr::Var(v.clone())));
            sources.push(Expr::Const(0.0));
            let Expr::Tuple(fields) = body.node_mut(id)? else { unreachable!() };
            sources.retain(|s| *s != fields[slot]);
            fields[slot] = sources[r.random_range(0..sources.len())].clone();
        }
        Mutation::None => return None,
    }
    let p = NeuronProgram::new(body);
    (p != tp.program && p.node_count() <= MAX_NODES).then_some(p)
}

/// One random transformation that type-checks, or the parent after
/// [`MAX_ATTEMPTS`] failures.
pub fn mutate(parent: &TypedProgram, r: &mut Rng) -> (TypedProgram, Mutation) {
    for _ in 0..MAX_ATTEMPTS {
        let kind = match r.random_range(0..10) {
            0..=3 => Mutation::Regrow,
            4..=5 => Mutation::PerturbConstant,
            6..=7 => Mutation::SwapActivation,
            _ => Mutation::RewireOutput,
        };
        if let Some(p) = mutate_with(parent, kind, r) {
            if let Ok(tp) = typecheck(&p) {
                return (tp, kind);
            }
        }
    }
    (parent.clone(), Mutation::None)
}

//! Lowering of typed neuron programs to register bytecode.
//!
//! Every register holds one value per neuron in the layer (an `l`-vector).
//! A linear combination `lcI list` becomes a sum of per-neuron terms:
//!
//! * `InputsLC`        -> `U_I x`
//! * `OtherOutputsLC`  -> `W_I y` with `W_I` hollow
//! * `OtherPeepsLC`    -> `P_I s0` with `P_I` hollow
//! * each `cons` head  -> `a_k * head`, one auxiliary vector per
//!   (mapping, cons site)
//! * plus the bias `b_I`, once per application.

mod emit;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::dsl::{Activation, BinOp, Expr, Param, Pattern, TypedProgram};

pub use emit::{emit_graph, emit_readable};

pub type Reg = usize;

/// Per-neuron recurrent values visible to the transition function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    S0,
    S1,
    S2,
    S3,
    Y,
}

impl Slot {
    pub const ALL: [Slot; 5] = [Slot::S0, Slot::S1, Slot::S2, Slot::S3, Slot::Y];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Slot::S0 => "s0",
            Slot::S1 => "s1",
            Slot::S2 => "s2",
            Slot::S3 => "s3",
            Slot::Y => "y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Instr {
    /// A literal broadcast over all neurons.
    Const(f64),
    State(Slot),
    /// `U_i x`
    InputProj(u8),
    /// `W_i y`, hollow
    RecurrentProj(u8),
    /// `P_i s0`, hollow
    PeepProj(u8),
    Bias(u8),
    /// Element-wise product with auxiliary vector `aux`.
    Aux { aux: usize, src: Reg },
    Bin(BinOp, Reg, Reg),
    Act(Activation, Reg),
}

impl Instr {
    pub fn operands(&self) -> Vec<Reg> {
        match *self {
            Instr::Aux { src, .. } => vec![src],
            Instr::Bin(_, a, b) => vec![a, b],
            Instr::Act(_, a) => vec![a],
            _ => vec![],
        }
    }
}

/// An auxiliary weight vector and the place it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AuxSite {
    pub mapping: u8,
    /// Pre-order id of the `cons` node.
    pub site: usize,
}

/// Shapes of the trainable recurrent-layer weights.
///
/// Each of the five mappings owns `U_i` (`l x n_in`), hollow `W_i` and `P_i`
/// (`l x l`) and `b_i` (`l`). They are stored stacked: `U` is `5l x n_in`,
/// `W` and `P` are `5l x l`, `b` is `5l`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightLayout {
    pub nodes: usize,
    pub inputs: usize,
    pub aux: Vec<AuxSite>,
}

impl WeightLayout {
    pub fn stacked_rows(&self) -> usize {
        crate::dsl::NUM_MAPPINGS * self.nodes
    }
}

/// Which stacked products a kernel needs per timestep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Usage {
    pub input: bool,
    pub recurrent: bool,
    pub peep: bool,
    /// Reads of s0..s3 and y.
    pub slots: [bool; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronKernel {
    pub instrs: Vec<Instr>,
    /// Registers holding s0', s1', s2', s3', y'.
    pub outputs: [Reg; 5],
    pub layout: WeightLayout,
    pub usage: Usage,
}

impl NeuronKernel {
    pub fn register_count(&self) -> usize {
        self.instrs.len()
    }

    /// Operand references, counting the five output uses.
    pub fn operand_count(&self) -> usize {
        self.instrs.iter().map(|i| i.operands().len()).sum::<usize>() + 5
    }

    /// Checks single assignment in topological order.
    pub fn validate(&self) -> Result<(), CompileError> {
        for (r, ins) in self.instrs.iter().enumerate() {
            if ins.operands().iter().any(|&o| o >= r) {
                return Err(CompileError::Malformed(format!("register {r} reads a later register")));
            }
            if let Instr::Aux { aux, .. } = ins {
                if *aux >= self.layout.aux.len() {
                    return Err(CompileError::Malformed(format!("aux {aux} out of range")));
                }
            }
        }
        if self.outputs.iter().any(|&o| o >= self.instrs.len()) {
            return Err(CompileError::Malformed("output register out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("a layer needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("a layer needs at least 1 input, got 0")]
    NoInputs,
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("malformed kernel: {0}")]
    Malformed(String),
}

pub fn compile(p: &TypedProgram, nodes: usize, inputs: usize) -> Result<NeuronKernel, CompileError> {
    if nodes < 2 {
        return Err(CompileError::TooFewNodes(nodes));
    }
    if inputs == 0 {
        return Err(CompileError::NoInputs);
    }
    let mut lw = Lowering::default();
    let mut env = Vec::new();
    let result = lw.eval(&p.program.body, 0, &mut env)?;
    let Value::Tuple(items) = result else {
        return Err(CompileError::Unsupported("program does not return a tuple".into()));
    };
    if items.len() != 5 {
        return Err(CompileError::Unsupported("program does not return a quintuple".into()));
    }
    let mut outputs = [0; 5];
    for (o, v) in outputs.iter_mut().zip(items) {
        let Value::Scalar(r) = v else {
            return Err(CompileError::Unsupported("quintuple field is not a real".into()));
        };
        *o = r;
    }
    let mut usage = Usage::default();
    for ins in &lw.instrs {
        match ins {
            Instr::InputProj(_) => usage.input = true,
            Instr::RecurrentProj(_) => usage.recurrent = true,
            Instr::PeepProj(_) => usage.peep = true,
            Instr::State(s) => usage.slots[s.index()] = true,
            _ => {}
        }
    }
    let kernel = NeuronKernel {
        instrs: lw.instrs,
        outputs,
        layout: WeightLayout { nodes, inputs, aux: lw.aux },
        usage,
    };
    kernel.validate()?;
    Ok(kernel)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Terminus {
    Bias,
    Inputs,
    OtherPeeps,
    OtherOutputs,
}

#[derive(Debug, Clone)]
enum Value<'a> {
    Scalar(Reg),
    /// `cons` heads as (site, register) followed by the list's terminus.
    List(Vec<(usize, Reg)>, Terminus),
    Tuple(Vec<Value<'a>>),
    Function {
        param: &'a str,
        body: &'a Expr,
        body_id: usize,
        scope: Vec<(&'a str, Value<'a>)>,
    },
}

#[derive(Default)]
struct Lowering {
    instrs: Vec<Instr>,
    aux: Vec<AuxSite>,
    aux_index: HashMap<AuxSite, usize>,
    leaves: HashMap<LeafKey, Reg>,
}

/// Leaf instructions are emitted once and shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum LeafKey {
    Const(u64),
    State(Slot),
    Input(u8),
    Recurrent(u8),
    Peep(u8),
    Bias(u8),
}

impl Lowering {
    fn emit(&mut self, ins: Instr) -> Reg {
        self.instrs.push(ins);
        self.instrs.len() - 1
    }

    fn leaf(&mut self, ins: Instr) -> Reg {
        let key = match ins {
            Instr::Const(v) => LeafKey::Const(v.to_bits()),
            Instr::State(s) => LeafKey::State(s),
            Instr::InputProj(i) => LeafKey::Input(i),
            Instr::RecurrentProj(i) => LeafKey::Recurrent(i),
            Instr::PeepProj(i) => LeafKey::Peep(i),
            Instr::Bias(i) => LeafKey::Bias(i),
            other => return self.emit(other),
        };
        if let Some(&r) = self.leaves.get(&key) {
            return r;
        }
        let r = self.emit(ins);
        self.leaves.insert(key, r);
        r
    }

    fn aux_for(&mut self, mapping: u8, site: usize) -> usize {
        let key = AuxSite { mapping, site };
        if let Some(&k) = self.aux_index.get(&key) {
            return k;
        }
        self.aux.push(key);
        self.aux_index.insert(key, self.aux.len() - 1);
        self.aux.len() - 1
    }

    fn scalar<'a>(&mut self, e: &'a Expr, id: usize, env: &mut Vec<(&'a str, Value<'a>)>) -> Result<Reg, CompileError> {
        match self.eval(e, id, env)? {
            Value::Scalar(r) => Ok(r),
            _ => Err(CompileError::Unsupported(format!("expected a real at node {id}"))),
        }
    }

    fn eval<'a>(&mut self, e: &'a Expr, id: usize, env: &mut Vec<(&'a str, Value<'a>)>) -> Result<Value<'a>, CompileError> {
        let first = id + 1;
        Ok(match e {
            Expr::Const(v) => Value::Scalar(self.leaf(Instr::Const(*v))),
            Expr::Param(p) => match p {
                Param::SelfPeep0 => Value::Scalar(self.leaf(Instr::State(Slot::S0))),
                Param::SelfPeep1 => Value::Scalar(self.leaf(Instr::State(Slot::S1))),
                Param::SelfPeep2 => Value::Scalar(self.leaf(Instr::State(Slot::S2))),
                Param::SelfPeep3 => Value::Scalar(self.leaf(Instr::State(Slot::S3))),
                Param::SelfOutput => Value::Scalar(self.leaf(Instr::State(Slot::Y))),
                Param::InputsLC => Value::List(vec![], Terminus::Inputs),
                Param::OtherPeepsLC => Value::List(vec![], Terminus::OtherPeeps),
                Param::OtherOutputsLC => Value::List(vec![], Terminus::OtherOutputs),
            },
            Expr::Bias => Value::List(vec![], Terminus::Bias),
            Expr::Var(name) => env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| CompileError::Unsupported(format!("free variable `{name}`")))?,
            Expr::Bin(op, a, b) => {
                let ra = self.scalar(a, first, env)?;
                let rb = self.scalar(b, first + a.node_count(), env)?;
                Value::Scalar(self.emit(Instr::Bin(*op, ra, rb)))
            }
            Expr::Act(f, a) => {
                let ra = self.scalar(a, first, env)?;
                Value::Scalar(self.emit(Instr::Act(*f, ra)))
            }
            Expr::Cons(h, t) => {
                let rh = self.scalar(h, first, env)?;
                match self.eval(t, first + h.node_count(), env)? {
                    Value::List(mut heads, term) => {
                        heads.insert(0, (id, rh));
                        Value::List(heads, term)
                    }
                    _ => return Err(CompileError::Unsupported("cons tail is not a list".into())),
                }
            }
            Expr::Lc(i, list) => {
                let Value::List(heads, term) = self.eval(list, first, env)? else {
                    return Err(CompileError::Unsupported(format!("lc{i} of a non-list")));
                };
                let mut terms = Vec::with_capacity(heads.len() + 2);
                for (site, reg) in heads {
                    let aux = self.aux_for(*i, site);
                    terms.push(self.emit(Instr::Aux { aux, src: reg }));
                }
                match term {
                    Terminus::Bias => {}
                    Terminus::Inputs => terms.push(self.leaf(Instr::InputProj(*i))),
                    Terminus::OtherOutputs => terms.push(self.leaf(Instr::RecurrentProj(*i))),
                    Terminus::OtherPeeps => terms.push(self.leaf(Instr::PeepProj(*i))),
                }
                terms.push(self.leaf(Instr::Bias(*i)));
                let mut acc = terms[0];
                for &t in &terms[1..] {
                    acc = self.emit(Instr::Bin(BinOp::Add, acc, t));
                }
                Value::Scalar(acc)
            }
            Expr::Tuple(es) => {
                let mut vals = Vec::with_capacity(es.len());
                let mut next = first;
                for x in es {
                    vals.push(self.eval(x, next, env)?);
                    next += x.node_count();
                }
                Value::Tuple(vals)
            }
            Expr::Case(s, pat, body) => {
                let v = self.eval(s, first, env)?;
                let mark = env.len();
                bind(pat, v, env)?;
                let r = self.eval(body, first + s.node_count(), env);
                env.truncate(mark);
                r?
            }
            Expr::Let { name, param, body, rest } => {
                let f = Value::Function {
                    param: param.as_str(),
                    body: body.as_ref(),
                    body_id: first,
                    scope: env.clone(),
                };
                env.push((name.as_str(), f));
                let r = self.eval(rest, first + body.node_count(), env);
                env.pop();
                r?
            }
            Expr::Apply(name, arg) => {
                let a = self.eval(arg, first, env)?;
                let f = env
                    .iter()
                    .rev()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| v.clone());
                let Some(Value::Function { param, body, body_id, mut scope }) = f else {
                    return Err(CompileError::Unsupported(format!("`{name}` is not a function")));
                };
                scope.push((param, a));
                self.eval(body, body_id, &mut scope)?
            }
        })
    }
}

fn bind<'a>(pat: &'a Pattern, v: Value<'a>, env: &mut Vec<(&'a str, Value<'a>)>) -> Result<(), CompileError> {
    match pat {
        Pattern::Var(n) => env.push((n.as_str(), v)),
        Pattern::Tuple(names) => {
            let Value::Tuple(items) = v else {
                return Err(CompileError::Unsupported("tuple pattern on a non-tuple".into()));
            };
            if items.len() != names.len() {
                return Err(CompileError::Unsupported("tuple pattern arity".into()));
            }
            for (n, x) in names.iter().zip(items) {
                env.push((n.as_str(), x));
            }
        }
    }
    Ok(())
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Const(v) => write!(f, "const {v:?}"),
            Instr::State(s) => write!(f, "state {}", s.name()),
            Instr::InputProj(i) => write!(f, "U{i}*x"),
            Instr::RecurrentProj(i) => write!(f, "W{i}*y"),
            Instr::PeepProj(i) => write!(f, "P{i}*s0"),
            Instr::Bias(i) => write!(f, "b{i}"),
            Instr::Aux { aux, src } => write!(f, "a{aux} . r{src}"),
            Instr::Bin(op, a, b) => write!(f, "r{a} {} r{b}", op.symbol()),
            Instr::Act(g, a) => write!(f, "{}(r{a})", g.name()),
        }
    }
}

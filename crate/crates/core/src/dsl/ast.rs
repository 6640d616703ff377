//! Syntax tree for neuron programs.
//!
//! Linear-combination lists and scalars share one expression type because the
//! language lets `case` bind and return either kind; the type checker keeps
//! the two apart.

use std::fmt;

/// The eight parameters of a neuron transition function, in signature order.
pub const PARAMS: [Param; 8] = [
    Param::SelfPeep0,
    Param::SelfPeep1,
    Param::SelfPeep2,
    Param::SelfPeep3,
    Param::SelfOutput,
    Param::OtherPeepsLC,
    Param::OtherOutputsLC,
    Param::InputsLC,
];

/// Number of weight mappings (`lc0` .. `lc4`).
pub const NUM_MAPPINGS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    SelfPeep0,
    SelfPeep1,
    SelfPeep2,
    SelfPeep3,
    SelfOutput,
    OtherPeepsLC,
    OtherOutputsLC,
    InputsLC,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::SelfPeep0 => "SelfPeep0",
            Param::SelfPeep1 => "SelfPeep1",
            Param::SelfPeep2 => "SelfPeep2",
            Param::SelfPeep3 => "SelfPeep3",
            Param::SelfOutput => "SelfOutput",
            Param::OtherPeepsLC => "OtherPeepsLC",
            Param::OtherOutputsLC => "OtherOutputsLC",
            Param::InputsLC => "InputsLC",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        PARAMS.iter().copied().find(|p| p.name() == name)
    }

    /// List-typed parameters are the three `...LC` sources.
    pub fn is_list(self) -> bool {
        matches!(
            self,
            Param::OtherPeepsLC | Param::OtherOutputsLC | Param::InputsLC
        )
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Activation {
    Tanh,
    Relu,
    Srelu,
    Sigmoid,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Tanh,
        Activation::Relu,
        Activation::Srelu,
        Activation::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Srelu => "srelu",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn from_name(name: &str) -> Option<Activation> {
        Self::ALL.iter().copied().find(|a| a.name() == name)
    }
}

/// Binding pattern of a `case` arm.
#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Var(String),
    Tuple(Vec<String>),
}

impl Pattern {
    pub fn names(&self) -> Vec<&str> {
        match self {
            Pattern::Var(v) => vec![v.as_str()],
            Pattern::Tuple(vs) => vs.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// A signature parameter.
    Param(Param),
    /// A variable bound by a `case` pattern or a function parameter.
    Var(String),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Act(Activation, Box<Expr>),
    /// `lcI list`: the linear combination of `list` under weight mapping `I`.
    Lc(u8, Box<Expr>),
    Bias,
    Cons(Box<Expr>, Box<Expr>),
    Case(Box<Expr>, Pattern, Box<Expr>),
    /// `let fun name param = body in rest end`
    Let {
        name: String,
        param: String,
        body: Box<Expr>,
        rest: Box<Expr>,
    },
    Apply(String, Box<Expr>),
    Tuple(Vec<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn act(f: Activation, a: Expr) -> Expr {
        Expr::Act(f, Box::new(a))
    }

    pub fn lc(i: u8, list: Expr) -> Expr {
        Expr::Lc(i, Box::new(list))
    }

    pub fn cons(head: Expr, tail: Expr) -> Expr {
        Expr::Cons(Box::new(head), Box::new(tail))
    }

    pub fn case(scrutinee: Expr, pat: Pattern, body: Expr) -> Expr {
        Expr::Case(Box::new(scrutinee), pat, Box::new(body))
    }

    /// Direct subexpressions in evaluation (and pre-order numbering) order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Var(_) | Expr::Bias => vec![],
            Expr::Bin(_, a, b) | Expr::Cons(a, b) => vec![a, b],
            Expr::Act(_, a) | Expr::Lc(_, a) | Expr::Apply(_, a) => vec![a],
            Expr::Case(s, _, b) => vec![s, b],
            Expr::Let { body, rest, .. } => vec![body, rest],
            Expr::Tuple(es) => es.iter().collect(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Var(_) | Expr::Bias => vec![],
            Expr::Bin(_, a, b) | Expr::Cons(a, b) => vec![a, b],
            Expr::Act(_, a) | Expr::Lc(_, a) | Expr::Apply(_, a) => vec![a],
            Expr::Case(s, _, b) => vec![s, b],
            Expr::Let { body, rest, .. } => vec![body, rest],
            Expr::Tuple(es) => es.iter_mut().collect(),
        }
    }

    /// Number of nodes in the tree rooted here.
    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Visits every node in pre-order; the visit index is the node id used by
    /// the type checker and the compiler.
    pub fn preorder(&self) -> Vec<&Expr> {
        let mut out = Vec::with_capacity(64);
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            for c in e.children().into_iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Mutable access to the node with pre-order id `id`.
    pub fn node_mut(&mut self, id: usize) -> Option<&mut Expr> {
        fn go<'a>(e: &'a mut Expr, id: usize, next: &mut usize) -> Option<&'a mut Expr> {
            if *next == id {
                return Some(e);
            }
            *next += 1;
            for c in e.children_mut() {
                let size = c.node_count();
                if id < *next + size {
                    return go(c, id, next);
                }
                *next += size;
            }
            None
        }
        let mut next = 0;
        go(self, id, &mut next)
    }
}

/// A complete neuron transition function.
///
/// The parameter list is fixed, so a program is fully described by its body.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronProgram {
    pub body: Expr,
}

impl NeuronProgram {
    pub fn new(body: Expr) -> Self {
        NeuronProgram { body }
    }

    pub fn node_count(&self) -> usize {
        self.body.node_count()
    }
}

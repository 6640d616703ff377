//! Syntactic complexity: the number of bits needed to code a program when
//! each node's symbol is drawn with a fixed occurrence probability.

use std::collections::BTreeMap;
use std::fmt;

use super::ast::{Activation, BinOp, Expr, NeuronProgram, Param, NUM_MAPPINGS, PARAMS};
use super::error::DslError;

/// The symbol a single tree node contributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Const,
    Param(Param),
    BoundVar,
    Bin(BinOp),
    Act(Activation),
    Lc(u8),
    Bias,
    Cons,
    Case,
    Let,
    Apply,
    Tuple,
}

impl Symbol {
    pub fn of(e: &Expr) -> Symbol {
        match e {
            Expr::Const(_) => Symbol::Const,
            Expr::Param(p) => Symbol::Param(*p),
            Expr::Var(_) => Symbol::BoundVar,
            Expr::Bin(op, ..) => Symbol::Bin(*op),
            Expr::Act(f, _) => Symbol::Act(*f),
            Expr::Lc(i, _) => Symbol::Lc(*i),
            Expr::Bias => Symbol::Bias,
            Expr::Cons(..) => Symbol::Cons,
            Expr::Case(..) => Symbol::Case,
            Expr::Let { .. } => Symbol::Let,
            Expr::Apply(..) => Symbol::Apply,
            Expr::Tuple(_) => Symbol::Tuple,
        }
    }

    /// The fixed symbol alphabet (29 symbols).
    pub fn alphabet() -> Vec<Symbol> {
        let mut v = vec![Symbol::Const, Symbol::BoundVar];
        v.extend(PARAMS.iter().map(|p| Symbol::Param(*p)));
        v.extend([BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div].map(Symbol::Bin));
        v.extend(Activation::ALL.map(Symbol::Act));
        v.extend((0..NUM_MAPPINGS as u8).map(Symbol::Lc));
        v.extend([
            Symbol::Bias,
            Symbol::Cons,
            Symbol::Case,
            Symbol::Let,
            Symbol::Apply,
            Symbol::Tuple,
        ]);
        v
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Const => f.write_str("<real>"),
            Symbol::Param(p) => f.write_str(p.name()),
            Symbol::BoundVar => f.write_str("<var>"),
            Symbol::Bin(op) => f.write_str(op.symbol()),
            Symbol::Act(a) => f.write_str(a.name()),
            Symbol::Lc(i) => write!(f, "lc{i}"),
            Symbol::Bias => f.write_str("bias"),
            Symbol::Cons => f.write_str("cons"),
            Symbol::Case => f.write_str("case"),
            Symbol::Let => f.write_str("let"),
            Symbol::Apply => f.write_str("<apply>"),
            Symbol::Tuple => f.write_str("<tuple>"),
        }
    }
}

/// Occurrence probability per symbol. Entries need not sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolCost {
    probs: BTreeMap<Symbol, f64>,
}

impl Default for SymbolCost {
    /// Uniform over the alphabet.
    fn default() -> Self {
        let alphabet = Symbol::alphabet();
        let p = 1.0 / alphabet.len() as f64;
        SymbolCost { probs: alphabet.into_iter().map(|s| (s, p)).collect() }
    }
}

impl SymbolCost {
    /// Builds a table; every probability must lie in (0, 1].
    pub fn new(probs: impl IntoIterator<Item = (Symbol, f64)>) -> Result<Self, DslError> {
        let probs: BTreeMap<Symbol, f64> = probs.into_iter().collect();
        if let Some((s, p)) = probs.iter().find(|(_, p)| !(**p > 0.0 && **p <= 1.0)) {
            return Err(DslError::Type(format!("probability {p} for `{s}` is outside (0, 1]")));
        }
        Ok(SymbolCost { probs })
    }

    pub fn probability(&self, s: Symbol) -> Option<f64> {
        self.probs.get(&s).copied()
    }

    pub fn bits(&self, s: Symbol) -> Result<f64, DslError> {
        self.probability(s)
            .map(|p| -p.log2())
            .ok_or_else(|| DslError::MissingSymbol(s.to_string()))
    }
}

pub fn expr_complexity(e: &Expr, costs: &SymbolCost) -> Result<f64, DslError> {
    e.preorder().into_iter().map(|n| costs.bits(Symbol::of(n))).sum()
}

pub fn complexity(p: &NeuronProgram, costs: &SymbolCost) -> Result<f64, DslError> {
    expr_complexity(&p.body, costs)
}

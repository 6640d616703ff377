//! Text renderings of a compiled kernel: C-like assignments and a DOT graph.

use std::fmt::Write;

use super::{Instr, NeuronKernel, Reg, Slot};
use crate::dsl::BinOp;

const OUT_NAMES: [&str; 5] = ["s0'", "s1'", "s2'", "s3'", "y'"];

fn use_counts(k: &NeuronKernel) -> Vec<usize> {
    let mut uses = vec![0usize; k.instrs.len()];
    for ins in &k.instrs {
        for o in ins.operands() {
            uses[o] += 1;
        }
    }
    for &o in &k.outputs {
        uses[o] += 1;
    }
    uses
}

fn is_leaf(ins: &Instr) -> bool {
    matches!(
        ins,
        Instr::Const(_)
            | Instr::State(_)
            | Instr::InputProj(_)
            | Instr::RecurrentProj(_)
            | Instr::PeepProj(_)
            | Instr::Bias(_)
    )
}

fn c_real(v: f64) -> String {
    format!("{v:?}")
}

struct Renderer<'k> {
    k: &'k NeuronKernel,
    named: Vec<bool>,
}

impl Renderer<'_> {
    /// Renders register `r` and returns (text, precedence). Precedence 3 is
    /// atomic, 2 multiplicative, 1 additive.
    fn render(&self, r: Reg) -> (String, u8) {
        if self.named[r] {
            return (format!("v{r}"), 3);
        }
        self.body(r)
    }

    fn body(&self, r: Reg) -> (String, u8) {
        match self.k.instrs[r] {
            Instr::Const(v) if v < 0.0 => (format!("({})", c_real(v)), 3),
            Instr::Const(v) => (c_real(v), 3),
            Instr::State(s) => (s.name().to_string(), 3),
            Instr::InputProj(i) => (format!("U{i}*x"), 2),
            Instr::RecurrentProj(i) => (format!("W{i}*y"), 2),
            Instr::PeepProj(i) => (format!("P{i}*s0"), 2),
            Instr::Bias(i) => (format!("b{i}"), 3),
            Instr::Act(f, a) => (format!("{}({})", f.name(), self.render(a).0), 3),
            Instr::Aux { aux, src } => {
                let (t, p) = self.render(src);
                let t = if p < 2 { format!("({t})") } else { t };
                (format!("a{aux}*{t}"), 2)
            }
            Instr::Bin(op, a, b) => {
                let prec = match op {
                    BinOp::Add | BinOp::Sub => 1,
                    BinOp::Mul | BinOp::Div => 2,
                };
                let (ta, pa) = self.render(a);
                let (tb, pb) = self.render(b);
                let ta = if pa < prec { format!("({ta})") } else { ta };
                let right_paren = pb < prec || (pb == prec && matches!(op, BinOp::Sub | BinOp::Div));
                let tb = if right_paren { format!("({tb})") } else { tb };
                let sep = if prec == 1 { format!(" {} ", op.symbol()) } else { op.symbol().to_string() };
                (format!("{ta}{sep}{tb}"), prec)
            }
        }
    }
}

/// C-like listing: one assignment per shared intermediate register, then one
/// line per field of the result quintuple. Single-use registers are inlined.
pub fn emit_readable(k: &NeuronKernel) -> String {
    let uses = use_counts(k);
    let named: Vec<bool> = k
        .instrs
        .iter()
        .zip(&uses)
        .map(|(ins, &u)| !is_leaf(ins) && u >= 2)
        .collect();
    let rd = Renderer { k, named };
    let mut out = String::new();
    for r in 0..k.instrs.len() {
        if rd.named[r] {
            let _ = writeln!(out, "v{r} = {};", rd.body(r).0);
        }
    }
    for (name, &r) in OUT_NAMES.iter().zip(&k.outputs) {
        let _ = writeln!(out, "{name} = {};", rd.render(r).0);
    }
    out
}

/// DOT digraph with one node per register, one edge per operand reference
/// and one box per result field.
pub fn emit_graph(k: &NeuronKernel) -> String {
    let mut out = String::from("digraph neuron {\n");
    for (r, ins) in k.instrs.iter().enumerate() {
        let label = match ins {
            Instr::Const(v) => c_real(*v),
            Instr::State(s) => s.name().to_string(),
            Instr::InputProj(i) => format!("U{i}*x"),
            Instr::RecurrentProj(i) => format!("W{i}*y"),
            Instr::PeepProj(i) => format!("P{i}*s0"),
            Instr::Bias(i) => format!("b{i}"),
            Instr::Aux { aux, .. } => format!("a{aux} *"),
            Instr::Bin(op, ..) => op.symbol().to_string(),
            Instr::Act(f, _) => f.name().to_string(),
        };
        let _ = writeln!(out, "  r{r} [label=\"{label}\"];");
    }
    for (slot, name) in Slot::ALL.iter().zip(OUT_NAMES) {
        let _ = writeln!(out, "  out_{} [label=\"{name}\", shape=box];", slot.name());
    }
    for (r, ins) in k.instrs.iter().enumerate() {
        for o in ins.operands() {
            let _ = writeln!(out, "  r{o} -> r{r};");
        }
    }
    for (slot, &r) in Slot::ALL.iter().zip(&k.outputs) {
        let _ = writeln!(out, "  r{r} -> out_{};", slot.name());
    }
    out.push_str("}\n");
    out
}

//! Execution of a compiled kernel over one timestep of a whole layer.

use serde::{Deserialize, Serialize};

use super::{Tape, Tensor, Var};
use crate::compiler::{Instr, NeuronKernel, Slot};
use crate::dsl::NUM_MAPPINGS;

/// Trainable recurrent-layer weights in stacked form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub nodes: usize,
    /// `5l x n_in`
    pub u: Tensor,
    /// `5l x l`, each `l x l` block hollow
    pub w: Tensor,
    /// `5l x l`, each `l x l` block hollow
    pub p: Tensor,
    /// `1 x 5l`
    pub b: Tensor,
    /// `1 x l` each
    pub aux: Vec<Tensor>,
}

impl LayerWeights {
    /// Largest absolute diagonal entry over all `W_i` and `P_i` blocks.
    pub fn max_abs_hollow_diag(&self) -> f64 {
        let l = self.nodes;
        (0..NUM_MAPPINGS * l)
            .map(|r| self.w.get(r, r % l).abs().max(self.p.get(r, r % l).abs()))
            .fold(0.0, f64::max)
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = vec![&self.u, &self.w, &self.p, &self.b];
        v.extend(self.aux.iter());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![&mut self.u, &mut self.w, &mut self.p, &mut self.b];
        v.extend(self.aux.iter_mut());
        v
    }
}

/// The layer weights registered on a tape, plus per-forward constants.
pub struct LayerVars {
    pub nodes: usize,
    pub u: Var,
    pub w: Var,
    pub p: Var,
    pub b: Var,
    pub aux: Vec<Var>,
    bias: [Option<Var>; NUM_MAPPINGS],
    consts: Vec<(u64, Var)>,
}

impl LayerVars {
    /// Registers the weights as parameters (order `u, w, p, b, aux..`) and
    /// prepares the broadcast biases and literals needed for `batch` rows.
    pub fn bind(tape: &mut Tape, k: &NeuronKernel, weights: &LayerWeights, batch: usize) -> Self {
        let l = weights.nodes;
        let u = tape.param(weights.u.clone());
        let w = tape.param(weights.w.clone());
        let p = tape.param(weights.p.clone());
        let b = tape.param(weights.b.clone());
        let aux = weights.aux.iter().map(|a| tape.param(a.clone())).collect();
        let mut bias = [None; NUM_MAPPINGS];
        let mut consts: Vec<(u64, Var)> = Vec::new();
        for ins in &k.instrs {
            match *ins {
                Instr::Bias(m) if bias[m as usize].is_none() => {
                    let row = tape.cols(b, m as usize * l, l);
                    bias[m as usize] = Some(tape.broadcast_rows(row, batch));
                }
                Instr::Const(c) if !consts.iter().any(|(bits, _)| *bits == c.to_bits()) => {
                    let v = tape.constant(Tensor::filled(batch, l, c));
                    consts.push((c.to_bits(), v));
                }
                _ => {}
            }
        }
        LayerVars { nodes: l, u, w, p, b, aux, bias, consts }
    }

    fn constant(&self, c: f64) -> Var {
        self.consts.iter().find(|(bits, _)| *bits == c.to_bits()).expect("literal bound").1
    }
}

/// `s0..s3` and `y` for every neuron, each `batch x l`.
#[derive(Debug, Clone, Copy)]
pub struct LayerState {
    pub slots: [Var; 5],
}

impl LayerState {
    pub fn zeros(tape: &mut Tape, batch: usize, l: usize) -> Self {
        let z = tape.constant(Tensor::zeros(batch, l));
        LayerState { slots: [z; 5] }
    }

    pub fn get(&self, s: Slot) -> Var {
        self.slots[s.index()]
    }

    pub fn y(&self) -> Var {
        self.slots[Slot::Y.index()]
    }
}

/// One transition `(x, s0..s3, y) -> (s0'..s3', y')` for the whole layer,
/// recorded on `tape`. `x` is `batch x n_in`.
pub fn forward_kernel(tape: &mut Tape, k: &NeuronKernel, vars: &LayerVars, state: &LayerState, x: Var) -> LayerState {
    let l = vars.nodes;
    let ux = k.usage.input.then(|| tape.matmul_t(x, vars.u, None));
    let wy = k.usage.recurrent.then(|| tape.matmul_t(state.y(), vars.w, Some(l)));
    let ps = k.usage.peep.then(|| tape.matmul_t(state.get(Slot::S0), vars.p, Some(l)));
    let mut regs: Vec<Var> = Vec::with_capacity(k.instrs.len());
    for ins in &k.instrs {
        let v = match *ins {
            Instr::Const(c) => vars.constant(c),
            Instr::State(s) => state.get(s),
            Instr::InputProj(m) => tape.cols(ux.expect("input usage"), m as usize * l, l),
            Instr::RecurrentProj(m) => tape.cols(wy.expect("recurrent usage"), m as usize * l, l),
            Instr::PeepProj(m) => tape.cols(ps.expect("peep usage"), m as usize * l, l),
            Instr::Bias(m) => vars.bias[m as usize].expect("bias bound"),
            Instr::Aux { aux, src } => tape.mul_row(regs[src], vars.aux[aux]),
            Instr::Bin(op, a, b) => {
                use crate::dsl::BinOp;
                match op {
                    BinOp::Add => tape.add(regs[a], regs[b]),
                    BinOp::Sub => tape.sub(regs[a], regs[b]),
                    BinOp::Mul => tape.mul(regs[a], regs[b]),
                    BinOp::Div => tape.div(regs[a], regs[b]),
                }
            }
            Instr::Act(f, a) => tape.act(f, regs[a]),
        };
        regs.push(v);
    }
    LayerState { slots: k.outputs.map(|r| regs[r]) }
}

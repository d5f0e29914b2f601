//! Recurrent cells and affine layers expressed as tape ops.

use adequa_autodiff::{Tape, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::{Bound, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    #[default]
    Gru,
    Lstm,
}

fn init_scale(fan_in: usize) -> f64 {
    1.0 / (fan_in as f64).sqrt()
}

/// `x W + b` for row-vector inputs.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    w: Var,
    b: Var,
}

impl Linear {
    pub fn register(params: &mut ParamSet, prefix: &str, input: usize, output: usize, rng: &mut impl Rng) {
        params.insert_uniform(format!("{prefix}.w"), &[input, output], init_scale(input), rng);
        params.insert_zeros(format!("{prefix}.b"), &[1, output]);
    }

    pub fn bind(bound: &Bound, prefix: &str) -> Result<Self> {
        Ok(Self {
            w: bound.var(&format!("{prefix}.w"))?,
            b: bound.var(&format!("{prefix}.b"))?,
        })
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let xw = tape.matmul(x, self.w)?;
        Ok(tape.add(xw, self.b)?)
    }
}

/// Gated recurrent unit:
/// `r = σ(xW_r + hU_r + b_r)`, `z = σ(xW_z + hU_z + b_z)`,
/// `n = tanh(xW_n + b_n + r ⊙ (hU_n + b_hn))`, `h' = n + z ⊙ (h − n)`.
#[derive(Debug, Clone, Copy)]
pub struct Gru {
    w: [Var; 3],
    u: [Var; 3],
    b: [Var; 3],
    b_hn: Var,
}

const GRU_GATES: [&str; 3] = ["r", "z", "n"];

impl Gru {
    pub fn register(params: &mut ParamSet, prefix: &str, input: usize, hidden: usize, rng: &mut impl Rng) {
        let s = init_scale(hidden);
        for g in GRU_GATES {
            params.insert_uniform(format!("{prefix}.w_{g}"), &[input, hidden], s, rng);
            params.insert_uniform(format!("{prefix}.u_{g}"), &[hidden, hidden], s, rng);
            params.insert_zeros(format!("{prefix}.b_{g}"), &[1, hidden]);
        }
        params.insert_zeros(format!("{prefix}.b_hn"), &[1, hidden]);
    }

    pub fn bind(bound: &Bound, prefix: &str) -> Result<Self> {
        let get = |k: &str, g: &str| bound.var(&format!("{prefix}.{k}_{g}"));
        Ok(Self {
            w: [get("w", "r")?, get("w", "z")?, get("w", "n")?],
            u: [get("u", "r")?, get("u", "z")?, get("u", "n")?],
            b: [get("b", "r")?, get("b", "z")?, get("b", "n")?],
            b_hn: bound.var(&format!("{prefix}.b_hn"))?,
        })
    }

    fn gate(&self, tape: &mut Tape, k: usize, x: Var, h: Var) -> Result<Var> {
        let xw = tape.matmul(x, self.w[k])?;
        let hu = tape.matmul(h, self.u[k])?;
        let s = tape.add(xw, hu)?;
        let s = tape.add(s, self.b[k])?;
        Ok(tape.sigmoid(s)?)
    }

    pub fn step(&self, tape: &mut Tape, x: Var, h: Var) -> Result<Var> {
        let r = self.gate(tape, 0, x, h)?;
        let z = self.gate(tape, 1, x, h)?;
        let xw = tape.matmul(x, self.w[2])?;
        let xw = tape.add(xw, self.b[2])?;
        let hu = tape.matmul(h, self.u[2])?;
        let hu = tape.add(hu, self.b_hn)?;
        let rhu = tape.mul(r, hu)?;
        let pre = tape.add(xw, rhu)?;
        let n = tape.tanh(pre)?;
        let diff = tape.sub(h, n)?;
        let keep = tape.mul(z, diff)?;
        Ok(tape.add(n, keep)?)
    }
}

/// Long short-term memory cell with input, forget, cell and output gates.
#[derive(Debug, Clone, Copy)]
pub struct Lstm {
    w: [Var; 4],
    u: [Var; 4],
    b: [Var; 4],
}

const LSTM_GATES: [&str; 4] = ["i", "f", "g", "o"];

impl Lstm {
    pub fn register(params: &mut ParamSet, prefix: &str, input: usize, hidden: usize, rng: &mut impl Rng) {
        let s = init_scale(hidden);
        for g in LSTM_GATES {
            params.insert_uniform(format!("{prefix}.w_{g}"), &[input, hidden], s, rng);
            params.insert_uniform(format!("{prefix}.u_{g}"), &[hidden, hidden], s, rng);
            let bias = if g == "f" { 1.0 } else { 0.0 };
            params.insert(format!("{prefix}.b_{g}"), Tensor::filled(&[1, hidden], bias));
        }
    }

    pub fn bind(bound: &Bound, prefix: &str) -> Result<Self> {
        let mut w = Vec::new();
        let mut u = Vec::new();
        let mut b = Vec::new();
        for g in LSTM_GATES {
            w.push(bound.var(&format!("{prefix}.w_{g}"))?);
            u.push(bound.var(&format!("{prefix}.u_{g}"))?);
            b.push(bound.var(&format!("{prefix}.b_{g}"))?);
        }
        Ok(Self {
            w: [w[0], w[1], w[2], w[3]],
            u: [u[0], u[1], u[2], u[3]],
            b: [b[0], b[1], b[2], b[3]],
        })
    }

    fn pre(&self, tape: &mut Tape, k: usize, x: Var, h: Var) -> Result<Var> {
        let xw = tape.matmul(x, self.w[k])?;
        let hu = tape.matmul(h, self.u[k])?;
        let s = tape.add(xw, hu)?;
        Ok(tape.add(s, self.b[k])?)
    }

    pub fn step(&self, tape: &mut Tape, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let i = self.pre(tape, 0, x, h)?;
        let i = tape.sigmoid(i)?;
        let f = self.pre(tape, 1, x, h)?;
        let f = tape.sigmoid(f)?;
        let g = self.pre(tape, 2, x, h)?;
        let g = tape.tanh(g)?;
        let o = self.pre(tape, 3, x, h)?;
        let o = tape.sigmoid(o)?;
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c_next = tape.add(fc, ig)?;
        let tc = tape.tanh(c_next)?;
        let h_next = tape.mul(o, tc)?;
        Ok((h_next, c_next))
    }
}

/// Either cell kind behind one interface.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Gru(Gru),
    Lstm(Lstm),
}

/// Hidden state, plus the memory cell for LSTMs.
#[derive(Debug, Clone, Copy)]
pub struct CellState {
    pub h: Var,
    pub c: Option<Var>,
}

impl Cell {
    pub fn register(kind: CellKind, params: &mut ParamSet, prefix: &str, input: usize, hidden: usize, rng: &mut impl Rng) {
        match kind {
            CellKind::Gru => Gru::register(params, prefix, input, hidden, rng),
            CellKind::Lstm => Lstm::register(params, prefix, input, hidden, rng),
        }
    }

    pub fn bind(kind: CellKind, bound: &Bound, prefix: &str) -> Result<Self> {
        Ok(match kind {
            CellKind::Gru => Cell::Gru(Gru::bind(bound, prefix)?),
            CellKind::Lstm => Cell::Lstm(Lstm::bind(bound, prefix)?),
        })
    }

    pub fn zero_state(&self, tape: &mut Tape, hidden: usize) -> Result<CellState> {
        let h = tape.constant(Tensor::zeros(&[1, hidden]))?;
        let c = match self {
            Cell::Gru(_) => None,
            Cell::Lstm(_) => Some(tape.constant(Tensor::zeros(&[1, hidden]))?),
        };
        Ok(CellState { h, c })
    }

    pub fn step(&self, tape: &mut Tape, x: Var, state: CellState) -> Result<CellState> {
        match self {
            Cell::Gru(g) => Ok(CellState {
                h: g.step(tape, x, state.h)?,
                c: None,
            }),
            Cell::Lstm(l) => {
                let c = state.c.expect("LSTM state carries a memory cell");
                let (h, c) = l.step(tape, x, state.h, c)?;
                Ok(CellState { h, c: Some(c) })
            }
        }
    }
}

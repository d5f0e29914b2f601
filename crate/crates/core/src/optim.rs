//! Parameter updates: plain SGD by default, Adam as an opt-in.

use serde::{Deserialize, Serialize};

use crate::params::{GradSet, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// Global gradient-norm ceiling; non-positive disables clipping.
    pub clip_norm: f64,
    adam: Option<AdamState>,
}

#[derive(Debug, Clone)]
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, clip_norm: f64) -> Self {
        Self {
            kind,
            learning_rate,
            clip_norm,
            adam: None,
        }
    }

    pub fn sgd(learning_rate: f64, clip_norm: f64) -> Self {
        Self::new(OptimizerKind::Sgd, learning_rate, clip_norm)
    }

    /// Clip and apply `grads`; returns the gradient norm before clipping.
    pub fn step(&mut self, params: &mut ParamSet, mut grads: GradSet) -> f64 {
        let norm = grads.clip(self.clip_norm);
        match self.kind {
            OptimizerKind::Sgd => params.descend(&grads, self.learning_rate),
            OptimizerKind::Adam => {
                let g = grads.flat();
                let st = self.adam.get_or_insert_with(|| AdamState {
                    m: vec![0.0; g.len()],
                    v: vec![0.0; g.len()],
                    t: 0,
                });
                st.t += 1;
                let c1 = 1.0 - BETA1.powi(st.t);
                let c2 = 1.0 - BETA2.powi(st.t);
                let mut theta = params.flat();
                for i in 0..g.len() {
                    st.m[i] = BETA1 * st.m[i] + (1.0 - BETA1) * g[i];
                    st.v[i] = BETA2 * st.v[i] + (1.0 - BETA2) * g[i] * g[i];
                    theta[i] -= self.learning_rate * (st.m[i] / c1) / ((st.v[i] / c2).sqrt() + ADAM_EPS);
                }
                params.set_flat(&theta);
            }
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use adequa_autodiff::Tensor;

    fn one_param(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("x", Tensor::scalar(v));
        p
    }

    #[test]
    fn sgd_is_theta_minus_eta_grad() {
        let mut p = one_param(1.0);
        let mut o = Optimizer::sgd(0.5, 0.0);
        let n = o.step(&mut p, GradSet(vec![Tensor::scalar(0.25)]));
        assert_eq!(n, 0.25);
        assert_eq!(p.get("x").unwrap().item(), 0.875);
    }

    #[test]
    fn clipping_rescales_to_ceiling() {
        let mut p = one_param(0.0);
        let mut o = Optimizer::sgd(1.0, 5.0);
        let n = o.step(&mut p, GradSet(vec![Tensor::scalar(20.0)]));
        assert_eq!(n, 20.0);
        assert_eq!(p.get("x").unwrap().item(), -5.0);
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        let mut p = one_param(3.0);
        let mut o = Optimizer::new(OptimizerKind::Adam, 0.1, 0.0);
        for _ in 0..500 {
            let x = p.get("x").unwrap().item();
            o.step(&mut p, GradSet(vec![Tensor::scalar(2.0 * (x - 1.0))]));
        }
        assert!((p.get("x").unwrap().item() - 1.0).abs() < 1e-3);
    }
}

use serde::{Deserialize, Serialize};

use super::ParamVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    PlainGd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub step_count: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    /// Fresh state for `len` parameters; Adam uses beta1 = 0.9,
    /// beta2 = 0.999, epsilon = 1e-8.
    pub fn new(kind: OptimizerKind, len: usize) -> Self {
        let moments = match kind {
            OptimizerKind::PlainGd => 0,
            OptimizerKind::Adam => len,
        };
        OptimizerState {
            kind,
            step_count: 0,
            first_moment: vec![0.0; moments],
            second_moment: vec![0.0; moments],
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// Applies one update in place.
    pub fn step(&mut self, params: &mut ParamVector, grad: &ParamVector, eta: f64) -> Result<()> {
        if params.len() != grad.len() {
            return Err(Error::shape(format!(
                "{} parameters but {} gradient entries",
                params.len(),
                grad.len()
            )));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be non-negative, got {eta}"
            )));
        }
        let p = params.as_mut_slice();
        let g = grad.as_slice();
        match self.kind {
            OptimizerKind::PlainGd => {
                for (p, g) in p.iter_mut().zip(g) {
                    *p -= eta * g;
                }
            }
            OptimizerKind::Adam => {
                if self.first_moment.len() != p.len() || self.second_moment.len() != p.len() {
                    return Err(Error::shape(format!(
                        "optimizer tracks {} parameters, got {}",
                        self.first_moment.len(),
                        p.len()
                    )));
                }
                let t = (self.step_count + 1) as i32;
                let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
                let c1 = 1.0 - b1.powi(t);
                let c2 = 1.0 - b2.powi(t);
                for i in 0..p.len() {
                    let m = b1 * self.first_moment[i] + (1.0 - b1) * g[i];
                    let v = b2 * self.second_moment[i] + (1.0 - b2) * g[i] * g[i];
                    self.first_moment[i] = m;
                    self.second_moment[i] = v;
                    let m_hat = m / c1;
                    let v_hat = v / c2;
                    p[i] -= eta * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        self.step_count += 1;
        Ok(())
    }
}

/// Functional form of [`OptimizerState::step`].
pub fn optimizer_step(
    params: &ParamVector,
    grad: &ParamVector,
    state: &OptimizerState,
    eta: f64,
) -> Result<(ParamVector, OptimizerState)> {
    let mut params = params.clone();
    let mut state = state.clone();
    state.step(&mut params, grad, eta)?;
    Ok((params, state))
}

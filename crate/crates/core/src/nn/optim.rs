//! Parameter update rules: SGD with momentum, and Adam.
//!
//! A step first validates every gradient; any non-finite value refuses the
//! whole step. Updated parameters are checked too, so NaN/Inf never enters
//! parameter storage.

use super::{Scalar, Tensor};
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "algorithm")]
pub enum OptAlgo {
    SgdMomentum { momentum: f64 },
    Adam,
}

impl std::str::FromStr for OptAlgo {
    type Err = Error;
    fn from_str(s: &str) -> Result<OptAlgo> {
        match s {
            "adam" => Ok(OptAlgo::Adam),
            "sgd" => Ok(OptAlgo::SgdMomentum { momentum: 0.0 }),
            "sgd-momentum" => Ok(OptAlgo::SgdMomentum { momentum: 0.9 }),
            other => Err(Error::invalid(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// Per-parameter optimizer state, allocated lazily in visit order.
#[derive(Debug, Clone)]
struct Slot<T> {
    m: Tensor<T>,
    v: Tensor<T>,
}

#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    pub algo: OptAlgo,
    pub lr: f64,
    slots: Vec<Slot<T>>,
    t: u64,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(algo: OptAlgo, lr: f64) -> Optimizer<T> {
        Optimizer {
            algo,
            lr,
            slots: Vec::new(),
            t: 0,
        }
    }

    /// Begin a step after gradient validation has passed.
    pub fn begin_step(&mut self) {
        self.t += 1;
    }

    /// Update one parameter tensor; must be called in the same visit order
    /// every step.
    pub fn update(&mut self, index: usize, param: &mut Tensor<T>, grad: &Tensor<T>) {
        while self.slots.len() <= index {
            self.slots.push(Slot {
                m: Tensor::zeros(param.shape()),
                v: Tensor::zeros(param.shape()),
            });
        }
        let slot = &mut self.slots[index];
        match self.algo {
            OptAlgo::SgdMomentum { momentum } => {
                let mu = T::from_f64(momentum);
                let lr = T::from_f64(self.lr);
                for ((p, g), m) in param
                    .data_mut()
                    .iter_mut()
                    .zip(grad.data())
                    .zip(slot.m.data_mut())
                {
                    *m = mu * *m + *g;
                    *p = *p - lr * *m;
                }
            }
            OptAlgo::Adam => {
                let b1 = T::from_f64(ADAM_BETA1);
                let b2 = T::from_f64(ADAM_BETA2);
                let one = T::ONE;
                let lr = T::from_f64(self.lr);
                let eps = T::from_f64(ADAM_EPS);
                let bc1 = T::from_f64(1.0 - ADAM_BETA1.powi(self.t as i32));
                let bc2 = T::from_f64(1.0 - ADAM_BETA2.powi(self.t as i32));
                for (((p, g), m), v) in param
                    .data_mut()
                    .iter_mut()
                    .zip(grad.data())
                    .zip(slot.m.data_mut())
                    .zip(slot.v.data_mut())
                {
                    *m = b1 * *m + (one - b1) * *g;
                    *v = b2 * *v + (one - b2) * (*g * *g);
                    let mhat = *m / bc1;
                    let vhat = *v / bc2;
                    *p = *p - lr * mhat / (vhat.sqrt_val() + eps);
                }
            }
        }
    }
}

/// One optimizer step over a parameter list: refuse on any non-finite
/// gradient (naming the parameter), then update, then verify the parameters
/// stayed finite.
pub fn optimize_step<T: Scalar>(
    named: &mut [(String, &mut Tensor<T>, &Tensor<T>)],
    opt: &mut Optimizer<T>,
) -> Result<()> {
    for (name, _, grad) in named.iter() {
        if !grad.all_finite() {
            return Err(Error::numeric(format!(
                "non-finite gradient in {name}; step refused"
            )));
        }
    }
    opt.begin_step();
    for (i, (name, param, grad)) in named.iter_mut().enumerate() {
        opt.update(i, param, grad);
        if !param.all_finite() {
            return Err(Error::numeric(format!(
                "non-finite parameter in {name} after update"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_step(algo: OptAlgo, lr: f64, p0: f64, g0: f64) -> f64 {
        let mut p: Tensor<f64> = Tensor::from_vec(&[1], vec![p0]);
        let g: Tensor<f64> = Tensor::from_vec(&[1], vec![g0]);
        let mut opt = Optimizer::new(algo, lr);
        let mut named = vec![("p".to_string(), &mut p, &g)];
        optimize_step(&mut named, &mut opt).unwrap();
        p.data()[0]
    }

    #[test]
    fn sgd_basic_update() {
        let p = run_step(OptAlgo::SgdMomentum { momentum: 0.0 }, 0.1, 1.0, 0.5);
        assert!((p - 0.95).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let p = run_step(OptAlgo::SgdMomentum { momentum: 0.0 }, 0.1, 1.0, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn adam_first_step_magnitude_is_about_lr() {
        for g in [0.5, -3.0, 1e-3] {
            let p = run_step(OptAlgo::Adam, 1e-2, 0.0, g);
            // Bias-corrected first step: lr * g / (|g| + eps) ~ lr * sign(g).
            assert!(
                (p.abs() - 1e-2).abs() < 1e-5,
                "g {g}: step {p}"
            );
            assert_eq!(p < 0.0, g > 0.0);
        }
    }

    #[test]
    fn non_finite_gradient_refuses_the_step() {
        let mut p: Tensor<f64> = Tensor::from_vec(&[1], vec![1.0]);
        let g: Tensor<f64> = Tensor::from_vec(&[1], vec![f64::NAN]);
        let mut opt = Optimizer::new(OptAlgo::Adam, 1e-3);
        let mut named = vec![("w".to_string(), &mut p, &g)];
        let err = optimize_step(&mut named, &mut opt);
        assert!(matches!(err, Err(Error::Numeric(_))));
        assert_eq!(p.data()[0], 1.0);
    }

    #[test]
    fn momentum_accumulates() {
        let mut p: Tensor<f64> = Tensor::from_vec(&[1], vec![0.0]);
        let g: Tensor<f64> = Tensor::from_vec(&[1], vec![1.0]);
        let mut opt = Optimizer::new(OptAlgo::SgdMomentum { momentum: 0.5 }, 1.0);
        for _ in 0..2 {
            let mut named = vec![("p".to_string(), &mut p, &g)];
            optimize_step(&mut named, &mut opt).unwrap();
        }
        // Step 1: v=1, p=-1. Step 2: v=1.5, p=-2.5.
        assert!((p.data()[0] + 2.5).abs() < 1e-15);
    }
}

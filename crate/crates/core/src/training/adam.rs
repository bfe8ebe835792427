use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    /// `beta = (0.0, 0.99)`, `eps = 1e-8`.
    pub fn gan(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.0,
            beta2: 0.99,
            eps: 1e-8,
        }
    }

    /// The usual `(0.9, 0.999)` moments, used for fitting and inversion.
    pub fn standard(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig::gan(1e-4)
    }
}

/// Adam with bias correction over a fixed list of parameter arrays.
#[derive(Clone, Debug)]
pub struct AdamState<T: Real = f32> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, params: &[Tensor<T>]) -> Self {
        let zeros = |p: &Tensor<T>| vec![T::zero(); p.numel()];
        AdamState {
            config,
            step: 0,
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update. `names` is only used in error messages.
    pub fn update(
        &mut self,
        params: &mut [Tensor<T>],
        grads: &[&Tensor<T>],
        names: &dyn Fn(usize) -> String,
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::arg(format!(
                "optimizer tracks {} arrays, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.numel() != self.m[i].len() || g.numel() != p.numel() {
                return Err(Error::arg(format!(
                    "{}: shape changed under the optimizer",
                    names(i)
                )));
            }
            if !g.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite gradient for {}",
                    names(i)
                )));
            }
        }
        self.step += 1;
        let c = &self.config;
        let b1 = T::from_f64_lossy(c.beta1);
        let b2 = T::from_f64_lossy(c.beta2);
        let one = T::one();
        let corr1 = T::from_f64_lossy(1.0 - c.beta1.powf(self.step as f64));
        let corr2 = T::from_f64_lossy(1.0 - c.beta2.powf(self.step as f64));
        let lr = T::from_f64_lossy(c.lr);
        let eps = T::from_f64_lossy(c.eps);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (((w, &gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = b1 * *mi + (one - b1) * gi;
                *vi = b2 * *vi + (one - b2) * gi * gi;
                let mhat = *mi / corr1;
                let vhat = *vi / corr2;
                *w = *w - lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_name(i: usize) -> String {
        format!("p{i}")
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![Tensor::new(vec![3], vec![1.0f64, -2.0, 3.0]).unwrap()];
        let before = p.clone();
        let mut opt = AdamState::new(AdamConfig::gan(0.1), &p);
        let g = Tensor::zeros(&[3]);
        for _ in 0..5 {
            opt.update(&mut p, &[&g], &no_name).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_hand_value() {
        // beta1 = 0: m̂ = g, v̂ = g², step = lr·g/(|g| + eps)
        let (lr, g, eps) = (0.1f64, 0.5f64, 1e-8f64);
        let mut p = vec![Tensor::scalar(2.0f64)];
        let mut opt = AdamState::new(AdamConfig::gan(lr), &p);
        opt.update(&mut p, &[&Tensor::scalar(g)], &no_name).unwrap();
        let expected = 2.0 - lr * g / (g + eps);
        assert!((p[0].data()[0] - expected).abs() < 1e-15);
        assert!((2.0 - p[0].data()[0] - lr).abs() < 1e-7);
    }

    #[test]
    fn minimizes_a_parabola() {
        let mut p = vec![Tensor::scalar(1.0f64)];
        let mut opt = AdamState::new(AdamConfig::gan(0.1), &p);
        for _ in 0..50 {
            let g = Tensor::scalar(2.0 * p[0].data()[0]);
            opt.update(&mut p, &[&g], &no_name).unwrap();
        }
        assert!(p[0].data()[0].abs() < 0.1, "{}", p[0].data()[0]);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut p = vec![Tensor::scalar(1.0f32), Tensor::scalar(1.0f32)];
        let mut opt = AdamState::new(AdamConfig::gan(0.1), &p);
        let ok = Tensor::scalar(1.0f32);
        let bad = Tensor::scalar(f32::NAN);
        let err = opt
            .update(&mut p, &[&ok, &bad], &|i| format!("weight{i}"))
            .unwrap_err();
        assert!(err.to_string().contains("weight1"), "{err}");
    }
}

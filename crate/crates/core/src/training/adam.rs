use serde::{Deserialize, Serialize};

use crate::autograd::Array;
use crate::model::ParameterStore;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moments per parameter, plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Array>,
    pub v: Vec<Array>,
    pub step: u64,
    frozen: Vec<bool>,
}

impl AdamState {
    pub fn new(params: &[Array]) -> Self {
        Self {
            m: params.iter().map(|p| Array::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Array::zeros(p.shape())).collect(),
            step: 0,
            frozen: vec![false; params.len()],
        }
    }

    /// Zero moments for every parameter of `store`; frozen ones are skipped
    /// by [`adam_step`].
    pub fn for_store(store: &ParameterStore) -> Self {
        let mut s = Self::new(store.values());
        s.frozen = (0..store.len()).map(|i| store.is_frozen(i)).collect();
        s
    }
}

/// One bias-corrected Adam update of every non-frozen parameter.
pub fn adam_step(params: &mut [Array], grads: &[Array], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::MissingGradient(format!(
            "{} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(i) = (0..params.len()).find(|&i| grads[i].shape() != params[i].shape()) {
        return Err(Error::MissingGradient(format!(
            "gradient {i} has shape {:?}, parameter has {:?}",
            grads[i].shape(),
            params[i].shape()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        if state.frozen[i] {
            continue;
        }
        let g = grads[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let p = params[i].data_mut();
        for k in 0..p.len() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        for g in [3.7, -0.002, 150.0] {
            let mut p = vec![Array::vector(vec![1.0])];
            let mut s = AdamState::new(&p);
            adam_step(&mut p, &[Array::vector(vec![g])], &mut s, &cfg).unwrap();
            let delta = p[0].item() - 1.0;
            assert!((delta.abs() - cfg.learning_rate).abs() < 1e-6);
            assert_eq!(delta.signum(), -g.signum());
            assert_eq!(s.step, 1);
        }
    }

    #[test]
    fn zero_gradient_only_decays_moments() {
        let cfg = AdamConfig::default();
        let mut p = vec![Array::vector(vec![0.5, -0.5])];
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &[Array::vector(vec![1.0, 1.0])], &mut s, &cfg).unwrap();
        let before = p.clone();
        let m_before = s.m[0].data().to_vec();
        adam_step(&mut p, &[Array::vector(vec![0.0, 0.0])], &mut s, &cfg).unwrap();
        assert_eq!(s.m[0].data()[0], 0.9 * m_before[0]);
        let mut q = vec![Array::vector(vec![2.0])];
        let mut fresh = AdamState::new(&q);
        adam_step(&mut q, &[Array::vector(vec![0.0])], &mut fresh, &cfg).unwrap();
        assert_eq!(q[0].item(), 2.0);
        assert_ne!(p, before);
    }

    #[test]
    fn missing_gradient_is_an_error() {
        let mut p = vec![Array::vector(vec![1.0]), Array::vector(vec![2.0])];
        let mut s = AdamState::new(&p);
        let r = adam_step(&mut p, &[Array::vector(vec![1.0])], &mut s, &AdamConfig::default());
        assert!(matches!(r, Err(Error::MissingGradient(_))));
        let r = adam_step(&mut p, &[Array::vector(vec![1.0]), Array::vector(vec![1.0, 2.0])], &mut s, &AdamConfig::default());
        assert!(matches!(r, Err(Error::MissingGradient(_))));
    }

    proptest! {
        #[test]
        fn one_step_decreases_a_convex_quadratic(
            curvature in 0.5f64..20.0,
            x0 in prop::sample::select(vec![-3.0, -1.0, -0.2, 0.2, 1.0, 3.0]),
        ) {
            // f(x) = a x^2 / 2; a first Adam step of size lr < |x0| reduces f.
            let cfg = AdamConfig { learning_rate: 0.05, ..AdamConfig::default() };
            let mut p = vec![Array::vector(vec![x0])];
            let mut s = AdamState::new(&p);
            adam_step(&mut p, &[Array::vector(vec![curvature * x0])], &mut s, &cfg).unwrap();
            let x1 = p[0].item();
            prop_assert!(curvature * x1 * x1 / 2.0 < curvature * x0 * x0 / 2.0);
        }
    }
}

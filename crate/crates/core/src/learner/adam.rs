//! Adam optimiser over a flat parameter vector.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> Adam<T> {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-5,
            step: 0,
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
        }
    }

    /// Descends along `grad`.
    pub fn apply(&mut self, params: &mut [T], grad: &[T]) {
        self.step += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = T::one() - T::of(self.beta1.powi(self.step as i32));
        let c2 = T::one() - T::of(self.beta2.powi(self.step as i32));
        let lr = T::of(self.learning_rate);
        let eps = T::of(self.epsilon);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut opt = Adam::<f64>::new(2, 0.1);
        let mut p = vec![1.0, -1.0];
        opt.apply(&mut p, &[3.0, -0.5]);
        assert!((p[0] - (1.0 - 0.1 * 3.0 / (3.0 + 1e-5))).abs() < 1e-12);
        assert!((p[1] - (-1.0 + 0.1 * 0.5 / (0.5 + 1e-5))).abs() < 1e-12);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut opt = Adam::<f64>::new(1, 0.05);
        let mut p = vec![4.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.5)];
            opt.apply(&mut p, &g);
        }
        assert!((p[0] - 1.5).abs() < 1e-3);
    }
}

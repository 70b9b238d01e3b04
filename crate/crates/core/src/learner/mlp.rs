//! Actor-critic multilayer perceptron with a shared tanh trunk.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::LearnerError;
use crate::scalar::Real;

/// Layer widths of the network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub actions: usize,
}

impl MlpShape {
    pub fn new(input: usize, hidden: Vec<usize>, actions: usize) -> Self {
        Self {
            input,
            hidden,
            actions,
        }
    }

    fn trunk_out(&self) -> usize {
        self.hidden.last().copied().unwrap_or(self.input)
    }

    /// `(rows, cols)` of every weight matrix: trunk layers, policy head, value head.
    fn layers(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        let mut prev = self.input;
        for &h in &self.hidden {
            dims.push((h, prev));
            prev = h;
        }
        dims.push((self.actions, prev));
        dims.push((1, prev));
        dims
    }

    pub fn n_params(&self) -> usize {
        self.layers().iter().map(|(r, c)| r * c + r).sum()
    }
}

/// Categorical distribution over the discrete actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution<T> {
    pub log_probs: Vec<T>,
}

impl<T: Real> ActionDistribution<T> {
    pub fn from_logits(logits: &[T]) -> Self {
        let max = logits.iter().copied().fold(-T::infinity(), |a, b| a.max(b));
        let lse = max
            + logits
                .iter()
                .map(|l| (*l - max).exp())
                .fold(T::zero(), |a, b| a + b)
                .ln();
        Self {
            log_probs: logits.iter().map(|l| *l - lse).collect(),
        }
    }

    pub fn probs(&self) -> Vec<T> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn log_prob(&self, action: usize) -> T {
        self.log_probs[action]
    }

    pub fn entropy(&self) -> T {
        -self
            .log_probs
            .iter()
            .map(|l| l.exp() * *l)
            .fold(T::zero(), |a, b| a + b)
    }

    /// Most probable action; ties go to the lowest index.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (k, l) in self.log_probs.iter().enumerate() {
            if *l > self.log_probs[best] {
                best = k;
            }
        }
        best
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, l) in self.log_probs.iter().enumerate() {
            acc += l.as_f64().exp();
            if u < acc {
                return k;
            }
        }
        self.log_probs.len() - 1
    }
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    /// Input followed by each hidden activation.
    activations: Vec<Vec<T>>,
    pub logits: Vec<T>,
    pub value: T,
}

impl<T: Real> ForwardPass<T> {
    pub fn distribution(&self) -> ActionDistribution<T> {
        ActionDistribution::from_logits(&self.logits)
    }
}

/// Parameters stored as one flat vector: for each layer the row-major weight
/// matrix followed by its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic<T> {
    pub shape: MlpShape,
    pub params: Vec<T>,
}

fn affine<T: Real>(w: &[T], b: &[T], x: &[T], out: &mut Vec<T>) {
    let cols = x.len();
    out.clear();
    for (r, bias) in b.iter().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        let mut s = *bias;
        for (wi, xi) in row.iter().zip(x) {
            s += *wi * *xi;
        }
        out.push(s);
    }
}

impl<T: Real> ActorCritic<T> {
    pub fn zeros(shape: MlpShape) -> Self {
        let n = shape.n_params();
        Self {
            shape,
            params: vec![T::zero(); n],
        }
    }

    /// Orthogonal weights (gain √2 in the trunk, 0.01 on the policy head, 1 on the value head) and zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(shape: MlpShape, rng: &mut R) -> Self {
        let mut net = Self::zeros(shape);
        let layers = net.shape.layers();
        let n_trunk = net.shape.hidden.len();
        let mut offset = 0;
        for (k, (rows, cols)) in layers.into_iter().enumerate() {
            let gain = if k < n_trunk {
                std::f64::consts::SQRT_2
            } else if k == n_trunk {
                0.01
            } else {
                1.0
            };
            let q = orthogonal_matrix(rows, cols, rng);
            for r in 0..rows {
                for c in 0..cols {
                    net.params[offset + r * cols + c] = T::of(gain * q[(r, c)]);
                }
            }
            offset += rows * cols + rows;
        }
        net
    }

    pub fn from_params(shape: MlpShape, params: Vec<T>) -> Result<Self, LearnerError> {
        if params.len() != shape.n_params() {
            return Err(LearnerError::Shape(format!(
                "{} parameters given, network needs {}",
                params.len(),
                shape.n_params()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(LearnerError::NonFinite("parameters"));
        }
        Ok(Self { shape, params })
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn forward(&self, obs: &[T]) -> Result<ForwardPass<T>, LearnerError> {
        if obs.len() != self.shape.input {
            return Err(LearnerError::Shape(format!(
                "observation has {} entries, network expects {}",
                obs.len(),
                self.shape.input
            )));
        }
        let layers = self.shape.layers();
        let n_trunk = self.shape.hidden.len();
        let mut activations = Vec::with_capacity(n_trunk + 1);
        activations.push(obs.to_vec());
        let mut offset = 0;
        let mut buf = Vec::new();
        for &(rows, cols) in &layers[..n_trunk] {
            let (w, rest) = self.params[offset..].split_at(rows * cols);
            affine(w, &rest[..rows], activations.last().unwrap(), &mut buf);
            activations.push(buf.iter().map(|z| z.tanh()).collect());
            offset += rows * cols + rows;
        }
        let h = activations.last().unwrap();
        let (rows, cols) = layers[n_trunk];
        let (w, rest) = self.params[offset..].split_at(rows * cols);
        let mut logits = Vec::new();
        affine(w, &rest[..rows], h, &mut logits);
        offset += rows * cols + rows;
        let (w, rest) = self.params[offset..].split_at(cols);
        let mut value = Vec::new();
        affine(w, &rest[..1], h, &mut value);
        let value = value[0];
        if logits.iter().any(|l| !l.is_finite()) || !value.is_finite() {
            return Err(LearnerError::NonFinite("network output"));
        }
        Ok(ForwardPass {
            activations,
            logits,
            value,
        })
    }

    pub fn policy(&self, obs: &[T]) -> Result<(ActionDistribution<T>, T), LearnerError> {
        let f = self.forward(obs)?;
        Ok((f.distribution(), f.value))
    }

    /// Adds the gradient of a loss with output sensitivities `d_logits`, `d_value` to `grad`.
    pub fn backward(&self, pass: &ForwardPass<T>, d_logits: &[T], d_value: T, grad: &mut [T]) {
        let layers = self.shape.layers();
        let n_trunk = self.shape.hidden.len();
        let mut offsets = Vec::with_capacity(layers.len());
        let mut o = 0;
        for (r, c) in &layers {
            offsets.push(o);
            o += r * c + r;
        }
        let h = &pass.activations[n_trunk];
        let width = self.shape.trunk_out();
        let mut dh = vec![T::zero(); width];

        let mut head = |k: usize, d_out: &[T], dh: &mut [T]| {
            let (rows, cols) = layers[k];
            let off = offsets[k];
            for r in 0..rows {
                let g = d_out[r];
                for c in 0..cols {
                    grad[off + r * cols + c] += g * h[c];
                    dh[c] += g * self.params[off + r * cols + c];
                }
                grad[off + rows * cols + r] += g;
            }
        };
        head(n_trunk, d_logits, &mut dh);
        head(n_trunk + 1, &[d_value], &mut dh);

        for k in (0..n_trunk).rev() {
            let (rows, cols) = layers[k];
            let off = offsets[k];
            let out = &pass.activations[k + 1];
            let input = &pass.activations[k];
            let mut d_in = vec![T::zero(); cols];
            for r in 0..rows {
                let dz = dh[r] * (T::one() - out[r] * out[r]);
                for c in 0..cols {
                    grad[off + r * cols + c] += dz * input[c];
                    d_in[c] += dz * self.params[off + r * cols + c];
                }
                grad[off + rows * cols + r] += dz;
            }
            dh = d_in;
        }
    }
}

/// `rows × cols` matrix with orthonormal rows or columns, whichever are fewer.
fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let (big, small) = (rows.max(cols), rows.min(cols));
    let a = DMatrix::<f64>::from_fn(big, small, |_, _| StandardNormal.sample(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..small {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if rows >= cols {
        q
    } else {
        q.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn standard() -> MlpShape {
        MlpShape::new(26, vec![64, 64], 2)
    }

    #[test]
    fn parameter_count() {
        assert_eq!(
            standard().n_params(),
            26 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2 + 64 + 1
        );
    }

    #[test]
    fn zero_weights_give_uniform_policy() {
        let net = ActorCritic::<f64>::zeros(standard());
        let (dist, v) = net.policy(&[0.3; 26]).unwrap();
        assert_eq!(dist.probs(), vec![0.5, 0.5]);
        assert_eq!(v, 0.0);
        assert!((dist.entropy() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = orthogonal_matrix(64, 26, &mut rng);
        let g = q.transpose() * &q;
        assert!((g - DMatrix::identity(26, 26)).amax() < 1e-12);
        let q = orthogonal_matrix(2, 64, &mut rng);
        let g = &q * q.transpose();
        assert!((g - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut net = ActorCritic::<f64>::orthogonal(standard(), &mut rng);
            for p in net.params.iter_mut() {
                *p *= 5.0;
            }
            let obs: Vec<f64> = (0..26).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (dist, _) = net.policy(&obs).unwrap();
            assert!((dist.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let h = dist.entropy();
            assert!((0.0..=2f64.ln() + 1e-15).contains(&h));
        }
    }

    #[test]
    fn wrong_input_length_is_a_shape_error() {
        let net = ActorCritic::<f64>::zeros(standard());
        assert!(matches!(
            net.forward(&[0.0; 3]),
            Err(LearnerError::Shape(_))
        ));
    }

    #[test]
    fn mode_prefers_no_action_on_ties() {
        let d = ActionDistribution::from_logits(&[0.0f64, 0.0]);
        assert_eq!(d.mode(), 0);
        let d = ActionDistribution::from_logits(&[0.0f64, 0.1]);
        assert_eq!(d.mode(), 1);
    }
}

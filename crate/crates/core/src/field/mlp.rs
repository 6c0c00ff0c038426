use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::real::{sigmoid, softplus, Real};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softplus,
    Sigmoid,
    None,
}

impl Activation {
    #[inline]
    pub fn apply<S: Real>(self, z: S) -> S {
        match self {
            Activation::Relu => {
                if z > S::zero() {
                    z
                } else {
                    S::zero()
                }
            }
            Activation::Softplus => softplus(z),
            Activation::Sigmoid => sigmoid(z),
            Activation::None => z,
        }
    }

    /// Derivative at pre-activation `z` (relu uses 0 at the kink).
    #[inline]
    pub fn derivative<S: Real>(self, z: S) -> S {
        match self {
            Activation::Relu => {
                if z > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Softplus => sigmoid(z),
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (S::one() - s)
            }
            Activation::None => S::one(),
        }
    }
}

/// Affine layer `act(W x + b)` with `W` stored row-major as `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        if self.bias.is_empty() {
            0
        } else {
            self.weights.len() / self.bias.len()
        }
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    fn pre_activation<S: Real>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        self.weights
            .chunks_exact(n)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).fold(S::lit(b), |acc, (&w, &xi)| acc + S::lit(w) * xi))
            .collect()
    }
}

/// Fully connected network evaluated layer by layer.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpWeights {
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct ManifestLayer {
    weight: PathBuf,
    bias: PathBuf,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    layers: Vec<ManifestLayer>,
}

impl MlpWeights {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network layers"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.is_empty() || l.weights.len() % l.bias.len() != 0 || l.weights.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "layer {i}: {} weights do not form a matrix with {} rows",
                    l.weights.len(),
                    l.bias.len()
                )));
            }
            if i > 0 && layers[i - 1].out_dim() != l.in_dim() {
                return Err(Error::dim(format!("layer {i} input"), layers[i - 1].out_dim(), l.in_dim()));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("layer {i}: non-finite weights")));
            }
        }
        Ok(Self { layers })
    }

    /// One linear layer with the identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            weights[i * n + i] = 1.0;
        }
        Self { layers: vec![Layer { weights, bias: vec![0.0; n], activation: Activation::None }] }
    }

    /// Zero weights everywhere; the last bias is `bias`, so the output is
    /// constant (for relu/softplus hidden layers the hidden state is
    /// constant too).
    pub fn constant(dims: &[usize], activations: &[Activation], bias: &[f64]) -> Result<Self> {
        let mut net = Self::random(dims, activations, 0.0, 0)?;
        let last = net.layers.last_mut().unwrap();
        if bias.len() != last.bias.len() {
            return Err(Error::dim("output bias", last.bias.len(), bias.len()));
        }
        last.bias.copy_from_slice(bias);
        Ok(net)
    }

    /// Layer sizes `dims[0] → dims[1] → …`, weights uniform in
    /// `±gain·sqrt(6 / (in + out))`, biases uniform in `±0.1·gain`.
    pub fn random(dims: &[usize], activations: &[Activation], gain: f64, seed: u64) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::InvalidArgument(format!(
                "{} layer sizes need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |r: f64| if r > 0.0 { rng.gen_range(-r..r) } else { 0.0 };
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let r = gain * (6.0 / (w[0] + w[1]) as f64).sqrt();
                Layer {
                    weights: (0..w[0] * w[1]).map(|_| uniform(r)).collect(),
                    bias: (0..w[1]).map(|_| uniform(0.1 * gain)).collect(),
                    activation,
                }
            })
            .collect();
        Self::new(layers)
    }

    /// Loads a JSON manifest `{"layers": [{"weight", "bias", "activation"}]}`
    /// whose paths (relative to the manifest) point at tensor files of dims
    /// `[out, in]` and `[out]`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let manifest: Manifest = serde_json::from_str(&fsutil::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let layers = manifest
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let w = Tensor::load(dir.join(&l.weight))?;
                let b = Tensor::load(dir.join(&l.bias))?;
                match (w.dims(), b.dims()) {
                    ([o, _], [o2]) if o == o2 => {}
                    (wd, bd) => {
                        return Err(Error::Tensor(format!("layer {i}: weight {wd:?} and bias {bd:?} disagree")));
                    }
                }
                Ok(Layer { weights: w.to_f64(), bias: b.to_f64(), activation: l.activation })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    /// Writes `<stem>.json` plus one weight and bias tensor per layer next
    /// to it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let dir = path.parent().unwrap_or(Path::new("."));
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mlp");
        let mut layers = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            let weight = PathBuf::from(format!("{stem}_l{i}_w.trit"));
            let bias = PathBuf::from(format!("{stem}_l{i}_b.trit"));
            Tensor::from_f64(vec![l.out_dim(), l.in_dim()], &l.weights)?.save(dir.join(&weight))?;
            Tensor::from_f64(vec![l.out_dim()], &l.bias)?.save(dir.join(&bias))?;
            layers.push(ManifestLayer { weight, bias, activation: l.activation });
        }
        fsutil::write_atomic(path, serde_json::to_string_pretty(&Manifest { layers })?.as_bytes())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn forward<S: Real>(&self, input: &[S]) -> Result<Vec<S>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        for l in &self.layers {
            x = l.pre_activation(&x).into_iter().map(|z| l.activation.apply(z)).collect();
        }
        Ok(x)
    }

    /// Output and vector-Jacobian product `(∂out/∂input)ᵀ g`.
    pub fn vjp<S: Real>(&self, input: &[S], g: &[S]) -> Result<(Vec<S>, Vec<S>)> {
        self.check_input(input)?;
        if g.len() != self.out_dim() {
            return Err(Error::dim("output gradient", self.out_dim(), g.len()));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for l in &self.layers {
            let z = l.pre_activation(&x);
            x = z.iter().map(|&z| l.activation.apply(z)).collect();
            pre.push(z);
        }
        let mut grad = g.to_vec();
        for (l, z) in self.layers.iter().zip(&pre).rev() {
            let n = l.in_dim();
            let delta: Vec<S> = grad.iter().zip(z).map(|(&g, &z)| g * l.activation.derivative(z)).collect();
            let mut next = vec![S::zero(); n];
            for (row, &d) in l.weights.chunks_exact(n).zip(&delta) {
                for (o, &w) in next.iter_mut().zip(row) {
                    *o += S::lit(w) * d;
                }
            }
            grad = next;
        }
        Ok((x, grad))
    }

    fn check_input<S>(&self, input: &[S]) -> Result<()> {
        if input.len() != self.in_dim() {
            return Err(Error::dim("network input", self.in_dim(), input.len()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::Dual;

    #[test]
    fn zero_weights_give_the_bias() {
        let net = MlpWeights::constant(&[4, 8, 2], &[Activation::Relu, Activation::None], &[0.5, -1.0]).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.5, -1.0]);
    }

    #[test]
    fn identity_layer() {
        let x = [0.3, -7.0, 2.5];
        assert_eq!(MlpWeights::identity(3).forward(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn two_layer_relu_by_hand() {
        let net = MlpWeights::new(vec![
            Layer { weights: vec![1.0, -1.0, 2.0, 0.5], bias: vec![0.0, -1.0], activation: Activation::Relu },
            Layer { weights: vec![3.0, -2.0], bias: vec![0.25], activation: Activation::None },
        ])
        .unwrap();
        // h = relu([1 − 2, 2 + 1 − 1]) = [0, 2]; out = 3·0 − 2·2 + 0.25.
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![-3.75]);
    }

    #[test]
    fn dimension_mismatch() {
        let net = MlpWeights::identity(3);
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        let bad = MlpWeights::new(vec![
            Layer { weights: vec![1.0; 6], bias: vec![0.0; 2], activation: Activation::Relu },
            Layer { weights: vec![1.0; 3], bias: vec![0.0], activation: Activation::None },
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn vjp_matches_forward_mode() {
        let acts = [Activation::Softplus, Activation::Sigmoid, Activation::Relu, Activation::None];
        let net = MlpWeights::random(&[5, 7, 6, 4, 3], &acts, 1.0, 9).unwrap();
        let x = [0.2, -0.4, 0.9, 0.1, -0.3];
        let g = [1.0, -0.5, 0.25];
        let (_, vjp) = net.vjp(&x, &g).unwrap();
        for i in 0..5 {
            let xd: Vec<Dual<f64>> =
                x.iter().enumerate().map(|(k, &v)| Dual::new(v, if k == i { 1.0 } else { 0.0 })).collect();
            let out = net.forward(&xd).unwrap();
            let jvp: f64 = out.iter().zip(&g).map(|(o, g)| o.eps * g).sum();
            assert!((jvp - vjp[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let net = MlpWeights::random(&[3, 4, 2], &[Activation::Relu, Activation::Sigmoid], 1.0, 1).unwrap();
        let path = dir.path().join("geo.json");
        net.save(&path).unwrap();
        let back = MlpWeights::load(&path).unwrap();
        // Stored as f32.
        for (a, b) in net.layers().iter().zip(back.layers()) {
            assert_eq!(a.activation, b.activation);
            for (x, y) in a.weights.iter().zip(&b.weights) {
                assert_eq!(*x as f32 as f64, *y);
            }
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let net = MlpWeights::random(&[6, 16, 16, 1], &[Activation::Softplus, Activation::Softplus, Activation::None], 1.0, 2).unwrap();
        let x = [0.1f64, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(net.forward(&x).unwrap()[0].to_bits(), net.forward(&x).unwrap()[0].to_bits());
    }
}

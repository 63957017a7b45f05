use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            output_dim,
            activation,
        }
    }

    /// Dense stack `dims[0] → dims[1] → … → dims[n]` with ReLU hidden layers
    /// and an identity output layer.
    pub fn stack(dims: &[usize]) -> Vec<LayerSpec> {
        let n = dims.len().saturating_sub(1);
        (0..n)
            .map(|i| {
                let act = if i + 1 == n {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                LayerSpec::new(dims[i], dims[i + 1], act)
            })
            .collect()
    }
}

/// One dense layer: `act(X · weights + bias)`, weights `input_dim × output_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// All trainable weights of a layered network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub layers: Vec<Layer>,
    pub seed: u64,
}

/// Per-layer gradient, shaped like the layer it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGrad>,
    pub loss: f64,
}

/// Intermediate values of a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input to each layer (`inputs[0]` is the batch).
    pub inputs: Vec<Matrix>,
    /// Pre-activation of each layer.
    pub pre: Vec<Matrix>,
    /// Output of the last layer (post-activation).
    pub output: Matrix,
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Config("network needs at least one layer".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.input_dim == 0 || s.output_dim == 0 {
            return Err(Error::Config(format!("layer {i} has a zero dimension")));
        }
    }
    for (i, w) in specs.windows(2).enumerate() {
        if w[0].output_dim != w[1].input_dim {
            return Err(Error::Config(format!(
                "layer {i} outputs {} but layer {} expects {}",
                w[0].output_dim,
                i + 1,
                w[1].input_dim
            )));
        }
    }
    Ok(())
}

/// Scaled-uniform initialisation: weights ~ U(−b, b) with
/// `b = sqrt(6 / (fan_in + fan_out))`, biases zero.
pub fn init_params(specs: &[LayerSpec], seed: u64) -> Result<ParameterSet> {
    validate_specs(specs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = specs
        .iter()
        .map(|s| {
            let bound = (6.0 / (s.input_dim + s.output_dim) as f64).sqrt();
            let data = (0..s.input_dim * s.output_dim)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            Layer {
                weights: Matrix::from_vec(s.input_dim, s.output_dim, data)
                    .expect("length matches by construction"),
                bias: vec![0.0; s.output_dim],
                activation: s.activation,
            }
        })
        .collect();
    Ok(ParameterSet { layers, seed })
}

impl ParameterSet {
    /// All-zero parameters for the given architecture.
    pub fn zeros(specs: &[LayerSpec]) -> Result<Self> {
        validate_specs(specs)?;
        Ok(Self {
            layers: specs
                .iter()
                .map(|s| Layer {
                    weights: Matrix::zeros(s.input_dim, s.output_dim),
                    bias: vec![0.0; s.output_dim],
                    activation: s.activation,
                })
                .collect(),
            seed: 0,
        })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .map(|l| LayerSpec::new(l.weights.rows(), l.weights.cols(), l.activation))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.cols()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.data().len() + l.bias.len())
            .sum()
    }

    /// Zeroes the last layer's weights and bias.
    pub fn zero_output_layer(&mut self) {
        let last = self.layers.last_mut().expect("non-empty by construction");
        last.weights.data_mut().fill(0.0);
        last.bias.fill(0.0);
    }

    /// Flat view of every parameter, layer by layer (weights then bias).
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Mutable reference to the `index`-th parameter in [`flat`](Self::flat) order.
    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            let nw = l.weights.data().len();
            if index < nw {
                return &mut l.weights.data_mut()[index];
            }
            index -= nw;
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    fn check_batch(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Input(format!(
                "batch has {} columns, network expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass keeping every intermediate.
    pub fn forward_trace(&self, batch: &Matrix) -> Result<ForwardTrace> {
        self.check_batch(batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut current = batch.clone();
        for layer in &self.layers {
            let mut z = current.matmul(&layer.weights)?;
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let mut a = z.clone();
            for v in a.data_mut() {
                *v = layer.activation.apply(*v);
            }
            inputs.push(current);
            pre.push(z);
            current = a;
        }
        Ok(ForwardTrace {
            inputs,
            pre,
            output: current,
        })
    }

    /// Raw output of the last layer.
    pub fn logits(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_batch(batch)?;
        let mut current = batch.clone();
        for layer in &self.layers {
            let mut z = current.matmul(&layer.weights)?;
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v = layer.activation.apply(*v + b);
                }
            }
            current = z;
        }
        Ok(current)
    }

    /// Class probabilities: row-wise softmax of [`logits`](Self::logits).
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(softmax_rows(&self.logits(batch)?))
    }

    /// Backpropagates `d_output` (gradient of a scalar objective with respect
    /// to the last layer's output) through the network.
    pub fn backward(&self, trace: &ForwardTrace, d_output: &Matrix) -> Result<Vec<LayerGrad>> {
        if d_output.shape() != trace.output.shape() {
            return Err(Error::Input(format!(
                "output gradient shape {:?} does not match output {:?}",
                d_output.shape(),
                trace.output.shape()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d_act = d_output.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let pre = &trace.pre[l];
            let mut dz = d_act;
            if layer.activation != Activation::Identity {
                for (g, &z) in dz.data_mut().iter_mut().zip(pre.data()) {
                    *g *= layer.activation.derivative(z);
                }
            }
            let dw = trace.inputs[l].t_matmul(&dz)?;
            let mut db = vec![0.0; dz.cols()];
            for r in 0..dz.rows() {
                for (b, g) in db.iter_mut().zip(dz.row(r)) {
                    *b += g;
                }
            }
            d_act = if l > 0 {
                dz.matmul_t(&layer.weights)?
            } else {
                Matrix::zeros(0, 0)
            };
            grads.push(LayerGrad {
                weights: dw,
                bias: db,
            });
        }
        grads.reverse();
        Ok(grads)
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Row-wise log-softmax via log-sum-exp.
pub fn log_softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        for v in row.iter_mut() {
            *v -= lse;
        }
    }
    out
}

/// One-hot matrix for integer labels.
pub fn one_hot(labels: &[usize], num_classes: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(labels.len(), num_classes);
    for (i, &y) in labels.iter().enumerate() {
        if y >= num_classes {
            return Err(Error::Input(format!(
                "label {y} out of range for {num_classes} classes"
            )));
        }
        m.set(i, y, 1.0);
    }
    Ok(m)
}

fn check_targets(targets: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if targets.shape() != (rows, cols) {
        return Err(Error::Input(format!(
            "targets shape {:?} does not match ({rows}, {cols})",
            targets.shape()
        )));
    }
    for r in 0..rows {
        let row = targets.row(r);
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != cols {
            return Err(Error::Input(format!("target row {r} is not one-hot")));
        }
    }
    Ok(())
}

/// Mean categorical cross-entropy of one-hot `targets` under softmax(`logits`).
pub fn cross_entropy(logits: &Matrix, targets: &Matrix) -> Result<f64> {
    check_targets(targets, logits.rows(), logits.cols())?;
    if logits.rows() == 0 {
        return Err(Error::Input("empty batch".into()));
    }
    let logp = log_softmax_rows(logits);
    let total: f64 = logp
        .data()
        .iter()
        .zip(targets.data())
        .filter(|(_, &t)| t != 0.0)
        .map(|(lp, t)| -t * lp)
        .sum();
    Ok(total / logits.rows() as f64)
}

/// Cross-entropy loss and its exact gradient with respect to every parameter.
pub fn loss_and_grad(
    params: &ParameterSet,
    batch: &Matrix,
    targets: &Matrix,
) -> Result<GradientBundle> {
    if batch.rows() == 0 {
        return Err(Error::Input("empty batch".into()));
    }
    check_targets(targets, batch.rows(), params.output_dim())?;
    let trace = params.forward_trace(batch)?;
    let loss = cross_entropy(&trace.output, targets)?;
    let n = batch.rows() as f64;
    let mut d_out = softmax_rows(&trace.output);
    for (g, t) in d_out.data_mut().iter_mut().zip(targets.data()) {
        *g = (*g - t) / n;
    }
    let layers = params.backward(&trace, &d_out)?;
    Ok(GradientBundle { layers, loss })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes_and_zero_bias() {
        let specs = LayerSpec::stack(&[4, 3, 2]);
        let p = init_params(&specs, 42).unwrap();
        assert_eq!(p.layers[0].weights.shape(), (4, 3));
        assert_eq!(p.layers[1].weights.shape(), (3, 2));
        assert_eq!(p.layers[0].bias, vec![0.0; 3]);
        assert_eq!(p.layers[1].bias, vec![0.0; 2]);
        assert_eq!(p.layers[0].activation, Activation::Relu);
        assert_eq!(p.layers[1].activation, Activation::Identity);
    }

    #[test]
    fn init_is_deterministic() {
        let specs = LayerSpec::stack(&[5, 7, 3]);
        let a = init_params(&specs, 42).unwrap();
        let b = init_params(&specs, 42).unwrap();
        let bits = |p: &ParameterSet| p.flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&init_params(&specs, 43).unwrap()));
    }

    #[test]
    fn init_statistics() {
        // 64x64 = 4096 weights per layer; three layers give > 10^4 samples.
        let specs = vec![LayerSpec::new(64, 64, Activation::Relu); 3];
        let p = init_params(&specs, 7).unwrap();
        let w: Vec<f64> = p
            .layers
            .iter()
            .flat_map(|l| l.weights.data().iter().copied())
            .collect();
        assert!(w.len() >= 10_000);
        let bound = (6.0f64 / 128.0).sqrt();
        assert!(w.iter().all(|v| v.abs() <= bound));
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let specs = vec![
            LayerSpec::new(4, 3, Activation::Relu),
            LayerSpec::new(2, 2, Activation::Identity),
        ];
        assert!(matches!(init_params(&specs, 0), Err(Error::Config(_))));
        assert!(matches!(init_params(&[], 0), Err(Error::Config(_))));
    }

    #[test]
    fn zero_network_is_uniform() {
        let p = ParameterSet::zeros(&LayerSpec::stack(&[5, 4, 8])).unwrap();
        let batch = Matrix::from_vec(2, 5, (0..10).map(|v| v as f64).collect()).unwrap();
        let probs = p.forward(&batch).unwrap();
        assert!(probs.data().iter().all(|&v| v == 0.125));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = init_params(&LayerSpec::stack(&[3, 2]), 1).unwrap();
        assert!(matches!(p.forward(&Matrix::zeros(1, 4)), Err(Error::Input(_))));
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let logits = Matrix::from_vec(2, 3, vec![500.0, -500.0, 0.0, -500.0, -500.0, -499.0])
            .unwrap();
        let p = softmax_rows(&logits);
        assert!(p.is_finite());
        for r in 0..2 {
            let s: f64 = p.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        let lp = log_softmax_rows(&logits);
        assert!(lp.is_finite());
    }

    #[test]
    fn loss_identities() {
        let targets = one_hot(&[0, 3, 7], 8).unwrap();
        let uniform = Matrix::zeros(3, 8);
        let l = cross_entropy(&uniform, &targets).unwrap();
        assert!((l - 8f64.ln()).abs() < 1e-12);

        let mut confident = Matrix::zeros(3, 8);
        for (r, &c) in [0usize, 3, 7].iter().enumerate() {
            confident.set(r, c, 500.0);
        }
        assert!(cross_entropy(&confident, &targets).unwrap() < 1e-10);
    }

    #[test]
    fn non_one_hot_targets_rejected() {
        let p = init_params(&LayerSpec::stack(&[2, 3]), 3).unwrap();
        let batch = Matrix::zeros(1, 2);
        let bad = Matrix::from_vec(1, 3, vec![0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(loss_and_grad(&p, &batch, &bad), Err(Error::Input(_))));
        let two = Matrix::from_vec(1, 3, vec![1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(loss_and_grad(&p, &batch, &two), Err(Error::Input(_))));
    }
}

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::losses::HeadOutput;
use crate::rng::RngStream;

/// One affine layer; `weight` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// Fully-connected network with ReLU hidden layers and a linear head whose
/// last output is the outlier logit.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    /// Weights and biases drawn from `U(−1/√fan_in, 1/√fan_in)`.
    pub fn init(input: usize, hidden: &[usize], classes: usize, rng: &mut RngStream) -> Result<Self> {
        let sizes = Self::layer_sizes(input, hidden, classes)?;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let mut draw = || (2.0 * rng.next_f64() - 1.0) * bound;
                let weight = Array2::from_shape_simple_fn((w[1], w[0]), &mut draw);
                let bias = Array1::from_shape_simple_fn(w[1], &mut draw);
                Layer { weight, bias }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(input: usize, hidden: &[usize], classes: usize) -> Result<Self> {
        let sizes = Self::layer_sizes(input, hidden, classes)?;
        let layers = sizes
            .windows(2)
            .map(|w| Layer { weight: Array2::zeros((w[1], w[0])), bias: Array1::zeros(w[1]) })
            .collect();
        Ok(Self { layers })
    }

    fn layer_sizes(input: usize, hidden: &[usize], classes: usize) -> Result<Vec<usize>> {
        if input == 0 || classes == 0 || hidden.contains(&0) {
            return Err(Error::InvalidInput("layer sizes must be >= 1".into()));
        }
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(classes + 1);
        Ok(sizes)
    }

    /// `[input, hidden…, c + 1]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut v = vec![self.layers[0].inputs()];
        v.extend(self.layers.iter().map(Layer::outputs));
        v
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    /// Number of inlier classes `c`.
    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs() - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        for (k, pair) in self.layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::Shape(format!(
                    "layer {k} outputs {} but layer {} takes {}",
                    pair[0].outputs(),
                    k + 1,
                    pair[1].inputs()
                )));
            }
        }
        for (k, l) in self.layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::Shape(format!("layer {k} bias length {} != {}", l.bias.len(), l.outputs())));
            }
            if !l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()) {
                return Err(Error::InvalidInput(format!("layer {k} has non-finite parameters")));
            }
        }
        if self.classes() == 0 {
            return Err(Error::Shape("output layer needs at least two units".into()));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }
}

/// Activations kept for the backward pass: the input and each hidden
/// post-ReLU output, followed by the raw logits.
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn logits(&self) -> &Array2<f64> {
        self.activations.last().expect("non-empty cache")
    }
}

fn affine(x: ArrayView2<f64>, layer: &Layer) -> Array2<f64> {
    x.dot(&layer.weight.t()) + &layer.bias
}

pub fn forward_cached(features: &Array2<f64>, params: &MlpParams) -> Result<ForwardCache> {
    if features.ncols() != params.input_dim() {
        return Err(Error::InvalidInput(format!(
            "features have {} columns, network expects {}",
            features.ncols(),
            params.input_dim()
        )));
    }
    let last = params.layers.len() - 1;
    let mut activations = vec![features.clone()];
    for (k, layer) in params.layers.iter().enumerate() {
        let mut z = affine(activations[k].view(), layer);
        if k < last {
            z.mapv_inplace(|v| v.max(0.0));
        }
        activations.push(z);
    }
    Ok(ForwardCache { activations })
}

pub fn split_logits(logits: &Array2<f64>) -> Result<HeadOutput> {
    let c = logits.ncols() - 1;
    HeadOutput::new(logits.slice(s![.., ..c]).to_owned(), logits.column(c).to_owned())
}

pub fn forward(features: &Array2<f64>, params: &MlpParams) -> Result<HeadOutput> {
    split_logits(forward_cached(features, params)?.logits())
}

/// Gradients of a scalar loss with respect to every parameter, given its
/// gradient with respect to the head output.
pub fn backward(cache: &ForwardCache, params: &MlpParams, head_grad: (&Array2<f64>, &Array1<f64>)) -> Vec<Layer> {
    let (gy, go) = head_grad;
    let mut delta = concatenate(Axis(1), &[gy.view(), go.view().insert_axis(Axis(1))]).expect("matching rows");
    let mut grads = Vec::with_capacity(params.layers.len());
    for k in (0..params.layers.len()).rev() {
        let input = &cache.activations[k];
        let weight = delta.t().dot(input);
        let bias = delta.sum_axis(Axis(0));
        if k > 0 {
            let mut prev = delta.dot(&params.layers[k].weight);
            prev.zip_mut_with(input, |d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = prev;
        }
        grads.push(Layer { weight, bias });
    }
    grads.reverse();
    grads
}

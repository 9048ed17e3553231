use crate::activation::{
    enhanced_backward, enhanced_forward, pointwise_derivative, pointwise_param_grad, pointwise_value, ActivationSpec,
    Phase,
};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::NnError;

/// Fully connected layer `y = x W + b` with `W` of shape `[in, out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Tensor,
    pub bias: Tensor,
    pub grad_weights: Tensor,
    pub grad_bias: Tensor,
    cache: Option<Tensor>,
}

impl Dense {
    /// Weights uniform in `+-sqrt(6 / (in + out))`, zero bias.
    pub fn init(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let w = (0..inputs * outputs).map(|_| rng.uniform_in(-limit, limit)).collect();
        Self::from_parts(
            Tensor::new(&[inputs, outputs], w).expect("positive widths"),
            Tensor::zeros(&[outputs]),
        )
        .expect("consistent shapes")
    }

    pub fn from_parts(weights: Tensor, bias: Tensor) -> Result<Self, NnError> {
        if weights.rank() != 2 || bias.shape() != [weights.shape()[1]] {
            return Err(NnError::Contract(format!(
                "dense weights {:?} and bias {:?} do not agree",
                weights.shape(),
                bias.shape()
            )));
        }
        Ok(Self {
            grad_weights: Tensor::zeros(weights.shape()),
            grad_bias: Tensor::zeros(bias.shape()),
            weights,
            bias,
            cache: None,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[1]
    }

    fn apply(&self, x: &Tensor) -> Result<Tensor, NnError> {
        if x.rank() != 2 || x.shape()[1] != self.inputs() {
            return Err(NnError::Contract(format!(
                "dense layer expects width {}, got input of shape {:?}",
                self.inputs(),
                x.shape()
            )));
        }
        Ok(x.matmul(&self.weights)?.add_row(&self.bias)?)
    }

    fn backward(&mut self, upstream: &Tensor, need_input_grad: bool) -> Result<Option<Tensor>, NnError> {
        let x = self.cache.as_ref().ok_or(NnError::MissingCache)?;
        let gw = x.transpose()?.matmul(upstream)?;
        self.grad_weights = self.grad_weights.add(&gw)?;
        self.grad_bias = self.grad_bias.add(&upstream.sum_rows()?)?;
        if need_input_grad {
            Ok(Some(upstream.matmul(&self.weights.transpose()?)?))
        } else {
            Ok(None)
        }
    }
}

/// Activation applied to the previous layer's output. Each layer owns its own
/// copy of the activation coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationLayer {
    pub spec: ActivationSpec,
    /// Gradient in the coordinates of [`ActivationSpec::raw_params`].
    pub grads: Vec<f64>,
    cache: Option<(Tensor, Vec<f64>)>,
}

impl ActivationLayer {
    pub fn new(spec: ActivationSpec) -> Self {
        let n = spec.raw_params().len();
        Self {
            spec,
            grads: vec![0.0; n],
            cache: None,
        }
    }

    fn rrelu_slopes(&self, x: &Tensor, phase: Phase, rng: &mut Rng) -> Vec<f64> {
        match self.spec {
            ActivationSpec::Rrelu { lower, upper } => match phase {
                Phase::Train => (0..x.len()).map(|_| rng.uniform_in(lower, upper)).collect(),
                Phase::Eval => vec![0.5 * (lower + upper); x.len()],
            },
            _ => Vec::new(),
        }
    }

    fn apply(&self, x: &Tensor, slopes: &[f64]) -> Result<Tensor, NnError> {
        match &self.spec {
            ActivationSpec::EnhancedWendland(p) => Ok(enhanced_forward(x, p)?),
            spec => {
                let mut y = x.clone();
                for (i, v) in y.data_mut().iter_mut().enumerate() {
                    *v = pointwise_value(spec, *v, slopes.get(i).copied().unwrap_or(0.0));
                }
                Ok(y)
            }
        }
    }

    fn backward(&mut self, upstream: &Tensor) -> Result<Tensor, NnError> {
        let (x, slopes) = self.cache.as_ref().ok_or(NnError::MissingCache)?;
        if upstream.shape() != x.shape() {
            return Err(NnError::Contract(format!(
                "activation upstream shape {:?} does not match cached input {:?}",
                upstream.shape(),
                x.shape()
            )));
        }
        match &self.spec {
            ActivationSpec::EnhancedWendland(p) => {
                let (dx, g) = enhanced_backward(x, upstream, p)?;
                for (acc, d) in self.grads.iter_mut().zip(p.raw_gradient(g)) {
                    *acc += d;
                }
                Ok(dx)
            }
            spec => {
                let mut dx = x.clone();
                let mut pg = [0.0; 2];
                let has_params = !self.grads.is_empty();
                for (i, (d, &u)) in dx.data_mut().iter_mut().zip(upstream.data()).enumerate() {
                    let xi = x.data()[i];
                    *d = u * pointwise_derivative(spec, xi, slopes.get(i).copied().unwrap_or(0.0));
                    if has_params {
                        let g = pointwise_param_grad(spec, xi);
                        pg[0] += u * g[0];
                        pg[1] += u * g[1];
                    }
                }
                for (acc, g) in self.grads.iter_mut().zip(pg) {
                    *acc += g;
                }
                Ok(dx)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Activation(ActivationLayer),
}

impl Layer {
    pub(crate) fn forward(&mut self, x: &Tensor, phase: Phase, rng: &mut Rng) -> Result<Tensor, NnError> {
        match self {
            Layer::Dense(d) => {
                let y = d.apply(x)?;
                d.cache = Some(x.clone());
                Ok(y)
            }
            Layer::Activation(a) => {
                let slopes = a.rrelu_slopes(x, phase, rng);
                let y = a.apply(x, &slopes)?;
                a.cache = Some((x.clone(), slopes));
                Ok(y)
            }
        }
    }

    /// Forward without touching the cache.
    pub(crate) fn eval(&self, x: &Tensor, phase: Phase, rng: &mut Rng) -> Result<Tensor, NnError> {
        match self {
            Layer::Dense(d) => d.apply(x),
            Layer::Activation(a) => {
                let slopes = a.rrelu_slopes(x, phase, rng);
                a.apply(x, &slopes)
            }
        }
    }

    pub(crate) fn backward(&mut self, upstream: &Tensor, need_input_grad: bool) -> Result<Option<Tensor>, NnError> {
        match self {
            Layer::Dense(d) => d.backward(upstream, need_input_grad),
            Layer::Activation(a) => a.backward(upstream).map(Some),
        }
    }

    pub(crate) fn zero_grad(&mut self) {
        match self {
            Layer::Dense(d) => {
                d.grad_weights = Tensor::zeros(d.weights.shape());
                d.grad_bias = Tensor::zeros(d.bias.shape());
            }
            Layer::Activation(a) => a.grads.iter_mut().for_each(|g| *g = 0.0),
        }
    }

    pub(crate) fn clear_cache(&mut self) {
        match self {
            Layer::Dense(d) => d.cache = None,
            Layer::Activation(a) => a.cache = None,
        }
    }
}

use crate::activation::{ActivationSpec, Phase};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::layer::{ActivationLayer, Dense, Layer};
use super::NnError;

/// One block of parameters handed to an optimizer.
pub struct ParamSlot<'a> {
    pub name: String,
    pub values: &'a mut [f64],
    pub grads: &'a [f64],
    /// `None` means every entry is trainable.
    pub trainable: Option<&'a [bool]>,
    pub entry_names: Option<Vec<&'static str>>,
}

impl ParamSlot<'_> {
    pub fn is_trainable(&self, i: usize) -> bool {
        self.trainable.is_none_or(|m| m[i])
    }

    pub fn entry_name(&self, i: usize) -> String {
        match &self.entry_names {
            Some(names) => format!("{}.{}", self.name, names[i]),
            None => format!("{}[{i}]", self.name),
        }
    }
}

/// Feed-forward network of dense and activation layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self, NnError> {
        let mut width: Option<usize> = None;
        for (i, layer) in layers.iter().enumerate() {
            if let Layer::Dense(d) = layer {
                if let Some(w) = width {
                    if w != d.inputs() {
                        return Err(NnError::Contract(format!(
                            "layer {i} expects width {} but the previous dense layer produces {w}",
                            d.inputs()
                        )));
                    }
                }
                width = Some(d.outputs());
            }
        }
        Ok(Self { layers })
    }

    /// Dense layers with the given widths; `hidden` follows every dense layer
    /// except the last. Weights are drawn from `rng`.
    pub fn mlp(widths: &[usize], hidden: &ActivationSpec, rng: &mut Rng) -> Result<Self, NnError> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(NnError::Contract(format!(
                "an MLP needs at least two positive widths, got {widths:?}"
            )));
        }
        hidden.validate()?;
        let mut layers = Vec::new();
        for (i, pair) in widths.windows(2).enumerate() {
            layers.push(Layer::Dense(Dense::init(pair[0], pair[1], rng)));
            if i + 2 < widths.len() {
                layers.push(Layer::Activation(ActivationLayer::new(hidden.clone())));
            }
        }
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Runs every layer in order and caches layer inputs for [`Self::backward`].
    pub fn forward(&mut self, x: &Tensor, phase: Phase, rng: &mut Rng) -> Result<Tensor, NnError> {
        let mut h = x.clone();
        for layer in &mut self.layers {
            h = layer.forward(&h, phase, rng)?;
        }
        Ok(h)
    }

    /// Evaluation-mode forward pass that leaves caches alone. RReLU uses its
    /// mean slope, so no randomness is consumed.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor, NnError> {
        let mut unused = Rng::new(0);
        self.trace(x, Phase::Eval, &mut unused).map(|mut t| t.pop().expect("trace holds the input"))
    }

    /// Inputs of every layer followed by the network output.
    pub fn trace(&self, x: &Tensor, phase: Phase, rng: &mut Rng) -> Result<Vec<Tensor>, NnError> {
        let mut out = vec![x.clone()];
        for layer in &self.layers {
            let next = layer.eval(out.last().expect("non-empty"), phase, rng)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Accumulates parameter gradients for the cached forward pass and returns
    /// the gradient with respect to the network input.
    pub fn backward(&mut self, loss_grad: &Tensor) -> Result<Tensor, NnError> {
        self.backward_impl(loss_grad, true)
            .map(|g| g.expect("input gradient requested"))
    }

    /// Like [`Self::backward`] but skips the input gradient of the first layer.
    pub fn backward_params(&mut self, loss_grad: &Tensor) -> Result<(), NnError> {
        self.backward_impl(loss_grad, false).map(|_| ())
    }

    fn backward_impl(&mut self, loss_grad: &Tensor, want_input: bool) -> Result<Option<Tensor>, NnError> {
        let mut g = Some(loss_grad.clone());
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            let upstream = g.take().expect("gradient flows to every layer");
            g = layer.backward(&upstream, want_input || i > 0)?;
        }
        Ok(g.or_else(|| want_input.then(|| loss_grad.clone())))
    }

    pub fn zero_grad(&mut self) {
        self.layers.iter_mut().for_each(Layer::zero_grad);
    }

    pub fn clear_cache(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }

    /// Visits every parameter block in a fixed order. Activation coefficients
    /// are presented in unconstrained coordinates and written back (with any
    /// projection) after `f` returns.
    pub fn visit_params<F>(&mut self, mut f: F) -> Result<(), NnError>
    where
        F: FnMut(usize, ParamSlot<'_>) -> Result<(), NnError>,
    {
        let mut slot = 0;
        for (i, layer) in self.layers.iter_mut().enumerate() {
            match layer {
                Layer::Dense(d) => {
                    f(
                        slot,
                        ParamSlot {
                            name: format!("layer{i}.weight"),
                            values: d.weights.data_mut(),
                            grads: d.grad_weights.data(),
                            trainable: None,
                            entry_names: None,
                        },
                    )?;
                    f(
                        slot + 1,
                        ParamSlot {
                            name: format!("layer{i}.bias"),
                            values: d.bias.data_mut(),
                            grads: d.grad_bias.data(),
                            trainable: None,
                            entry_names: None,
                        },
                    )?;
                    slot += 2;
                }
                Layer::Activation(a) => {
                    let mut raw = a.spec.raw_params();
                    if raw.is_empty() {
                        continue;
                    }
                    let flags = a.spec.trainable_flags();
                    let names = a.spec.named_params().into_iter().map(|(n, _)| n).collect();
                    f(
                        slot,
                        ParamSlot {
                            name: format!("layer{i}.{}", a.spec.kind().token()),
                            values: &mut raw,
                            grads: &a.grads,
                            trainable: Some(&flags),
                            entry_names: Some(names),
                        },
                    )?;
                    a.spec.set_raw_params(&raw);
                    slot += 1;
                }
            }
        }
        Ok(())
    }

    /// All trainable scalars, in [`Self::visit_params`] order.
    pub fn trainable_values(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params(|_, s| {
            out.extend((0..s.values.len()).filter(|&i| s.is_trainable(i)).map(|i| s.values[i]));
            Ok(())
        })
        .expect("collecting never fails");
        out
    }

    /// Gradients matching [`Self::trainable_values`].
    pub fn trainable_grads(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params(|_, s| {
            out.extend((0..s.values.len()).filter(|&i| s.is_trainable(i)).map(|i| s.grads[i]));
            Ok(())
        })
        .expect("collecting never fails");
        out
    }

    /// Inverse of [`Self::trainable_values`].
    pub fn set_trainable_values(&mut self, values: &[f64]) -> Result<(), NnError> {
        let mut cursor = 0;
        self.visit_params(|_, s| {
            for i in 0..s.values.len() {
                if s.is_trainable(i) {
                    let v = *values
                        .get(cursor)
                        .ok_or_else(|| NnError::Contract("too few parameter values".into()))?;
                    s.values[i] = v;
                    cursor += 1;
                }
            }
            Ok(())
        })?;
        if cursor != values.len() {
            return Err(NnError::Contract(format!(
                "expected {cursor} parameter values, got {}",
                values.len()
            )));
        }
        Ok(())
    }

    /// Current activation coefficients in natural coordinates, named
    /// `layer<i>.<coefficient>`.
    pub fn activation_params(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Layer::Activation(a) = layer {
                for (name, v) in a.spec.named_params() {
                    out.push((format!("layer{i}.{name}"), v));
                }
            }
        }
        out
    }

    pub fn activation_specs(&self) -> Vec<&ActivationSpec> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Activation(a) => Some(&a.spec),
                Layer::Dense(_) => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;

    fn dense(w: Vec<Vec<f64>>, b: Vec<f64>) -> Layer {
        let n = b.len();
        Layer::Dense(Dense::from_parts(Tensor::from_rows(&w).unwrap(), Tensor::new(&[n], b).unwrap()).unwrap())
    }

    #[test]
    fn empty_network_is_identity() {
        let mut net = Network::new(vec![]).unwrap();
        let x = Tensor::from_rows(&[vec![1.0, -2.0]]).unwrap();
        assert_eq!(net.forward(&x, Phase::Eval, &mut Rng::new(0)).unwrap(), x);
        assert_eq!(net.backward(&x).unwrap(), x);
    }

    #[test]
    fn identity_dense_passes_input_through() {
        let mut net = Network::new(vec![dense(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0])]).unwrap();
        let x = Tensor::from_rows(&[vec![0.5, -3.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(net.forward(&x, Phase::Eval, &mut Rng::new(0)).unwrap(), x);
    }

    #[test]
    fn dense_then_relu_by_hand() {
        let mut net = Network::new(vec![
            dense(vec![vec![2.0]], vec![1.0]),
            Layer::Activation(ActivationLayer::new(ActivationSpec::Relu)),
        ])
        .unwrap();
        let x = Tensor::new(&[2, 1], vec![-1.0, 3.0]).unwrap();
        let y = net.forward(&x, Phase::Eval, &mut Rng::new(0)).unwrap();
        assert_eq!(y.data(), &[0.0, 7.0]);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        assert!(Network::new(vec![dense(vec![vec![1.0, 1.0]], vec![0.0, 0.0]), dense(vec![vec![1.0]], vec![0.0])]).is_err());
        let mut net = Network::mlp(&[3, 2], &ActivationSpec::Relu, &mut Rng::new(0)).unwrap();
        assert!(net.forward(&Tensor::zeros(&[1, 2]), Phase::Eval, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn backward_without_forward_fails() {
        let mut net = Network::mlp(&[2, 2], &ActivationSpec::Relu, &mut Rng::new(0)).unwrap();
        assert!(matches!(net.backward(&Tensor::zeros(&[1, 2])), Err(NnError::MissingCache)));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = Rng::new(1);
        let spec = ActivationSpec::default_for(ActivationKind::EnhancedWendland);
        let mut net = Network::mlp(&[2, 4, 2], &spec, &mut rng).unwrap();
        let x = Tensor::new(&[3, 2], (0..6).map(|i| i as f64 * 0.3 - 0.7).collect()).unwrap();
        net.forward(&x, Phase::Train, &mut rng).unwrap();
        net.backward(&Tensor::zeros(&[3, 2])).unwrap();
        assert!(net.trainable_grads().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn zero_grad_clears_everything() {
        let mut rng = Rng::new(2);
        let spec = ActivationSpec::default_for(ActivationKind::SinLu);
        let mut net = Network::mlp(&[2, 4, 2], &spec, &mut rng).unwrap();
        let x = Tensor::ones(&[3, 2]);
        net.forward(&x, Phase::Train, &mut rng).unwrap();
        net.backward(&Tensor::ones(&[3, 2])).unwrap();
        assert!(net.trainable_grads().iter().any(|&g| g != 0.0));
        net.zero_grad();
        assert!(net.trainable_grads().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gradient_store_mirrors_parameters() {
        let mut rng = Rng::new(3);
        let spec = ActivationSpec::default_for(ActivationKind::EnhancedWendland);
        let mut net = Network::mlp(&[2, 8, 8, 2], &spec, &mut rng).unwrap();
        net.visit_params(|_, s| {
            assert_eq!(s.values.len(), s.grads.len());
            Ok(())
        })
        .unwrap();
        // 2*8+8 + 8*8+8 + 8*2+2 dense + one alpha per activation layer
        assert_eq!(net.trainable_values().len(), 24 + 72 + 18 + 2);
    }

    #[test]
    fn trainable_values_round_trip() {
        let mut rng = Rng::new(4);
        let mut net = Network::mlp(&[2, 3, 1], &ActivationSpec::default_for(ActivationKind::Prelu), &mut rng).unwrap();
        let v = net.trainable_values();
        let shifted: Vec<f64> = v.iter().map(|x| x + 1.0).collect();
        net.set_trainable_values(&shifted).unwrap();
        assert_eq!(net.trainable_values(), shifted);
        assert!(net.set_trainable_values(&v[1..]).is_err());
    }

    #[test]
    fn alpha_gradient_vanishes_outside_support() {
        use crate::activation::{EnhancedWendlandParams, TrainableMask};
        let p = EnhancedWendlandParams::new(2.0, 4, 0.1, 1.0, 0.01)
            .unwrap()
            .with_trainable(TrainableMask::ALL);
        let (lambda, beta, eps) = (p.lambda(), p.beta(), p.epsilon());
        let mut net = Network::new(vec![
            dense(vec![vec![3.0, -1.5, 0.9]], vec![0.0, 0.2, 0.1]),
            Layer::Activation(ActivationLayer::new(ActivationSpec::EnhancedWendland(p))),
        ])
        .unwrap();
        // every pre-activation has |z| > 1 / alpha = 0.5
        let x = Tensor::new(&[4, 1], vec![1.0, -0.7, 2.0, 0.9]).unwrap();
        let mut rng = Rng::new(0);
        let y = net.forward(&x, Phase::Train, &mut rng).unwrap();
        let u = Tensor::new(y.shape(), (0..y.len()).map(|i| 0.3 * i as f64 - 1.0).collect()).unwrap();
        net.backward(&u).unwrap();

        // oracle: the same network with the Wendland term removed
        let Layer::Dense(d) = &net.layers()[0] else { unreachable!() };
        let z = x.matmul(&d.weights).unwrap().add_row(&d.bias).unwrap();
        assert!(z.data().iter().all(|v| v.abs() > 0.5));
        let tail = |v: f64| v * (lambda * v.abs() + eps * (-beta * v.abs()).exp());
        for (a, &v) in y.data().iter().zip(z.data()) {
            assert!((a - tail(v)).abs() < 1e-15);
        }
        let mut d_lambda = 0.0;
        let mut d_beta = 0.0;
        let mut d_eps = 0.0;
        for (&uj, &v) in u.data().iter().zip(z.data()) {
            let r = v.abs();
            d_lambda += uj * v * r;
            d_beta += uj * v * eps * (-r) * (-beta * r).exp();
            d_eps += uj * v * (-beta * r).exp();
        }
        let Layer::Activation(a) = &net.layers()[1] else { unreachable!() };
        assert_eq!(a.grads[0], 0.0);
        assert!((a.grads[1] - d_lambda).abs() < 1e-12);
        // stored in ln(beta) coordinates
        assert!((a.grads[2] - d_beta * beta).abs() < 1e-12);
        assert!((a.grads[3] - d_eps).abs() < 1e-12);
    }
}

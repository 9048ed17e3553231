use super::network::Network;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// `v <- momentum * v + g; p <- p - lr * v`.
    Sgd { lr: f64, momentum: f64 },
    /// Adam with bias-corrected first and second moments.
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimizerKind {
    pub fn validate(&self) -> Result<(), NnError> {
        let ok = match *self {
            OptimizerKind::Sgd { lr, momentum } => lr > 0.0 && lr.is_finite() && (0.0..1.0).contains(&momentum),
            OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                lr > 0.0 && lr.is_finite() && (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(NnError::Contract(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Optimizer with per-parameter moment buffers, allocated on the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind) -> Result<Self, NnError> {
        kind.validate()?;
        Ok(Self {
            kind,
            first: Vec::new(),
            second: Vec::new(),
            steps: 0,
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update using the gradients currently stored in `net`.
    /// Nothing is modified if any trainable gradient is non-finite.
    pub fn step(&mut self, net: &mut Network) -> Result<(), NnError> {
        net.visit_params(|_, s| {
            for (i, g) in s.grads.iter().enumerate() {
                if s.is_trainable(i) && !g.is_finite() {
                    return Err(NnError::NonFiniteGradient { param: s.entry_name(i) });
                }
            }
            Ok(())
        })?;

        self.steps += 1;
        let t = self.steps as i32;
        let kind = self.kind;
        let (first, second) = (&mut self.first, &mut self.second);
        net.visit_params(|slot, s| {
            if first.len() <= slot {
                first.resize(slot + 1, Vec::new());
                second.resize(slot + 1, Vec::new());
            }
            let n = s.values.len();
            if first[slot].is_empty() {
                first[slot] = vec![0.0; n];
                if matches!(kind, OptimizerKind::Adam { .. }) {
                    second[slot] = vec![0.0; n];
                }
            } else if first[slot].len() != n {
                return Err(NnError::Contract(format!(
                    "{} has {n} entries but the optimizer state holds {}",
                    s.name,
                    first[slot].len()
                )));
            }
            let mask: Vec<bool> = (0..n).map(|i| s.is_trainable(i)).collect();
            match kind {
                OptimizerKind::Sgd { lr, momentum } => {
                    for i in (0..n).filter(|&i| mask[i]) {
                        let v = &mut first[slot][i];
                        *v = momentum * *v + s.grads[i];
                        s.values[i] -= lr * *v;
                    }
                }
                OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                    let c1 = 1.0 - beta1.powi(t);
                    let c2 = 1.0 - beta2.powi(t);
                    for i in (0..n).filter(|&i| mask[i]) {
                        let g = s.grads[i];
                        let m = &mut first[slot][i];
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        let v = &mut second[slot][i];
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        s.values[i] -= lr * (first[slot][i] / c1) / ((second[slot][i] / c2).sqrt() + eps);
                    }
                }
            }
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::{ActivationKind, ActivationSpec, EnhancedWendlandParams, TrainableMask};
    use crate::nn::{ActivationLayer, Dense, Layer};
    use crate::tensor::Tensor;

    fn scalar_net(w: f64) -> Network {
        let d = Dense::from_parts(Tensor::new(&[1, 1], vec![w]).unwrap(), Tensor::zeros(&[1])).unwrap();
        Network::new(vec![Layer::Dense(d)]).unwrap()
    }

    fn set_grad(net: &mut Network, g: f64) {
        if let Layer::Dense(d) = &mut net.layers_mut()[0] {
            d.grad_weights.data_mut()[0] = g;
        }
    }

    fn weight(net: &Network) -> f64 {
        match &net.layers()[0] {
            Layer::Dense(d) => d.weights.data()[0],
            Layer::Activation(_) => unreachable!(),
        }
    }

    #[test]
    fn plain_sgd_step() {
        let mut net = scalar_net(0.0);
        set_grad(&mut net, 1.0);
        let mut opt = Optimizer::new(OptimizerKind::Sgd { lr: 0.1, momentum: 0.0 }).unwrap();
        opt.step(&mut net).unwrap();
        assert!((weight(&net) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = scalar_net(0.7);
        let before = net.clone();
        let mut opt = Optimizer::new(OptimizerKind::Sgd { lr: 0.1, momentum: 0.0 }).unwrap();
        opt.step(&mut net).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn momentum_accumulates() {
        let mut net = scalar_net(0.0);
        set_grad(&mut net, 1.0);
        let mut opt = Optimizer::new(OptimizerKind::Sgd { lr: 0.1, momentum: 0.5 }).unwrap();
        opt.step(&mut net).unwrap();
        opt.step(&mut net).unwrap();
        // velocities 1 then 1.5
        assert!((weight(&net) + 0.25).abs() < 1e-15);
        assert_eq!(opt.steps(), 2);
    }

    #[test]
    fn first_adam_step_has_magnitude_lr() {
        for g in [1e-4, 0.3, -7.0, 1e3] {
            let mut net = scalar_net(1.0);
            set_grad(&mut net, g);
            let mut opt = Optimizer::new(OptimizerKind::default()).unwrap();
            opt.step(&mut net).unwrap();
            let delta = weight(&net) - 1.0;
            assert!((delta.abs() - 1e-3).abs() < 1e-6, "g = {g}: delta = {delta}");
            assert_eq!(delta.signum(), -g.signum());
        }
    }

    #[test]
    fn non_finite_gradient_is_reported_without_update() {
        let mut net = scalar_net(0.5);
        set_grad(&mut net, f64::NAN);
        let mut opt = Optimizer::new(OptimizerKind::default()).unwrap();
        match opt.step(&mut net) {
            Err(NnError::NonFiniteGradient { param }) => assert_eq!(param, "layer0.weight[0]"),
            other => panic!("{other:?}"),
        }
        assert_eq!(weight(&net), 0.5);
        assert_eq!(opt.steps(), 0);
    }

    #[test]
    fn masked_activation_entries_do_not_move() {
        let p = EnhancedWendlandParams::new(1.0, 4, 0.1, 1.0, 0.01)
            .unwrap()
            .with_trainable(TrainableMask { alpha: true, lambda: false, beta: true, epsilon: false });
        let mut layer = ActivationLayer::new(ActivationSpec::EnhancedWendland(p));
        layer.grads = vec![1.0, 1.0, -1.0, 1.0];
        let mut net = Network::new(vec![Layer::Activation(layer)]).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::Sgd { lr: 0.5, momentum: 0.0 }).unwrap();
        opt.step(&mut net).unwrap();
        let q = match net.activation_specs()[0] {
            ActivationSpec::EnhancedWendland(q) => q.clone(),
            _ => unreachable!(),
        };
        assert!((q.alpha() - (-0.5f64).exp()).abs() < 1e-15);
        assert!((q.beta() - 0.5f64.exp()).abs() < 1e-15);
        assert_eq!(q.lambda(), 0.1);
        assert_eq!(q.epsilon(), 0.01);
    }

    #[test]
    fn reparameterized_coefficients_stay_positive() {
        let spec = ActivationSpec::EnhancedWendland(
            EnhancedWendlandParams::new(1.0, 4, 0.1, 1.0, 0.01).unwrap().with_trainable(TrainableMask::ALL),
        );
        let mut net = Network::new(vec![Layer::Activation(ActivationLayer::new(spec))]).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::Sgd { lr: 10.0, momentum: 0.9 }).unwrap();
        for _ in 0..200 {
            if let Layer::Activation(a) = &mut net.layers_mut()[0] {
                a.grads = vec![5.0, 5.0, 5.0, 5.0];
            }
            opt.step(&mut net).unwrap();
            let ActivationSpec::EnhancedWendland(q) = net.activation_specs()[0] else { unreachable!() };
            assert!(q.alpha() > 0.0 && q.beta() > 0.0);
            assert!(q.lambda() >= 0.0 && q.epsilon() >= 0.0);
        }
        assert_eq!(net.activation_specs()[0].kind(), ActivationKind::EnhancedWendland);
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(Optimizer::new(OptimizerKind::Sgd { lr: 0.0, momentum: 0.0 }).is_err());
        assert!(Optimizer::new(OptimizerKind::Adam { lr: 1e-3, beta1: 1.0, beta2: 0.9, eps: 1e-8 }).is_err());
    }
}

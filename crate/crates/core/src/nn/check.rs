//! Whole-network gradient check against central finite differences.
//!
//! The checked map sends (trainable parameters, input batch) to the scalar
//! `sum(w * net(x))` for a fixed random weighting `w`, so one probe compares a
//! single directional derivative against the backward pass.

use crate::activation::Phase;
use crate::gradcheck::{finite_diff_check_filtered, FdOptions, FdReport, GradCheckError};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::layer::Layer;
use super::network::Network;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkCheckOptions {
    pub fd: FdOptions,
    /// Probes whose centre has a pre-activation closer than this to a kink
    /// are skipped.
    pub kink_zone: f64,
    pub phase: Phase,
}

impl Default for NetworkCheckOptions {
    fn default() -> Self {
        Self {
            fd: FdOptions {
                probes: 1000,
                step: crate::gradcheck::DEFAULT_STEP,
            },
            kink_zone: 1e-8,
            phase: Phase::Train,
        }
    }
}

/// Per activation element: which interval between kinks the pre-activation
/// lies in, plus the smallest distance from any pre-activation to a kink.
fn kink_signature(net: &Network, x: &Tensor, phase: Phase, noise: &Rng) -> Result<(Vec<usize>, f64), NnError> {
    let trace = net.trace(x, phase, &mut noise.clone())?;
    let mut sides = Vec::new();
    let mut nearest = f64::INFINITY;
    for (layer, input) in net.layers().iter().zip(&trace) {
        let Layer::Activation(a) = layer else { continue };
        let kinks = a.spec.kinks();
        if kinks.is_empty() {
            continue;
        }
        for &z in input.data() {
            sides.push(kinks.iter().filter(|&&k| z >= k).count());
            for &k in &kinks {
                nearest = nearest.min((z - k).abs());
            }
        }
    }
    Ok((sides, nearest))
}

fn split(net: &Network, theta: &Tensor, n_params: usize, x_shape: &[usize]) -> Result<(Network, Tensor), NnError> {
    let mut probe = net.clone();
    probe.set_trainable_values(&theta.data()[..n_params])?;
    let x = Tensor::new(x_shape, theta.data()[n_params..].to_vec())?;
    Ok((probe, x))
}

/// Checks the backward pass of `net` (parameter and input gradients together)
/// at input `x`. RReLU slopes are drawn once from a fixed substream and reused
/// for every evaluation. Probes straddling or within `kink_zone` of a kink are
/// skipped and counted in [`FdReport::probes_skipped`].
pub fn network_grad_check(
    net: &Network,
    x: &Tensor,
    opts: &NetworkCheckOptions,
    rng: &mut Rng,
) -> Result<FdReport, NnError> {
    let noise = rng.substream(0x6b69_6e6b);
    let mut work = net.clone();
    let out = work.forward(x, opts.phase, &mut noise.clone())?;
    let weights = Tensor::new(out.shape(), (0..out.len()).map(|_| rng.normal()).collect())?;
    work.zero_grad();
    let dx = work.backward(&weights)?;
    work.clear_cache();

    let params = work.trainable_values();
    let n_params = params.len();
    let mut grad = work.trainable_grads();
    grad.extend_from_slice(dx.data());
    let grad = Tensor::new(&[grad.len()], grad)?;
    let mut theta = params;
    theta.extend_from_slice(x.data());
    let theta = Tensor::new(&[theta.len()], theta)?;

    let x_shape = x.shape().to_vec();
    let mut failure: Option<NnError> = None;
    let value = |t: &Tensor| -> Result<f64, NnError> {
        let (probe, px) = split(net, t, n_params, &x_shape)?;
        let y = probe.trace(&px, opts.phase, &mut noise.clone())?.pop().expect("output");
        Ok(y.dot(&weights)?)
    };
    let signature = |t: &Tensor| -> Result<(Vec<usize>, f64), NnError> {
        let (probe, px) = split(net, t, n_params, &x_shape)?;
        kink_signature(&probe, &px, opts.phase, &noise)
    };
    let (centre_sides, centre_gap) = signature(&theta)?;
    let centre_ok = centre_gap >= opts.kink_zone;

    let result = finite_diff_check_filtered(
        |t| {
            let v = value(t).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            });
            Tensor::full(&[1], v)
        },
        &theta,
        |_, v| Tensor::full(&[1], grad.dot(v).expect("same length")),
        |t, v, h| {
            if !centre_ok {
                return false;
            }
            let step = v.scale(h);
            let plus = signature(&t.add(&step).expect("same shape"));
            let minus = signature(&t.sub(&step).expect("same shape"));
            match (plus, minus) {
                (Ok((p, _)), Ok((m, _))) => p == centre_sides && m == centre_sides,
                _ => false,
            }
        },
        opts.fd,
        rng,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    result.map_err(|e| match e {
        GradCheckError::NonFinite { probe } => NnError::Contract(format!("probe {probe}: network output is not finite")),
        other => NnError::Contract(other.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::{ActivationKind, ActivationSpec, EnhancedWendlandParams, NormMode, TrainableMask};

    fn inputs(rng: &mut Rng, rows: usize, cols: usize) -> Tensor {
        Tensor::new(&[rows, cols], (0..rows * cols).map(|_| rng.uniform_in(-2.0, 2.0)).collect()).unwrap()
    }

    fn check(spec: &ActivationSpec, widths: &[usize], seed: u64, probes: usize) -> FdReport {
        let mut rng = Rng::new(seed);
        let net = Network::mlp(widths, spec, &mut rng.substream(1)).unwrap();
        let x = inputs(&mut rng, 5, widths[0]);
        let opts = NetworkCheckOptions {
            fd: FdOptions { probes, step: 1e-6 },
            ..Default::default()
        };
        network_grad_check(&net, &x, &opts, &mut rng).unwrap()
    }

    #[test]
    fn enhanced_wendland_2_4_2() {
        let report = check(&ActivationSpec::default(), &[2, 4, 2], 1, 200);
        assert!(report.passes(1e-6), "{report:?}");
        assert_eq!(report.probes_skipped, 0);
    }

    #[test]
    fn every_coefficient_trainable_in_both_modes() {
        for mode in [NormMode::Elementwise, NormMode::ChannelNorm { axis: 1 }] {
            let p = EnhancedWendlandParams::new(0.8, 3, 0.2, 1.5, 0.05)
                .unwrap()
                .with_trainable(TrainableMask::ALL)
                .with_mode(mode);
            let report = check(&ActivationSpec::EnhancedWendland(p), &[2, 8, 8, 2], 2, 200);
            assert!(report.passes(1e-6), "{mode:?}: {report:?}");
        }
    }

    #[test]
    fn every_kind_passes() {
        for kind in ActivationKind::ALL {
            let report = check(&ActivationSpec::default_for(kind), &[2, 8, 8, 2], 3, 100);
            assert!(report.passes(1e-6), "{kind:?}: {report:?}");
            assert!(report.probes_run > 50, "{kind:?}: {report:?}");
        }
    }

    #[test]
    fn broken_backward_is_caught() {
        // ReLU gradients against a leaky forward pass must be rejected
        let mut rng = Rng::new(4);
        let relu = Network::mlp(&[2, 4, 2], &ActivationSpec::Relu, &mut rng.substream(1)).unwrap();
        let x = inputs(&mut rng, 5, 2);
        let mut leaky = relu.clone();
        for layer in leaky.layers_mut() {
            if let Layer::Activation(a) = layer {
                a.spec = ActivationSpec::LeakyRelu { slope: 0.5 };
            }
        }
        let mut work = relu.clone();
        let out = work.forward(&x, Phase::Eval, &mut rng.clone()).unwrap();
        let w = Tensor::ones(out.shape());
        let dx = work.backward(&w).unwrap();
        let report = crate::gradcheck::finite_diff_check(
            |t| Tensor::full(&[1], leaky.predict(t).unwrap().dot(&w).unwrap()),
            &x,
            |_, v| Tensor::full(&[1], dx.dot(v).unwrap()),
            FdOptions { probes: 20, step: 1e-6 },
            &mut rng,
        )
        .unwrap();
        assert!(!report.passes(1e-6), "{report:?}");
    }

    #[test]
    fn probes_straddling_a_kink_are_skipped() {
        // a ReLU whose only pre-activation sits at 1e-9
        let d = crate::nn::Dense::from_parts(Tensor::new(&[1, 1], vec![1.0]).unwrap(), Tensor::zeros(&[1])).unwrap();
        let net = Network::new(vec![
            Layer::Dense(d),
            Layer::Activation(crate::nn::ActivationLayer::new(ActivationSpec::Relu)),
        ])
        .unwrap();
        let x = Tensor::new(&[1, 1], vec![1e-9]).unwrap();
        let report = network_grad_check(&net, &x, &NetworkCheckOptions::default(), &mut Rng::new(5)).unwrap();
        assert_eq!(report.probes_run, 0);
        assert_eq!(report.probes_skipped, 1000);
    }
}

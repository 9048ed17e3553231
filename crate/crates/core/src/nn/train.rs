use std::time::Instant;

use crate::activation::Phase;
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::loss::{accuracy, loss_eval, LossKind, Targets};
use super::network::Network;
use super::optim::{Optimizer, OptimizerKind};
use super::NnError;

/// Input rows paired with their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub features: Tensor,
    pub targets: Targets,
}

impl Samples {
    pub fn new(features: Tensor, targets: Targets) -> Result<Self, NnError> {
        if features.rank() != 2 || features.rows() != targets.len() {
            return Err(NnError::Contract(format!(
                "{} targets for features of shape {:?}",
                targets.len(),
                features.shape()
            )));
        }
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Result<Samples, NnError> {
        Ok(Samples {
            features: self.features.select_rows(rows)?,
            targets: self.targets.select(rows)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean training loss over the epoch's mini-batches, weighted by batch size.
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub wall_seconds: f64,
    pub activation_params: Vec<(String, f64)>,
}

/// Why and when training stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// 1-based epoch that did not complete.
    pub epoch: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub records: Vec<EpochRecord>,
    pub divergence: Option<Divergence>,
}

/// Loss and, for class targets, accuracy of the evaluation-mode network.
pub fn evaluate(net: &Network, data: &Samples, loss: LossKind) -> Result<(f64, Option<f64>), NnError> {
    let pred = net.predict(&data.features)?;
    let (value, _) = loss_eval(loss, &pred, &data.targets)?;
    let acc = match &data.targets {
        Targets::Classes(c) => Some(accuracy(&pred, c)),
        Targets::Values(_) => None,
    };
    Ok((value, acc))
}

/// Mini-batch training. Rows are reshuffled from `rng` every epoch and the
/// last partial batch is kept. A non-finite loss or gradient ends training;
/// the epochs completed before it are returned along with the reason.
pub fn train(
    net: &mut Network,
    data: &Samples,
    test: Option<&Samples>,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainReport, NnError> {
    if data.is_empty() {
        return Err(NnError::Contract("training set is empty".into()));
    }
    if config.batch_size == 0 {
        return Err(NnError::Contract("batch size must be at least 1".into()));
    }
    let mut optimizer = Optimizer::new(config.optimizer)?;
    let mut report = TrainReport {
        records: Vec::with_capacity(config.epochs),
        divergence: None,
    };
    let stop = |mut report: TrainReport, epoch: usize, reason: String| {
        report.divergence = Some(Divergence { epoch, reason });
        Ok(report)
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=config.epochs {
        let start = Instant::now();
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let b = data.select(batch)?;
            net.zero_grad();
            let pred = net.forward(&b.features, Phase::Train, rng)?;
            let (value, grad) = loss_eval(config.loss, &pred, &b.targets)?;
            if !value.is_finite() {
                net.clear_cache();
                return stop(report, epoch, format!("training loss is {value}"));
            }
            total += value * batch.len() as f64;
            net.backward_params(&grad)?;
            match optimizer.step(net) {
                Err(e @ NnError::NonFiniteGradient { .. }) => {
                    net.clear_cache();
                    return stop(report, epoch, e.to_string());
                }
                other => other?,
            }
        }
        net.clear_cache();
        let wall_seconds = start.elapsed().as_secs_f64();
        let train_loss = total / data.len() as f64;
        let (test_loss, test_accuracy) = match test {
            Some(t) if !t.is_empty() => {
                let (l, a) = evaluate(net, t, config.loss)?;
                (Some(l), a)
            }
            _ => (None, None),
        };
        if let Some(l) = test_loss.filter(|l| !l.is_finite()) {
            return stop(report, epoch, format!("test loss is {l}"));
        }
        report.records.push(EpochRecord {
            epoch,
            train_loss,
            test_loss,
            test_accuracy,
            wall_seconds,
            activation_params: net.activation_params(),
        });
    }
    Ok(report)
}

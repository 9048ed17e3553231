//! The `grad-check` suite: whole-network finite-difference checks for every
//! activation kind plus the losses.

use wendland_core::activation::{EnhancedWendlandParams, NormMode, TrainableMask};
use wendland_core::gradcheck::{finite_diff_check, FdOptions, DEFAULT_TOLERANCE};
use wendland_core::nn::{loss_eval, network_grad_check, LossKind, Network, NetworkCheckOptions, Targets};
use wendland_core::{ActivationKind, ActivationSpec, Rng, Tensor};

/// One line of the grad-check report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub max_rel_error: f64,
    pub probes_run: usize,
    pub probes_skipped: usize,
    pub passed: bool,
}

/// Specs exercised by the suite: the default of every kind, followed by
/// enhanced Wendland variants with every coefficient trainable.
pub fn suite_specs() -> Vec<ActivationSpec> {
    let mut specs: Vec<ActivationSpec> = ActivationKind::ALL.iter().map(|&k| ActivationSpec::default_for(k)).collect();
    for (alpha, k, mode) in [
        (0.7, 2, NormMode::Elementwise),
        (1.5, 6, NormMode::ChannelNorm { axis: 1 }),
        (1.0, 1, NormMode::Elementwise),
    ] {
        let p = EnhancedWendlandParams::new(alpha, k, 0.1, 1.0, 0.01)
            .expect("valid coefficients")
            .with_trainable(TrainableMask::ALL)
            .with_mode(mode);
        specs.push(ActivationSpec::EnhancedWendland(p));
    }
    specs
}

/// Whole-network check of `spec` on a seeded 2-8-8-2 network and a batch of
/// five inputs uniform in [-2, 2]^2.
pub fn check_network(spec: &ActivationSpec, seed: u64, probes: usize) -> CheckLine {
    let mut rng = Rng::new(seed);
    let net = Network::mlp(&[2, 8, 8, 2], spec, &mut rng.substream(1)).expect("valid network");
    let x = Tensor::new(&[5, 2], (0..10).map(|_| rng.uniform_in(-2.0, 2.0)).collect()).expect("shape");
    let opts = NetworkCheckOptions {
        fd: FdOptions {
            probes,
            step: wendland_core::gradcheck::DEFAULT_STEP,
        },
        ..Default::default()
    };
    match network_grad_check(&net, &x, &opts, &mut rng) {
        Ok(r) => CheckLine {
            name: format!("network 2-8-8-2 {spec}"),
            max_rel_error: r.max_rel_error,
            probes_run: r.probes_run,
            probes_skipped: r.probes_skipped,
            passed: r.passes(DEFAULT_TOLERANCE) && r.probes_run > 0,
        },
        Err(e) => CheckLine {
            name: format!("network 2-8-8-2 {spec}: {e}"),
            max_rel_error: f64::NAN,
            probes_run: 0,
            probes_skipped: 0,
            passed: false,
        },
    }
}

fn check_loss(kind: LossKind, seed: u64) -> CheckLine {
    let mut rng = Rng::new(seed);
    let pred = Tensor::new(&[6, 3], (0..18).map(|_| rng.normal()).collect()).expect("shape");
    let target = match kind {
        LossKind::Mse => Targets::Values(Tensor::new(&[6, 3], (0..18).map(|_| rng.normal()).collect()).expect("shape")),
        LossKind::SoftmaxCrossEntropy => Targets::Classes((0..6).map(|_| rng.index(3)).collect()),
    };
    let report = finite_diff_check(
        |p| Tensor::full(&[1], loss_eval(kind, p, &target).expect("valid loss").0),
        &pred,
        |p, v| Tensor::full(&[1], loss_eval(kind, p, &target).expect("valid loss").1.dot(v).expect("shape")),
        FdOptions { probes: 200, step: 1e-6 },
        &mut rng,
    );
    match report {
        Ok(r) => CheckLine {
            name: format!("loss {kind:?}"),
            max_rel_error: r.max_rel_error,
            probes_run: r.probes_run,
            probes_skipped: r.probes_skipped,
            passed: r.passes(1e-7),
        },
        Err(e) => CheckLine {
            name: format!("loss {kind:?}: {e}"),
            max_rel_error: f64::NAN,
            probes_run: 0,
            probes_skipped: 0,
            passed: false,
        },
    }
}

pub fn run_suite(seed: u64, probes: usize) -> Vec<CheckLine> {
    let mut lines: Vec<CheckLine> = suite_specs()
        .iter()
        .enumerate()
        .map(|(i, s)| check_network(s, seed.wrapping_add(i as u64), probes))
        .collect();
    lines.push(check_loss(LossKind::Mse, seed));
    lines.push(check_loss(LossKind::SoftmaxCrossEntropy, seed));
    lines
}

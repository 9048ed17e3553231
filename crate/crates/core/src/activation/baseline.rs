//! Scalar activations and their derivatives.
//!
//! At points where an activation is not differentiable (the ReLU family at
//! its thresholds) the derivative is the right derivative.

use crate::rng::Rng;

use super::enhanced::{enhanced_radial, enhanced_radial_dr};
use super::spec::ActivationSpec;
use super::wendland::{c0, c0_dr, c2, c2_dr, c4, c4_dr};
use super::ActivationError;

/// Training draws a fresh RReLU slope per element; evaluation uses the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Slope used by RReLU for one element.
pub(crate) fn rrelu_slope(lower: f64, upper: f64, phase: Phase, rng: &mut Rng) -> f64 {
    match phase {
        Phase::Train => rng.uniform_in(lower, upper),
        Phase::Eval => 0.5 * (lower + upper),
    }
}

/// Value of a pointwise activation. `slope` is only read by RReLU; the
/// enhanced Wendland kind is evaluated in elementwise mode.
pub(crate) fn pointwise_value(spec: &ActivationSpec, x: f64, slope: f64) -> f64 {
    use ActivationSpec::*;
    match spec {
        WendlandC0 => x * c0(x.abs()),
        WendlandC2 => x * c2(x.abs()),
        WendlandC4 => x * c4(x.abs()),
        EnhancedWendland(p) => x * enhanced_radial(x.abs(), p).expect("|x| is non-negative"),
        Relu => x.max(0.0),
        Relu6 => x.clamp(0.0, 6.0),
        LeakyRelu { slope: s } | Prelu { slope: s } => {
            if x >= 0.0 {
                x
            } else {
                s * x
            }
        }
        Rrelu { .. } => {
            if x >= 0.0 {
                x
            } else {
                slope * x
            }
        }
        Elu { alpha } => {
            if x >= 0.0 {
                x
            } else {
                alpha * x.exp_m1()
            }
        }
        Celu { alpha } => {
            if x >= 0.0 {
                x
            } else {
                alpha * (x / alpha).exp_m1()
            }
        }
        Swish { beta } => x * sigmoid(beta * x),
        Srelu {
            t_left,
            a_left,
            t_right,
            a_right,
        } => {
            if x >= *t_right {
                t_right + a_right * (x - t_right)
            } else if x >= *t_left {
                x
            } else {
                t_left + a_left * (x - t_left)
            }
        }
        SinLu { a, b } => (x + a * (b * x).sin()) * sigmoid(x),
        Frelu { alpha } => x * sigmoid(alpha * x),
        Sigmoid => sigmoid(x),
        Tanh => x.tanh(),
        Gelu => x * std_normal_cdf(x),
    }
}

/// `dy/dx` of a pointwise activation.
pub(crate) fn pointwise_derivative(spec: &ActivationSpec, x: f64, slope: f64) -> f64 {
    use ActivationSpec::*;
    let r = x.abs();
    match spec {
        WendlandC0 => c0(r) + r * c0_dr(r),
        WendlandC2 => c2(r) + r * c2_dr(r),
        WendlandC4 => c4(r) + r * c4_dr(r),
        EnhancedWendland(p) => {
            enhanced_radial(r, p).expect("|x| is non-negative") + r * enhanced_radial_dr(r, p).expect("|x| is non-negative")
        }
        Relu => {
            if x >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Relu6 => {
            if (0.0..6.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        }
        LeakyRelu { slope: s } | Prelu { slope: s } => {
            if x >= 0.0 {
                1.0
            } else {
                *s
            }
        }
        Rrelu { .. } => {
            if x >= 0.0 {
                1.0
            } else {
                slope
            }
        }
        Elu { alpha } => {
            if x >= 0.0 {
                1.0
            } else {
                alpha * x.exp()
            }
        }
        Celu { alpha } => {
            if x >= 0.0 {
                1.0
            } else {
                (x / alpha).exp()
            }
        }
        Swish { beta } => {
            let s = sigmoid(beta * x);
            s + beta * x * s * (1.0 - s)
        }
        Srelu {
            t_left,
            a_left,
            t_right,
            a_right,
        } => {
            if x >= *t_right {
                *a_right
            } else if x >= *t_left {
                1.0
            } else {
                *a_left
            }
        }
        SinLu { a, b } => {
            let s = sigmoid(x);
            (1.0 + a * b * (b * x).cos()) * s + (x + a * (b * x).sin()) * s * (1.0 - s)
        }
        Frelu { alpha } => {
            let s = sigmoid(alpha * x);
            s + alpha * x * s * (1.0 - s)
        }
        Sigmoid => {
            let s = sigmoid(x);
            s * (1.0 - s)
        }
        Tanh => {
            let t = x.tanh();
            1.0 - t * t
        }
        Gelu => std_normal_cdf(x) + x * std_normal_pdf(x),
    }
}

/// `dy/dtheta` for the trainable parameters of a pointwise kind, in the
/// order of [`ActivationSpec::raw_params`]. Unused slots are zero.
pub(crate) fn pointwise_param_grad(spec: &ActivationSpec, x: f64) -> [f64; 2] {
    use ActivationSpec::*;
    match spec {
        Prelu { .. } => [if x >= 0.0 { 0.0 } else { x }, 0.0],
        SinLu { a, b } => {
            let s = sigmoid(x);
            [(b * x).sin() * s, a * x * (b * x).cos() * s]
        }
        Frelu { alpha } => {
            let s = sigmoid(alpha * x);
            [x * x * s * (1.0 - s), 0.0]
        }
        _ => [0.0, 0.0],
    }
}

fn require_baseline(spec: &ActivationSpec) -> Result<(), ActivationError> {
    if spec.kind().is_baseline() {
        Ok(())
    } else {
        Err(ActivationError::Config(format!(
            "`{}` is not a baseline activation",
            spec.kind().token()
        )))
    }
}

fn slope_for(spec: &ActivationSpec, phase: Phase, rng: &mut Rng) -> f64 {
    match spec {
        ActivationSpec::Rrelu { lower, upper } => rrelu_slope(*lower, *upper, phase, rng),
        _ => 0.0,
    }
}

/// Value of a baseline activation at `x`.
///
/// In [`Phase::Train`], RReLU draws its negative-side slope from `rng`;
/// calling [`baseline_grad`] with a generator in the same state yields the
/// matching derivative.
pub fn baseline_eval(spec: &ActivationSpec, x: f64, phase: Phase, rng: &mut Rng) -> Result<f64, ActivationError> {
    require_baseline(spec)?;
    let slope = slope_for(spec, phase, rng);
    Ok(pointwise_value(spec, x, slope))
}

/// Derivative of a baseline activation at `x` (right derivative at kinks).
pub fn baseline_grad(spec: &ActivationSpec, x: f64, phase: Phase, rng: &mut Rng) -> Result<f64, ActivationError> {
    require_baseline(spec)?;
    let slope = slope_for(spec, phase, rng);
    Ok(pointwise_derivative(spec, x, slope))
}

//! The enhanced Wendland activation.
//!
//! The radial profile is
//!
//! ```text
//! g(r) = (1 - alpha r)_+^k (k alpha r + 1) + lambda r + epsilon exp(-beta r)
//! ```
//!
//! and the activation scales its input by it: `y = x * g(r)`. In elementwise
//! mode `r = |x_i|` per element; in channel-norm mode `r` is the Euclidean norm
//! of the slice along the configured axis and every element of the slice is
//! scaled by the same factor.
//!
//! `alpha` and `beta` are stored as logarithms so that no unconstrained update
//! can make them non-positive. `lambda` and `epsilon` are stored directly and
//! projected onto `[0, inf)` whenever they are written.

use crate::tensor::Tensor;

use super::ActivationError;

/// Largest supported polynomial degree.
pub const MAX_DEGREE: u32 = 8;

/// Below this slice norm, channel-norm backward drops the `x_i x_j g'(r) / r`
/// cross term (its magnitude is bounded by `r |g'(r)|`).
pub const CHANNEL_NORM_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Elementwise,
    /// Radial distance is the L2 norm along `axis`.
    ChannelNorm { axis: usize },
}

/// Which coefficients receive gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainableMask {
    pub alpha: bool,
    pub lambda: bool,
    pub beta: bool,
    pub epsilon: bool,
}

impl TrainableMask {
    pub const NONE: Self = Self {
        alpha: false,
        lambda: false,
        beta: false,
        epsilon: false,
    };
    pub const ALL: Self = Self {
        alpha: true,
        lambda: true,
        beta: true,
        epsilon: true,
    };

    /// In storage order `[alpha, lambda, beta, epsilon]`.
    pub fn as_array(&self) -> [bool; 4] {
        [self.alpha, self.lambda, self.beta, self.epsilon]
    }

    pub fn count(&self) -> usize {
        self.as_array().iter().filter(|&&b| b).count()
    }
}

impl Default for TrainableMask {
    fn default() -> Self {
        Self {
            alpha: true,
            ..Self::NONE
        }
    }
}

/// Bound on `|ln alpha|` and `|ln beta|` accepted by [`EnhancedWendlandParams::set_raw`].
pub const LOG_LIMIT: f64 = 300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancedWendlandParams {
    log_alpha: f64,
    k: u32,
    lambda: f64,
    log_beta: f64,
    epsilon: f64,
    pub trainable: TrainableMask,
    pub mode: NormMode,
}

impl Default for EnhancedWendlandParams {
    fn default() -> Self {
        Self {
            log_alpha: 0.0,
            k: 4,
            lambda: 0.1,
            log_beta: 0.0,
            epsilon: 0.01,
            trainable: TrainableMask::default(),
            mode: NormMode::Elementwise,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64, ActivationError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ActivationError::InvalidParam {
            name,
            value: v,
            reason: "must be positive and finite",
        })
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<f64, ActivationError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ActivationError::InvalidParam {
            name,
            value: v,
            reason: "must be non-negative and finite",
        })
    }
}

impl EnhancedWendlandParams {
    pub fn new(alpha: f64, k: u32, lambda: f64, beta: f64, epsilon: f64) -> Result<Self, ActivationError> {
        if !(1..=MAX_DEGREE).contains(&k) {
            return Err(ActivationError::InvalidParam {
                name: "k",
                value: k as f64,
                reason: "must be an integer in [1, 8]",
            });
        }
        Ok(Self {
            log_alpha: positive("alpha", alpha)?.ln(),
            k,
            lambda: non_negative("lambda", lambda)?,
            log_beta: positive("beta", beta)?.ln(),
            epsilon: non_negative("epsilon", epsilon)?,
            trainable: TrainableMask::default(),
            mode: NormMode::Elementwise,
        })
    }

    pub fn with_mode(mut self, mode: NormMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_trainable(mut self, mask: TrainableMask) -> Self {
        self.trainable = mask;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn beta(&self) -> f64 {
        self.log_beta.exp()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Support radius `1 / alpha` of the Wendland part.
    pub fn support_radius(&self) -> f64 {
        1.0 / self.alpha()
    }

    /// Unconstrained coordinates `[ln alpha, lambda, ln beta, epsilon]`.
    pub fn raw(&self) -> [f64; 4] {
        [self.log_alpha, self.lambda, self.log_beta, self.epsilon]
    }

    /// Writes unconstrained coordinates, projecting `lambda` and `epsilon`
    /// onto `[0, inf)`. The logarithms are clamped to `+-LOG_LIMIT` so that
    /// `alpha` and `beta` stay positive and finite after exponentiation.
    pub fn set_raw(&mut self, raw: [f64; 4]) {
        self.log_alpha = raw[0].clamp(-LOG_LIMIT, LOG_LIMIT);
        self.lambda = raw[1].max(0.0);
        self.log_beta = raw[2].clamp(-LOG_LIMIT, LOG_LIMIT);
        self.epsilon = raw[3].max(0.0);
    }

    /// Maps a gradient in natural coordinates to unconstrained coordinates,
    /// zeroing coefficients that are not trainable.
    pub fn raw_gradient(&self, g: RadialGrad) -> [f64; 4] {
        let m = self.trainable;
        [
            if m.alpha { g.alpha * self.alpha() } else { 0.0 },
            if m.lambda { g.lambda } else { 0.0 },
            if m.beta { g.beta * self.beta() } else { 0.0 },
            if m.epsilon { g.epsilon } else { 0.0 },
        ]
    }

    /// `(1 - alpha r)_+`, or `None` when `r` lies outside the support. The
    /// outside test also compares against `1 / alpha` directly, so that
    /// `r = 1 / alpha` is outside even when `alpha * (1 / alpha)` rounds below 1.
    fn inside(&self, r: f64) -> Option<(f64, f64)> {
        let alpha = self.alpha();
        let ar = alpha * r;
        if ar >= 1.0 || r >= 1.0 / alpha {
            None
        } else {
            Some((alpha, 1.0 - ar))
        }
    }
}

/// Additive parts of the radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialParts {
    pub wendland: f64,
    pub linear: f64,
    pub tail: f64,
}

impl RadialParts {
    /// `wendland + (linear + tail)`: outside the support the result equals
    /// `linear + tail` bit-for-bit.
    pub fn total(&self) -> f64 {
        self.wendland + (self.linear + self.tail)
    }
}

/// Gradient of `g(r)` with respect to `(alpha, lambda, beta, epsilon)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RadialGrad {
    pub alpha: f64,
    pub lambda: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl RadialGrad {
    fn scaled_add(&mut self, s: f64, g: RadialGrad) {
        self.alpha += s * g.alpha;
        self.lambda += s * g.lambda;
        self.beta += s * g.beta;
        self.epsilon += s * g.epsilon;
    }
}

pub fn radial_parts(r: f64, p: &EnhancedWendlandParams) -> RadialParts {
    let k = p.k as i32;
    let wendland = match p.inside(r) {
        Some((alpha, t)) => t.powi(k) * (p.k as f64 * alpha * r + 1.0),
        None => 0.0,
    };
    RadialParts {
        wendland,
        linear: p.lambda * r,
        tail: p.epsilon * (-p.beta() * r).exp(),
    }
}

fn radial(r: f64, p: &EnhancedWendlandParams) -> f64 {
    radial_parts(r, p).total()
}

fn radial_dr(r: f64, p: &EnhancedWendlandParams) -> f64 {
    let kf = p.k as f64;
    let wendland = match p.inside(r) {
        Some((alpha, t)) => -kf * (kf + 1.0) * alpha * alpha * r * t.powi(p.k as i32 - 1),
        None => 0.0,
    };
    let beta = p.beta();
    wendland + p.lambda - p.epsilon * beta * (-beta * r).exp()
}

fn radial_dparams(r: f64, p: &EnhancedWendlandParams) -> RadialGrad {
    let kf = p.k as f64;
    let alpha_grad = match p.inside(r) {
        Some((alpha, t)) => {
            let tk1 = t.powi(p.k as i32 - 1);
            -kf * r * tk1 * (kf * alpha * r + 1.0) + kf * r * tk1 * t
        }
        None => 0.0,
    };
    let decay = (-p.beta() * r).exp();
    RadialGrad {
        alpha: alpha_grad,
        lambda: r,
        beta: -p.epsilon * r * decay,
        epsilon: decay,
    }
}

fn check_radius(r: f64) -> Result<(), ActivationError> {
    if r >= 0.0 {
        Ok(())
    } else {
        Err(ActivationError::NegativeRadius(r))
    }
}

/// `g(r)`.
pub fn enhanced_radial(r: f64, p: &EnhancedWendlandParams) -> Result<f64, ActivationError> {
    check_radius(r)?;
    Ok(radial(r, p))
}

/// `g'(r)`.
pub fn enhanced_radial_dr(r: f64, p: &EnhancedWendlandParams) -> Result<f64, ActivationError> {
    check_radius(r)?;
    Ok(radial_dr(r, p))
}

/// Partial derivatives of `g(r)` in natural coordinates, ignoring the
/// trainable mask.
pub fn enhanced_radial_dparams(r: f64, p: &EnhancedWendlandParams) -> Result<RadialGrad, ActivationError> {
    check_radius(r)?;
    Ok(radial_dparams(r, p))
}

fn check_axis(x: &Tensor, p: &EnhancedWendlandParams) -> Result<(), ActivationError> {
    if let NormMode::ChannelNorm { axis } = p.mode {
        if axis >= x.rank() {
            return Err(ActivationError::Config(format!(
                "channel-norm axis {axis} does not exist in a tensor of shape {:?}",
                x.shape()
            )));
        }
    }
    Ok(())
}

pub fn enhanced_forward(x: &Tensor, p: &EnhancedWendlandParams) -> Result<Tensor, ActivationError> {
    check_axis(x, p)?;
    match p.mode {
        NormMode::Elementwise => Ok(x.map(|v| v * radial(v.abs(), p))),
        NormMode::ChannelNorm { axis } => {
            let norms = x.reduce_norm(axis)?;
            let (outer, len, inner) = x.split_axis(axis);
            let mut out = x.clone();
            let data = out.data_mut();
            for o in 0..outer {
                for i in 0..inner {
                    let g = radial(norms.data()[o * inner + i], p);
                    for a in 0..len {
                        data[(o * len + a) * inner + i] *= g;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Vector-Jacobian product of [`enhanced_forward`].
///
/// Returns the input gradient and the coefficient gradient in natural
/// coordinates, accumulated over all elements. Coefficients not marked
/// trainable get exactly zero.
pub fn enhanced_backward(
    x: &Tensor,
    upstream: &Tensor,
    p: &EnhancedWendlandParams,
) -> Result<(Tensor, RadialGrad), ActivationError> {
    if x.shape() != upstream.shape() {
        return Err(ActivationError::Shape {
            expected: x.shape().to_vec(),
            actual: upstream.shape().to_vec(),
        });
    }
    check_axis(x, p)?;
    let mut grad = RadialGrad::default();
    let mut dx = x.clone();
    match p.mode {
        NormMode::Elementwise => {
            for ((d, &xi), &u) in dx.data_mut().iter_mut().zip(x.data()).zip(upstream.data()) {
                let r = xi.abs();
                *d = u * (radial(r, p) + r * radial_dr(r, p));
                grad.scaled_add(u * xi, radial_dparams(r, p));
            }
        }
        NormMode::ChannelNorm { axis } => {
            let norms = x.reduce_norm(axis)?;
            let (outer, len, inner) = x.split_axis(axis);
            let (xs, us) = (x.data(), upstream.data());
            let out = dx.data_mut();
            for o in 0..outer {
                for i in 0..inner {
                    let r = norms.data()[o * inner + i];
                    let g = radial(r, p);
                    let at = |a: usize| (o * len + a) * inner + i;
                    let ux: f64 = (0..len).map(|a| us[at(a)] * xs[at(a)]).sum();
                    let cross = if r < CHANNEL_NORM_GUARD {
                        0.0
                    } else {
                        radial_dr(r, p) / r * ux
                    };
                    for a in 0..len {
                        out[at(a)] = us[at(a)] * g + xs[at(a)] * cross;
                    }
                    grad.scaled_add(ux, radial_dparams(r, p));
                }
            }
        }
    }
    let m = p.trainable;
    let grad = RadialGrad {
        alpha: if m.alpha { grad.alpha } else { 0.0 },
        lambda: if m.lambda { grad.lambda } else { 0.0 },
        beta: if m.beta { grad.beta } else { 0.0 },
        epsilon: if m.epsilon { grad.epsilon } else { 0.0 },
    };
    Ok((dx, grad))
}

//! Directional finite-difference checking of analytic derivatives.
//!
//! For a map `f: R^n -> R^m` and an analytic Jacobian-vector product `J(x)v`,
//! each probe draws a random unit direction `v` and compares `J(x)v` with the
//! central difference `(f(x + hv) - f(x - hv)) / 2h`. The error for one output
//! component is `|a - b| / max(1, |a|, |b|)`; the check reports the worst one.

use thiserror::Error;

use crate::rng::Rng;
use crate::tensor::Tensor;

/// Default relative step: `h = 1e-6 * max(1, |x|_inf)`.
pub const DEFAULT_STEP: f64 = 1e-6;

/// Default pass threshold on the reported relative error.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradCheckError {
    #[error("probe {probe}: function returned a non-finite value")]
    NonFinite { probe: usize },
    #[error("probe {probe}: analytic JVP has shape {analytic:?}, function output has shape {numeric:?}")]
    Shape {
        probe: usize,
        analytic: Vec<usize>,
        numeric: Vec<usize>,
    },
    #[error("step must be positive, got {0}")]
    BadStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub probes: usize,
    /// Relative step; the absolute step is `step * max(1, |x|_inf)`.
    pub step: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            probes: 16,
            step: DEFAULT_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    /// Index of the probe that produced `max_rel_error`.
    pub worst_probe: Option<usize>,
    pub probes_run: usize,
    pub probes_skipped: usize,
}

impl FdReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// Relative error `|a - b| / max(1, |a|, |b|)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Unit-length Gaussian direction shaped like `like`.
pub fn random_direction(like: &Tensor, rng: &mut Rng) -> Tensor {
    loop {
        let data = (0..like.len()).map(|_| rng.normal()).collect();
        let v = Tensor::new(like.shape(), data).expect("same shape");
        let n = v.data().iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.scale(1.0 / n);
        }
    }
}

pub fn finite_diff_check<F, J>(
    f: F,
    x: &Tensor,
    jvp: J,
    opts: FdOptions,
    rng: &mut Rng,
) -> Result<FdReport, GradCheckError>
where
    F: FnMut(&Tensor) -> Tensor,
    J: FnMut(&Tensor, &Tensor) -> Tensor,
{
    finite_diff_check_filtered(f, x, jvp, |_, _, _| true, opts, rng)
}

/// Like [`finite_diff_check`], but `accept(x, v, h)` may veto a probe (for
/// example when `x +- hv` straddles a kink of `f`). Vetoed probes are counted
/// in `probes_skipped` and contribute no error.
pub fn finite_diff_check_filtered<F, J, A>(
    mut f: F,
    x: &Tensor,
    mut jvp: J,
    mut accept: A,
    opts: FdOptions,
    rng: &mut Rng,
) -> Result<FdReport, GradCheckError>
where
    F: FnMut(&Tensor) -> Tensor,
    J: FnMut(&Tensor, &Tensor) -> Tensor,
    A: FnMut(&Tensor, &Tensor, f64) -> bool,
{
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(GradCheckError::BadStep(opts.step));
    }
    let h = opts.step * 1f64.max(x.max_abs());
    let mut report = FdReport {
        max_rel_error: 0.0,
        worst_probe: None,
        probes_run: 0,
        probes_skipped: 0,
    };
    for probe in 0..opts.probes {
        let v = random_direction(x, rng);
        if !accept(x, &v, h) {
            report.probes_skipped += 1;
            continue;
        }
        let step = v.scale(h);
        let plus = f(&x.add(&step).expect("same shape"));
        let minus = f(&x.sub(&step).expect("same shape"));
        if !plus.all_finite() || !minus.all_finite() {
            return Err(GradCheckError::NonFinite { probe });
        }
        let analytic = jvp(x, &v);
        if !analytic.all_finite() {
            return Err(GradCheckError::NonFinite { probe });
        }
        if analytic.shape() != plus.shape() {
            return Err(GradCheckError::Shape {
                probe,
                analytic: analytic.shape().to_vec(),
                numeric: plus.shape().to_vec(),
            });
        }
        for ((&p, &m), &a) in plus.data().iter().zip(minus.data()).zip(analytic.data()) {
            let numeric = (p - m) / (2.0 * h);
            let err = relative_error(a, numeric);
            if err > report.max_rel_error || report.worst_probe.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst_probe = Some(probe);
            }
        }
        report.probes_run += 1;
    }
    Ok(report)
}

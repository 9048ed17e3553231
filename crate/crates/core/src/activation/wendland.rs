//! Classical compactly supported Wendland functions in three dimensions.
//!
//! All three vanish identically for `r >= 1` and equal 1 at the origin.

use super::ActivationError;

fn check_radius(r: f64) -> Result<(), ActivationError> {
    if r >= 0.0 {
        Ok(())
    } else {
        Err(ActivationError::NegativeRadius(r))
    }
}

/// `phi_{3,0}(r) = (1 - r)_+^2`, continuous (C0).
pub fn wendland_c0(r: f64) -> Result<f64, ActivationError> {
    check_radius(r)?;
    Ok(c0(r))
}

/// `phi_{3,1}(r) = (1 - r)_+^4 (4r + 1)`, twice continuously differentiable.
pub fn wendland_c2(r: f64) -> Result<f64, ActivationError> {
    check_radius(r)?;
    Ok(c2(r))
}

/// `phi_{3,2}(r) = (1 - r)_+^6 (35r^2 + 18r + 3) / 3`, four times continuously
/// differentiable.
pub fn wendland_c4(r: f64) -> Result<f64, ActivationError> {
    check_radius(r)?;
    Ok(c4(r))
}

pub(crate) fn c0(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let t = 1.0 - r;
    t * t
}

pub(crate) fn c2(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    (1.0 - r).powi(4) * (4.0 * r + 1.0)
}

pub(crate) fn c4(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    (1.0 - r).powi(6) * (35.0 * r * r + 18.0 * r + 3.0) / 3.0
}

pub(crate) fn c0_dr(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    -2.0 * (1.0 - r)
}

pub(crate) fn c2_dr(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    -20.0 * r * (1.0 - r).powi(3)
}

pub(crate) fn c4_dr(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    -(56.0 / 3.0) * r * (1.0 - r).powi(5) * (5.0 * r + 1.0)
}

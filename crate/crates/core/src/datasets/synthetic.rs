use std::f64::consts::PI;

use crate::nn::Targets;
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::{Dataset, DatasetError};

pub const TOY_SAMPLES: usize = 1000;
pub const TOY_TRAIN_FRACTION: f64 = 0.7;
pub const MOONS_NOISE: f64 = 0.2;
pub const CIRCLES_NOISE: f64 = 0.1;
pub const CIRCLES_FACTOR: f64 = 0.5;

/// `n` points with `x` uniform on `range` and `y = sin x + N(0, noise_sd)`.
pub fn sample_sine(n: usize, range: (f64, f64), noise_sd: f64, rng: &mut Rng) -> Result<Dataset, DatasetError> {
    let (lo, hi) = range;
    if n == 0 {
        return Err(DatasetError::Config("sine sample count must be at least 1".into()));
    }
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(DatasetError::Config(format!("invalid sine range [{lo}, {hi}]")));
    }
    check_noise(noise_sd)?;
    let x: Vec<f64> = (0..n).map(|_| rng.uniform_in(lo, hi)).collect();
    let y: Vec<f64> = x.iter().map(|&v| v.sin() + noise_sd * rng.normal()).collect();
    Dataset::new(
        Tensor::new(&[n, 1], x)?,
        Targets::Values(Tensor::new(&[n, 1], y)?),
        format!("sample_sine(n={n}, range=[{lo:?}, {hi:?}], noise_sd={noise_sd:?}, seed={})", rng.seed()),
    )
}

fn check_noise(noise_sd: f64) -> Result<(), DatasetError> {
    if noise_sd >= 0.0 && noise_sd.is_finite() {
        Ok(())
    } else {
        Err(DatasetError::Config(format!("noise_sd must be non-negative, got {noise_sd}")))
    }
}

/// Noise-free moons point for parameter `t` in `[0, pi]`: class 0 lies on the
/// upper arc `(cos t, sin t)`, class 1 on the lower arc `(1 - cos t, 1/2 - sin t)`.
pub fn moons_point(class: usize, t: f64) -> [f64; 2] {
    if class == 0 {
        [t.cos(), t.sin()]
    } else {
        [1.0 - t.cos(), 0.5 - t.sin()]
    }
}

/// Noise-free circles point at angle `t`: radius 1 for class 0, `factor` for class 1.
pub fn circles_point(class: usize, t: f64, factor: f64) -> [f64; 2] {
    let r = if class == 0 { 1.0 } else { factor };
    [r * t.cos(), r * t.sin()]
}

/// Class 0 gets `ceil(n / 2)` rows (listed first), class 1 the rest.
fn two_class<F>(n: usize, noise_sd: f64, rng: &mut Rng, point: F, provenance: String) -> Result<Dataset, DatasetError>
where
    F: Fn(usize, &mut Rng) -> [f64; 2],
{
    let n0 = n - n / 2;
    let mut x = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = usize::from(i >= n0);
        let [a, b] = point(class, rng);
        x.push(a + noise_sd * rng.normal());
        x.push(b + noise_sd * rng.normal());
        labels.push(class);
    }
    Dataset::new(Tensor::new(&[n, 2], x)?, Targets::Classes(labels), provenance)
}

/// Two interleaving half circles; see [`moons_point`].
pub fn make_moons(n: usize, noise_sd: f64, rng: &mut Rng) -> Result<Dataset, DatasetError> {
    if n < 2 {
        return Err(DatasetError::Config(format!("moons needs at least 2 samples, got {n}")));
    }
    check_noise(noise_sd)?;
    let provenance = format!("make_moons(n={n}, noise_sd={noise_sd:?}, seed={})", rng.seed());
    two_class(n, noise_sd, rng, |c, r| moons_point(c, r.uniform_in(0.0, PI)), provenance)
}

/// Concentric circles; see [`circles_point`]. `factor` must lie in `(0, 1)`.
pub fn make_circles(n: usize, noise_sd: f64, factor: f64, rng: &mut Rng) -> Result<Dataset, DatasetError> {
    if n < 2 {
        return Err(DatasetError::Config(format!("circles needs at least 2 samples, got {n}")));
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(DatasetError::Config(format!("circles factor must lie in (0, 1), got {factor}")));
    }
    check_noise(noise_sd)?;
    let provenance = format!(
        "make_circles(n={n}, noise_sd={noise_sd:?}, factor={factor:?}, seed={})",
        rng.seed()
    );
    two_class(n, noise_sd, rng, |c, r| circles_point(c, r.uniform_in(0.0, 2.0 * PI), factor), provenance)
}

//! Dense row-major `f64` tensors.
//!
//! Operations allocate their outputs and never mutate their inputs. Shape
//! mismatches are reported as [`TensorError`]; the only broadcast supported is
//! adding a bias vector to every row of a matrix ([`Tensor::add_row`]).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{op}: axis {axis} out of range for shape {shape:?}")]
    InvalidAxis {
        op: &'static str,
        axis: usize,
        shape: Vec<usize>,
    },
    #[error("{op}: expected a rank-{expected} tensor, got shape {shape:?}")]
    Rank {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("shape {shape:?} holds {expected} elements but {actual} were supplied")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("zero-sized dimension in shape {0:?}")]
    ZeroDim(Vec<usize>),
}

pub type Result<T> = std::result::Result<T, TensorError>;

#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.iter().any(|&d| d == 0) {
        return Err(TensorError::ZeroDim(shape.to_vec()));
    }
    Ok(shape.iter().product())
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected = check_shape(shape)?;
        if expected != data.len() {
            return Err(TensorError::DataLength {
                shape: shape.to_vec(),
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Panics on a zero-sized dimension.
    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = check_shape(shape).expect("tensor dimensions must be positive");
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, 1.0)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(TensorError::ShapeMismatch {
                    op: "from_rows",
                    left: vec![cols],
                    right: vec![r.len()],
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(&[rows.len(), cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Product of all dimensions after the first.
    pub fn cols(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n = check_shape(shape)?;
        if n != self.data.len() {
            return Err(TensorError::DataLength {
                shape: shape.to_vec(),
                expected: n,
                actual: self.data.len(),
            });
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Gathers the listed rows (first-axis slices) into a new tensor.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let c = self.cols();
        let mut data = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let mut shape = self.shape.clone();
        shape[0] = indices.len();
        Self::new(&shape, data)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        self.same_shape("dot", other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    fn same_shape(&self, op: &'static str, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(TensorError::ShapeMismatch {
                op,
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, op: &'static str, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_shape(op, other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Self> {
        self.zip_with("add", other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Self> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Self> {
        self.zip_with("mul", other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Adds `bias` (shape `[n]`) to every row of a `[m, n]` matrix.
    pub fn add_row(&self, bias: &Tensor) -> Result<Self> {
        if self.rank() != 2 || bias.rank() != 1 || bias.shape[0] != self.shape[1] {
            return Err(TensorError::ShapeMismatch {
                op: "add_row",
                left: self.shape.clone(),
                right: bias.shape.clone(),
            });
        }
        let n = self.shape[1];
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(n) {
            for (v, b) in row.iter_mut().zip(&bias.data) {
                *v += b;
            }
        }
        Ok(out)
    }

    /// Column sums of a matrix; shape `[n]`.
    pub fn sum_rows(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(TensorError::Rank {
                op: "sum_rows",
                expected: 2,
                shape: self.shape.clone(),
            });
        }
        let n = self.shape[1];
        let mut out = vec![0.0; n];
        for row in self.data.chunks_exact(n) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        Self::new(&[n], out)
    }

    pub fn transpose(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(TensorError::Rank {
                op: "transpose",
                expected: 2,
                shape: self.shape.clone(),
            });
        }
        let (m, n) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = self.data[i * n + j];
            }
        }
        Self::new(&[n, m], out)
    }

    /// Matrix product. Each output entry accumulates its terms in increasing
    /// inner-index order, so results are reproducible bit-for-bit.
    pub fn matmul(&self, other: &Tensor) -> Result<Self> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[0] {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let acc = &mut out[i * n..(i + 1) * n];
            let a_row = &self.data[i * k..(i + 1) * k];
            for (p, &a) in a_row.iter().enumerate() {
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in acc.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self::new(&[m, n], out)
    }

    /// Euclidean norm along `axis`; the output keeps that axis with length 1.
    pub fn reduce_norm(&self, axis: usize) -> Result<Self> {
        if axis >= self.rank() {
            return Err(TensorError::InvalidAxis {
                op: "reduce_norm",
                axis,
                shape: self.shape.clone(),
            });
        }
        let (outer, len, inner) = self.split_axis(axis);
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for i in 0..inner {
                let mut s = 0.0;
                for a in 0..len {
                    let v = self.data[(o * len + a) * inner + i];
                    s += v * v;
                }
                out[o * inner + i] = s.sqrt();
            }
        }
        let mut shape = self.shape.clone();
        shape[axis] = 1;
        Self::new(&shape, out)
    }

    /// Decomposes the shape around `axis` into `(outer, axis_len, inner)` so
    /// that element `(o, a, i)` lives at `(o * axis_len + a) * inner + i`.
    pub fn split_axis(&self, axis: usize) -> (usize, usize, usize) {
        let outer = self.shape[..axis].iter().product();
        let inner = self.shape[axis + 1..].iter().product();
        (outer, self.shape[axis], inner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random(shape: &[usize], rng: &mut Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn identity_times_x() {
        let mut rng = Rng::new(3);
        let x = random(&[3, 5], &mut rng);
        assert_eq!(Tensor::identity(3).matmul(&x).unwrap(), x);
    }

    #[test]
    fn small_product_by_hand() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), &[2, 1]);
        assert_eq!(c.data(), &[3.0, 7.0]);
    }

    #[test]
    fn zeros_product() {
        let mut rng = Rng::new(4);
        let c = Tensor::zeros(&[2, 3]).matmul(&random(&[3, 4], &mut rng)).unwrap();
        assert_eq!(c, Tensor::zeros(&[2, 4]));
    }

    #[test]
    fn matmul_rejects_inner_mismatch() {
        let err = Tensor::zeros(&[2, 3]).matmul(&Tensor::zeros(&[2, 3])).unwrap_err();
        assert!(matches!(err, TensorError::ShapeMismatch { op: "matmul", .. }));
    }

    #[test]
    fn transpose_of_product() {
        let mut rng = Rng::new(17);
        let a = random(&[5, 4], &mut rng);
        let b = random(&[4, 3], &mut rng);
        let lhs = a.matmul(&b).unwrap().transpose().unwrap();
        let rhs = b.transpose().unwrap().matmul(&a.transpose().unwrap()).unwrap();
        assert_eq!(lhs.shape(), rhs.shape());
        for (x, y) in lhs.data().iter().zip(rhs.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn elementwise_identities() {
        let mut rng = Rng::new(8);
        let x = random(&[4, 2], &mut rng);
        assert_eq!(x.add(&Tensor::zeros(&[4, 2])).unwrap(), x);
        assert_eq!(x.mul(&Tensor::ones(&[4, 2])).unwrap(), x);
        let s = Tensor::new(&[3], vec![1.0, 2.0, 3.0]).unwrap().scale(2.0);
        assert_eq!(s.data(), &[2.0, 4.0, 6.0]);
        assert!(x.add(&Tensor::zeros(&[2, 4])).is_err());
    }

    #[test]
    fn bias_broadcast_over_rows() {
        let x = Tensor::zeros(&[3, 2]);
        let b = Tensor::new(&[2], vec![1.0, -1.0]).unwrap();
        let y = x.add_row(&b).unwrap();
        assert_eq!(y.data(), &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        assert_eq!(y.sum_rows().unwrap().data(), &[3.0, -3.0]);
        assert!(x.add_row(&Tensor::zeros(&[3])).is_err());
    }

    #[test]
    fn norm_three_four_five() {
        let x = Tensor::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let n = x.reduce_norm(1).unwrap();
        assert_eq!(n.shape(), &[1, 1]);
        assert_eq!(n.data(), &[5.0]);
    }

    #[test]
    fn norm_of_zeros_and_basis_vector() {
        assert_eq!(
            Tensor::zeros(&[2, 3]).reduce_norm(1).unwrap(),
            Tensor::zeros(&[2, 1])
        );
        let e = Tensor::new(&[4], vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(e.reduce_norm(0).unwrap().data(), &[1.0]);
    }

    #[test]
    fn norm_along_middle_axis() {
        let x = Tensor::new(&[2, 2, 2], vec![3.0, 0.0, 4.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let n = x.reduce_norm(1).unwrap();
        assert_eq!(n.shape(), &[2, 1, 2]);
        assert_eq!(n.data(), &[5.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn norm_rejects_bad_axis() {
        assert!(matches!(
            Tensor::zeros(&[2, 3]).reduce_norm(2),
            Err(TensorError::InvalidAxis { .. })
        ));
    }

    #[test]
    fn construction_checks_length() {
        assert!(Tensor::new(&[2, 2], vec![0.0; 3]).is_err());
        assert!(Tensor::new(&[0, 2], vec![]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn norm_non_negative_and_zero_iff_zero(v in proptest::collection::vec(-5.0f64..5.0, 1..12)) {
            let n = v.len();
            let t = Tensor::new(&[1, n], v.clone()).unwrap();
            let r = t.reduce_norm(1).unwrap().data()[0];
            proptest::prop_assert!(r >= 0.0);
            proptest::prop_assert_eq!(r == 0.0, v.iter().all(|&x| x == 0.0));
        }
    }
}

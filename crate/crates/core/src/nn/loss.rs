use crate::tensor::Tensor;

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean over every element of `(pred - target)^2`.
    Mse,
    /// Mean over rows of `-log softmax(pred)[class]`.
    SoftmaxCrossEntropy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Values(Tensor),
    Classes(Vec<usize>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Values(t) => t.rows(),
            Targets::Classes(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Result<Targets, NnError> {
        Ok(match self {
            Targets::Values(t) => Targets::Values(t.select_rows(rows)?),
            Targets::Classes(c) => Targets::Classes(rows.iter().map(|&i| c[i]).collect()),
        })
    }
}

/// Loss value and its gradient with respect to `pred`.
pub fn loss_eval(kind: LossKind, pred: &Tensor, target: &Targets) -> Result<(f64, Tensor), NnError> {
    match (kind, target) {
        (LossKind::Mse, Targets::Values(t)) => {
            if t.shape() != pred.shape() {
                return Err(NnError::Contract(format!(
                    "prediction shape {:?} does not match target shape {:?}",
                    pred.shape(),
                    t.shape()
                )));
            }
            let n = pred.len().max(1) as f64;
            let diff = pred.sub(t)?;
            let value = diff.data().iter().map(|d| d * d).sum::<f64>() / n;
            Ok((value, diff.scale(2.0 / n)))
        }
        (LossKind::SoftmaxCrossEntropy, Targets::Classes(classes)) => {
            if pred.rank() != 2 || pred.rows() != classes.len() {
                return Err(NnError::Contract(format!(
                    "{} class labels for logits of shape {:?}",
                    classes.len(),
                    pred.shape()
                )));
            }
            let (rows, cols) = (pred.rows(), pred.cols());
            let mut grad = vec![0.0; rows * cols];
            let mut total = 0.0;
            for (i, &c) in classes.iter().enumerate() {
                if c >= cols {
                    return Err(NnError::Contract(format!(
                        "class index {c} out of range for {cols} classes (row {i})"
                    )));
                }
                let row = pred.row(i);
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = row.iter().map(|v| (v - m).exp()).sum();
                let lse = m + sum.ln();
                total += lse - row[c];
                let g = &mut grad[i * cols..(i + 1) * cols];
                for (gj, v) in g.iter_mut().zip(row) {
                    *gj = (v - lse).exp() / rows as f64;
                }
                g[c] -= 1.0 / rows as f64;
            }
            Ok((total / rows.max(1) as f64, Tensor::new(pred.shape(), grad)?))
        }
        (LossKind::Mse, Targets::Classes(_)) => Err(NnError::Contract("MSE needs real-valued targets".into())),
        (LossKind::SoftmaxCrossEntropy, Targets::Values(_)) => {
            Err(NnError::Contract("cross-entropy needs class-index targets".into()))
        }
    }
}

/// Fraction of rows whose arg-max matches the class label. Ties go to the
/// lowest index.
pub fn accuracy(logits: &Tensor, classes: &[usize]) -> f64 {
    if classes.is_empty() {
        return 0.0;
    }
    let hits = classes
        .iter()
        .enumerate()
        .filter(|&(i, &c)| {
            let row = logits.row(i);
            let best = (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b });
            best == c
        })
        .count();
    hits as f64 / classes.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{finite_diff_check, FdOptions};
    use crate::rng::Rng;

    #[test]
    fn mse_of_exact_prediction_is_zero() {
        let p = Tensor::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let (v, g) = loss_eval(LossKind::Mse, &p, &Targets::Values(p.clone())).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn uniform_logits_give_ln2() {
        let p = Tensor::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let (v, _) = loss_eval(LossKind::SoftmaxCrossEntropy, &p, &Targets::Classes(vec![0])).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn huge_logits_stay_finite() {
        let p = Tensor::from_rows(&[vec![1000.0, -1000.0, 0.0]]).unwrap();
        let (v, g) = loss_eval(LossKind::SoftmaxCrossEntropy, &p, &Targets::Classes(vec![1])).unwrap();
        assert!((v - 2000.0).abs() < 1e-9);
        assert!(g.all_finite());
    }

    #[test]
    fn class_out_of_range() {
        let p = Tensor::zeros(&[2, 3]);
        assert!(loss_eval(LossKind::SoftmaxCrossEntropy, &p, &Targets::Classes(vec![0, 3])).is_err());
        assert!(loss_eval(LossKind::Mse, &p, &Targets::Values(Tensor::zeros(&[3, 2]))).is_err());
    }

    #[test]
    fn losses_are_non_negative() {
        let mut rng = Rng::new(9);
        for _ in 0..50 {
            let p = Tensor::new(&[4, 3], (0..12).map(|_| 5.0 * rng.normal()).collect()).unwrap();
            let t = Tensor::new(&[4, 3], (0..12).map(|_| rng.normal()).collect()).unwrap();
            let c: Vec<usize> = (0..4).map(|_| rng.index(3)).collect();
            assert!(loss_eval(LossKind::Mse, &p, &Targets::Values(t)).unwrap().0 >= 0.0);
            assert!(loss_eval(LossKind::SoftmaxCrossEntropy, &p, &Targets::Classes(c)).unwrap().0 >= 0.0);
        }
    }

    fn check(kind: LossKind, target: Targets, seed: u64) {
        let mut rng = Rng::new(seed);
        let p = Tensor::new(&[4, 3], (0..12).map(|_| rng.normal()).collect()).unwrap();
        let value = |x: &Tensor| Tensor::new(&[1], vec![loss_eval(kind, x, &target).unwrap().0]).unwrap();
        let jvp = |x: &Tensor, v: &Tensor| {
            let g = loss_eval(kind, x, &target).unwrap().1;
            Tensor::new(&[1], vec![g.dot(v).unwrap()]).unwrap()
        };
        let report = finite_diff_check(value, &p, jvp, FdOptions { probes: 50, step: 1e-6 }, &mut rng).unwrap();
        assert!(report.passes(1e-7), "{kind:?}: {report:?}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(10);
        let t = Tensor::new(&[4, 3], (0..12).map(|_| rng.normal()).collect()).unwrap();
        check(LossKind::Mse, Targets::Values(t), 11);
        check(LossKind::SoftmaxCrossEntropy, Targets::Classes(vec![0, 2, 1, 2]), 12);
    }

    #[test]
    fn accuracy_counts_argmax_hits() {
        let p = Tensor::from_rows(&[vec![0.1, 0.9], vec![2.0, -1.0], vec![0.0, 0.0]]).unwrap();
        assert!((accuracy(&p, &[1, 1, 0]) - 2.0 / 3.0).abs() < 1e-15);
    }
}

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::network::OutputCurvature;
use crate::tensor::{dot, DenseMatrix};

/// Training losses; both are weighted squared errors, convex in the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `(1/B) sum_i ||y_i - t_i||^2`
    Mse,
    /// `(1/B) sum_i ||y_i - t_i||^2 / ||t_i||^2`
    MeanSquaredRelL2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Mse,
    MeanSquaredRelL2,
    /// `(1/N) sum_i ||y_i - t_i|| / ||t_i||`
    MeanRelL2,
}

impl LossKind {
    pub fn is_relative(self) -> bool {
        matches!(self, LossKind::MeanSquaredRelL2)
    }

    pub fn as_metric(self) -> MetricKind {
        match self {
            LossKind::Mse => MetricKind::Mse,
            LossKind::MeanSquaredRelL2 => MetricKind::MeanSquaredRelL2,
        }
    }
}

impl MetricKind {
    pub fn is_relative(self) -> bool {
        !matches!(self, MetricKind::Mse)
    }

    /// Evaluates the metric of predictions against targets.
    pub fn evaluate(self, pred: &DenseMatrix, targets: &DenseMatrix) -> Result<f64> {
        if pred.shape() != targets.shape() {
            return Err(Error::Dimension(format!(
                "predictions {:?} vs targets {:?}",
                pred.shape(),
                targets.shape()
            )));
        }
        let n = pred.rows();
        if n == 0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for i in 0..n {
            let err2 = squared_distance(pred.row(i), targets.row(i));
            total += match self {
                MetricKind::Mse => err2,
                MetricKind::MeanSquaredRelL2 | MetricKind::MeanRelL2 => {
                    let t2 = dot(targets.row(i), targets.row(i));
                    if t2 == 0.0 {
                        return Err(Error::ZeroNormTarget { row: i });
                    }
                    if self == MetricKind::MeanRelL2 {
                        (err2 / t2).sqrt()
                    } else {
                        err2 / t2
                    }
                }
            };
        }
        Ok(total / n as f64)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Returns the first zero-norm target row, if any.
pub(crate) fn first_zero_row(targets: &DenseMatrix) -> Option<usize> {
    (0..targets.rows()).find(|&i| targets.row(i).iter().all(|&v| v == 0.0))
}

/// A loss bound to one batch of targets: `(1/B) sum_i w_i ||y_i - t_i||^2`.
#[derive(Debug, Clone)]
pub(crate) struct BatchLoss {
    targets: DenseMatrix,
    /// `w_i / B`
    weights: Vec<f64>,
}

impl BatchLoss {
    pub fn new(kind: LossKind, targets: DenseMatrix) -> Result<Self> {
        let b = targets.rows().max(1) as f64;
        let mut weights = Vec::with_capacity(targets.rows());
        for i in 0..targets.rows() {
            let w = match kind {
                LossKind::Mse => 1.0,
                LossKind::MeanSquaredRelL2 => {
                    let t2 = dot(targets.row(i), targets.row(i));
                    if t2 == 0.0 {
                        return Err(Error::ZeroNormTarget { row: i });
                    }
                    1.0 / t2
                }
            };
            weights.push(w / b);
        }
        Ok(BatchLoss { targets, weights })
    }

    pub fn rows(&self) -> usize {
        self.targets.rows()
    }

    pub fn value(&self, pred: &DenseMatrix) -> f64 {
        (0..pred.rows())
            .map(|i| self.weights[i] * squared_distance(pred.row(i), self.targets.row(i)))
            .sum()
    }
}

impl OutputCurvature for BatchLoss {
    fn cotangent(&self, y: &DenseMatrix) -> DenseMatrix {
        let mut out = y.clone();
        for i in 0..y.rows() {
            let s = 2.0 * self.weights[i];
            for (o, t) in out.row_mut(i).iter_mut().zip(self.targets.row(i)) {
                *o = s * (*o - t);
            }
        }
        out
    }

    fn hessian_apply(&self, dy: &DenseMatrix) -> DenseMatrix {
        let mut out = dy.clone();
        for i in 0..dy.rows() {
            let s = 2.0 * self.weights[i];
            out.row_mut(i).iter_mut().for_each(|o| *o *= s);
        }
        out
    }
}

macro_rules! string_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($ty),
                        [$($name),+].join(", ")
                    )),
                }
            }
        }
    };
}

string_enum!(LossKind { Mse => "mse", MeanSquaredRelL2 => "mean_squared_rel_l2" });
string_enum!(MetricKind { Mse => "mse", MeanSquaredRelL2 => "mean_squared_rel_l2", MeanRelL2 => "mean_rel_l2" });

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn loss_values() {
        let mse = BatchLoss::new(LossKind::Mse, m(&[vec![0.0, 0.0]])).unwrap();
        assert_eq!(mse.value(&m(&[vec![1.0, 2.0]])), 5.0);
        let rel = BatchLoss::new(LossKind::MeanSquaredRelL2, m(&[vec![1.0, 0.0]])).unwrap();
        assert_eq!(rel.value(&m(&[vec![2.0, 0.0]])), 1.0);
        assert_eq!(rel.value(&m(&[vec![1.0, 0.0]])), 0.0);
        assert!(matches!(
            BatchLoss::new(LossKind::MeanSquaredRelL2, m(&[vec![1.0], vec![0.0]])),
            Err(Error::ZeroNormTarget { row: 1 })
        ));
    }

    #[test]
    fn mse_cotangent_is_scaled_residual() {
        let t = m(&[vec![1.0, 1.0], vec![0.0, 2.0]]);
        let loss = BatchLoss::new(LossKind::Mse, t).unwrap();
        let c = loss.cotangent(&m(&[vec![2.0, 1.0], vec![0.0, 0.0]]));
        // (2/B)(y - t) with B = 2
        assert_eq!(c.data(), &[1.0, 0.0, 0.0, -2.0]);
    }

    #[test]
    fn metrics() {
        let t = m(&[vec![0.0, 4.0]]);
        assert_eq!(MetricKind::MeanRelL2.evaluate(&m(&[vec![0.0, 3.0]]), &t).unwrap(), 0.25);
        let t2 = m(&[vec![1.0], vec![1.0]]);
        let p2 = m(&[vec![1.1], vec![0.7]]);
        let v = MetricKind::MeanRelL2.evaluate(&p2, &t2).unwrap();
        assert!((v - 0.2).abs() < 1e-15);
        for kind in [MetricKind::Mse, MetricKind::MeanSquaredRelL2, MetricKind::MeanRelL2] {
            assert_eq!(kind.evaluate(&t, &t).unwrap(), 0.0);
        }
        assert!(MetricKind::MeanRelL2.evaluate(&m(&[vec![1.0]]), &m(&[vec![0.0]])).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("mean_rel_l2".parse::<MetricKind>().unwrap(), MetricKind::MeanRelL2);
        assert_eq!(LossKind::MeanSquaredRelL2.to_string(), "mean_squared_rel_l2");
        assert!("l1".parse::<LossKind>().is_err());
    }
}

use super::{proba_from_positive, sample_weights, ModelError, PredictorSpec, Result};
use crate::linalg::solve;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView2};

/// `P(y=1 | x) = σ(w·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel<T> {
    weights: Array1<T>,
    bias: T,
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl<T: Scalar> LogisticModel<T> {
    pub fn from_parameters(weights: Array1<T>, bias: T) -> Self {
        Self { weights, bias }
    }

    pub fn weights(&self) -> &Array1<T> {
        &self.weights
    }

    pub fn bias(&self) -> T {
        self.bias
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Newton iterations with backtracking on
    /// `mean weighted log-loss + l2/2 · ‖w‖²` (bias unpenalized).
    pub fn fit(spec: &PredictorSpec, x: ArrayView2<'_, T>, y: &[u8]) -> Result<Self> {
        let d = x.ncols();
        let weights = sample_weights::<T>(y, spec.class_weighting);
        let wsum: T = weights.iter().copied().sum();
        let l2 = T::of(spec.l2);
        // ridge on the bias keeps the Hessian invertible once probabilities saturate
        let jitter = T::of(1e-10);

        let objective = |theta: &[T]| -> T {
            let mut loss = T::zero();
            for (r, row) in x.rows().into_iter().enumerate() {
                let z = row.iter().zip(theta).map(|(&a, &b)| a * b).sum::<T>() + theta[d];
                let yr = T::of(f64::from(y[r]));
                loss = loss + weights[r] * (softplus(z) - yr * z);
            }
            let penalty: T = theta[..d].iter().map(|&w| w * w).sum();
            loss / wsum + l2 * penalty / T::of(2.0)
        };

        let mut theta = vec![T::zero(); d + 1];
        let mut current = objective(&theta);
        for _ in 0..100 {
            let mut grad = vec![T::zero(); d + 1];
            let mut hess = Array2::<T>::zeros((d + 1, d + 1));
            for (r, row) in x.rows().into_iter().enumerate() {
                let z = row.iter().zip(&theta).map(|(&a, &b)| a * b).sum::<T>() + theta[d];
                let p = sigmoid(z);
                let yr = T::of(f64::from(y[r]));
                let g = weights[r] * (p - yr) / wsum;
                let h = weights[r] * p * (T::one() - p) / wsum;
                for i in 0..=d {
                    let xi = if i < d { row[i] } else { T::one() };
                    grad[i] = grad[i] + g * xi;
                    for j in 0..=i {
                        let xj = if j < d { row[j] } else { T::one() };
                        hess[[i, j]] = hess[[i, j]] + h * xi * xj;
                    }
                }
            }
            for i in 0..=d {
                for j in 0..i {
                    hess[[j, i]] = hess[[i, j]];
                }
                if i < d {
                    grad[i] = grad[i] + l2 * theta[i];
                    hess[[i, i]] = hess[[i, i]] + l2;
                }
                hess[[i, i]] = hess[[i, i]] + jitter;
            }
            let gnorm = grad.iter().map(|g| g.abs()).fold(T::zero(), T::max);
            if gnorm < T::of(1e-10) {
                break;
            }
            let step = solve(&hess, &grad).ok_or_else(|| {
                ModelError::Input("logistic regression Hessian is singular".into())
            })?;
            let mut t = T::one();
            let mut improved = false;
            for _ in 0..40 {
                let cand: Vec<T> = theta.iter().zip(&step).map(|(&a, &s)| a - t * s).collect();
                let value = objective(&cand);
                if value <= current {
                    theta = cand;
                    improved = current - value > T::epsilon() * current.abs();
                    current = value;
                    break;
                }
                t = t / T::of(2.0);
            }
            if !improved {
                break;
            }
        }
        Ok(Self {
            weights: Array1::from(theta[..d].to_vec()),
            bias: theta[d],
        })
    }

    pub fn decision_function(&self, x: ArrayView2<'_, T>) -> Array1<T> {
        x.dot(&self.weights).mapv(|z| z + self.bias)
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        proba_from_positive(self.decision_function(x).iter().map(|&z| sigmoid(z)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::argmax_labels;
    use ndarray::array;

    #[test]
    fn zero_weights_give_half() {
        let m = LogisticModel::from_parameters(Array1::<f64>::zeros(3), 0.0);
        let p = m.predict_proba(array![[1.0, -2.0, 5.0], [0.0, 0.0, 0.0]].view());
        for r in p.rows() {
            assert_eq!(r.to_vec(), vec![0.5, 0.5]);
        }
        assert_eq!(argmax_labels(&p), vec![1, 1]);
    }

    #[test]
    fn separable_1d() {
        let x = array![
            [-3.0_f64],
            [-2.0],
            [-1.5],
            [-0.5],
            [0.4],
            [1.0],
            [2.5],
            [3.0]
        ];
        let y = [0, 0, 0, 0, 1, 1, 1, 1];
        let m = LogisticModel::fit(&PredictorSpec::logistic(), x.view(), &y).unwrap();
        assert_eq!(argmax_labels(&m.predict_proba(x.view())), y.to_vec());
        assert!(m.weights()[0] > 0.0);
    }

    #[test]
    fn overlapping_classes_converge_to_stationary_point() {
        let x = array![[0.0_f64], [1.0], [2.0], [3.0], [1.5], [2.5]];
        let y = [0, 0, 1, 1, 1, 0];
        let spec = PredictorSpec {
            l2: 0.0,
            ..PredictorSpec::logistic()
        };
        let m = LogisticModel::fit(&spec, x.view(), &y).unwrap();
        // gradient of the mean log-loss vanishes at the optimum
        let p = m.predict_proba(x.view());
        let (mut gw, mut gb) = (0.0, 0.0);
        for r in 0..6 {
            let e = p[[r, 1]] - f64::from(y[r]);
            gw += e * x[[r, 0]];
            gb += e;
        }
        assert!(gw.abs() < 1e-8 && gb.abs() < 1e-8);
    }
}

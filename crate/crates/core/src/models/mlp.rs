//! One-hidden-layer perceptron: tanh hidden units, two-way softmax output,
//! cross-entropy loss with L2 penalty, mini-batch Adam.

use super::{check_training, proba_from_positive, sample_weights, PredictorSpec, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const NO_CHANGE_EPOCHS: usize = 20;
const LOSS_TOL: f64 = 1e-6;

/// Network weights. `w1` is hidden × input, `w2` is 2 × hidden.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    pub w2: Array2<T>,
    pub b2: Array1<T>,
}

impl<T: Scalar> MlpParams<T> {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            w1: Array2::zeros((hidden, inputs)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((2, hidden)),
            b2: Array1::zeros(2),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(inputs, hidden);
        let b1 = (6.0 / (inputs + hidden) as f64).sqrt();
        let b2 = (6.0 / (hidden + 2) as f64).sqrt();
        p.w1.mapv_inplace(|_| T::of(rng.gen_range(-b1..b1)));
        p.w2.mapv_inplace(|_| T::of(rng.gen_range(-b2..b2)));
        p
    }

    /// Flattened as `w1, b1, w2, b2` (row-major).
    pub fn to_vec(&self) -> Vec<T> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .copied()
            .collect()
    }

    pub fn from_vec(inputs: usize, hidden: usize, v: &[T]) -> Self {
        let mut p = Self::zeros(inputs, hidden);
        let mut it = v.iter().copied();
        for x in
            p.w1.iter_mut()
                .chain(p.b1.iter_mut())
                .chain(p.w2.iter_mut())
                .chain(p.b2.iter_mut())
        {
            *x = it.next().expect("parameter vector too short");
        }
        p
    }

    pub fn len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn hidden(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        let mut h = x.dot(&self.w1.t()) + self.b1.view().insert_axis(Axis(0));
        h.mapv_inplace(T::tanh);
        h
    }

    /// Row-wise softmax over the two logits.
    fn forward(&self, x: ArrayView2<'_, T>) -> (Array2<T>, Array2<T>) {
        let h = self.hidden(x);
        let mut out = h.dot(&self.w2.t()) + self.b2.view().insert_axis(Axis(0));
        for mut row in out.rows_mut() {
            let m = row[0].max(row[1]);
            let e0 = (row[0] - m).exp();
            let e1 = (row[1] - m).exp();
            let s = e0 + e1;
            row[0] = e0 / s;
            row[1] = e1 / s;
        }
        (h, out)
    }
}

/// Weighted mean cross-entropy plus `l2/(2·Σw)·(‖W1‖² + ‖W2‖²)` and its
/// gradient with respect to every parameter.
pub fn mlp_loss_and_gradient<T: Scalar>(
    params: &MlpParams<T>,
    x: ArrayView2<'_, T>,
    y: &[u8],
    weights: &[T],
    l2: T,
) -> (T, MlpParams<T>) {
    let (h, proba) = params.forward(x);
    let wsum: T = weights.iter().copied().sum();
    let tiny = T::min_positive_value();
    let mut loss = T::zero();
    // dL/dlogits
    let mut delta2 = proba.clone();
    for (r, &label) in y.iter().enumerate() {
        let p = proba[[r, label as usize]].max(tiny);
        loss = loss - weights[r] * p.ln();
        delta2[[r, label as usize]] = delta2[[r, label as usize]] - T::one();
        let w = weights[r] / wsum;
        delta2[[r, 0]] = delta2[[r, 0]] * w;
        delta2[[r, 1]] = delta2[[r, 1]] * w;
    }
    let sq: T = params
        .w1
        .iter()
        .chain(params.w2.iter())
        .map(|&v| v * v)
        .sum();
    loss = loss / wsum + l2 * sq / (T::of(2.0) * wsum);

    let gw2 = delta2.t().dot(&h) + &params.w2.mapv(|v| v * l2 / wsum);
    let gb2 = delta2.sum_axis(Axis(0));
    let mut delta1 = delta2.dot(&params.w2);
    delta1.zip_mut_with(&h, |d, &hv| *d = *d * (T::one() - hv * hv));
    let gw1 = delta1.t().dot(&x) + &params.w1.mapv(|v| v * l2 / wsum);
    let gb1 = delta1.sum_axis(Axis(0));
    (
        loss,
        MlpParams {
            w1: gw1,
            b1: gb1,
            w2: gw2,
            b2: gb2,
        },
    )
}

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
    lr: T,
}

impl<T: Scalar> Adam<T> {
    fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
            lr: T::of(lr),
        }
    }

    fn step(&mut self, theta: &mut [T], grad: &[T]) {
        self.t += 1;
        let (b1, b2) = (T::of(BETA1), T::of(BETA2));
        let lr_t = self.lr * (T::one() - b2.powi(self.t)).sqrt() / (T::one() - b1.powi(self.t));
        let eps = T::of(ADAM_EPS);
        for k in 0..theta.len() {
            self.m[k] = b1 * self.m[k] + (T::one() - b1) * grad[k];
            self.v[k] = b2 * self.v[k] + (T::one() - b2) * grad[k] * grad[k];
            theta[k] = theta[k] - lr_t * self.m[k] / (self.v[k].sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    params: MlpParams<T>,
    epochs_run: usize,
    final_loss: T,
}

impl<T: Scalar> MlpModel<T> {
    /// Trains for up to `spec.epochs` epochs, stopping early once the epoch
    /// loss has failed to improve on its best value by `1e-6` for 20 epochs.
    pub fn fit(spec: &PredictorSpec, x: ArrayView2<'_, T>, y: &[u8]) -> Result<Self> {
        check_training(x, y)?;
        let (n, d) = x.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let hidden = spec.hidden_units;
        let mut theta = MlpParams::<T>::init(d, hidden, &mut rng).to_vec();
        let weights = sample_weights::<T>(y, spec.class_weighting);
        let l2 = T::of(spec.l2);
        let batch = spec.batch_size.min(n);
        let mut adam = Adam::new(theta.len(), spec.learning_rate);
        let mut order: Vec<usize> = (0..n).collect();
        let mut best = T::infinity();
        let mut stale = 0usize;
        let mut epochs_run = 0;
        let mut last = T::infinity();

        for _ in 0..spec.epochs {
            epochs_run += 1;
            order.shuffle(&mut rng);
            let mut epoch_loss = T::zero();
            for chunk in order.chunks(batch) {
                let xb = x.select(Axis(0), chunk);
                let yb: Vec<u8> = chunk.iter().map(|&i| y[i]).collect();
                let wb: Vec<T> = chunk.iter().map(|&i| weights[i]).collect();
                let params = MlpParams::from_vec(d, hidden, &theta);
                let (loss, grad) = mlp_loss_and_gradient(&params, xb.view(), &yb, &wb, l2);
                adam.step(&mut theta, &grad.to_vec());
                epoch_loss = epoch_loss + loss * T::of_usize(chunk.len());
            }
            last = epoch_loss / T::of_usize(n);
            if last > best - T::of(LOSS_TOL) {
                stale += 1;
            } else {
                stale = 0;
            }
            best = best.min(last);
            if stale >= NO_CHANGE_EPOCHS {
                break;
            }
        }
        Ok(Self {
            params: MlpParams::from_vec(d, hidden, &theta),
            epochs_run,
            final_loss: last,
        })
    }

    pub fn params(&self) -> &MlpParams<T> {
        &self.params
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    pub fn final_loss(&self) -> T {
        self.final_loss
    }

    pub fn n_features(&self) -> usize {
        self.params.w1.ncols()
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        let (_, p) = self.params.forward(x);
        proba_from_positive(p.column(1).iter().copied())
    }
}

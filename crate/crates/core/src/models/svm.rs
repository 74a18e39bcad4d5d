//! C-SVC with an RBF kernel, trained by sequential minimal optimization on
//! the dual with second-order working-set selection, and Platt-scaled
//! probabilities fitted on out-of-fold decision values.

use super::{check_training, proba_from_positive, sample_weights, Gamma, PredictorSpec, Result};
use crate::eval::cv::stratified_assignment;
use crate::linalg::squared_distance;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView2, Axis};

const TAU: f64 = 1e-12;
const STOP_EPS: f64 = 1e-3;
const PLATT_FOLDS: usize = 3;

fn rbf<T: Scalar>(gamma: T, a: &[T], b: &[T]) -> T {
    (-gamma * squared_distance(a, b)).exp()
}

/// `1 / (d · Var(X))` over all entries, falling back to 1 for constant data.
pub(crate) fn scale_gamma<T: Scalar>(x: ArrayView2<'_, T>) -> T {
    let n = T::of_usize(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    if var > T::zero() {
        T::one() / (T::of_usize(x.ncols()) * var)
    } else {
        T::one()
    }
}

struct DualSolution<T> {
    alpha: Vec<T>,
    rho: T,
}

/// Solves `min ½αᵀQα − Σα` s.t. `0 ≤ α_i ≤ C_i`, `Σ y_i α_i = 0`.
fn solve_dual<T: Scalar>(kernel: &Array2<T>, y: &[T], bounds: &[T]) -> DualSolution<T> {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[[i, j]];
    let tau = T::of(TAU);
    let eps = T::of(STOP_EPS);
    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let upper = |a: &[T], t: usize| a[t] >= bounds[t];
    let lower = |a: &[T], t: usize| a[t] <= T::zero();
    let positive = |t: usize| y[t] > T::zero();
    let max_iter = 100_000usize.max(100 * n);

    for _ in 0..max_iter {
        let mut gmax = T::neg_infinity();
        let mut i_sel = None;
        for t in 0..n {
            let candidate = if positive(t) {
                (!upper(&alpha, t)).then(|| -grad[t])
            } else {
                (!lower(&alpha, t)).then(|| grad[t])
            };
            if let Some(v) = candidate {
                if v >= gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else { break };

        let mut gmax2 = T::neg_infinity();
        let mut j_sel = None;
        let mut best = T::infinity();
        for t in 0..n {
            let (eligible, g) = if positive(t) {
                (!lower(&alpha, t), grad[t])
            } else {
                (!upper(&alpha, t), -grad[t])
            };
            if !eligible {
                continue;
            }
            gmax2 = gmax2.max(g);
            let diff = gmax + g;
            if diff > T::zero() {
                let quad = kernel[[i, i]] + kernel[[t, t]] - T::of(2.0) * kernel[[i, t]];
                let quad = if quad > T::zero() { quad } else { tau };
                let obj = -(diff * diff) / quad;
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else { break };
        if gmax + gmax2 < eps {
            break;
        }

        let (ci, cj) = (bounds[i], bounds[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = kernel[[i, i]] + kernel[[j, j]] + T::of(2.0) * q(i, j);
            let quad = if quad > T::zero() { quad } else { tau };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] = alpha[i] + delta;
            alpha[j] = alpha[j] + delta;
            if diff > T::zero() {
                if alpha[j] < T::zero() {
                    alpha[j] = T::zero();
                    alpha[i] = diff;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = kernel[[i, i]] + kernel[[j, j]] - T::of(2.0) * q(i, j);
            let quad = if quad > T::zero() { quad } else { tau };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] = alpha[i] - delta;
            alpha[j] = alpha[j] + delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < T::zero() {
                alpha[j] = T::zero();
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..n {
            grad[k] = grad[k] + q(i, k) * di + q(j, k) * dj;
        }
    }

    let mut free = 0usize;
    let mut sum_free = T::zero();
    let mut ub = T::infinity();
    let mut lb = T::neg_infinity();
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(&alpha, t) {
            if positive(t) {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if lower(&alpha, t) {
            if positive(t) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free = sum_free + yg;
        }
    }
    let rho = if free > 0 {
        sum_free / T::of_usize(free)
    } else {
        (ub + lb) / T::of(2.0)
    };
    DualSolution { alpha, rho }
}

/// Sigmoid map `P(y=1 | f) = 1 / (1 + exp(A·f + B))` from decision values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattScaling<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> PlattScaling<T> {
    /// Newton fit with backtracking on regularized targets.
    pub fn fit(decision: &[T], y: &[u8]) -> Self {
        let prior1 = y.iter().filter(|&&v| v == 1).count() as f64;
        let prior0 = y.len() as f64 - prior1;
        let hi = T::of((prior1 + 1.0) / (prior1 + 2.0));
        let lo = T::of(1.0 / (prior0 + 2.0));
        let targets: Vec<T> = y.iter().map(|&v| if v == 1 { hi } else { lo }).collect();
        let sigma = T::of(1e-12);
        let min_step = T::of(1e-10);
        let eps = T::of(1e-5);

        let objective = |a: T, b: T| -> T {
            decision
                .iter()
                .zip(&targets)
                .map(|(&f, &t)| {
                    let z = f * a + b;
                    if z >= T::zero() {
                        t * z + (-z).exp().ln_1p()
                    } else {
                        (t - T::one()) * z + z.exp().ln_1p()
                    }
                })
                .sum()
        };

        let mut a = T::zero();
        let mut b = T::of(((prior0 + 1.0) / (prior1 + 1.0)).ln());
        let mut fval = objective(a, b);
        for _ in 0..100 {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) =
                (sigma, sigma, T::zero(), T::zero(), T::zero());
            for (&f, &t) in decision.iter().zip(&targets) {
                let z = f * a + b;
                let (p, q) = if z >= T::zero() {
                    let e = (-z).exp();
                    (e / (T::one() + e), T::one() / (T::one() + e))
                } else {
                    let e = z.exp();
                    (T::one() / (T::one() + e), e / (T::one() + e))
                };
                let d2 = p * q;
                h11 = h11 + f * f * d2;
                h22 = h22 + d2;
                h21 = h21 + f * d2;
                let d1 = t - p;
                g1 = g1 + f * d1;
                g2 = g2 + d1;
            }
            if g1.abs() < eps && g2.abs() < eps {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = T::one();
            while step >= min_step {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < fval + T::of(1e-4) * step * gd {
                    a = na;
                    b = nb;
                    fval = nf;
                    break;
                }
                step = step / T::of(2.0);
            }
            if step < min_step {
                break;
            }
        }
        Self { a, b }
    }

    pub fn positive_probability(&self, decision: T) -> T {
        let z = decision * self.a + self.b;
        if z >= T::zero() {
            let e = (-z).exp();
            e / (T::one() + e)
        } else {
            T::one() / (T::one() + z.exp())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<T> {
    support: Array2<T>,
    /// `α_i · y_i` per support vector.
    coef: Array1<T>,
    rho: T,
    gamma: T,
    platt: PlattScaling<T>,
}

struct Machine<T> {
    support: Array2<T>,
    coef: Array1<T>,
    rho: T,
}

impl<T: Scalar> Machine<T> {
    fn train(x: ArrayView2<'_, T>, y: &[u8], gamma: T, c: T, balanced: bool) -> Self {
        let n = x.nrows();
        let rows: Vec<Vec<T>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
        let kernel = Array2::from_shape_fn((n, n), |(i, j)| rbf(gamma, &rows[i], &rows[j]));
        let signs: Vec<T> = y
            .iter()
            .map(|&v| if v == 1 { T::one() } else { -T::one() })
            .collect();
        let bounds: Vec<T> = sample_weights::<T>(y, balanced)
            .into_iter()
            .map(|w| w * c)
            .collect();
        let sol = solve_dual(&kernel, &signs, &bounds);
        let keep: Vec<usize> = (0..n).filter(|&i| sol.alpha[i] > T::zero()).collect();
        Self {
            support: x.select(Axis(0), &keep),
            coef: keep.iter().map(|&i| sol.alpha[i] * signs[i]).collect(),
            rho: sol.rho,
        }
    }

    fn decision(&self, gamma: T, x: ArrayView2<'_, T>) -> Vec<T> {
        let sv: Vec<Vec<T>> = self
            .support
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect();
        x.rows()
            .into_iter()
            .map(|row| {
                let row = row.to_vec();
                sv.iter()
                    .zip(self.coef.iter())
                    .map(|(s, &c)| c * rbf(gamma, s, &row))
                    .sum::<T>()
                    - self.rho
            })
            .collect()
    }
}

impl<T: Scalar> SvmModel<T> {
    pub fn fit(spec: &PredictorSpec, x: ArrayView2<'_, T>, y: &[u8]) -> Result<Self> {
        check_training(x, y)?;
        let gamma = match spec.gamma {
            Gamma::Value(g) => T::of(g),
            Gamma::Named(_) => scale_gamma(x),
        };
        let c = T::of(spec.c);
        let full = Machine::train(x, y, gamma, c, spec.class_weighting);

        // out-of-fold decision values for the sigmoid; in-sample if any
        // internal training split would be single-class
        let folds = stratified_assignment(y, PLATT_FOLDS, spec.seed);
        let mut decision = vec![T::zero(); y.len()];
        let mut out_of_fold = true;
        for k in 0..PLATT_FOLDS {
            let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != k).collect();
            let held: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == k).collect();
            let ty: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            if held.is_empty() {
                continue;
            }
            if !(ty.contains(&0) && ty.contains(&1)) {
                out_of_fold = false;
                break;
            }
            let m = Machine::train(
                x.select(Axis(0), &train).view(),
                &ty,
                gamma,
                c,
                spec.class_weighting,
            );
            for (&i, v) in held
                .iter()
                .zip(m.decision(gamma, x.select(Axis(0), &held).view()))
            {
                decision[i] = v;
            }
        }
        if !out_of_fold {
            decision = full.decision(gamma, x);
        }
        let platt = PlattScaling::fit(&decision, y);
        Ok(Self {
            support: full.support,
            coef: full.coef,
            rho: full.rho,
            gamma,
            platt,
        })
    }

    pub fn n_features(&self) -> usize {
        self.support.ncols()
    }

    pub fn n_support(&self) -> usize {
        self.support.nrows()
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn platt(&self) -> PlattScaling<T> {
        self.platt
    }

    /// Signed distance-like score; positive favours class 1.
    pub fn decision_function(&self, x: ArrayView2<'_, T>) -> Vec<T> {
        let m = Machine {
            support: self.support.clone(),
            coef: self.coef.clone(),
            rho: self.rho,
        };
        m.decision(self.gamma, x)
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, T>) -> Array2<T> {
        proba_from_positive(
            self.decision_function(x)
                .into_iter()
                .map(|f| self.platt.positive_probability(f)),
        )
    }
}

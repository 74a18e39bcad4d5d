use fairmix::preprocess::{fit_pca, PcaModel};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TARGET: f64 = 0.8;

/// Population covariance eigenpairs, descending.
fn oracle(x: &Array2<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (n, d) = x.dim();
    let m = DMatrix::from_fn(n, d, |i, j| x[[i, j]]);
    let mean = m.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| m[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors, cov)
}

fn random_matrix(seed: u64, n: usize, d: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // random column scales so the spectrum is uneven
    let scales: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..5.0)).collect();
    let mix = Array2::from_shape_fn((d, d), |_| rng.gen_range(-1.0..1.0));
    let raw = Array2::from_shape_fn((n, d), |(_, j)| rng.gen_range(-1.0..1.0) * scales[j]);
    raw.dot(&mix)
}

fn check(model: &PcaModel<f64>, x: &Array2<f64>) -> Result<(), TestCaseError> {
    let (values, vectors, cov) = oracle(x);
    let total: f64 = values.iter().sum();
    let k = model.n_components();
    let comps = model.components();
    prop_assert_eq!(comps.dim(), (k, x.ncols()));

    if total <= 1e-12 {
        prop_assert_eq!(k, 1);
        return Ok(());
    }
    // minimality of k
    let cum = |m: usize| values[..m].iter().sum::<f64>() / total;
    prop_assert!(cum(k) >= TARGET - 1e-9, "cum({}) = {}", k, cum(k));
    prop_assert!(k == 1 || cum(k - 1) < TARGET + 1e-9, "k={} not minimal", k);
    prop_assert!((model.cumulative_ratio() - cum(k)).abs() <= 1e-9);

    // orthonormal rows
    let gram = comps.dot(&comps.t());
    for i in 0..k {
        for j in 0..k {
            let want = if i == j { 1.0 } else { 0.0 };
            prop_assert!(
                (gram[[i, j]] - want).abs() <= 1e-8,
                "gram[{},{}] = {}",
                i,
                j,
                gram[[i, j]]
            );
        }
    }

    let scale = values[0].max(1.0);
    for c in 0..k {
        let lambda = model.explained_variance()[c];
        prop_assert!((lambda - values[c]).abs() <= 1e-9 * scale);
        let v = nalgebra::DVector::from_iterator(x.ncols(), comps.row(c).iter().copied());
        // eigen-equation residual
        let residual = (&cov * &v - &v * lambda).norm();
        prop_assert!(residual <= 1e-8 * scale, "residual {}", residual);
        // same axis as the oracle when the eigenvalue is isolated
        let gap = |o: usize| (values[c] - values[o]).abs();
        let isolated = (c == 0 || gap(c - 1) > 1e-6 * scale)
            && (c + 1 == values.len() || gap(c + 1) > 1e-6 * scale);
        if isolated {
            let dot: f64 = (0..x.ncols())
                .map(|j| comps[[c, j]] * vectors[(j, c)])
                .sum();
            prop_assert!((dot.abs() - 1.0).abs() <= 1e-7, "|dot| = {}", dot.abs());
        }
        // sign convention: largest-magnitude entry is positive
        let big = comps
            .row(c)
            .iter()
            .copied()
            .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        prop_assert!(big > 0.0);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matches_covariance_eigendecomposition(seed in any::<u64>(), n in 2usize..=60, d in 1usize..=40) {
        let x = random_matrix(seed, n, d);
        let model = fit_pca(x.view(), TARGET).unwrap();
        check(&model, &x)?;
        // projection equals centered data times the component matrix
        let proj = model.apply(x.view()).unwrap();
        let centered = &x - &model.mean().view().insert_axis(ndarray::Axis(0));
        let direct = centered.dot(&model.components().t());
        for (a, b) in proj.iter().zip(direct.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn constant_data_keeps_one_component() {
    let x = Array2::from_elem((5, 3), 2.5);
    let model = fit_pca(x.view(), TARGET).unwrap();
    assert_eq!(model.n_components(), 1);
    assert_eq!(model.cumulative_ratio(), 1.0);
    assert!(model.apply(x.view()).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn single_dominant_axis() {
    // variance 100 along x, 1 along y, 0.01 along z
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = Array2::from_shape_fn((200, 3), |(_, j)| {
        rng.gen_range(-1.0..1.0) * [10.0, 1.0, 0.1][j]
    });
    let model = fit_pca(x.view(), TARGET).unwrap();
    assert_eq!(model.n_components(), 1);
    assert!(model.components()[[0, 0]] > 0.99);
}

#[test]
fn full_target_keeps_every_nonzero_axis() {
    let x = random_matrix(4, 30, 5);
    let model = fit_pca(x.view(), 1.0).unwrap();
    assert_eq!(model.n_components(), 5);
}

#[test]
fn rejects_bad_inputs() {
    let x = random_matrix(1, 10, 3);
    assert!(fit_pca(x.view(), 0.0).is_err());
    assert!(fit_pca(x.view(), 1.5).is_err());
    assert!(fit_pca(Array2::<f64>::zeros((1, 3)).view(), TARGET).is_err());
}

#[test]
fn f32_agrees_with_f64() {
    let x = random_matrix(2, 40, 6);
    let a = fit_pca(x.view(), TARGET).unwrap();
    let b = fit_pca(x.mapv(|v| v as f32).view(), TARGET).unwrap();
    assert_eq!(a.n_components(), b.n_components());
    for (u, v) in a.explained_ratio().iter().zip(b.explained_ratio()) {
        assert!((u - f64::from(*v)).abs() < 1e-4);
    }
}

use pcgkit::container::ModelFile;
use pcgkit::shallow::{
    argmax, train_lda, train_mlp, train_svm, Classifier, MlpConfig, SvmConfig, DEFAULT_C, DEFAULT_SHRINKAGE,
};
use pcgkit::PcgError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn blobs(centers: &[Vec<f64>], per: usize, sd: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per {
            x.push(c.iter().map(|m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect());
            y.push(k);
        }
    }
    (x, y)
}

fn accuracy(predict: impl Fn(&[f64]) -> usize, x: &[Vec<f64>], y: &[usize]) -> f64 {
    x.iter().zip(y).filter(|(r, &t)| predict(r) == t).count() as f64 / y.len() as f64
}

fn toy() -> (Vec<Vec<f64>>, Vec<usize>) {
    // 4 points per class, gap of 2 between the classes along x
    let x = vec![
        vec![-2.0, 0.0],
        vec![-1.0, 1.0],
        vec![-1.0, -1.0],
        vec![-3.0, 0.5],
        vec![1.0, 0.0],
        vec![2.0, 1.0],
        vec![2.0, -1.0],
        vec![1.5, 0.3],
    ];
    (x, vec![0, 0, 0, 0, 1, 1, 1, 1])
}

#[test]
fn svm_separates_toy_problem() {
    let (x, y) = toy();
    for c in [DEFAULT_C, 1.0] {
        let cfg = SvmConfig { c, tol: 1e-6, ..SvmConfig::default() };
        let (m, _) = train_svm(&x, &y, 2, &cfg).unwrap();
        assert_eq!(accuracy(|r| m.predict(r).unwrap().0, &x, &y), 1.0, "C={c}");
    }
}

#[test]
fn svm_dual_never_decreases() {
    let (x, y) = blobs(&[vec![0.0; 5], vec![1.0; 5], vec![-1.0, 1.0, 0.0, 2.0, -2.0]], 30, 1.0, 3);
    let cfg = SvmConfig { c: 0.5, tol: 1e-4, ..SvmConfig::default() };
    let (_, report) = train_svm(&x, &y, 3, &cfg).unwrap();
    for curve in &report.dual_objective {
        assert!(curve.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{curve:?}");
    }
}

#[test]
fn duplicated_rows_at_half_c_give_same_decision_function() {
    let (x, y) = blobs(&[vec![0.0, 0.0, 0.0], vec![1.5, 0.5, -1.0]], 20, 0.8, 5);
    let c = 0.2;
    let tight = |c| SvmConfig { c, tol: 1e-9, max_sweeps: 100_000, seed: 1 };
    let (a, _) = train_svm(&x, &y, 2, &tight(c)).unwrap();
    let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
    let y2: Vec<usize> = y.iter().chain(&y).copied().collect();
    let (b, _) = train_svm(&x2, &y2, 2, &tight(c / 2.0)).unwrap();
    let (probe, _) = blobs(&[vec![0.5, 0.2, -0.5]], 50, 2.0, 9);
    for p in &probe {
        let (sa, sb) = (a.scores(p).unwrap(), b.scores(p).unwrap());
        for (u, v) in sa.iter().zip(&sb) {
            assert!((u - v).abs() < 1e-4, "{sa:?} vs {sb:?}");
        }
    }
}

#[test]
fn vanishing_c_predicts_majority() {
    let (x, y) = blobs(&[vec![0.0, 0.0], vec![3.0, 3.0], vec![-3.0, 3.0]], 10, 1.0, 7);
    let mut x = x;
    let mut y = y;
    // class 1 becomes the majority
    x.extend(x[10..15].to_vec());
    y.extend([1; 5]);
    let cfg = SvmConfig { c: 1e-9, ..SvmConfig::default() };
    let (m, _) = train_svm(&x, &y, 3, &cfg).unwrap();
    assert!(m.weights.iter().flatten().all(|w| w.abs() < 1e-6));
    assert_eq!(m.predict(&m.scaler.mean).unwrap().0, 1);

    // balanced: the first class wins the tie
    let (x, y) = blobs(&[vec![0.0, 0.0], vec![3.0, 3.0]], 10, 1.0, 8);
    let (m, _) = train_svm(&x, &y, 2, &cfg).unwrap();
    let (class, s) = m.predict(&m.scaler.mean).unwrap();
    assert_eq!(s[0], s[1]);
    assert_eq!(class, 0);
}

#[test]
fn svm_setup_errors() {
    let (x, _) = toy();
    assert!(matches!(train_svm(&x, &[0; 8], 2, &SvmConfig::default()), Err(PcgError::TrainingSetup(_))));
    let mut bad = x.clone();
    bad[3][1] = f64::NAN;
    let (_, y) = toy();
    assert!(matches!(train_svm(&bad, &y, 2, &SvmConfig::default()), Err(PcgError::InvalidInput(_))));
}

#[test]
fn lda_symmetric_gaussians() {
    let mu = [1.0, -0.5, 2.0];
    let neg: Vec<f64> = mu.iter().map(|v| -v).collect();
    let (x, y) = blobs(&[neg, mu.to_vec()], 3000, 1.0, 11);
    let m = train_lda(&x, &y, 2, 0.0).unwrap();
    // normal in raw coordinates
    let normal: Vec<f64> = (0..3).map(|j| (m.weights[1][j] - m.weights[0][j]) / m.scaler.std[j]).collect();
    let dot: f64 = normal.iter().zip(&mu).map(|(a, b)| a * b).sum();
    let cos = dot / (normal.iter().map(|v| v * v).sum::<f64>().sqrt() * mu.iter().map(|v| v * v).sum::<f64>().sqrt());
    assert!(cos > 0.99, "cos {cos}");
    let s = m.scores(&[0.0; 3]).unwrap();
    let span = (m.scores(&mu).unwrap()[1] - m.scores(&mu).unwrap()[0]).abs();
    assert!((s[1] - s[0]).abs() < 0.05 * span, "origin margin {}", s[1] - s[0]);
}

#[test]
fn lda_equal_means_is_chance() {
    let (x, y) = blobs(&[vec![0.0; 4], vec![0.0; 4]], 500, 1.0, 12);
    let m = train_lda(&x, &y, 2, DEFAULT_SHRINKAGE).unwrap();
    let (xt, yt) = blobs(&[vec![0.0; 4], vec![0.0; 4]], 2000, 1.0, 13);
    let acc = accuracy(|r| m.predict(r).unwrap().0, &xt, &yt);
    assert!((0.45..=0.55).contains(&acc), "{acc}");
}

/// Direct discriminant: Gauss-Jordan inverse of the shrunk pooled covariance in raw units.
fn oracle_scores(x: &[Vec<f64>], y: &[usize], k: usize, lambda: f64, p: &[f64]) -> Vec<f64> {
    let d = x[0].len();
    let n = x.len();
    let mut means = vec![vec![0.0; d]; k];
    let mut counts = vec![0.0; k];
    for (r, &c) in x.iter().zip(y) {
        counts[c] += 1.0;
        for j in 0..d {
            means[c][j] += r[j];
        }
    }
    for c in 0..k {
        for j in 0..d {
            means[c][j] /= counts[c];
        }
    }
    let mut s = vec![vec![0.0; d]; d];
    for (r, &c) in x.iter().zip(y) {
        for i in 0..d {
            for j in 0..d {
                s[i][j] += (r[i] - means[c][i]) * (r[j] - means[c][j]) / (n - k) as f64;
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s[i][j] *= 1.0 - lambda;
            }
        }
    }
    // augment and eliminate
    let mut a: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut row = s[i].clone();
            row.extend((0..d).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        let pv = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= pv);
        for r in 0..d {
            if r != col {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                a[r].iter_mut().zip(&pivot_row).for_each(|(v, pr)| *v -= f * pr);
            }
        }
    }
    let inv: Vec<Vec<f64>> = a.iter().map(|r| r[d..].to_vec()).collect();
    (0..k)
        .map(|c| {
            let w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| inv[i][j] * means[c][j]).sum()).collect();
            let px: f64 = w.iter().zip(p).map(|(a, b)| a * b).sum();
            let mm: f64 = w.iter().zip(&means[c]).map(|(a, b)| a * b).sum();
            px - 0.5 * mm + (counts[c] / n as f64).ln()
        })
        .collect()
}

#[test]
fn lda_matches_closed_form_oracle() {
    let (x, y) = blobs(&[vec![0.0, 0.0, 1.0, 5.0], vec![1.0, 2.0, 0.0, 4.0], vec![-1.0, 1.0, 2.0, 6.0]], 15, 0.9, 21);
    let (xt, _) = blobs(&[vec![0.0, 1.0, 1.0, 5.0]], 40, 2.0, 22);
    for lambda in [0.0, 0.1, 0.7] {
        let m = train_lda(&x, &y, 3, lambda).unwrap();
        for p in &xt {
            let got = m.scores(p).unwrap();
            let want = oracle_scores(&x, &y, 3, lambda, p);
            assert_eq!(argmax(&got), argmax(&want));
            for c in 1..3 {
                assert!(((got[c] - got[0]) - (want[c] - want[0])).abs() < 1e-8, "lambda {lambda}");
            }
        }
    }
}

#[test]
fn lda_singular_without_shrinkage() {
    // more dimensions than samples
    let (x, y) = blobs(&[vec![0.0; 10], vec![1.0; 10]], 3, 1.0, 23);
    assert!(matches!(train_lda(&x, &y, 2, 0.0), Err(PcgError::Numeric(_))));
    assert!(train_lda(&x, &y, 2, 0.1).is_ok());
}

#[test]
fn predict_contracts() {
    let (x, y) = blobs(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 4.0]], 10, 0.5, 31);
    let m = train_lda(&x, &y, 3, 0.1).unwrap();
    assert_eq!(m.predict(&[4.0, 0.1]).unwrap().0, 1);
    assert_eq!(m.predict(&[0.0, 0.0]).unwrap().1.len(), 3);
    assert!(m.scaler.apply(&m.scaler.mean).unwrap().iter().all(|&v| v == 0.0));
    assert_eq!(m.scores(&m.scaler.mean).unwrap(), m.biases);
    assert!(matches!(m.predict(&[1.0]), Err(PcgError::Shape(_))));
}

#[test]
fn mlp_fits_blobs_and_round_trips() {
    let (x, y) = blobs(&[vec![0.0, 0.0, 0.0], vec![2.0, 0.0, 1.0], vec![0.0, 2.0, -1.0]], 20, 0.4, 41);
    let m = train_mlp(&x, &y, 3, &MlpConfig { epochs: 60, lr: 0.01, ..MlpConfig::default() }).unwrap();
    assert!(accuracy(|r| m.predict(r).unwrap().0, &x, &y) >= 0.95);
    let (_, p) = m.predict(&x[0]).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let c = Classifier::Mlp(m);
    let back = Classifier::from_file(ModelFile::decode(&c.to_file().encode()).unwrap()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn linear_models_round_trip() {
    let (x, y) = toy();
    let (svm, _) = train_svm(&x, &y, 2, &SvmConfig::default()).unwrap();
    let lda = train_lda(&x, &y, 2, 0.1).unwrap();
    for m in [svm, lda] {
        let c = Classifier::Linear(m);
        let back = Classifier::from_file(ModelFile::decode(&c.to_file().encode()).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}

#[test]
fn svm_is_seed_deterministic() {
    let (x, y) = blobs(&[vec![0.0; 3], vec![1.0; 3]], 15, 1.0, 51);
    let cfg = SvmConfig { c: 1.0, tol: 1e-3, ..SvmConfig::default() };
    assert_eq!(train_svm(&x, &y, 2, &cfg).unwrap(), train_svm(&x, &y, 2, &cfg).unwrap());
}

//! Labeled feature datasets: the only input the classifier consumes.
//!
//! Rows labeled `+1` form the matrix `A`, rows labeled `-1` form `B`.

mod csv;
mod synth;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::Scalar;

pub use self::csv::{load_csv, load_csv_with_tokens, parse_csv, save_csv, write_csv, LabelMap, ObservedTokens};
pub use self::synth::{make_blobs, make_crossplanes, make_two_moons};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("line {line}: unknown label token `{token}`")]
    UnknownLabel { line: usize, token: String },
    #[error("line {line}, field {field}: `{text}` is not a finite number")]
    BadNumber { line: usize, field: usize, text: String },
    #[error("line {line}: a row needs at least one feature and a label")]
    TooFewFields { line: usize },
    #[error("dataset has no rows")]
    Empty,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("label {0} is not +1 or -1")]
    BadLabel(i64),
    #[error("feature entry ({0}, {1}) is not finite")]
    NonFinite(usize, usize),
    #[error("{0} labels for {1} rows")]
    LabelCount(usize, usize),
    #[error("class {label:+} has {count} members, need at least {need}")]
    ClassTooSmall { label: i8, count: usize, need: usize },
    #[error("class {label:+} would get an empty {side} side")]
    EmptySide { label: i8, side: &'static str },
    #[error("{0}")]
    Param(String),
    #[error("dimension mismatch: dataset has {0} columns, expected {1}")]
    Dimension(usize, usize),
}

/// Dense `n x d` feature matrix with labels in `{+1, -1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset<T> {
    features: Matrix<T>,
    labels: Vec<i8>,
}

impl<T: Scalar> FeatureDataset<T> {
    pub fn new(features: Matrix<T>, labels: Vec<i8>) -> Result<Self, DatasetError> {
        if features.rows() == 0 {
            return Err(DatasetError::Empty);
        }
        if features.cols() == 0 {
            return Err(DatasetError::NoFeatures);
        }
        if labels.len() != features.rows() {
            return Err(DatasetError::LabelCount(labels.len(), features.rows()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(DatasetError::BadLabel(bad as i64));
        }
        for i in 0..features.rows() {
            if let Some(j) = features.row(i).iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite(i, j));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R], labels: Vec<i8>) -> Result<Self, DatasetError> {
        let m = Matrix::from_rows(rows).map_err(|e| DatasetError::Param(e.to_string()))?;
        Self::new(m, labels)
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.features.row(i)
    }

    pub fn count(&self, label: i8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Indices of rows carrying `label`, in row order.
    pub fn indices_of(&self, label: i8) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == label).collect()
    }

    /// `(A, B)`: the class `+1` rows and the class `-1` rows.
    pub fn split_classes(&self) -> (Matrix<T>, Matrix<T>) {
        (
            self.features.select_rows(&self.indices_of(1)),
            self.features.select_rows(&self.indices_of(-1)),
        )
    }

    /// Subset in the given row order. Panics on an empty or out-of-range index list.
    pub fn subset(&self, idx: &[usize]) -> Self {
        assert!(!idx.is_empty(), "empty subset");
        Self {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<i8>) -> Result<Self, DatasetError> {
        Self::new(self.features.clone(), labels)
    }
}

fn round_half_up(x: f64) -> usize {
    // Products like 5 * 0.3 land a hair under the half; the epsilon keeps them on it.
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Per-class train/test split; each class contributes `round(count * test_fraction)`
/// test rows. Both sides keep the original row order.
pub fn stratified_split<T: Scalar>(
    ds: &FeatureDataset<T>,
    test_fraction: f64,
    seed: u64,
) -> Result<(FeatureDataset<T>, FeatureDataset<T>), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::Param(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_mask = vec![false; ds.n()];
    for label in [1i8, -1] {
        let mut idx = ds.indices_of(label);
        if idx.len() < 2 {
            return Err(DatasetError::ClassTooSmall { label, count: idx.len(), need: 2 });
        }
        let k = round_half_up(idx.len() as f64 * test_fraction);
        if k == 0 {
            return Err(DatasetError::EmptySide { label, side: "test" });
        }
        if k >= idx.len() {
            return Err(DatasetError::EmptySide { label, side: "train" });
        }
        idx.shuffle(&mut rng);
        for &i in &idx[..k] {
            test_mask[i] = true;
        }
    }
    let train: Vec<usize> = (0..ds.n()).filter(|&i| !test_mask[i]).collect();
    let test: Vec<usize> = (0..ds.n()).filter(|&i| test_mask[i]).collect();
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Stratified k-fold partition: `(train, validation)` index pairs, each sorted.
///
/// Each class is shuffled and dealt round-robin; the deal continues across
/// classes so fold sizes differ by at most one.
pub fn kfold_indices(labels: &[i8], k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>, DatasetError> {
    if k < 2 {
        return Err(DatasetError::Param(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut next = 0usize;
    for label in [1i8, -1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if idx.len() < k {
            return Err(DatasetError::ClassTooSmall { label, count: idx.len(), need: k });
        }
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (val, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == f);
            (train, val)
        })
        .collect())
}

/// Corruption applied to a dataset, for robustness experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec<T> {
    /// Flip exactly `floor(rate * n)` labels chosen by a seeded shuffle.
    LabelFlip { rate: f64, seed: u64 },
    /// Add i.i.d. `N(0, sigma²)` to every feature entry.
    FeatureGaussian { sigma: T, seed: u64 },
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn validate(&self) -> Result<(), DatasetError> {
        match *self {
            NoiseSpec::LabelFlip { rate, .. } if !(0.0..=1.0).contains(&rate) => {
                Err(DatasetError::Param(format!("flip rate {rate} not in [0, 1]")))
            }
            NoiseSpec::FeatureGaussian { sigma, .. } if !(sigma.is_finite() && sigma >= T::zero()) => {
                Err(DatasetError::Param(format!("noise sigma {sigma} must be finite and >= 0")))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, ds: &FeatureDataset<T>) -> Result<FeatureDataset<T>, DatasetError> {
        self.validate()?;
        match *self {
            NoiseSpec::LabelFlip { rate, seed } => inject_label_noise(ds, rate, seed),
            NoiseSpec::FeatureGaussian { sigma, seed } => inject_feature_noise(ds, sigma, seed),
        }
    }
}

pub fn inject_label_noise<T: Scalar>(ds: &FeatureDataset<T>, rate: f64, seed: u64) -> Result<FeatureDataset<T>, DatasetError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(DatasetError::Param(format!("flip rate {rate} not in [0, 1]")));
    }
    let n = ds.n();
    let flips = ((rate * n as f64) + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut labels = ds.labels.clone();
    for &i in &order[..flips.min(n)] {
        labels[i] = -labels[i];
    }
    Ok(FeatureDataset { features: ds.features.clone(), labels })
}

pub fn inject_feature_noise<T: Scalar>(ds: &FeatureDataset<T>, sigma: T, seed: u64) -> Result<FeatureDataset<T>, DatasetError> {
    if !(sigma.is_finite() && sigma >= T::zero()) {
        return Err(DatasetError::Param(format!("noise sigma {sigma} must be finite and >= 0")));
    }
    if sigma == T::zero() {
        return Ok(ds.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = ds.features.clone();
    for i in 0..features.rows() {
        for v in features.row_mut(i) {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v = *v + sigma * T::c(e);
        }
    }
    Ok(FeatureDataset { features, labels: ds.labels.clone() })
}

/// Per-column affine standardization fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    /// Smallest admissible column scale.
    pub fn scale_floor() -> T {
        T::c(1e-12)
    }

    /// Column means and population standard deviations, scales floored.
    pub fn fit(ds: &FeatureDataset<T>) -> Self {
        let (n, d) = (ds.n(), ds.d());
        let nf = T::from_usize(n).unwrap_or(T::one());
        let first = ds.row(0).to_vec();
        let mut mean = vec![T::zero(); d];
        let mut scale = vec![T::zero(); d];
        for j in 0..d {
            // Offsetting by the first entry makes constant columns exact.
            let shift = (0..n).map(|i| ds.features[(i, j)] - first[j]).fold(T::zero(), |a, b| a + b) / nf;
            let mu = first[j] + shift;
            let var = (0..n)
                .map(|i| {
                    let c = ds.features[(i, j)] - mu;
                    c * c
                })
                .fold(T::zero(), |a, b| a + b)
                / nf;
            mean[j] = mu;
            scale[j] = var.sqrt().max(Self::scale_floor());
        }
        Self { mean, scale }
    }

    pub fn transform_row(&self, row: &[T]) -> Vec<T> {
        row.iter().zip(self.mean.iter().zip(&self.scale)).map(|(&v, (&m, &s))| (v - m) / s).collect()
    }

    pub fn inverse_row(&self, row: &[T]) -> Vec<T> {
        row.iter().zip(self.mean.iter().zip(&self.scale)).map(|(&v, (&m, &s))| v * s + m).collect()
    }

    pub fn apply(&self, ds: &FeatureDataset<T>) -> Result<FeatureDataset<T>, DatasetError> {
        Ok(FeatureDataset { features: self.apply_matrix(&ds.features)?, labels: ds.labels.clone() })
    }

    pub fn apply_matrix(&self, x: &Matrix<T>) -> Result<Matrix<T>, DatasetError> {
        if x.cols() != self.mean.len() {
            return Err(DatasetError::Dimension(x.cols(), self.mean.len()));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            let t = self.transform_row(x.row(i));
            out.row_mut(i).copy_from_slice(&t);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(n_pos: usize, n_neg: usize) -> FeatureDataset<f64> {
        let rows: Vec<Vec<f64>> = (0..n_pos + n_neg).map(|i| vec![i as f64, (i * i) as f64 * 0.5]).collect();
        let labels = (0..n_pos + n_neg).map(|i| if i < n_pos { 1 } else { -1 }).collect();
        FeatureDataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn invariants_enforced() {
        assert!(matches!(FeatureDataset::<f64>::from_rows(&[[1.0]], vec![0]), Err(DatasetError::BadLabel(0))));
        assert!(matches!(FeatureDataset::<f64>::from_rows(&[[f64::NAN]], vec![1]), Err(DatasetError::NonFinite(0, 0))));
        assert!(matches!(FeatureDataset::<f64>::new(Matrix::zeros(1, 0), vec![1]), Err(DatasetError::NoFeatures)));
        assert!(matches!(FeatureDataset::<f64>::new(Matrix::zeros(0, 2), vec![]), Err(DatasetError::Empty)));
        assert!(matches!(FeatureDataset::<f64>::from_rows(&[[1.0]], vec![1, 1]), Err(DatasetError::LabelCount(2, 1))));
    }

    #[test]
    fn split_counts_follow_half_up_rounding() {
        let ds = toy(5, 5);
        let (train, test) = stratified_split(&ds, 0.3, 17).unwrap();
        assert_eq!(test.count(1), 2);
        assert_eq!(test.count(-1), 2);
        assert_eq!(train.n(), 6);
        let (train2, test2) = stratified_split(&ds, 0.3, 17).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let ds = toy(1, 5);
        assert!(matches!(stratified_split(&ds, 0.3, 1), Err(DatasetError::ClassTooSmall { label: 1, .. })));
        let ds = toy(2, 2);
        assert!(matches!(stratified_split(&ds, 0.1, 1), Err(DatasetError::EmptySide { side: "test", .. })));
    }

    #[test]
    fn kfold_balanced_ten() {
        let labels: Vec<i8> = (0..10).map(|i| if i < 5 { 1 } else { -1 }).collect();
        let folds = kfold_indices(&labels, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = vec![0; 10];
        for (train, val) in &folds {
            assert_eq!(val.len(), 2);
            assert_eq!(train.len(), 8);
            for &i in val {
                seen[i] += 1;
                assert!(!train.contains(&i));
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(folds, kfold_indices(&labels, 5, 3).unwrap());
    }

    #[test]
    fn kfold_rejects_too_many_folds() {
        let labels: Vec<i8> = (0..10).map(|i| if i < 5 { 1 } else { -1 }).collect();
        assert!(matches!(kfold_indices(&labels, 11, 0), Err(DatasetError::ClassTooSmall { .. })));
        assert!(kfold_indices(&labels, 1, 0).is_err());
    }

    #[test]
    fn label_noise_exact_counts() {
        let ds = toy(50, 50);
        assert_eq!(inject_label_noise(&ds, 0.0, 1).unwrap(), ds);
        let all = inject_label_noise(&ds, 1.0, 1).unwrap();
        assert!(all.labels().iter().zip(ds.labels()).all(|(a, b)| *a == -*b));
        assert_eq!(inject_label_noise(&all, 1.0, 9).unwrap(), ds);
        let some = inject_label_noise(&ds, 0.1, 5).unwrap();
        let flipped = some.labels().iter().zip(ds.labels()).filter(|(a, b)| a != b).count();
        assert_eq!(flipped, 10);
        assert_eq!(some.features(), ds.features());
        assert!(inject_label_noise(&ds, 1.5, 0).is_err());
    }

    #[test]
    fn feature_noise_identity_and_determinism() {
        let ds = toy(3, 3);
        assert_eq!(inject_feature_noise(&ds, 0.0, 4).unwrap(), ds);
        let a = inject_feature_noise(&ds, 0.5, 4).unwrap();
        assert_eq!(a, inject_feature_noise(&ds, 0.5, 4).unwrap());
        assert_ne!(a, ds);
        assert_eq!(a.labels(), ds.labels());
    }

    #[test]
    fn feature_noise_half_normal_mean() {
        // 10^5 entries: mean |e| should approach sigma * sqrt(2/pi).
        let rows = vec![[0.0f64; 10]; 10_000];
        let ds = FeatureDataset::from_rows(&rows, vec![1; 10_000]).unwrap();
        let sigma = 0.7;
        let noisy = inject_feature_noise(&ds, sigma, 2024).unwrap();
        let mean_abs = noisy.features().as_slice().iter().map(|v| v.abs()).sum::<f64>() / 1e5;
        let expect = sigma * (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean_abs - expect).abs() <= 0.05 * expect, "{mean_abs} vs {expect}");
    }

    #[test]
    fn noise_spec_validation() {
        assert!(NoiseSpec::<f64>::LabelFlip { rate: -0.1, seed: 0 }.validate().is_err());
        assert!(NoiseSpec::<f64>::FeatureGaussian { sigma: -1.0, seed: 0 }.validate().is_err());
        let ds = toy(5, 5);
        let out = NoiseSpec::LabelFlip { rate: 0.2, seed: 3 }.apply(&ds).unwrap();
        assert_eq!(out.labels().iter().zip(ds.labels()).filter(|(a, b)| a != b).count(), 2);
    }

    #[test]
    fn standardizer_constant_column() {
        let ds = FeatureDataset::from_rows(&[[0.1, 1.0], [0.1, 2.0], [0.1, 6.0]], vec![1, -1, 1]).unwrap();
        let st = Standardizer::fit(&ds);
        assert_eq!(st.scale[0], Standardizer::<f64>::scale_floor());
        let out = st.apply(&ds).unwrap();
        assert!((0..3).all(|i| out.features()[(i, 0)] == 0.0));
    }

    #[test]
    fn standardizer_zero_mean_unit_scale_and_held_out_point() {
        let ds = toy(4, 3);
        let st = Standardizer::fit(&ds);
        let out = st.apply(&ds).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = (0..7).map(|i| out.features()[(i, j)]).collect();
            let mean = col.iter().sum::<f64>() / 7.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 7.0;
            assert!(mean.abs() <= 1e-10);
            assert!((var.sqrt() - 1.0).abs() <= 1e-10);
        }
        // column 0 is 0..6: mean 3, population std 2
        let t = st.transform_row(&[7.0, 0.0]);
        assert!((t[0] - 2.0).abs() < 1e-12);
        assert_eq!(st.inverse_row(&t)[0], 7.0);
    }

    proptest! {
        #[test]
        fn kfold_partitions(n_pos in 5usize..30, n_neg in 5usize..30, k in 2usize..6, seed in 0u64..500) {
            let labels: Vec<i8> = (0..n_pos + n_neg).map(|i| if i < n_pos { 1 } else { -1 }).collect();
            let folds = kfold_indices(&labels, k, seed).unwrap();
            let n = labels.len();
            let mut seen = vec![0u8; n];
            let sizes: Vec<usize> = folds.iter().map(|(_, v)| v.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for (train, val) in &folds {
                prop_assert_eq!(train.len() + val.len(), n);
                for &i in val { seen[i] += 1; }
                let pos = val.iter().filter(|&&i| labels[i] == 1).count() as f64;
                let expect = val.len() as f64 * n_pos as f64 / n as f64;
                prop_assert!((pos - expect).abs() <= 1.0 + 1e-9);
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }

        #[test]
        fn split_is_permutation(n_pos in 2usize..40, n_neg in 2usize..40, frac in 0.2f64..0.5, seed in 0u64..500) {
            let ds = toy(n_pos, n_neg);
            for c in [n_pos, n_neg] {
                let k = (c as f64 * frac + 0.5 + 1e-9).floor() as usize;
                prop_assume!(k >= 1 && k < c);
            }
            let (train, test) = stratified_split(&ds, frac, seed).unwrap();
            prop_assert_eq!(train.n() + test.n(), ds.n());
            let mut rows: Vec<f64> = train.features().row_iter().chain(test.features().row_iter()).map(|r| r[0]).collect();
            rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expect: Vec<f64> = (0..ds.n()).map(|i| i as f64).collect();
            prop_assert_eq!(rows, expect);
            for label in [1i8, -1] {
                let c = ds.count(label) as f64;
                prop_assert_eq!(test.count(label), (c * frac + 0.5 + 1e-9).floor() as usize);
            }
        }

        #[test]
        fn label_flip_count(n in 1usize..200, rate in 0.0f64..=1.0, seed in 0u64..100) {
            let ds = toy(n, 1);
            let out = inject_label_noise(&ds, rate, seed).unwrap();
            let flipped = out.labels().iter().zip(ds.labels()).filter(|(a, b)| a != b).count();
            prop_assert_eq!(flipped, (rate * ds.n() as f64 + 1e-9).floor() as usize);
        }
    }
}

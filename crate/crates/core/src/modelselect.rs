//! Hyperparameter grids scored by stratified k-fold cross-validation.

use std::cmp::Ordering;
use std::time::Instant;

use thiserror::Error;

use crate::dataset::{kfold_indices, DatasetError, FeatureDataset};
use crate::kernel::{KernelKind, KernelSpec, WidthConvention};
use crate::pingtsvm::{train, PinGtsvmError, PinGtsvmParams};
use crate::qp::QpSettings;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum ModelSelectError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("invalid parameters: {0}")]
    Params(#[from] PinGtsvmError),
}

/// Powers of two `2^lo ..= 2^hi`.
pub fn powers_of_two<T: Scalar>(lo: i32, hi: i32) -> Vec<T> {
    (lo..=hi).map(|e| T::c(2f64.powi(e))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub c_values: Vec<T>,
    /// Width grid; unused by the linear kernel.
    pub sigma_values: Vec<T>,
    pub tau_values: Vec<T>,
    pub tie_tau: bool,
    pub tie_c: bool,
    pub kernel_kind: KernelKind,
    pub width: WidthConvention,
}

impl<T: Scalar> GridSpec<T> {
    /// `c ∈ 2^-5..2^5`, width `∈ 2^-10..2^10`, `τ ∈ {0.5, 0.8, 1}`, both tied.
    pub fn default_for(kernel_kind: KernelKind) -> Self {
        Self {
            c_values: powers_of_two(-5, 5),
            sigma_values: powers_of_two(-10, 10),
            tau_values: vec![T::c(0.5), T::c(0.8), T::one()],
            tie_tau: true,
            tie_c: true,
            kernel_kind,
            width: WidthConvention::Sigma,
        }
    }

    pub fn validate(&self) -> Result<(), ModelSelectError> {
        let lists: [(&str, &[T]); 3] = [("c", &self.c_values), ("sigma", &self.sigma_values), ("tau", &self.tau_values)];
        for (name, list) in lists {
            if list.is_empty() && !(name == "sigma" && self.kernel_kind == KernelKind::Linear) {
                return Err(ModelSelectError::Grid(format!("{name} list is empty")));
            }
        }
        if let Some(c) = self.c_values.iter().find(|c| !(c.is_finite() && **c > T::zero())) {
            return Err(ModelSelectError::Grid(format!("c value {c} must be finite and > 0")));
        }
        if self.kernel_kind == KernelKind::Gaussian {
            if let Some(s) = self.sigma_values.iter().find(|s| !(s.is_finite() && **s > T::zero())) {
                return Err(ModelSelectError::Grid(format!("width value {s} must be finite and > 0")));
            }
        }
        if let Some(t) = self.tau_values.iter().find(|t| !(**t >= T::zero() && **t <= T::one())) {
            return Err(ModelSelectError::Grid(format!("tau value {t} must lie in [0, 1]")));
        }
        Ok(())
    }

    fn kernels(&self) -> Result<Vec<KernelSpec<T>>, ModelSelectError> {
        match self.kernel_kind {
            KernelKind::Linear => Ok(vec![KernelSpec::linear()]),
            KernelKind::Gaussian => self
                .sigma_values
                .iter()
                .map(|&mu| KernelSpec::gaussian(self.width.sigma_from_mu(mu)).map_err(|e| ModelSelectError::Params(e.into())))
                .collect(),
        }
    }

    fn pairs(values: &[T], tied: bool) -> Vec<(T, T)> {
        if tied {
            values.iter().map(|&v| (v, v)).collect()
        } else {
            values.iter().flat_map(|&a| values.iter().map(move |&b| (a, b))).collect()
        }
    }

    /// Every parameter tuple, in grid order: c pair, then width, then τ pair.
    pub fn tuples(&self) -> Result<Vec<PinGtsvmParams<T>>, ModelSelectError> {
        self.validate()?;
        let kernels = self.kernels()?;
        let taus = Self::pairs(&self.tau_values, self.tie_tau);
        let mut out = Vec::with_capacity(self.len());
        for (c1, c2) in Self::pairs(&self.c_values, self.tie_c) {
            for kernel in &kernels {
                for &(tau1, tau2) in &taus {
                    let params = PinGtsvmParams { c1, c2, tau1, tau2, ..PinGtsvmParams::new(c1, tau1, *kernel) };
                    params.validate()?;
                    out.push(params);
                }
            }
        }
        Ok(out)
    }

    /// Number of tuples `tuples` yields.
    pub fn len(&self) -> usize {
        let square = |n: usize, tied: bool| if tied { n } else { n * n };
        let widths = match self.kernel_kind {
            KernelKind::Linear => 1,
            KernelKind::Gaussian => self.sigma_values.len(),
        };
        square(self.c_values.len(), self.tie_c) * widths * square(self.tau_values.len(), self.tie_tau)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult<T> {
    pub params: PinGtsvmParams<T>,
    /// Position of `params` in grid order.
    pub grid_index: usize,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation.
    pub std_accuracy: f64,
    pub wall_time: f64,
    /// Training error per fold. A failed fold is scored as if every
    /// validation row were predicted `+1`.
    pub fold_errors: Vec<Option<String>>,
}

impl<T> CvResult<T> {
    pub fn failed(&self) -> bool {
        self.fold_errors.iter().any(Option::is_some)
    }

    pub fn failed_folds(&self) -> usize {
        self.fold_errors.iter().filter(|e| e.is_some()).count()
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn accuracy(y_true: &[i8], y_pred: &[i8]) -> f64 {
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    hits as f64 / y_true.len() as f64
}

type Folds = Vec<(Vec<usize>, Vec<usize>)>;

fn score_folds<T: Scalar>(ds: &FeatureDataset<T>, params: &PinGtsvmParams<T>, folds: &Folds, grid_index: usize) -> CvResult<T> {
    let start = Instant::now();
    let settings = QpSettings::default();
    let mut fold_accuracies = Vec::with_capacity(folds.len());
    let mut fold_errors = Vec::with_capacity(folds.len());
    for (train_idx, val_idx) in folds {
        let fit = ds.subset(train_idx);
        let val = ds.subset(val_idx);
        let pred = train(&fit, params, &settings).and_then(|model| model.predict(val.features()));
        match pred {
            Ok(pred) => {
                fold_accuracies.push(accuracy(val.labels(), &pred));
                fold_errors.push(None);
            }
            Err(e) => {
                fold_accuracies.push(accuracy(val.labels(), &vec![1; val.n()]));
                fold_errors.push(Some(e.to_string()));
            }
        }
    }
    let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracies);
    CvResult {
        params: *params,
        grid_index,
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        wall_time: start.elapsed().as_secs_f64(),
        fold_errors,
    }
}

/// k-fold accuracy of one parameter tuple. Training failures are recorded
/// per fold rather than returned.
pub fn cross_validate<T: Scalar>(
    ds: &FeatureDataset<T>,
    params: &PinGtsvmParams<T>,
    k: usize,
    seed: u64,
) -> Result<CvResult<T>, ModelSelectError> {
    params.validate()?;
    let folds = kfold_indices(ds.labels(), k, seed)?;
    Ok(score_folds(ds, params, &folds, 0))
}

/// Best first: higher mean accuracy, then smaller `c1 + c2`, then smaller
/// width, then earlier grid position.
pub fn rank_order<T: Scalar>(a: &CvResult<T>, b: &CvResult<T>) -> Ordering {
    let width = |r: &CvResult<T>| match r.params.kernel.kind {
        KernelKind::Linear => T::zero(),
        KernelKind::Gaussian => r.params.kernel.sigma,
    };
    let cmp = |x: T, y: T| x.partial_cmp(&y).unwrap_or(Ordering::Equal);
    b.mean_accuracy
        .total_cmp(&a.mean_accuracy)
        .then_with(|| cmp(a.params.c1 + a.params.c2, b.params.c1 + b.params.c2))
        .then_with(|| cmp(width(a), width(b)))
        .then_with(|| a.grid_index.cmp(&b.grid_index))
}

/// Cross-validates every tuple on the same folds and returns them ranked.
pub fn grid_search<T: Scalar>(
    ds: &FeatureDataset<T>,
    grid: &GridSpec<T>,
    k: usize,
    seed: u64,
) -> Result<Vec<CvResult<T>>, ModelSelectError> {
    let tuples = grid.tuples()?;
    let folds = kfold_indices(ds.labels(), k, seed)?;
    let mut results: Vec<CvResult<T>> = tuples
        .iter()
        .enumerate()
        .map(|(i, p)| score_folds(ds, p, &folds, i))
        .collect();
    results.sort_by(rank_order);
    Ok(results)
}

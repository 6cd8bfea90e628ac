//! Linear and Gaussian kernels and dense Gram matrices.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::{dot, Matrix};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("gaussian width must be finite and > 0, got {0}")]
    Width(f64),
    #[error("unknown kernel `{0}` (expected linear or gaussian)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Linear,
    Gaussian,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Linear => "linear",
            KernelKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for KernelKind {
    type Err = KernelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "gaussian" | "rbf" => Ok(KernelKind::Gaussian),
            _ => Err(KernelError::UnknownKind(s.to_string())),
        }
    }
}

/// How a grid width value `mu` is turned into the Gaussian `sigma`.
///
/// The default reads `mu` as `sigma` itself. `InverseWidth` reads it as the
/// coefficient `gamma = 1/(2 sigma^2)` in `exp(-gamma * |x - y|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthConvention {
    #[default]
    Sigma,
    InverseWidth,
}

impl WidthConvention {
    pub fn sigma_from_mu<T: Scalar>(self, mu: T) -> T {
        match self {
            WidthConvention::Sigma => mu,
            WidthConvention::InverseWidth => (T::one() / (T::c(2.0) * mu)).sqrt(),
        }
    }
}

impl FromStr for WidthConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigma" => Ok(WidthConvention::Sigma),
            "inverse-width" | "gamma" => Ok(WidthConvention::InverseWidth),
            _ => Err(format!("unknown width convention `{s}` (expected sigma or inverse-width)")),
        }
    }
}

/// Kernel kind plus the Gaussian width (ignored for the linear kernel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    pub kind: KernelKind,
    pub sigma: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn linear() -> Self {
        Self { kind: KernelKind::Linear, sigma: T::one() }
    }

    pub fn gaussian(sigma: T) -> Result<Self, KernelError> {
        let spec = Self { kind: KernelKind::Gaussian, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if self.kind == KernelKind::Gaussian && !(self.sigma.is_finite() && self.sigma > T::zero()) {
            return Err(KernelError::Width(self.sigma.to_f64_lossy()));
        }
        Ok(())
    }

    #[inline]
    fn eval_unchecked(&self, x: &[T], y: &[T]) -> T {
        match self.kind {
            KernelKind::Linear => dot(x, y),
            KernelKind::Gaussian => {
                let sq = x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| {
                    let d = a - b;
                    acc + d * d
                });
                (-sq / (T::c(2.0) * self.sigma * self.sigma)).exp()
            }
        }
    }

    /// `K(x, y)`: `xᵀy` or `exp(-|x - y|² / (2σ²))`.
    pub fn value(&self, x: &[T], y: &[T]) -> Result<T, KernelError> {
        if x.len() != y.len() {
            return Err(KernelError::Dimension(x.len(), y.len()));
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Row of kernel values `K(x, Y_j)` for every row of `y`.
    pub fn row(&self, x: &[T], y: &Matrix<T>) -> Result<Vec<T>, KernelError> {
        if x.len() != y.cols() {
            return Err(KernelError::Dimension(x.len(), y.cols()));
        }
        Ok(y.row_iter().map(|yj| self.eval_unchecked(x, yj)).collect())
    }

    /// Dense Gram matrix with entry `(i, j) = K(X_i, Y_j)`.
    pub fn gram(&self, x: &Matrix<T>, y: &Matrix<T>) -> Result<Matrix<T>, KernelError> {
        if x.cols() != y.cols() {
            return Err(KernelError::Dimension(x.cols(), y.cols()));
        }
        let mut out = Matrix::zeros(x.rows(), y.rows());
        for i in 0..x.rows() {
            let xi = x.row(i);
            for (o, yj) in out.row_mut(i).iter_mut().zip(y.row_iter()) {
                *o = self.eval_unchecked(xi, yj);
            }
        }
        Ok(out)
    }

    /// Symmetric Gram matrix of a point set with itself.
    pub fn gram_sym(&self, x: &Matrix<T>) -> Matrix<T> {
        let n = x.rows();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                out[(i, j)] = self.eval_unchecked(x.row(i), x.row(j));
            }
        }
        out.mirror_lower();
        out
    }
}

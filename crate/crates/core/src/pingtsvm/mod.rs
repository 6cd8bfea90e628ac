//! Pin-GTSVM training and prediction.
//!
//! Each surface solves a primal QP over `(u, b, ξ)`: a least-squares fit to
//! its own class, plus a pinball penalty on the residuals of the other class
//! written through its epigraph.

mod persist;

use std::fmt;

use thiserror::Error;

use crate::dataset::{DatasetError, FeatureDataset, LabelMap, Standardizer};
use crate::kernel::{KernelError, KernelSpec};
use crate::linalg::{dot, Matrix};
use crate::qp::{solve_qp, QpError, QpProblem, QpSettings, QpSolution, QpStatus};
use crate::Scalar;

pub use persist::{load_model, parse_model, save_model, write_model, FORMAT_VERSION};

/// Added under the square root of the kernel-metric norm.
pub const NORM_EPS: f64 = 1e-12;

/// A surface whose outputs on every training row stay below this is treated
/// as identically zero.
pub const ZERO_SURFACE_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum PinGtsvmError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{surface}: {source}")]
    Qp { surface: Surface, source: QpError },
    #[error("{surface}: solver stopped with status {status}")]
    NotConverged { surface: Surface, status: QpStatus },
    #[error("both surfaces are numerically zero; the model cannot separate the classes")]
    DegenerateNorm,
    #[error("input has {found} features, model expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("unsupported model format `{found}` (expected `{expected}`)")]
    Version { found: String, expected: String },
    #[error("model checksum mismatch")]
    Checksum,
    #[error("corrupt model file, line {line}: {msg}")]
    Corrupt { line: usize, msg: String },
}

/// The two kernel surfaces: `First` is proximal to class `+1`, `Second` to `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surface {
    First,
    Second,
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Surface::First => "surface1",
            Surface::Second => "surface2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinGtsvmParams<T> {
    pub c1: T,
    pub c2: T,
    pub tau1: T,
    pub tau2: T,
    pub kernel: KernelSpec<T>,
    /// Relative ridge on `(u, b)`, multiplied by the mean diagonal of the fit block.
    pub ridge: T,
}

impl<T: Scalar> PinGtsvmParams<T> {
    pub fn new(c: T, tau: T, kernel: KernelSpec<T>) -> Self {
        Self { c1: c, c2: c, tau1: tau, tau2: tau, kernel, ridge: Self::default_ridge() }
    }

    /// `1e-8`, raised for types whose rounding of the fit block would
    /// otherwise swamp it.
    pub fn default_ridge() -> T {
        (T::epsilon() * T::c(1e3)).max(T::c(1e-8))
    }

    pub fn with_ridge(mut self, ridge: T) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn validate(&self) -> Result<(), PinGtsvmError> {
        for (name, c) in [("c1", self.c1), ("c2", self.c2)] {
            if !(c.is_finite() && c > T::zero()) {
                return Err(PinGtsvmError::Param(format!("{name} must be finite and > 0, got {c}")));
            }
        }
        for (name, t) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            check_tau(t).map_err(|_| PinGtsvmError::Param(format!("{name} must lie in [0, 1], got {t}")))?;
        }
        if !(self.ridge.is_finite() && self.ridge >= T::zero()) {
            return Err(PinGtsvmError::Param(format!("ridge must be finite and >= 0, got {}", self.ridge)));
        }
        self.kernel.validate()?;
        Ok(())
    }

    fn side(&self, surface: Surface) -> (T, T) {
        match surface {
            Surface::First => (self.c1, self.tau1),
            Surface::Second => (self.c2, self.tau2),
        }
    }
}

fn check_tau<T: Scalar>(tau: T) -> Result<(), PinGtsvmError> {
    if tau >= T::zero() && tau <= T::one() {
        Ok(())
    } else {
        Err(PinGtsvmError::Param(format!("tau must lie in [0, 1], got {tau}")))
    }
}

/// Pinball loss `max((1 - τ)s, -τs)`.
pub fn pinball_loss<T: Scalar>(s: T, tau: T) -> Result<T, PinGtsvmError> {
    check_tau(tau)?;
    Ok(((T::one() - tau) * s).max(-tau * s))
}

/// Support rows and their Gram matrix, shared by both surfaces.
struct Workspace<T> {
    support: Matrix<T>,
    gram: Matrix<T>,
    n_pos: usize,
}

impl<T: Scalar> Workspace<T> {
    fn new(ds: &FeatureDataset<T>, params: &PinGtsvmParams<T>) -> Result<Self, PinGtsvmError> {
        params.validate()?;
        for label in [1i8, -1] {
            if ds.count(label) == 0 {
                return Err(DatasetError::ClassTooSmall { label, count: 0, need: 1 }.into());
            }
        }
        let mut order = ds.indices_of(1);
        let n_pos = order.len();
        order.extend(ds.indices_of(-1));
        let support = ds.features().select_rows(&order);
        let gram = params.kernel.gram_sym(&support);
        Ok(Self { support, gram, n_pos })
    }

    fn m(&self) -> usize {
        self.support.rows()
    }

    /// `(own rows, other rows, sign)`: residual on other row `i` is `1 + sign·f(i)`.
    fn rows(&self, surface: Surface) -> (std::ops::Range<usize>, std::ops::Range<usize>, T) {
        let (a, b) = (0..self.n_pos, self.n_pos..self.m());
        match surface {
            Surface::First => (a, b, T::one()),
            Surface::Second => (b, a, -T::one()),
        }
    }

    /// `[K(rows, D) | 1]`.
    fn augmented(&self, rows: std::ops::Range<usize>) -> Matrix<T> {
        let m = self.m();
        let mut out = Matrix::zeros(rows.len(), m + 1);
        for (k, i) in rows.enumerate() {
            let r = out.row_mut(k);
            r[..m].copy_from_slice(self.gram.row(i));
            r[m] = T::one();
        }
        out
    }

    fn fit_and_ridge(&self, surface: Surface, ridge: T) -> (Matrix<T>, T) {
        let (own, _, _) = self.rows(surface);
        let hth = self.augmented(own).gram_tn();
        let diag = hth.diag();
        let mean = diag.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize(diag.len()).unwrap_or(T::one());
        (hth, ridge * mean)
    }

    fn assemble(&self, surface: Surface, params: &PinGtsvmParams<T>) -> QpProblem<T> {
        let (c, tau) = params.side(surface);
        let (_, other, sign) = self.rows(surface);
        let m = self.m();
        let l = other.len();
        let nz = m + 1;
        let n = nz + l;
        let (hth, rho) = self.fit_and_ridge(surface, params.ridge);

        let mut p = Matrix::zeros(n, n);
        for i in 0..nz {
            p.row_mut(i)[..nz].copy_from_slice(hth.row(i));
            p[(i, i)] = p[(i, i)] + rho;
        }
        let mut q = vec![T::zero(); n];
        for v in &mut q[nz..] {
            *v = c;
        }

        let nmat = self.augmented(other);
        let one = T::one();
        let mut g = Matrix::zeros(2 * l, n);
        let mut h = vec![T::zero(); 2 * l];
        for i in 0..l {
            let row = nmat.row(i);
            // ξ ≥ (1 - τ)·r  and  ξ ≥ -τ·r  with  r = 1 + sign·N z
            let upper = g.row_mut(i);
            for j in 0..nz {
                upper[j] = (one - tau) * sign * row[j];
            }
            upper[nz + i] = -one;
            h[i] = -(one - tau);
            let lower = g.row_mut(l + i);
            for j in 0..nz {
                lower[j] = -tau * sign * row[j];
            }
            lower[nz + i] = -one;
            h[l + i] = tau;
        }
        QpProblem { p, q, g, h }
    }

    fn objective(&self, surface: Surface, params: &PinGtsvmParams<T>, u: &[T], b: T) -> T {
        let (c, tau) = params.side(surface);
        let (own, other, sign) = self.rows(surface);
        let (_, rho) = self.fit_and_ridge(surface, params.ridge);
        let f = |i: usize| dot(self.gram.row(i), u) + b;
        let fit = own.map(f).fold(T::zero(), |a, v| a + v * v);
        let penalty = other
            .map(|i| {
                let r = T::one() + sign * f(i);
                ((T::one() - tau) * r).max(-tau * r)
            })
            .fold(T::zero(), |a, v| a + v);
        T::c(0.5) * fit + T::c(0.5) * rho * (dot(u, u) + b * b) + c * penalty
    }
}

/// The primal QP of one surface. Variables are `(u, b, ξ)` with `u` indexed
/// by the support rows (class `+1` first, each class in dataset order).
pub fn assemble_primal<T: Scalar>(
    surface: Surface,
    ds: &FeatureDataset<T>,
    params: &PinGtsvmParams<T>,
) -> Result<QpProblem<T>, PinGtsvmError> {
    Ok(Workspace::new(ds, params)?.assemble(surface, params))
}

/// Objective of one surface at `(u, b)` with slacks at their exact pinball values.
pub fn empirical_objective<T: Scalar>(
    surface: Surface,
    ds: &FeatureDataset<T>,
    params: &PinGtsvmParams<T>,
    u: &[T],
    b: T,
) -> Result<T, PinGtsvmError> {
    let ws = Workspace::new(ds, params)?;
    if u.len() != ws.m() {
        return Err(PinGtsvmError::Dimension { expected: ws.m(), found: u.len() });
    }
    Ok(ws.objective(surface, params, u, b))
}

/// Per-surface decision values for one input row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionValues<T> {
    pub f1: T,
    pub f2: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Scalar> DecisionValues<T> {
    /// `+1` iff the first surface is at least as near.
    pub fn label(&self) -> i8 {
        if self.d1 <= self.d2 {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinGtsvmModel<T> {
    pub support: Matrix<T>,
    pub u1: Vec<T>,
    pub b1: T,
    pub u2: Vec<T>,
    pub b2: T,
    pub norm1: T,
    pub norm2: T,
    pub params: PinGtsvmParams<T>,
    /// Single token per class, used when writing predictions.
    pub label_map: LabelMap,
    /// Applied to raw inputs before the kernel when present.
    pub standardizer: Option<Standardizer<T>>,
}

/// A trained model together with the two solver reports.
#[derive(Debug, Clone)]
pub struct Trained<T> {
    pub model: PinGtsvmModel<T>,
    pub surface1: QpSolution<T>,
    pub surface2: QpSolution<T>,
}

pub fn train<T: Scalar>(
    ds: &FeatureDataset<T>,
    params: &PinGtsvmParams<T>,
    settings: &QpSettings<T>,
) -> Result<PinGtsvmModel<T>, PinGtsvmError> {
    train_detailed(ds, params, settings).map(|t| t.model)
}

pub fn train_detailed<T: Scalar>(
    ds: &FeatureDataset<T>,
    params: &PinGtsvmParams<T>,
    settings: &QpSettings<T>,
) -> Result<Trained<T>, PinGtsvmError> {
    let ws = Workspace::new(ds, params)?;
    let m = ws.m();
    let solve = |surface| -> Result<QpSolution<T>, PinGtsvmError> {
        let prob = ws.assemble(surface, params);
        let sol = solve_qp(&prob, settings).map_err(|source| PinGtsvmError::Qp { surface, source })?;
        if sol.status != QpStatus::Optimal {
            return Err(PinGtsvmError::NotConverged { surface, status: sol.status });
        }
        Ok(sol)
    };
    let s1 = solve(Surface::First)?;
    let s2 = solve(Surface::Second)?;

    let norm = |u: &[T]| (dot(u, &ws.gram.mul_vec(u)).max(T::zero()) + T::c(NORM_EPS)).sqrt();
    let zero_surface = |u: &[T], b: T| {
        let f = ws.gram.mul_vec(u);
        f.iter().all(|&v| (v + b).abs() <= T::c(ZERO_SURFACE_TOL))
    };
    let (u1, b1) = (s1.x[..m].to_vec(), s1.x[m]);
    let (u2, b2) = (s2.x[..m].to_vec(), s2.x[m]);
    if zero_surface(&u1, b1) && zero_surface(&u2, b2) {
        return Err(PinGtsvmError::DegenerateNorm);
    }
    let model = PinGtsvmModel {
        norm1: norm(&u1),
        norm2: norm(&u2),
        u1,
        b1,
        u2,
        b2,
        support: ws.support,
        params: *params,
        label_map: LabelMap::pair("+1", "-1").expect("distinct tokens"),
        standardizer: None,
    };
    Ok(Trained { model, surface1: s1, surface2: s2 })
}

impl<T: Scalar> PinGtsvmModel<T> {
    /// Number of raw input features.
    pub fn d(&self) -> usize {
        self.support.cols()
    }

    pub fn m(&self) -> usize {
        self.support.rows()
    }

    pub fn surface(&self, surface: Surface) -> (&[T], T) {
        match surface {
            Surface::First => (&self.u1, self.b1),
            Surface::Second => (&self.u2, self.b2),
        }
    }

    pub fn with_label_map(mut self, labels: LabelMap) -> Self {
        self.label_map = labels;
        self
    }

    pub fn with_standardizer(mut self, s: Standardizer<T>) -> Self {
        self.standardizer = Some(s);
        self
    }

    pub fn decision_values(&self, x: &[T]) -> Result<DecisionValues<T>, PinGtsvmError> {
        if x.len() != self.d() {
            return Err(PinGtsvmError::Dimension { expected: self.d(), found: x.len() });
        }
        let scaled;
        let x = match &self.standardizer {
            Some(s) => {
                scaled = s.transform_row(x);
                &scaled[..]
            }
            None => x,
        };
        let k = self.params.kernel.row(x, &self.support)?;
        let f1 = dot(&k, &self.u1) + self.b1;
        let f2 = dot(&k, &self.u2) + self.b2;
        Ok(DecisionValues { f1, f2, d1: f1.abs() / self.norm1, d2: f2.abs() / self.norm2 })
    }

    pub fn predict(&self, x: &Matrix<T>) -> Result<Vec<i8>, PinGtsvmError> {
        if x.cols() != self.d() {
            return Err(PinGtsvmError::Dimension { expected: self.d(), found: x.cols() });
        }
        x.row_iter().map(|r| self.decision_values(r).map(|v| v.label())).collect()
    }

    /// Objective of one trained surface on its training set.
    pub fn empirical_objective(&self, surface: Surface, ds: &FeatureDataset<T>) -> Result<T, PinGtsvmError> {
        let (u, b) = self.surface(surface);
        empirical_objective(surface, ds, &self.params, u, b)
    }

    pub fn validate(&self) -> Result<(), PinGtsvmError> {
        let m = self.m();
        if self.u1.len() != m || self.u2.len() != m {
            return Err(PinGtsvmError::Corrupt { line: 0, msg: "coefficient length differs from support rows".into() });
        }
        let finite = self.support.is_finite()
            && self.u1.iter().chain(&self.u2).all(|v| v.is_finite())
            && [self.b1, self.b2, self.norm1, self.norm2].iter().all(|v| v.is_finite());
        if !finite || !(self.norm1 > T::zero() && self.norm2 > T::zero()) {
            return Err(PinGtsvmError::Corrupt { line: 0, msg: "non-finite values or non-positive norms".into() });
        }
        if let Some(s) = &self.standardizer {
            if s.mean.len() != self.d() || s.scale.len() != self.d() {
                return Err(PinGtsvmError::Corrupt { line: 0, msg: "standardizer width differs from features".into() });
            }
        }
        self.params.validate()
    }
}

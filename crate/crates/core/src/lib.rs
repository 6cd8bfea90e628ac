//! Pinball-loss generalized twin support vector machine (Pin-GTSVM).
//!
//! Two non-parallel kernel surfaces are trained by solving two convex
//! quadratic programs whose slack penalty is the pinball loss. A point is
//! assigned to the class whose surface is nearest in the kernel metric.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the CLI and the
//! experiment drivers use.

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod modelselect;
pub mod pingtsvm;
pub mod qp;

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the solver and models are generic over.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Debug
    + Display
    + LowerExp
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Short name written into persisted models.
    const NAME: &'static str;

    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";
}

pub use dataset::{FeatureDataset, LabelMap, NoiseSpec, Standardizer};
pub use kernel::{KernelKind, KernelSpec, WidthConvention};
pub use linalg::Matrix;
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use modelselect::{CvResult, GridSpec};
pub use pingtsvm::{PinGtsvmModel, PinGtsvmParams, Surface};
pub use qp::{QpProblem, QpSettings, QpSolution, QpStatus};

pub type Dataset = FeatureDataset<f64>;
pub type Kernel = KernelSpec<f64>;
pub type Params = PinGtsvmParams<f64>;
pub type Model = PinGtsvmModel<f64>;
pub type Grid = GridSpec<f64>;
pub type CrossValidation = CvResult<f64>;
pub type Problem = QpProblem<f64>;
pub type Solution = QpSolution<f64>;
pub type Settings = QpSettings<f64>;

pub type Mat = Matrix<f64>;

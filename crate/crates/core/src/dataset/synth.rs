//! Synthetic binary datasets. Class `+1` rows come first, then class `-1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DatasetError, FeatureDataset};
use crate::linalg::Matrix;
use crate::Scalar;

fn check<T: Scalar>(n_per_class: usize, sigma: T) -> Result<(), DatasetError> {
    if n_per_class == 0 {
        return Err(DatasetError::Param("need at least one point per class".into()));
    }
    if !(sigma.is_finite() && sigma >= T::zero()) {
        return Err(DatasetError::Param(format!("noise sigma {sigma} must be finite and >= 0")));
    }
    Ok(())
}

fn normal<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    let e: f64 = StandardNormal.sample(rng);
    T::c(e)
}

fn labels(n_per_class: usize) -> Vec<i8> {
    let mut y = vec![1i8; n_per_class];
    y.extend(std::iter::repeat_n(-1i8, n_per_class));
    y
}

/// Two isotropic Gaussian blobs centered at `(±separation/2, 0, ..., 0)`.
pub fn make_blobs<T: Scalar>(n_per_class: usize, d: usize, separation: T, sigma: T, seed: u64) -> Result<FeatureDataset<T>, DatasetError> {
    check(n_per_class, sigma)?;
    if d == 0 {
        return Err(DatasetError::NoFeatures);
    }
    if !separation.is_finite() {
        return Err(DatasetError::Param("separation must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = separation / T::c(2.0);
    let mut data = Vec::with_capacity(2 * n_per_class * d);
    for center in [half, -half] {
        for _ in 0..n_per_class {
            for j in 0..d {
                let c = if j == 0 { center } else { T::zero() };
                data.push(c + sigma * normal::<T>(&mut rng));
            }
        }
    }
    let m = Matrix::from_vec(2 * n_per_class, d, data).map_err(|e| DatasetError::Param(e.to_string()))?;
    FeatureDataset::new(m, labels(n_per_class))
}

/// Two crossing line clusters: class `+1` along `y = x`, class `-1` along
/// `y = -x`, with `x` uniform on `[-1, 1]` and Gaussian perturbation.
pub fn make_crossplanes<T: Scalar>(n_per_class: usize, noise_sigma: T, seed: u64) -> Result<FeatureDataset<T>, DatasetError> {
    check(n_per_class, noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(4 * n_per_class);
    for slope in [T::one(), -T::one()] {
        for _ in 0..n_per_class {
            let x = T::c(rng.random_range(-1.0..=1.0));
            let px = x + noise_sigma * normal::<T>(&mut rng);
            let py = slope * x + noise_sigma * normal::<T>(&mut rng);
            data.push(px);
            data.push(py);
        }
    }
    let m = Matrix::from_vec(2 * n_per_class, 2, data).map_err(|e| DatasetError::Param(e.to_string()))?;
    FeatureDataset::new(m, labels(n_per_class))
}

/// Interleaved half circles: class `+1` on the upper unit half circle around
/// the origin, class `-1` on the lower unit half circle around `(1, 0.5)`.
/// Angles are evenly spaced on `[0, π]`; only the noise is random.
pub fn make_two_moons<T: Scalar>(n_per_class: usize, noise_sigma: T, seed: u64) -> Result<FeatureDataset<T>, DatasetError> {
    check(n_per_class, noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = if n_per_class > 1 { std::f64::consts::PI / (n_per_class - 1) as f64 } else { 0.0 };
    let mut data = Vec::with_capacity(4 * n_per_class);
    for upper in [true, false] {
        for i in 0..n_per_class {
            let t = step * i as f64;
            let (x, y) = if upper { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
            data.push(T::c(x) + noise_sigma * normal::<T>(&mut rng));
            data.push(T::c(y) + noise_sigma * normal::<T>(&mut rng));
        }
    }
    let m = Matrix::from_vec(2 * n_per_class, 2, data).map_err(|e| DatasetError::Param(e.to_string()))?;
    FeatureDataset::new(m, labels(n_per_class))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_zero_variance() {
        let ds = make_blobs(1, 2, 4.0, 0.0, 3).unwrap();
        assert_eq!(ds.row(0), &[2.0, 0.0]);
        assert_eq!(ds.row(1), &[-2.0, 0.0]);
        assert_eq!(ds.labels(), &[1, -1]);
    }

    #[test]
    fn blobs_counts_and_determinism() {
        let ds = make_blobs(50, 2, 3.0, 1.0, 8).unwrap();
        assert_eq!(ds.n(), 100);
        assert_eq!((ds.count(1), ds.count(-1)), (50, 50));
        assert_eq!(ds, make_blobs(50, 2, 3.0, 1.0, 8).unwrap());
        assert_ne!(ds, make_blobs(50, 2, 3.0, 1.0, 9).unwrap());
        assert!(make_blobs::<f64>(0, 2, 3.0, 1.0, 8).is_err());
        assert!(make_blobs::<f64>(3, 2, 3.0, -1.0, 8).is_err());
    }

    #[test]
    fn crossplanes_on_lines() {
        let ds = make_crossplanes(2, 0.0, 5).unwrap();
        for i in 0..2 {
            assert_eq!(ds.row(i)[0], ds.row(i)[1]);
            assert_eq!(ds.row(i + 2)[0], -ds.row(i + 2)[1]);
        }
        let big = make_crossplanes::<f64>(100, 0.1, 5).unwrap();
        assert_eq!(big.n(), 200);
        assert_eq!(big, make_crossplanes(100, 0.1, 5).unwrap());
        assert!(big.features().as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn moons_on_circles() {
        let ds = make_two_moons::<f64>(25, 0.0, 1).unwrap();
        assert_eq!(ds.n(), 50);
        for i in 0..25 {
            let r = ds.row(i);
            assert!((r[0].hypot(r[1]) - 1.0).abs() < 1e-12 && r[1] >= -1e-12);
            let s = ds.row(i + 25);
            assert!(((s[0] - 1.0).hypot(s[1] - 0.5) - 1.0).abs() < 1e-12 && s[1] <= 0.5 + 1e-12);
        }
        assert_eq!(make_two_moons(30, 0.1, 2).unwrap(), make_two_moons(30, 0.1, 2).unwrap());
    }
}

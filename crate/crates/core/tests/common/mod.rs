//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pingtsvm::{Dataset, Mat, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random strictly convex QP with `n` variables and `m` inequality rows,
/// feasible at the origin shifted by a random point.
pub fn random_strict_qp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Problem {
    let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = DMatrix::from_row_slice(n, n, &a);
    let p = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
    let q: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut g = Vec::with_capacity(m * n);
    let mut h = Vec::with_capacity(m);
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let slack: f64 = rng.random_range(0.0..0.5);
        h.push(row.iter().zip(&x0).map(|(a, b)| a * b).sum::<f64>() + slack);
        g.extend(row);
    }
    let pm = Mat::from_vec(n, n, p.transpose().as_slice().to_vec()).unwrap();
    let gm = Mat::from_vec(m, n, g).unwrap();
    Problem::new(pm, q, gm, h).unwrap()
}

fn to_na(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Exact optimum by enumerating every candidate active set: solve the
/// equality-constrained KKT system and keep feasible, dual-feasible points.
pub fn enumerate_active_sets(prob: &Problem) -> Option<(Vec<f64>, f64)> {
    let n = prob.n();
    let m = prob.m();
    let p = to_na(&prob.p);
    let g = to_na(&prob.g);
    let q = DVector::from_column_slice(&prob.q);
    let h = DVector::from_column_slice(&prob.h);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let act: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if act.len() > n {
            continue;
        }
        let k = act.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p);
        let mut rhs = DVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&q));
        for (a, &i) in act.iter().enumerate() {
            for j in 0..n {
                kkt[(n + a, j)] = g[(i, j)];
                kkt[(j, n + a)] = g[(i, j)];
            }
            rhs[n + a] = h[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let x = sol.rows(0, n).into_owned();
        if (0..k).any(|a| sol[n + a] < -1e-10) {
            continue;
        }
        let gx = &g * &x;
        if (0..m).any(|i| gx[i] > h[i] + 1e-9) {
            continue;
        }
        let obj = 0.5 * x.dot(&(&p * &x)) + q.dot(&x);
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((x.as_slice().to_vec(), obj));
        }
    }
    best
}

/// Random 2D dataset with `n_pos` and `n_neg` points uniform in `[-1, 1]²`.
pub fn random_2d(rng: &mut ChaCha8Rng, n_pos: usize, n_neg: usize) -> Dataset {
    let rows: Vec<[f64; 2]> = (0..n_pos + n_neg).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let mut labels = vec![1i8; n_pos];
    labels.extend(vec![-1i8; n_neg]);
    Dataset::from_rows(&rows, labels).unwrap()
}

/// Two overlapping Gaussian clouds in 2D with random centers.
pub fn random_clouds(rng: &mut ChaCha8Rng, n_pos: usize, n_neg: usize) -> Dataset {
    let mut center = || [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
    let (cp, cn) = (center(), center());
    let mut rows = Vec::new();
    for (c, count) in [(cp, n_pos), (cn, n_neg)] {
        for _ in 0..count {
            let e: [f64; 2] = [rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal)];
            rows.push([c[0] + e[0], c[1] + e[1]]);
        }
    }
    let mut labels = vec![1i8; n_pos];
    labels.extend(vec![-1i8; n_neg]);
    Dataset::from_rows(&rows, labels).unwrap()
}

fn class_rows(ds: &Dataset, label: i8) -> Vec<[f64; 2]> {
    ds.indices_of(label).into_iter().map(|i| [ds.row(i)[0], ds.row(i)[1]]).collect()
}

/// Weight-space objective of one linear surface:
/// `½Σ(own·w + b)² + c·Σ max((1−τ)r, −τr)` with `r = 1 + sign·(other·w + b)`.
pub fn weight_objective(own: &[[f64; 2]], other: &[[f64; 2]], sign: f64, c: f64, tau: f64, w: [f64; 2], b: f64) -> f64 {
    let f = |x: &[f64; 2]| x[0] * w[0] + x[1] * w[1] + b;
    let fit: f64 = own.iter().map(|x| f(x) * f(x)).sum();
    let pen: f64 = other
        .iter()
        .map(|x| {
            let r = 1.0 + sign * f(x);
            ((1.0 - tau) * r).max(-tau * r)
        })
        .sum();
    0.5 * fit + c * pen
}

/// Rows of the class a surface fits, the class it pushes away, and the sign
/// of the residual: surface 1 fits `+1`, surface 2 fits `-1`.
pub fn surface_rows(ds: &Dataset, first: bool) -> (Vec<[f64; 2]>, Vec<[f64; 2]>, f64) {
    let (a, b) = (class_rows(ds, 1), class_rows(ds, -1));
    if first {
        (a, b, 1.0)
    } else {
        (b, a, -1.0)
    }
}

/// Minimum of `weight_objective` over the grid `[-3, 3]³` with step 0.05.
pub fn grid_minimum(own: &[[f64; 2]], other: &[[f64; 2]], sign: f64, c: f64, tau: f64) -> f64 {
    let ticks: Vec<f64> = (0..=120).map(|i| -3.0 + 0.05 * i as f64).collect();
    let mut best = f64::INFINITY;
    for &w0 in &ticks {
        for &w1 in &ticks {
            for &b in &ticks {
                best = best.min(weight_objective(own, other, sign, c, tau, [w0, w1], b));
            }
        }
    }
    best
}

/// Linear weights `w = Dᵀu` of a trained surface.
pub fn weights(support: &Mat, u: &[f64]) -> [f64; 2] {
    let mut w = [0.0; 2];
    for (i, &ui) in u.iter().enumerate() {
        w[0] += support.row(i)[0] * ui;
        w[1] += support.row(i)[1] * ui;
    }
    w
}

/// Classical hinge twin SVM with a linear kernel, solved in weight space
/// through its box-constrained dual by coordinate descent.
pub struct HingeTwsvm {
    pub w1: [f64; 2],
    pub b1: f64,
    pub w2: [f64; 2],
    pub b2: f64,
}

fn augmented(rows: &[[f64; 2]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), 3, |i, j| if j < 2 { rows[i][j] } else { 1.0 })
}

/// `z = −sign·(HᵀH)⁻¹Gᵀα` where `α` maximizes `Σα − ½αᵀG(HᵀH)⁻¹Gᵀα` on `[0, c]`.
fn hinge_surface(own: &[[f64; 2]], other: &[[f64; 2]], sign: f64, c: f64) -> ([f64; 2], f64) {
    let h = augmented(own);
    let g = augmented(other);
    let hth_inv = (h.transpose() * &h).try_inverse().expect("own class spans the plane");
    let q = &g * &hth_inv * g.transpose();
    let l = other.len();
    let mut alpha = DVector::<f64>::zeros(l);
    for _ in 0..2_000_000 {
        let mut worst: f64 = 0.0;
        for i in 0..l {
            let grad = (q.row(i) * &alpha)[0] - 1.0;
            let pg = if alpha[i] <= 0.0 {
                grad.min(0.0)
            } else if alpha[i] >= c {
                grad.max(0.0)
            } else {
                grad
            };
            worst = worst.max(pg.abs());
            if q[(i, i)] > 0.0 {
                alpha[i] = (alpha[i] - grad / q[(i, i)]).clamp(0.0, c);
            }
        }
        if worst < 1e-13 {
            break;
        }
    }
    let z = -sign * (&hth_inv * g.transpose() * &alpha);
    ([z[0], z[1]], z[2])
}

impl HingeTwsvm {
    pub fn fit(ds: &Dataset, c: f64) -> Self {
        let (a, b, _) = surface_rows(ds, true);
        let (w1, b1) = hinge_surface(&a, &b, 1.0, c);
        let (w2, b2) = hinge_surface(&b, &a, -1.0, c);
        Self { w1, b1, w2, b2 }
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        let dist = |w: [f64; 2], b: f64| (x[0] * w[0] + x[1] * w[1] + b).abs() / (w[0] * w[0] + w[1] * w[1]).sqrt();
        if dist(self.w1, self.b1) <= dist(self.w2, self.b2) {
            1
        } else {
            -1
        }
    }
}

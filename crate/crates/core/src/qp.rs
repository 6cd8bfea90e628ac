//! Dense convex quadratic programs in inequality form:
//!
//! ```text
//! minimize  ½ xᵀPx + qᵀx   subject to  Gx ≤ h
//! ```
//!
//! Solved by a primal-dual interior-point method (Mehrotra predictor-corrector
//! on the reduced normal equations), followed by an active-set polish that
//! solves the equality-constrained KKT system of the identified active set.
//! Every returned solution carries its own KKT certificate: primal violation,
//! stationarity `‖Px + q + Gᵀλ‖∞` with `λ ≥ 0`, and complementarity
//! `max λᵢ·|hᵢ − Gᵢx|`.

use std::fmt;

use thiserror::Error;

use crate::linalg::{dot, norm_inf, Cholesky, LinalgError, Lu, Matrix};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("invalid QP: {0}")]
    Invalid(String),
    #[error("linear algebra failure: {0}")]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem<T> {
    pub p: Matrix<T>,
    pub q: Vec<T>,
    pub g: Matrix<T>,
    pub h: Vec<T>,
}

impl<T: Scalar> QpProblem<T> {
    pub fn new(p: Matrix<T>, q: Vec<T>, g: Matrix<T>, h: Vec<T>) -> Result<Self, QpError> {
        let prob = Self { p, q, g, h };
        prob.validate()?;
        Ok(prob)
    }

    pub fn unconstrained(p: Matrix<T>, q: Vec<T>) -> Result<Self, QpError> {
        let n = q.len();
        Self::new(p, q, Matrix::zeros(0, n), Vec::new())
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.q.len();
        if self.p.rows() != n || self.p.cols() != n {
            return Err(QpError::Invalid(format!(
                "P is {}x{} but q has length {n}",
                self.p.rows(),
                self.p.cols()
            )));
        }
        if self.g.cols() != n || self.g.rows() != self.h.len() {
            return Err(QpError::Invalid(format!(
                "G is {}x{}, expected {}x{n}",
                self.g.rows(),
                self.g.cols(),
                self.h.len()
            )));
        }
        if !self.p.is_finite()
            || !self.g.is_finite()
            || !self.q.iter().chain(&self.h).all(|v| v.is_finite())
        {
            return Err(QpError::Invalid("non-finite entry".into()));
        }
        let tol = T::c(1e-12) * self.p.max_abs().max(T::one());
        for i in 0..n {
            for j in 0..i {
                if (self.p[(i, j)] - self.p[(j, i)]).abs() > tol {
                    return Err(QpError::Invalid(format!("P is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[T]) -> T {
        T::c(0.5) * dot(x, &self.p.mul_vec(x)) + dot(&self.q, x)
    }

    /// Adds `Gx ≤ h` rows; returns a new problem.
    pub fn with_constraints(&self, g_rows: &Matrix<T>, h: &[T]) -> Result<Self, QpError> {
        let n = self.n();
        if g_rows.cols() != n || g_rows.rows() != h.len() {
            return Err(QpError::Invalid("appended constraint dimensions".into()));
        }
        let mut data = self.g.as_slice().to_vec();
        data.extend_from_slice(g_rows.as_slice());
        let g = Matrix::from_vec(self.m() + h.len(), n, data)?;
        let mut hh = self.h.clone();
        hh.extend_from_slice(h);
        Self::new(self.p.clone(), self.q.clone(), g, hh)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

impl fmt::Display for QpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QpStatus::Optimal => "optimal",
            QpStatus::MaxIterations => "max-iterations",
            QpStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings<T> {
    pub tol_feas: T,
    pub tol_stat: T,
    pub tol_comp: T,
    pub max_iter: usize,
    /// Added to the diagonal of P before solving. Zero by default.
    pub ridge: T,
}

impl<T: Scalar> Default for QpSettings<T> {
    fn default() -> Self {
        Self {
            tol_feas: T::c(1e-8),
            tol_stat: T::c(1e-6),
            tol_comp: T::c(1e-6),
            max_iter: 200_000,
            ridge: T::zero(),
        }
    }
}

impl<T: Scalar> QpSettings<T> {
    fn validate(&self) -> Result<(), QpError> {
        let ok = |v: T| v.is_finite() && v > T::zero();
        if !(ok(self.tol_feas) && ok(self.tol_stat) && ok(self.tol_comp)) {
            return Err(QpError::Invalid("tolerances must be positive".into()));
        }
        if !(self.ridge.is_finite() && self.ridge >= T::zero()) {
            return Err(QpError::Invalid("ridge must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// KKT residuals of a candidate primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate<T> {
    pub primal: T,
    pub stationarity: T,
    pub complementarity: T,
}

impl<T: Scalar> Certificate<T> {
    pub fn within(&self, s: &QpSettings<T>, scale: T) -> bool {
        self.primal <= s.tol_feas * scale
            && self.stationarity <= s.tol_stat * scale
            && self.complementarity <= s.tol_comp * scale
    }

    /// Largest residual relative to its tolerance.
    fn badness(&self, s: &QpSettings<T>) -> T {
        (self.primal / s.tol_feas)
            .max(self.stationarity / s.tol_stat)
            .max(self.complementarity / s.tol_comp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution<T> {
    pub x: Vec<T>,
    /// Recovered multipliers, all `≥ 0`.
    pub lambda: Vec<T>,
    pub objective: T,
    pub status: QpStatus,
    pub primal_residual: T,
    pub stationarity_residual: T,
    pub complementarity_residual: T,
    pub iterations: usize,
    /// Whether the reported point came from the active-set polish.
    pub polished: bool,
}

impl<T: Scalar> QpSolution<T> {
    pub fn certificate(&self) -> Certificate<T> {
        Certificate {
            primal: self.primal_residual,
            stationarity: self.stationarity_residual,
            complementarity: self.complementarity_residual,
        }
    }
}

/// Computes the KKT certificate of `(x, λ)`; negative multipliers are clipped.
pub fn certify<T: Scalar>(prob: &QpProblem<T>, p: &Matrix<T>, x: &[T], lambda: &[T]) -> Certificate<T> {
    let lam: Vec<T> = lambda.iter().map(|&l| l.max(T::zero())).collect();
    let gx = prob.g.mul_vec(x);
    let mut primal = T::zero();
    let mut comp = T::zero();
    for ((&gi, &hi), &li) in gx.iter().zip(&prob.h).zip(&lam) {
        let viol = gi - hi;
        primal = primal.max(viol);
        comp = comp.max(li * viol.abs());
    }
    let mut grad = p.mul_vec(x);
    let gtl = prob.g.tr_mul_vec(&lam);
    for ((r, &qi), &gl) in grad.iter_mut().zip(&prob.q).zip(&gtl) {
        *r = *r + qi + gl;
    }
    Certificate { primal, stationarity: norm_inf(&grad), complementarity: comp }
}

struct Iterate<T> {
    x: Vec<T>,
    z: Vec<T>,
    iterations: usize,
    infeasible: bool,
}

fn widen<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn widen_matrix<T: Scalar>(m: &Matrix<T>) -> Matrix<f64> {
    Matrix::from_vec(m.rows(), m.cols(), widen(m.as_slice())).expect("same shape")
}

/// Solves the QP. Invalid input is an error; non-convergence and
/// infeasibility are reported through [`QpSolution::status`].
///
/// Iterations always run in `f64`; the returned point is certified in `T`.
pub fn solve_qp<T: Scalar>(prob: &QpProblem<T>, settings: &QpSettings<T>) -> Result<QpSolution<T>, QpError> {
    prob.validate()?;
    settings.validate()?;
    let wide = QpProblem { p: widen_matrix(&prob.p), q: widen(&prob.q), g: widen_matrix(&prob.g), h: widen(&prob.h) };
    let wide_settings = QpSettings {
        tol_feas: settings.tol_feas.to_f64_lossy().min(1e-8),
        tol_stat: settings.tol_stat.to_f64_lossy().min(1e-6),
        tol_comp: settings.tol_comp.to_f64_lossy().min(1e-6),
        max_iter: settings.max_iter,
        ridge: settings.ridge.to_f64_lossy(),
    };
    let sol = solve_native(&wide, &wide_settings)?;

    let x: Vec<T> = sol.x.iter().map(|&v| T::c(v)).collect();
    let lambda: Vec<T> = sol.lambda.iter().map(|&v| T::c(v)).collect();
    let mut p = prob.p.clone();
    if settings.ridge > T::zero() {
        for i in 0..prob.n() {
            p[(i, i)] = p[(i, i)] + settings.ridge;
        }
    }
    let cert = certify(prob, &p, &x, &lambda);
    let status = match sol.status {
        QpStatus::Infeasible => QpStatus::Infeasible,
        _ if cert.within(settings, T::one()) => QpStatus::Optimal,
        _ => QpStatus::MaxIterations,
    };
    let objective = T::c(0.5) * dot(&x, &p.mul_vec(&x)) + dot(&prob.q, &x);
    Ok(QpSolution {
        x,
        lambda,
        objective,
        status,
        primal_residual: cert.primal,
        stationarity_residual: cert.stationarity,
        complementarity_residual: cert.complementarity,
        iterations: sol.iterations,
        polished: sol.polished,
    })
}

fn solve_native<T: Scalar>(prob: &QpProblem<T>, settings: &QpSettings<T>) -> Result<QpSolution<T>, QpError> {
    let mut p = prob.p.clone();
    if settings.ridge > T::zero() {
        for i in 0..prob.n() {
            p[(i, i)] = p[(i, i)] + settings.ridge;
        }
    }

    let it = if prob.m() == 0 {
        solve_unconstrained(prob, &p)?
    } else {
        interior_point(prob, &p, settings)?
    };

    let mut x = it.x;
    let mut lambda = it.z;
    let mut cert = certify(prob, &p, &x, &lambda);
    let mut polished = false;
    if !it.infeasible && prob.m() > 0 {
        if let Some((px, pl)) = polish(prob, &p, &x, &lambda) {
            let pc = certify(prob, &p, &px, &pl);
            if pc.badness(settings) <= cert.badness(settings) {
                x = px;
                lambda = pl;
                cert = pc;
                polished = true;
            }
        }
    }
    for l in lambda.iter_mut() {
        *l = l.max(T::zero());
    }

    let status = if it.infeasible {
        QpStatus::Infeasible
    } else if cert.within(settings, T::one()) {
        QpStatus::Optimal
    } else {
        QpStatus::MaxIterations
    };
    let objective = T::c(0.5) * dot(&x, &p.mul_vec(&x)) + dot(&prob.q, &x);
    Ok(QpSolution {
        x,
        lambda,
        objective,
        status,
        primal_residual: cert.primal,
        stationarity_residual: cert.stationarity,
        complementarity_residual: cert.complementarity,
        iterations: it.iterations,
        polished,
    })
}

/// Cholesky factor of `D K D + δI` where `D` scales `K` to unit diagonal.
struct PsdFactor<T> {
    chol: Cholesky<T>,
    d: Vec<T>,
}

impl<T: Scalar> PsdFactor<T> {
    fn solve(&self, r: &[T]) -> Vec<T> {
        let scaled: Vec<T> = r.iter().zip(&self.d).map(|(&a, &b)| a * b).collect();
        self.chol.solve(&scaled).into_iter().zip(&self.d).map(|(a, &b)| a * b).collect()
    }
}

/// Regularized Cholesky of a symmetric PSD matrix after symmetric diagonal
/// equilibration; `δ` is the smallest rung of a fixed ladder that succeeds.
fn factor_psd<T: Scalar>(k: &Matrix<T>) -> Result<PsdFactor<T>, LinalgError> {
    let n = k.rows();
    let diag_max = k.diag().into_iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let floor = T::epsilon() * (T::one() + diag_max);
    let d: Vec<T> = k.diag().into_iter().map(|v| T::one() / v.max(floor).max(T::min_positive_value()).sqrt()).collect();
    let mut scaled = k.clone();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] = k[(i, j)] * d[i] * d[j];
        }
    }
    let mut delta = T::epsilon() * T::c(100.0);
    let mut last = None;
    for _ in 0..12 {
        let mut kr = scaled.clone();
        for i in 0..n {
            kr[(i, i)] = kr[(i, i)] + delta;
        }
        match Cholesky::new(&kr) {
            Ok(chol) => return Ok(PsdFactor { chol, d }),
            Err(e) => last = Some(e),
        }
        delta = delta * T::c(100.0);
    }
    Err(last.unwrap_or(LinalgError::Singular(0)))
}

/// Solves `K x = r` with a regularized factor, refining against the exact
/// `K` while the residual keeps shrinking.
fn refined_solve<T: Scalar>(f: &PsdFactor<T>, apply: impl Fn(&[T]) -> Vec<T>, r: &[T], max_steps: usize) -> Vec<T> {
    let mut x = f.solve(r);
    let mut best = T::infinity();
    for _ in 0..max_steps {
        let kx = apply(&x);
        let res: Vec<T> = r.iter().zip(&kx).map(|(&a, &b)| a - b).collect();
        let size = norm_inf(&res);
        if !(size < best * T::c(0.5)) {
            break;
        }
        best = size;
        let dx = f.solve(&res);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi = *xi + d;
        }
    }
    x
}

fn solve_unconstrained<T: Scalar>(prob: &QpProblem<T>, p: &Matrix<T>) -> Result<Iterate<T>, QpError> {
    let fac = factor_psd(p)?;
    let rhs: Vec<T> = prob.q.iter().map(|&v| -v).collect();
    let x = refined_solve(&fac, |v| p.mul_vec(v), &rhs, 10);
    Ok(Iterate { x, z: Vec::new(), iterations: 1, infeasible: false })
}

fn max_step<T: Scalar>(v: &[T], dv: &[T]) -> T {
    v.iter().zip(dv).fold(T::one(), |a, (&vi, &di)| if di < T::zero() { a.min(-vi / di) } else { a })
}

fn interior_point<T: Scalar>(prob: &QpProblem<T>, p: &Matrix<T>, settings: &QpSettings<T>) -> Result<Iterate<T>, QpError> {
    let n = prob.n();
    let m = prob.m();
    let g = &prob.g;
    let h = &prob.h;
    let zero = T::zero();
    let one = T::one();
    let mf = T::from_usize(m).unwrap_or(one);

    // Nonzero pattern of each constraint row, reused for GᵀWG.
    let nz: Vec<Vec<usize>> = (0..m)
        .map(|i| g.row(i).iter().enumerate().filter(|(_, v)| **v != zero).map(|(j, _)| j).collect())
        .collect();
    let normal_matrix = |w: &[T]| -> Matrix<T> {
        let mut k = p.clone();
        for i in 0..m {
            let row = g.row(i);
            let idx = &nz[i];
            let dense = 4 * idx.len() > n;
            for (a, &ja) in idx.iter().enumerate() {
                let va = w[i] * row[ja];
                let krow = &mut k.row_mut(ja)[..=ja];
                if dense {
                    for (kv, &r) in krow.iter_mut().zip(&row[..=ja]) {
                        *kv = *kv + va * r;
                    }
                } else {
                    for &jb in &idx[..=a] {
                        krow[jb] = krow[jb] + va * row[jb];
                    }
                }
            }
        }
        // nz is sorted ascending, so only the lower triangle (ja >= jb) was filled.
        k.mirror_lower();
        k
    };

    // Least-squares start: (P + GᵀG)x = Gᵀh - q, z = Gx - h, s = -z,
    // then both shifted into the positive orthant.
    let (mut x, mut s, mut z) = {
        let unit = vec![one; m];
        let fac = factor_psd(&normal_matrix(&unit))?;
        let gth = g.tr_mul_vec(h);
        let rhs: Vec<T> = (0..n).map(|i| gth[i] - prob.q[i]).collect();
        let x = fac.solve(&rhs);
        let gx = g.mul_vec(&x);
        let s: Vec<T> = (0..m).map(|i| h[i] - gx[i]).collect();
        let z: Vec<T> = s.iter().map(|&v| -v).collect();
        let shift = |v: Vec<T>| -> Vec<T> {
            let low = v.iter().fold(T::infinity(), |a, &b| a.min(b));
            if low > zero {
                v
            } else {
                v.into_iter().map(|e| e + one - low).collect()
            }
        };
        (x, shift(s), shift(z))
    };
    if x.iter().any(|v| !v.is_finite()) {
        x = vec![zero; n];
        s = h.iter().map(|&hi| hi.max(one)).collect();
        z = vec![one; m];
    }

    let tight = T::c(0.05);
    let mut stall = 0usize;
    let mut best_bad = T::infinity();
    let mut iterations = 0usize;
    let mut infeasible = false;

    while iterations < settings.max_iter {
        let cert = certify(prob, p, &x, &z);
        if cert.primal <= settings.tol_feas * tight
            && cert.stationarity <= settings.tol_stat * tight
            && cert.complementarity <= settings.tol_comp * tight
        {
            break;
        }
        let bad = cert.badness(settings);
        if bad < best_bad * T::c(0.999) {
            best_bad = bad;
            stall = 0;
        } else {
            stall += 1;
            if stall >= 30 {
                break;
            }
        }
        if farkas_infeasible(prob, &z) {
            infeasible = true;
            break;
        }
        iterations += 1;

        // Residuals.
        let gx = g.mul_vec(&x);
        let mut rd = p.mul_vec(&x);
        let gtz = g.tr_mul_vec(&z);
        for i in 0..n {
            rd[i] = rd[i] + prob.q[i] + gtz[i];
        }
        let rp: Vec<T> = (0..m).map(|i| gx[i] + s[i] - h[i]).collect();
        let mu = dot(&s, &z) / mf;
        if !(mu > T::min_positive_value()) {
            break;
        }

        // K = P + Gᵀ W G.
        let w: Vec<T> = (0..m).map(|i| z[i] / s[i]).collect();
        let k = normal_matrix(&w);
        let fac = match factor_psd(&k) {
            Ok(f) => f,
            Err(_) => break,
        };
        let apply = |v: &[T]| -> Vec<T> {
            let mut out = p.mul_vec(v);
            let gv = g.mul_vec(v);
            let wgv: Vec<T> = gv.iter().zip(&w).map(|(&a, &b)| a * b).collect();
            for (o, t) in out.iter_mut().zip(g.tr_mul_vec(&wgv)) {
                *o = *o + t;
            }
            out
        };

        // P dx + Gᵀdz = a,  G dx + ds = b,  Z ds + S dz = c
        let solve_kkt = |a: &[T], b: &[T], c: &[T]| -> (Vec<T>, Vec<T>, Vec<T>) {
            let t: Vec<T> = (0..m).map(|i| (c[i] - z[i] * b[i]) / s[i]).collect();
            let gtt = g.tr_mul_vec(&t);
            let rhs: Vec<T> = (0..n).map(|i| a[i] - gtt[i]).collect();
            let dx = refined_solve(&fac, &apply, &rhs, 10);
            let gdx = g.mul_vec(&dx);
            let dz: Vec<T> = (0..m).map(|i| t[i] + w[i] * gdx[i]).collect();
            let ds: Vec<T> = (0..m).map(|i| b[i] - gdx[i]).collect();
            (dx, ds, dz)
        };
        let neg_rd: Vec<T> = rd.iter().map(|&v| -v).collect();
        let neg_rp: Vec<T> = rp.iter().map(|&v| -v).collect();
        let newton = |rc: &[T]| -> (Vec<T>, Vec<T>, Vec<T>) {
            let neg_rc: Vec<T> = rc.iter().map(|&v| -v).collect();
            let (mut dx, mut ds, mut dz) = solve_kkt(&neg_rd, &neg_rp, &neg_rc);
            // Refine against the full system; the reduced solve loses
            // accuracy in dz when W is badly scaled.
            let mut best = T::infinity();
            for _ in 0..4 {
                let pdx = p.mul_vec(&dx);
                let gtdz = g.tr_mul_vec(&dz);
                let gdx = g.mul_vec(&dx);
                let e1: Vec<T> = (0..n).map(|i| neg_rd[i] - pdx[i] - gtdz[i]).collect();
                let e2: Vec<T> = (0..m).map(|i| neg_rp[i] - gdx[i] - ds[i]).collect();
                let e3: Vec<T> = (0..m).map(|i| neg_rc[i] - z[i] * ds[i] - s[i] * dz[i]).collect();
                let size = norm_inf(&e1).max(norm_inf(&e2)).max(norm_inf(&e3));
                if !(size < best * T::c(0.5)) {
                    break;
                }
                best = size;
                let (cx, cs, cz) = solve_kkt(&e1, &e2, &e3);
                for i in 0..n {
                    dx[i] = dx[i] + cx[i];
                }
                for i in 0..m {
                    ds[i] = ds[i] + cs[i];
                    dz[i] = dz[i] + cz[i];
                }
            }
            (dx, ds, dz)
        };

        // Predictor.
        let rc_aff: Vec<T> = (0..m).map(|i| s[i] * z[i]).collect();
        let (_, ds_a, dz_a) = newton(&rc_aff);
        let a_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let mu_aff = (0..m)
            .map(|i| (s[i] + a_aff * ds_a[i]) * (z[i] + a_aff * dz_a[i]))
            .fold(zero, |a, b| a + b)
            / mf;
        let sigma = (mu_aff / mu).max(zero).min(one).powi(3);

        // Corrector.
        let rc: Vec<T> = (0..m).map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu).collect();
        let (mut dx, mut ds, mut dz) = newton(&rc);
        let step_len = |ds: &[T], dz: &[T]| (T::c(0.99) * max_step(&s, ds).min(max_step(&z, dz))).min(one);
        let mu_at = |a: T, ds: &[T], dz: &[T]| {
            (0..m).map(|i| (s[i] + a * ds[i]) * (z[i] + a * dz[i])).fold(zero, |acc, v| acc + v) / mf
        };
        let mut alpha = step_len(&ds, &dz);
        // Mehrotra steps can cycle once feasible; fall back to a plain
        // centered step with a damped length when the gap grows.
        let near_feasible = norm_inf(&rp) <= settings.tol_feas * (one + norm_inf(h));
        if near_feasible && mu_at(alpha, &ds, &dz) > mu * (one - T::c(0.01) * alpha) {
            let rc: Vec<T> = (0..m).map(|i| s[i] * z[i] - T::c(0.3) * mu).collect();
            (dx, ds, dz) = newton(&rc);
            alpha = step_len(&ds, &dz);
            let lin = (0..m).map(|i| s[i] * dz[i] + z[i] * ds[i]).fold(zero, |a, v| a + v) / mf;
            let quad = dot(&ds, &dz) / mf;
            if quad > zero && lin < zero {
                alpha = alpha.min(-lin / (T::c(2.0) * quad));
            }
        }
        if !(alpha > T::c(1e-14)) {
            break;
        }
        for i in 0..n {
            x[i] = x[i] + alpha * dx[i];
        }
        for i in 0..m {
            s[i] = (s[i] + alpha * ds[i]).max(T::min_positive_value());
            z[i] = (z[i] + alpha * dz[i]).max(T::min_positive_value());
        }
        if x.iter().any(|v| !v.is_finite()) {
            break;
        }
    }

    Ok(Iterate { x, z, iterations, infeasible })
}

/// Multipliers blowing up along a direction `y ≥ 0` with `Gᵀy ≈ 0` and
/// `hᵀy < 0` certify that `Gx ≤ h` has no solution.
fn farkas_infeasible<T: Scalar>(prob: &QpProblem<T>, z: &[T]) -> bool {
    let big = norm_inf(z);
    if !(big > T::c(1e8)) {
        return false;
    }
    let total = z.iter().fold(T::zero(), |a, &b| a + b);
    let y: Vec<T> = z.iter().map(|&v| v / total).collect();
    let gty = norm_inf(&prob.g.tr_mul_vec(&y));
    let hty = dot(&prob.h, &y);
    let gscale = prob.g.max_abs().max(T::one());
    gty <= T::c(1e-7) * gscale && hty < -T::c(1e-7) * norm_inf(&prob.h).max(T::one())
}

/// Solves the equality-constrained KKT system on the constraints the
/// interior-point iterate identifies as active (`λᵢ > hᵢ − Gᵢx`), then
/// corrects the set a few times: rows with negative multipliers leave,
/// violated rows join.
fn polish<T: Scalar>(prob: &QpProblem<T>, p: &Matrix<T>, x: &[T], z: &[T]) -> Option<(Vec<T>, Vec<T>)> {
    let m = prob.m();
    let gx = prob.g.mul_vec(x);
    let mut active: Vec<bool> = (0..m).map(|i| z[i] > prob.h[i] - gx[i]).collect();
    let tol = T::epsilon().sqrt() * T::epsilon().sqrt() * T::c(1e4);
    let mut last = None;
    for _ in 0..6 {
        let (px, lambda) = solve_active(prob, p, &active)?;
        let gpx = prob.g.mul_vec(&px);
        let mut changed = false;
        for i in 0..m {
            let scale = T::one() + prob.h[i].abs();
            if active[i] && lambda[i] < -tol * scale {
                active[i] = false;
                changed = true;
            } else if !active[i] && gpx[i] - prob.h[i] > tol * scale {
                active[i] = true;
                changed = true;
            }
        }
        last = Some((px, lambda));
        if !changed {
            break;
        }
    }
    last
}

fn solve_active<T: Scalar>(prob: &QpProblem<T>, p: &Matrix<T>, active: &[bool]) -> Option<(Vec<T>, Vec<T>)> {
    let n = prob.n();
    let m = prob.m();
    let active: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
    let na = active.len();
    let dim = n + na;

    let scale = T::one() + p.max_abs().max(prob.g.max_abs());
    let delta = T::epsilon().sqrt() * T::epsilon().sqrt() * T::c(1e3) * scale;
    let mut kkt = Matrix::zeros(dim, dim);
    for i in 0..n {
        kkt.row_mut(i)[..n].copy_from_slice(p.row(i));
    }
    for (a, &ci) in active.iter().enumerate() {
        let row = prob.g.row(ci);
        for j in 0..n {
            kkt[(n + a, j)] = row[j];
            kkt[(j, n + a)] = row[j];
        }
    }
    let exact = kkt.clone();
    for i in 0..n {
        kkt[(i, i)] = kkt[(i, i)] + delta;
    }
    for a in 0..na {
        kkt[(n + a, n + a)] = kkt[(n + a, n + a)] - delta;
    }
    let lu = Lu::new(&kkt).ok()?;
    let mut rhs: Vec<T> = prob.q.iter().map(|&v| -v).collect();
    rhs.extend(active.iter().map(|&i| prob.h[i]));
    let mut sol = lu.solve(&rhs);
    for _ in 0..5 {
        let k_sol = exact.mul_vec(&sol);
        let res: Vec<T> = rhs.iter().zip(&k_sol).map(|(&a, &b)| a - b).collect();
        let d = lu.solve(&res);
        for (s, di) in sol.iter_mut().zip(d) {
            *s = *s + di;
        }
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let px = sol[..n].to_vec();
    let mut lambda = vec![T::zero(); m];
    for (a, &ci) in active.iter().enumerate() {
        lambda[ci] = sol[n + a];
    }
    Some((px, lambda))
}

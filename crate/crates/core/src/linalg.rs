//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(c)
}

/// Standard symplectic matrix [[0, -I], [I, 0]] of size 2n.
pub fn j_matrix(n: usize) -> CMat {
    let mut j = CMat::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = c(-1.0);
        j[(n + k, k)] = c(1.0);
    }
    j
}

/// Apply J to a stacked 2n x m matrix without forming J.
pub fn apply_j(m: &CMat) -> CMat {
    let n = m.nrows() / 2;
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for col in 0..m.ncols() {
        for k in 0..n {
            out[(k, col)] = -m[(n + k, col)];
            out[(n + k, col)] = m[(k, col)];
        }
    }
    out
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Induced infinity norm (max absolute row sum).
pub fn norm_inf(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().cloned().unwrap_or(0.0)
}

pub fn sigma_min(m: &CMat) -> f64 {
    singular_values(m).last().cloned().unwrap_or(0.0)
}

pub fn condition_number(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Orthonormal basis of the k-dimensional subspace least amplified by `m` (square input).
pub fn null_space(m: &CMat, k: usize) -> CMat {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap());
    let mut out = CMat::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        for r in 0..n {
            out[(r, col)] = v_t[(idx, r)].conj();
        }
    }
    out
}

/// Solve `b * z = rhs` by LU with full pivoting, rejecting factors beyond `cond_cap`.
pub fn solve(b: &CMat, rhs: &CMat, cond_cap: f64) -> Result<CMat> {
    if b.nrows() != b.ncols() || b.nrows() != rhs.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "solve with {}x{} factor and {} rhs rows",
            b.nrows(),
            b.ncols(),
            rhs.nrows()
        )));
    }
    let cond = condition_number(b);
    if !(cond <= cond_cap) {
        return Err(Error::Conditioning(format!("factor condition number {cond:.3e} exceeds cap {cond_cap:.1e}")));
    }
    b.clone()
        .full_piv_lu()
        .solve(rhs)
        .ok_or_else(|| Error::Conditioning("singular factor".into()))
}

/// Compute `a * b^{-1}` through a solve with the adjoint factor.
pub fn solve_right(a: &CMat, b: &CMat, cond_cap: f64) -> Result<CMat> {
    Ok(solve(&b.adjoint(), &a.adjoint(), cond_cap)?.adjoint())
}

/// Thin QR: orthonormal columns spanning `m`, plus log|det R|.
pub fn orthonormalize(m: &CMat) -> (CMat, f64) {
    let qr = m.clone().qr();
    let r = qr.r();
    let logdet = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].norm().ln()).sum();
    (qr.q(), logdet)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

pub fn real_symmetric_eigen(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    let eig = ((m + m.transpose()) * 0.5).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = RMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// Eigenvalues of a general complex matrix via the Schur form.
///
/// The shifted QR iteration can stall on matrices with clustered spectra, so the
/// convergence threshold is relaxed step by step before giving up.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    for eps in [f64::EPSILON, 1e-15, 1e-14, 1e-13, 1e-12] {
        if let Some(s) = m.clone().try_schur(eps, 400 * n.max(4)) {
            return s.unpack().1.diagonal().iter().cloned().collect();
        }
    }
    panic!("Schur iteration failed to converge on a {n}x{n} matrix");
}

/// Eigenvalues of a unitary matrix.
///
/// Unitary W is normal, so W = V e^{i theta} V* with V diagonalizing the Hermitian
/// pencil combination Re W + alpha Im W; each column then gives theta by a Rayleigh
/// quotient. Coincident pencil values for distinct angles are caught by the residual
/// check and retried with another alpha.
pub fn unitary_eigenvalues(w: &CMat) -> Vec<Complex64> {
    let n = w.nrows();
    if n == 0 {
        return Vec::new();
    }
    let re = (w + w.adjoint()).map(|z| z * 0.5);
    let im = (w - w.adjoint()).map(|z| z / (I * 2.0));
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for alpha in [0.577_215_664_901_532_9, -1.414_213_562_373_095, 0.318_309_886_183_790_7, 2.718_281_828_459_045] {
        let (_, v) = hermitian_eigen(&(&re + &im * c(alpha)));
        let wv = w * &v;
        let mut out = Vec::with_capacity(n);
        let mut worst = 0.0f64;
        for j in 0..n {
            let col = v.column(j);
            let rq = (col.adjoint() * wv.column(j))[(0, 0)];
            let lam = if rq.norm() > 0.0 { rq / rq.norm() } else { c(1.0) };
            worst = worst.max((wv.column(j) - col * lam).norm());
            out.push(lam);
        }
        if worst <= 1e-9 {
            return out;
        }
        if best.as_ref().map_or(true, |(r, _)| worst < *r) {
            best = Some((worst, out));
        }
    }
    let (_, fallback) = best.expect("at least one pencil tried");
    if let Some(s) = w.clone().try_schur(f64::EPSILON, 400 * n.max(4)) {
        return s.unpack().1.diagonal().iter().cloned().collect();
    }
    fallback
}

/// Counts (negative, zero, positive) eigenvalues of a Hermitian matrix; |eig| <= tol counts as zero.
pub fn inertia(m: &CMat, tol: f64) -> (usize, usize, usize) {
    let vals = hermitian_eigenvalues(m);
    let neg = vals.iter().filter(|&&v| v < -tol).count();
    let zero = vals.iter().filter(|&&v| v.abs() <= tol).count();
    (neg, zero, vals.len() - neg - zero)
}

/// Map an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Minimum-cost perfect assignment (Hungarian algorithm); returns column chosen for each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Five-point Gauss-Legendre rule on [a, b].
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..5).map(|k| W[k] * f(mid + half * X[k])).sum::<f64>() * half
}

//! Eigen-splitting of the asymptotic matrices and the explicit asymptotic frames.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::symplectic::{self, LagrangianFrame};

/// Minimum |Re mu| accepted by [`split_modes`].
pub const DEFAULT_SPLIT_MARGIN: f64 = 1e-8;

/// Eigenpairs of a hyperbolic 2n x 2n matrix split by the sign of the real part.
#[derive(Clone, Debug)]
pub struct ModeSet {
    pub mu: Vec<Complex64>,
    /// Columns are the eigenvectors matching `mu`.
    pub vectors: CMat,
    pub stable: Vec<usize>,
    pub unstable: Vec<usize>,
}

impl ModeSet {
    pub fn stable_mu(&self) -> Vec<Complex64> {
        self.stable.iter().map(|&k| self.mu[k]).collect()
    }

    pub fn unstable_mu(&self) -> Vec<Complex64> {
        self.unstable.iter().map(|&k| self.mu[k]).collect()
    }

    pub fn stable_space(&self) -> CMat {
        self.columns(&self.stable)
    }

    pub fn unstable_space(&self) -> CMat {
        self.columns(&self.unstable)
    }

    fn columns(&self, idx: &[usize]) -> CMat {
        let mut m = CMat::zeros(self.vectors.nrows(), idx.len());
        for (col, &k) in idx.iter().enumerate() {
            m.set_column(col, &self.vectors.column(k));
        }
        m
    }
}

fn cmp_mu(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
}

/// Split a hyperbolic matrix into stable and unstable eigenpairs.
///
/// Within each group eigenvalues are sorted by real part, then imaginary part.
/// Clusters of (numerically) repeated eigenvalues get an orthonormal basis of
/// their generalized eigenspace.
pub fn split_modes(a: &CMat, margin: f64) -> Result<ModeSet> {
    let dim = a.nrows();
    if dim != a.ncols() || dim % 2 != 0 {
        return Err(Error::DimensionMismatch(format!("asymptotic matrix is {}x{}", a.nrows(), a.ncols())));
    }
    let eig = linalg::eigenvalues(a);
    if let Some(z) = eig.iter().find(|z| z.re.abs() < margin) {
        return Err(Error::Hyperbolicity(format!("eigenvalue {z} has |Re| below {margin:.1e}")));
    }
    let mut stable: Vec<Complex64> = eig.iter().cloned().filter(|z| z.re < 0.0).collect();
    let mut unstable: Vec<Complex64> = eig.iter().cloned().filter(|z| z.re > 0.0).collect();
    if stable.len() != dim / 2 {
        return Err(Error::Hyperbolicity(format!("{} stable and {} unstable exponents", stable.len(), unstable.len())));
    }
    stable.sort_by(cmp_mu);
    unstable.sort_by(cmp_mu);
    let mu: Vec<Complex64> = stable.iter().chain(unstable.iter()).cloned().collect();
    let scale = 1.0 + linalg::max_abs(a);
    let cluster_tol = 1e-6 * scale;
    let mut vectors = CMat::zeros(dim, dim);
    let mut k = 0;
    while k < dim {
        let group_end = if k < dim / 2 { dim / 2 } else { dim };
        let mut end = k + 1;
        while end < group_end && (mu[end] - mu[k]).norm() < cluster_tol {
            end += 1;
        }
        let size = end - k;
        let mean = mu[k..end].iter().sum::<Complex64>() / c(size as f64);
        let shifted = a - CMat::identity(dim, dim) * mean;
        let mut power = shifted.clone();
        for _ in 1..size {
            power = &power * &shifted;
        }
        let basis = linalg::null_space(&power, size);
        for j in 0..size {
            let mut v = basis.column(j).into_owned();
            normalize_phase(&mut v);
            vectors.set_column(k + j, &v);
        }
        k = end;
    }
    Ok(ModeSet { mu, vectors, stable: (0..dim / 2).collect(), unstable: (dim / 2..dim).collect() })
}

/// Make the largest-magnitude entry real and positive (deterministic gauge).
fn normalize_phase(v: &mut nalgebra::DVector<Complex64>) {
    let mut best = 0;
    for i in 0..v.len() {
        if v[i].norm() > v[best].norm() + 1e-12 {
            best = i;
        }
    }
    let p = v[best];
    if p.norm() > 0.0 {
        let phase = p.conj() / c(p.norm());
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// The four asymptotic frames plus exponent and eigenvector data.
#[derive(Clone, Debug)]
pub struct AsymptoticFrames {
    /// Unstable space of A_- (solutions decaying at -infinity).
    pub x_minus: LagrangianFrame,
    /// Stable space of A_+ (solutions decaying at +infinity).
    pub xt_plus: LagrangianFrame,
    pub x_minus_g: LagrangianFrame,
    pub xt_plus_g: LagrangianFrame,
    /// Stable exponents at each end.
    pub d_minus: Vec<Complex64>,
    pub d_plus: Vec<Complex64>,
    pub r_minus: CMat,
    pub r_plus: CMat,
}

impl AsymptoticFrames {
    /// Smallest singular value of the normalized X_-* J Xt_+ product.
    pub fn transversality_gap(&self) -> f64 {
        symplectic::transversality_gap(&self.x_minus, &self.xt_plus)
    }
}

/// Frames from a numerical split of A_-(lambda) and A_+(lambda).
pub fn generic_frames(a_minus: &CMat, a_plus: &CMat) -> Result<AsymptoticFrames> {
    let minus = split_modes(a_minus, DEFAULT_SPLIT_MARGIN)?;
    let plus = split_modes(a_plus, DEFAULT_SPLIT_MARGIN)?;
    let x_minus = LagrangianFrame::from_stacked(&minus.unstable_space())?;
    let x_minus_g = LagrangianFrame::from_stacked(&minus.stable_space())?;
    let xt_plus = LagrangianFrame::from_stacked(&plus.stable_space())?;
    let xt_plus_g = LagrangianFrame::from_stacked(&plus.unstable_space())?;
    Ok(AsymptoticFrames {
        r_minus: x_minus.x.clone(),
        r_plus: xt_plus.x.clone(),
        x_minus,
        xt_plus,
        x_minus_g,
        xt_plus_g,
        d_minus: minus.stable_mu(),
        d_plus: plus.stable_mu(),
    })
}

/// Inverse of the Cholesky factor of a Hermitian positive definite matrix.
fn cholesky_inverse_factor(p: &CMat, what: &str) -> Result<CMat> {
    let chol = linalg::hermitian_part(p).cholesky().ok_or_else(|| Error::Validation { assumption: "SL1".into(), detail: format!("{what} is not positive definite") })?;
    let n = p.nrows();
    Ok(chol.l().solve_lower_triangular(&CMat::identity(n, n)).expect("nonsingular triangular factor"))
}

/// Smallest generalized eigenvalue of (v, q), i.e. inf (v r, r) / (q r, r).
pub fn generalized_min_eigenvalue(v: &CMat, q: &CMat) -> Result<f64> {
    let linv = cholesky_inverse_factor(q, "Q")?;
    let m = &linv * v * linv.adjoint();
    Ok(linalg::hermitian_eigenvalues(&m)[0])
}

/// Solution of P^{-1}(V - lambda Q) r = mu^2 r at one end, with R* P R = I.
/// Returns (R, D) where D holds the negative square roots, ordered by mu^2 ascending.
pub fn sl_modes(p: &CMat, v: &CMat, q: &CMat, lambda: f64) -> Result<(CMat, Vec<f64>)> {
    let linv = cholesky_inverse_factor(p, "P")?;
    let m = &linv * (v - q * c(lambda)) * linv.adjoint();
    let (vals, w) = linalg::hermitian_eigen(&m);
    if vals[0] <= 0.0 {
        let kappa = generalized_min_eigenvalue(v, q)?;
        return Err(Error::EssentialSpectrum { lambda, kappa });
    }
    let r = linv.adjoint() * w;
    Ok((r, vals.iter().map(|&m2| -m2.sqrt()).collect()))
}

/// Endstate coefficients of a second-order system at both ends.
#[derive(Clone, Debug)]
pub struct SlEndstates {
    pub p_minus: CMat,
    pub v_minus: CMat,
    pub q_minus: CMat,
    pub p_plus: CMat,
    pub v_plus: CMat,
    pub q_plus: CMat,
}

impl SlEndstates {
    pub fn kappa(&self) -> Result<f64> {
        Ok(generalized_min_eigenvalue(&self.v_minus, &self.q_minus)?.min(generalized_min_eigenvalue(&self.v_plus, &self.q_plus)?))
    }
}

fn diag_c(d: &[f64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_iterator(d.len(), d.iter().map(|&v| c(v))))
}

fn stack(top: &CMat, bottom: &CMat) -> LagrangianFrame {
    LagrangianFrame { x: top.clone(), y: bottom.clone() }
}

/// Frames X_- = (R_-; -P_- R_- D_-), Xt_+ = (R_+; P_+ R_+ D_+) and their growing counterparts.
pub fn sl_asymptotic_frames(e: &SlEndstates, lambda: f64) -> Result<AsymptoticFrames> {
    let kappa = e.kappa()?;
    if !(lambda < kappa) {
        return Err(Error::EssentialSpectrum { lambda, kappa });
    }
    let (rm, dm) = sl_modes(&e.p_minus, &e.v_minus, &e.q_minus, lambda)?;
    let (rp, dp) = sl_modes(&e.p_plus, &e.v_plus, &e.q_plus, lambda)?;
    let prd_m = &e.p_minus * &rm * diag_c(&dm);
    let prd_p = &e.p_plus * &rp * diag_c(&dp);
    let frames = AsymptoticFrames {
        x_minus: stack(&rm, &-prd_m.clone()),
        x_minus_g: stack(&rm, &prd_m),
        xt_plus: stack(&rp, &prd_p),
        xt_plus_g: stack(&rp, &-prd_p.clone()),
        d_minus: dm.iter().map(|&d| c(d)).collect(),
        d_plus: dp.iter().map(|&d| c(d)).collect(),
        r_minus: rm,
        r_plus: rp,
    };
    Ok(frames)
}

/// Diagonal exponents D = (-1 - i)/sqrt(2) (nu_k - lambda)^{1/4} of the fourth-order system.
pub fn fourth_exponents(nu: &[f64], lambda: f64) -> Vec<Complex64> {
    let rot = Complex64::new(-1.0, -1.0) / c(2f64.sqrt());
    nu.iter().map(|&v| rot * c((v - lambda).powf(0.25))).collect()
}

/// Frames of the fourth-order system with common endstate V_a.
pub fn fourth_asymptotic_frames(v_a: &CMat, lambda: f64) -> Result<AsymptoticFrames> {
    let n = v_a.nrows();
    let (nu, r) = linalg::hermitian_eigen(v_a);
    if !(lambda < nu[0]) {
        return Err(Error::EssentialSpectrum { lambda, kappa: nu[0] });
    }
    let d = fourth_exponents(&nu, lambda);
    let dm = |p: i32, conj: bool| -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, d.iter().map(|z| {
            let z = if conj { z.conj() } else { *z };
            z.powi(p)
        })))
    };
    let build = |sign: f64| -> LagrangianFrame {
        let mut m = CMat::zeros(4 * n, 2 * n);
        let blocks = [(0, 0), (1, 2), (2, 3), (3, 1)];
        for &(row, p) in &blocks {
            let s = if row >= 2 { sign } else { 1.0 };
            let left = &r * dm(p, false) * c(s);
            let right = &r * dm(p, true) * c(s);
            m.view_mut((row * n, 0), (n, n)).copy_from(&left);
            m.view_mut((row * n, n), (n, n)).copy_from(&right);
        }
        LagrangianFrame::from_stacked(&m).expect("4n x 2n frame")
    };
    let x_minus = build(1.0);
    let xt_plus = build(-1.0);
    Ok(AsymptoticFrames {
        x_minus_g: xt_plus.clone(),
        xt_plus_g: x_minus.clone(),
        x_minus,
        xt_plus,
        d_minus: d.clone(),
        d_plus: d,
        r_minus: r.clone(),
        r_plus: r,
    })
}

/// Sufficient lower bound 1/2((k1 + k2) - sqrt((k1 - k2)^2 + 4 rho)) on the reduced
/// endstate spectrum of a differential-algebraic system, with k1 = min eig V11,
/// k2 = min eig V22 and rho = max eig V12 V12*.
pub fn da_quadratic_bound(v11: &CMat, v12: &CMat, v22: &CMat) -> f64 {
    let k1 = linalg::hermitian_eigenvalues(v11)[0];
    let k2 = linalg::hermitian_eigenvalues(v22)[0];
    let rho = *linalg::hermitian_eigenvalues(&(v12 * v12.adjoint())).last().unwrap();
    0.5 * ((k1 + k2) - ((k1 - k2).powi(2) + 4.0 * rho).sqrt())
}

/// Essential spectrum data reported for a system.
#[derive(Clone, Debug, Serialize)]
pub struct EssentialSpectrumInfo {
    pub kappa: f64,
    /// Excluded lambda ranges (differential-algebraic systems).
    pub excluded: Vec<(f64, f64)>,
    /// Closed-form sufficient bound (differential-algebraic systems).
    pub quadratic_bound: Option<f64>,
}

impl EssentialSpectrumInfo {
    /// Reject an interval meeting an excluded range or reaching kappa.
    pub fn check_interval(&self, lambda1: f64, lambda2: f64) -> Result<()> {
        let hits: Vec<String> = self
            .excluded
            .iter()
            .enumerate()
            .filter(|(_, &(lo, hi))| lambda1 <= hi && lambda2 >= lo)
            .map(|(k, &(lo, hi))| format!("R_{} = [{lo:.6}, {hi:.6}]", k + 1))
            .collect();
        if !hits.is_empty() {
            return Err(Error::Admissibility(format!("[{lambda1}, {lambda2}] meets {}", hits.join(", "))));
        }
        if !(lambda2 < self.kappa) {
            return Err(Error::EssentialSpectrum { lambda: lambda2, kappa: self.kappa });
        }
        Ok(())
    }
}

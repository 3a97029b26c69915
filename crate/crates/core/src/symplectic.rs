//! Lagrangian frames, the unitary W-tilde and the Lagrangian Grassmannian metric.

use num_complex::Complex64;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, I};

/// Default kernel threshold for intersection dimensions.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-8;
/// Condition-number cap for the (X -/+ iY) factors of W-tilde.
pub const FACTOR_COND_CAP: f64 = 1e10;

/// The standard symplectic form on C^{2n}.
#[derive(Clone, Debug)]
pub struct SymplecticForm {
    pub n: usize,
    pub matrix: CMat,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Self {
        SymplecticForm { n, matrix: linalg::j_matrix(n) }
    }
}

/// A 2n x n frame [X; Y] whose columns span a Lagrangian plane.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianFrame {
    pub x: CMat,
    pub y: CMat,
}

impl LagrangianFrame {
    pub fn new(x: CMat, y: CMat) -> Result<Self> {
        if x.nrows() != x.ncols() || y.nrows() != y.ncols() || x.nrows() != y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "frame blocks {}x{} and {}x{} must be square of equal size",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        Ok(LagrangianFrame { x, y })
    }

    pub fn from_stacked(m: &CMat) -> Result<Self> {
        let n = m.ncols();
        if m.nrows() != 2 * n {
            return Err(Error::DimensionMismatch(format!("stacked frame is {}x{}, expected 2n x n", m.nrows(), n)));
        }
        Ok(LagrangianFrame { x: m.rows(0, n).into_owned(), y: m.rows(n, n).into_owned() })
    }

    pub fn from_real(x: &[f64], y: &[f64], n: usize) -> Result<Self> {
        Self::new(CMat::from_row_slice(n, n, &x.iter().map(|&v| c(v)).collect::<Vec<_>>()), CMat::from_row_slice(n, n, &y.iter().map(|&v| c(v)).collect::<Vec<_>>()))
    }

    /// Dirichlet plane (0; I).
    pub fn dirichlet(n: usize) -> Self {
        LagrangianFrame { x: CMat::zeros(n, n), y: CMat::identity(n, n) }
    }

    /// Neumann plane (I; 0).
    pub fn neumann(n: usize) -> Self {
        LagrangianFrame { x: CMat::identity(n, n), y: CMat::zeros(n, n) }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn stacked(&self) -> CMat {
        let n = self.n();
        let mut m = CMat::zeros(2 * n, n);
        m.rows_mut(0, n).copy_from(&self.x);
        m.rows_mut(n, n).copy_from(&self.y);
        m
    }

    /// Right-multiply by a gauge matrix; the span is unchanged when `m` is invertible.
    pub fn gauge(&self, m: &CMat) -> Self {
        LagrangianFrame { x: &self.x * m, y: &self.y * m }
    }

    /// Orthonormal frame with the same span (explicit re-frame by QR).
    pub fn orthonormalized(&self) -> Self {
        let (q, _) = linalg::orthonormalize(&self.stacked());
        LagrangianFrame::from_stacked(&q).expect("shape preserved")
    }

    /// Raw residual ||X*Y - Y*X||_inf.
    pub fn lagrangian_residual(&self) -> f64 {
        linalg::norm_inf(&(self.x.adjoint() * &self.y - self.y.adjoint() * &self.x))
    }
}

/// Returns X1* J X2 for stacked frames, i.e. Y1*X2 - X1*Y2.
pub fn j_product(f1: &LagrangianFrame, f2: &LagrangianFrame) -> CMat {
    f1.y.adjoint() * &f2.x - f1.x.adjoint() * &f2.y
}

/// True iff the frame is Lagrangian and of full rank within `tol`.
pub fn check_lagrangian(frame: &LagrangianFrame, tol: f64) -> bool {
    frame.lagrangian_residual() <= tol && linalg::sigma_min(&frame.stacked()) > tol
}

/// Unitary n x n matrix.
#[derive(Clone, Debug)]
pub struct UnitaryMatrix {
    pub w: CMat,
}

impl UnitaryMatrix {
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.w.nrows();
        linalg::max_abs(&(self.w.adjoint() * &self.w - CMat::identity(n, n)))
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        linalg::unitary_eigenvalues(&self.w)
    }

    /// Eigenvalue arguments in (-pi, pi].
    pub fn angles(&self) -> Vec<f64> {
        self.eigenvalues().iter().map(|z| linalg::wrap_angle(z.arg())).collect()
    }

    /// Number of eigenvalues within angular distance `tol` of -1.
    pub fn multiplicity_at_minus_one(&self, tol: f64) -> usize {
        self.angles().iter().filter(|&&a| (std::f64::consts::PI - a.abs()) <= tol).count()
    }
}

/// W = -(X1 + iY1)(X1 - iY1)^{-1}(X2 - iY2)(X2 + iY2)^{-1}.
pub fn build_wtilde(f1: &LagrangianFrame, f2: &LagrangianFrame) -> Result<UnitaryMatrix> {
    if f1.n() != f2.n() {
        return Err(Error::DimensionMismatch(format!("frames of dimension {} and {}", f1.n(), f2.n())));
    }
    let plus1 = &f1.x + &f1.y * I;
    let minus1 = &f1.x - &f1.y * I;
    let plus2 = &f2.x + &f2.y * I;
    let minus2 = &f2.x - &f2.y * I;
    let a = linalg::solve_right(&plus1, &minus1, FACTOR_COND_CAP)?;
    let b = linalg::solve_right(&minus2, &plus2, FACTOR_COND_CAP)?;
    Ok(UnitaryMatrix { w: -(a * b) })
}

/// dim of the intersection of the two spans: singular values of Q1* J Q2 below `tol`
/// for orthonormalized frames Q1, Q2.
pub fn intersection_dimension(f1: &LagrangianFrame, f2: &LagrangianFrame, tol: f64) -> Result<usize> {
    if f1.n() != f2.n() {
        return Err(Error::DimensionMismatch(format!("frames of dimension {} and {}", f1.n(), f2.n())));
    }
    let p = j_product(&f1.orthonormalized(), &f2.orthonormalized());
    Ok(linalg::singular_values(&p).iter().filter(|&&s| s < tol).count())
}

/// Smallest singular value of Q1* J Q2 for orthonormalized frames (transversality gap).
pub fn transversality_gap(f1: &LagrangianFrame, f2: &LagrangianFrame) -> f64 {
    linalg::sigma_min(&j_product(&f1.orthonormalized(), &f2.orthonormalized()))
}

/// Orthogonal projection onto the span of a stacked frame.
pub fn projection(f: &LagrangianFrame) -> CMat {
    let q = f.orthonormalized().stacked();
    &q * q.adjoint()
}

/// Spectral norm of the difference of orthogonal projections.
pub fn grassmannian_distance(f1: &LagrangianFrame, f2: &LagrangianFrame) -> f64 {
    linalg::spectral_norm(&(projection(f1) - projection(f2)))
}

/// Frame built from a unitary U via X = (U + I)/2, Y = (U - I)/(2i).
pub fn frame_from_unitary(u: &CMat) -> LagrangianFrame {
    let n = u.nrows();
    let id = CMat::identity(n, n);
    let x = (u + &id).map(|z| z * 0.5);
    let y = (u - &id).map(|z| z / (I * 2.0));
    LagrangianFrame { x, y }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn frame(x: &[f64], y: &[f64], n: usize) -> LagrangianFrame {
        LagrangianFrame::from_real(x, y, n).unwrap()
    }

    #[test]
    fn check_lagrangian_examples() {
        assert!(check_lagrangian(&LagrangianFrame::dirichlet(2), 1e-12));
        assert!(check_lagrangian(&frame(&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 1.0], 2), 1e-12));
        let bad = LagrangianFrame::new(CMat::identity(2, 2), CMat::identity(2, 2) * I).unwrap();
        assert!(!check_lagrangian(&bad, 1e-8));
        assert!(!check_lagrangian(&LagrangianFrame { x: CMat::zeros(1, 1), y: CMat::zeros(1, 1) }, 1e-8));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(LagrangianFrame::new(CMat::zeros(2, 2), CMat::zeros(3, 3)).is_err());
        assert!(build_wtilde(&LagrangianFrame::dirichlet(1), &LagrangianFrame::dirichlet(2)).is_err());
    }

    #[test]
    fn wtilde_dirichlet_neumann_is_plus_one() {
        let w = build_wtilde(&LagrangianFrame::dirichlet(1), &LagrangianFrame::neumann(1)).unwrap();
        assert!((w.w[(0, 0)] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn wtilde_identical_frames_is_minus_identity() {
        let x = CMat::from_fn(2, 2, |i, j| c((1 + i + 2 * j) as f64));
        let s = CMat::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(-1.0)]);
        let f = LagrangianFrame::new(x.clone(), s * x).unwrap();
        assert!(check_lagrangian(&f, 1e-12));
        let w = build_wtilde(&f, &f).unwrap();
        assert!(linalg::max_abs(&(w.w + CMat::identity(2, 2))) < 1e-13);
    }

    #[test]
    fn intersection_and_distance_examples() {
        let d = LagrangianFrame::dirichlet(2);
        let nm = LagrangianFrame::neumann(2);
        assert_eq!(intersection_dimension(&d, &d, DEFAULT_KERNEL_TOL).unwrap(), 2);
        assert_eq!(intersection_dimension(&d, &nm, DEFAULT_KERNEL_TOL).unwrap(), 0);
        assert!(grassmannian_distance(&d, &d) < 1e-15);
        assert!((grassmannian_distance(&d, &nm) - 1.0).abs() < 1e-14);
        let m = CMat::from_fn(2, 2, |i, j| Complex64::new(1.0 + i as f64, j as f64 - 0.5));
        assert!(grassmannian_distance(&nm, &nm.gauge(&m)) < 1e-14);
    }

    #[test]
    fn frame_from_unitary_is_lagrangian() {
        let t = 0.7_f64;
        let rot = CMat::from_row_slice(2, 2, &[Complex64::new(t.cos(), 0.0), Complex64::new(-t.sin(), 0.0), Complex64::new(t.sin(), 0.0), Complex64::new(t.cos(), 0.0)]);
        let u = rot * CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), I]));
        let f = frame_from_unitary(&u);
        assert!(check_lagrangian(&f, 1e-14));
    }

    #[test]
    fn rotating_frame_against_dirichlet() {
        for &t in &[0.1, 0.8, 1.3, 2.9] {
            let f = frame(&[f64::cos(t)], &[f64::sin(t)], 1);
            let w = build_wtilde(&f, &LagrangianFrame::dirichlet(1)).unwrap();
            let expected = Complex64::from_polar(1.0, 2.0 * t);
            assert!((w.w[(0, 0)] - expected).norm() < 1e-14);
        }
        let f = frame(&[f64::cos(PI / 2.0)], &[1.0], 1);
        let w = build_wtilde(&f, &LagrangianFrame::dirichlet(1)).unwrap();
        assert_eq!(w.multiplicity_at_minus_one(1e-8), 1);
    }
}

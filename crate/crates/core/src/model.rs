//! The contract every Hamiltonian system J y' = B(x; lambda) y satisfies.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, AsymptoticFrames};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::symplectic::LagrangianFrame;

/// Distance below kappa inside which lambda is rejected.
pub const HYPERBOLICITY_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Minus,
    Plus,
}

/// Decay of coefficients toward their endstates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    /// Coefficients are constant.
    None,
    /// Coefficients equal their endstates for |x| beyond the given radius.
    Compact(f64),
    /// |B - B_pm| = O(exp(-rate |x|)).
    Exponential(f64),
    /// |B - B_pm| = O(|x|^(-power)).
    Polynomial(f64),
}

impl Decay {
    pub fn slowest(a: Decay, b: Decay) -> Decay {
        use Decay::*;
        match (a, b) {
            (None, d) | (d, None) => d,
            (Polynomial(p), Polynomial(q)) => Polynomial(p.min(q)),
            (Polynomial(p), _) | (_, Polynomial(p)) => Polynomial(p),
            (Exponential(r), Exponential(s)) => Exponential(r.min(s)),
            (Exponential(r), _) | (_, Exponential(r)) => Exponential(r),
            (Compact(r), Compact(s)) => Compact(r.max(s)),
        }
    }
}

/// Monotone target plane used for kernel sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneTarget {
    /// (0; I), for second-order systems.
    Dirichlet,
    /// The fourth-order analogue: phi = phi' = 0.
    Fourth,
}

impl MonotoneTarget {
    /// Frame of the target for half-dimension `n`.
    pub fn frame(&self, n: usize) -> LagrangianFrame {
        match self {
            MonotoneTarget::Dirichlet => LagrangianFrame::dirichlet(n),
            MonotoneTarget::Fourth => {
                let k = n / 2;
                let mut x = CMat::zeros(n, n);
                let mut y = CMat::zeros(n, n);
                for j in 0..k {
                    // columns (0, 0, I, 0) and (0, I, 0, 0) in the (phi, phi'', -phi''', -phi') layout
                    y[(j, j)] = linalg::c(1.0);
                    x[(k + j, k + j)] = linalg::c(1.0);
                }
                LagrangianFrame { x, y }
            }
        }
    }
}

/// Interval [lambda1, lambda2] with the essential spectrum edge kappa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralInterval {
    pub lambda1: f64,
    pub lambda2: f64,
    pub kappa: f64,
}

impl SpectralInterval {
    pub fn new(lambda1: f64, lambda2: f64, kappa: f64) -> Result<Self> {
        if !(lambda1 < lambda2) {
            return Err(Error::Admissibility(format!("need lambda1 < lambda2, got [{lambda1}, {lambda2}]")));
        }
        if kappa.is_finite() && !(lambda2 < kappa - HYPERBOLICITY_MARGIN) {
            return Err(Error::EssentialSpectrum { lambda: lambda2, kappa });
        }
        Ok(SpectralInterval { lambda1, lambda2, kappa })
    }
}

/// A linear Hamiltonian system J y' = B(x; lambda) y with half-dimension n.
pub trait HamiltonianSystem: Send + Sync {
    fn half_dim(&self) -> usize;

    fn b(&self, x: f64, lambda: f64) -> CMat;

    fn b_lambda(&self, x: f64, lambda: f64) -> CMat;

    /// Endstate B_pm(lambda).
    fn b_limit(&self, side: Side, lambda: f64) -> CMat;

    /// Essential spectrum edge; admissible lambdas lie strictly below it.
    fn kappa(&self) -> f64;

    fn decay(&self) -> Decay;

    fn label(&self) -> String;

    /// Monotone target plane for kernel sums, if the class has one.
    fn target(&self) -> Option<MonotoneTarget> {
        None
    }

    /// Coefficient matrix of y' = A y.
    fn a(&self, x: f64, lambda: f64) -> CMat {
        -linalg::apply_j(&self.b(x, lambda))
    }

    /// Endstate A_pm(lambda) = J^{-1} B_pm(lambda).
    fn a_limit(&self, side: Side, lambda: f64) -> CMat {
        -linalg::apply_j(&self.b_limit(side, lambda))
    }

    /// Asymptotic frames; the default splits A_pm numerically.
    fn asymptotic_frames(&self, lambda: f64) -> Result<AsymptoticFrames> {
        self.check_admissible(lambda)?;
        asymptotics::generic_frames(&self.a_limit(Side::Minus, lambda), &self.a_limit(Side::Plus, lambda))
    }

    /// Lower bound below which no conjugate points with the monotone target occur.
    fn left_shelf_floor(&self, _half_width: f64, _lambda_hi: f64, _safety: f64) -> Result<f64> {
        Err(Error::Unsupported(format!("{}: no left-shelf bound available", self.label())))
    }

    /// Extra admissibility rules (e.g. excluded ranges) beyond lambda < kappa.
    fn check_admissible(&self, lambda: f64) -> Result<()> {
        let kappa = self.kappa();
        if !lambda.is_finite() || !(lambda < kappa - HYPERBOLICITY_MARGIN) {
            return Err(Error::EssentialSpectrum { lambda, kappa });
        }
        Ok(())
    }

    /// Admissibility of a whole interval [lambda1, lambda2].
    fn check_interval(&self, lambda1: f64, lambda2: f64) -> Result<()> {
        if !(lambda1 < lambda2) {
            return Err(Error::Admissibility(format!("need lambda1 < lambda2, got [{lambda1}, {lambda2}]")));
        }
        self.check_admissible(lambda1)?;
        self.check_admissible(lambda2)
    }

    /// Lambda values below which counts over (-inf, lambda2) are defined.
    fn below_essential_spectrum(&self, lambda: f64) -> bool {
        lambda < self.kappa() - HYPERBOLICITY_MARGIN
    }

    /// Distance ||B(x) - B_pm|| of the coefficients from the matching endstate.
    fn tail(&self, x: f64, lambda: f64) -> f64 {
        let side = if x < 0.0 { Side::Minus } else { Side::Plus };
        linalg::spectral_norm(&(self.b(x, lambda) - self.b_limit(side, lambda)))
    }
}

/// Results of sampling the system contract.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub max_self_adjoint_residual: f64,
    pub max_b_lambda_residual: f64,
    pub min_spectral_gap: f64,
    pub max_reconstruction_residual: f64,
}

/// Tolerances used by [`validate_system`].
#[derive(Clone, Copy, Debug)]
pub struct ValidationTolerances {
    pub self_adjoint: f64,
    pub b_lambda: f64,
    pub gap: f64,
    pub reconstruction: f64,
    pub fd_step: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        ValidationTolerances { self_adjoint: 1e-10, b_lambda: 1e-5, gap: 1e-6, reconstruction: 1e-10, fd_step: 1e-4 }
    }
}

/// Spectral gap min Re(unstable) - max Re(stable) of a hyperbolic matrix (0 if not hyperbolic).
pub fn spectral_gap(a: &CMat) -> f64 {
    let eig = linalg::eigenvalues(a);
    let pos = eig.iter().filter(|z| z.re > 0.0).map(|z| z.re).fold(f64::INFINITY, f64::min);
    let neg = eig.iter().filter(|z| z.re < 0.0).map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let n = eig.len() / 2;
    let npos = eig.iter().filter(|z| z.re > 0.0).count();
    let nneg = eig.iter().filter(|z| z.re < 0.0).count();
    if npos != n || nneg != n {
        return 0.0;
    }
    pos - neg
}

/// Sample self-adjointness, B_lambda consistency and hyperbolicity of A_pm.
pub fn validate_system(sys: &dyn HamiltonianSystem, xs: &[f64], lambdas: &[f64], tol: ValidationTolerances) -> Result<ValidationReport> {
    if xs.is_empty() || lambdas.is_empty() {
        return Err(Error::Input("validation needs a nonempty sample grid".into()));
    }
    let mut report = ValidationReport { max_self_adjoint_residual: 0.0, max_b_lambda_residual: 0.0, min_spectral_gap: f64::INFINITY, max_reconstruction_residual: 0.0 };
    let h = tol.fd_step;
    for &lambda in lambdas {
        sys.check_admissible(lambda)?;
        for &x in xs {
            let b = sys.b(x, lambda);
            report.max_self_adjoint_residual = report.max_self_adjoint_residual.max(linalg::max_abs(&(&b - b.adjoint())));
            let fd = (sys.b(x, lambda + h) - sys.b(x, lambda - h)).map(|z| z / (2.0 * h));
            report.max_b_lambda_residual = report.max_b_lambda_residual.max(linalg::max_abs(&(sys.b_lambda(x, lambda) - fd)));
        }
        for side in [Side::Minus, Side::Plus] {
            let a = sys.a_limit(side, lambda);
            let rebuilt = -linalg::apply_j(&sys.b_limit(side, lambda));
            report.max_reconstruction_residual = report.max_reconstruction_residual.max(linalg::max_abs(&(a.clone() - rebuilt)));
            report.min_spectral_gap = report.min_spectral_gap.min(spectral_gap(&a));
        }
    }
    if report.max_self_adjoint_residual > tol.self_adjoint {
        return Err(Error::Validation { assumption: "A".into(), detail: format!("B not self-adjoint: residual {:.3e}", report.max_self_adjoint_residual) });
    }
    if report.max_b_lambda_residual > tol.b_lambda {
        return Err(Error::Validation { assumption: "A".into(), detail: format!("B_lambda inconsistent with finite differences: residual {:.3e}", report.max_b_lambda_residual) });
    }
    if report.max_reconstruction_residual > tol.reconstruction {
        return Err(Error::Validation { assumption: "B2".into(), detail: format!("A_pm differs from J^-1 B_pm: residual {:.3e}", report.max_reconstruction_residual) });
    }
    if report.min_spectral_gap <= tol.gap {
        return Err(Error::Validation { assumption: "B2".into(), detail: format!("A_pm not hyperbolic: gap {:.3e}", report.min_spectral_gap) });
    }
    Ok(report)
}

//! Finite-difference reference counter on [-L, L] with Dirichlet (or clamped) ends.
//!
//! Each operator class is discretised as a symmetric banded pencil H - lambda M with M
//! positive definite, so the number of eigenvalues below lambda is the number of negative
//! pivots in an LDL^T factorisation of H - lambda M.

use serde::Serialize;

use crate::coefficients::CoefMatrix;
use crate::error::{Error, Result};
use crate::evolution;
use crate::linalg::RMat;
use crate::model::HamiltonianSystem;
use crate::systems::{DaHamiltonian, FourthHamiltonian, SlHamiltonian, TravelingHamiltonian};

pub const MIN_POINTS: usize = 200;
pub const DEFAULT_STEP: f64 = 0.04;
/// Fraction of the half-width at each end treated as the boundary layer for screening.
pub const OUTER_FRACTION: f64 = 0.1;
/// Modes with more than this share of their mass in the boundary layer are discarded.
pub const MAX_OUTER_MASS: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SecondOrderCentral,
    FourthDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscretizationSpec {
    /// Half-width L.
    pub l: f64,
    /// Number of grid points including the two boundary nodes.
    pub n: usize,
    pub scheme: Scheme,
}

impl DiscretizationSpec {
    pub fn new(l: f64, n: usize, scheme: Scheme) -> Result<Self> {
        if !(l > 0.0) || n < MIN_POINTS {
            return Err(Error::Input(format!("oracle grid needs L > 0 and N >= {MIN_POINTS}, got L = {l}, N = {n}")));
        }
        Ok(DiscretizationSpec { l, n, scheme })
    }

    /// Spec with L = 2c and a step close to `h`.
    pub fn for_truncation(c: f64, h: f64, scheme: Scheme) -> Result<Self> {
        let l = 2.0 * c;
        let n = ((2.0 * l / h).ceil() as usize + 1).max(MIN_POINTS);
        Self::new(l, n, scheme)
    }

    /// The (1.5 L, 2 N) refinement.
    pub fn refined(&self) -> Self {
        DiscretizationSpec { l: 1.5 * self.l, n: 2 * self.n, scheme: self.scheme }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.l / (self.n - 1) as f64
    }

    /// Interior nodes (boundary nodes carry the Dirichlet data).
    fn interior(&self) -> Vec<f64> {
        let h = self.step();
        (1..self.n - 1).map(|i| -self.l + h * i as f64).collect()
    }
}

/// Symmetric banded pencil in lower band storage, dof = node * comps + component.
#[derive(Clone, Debug)]
pub struct BandedPencil {
    pub dim: usize,
    pub bw: usize,
    h: Vec<f64>,
    m: Vec<f64>,
    pub comps: usize,
    pub xs: Vec<f64>,
}

impl BandedPencil {
    fn new(xs: Vec<f64>, comps: usize, bw: usize) -> Self {
        let dim = xs.len() * comps;
        BandedPencil { dim, bw, h: vec![0.0; dim * (bw + 1)], m: vec![0.0; dim * (bw + 1)], comps, xs }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    fn add_h(&mut self, i: usize, j: usize, v: f64) {
        if i >= j {
            let k = self.idx(i, j);
            self.h[k] += v;
        }
    }

    fn add_m(&mut self, i: usize, j: usize, v: f64) {
        if i >= j {
            let k = self.idx(i, j);
            self.m[k] += v;
        }
    }

    /// Add block b between nodes a and c (only the lower triangle is stored).
    fn add_block_h(&mut self, a: usize, c: usize, b: &RMat) {
        for p in 0..self.comps {
            for q in 0..self.comps {
                self.add_h(a * self.comps + p, c * self.comps + q, b[(p, q)]);
            }
        }
    }

    fn add_block_m(&mut self, a: usize, b: &RMat) {
        for p in 0..self.comps {
            for q in 0..self.comps {
                self.add_m(a * self.comps + p, a * self.comps + q, b[(p, q)]);
            }
        }
    }

    fn shifted(&self, lambda: f64) -> Vec<f64> {
        self.h.iter().zip(&self.m).map(|(h, m)| h - lambda * m).collect()
    }

    /// LDL^T factorisation of H - lambda M without pivoting.
    fn ldl(&self, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let w = self.bw + 1;
        let mut a = self.shifted(lambda);
        let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
        let mut d = vec![0.0; self.dim];
        for j in 0..self.dim {
            let lo = j.saturating_sub(self.bw);
            let mut djj = a[j * w];
            for k in lo..j {
                let ljk = a[j * w + (j - k)];
                djj -= ljk * ljk * d[k];
            }
            if djj.abs() < 1e-300 * scale {
                djj = f64::EPSILON * scale;
            }
            d[j] = djj;
            for i in j + 1..(j + w).min(self.dim) {
                let mut s = a[i * w + (i - j)];
                for k in i.saturating_sub(self.bw)..j {
                    s -= a[i * w + (i - k)] * a[j * w + (j - k)] * d[k];
                }
                a[i * w + (i - j)] = s / djj;
            }
        }
        (a, d)
    }

    /// Number of eigenvalues strictly below lambda.
    pub fn count_below(&self, lambda: f64) -> usize {
        self.ldl(lambda).1.iter().filter(|&&d| d < 0.0).count()
    }

    fn mul_m(&self, v: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            for k in 0..w.min(i + 1) {
                let j = i - k;
                let mij = self.m[i * w + k];
                out[i] += mij * v[j];
                if k > 0 {
                    out[j] += mij * v[i];
                }
            }
        }
        out
    }

    fn solve_ldl(&self, l: &[f64], d: &[f64], rhs: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut z = rhs.to_vec();
        for i in 0..self.dim {
            for k in 1..w.min(i + 1) {
                z[i] -= l[i * w + k] * z[i - k];
            }
        }
        for i in 0..self.dim {
            z[i] /= d[i];
        }
        for i in (0..self.dim).rev() {
            for k in 1..w.min(self.dim - i) {
                z[i] -= l[(i + k) * w + k] * z[i + k];
            }
        }
        z
    }

    /// M-orthonormal basis of the eigenspace near sigma by subspace inverse iteration.
    fn eigenvectors(&self, sigma: f64, k: usize) -> Vec<Vec<f64>> {
        let (l, d) = self.ldl(sigma);
        let mut vs: Vec<Vec<f64>> = (0..k).map(|j| (0..self.dim).map(|i| (((i * 7919 + j * 104_729) % 1009) as f64 / 1009.0) - 0.5).collect()).collect();
        for _ in 0..6 {
            let mut next: Vec<Vec<f64>> = vs.iter().map(|v| self.solve_ldl(&l, &d, &self.mul_m(v))).collect();
            for a in 0..next.len() {
                for b in 0..a {
                    let mb = self.mul_m(&next[b]);
                    let proj: f64 = next[a].iter().zip(&mb).map(|(x, y)| x * y).sum();
                    let nb = next[b].clone();
                    for (x, y) in next[a].iter_mut().zip(&nb) {
                        *x -= proj * y;
                    }
                }
                let ma = self.mul_m(&next[a]);
                let norm: f64 = next[a].iter().zip(&ma).map(|(x, y)| x * y).sum::<f64>().sqrt();
                for x in next[a].iter_mut() {
                    *x /= norm;
                }
            }
            vs = next;
        }
        vs
    }

    /// Share of the M-mass of v in the outer boundary layer.
    fn outer_mass(&self, v: &[f64]) -> f64 {
        let l = self.xs.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        let mv = self.mul_m(v);
        let mut total = 0.0;
        let mut outer = 0.0;
        for (i, (a, b)) in v.iter().zip(&mv).enumerate() {
            let m = a * b;
            total += m;
            if self.xs[i / self.comps].abs() > (1.0 - OUTER_FRACTION) * l {
                outer += m;
            }
        }
        outer / total
    }
}

/// Banded pencil for an operator class.
pub trait Discretize {
    fn scheme(&self) -> Scheme;
    fn pencil(&self, spec: &DiscretizationSpec) -> BandedPencil;
}

fn second_order_pencil(xs: Vec<f64>, h: f64, p: &CoefMatrix, v: &dyn Fn(f64) -> RMat, q: &dyn Fn(f64) -> RMat) -> BandedPencil {
    let n = p.rows;
    let mut pen = BandedPencil::new(xs.clone(), n, 2 * n - 1);
    let h2 = h * h;
    for (i, &x) in xs.iter().enumerate() {
        let pl = p.eval(x - 0.5 * h);
        let pr = p.eval(x + 0.5 * h);
        pen.add_block_h(i, i, &((&pl + &pr) / h2 + v(x)));
        if i > 0 {
            pen.add_block_h(i, i - 1, &(-&pl / h2));
        }
        pen.add_block_m(i, &q(x));
    }
    pen
}

impl Discretize for SlHamiltonian {
    fn scheme(&self) -> Scheme {
        Scheme::SecondOrderCentral
    }

    fn pencil(&self, spec: &DiscretizationSpec) -> BandedPencil {
        let s = &self.system;
        second_order_pencil(spec.interior(), spec.step(), &s.p, &|x| s.v.eval(x), &|x| s.q.eval(x))
    }
}

impl Discretize for TravelingHamiltonian {
    fn scheme(&self) -> Scheme {
        Scheme::SecondOrderCentral
    }

    /// The conjugated operator -psi'' + (V + s^2/4) psi.
    fn pencil(&self, spec: &DiscretizationSpec) -> BandedPencil {
        let n = self.n;
        let shift = 0.25 * self.system.s * self.system.s;
        let v = |x: f64| self.system.v.eval(x) + RMat::identity(n, n) * shift;
        second_order_pencil(spec.interior(), spec.step(), &CoefMatrix::constant_identity(n), &v, &|_| RMat::identity(n, n))
    }
}

impl Discretize for FourthHamiltonian {
    fn scheme(&self) -> Scheme {
        Scheme::FourthDifference
    }

    /// phi'''' with clamped ends (phi = phi' = 0), so the first and last diagonals become 7.
    fn pencil(&self, spec: &DiscretizationSpec) -> BandedPencil {
        let n = self.n;
        let xs = spec.interior();
        let last = xs.len() - 1;
        let h4 = spec.step().powi(4);
        let id = RMat::identity(n, n);
        let mut pen = BandedPencil::new(xs.clone(), n, 3 * n - 1);
        for (i, &x) in xs.iter().enumerate() {
            let diag = if i == 0 || i == last { 7.0 } else { 6.0 };
            pen.add_block_h(i, i, &(&id * (diag / h4) + self.system.v.eval(x)));
            if i >= 1 {
                pen.add_block_h(i, i - 1, &(&id * (-4.0 / h4)));
            }
            if i >= 2 {
                pen.add_block_h(i, i - 2, &(&id * (1.0 / h4)));
            }
            pen.add_block_m(i, &id);
        }
        pen
    }
}

impl Discretize for DaHamiltonian {
    fn scheme(&self) -> Scheme {
        Scheme::SecondOrderCentral
    }

    /// Full (m + k)-component operator, linear in lambda.
    fn pencil(&self, spec: &DiscretizationSpec) -> BandedPencil {
        let (m, k) = (self.m, self.k);
        let s = &self.system;
        let xs = spec.interior();
        let h = spec.step();
        let h2 = h * h;
        let mut pen = BandedPencil::new(xs.clone(), m + k, 2 * (m + k) - 1);
        for (i, &x) in xs.iter().enumerate() {
            let pl = s.p11.eval(x - 0.5 * h);
            let pr = s.p11.eval(x + 0.5 * h);
            let mut d = RMat::zeros(m + k, m + k);
            d.view_mut((0, 0), (m, m)).copy_from(&((&pl + &pr) / h2 + s.v11.eval(x)));
            let v12 = s.v12.eval(x);
            d.view_mut((0, m), (m, k)).copy_from(&v12);
            d.view_mut((m, 0), (k, m)).copy_from(&v12.transpose());
            d.view_mut((m, m), (k, k)).copy_from(&s.v22.eval(x));
            pen.add_block_h(i, i, &d);
            if i > 0 {
                let mut off = RMat::zeros(m + k, m + k);
                off.view_mut((0, 0), (m, m)).copy_from(&(-&pl / h2));
                pen.add_block_h(i, i - 1, &off);
            }
            pen.add_block_m(i, &RMat::identity(m + k, m + k));
        }
        pen
    }
}

/// Eigenvalue clusters (value, multiplicity) of the pencil in [lambda1, lambda2).
fn clusters(pen: &BandedPencil, lambda1: f64, lambda2: f64) -> Vec<(f64, usize)> {
    let tol = 1e-10 * (1.0 + lambda1.abs().max(lambda2.abs()));
    let mut out = Vec::new();
    let mut stack = vec![(lambda1, pen.count_below(lambda1), lambda2, pen.count_below(lambda2))];
    while let Some((a, ca, b, cb)) = stack.pop() {
        if cb <= ca {
            continue;
        }
        if b - a < tol {
            out.push((0.5 * (a + b), cb - ca));
            continue;
        }
        let mid = 0.5 * (a + b);
        let cm = pen.count_below(mid);
        stack.push((a, ca, mid, cm));
        stack.push((mid, cm, b, cb));
    }
    out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    out
}

/// Counted eigenvalues of one discretisation.
#[derive(Clone, Debug, Serialize)]
pub struct OracleLevel {
    pub spec: DiscretizationSpec,
    pub count: usize,
    pub eigenvalues: Vec<f64>,
    /// Modes discarded as boundary-localised.
    pub discarded: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub count: usize,
    pub coarse: OracleLevel,
    pub fine: OracleLevel,
}

/// Count on one grid, screening boundary-localised modes.
pub fn oracle_level(sys: &dyn Discretize, lambda1: f64, lambda2: f64, spec: &DiscretizationSpec) -> OracleLevel {
    let pen = sys.pencil(spec);
    let mut eigenvalues = Vec::new();
    let mut discarded = Vec::new();
    for (lam, mult) in clusters(&pen, lambda1, lambda2) {
        let sigma = lam - 1e-7 * (1.0 + lam.abs());
        for v in pen.eigenvectors(sigma, mult) {
            if pen.outer_mass(&v) > MAX_OUTER_MASS {
                discarded.push(lam);
            } else {
                eigenvalues.push(lam);
            }
        }
    }
    OracleLevel { spec: *spec, count: eigenvalues.len(), eigenvalues, discarded }
}

/// Number of eigenvalues in [lambda1, lambda2), checked under (L, N) -> (1.5 L, 2 N).
pub fn oracle_count(sys: &dyn Discretize, lambda1: f64, lambda2: f64, spec: &DiscretizationSpec) -> Result<OracleReport> {
    if !(lambda1 < lambda2) {
        return Err(Error::Admissibility(format!("need lambda1 < lambda2, got [{lambda1}, {lambda2})")));
    }
    let coarse = oracle_level(sys, lambda1, lambda2, spec);
    let fine = oracle_level(sys, lambda1, lambda2, &spec.refined());
    if coarse.count != fine.count {
        return Err(Error::OracleUnconverged { coarse: coarse.count, fine: fine.count });
    }
    Ok(OracleReport { lambda1, lambda2, count: fine.count, coarse, fine })
}

/// Default grid: L = 2c with c from the truncation rule for the interval.
pub fn default_spec<S: HamiltonianSystem + Discretize>(sys: &S, lambda1: f64, lambda2: f64) -> Result<DiscretizationSpec> {
    let c = match evolution::choose_truncation(sys, lambda1, lambda2, evolution::DEFAULT_TAIL_TOL) {
        Ok(p) => p.c,
        Err(_) => evolution::C_FLOOR.max(12.0),
    };
    DiscretizationSpec::for_truncation(c.max(6.0), DEFAULT_STEP, sys.scheme())
}

/// Lower end used for counts below lambda2: a bound under every eigenvalue of the pencil.
pub fn spectral_floor(sys: &dyn Discretize, spec: &DiscretizationSpec) -> f64 {
    let pen = sys.pencil(spec);
    let w = pen.bw + 1;
    let mut lo = f64::INFINITY;
    for i in 0..pen.dim {
        let mut off = 0.0;
        for k in 1..w.min(i + 1) {
            off += pen.h[i * w + k].abs();
        }
        for k in 1..w.min(pen.dim - i) {
            off += pen.h[(i + k) * w + k].abs();
        }
        let mii = pen.m[i * w];
        lo = lo.min((pen.h[i * w] - off) / mii.max(1e-300));
    }
    lo.min(0.0) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Profile;
    use crate::systems::*;

    fn sl(v: Profile) -> SlHamiltonian {
        sl_to_hamiltonian(SturmLiouvilleSystem::scalar_schrodinger(v)).unwrap()
    }

    #[test]
    fn sech2_well_has_one_eigenvalue() {
        let h = sl(Profile::sech2(-2.0));
        let spec = DiscretizationSpec::for_truncation(10.0, DEFAULT_STEP, Scheme::SecondOrderCentral).unwrap();
        let r = oracle_count(&h, -2.0, -0.5, &spec).unwrap();
        assert_eq!(r.count, 1);
        assert!((r.fine.eigenvalues[0] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn free_operators_have_no_eigenvalues_below_zero() {
        let spec = DiscretizationSpec::for_truncation(10.0, DEFAULT_STEP, Scheme::SecondOrderCentral).unwrap();
        assert_eq!(oracle_count(&sl(Profile::constant(0.0)), -2.0, -1.0, &spec).unwrap().count, 0);
        let f = fourth_to_hamiltonian(FourthOrderSystem { v: CoefMatrix::scalar(Profile::constant(0.0)) }).unwrap();
        let spec = DiscretizationSpec::for_truncation(10.0, DEFAULT_STEP, Scheme::FourthDifference).unwrap();
        assert_eq!(oracle_count(&f, -5.0, -1e-3, &spec).unwrap().count, 0);
    }

    #[test]
    fn ldl_inertia_matches_dense_eigenvalues() {
        let h = sl(Profile::PoschlTeller { m: 2 });
        let spec = DiscretizationSpec::new(6.0, 201, Scheme::SecondOrderCentral).unwrap();
        let pen = h.pencil(&spec);
        let mut dense = RMat::zeros(pen.dim, pen.dim);
        for i in 0..pen.dim {
            for j in 0..=i {
                if i - j <= pen.bw {
                    let v = pen.h[pen.idx(i, j)];
                    dense[(i, j)] = v;
                    dense[(j, i)] = v;
                }
            }
        }
        let eig = crate::linalg::real_symmetric_eigen(&dense).0;
        for lam in [-5.0, -3.0, -0.5, 0.5, 3.0] {
            assert_eq!(pen.count_below(lam), eig.iter().filter(|&&e| e < lam).count());
        }
    }

    #[test]
    fn boundary_modes_are_screened() {
        // A well touching the right boundary produces a boundary-localised mode.
        let h = sl(Profile::GaussianWell { depth: 20.0, width: 0.6, center: 9.4 });
        let spec = DiscretizationSpec::new(10.0, 801, Scheme::SecondOrderCentral).unwrap();
        let lvl = oracle_level(&h, -10.0, -0.1, &spec);
        assert_eq!(lvl.count, 0);
        assert!(!lvl.discarded.is_empty());
    }
}

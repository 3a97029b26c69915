//! Concrete system classes: Sturm-Liouville, traveling waves, fourth-order potential
//! systems and differential-algebraic systems reduced to a lambda-nonlinear problem.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::asymptotics::{self, AsymptoticFrames, EssentialSpectrumInfo, SlEndstates};
use crate::coefficients::CoefMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, c, to_complex, CMat, RMat};
use crate::model::{Decay, HamiltonianSystem, MonotoneTarget, Side, HYPERBOLICITY_MARGIN};

/// Default safety factor applied to sampled bound constants.
pub const DEFAULT_SAFETY: f64 = 1.05;
/// Half-width of the grid used to sample coefficient bounds at construction.
pub const SAMPLE_HALF_WIDTH: f64 = 30.0;
/// Margin added around sampled excluded ranges of differential-algebraic systems.
pub const EXCLUDED_RANGE_MARGIN: f64 = 1e-3;

/// Uniform sample grid on [-half_width, half_width] (odd count, so 0 is included).
pub fn sample_grid(half_width: f64, points: usize) -> Vec<f64> {
    let m = points.max(3) | 1;
    (0..m).map(|k| -half_width + 2.0 * half_width * k as f64 / (m - 1) as f64).collect()
}

fn block_diag(a: &RMat, b: &RMat) -> CMat {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMat::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(&to_complex(a));
    out.view_mut((n, n), (m, m)).copy_from(&to_complex(b));
    out
}

fn sym_inverse(m: &RMat, what: &str) -> Result<RMat> {
    m.clone().cholesky().map(|ch| ch.inverse()).ok_or_else(|| Error::Validation { assumption: "SL1".into(), detail: format!("{what} is not positive definite") })
}

fn min_eig(m: &RMat) -> f64 {
    linalg::real_symmetric_eigen(m).0[0]
}

fn spectral_norm_real(m: &RMat) -> f64 {
    m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

fn require_square(m: &CoefMatrix, n: usize, name: &str) -> Result<()> {
    if m.rows != n || m.cols != n {
        return Err(Error::DimensionMismatch(format!("{name} is {}x{}, expected {n}x{n}", m.rows, m.cols)));
    }
    if !m.is_symmetric() {
        return Err(Error::Validation { assumption: "A".into(), detail: format!("{name} must be symmetric") });
    }
    Ok(())
}

// ---------------------------------------------------------------- Sturm-Liouville

/// -(P phi')' + V phi = lambda Q phi.
#[derive(Clone, Debug)]
pub struct SturmLiouvilleSystem {
    pub p: CoefMatrix,
    pub v: CoefMatrix,
    pub q: CoefMatrix,
}

impl SturmLiouvilleSystem {
    pub fn scalar_schrodinger(v: crate::coefficients::Profile) -> Self {
        SturmLiouvilleSystem { p: CoefMatrix::constant_identity(1), v: CoefMatrix::scalar(v), q: CoefMatrix::constant_identity(1) }
    }
}

/// Hamiltonian form with y = (phi; P phi'), B = diag(lambda Q - V, P^{-1}).
#[derive(Clone, Debug)]
pub struct SlHamiltonian {
    pub system: SturmLiouvilleSystem,
    pub n: usize,
    pub ends: SlEndstates,
    pub kappa: f64,
    pub theta_p: f64,
    pub theta_q: f64,
}

pub fn sl_to_hamiltonian(system: SturmLiouvilleSystem) -> Result<SlHamiltonian> {
    let n = system.v.rows;
    require_square(&system.p, n, "P")?;
    require_square(&system.v, n, "V")?;
    require_square(&system.q, n, "Q")?;
    system.p.validate("P")?;
    system.v.validate("V")?;
    system.q.validate("Q")?;
    let mut theta_p = f64::INFINITY;
    let mut theta_q = f64::INFINITY;
    for x in sample_grid(SAMPLE_HALF_WIDTH, 2001) {
        theta_p = theta_p.min(min_eig(&system.p.eval(x)));
        theta_q = theta_q.min(min_eig(&system.q.eval(x)));
    }
    for side in [Side::Minus, Side::Plus] {
        theta_p = theta_p.min(min_eig(&system.p.limit(side)));
        theta_q = theta_q.min(min_eig(&system.q.limit(side)));
    }
    if !(theta_p > 0.0) || !(theta_q > 0.0) {
        return Err(Error::Validation { assumption: "SL1".into(), detail: format!("positivity fails: theta_P = {theta_p:.3e}, theta_Q = {theta_q:.3e}") });
    }
    let ends = SlEndstates {
        p_minus: to_complex(&system.p.limit(Side::Minus)),
        v_minus: to_complex(&system.v.limit(Side::Minus)),
        q_minus: to_complex(&system.q.limit(Side::Minus)),
        p_plus: to_complex(&system.p.limit(Side::Plus)),
        v_plus: to_complex(&system.v.limit(Side::Plus)),
        q_plus: to_complex(&system.q.limit(Side::Plus)),
    };
    let kappa = ends.kappa()?;
    Ok(SlHamiltonian { system, n, ends, kappa, theta_p, theta_q })
}

impl SlHamiltonian {
    fn endstate(&self, side: Side) -> (RMat, RMat, RMat) {
        (self.system.p.limit(side), self.system.v.limit(side), self.system.q.limit(side))
    }

    /// Sampled (C_V, theta_Q) with C_V = sup ||V|| over the grid and endstates.
    pub fn bound_constants(&self, half_width: f64) -> (f64, f64) {
        let mut cv: f64 = 0.0;
        let mut tq = f64::INFINITY;
        for x in sample_grid(half_width, 4001) {
            cv = cv.max(spectral_norm_real(&self.system.v.eval(x)));
            tq = tq.min(min_eig(&self.system.q.eval(x)));
        }
        for side in [Side::Minus, Side::Plus] {
            cv = cv.max(spectral_norm_real(&self.system.v.limit(side)));
            tq = tq.min(min_eig(&self.system.q.limit(side)));
        }
        (cv, tq)
    }
}

fn sl_b(p: &RMat, v: &RMat, q: &RMat, lambda: f64) -> Result<CMat> {
    Ok(block_diag(&(q * lambda - v), &sym_inverse(p, "P")?))
}

fn sl_a(p: &RMat, v: &RMat, q: &RMat, lambda: f64) -> CMat {
    let n = p.nrows();
    let mut a = CMat::zeros(2 * n, 2 * n);
    let pinv = sym_inverse(p, "P").expect("P validated positive definite");
    a.view_mut((0, n), (n, n)).copy_from(&to_complex(&pinv));
    a.view_mut((n, 0), (n, n)).copy_from(&to_complex(&(v - q * lambda)));
    a
}

impl HamiltonianSystem for SlHamiltonian {
    fn half_dim(&self) -> usize {
        self.n
    }

    fn b(&self, x: f64, lambda: f64) -> CMat {
        sl_b(&self.system.p.eval(x), &self.system.v.eval(x), &self.system.q.eval(x), lambda).expect("P validated positive definite")
    }

    fn b_lambda(&self, x: f64, _lambda: f64) -> CMat {
        block_diag(&self.system.q.eval(x), &RMat::zeros(self.n, self.n))
    }

    fn b_limit(&self, side: Side, lambda: f64) -> CMat {
        let (p, v, q) = self.endstate(side);
        sl_b(&p, &v, &q, lambda).expect("P validated positive definite")
    }

    fn a(&self, x: f64, lambda: f64) -> CMat {
        sl_a(&self.system.p.eval(x), &self.system.v.eval(x), &self.system.q.eval(x), lambda)
    }

    fn a_limit(&self, side: Side, lambda: f64) -> CMat {
        let (p, v, q) = self.endstate(side);
        sl_a(&p, &v, &q, lambda)
    }

    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn decay(&self) -> Decay {
        Decay::slowest(Decay::slowest(self.system.p.decay(), self.system.v.decay()), self.system.q.decay())
    }

    fn label(&self) -> String {
        format!("sturm_liouville(n={})", self.n)
    }

    fn target(&self) -> Option<MonotoneTarget> {
        Some(MonotoneTarget::Dirichlet)
    }

    fn asymptotic_frames(&self, lambda: f64) -> Result<AsymptoticFrames> {
        self.check_admissible(lambda)?;
        asymptotics::sl_asymptotic_frames(&self.ends, lambda)
    }

    fn left_shelf_floor(&self, half_width: f64, _lambda_hi: f64, safety: f64) -> Result<f64> {
        let (cv, tq) = self.bound_constants(half_width);
        if !cv.is_finite() {
            return Err(Error::Input("sampled V is unbounded; supply an explicit C_V".into()));
        }
        Ok(-(cv * safety) / (tq / safety))
    }
}

// ---------------------------------------------------------------- traveling waves

/// -phi'' - s phi' + V phi = lambda phi, conjugated by exp((s/2) x).
#[derive(Clone, Debug)]
pub struct TravelingWaveSystem {
    pub v: CoefMatrix,
    pub s: f64,
}

#[derive(Clone, Debug)]
pub struct TravelingHamiltonian {
    pub system: TravelingWaveSystem,
    pub n: usize,
    pub kappa: f64,
}

pub fn traveling_to_hamiltonian(system: TravelingWaveSystem) -> Result<TravelingHamiltonian> {
    let n = system.v.rows;
    require_square(&system.v, n, "V")?;
    system.v.validate("V")?;
    if !system.s.is_finite() {
        return Err(Error::Input("wave speed s must be finite".into()));
    }
    let kappa = min_eig(&system.v.limit(Side::Minus)).min(min_eig(&system.v.limit(Side::Plus)));
    Ok(TravelingHamiltonian { system, n, kappa })
}

fn traveling_b(v: &RMat, s: f64, lambda: f64) -> CMat {
    let n = v.nrows();
    let mut b = CMat::zeros(2 * n, 2 * n);
    let id = RMat::identity(n, n);
    b.view_mut((0, 0), (n, n)).copy_from(&to_complex(&(&id * lambda - v)));
    b.view_mut((0, n), (n, n)).copy_from(&to_complex(&(&id * (0.5 * s))));
    b.view_mut((n, 0), (n, n)).copy_from(&to_complex(&(&id * (0.5 * s))));
    b.view_mut((n, n), (n, n)).copy_from(&to_complex(&id));
    b
}

impl TravelingHamiltonian {
    pub fn bound_constant(&self, half_width: f64) -> f64 {
        let mut cv: f64 = 0.0;
        for x in sample_grid(half_width, 4001) {
            cv = cv.max(spectral_norm_real(&self.system.v.eval(x)));
        }
        for side in [Side::Minus, Side::Plus] {
            cv = cv.max(spectral_norm_real(&self.system.v.limit(side)));
        }
        cv
    }
}

impl HamiltonianSystem for TravelingHamiltonian {
    fn half_dim(&self) -> usize {
        self.n
    }

    fn b(&self, x: f64, lambda: f64) -> CMat {
        traveling_b(&self.system.v.eval(x), self.system.s, lambda)
    }

    fn b_lambda(&self, _x: f64, _lambda: f64) -> CMat {
        block_diag(&RMat::identity(self.n, self.n), &RMat::zeros(self.n, self.n))
    }

    fn b_limit(&self, side: Side, lambda: f64) -> CMat {
        traveling_b(&self.system.v.limit(side), self.system.s, lambda)
    }

    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn decay(&self) -> Decay {
        self.system.v.decay()
    }

    fn label(&self) -> String {
        format!("traveling(n={}, s={})", self.n, self.system.s)
    }

    fn target(&self) -> Option<MonotoneTarget> {
        Some(MonotoneTarget::Dirichlet)
    }

    fn left_shelf_floor(&self, half_width: f64, _lambda_hi: f64, safety: f64) -> Result<f64> {
        let cv = self.bound_constant(half_width);
        if !cv.is_finite() {
            return Err(Error::Input("sampled V is unbounded; supply an explicit C_V".into()));
        }
        Ok(-cv * safety)
    }
}

// ---------------------------------------------------------------- fourth order

/// phi'''' + V phi = lambda phi with a common endstate V_a.
#[derive(Clone, Debug)]
pub struct FourthOrderSystem {
    pub v: CoefMatrix,
}

#[derive(Clone, Debug)]
pub struct FourthHamiltonian {
    pub system: FourthOrderSystem,
    pub n: usize,
    pub v_a: RMat,
    pub kappa: f64,
}

pub fn fourth_to_hamiltonian(system: FourthOrderSystem) -> Result<FourthHamiltonian> {
    let n = system.v.rows;
    require_square(&system.v, n, "V")?;
    system.v.validate("V")?;
    let vm = system.v.limit(Side::Minus);
    let vp = system.v.limit(Side::Plus);
    if (&vm - &vp).abs().max() > 1e-14 {
        return Err(Error::Unsupported("fourth-order systems need V(-inf) = V(+inf)".into()));
    }
    let kappa = min_eig(&vm);
    Ok(FourthHamiltonian { system, n, v_a: vm, kappa })
}

fn fourth_b(v: &RMat, lambda: f64) -> CMat {
    let n = v.nrows();
    let mut b = CMat::zeros(4 * n, 4 * n);
    let id = CMat::identity(n, n);
    b.view_mut((0, 0), (n, n)).copy_from(&to_complex(&(RMat::identity(n, n) * lambda - v)));
    b.view_mut((n, n), (n, n)).copy_from(&id);
    b.view_mut((2 * n, 3 * n), (n, n)).copy_from(&(-&id));
    b.view_mut((3 * n, 2 * n), (n, n)).copy_from(&(-&id));
    b
}

impl FourthHamiltonian {
    /// Sampled sup ||V(x)|| over the grid and the endstate.
    pub fn sup_norm(&self, half_width: f64) -> f64 {
        let mut s = spectral_norm_real(&self.v_a);
        for x in sample_grid(half_width, 4001) {
            s = s.max(spectral_norm_real(&self.system.v.eval(x)));
        }
        s
    }
}

impl HamiltonianSystem for FourthHamiltonian {
    fn half_dim(&self) -> usize {
        2 * self.n
    }

    fn b(&self, x: f64, lambda: f64) -> CMat {
        fourth_b(&self.system.v.eval(x), lambda)
    }

    fn b_lambda(&self, _x: f64, _lambda: f64) -> CMat {
        let mut b = CMat::zeros(4 * self.n, 4 * self.n);
        for k in 0..self.n {
            b[(k, k)] = c(1.0);
        }
        b
    }

    fn b_limit(&self, _side: Side, lambda: f64) -> CMat {
        fourth_b(&self.v_a, lambda)
    }

    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn decay(&self) -> Decay {
        self.system.v.decay()
    }

    fn label(&self) -> String {
        format!("fourth_order(n={})", self.n)
    }

    fn target(&self) -> Option<MonotoneTarget> {
        Some(MonotoneTarget::Fourth)
    }

    fn asymptotic_frames(&self, lambda: f64) -> Result<AsymptoticFrames> {
        self.check_admissible(lambda)?;
        asymptotics::fourth_asymptotic_frames(&to_complex(&self.v_a), lambda)
    }

    fn left_shelf_floor(&self, half_width: f64, _lambda_hi: f64, safety: f64) -> Result<f64> {
        let s = self.sup_norm(half_width);
        if !s.is_finite() {
            return Err(Error::Input("sampled V is unbounded; supply an explicit bound".into()));
        }
        Ok(-s * safety)
    }
}

// ---------------------------------------------------------------- differential-algebraic

/// -(P11 phi1')' + V11 phi1 + V12 phi2 = lambda phi1, V12^T phi1 + V22 phi2 = lambda phi2.
#[derive(Clone, Debug)]
pub struct DASystem {
    pub p11: CoefMatrix,
    pub v11: CoefMatrix,
    pub v12: CoefMatrix,
    pub v22: CoefMatrix,
}

type ReducedCache = Mutex<HashMap<(u64, u64), Arc<Vec<RMat>>>>;

/// Reduced lambda-nonlinear system with B = diag(lambda I - V(x; lambda), P11^{-1}).
#[derive(Debug)]
pub struct DaHamiltonian {
    pub system: DASystem,
    pub m: usize,
    pub k: usize,
    pub info: EssentialSpectrumInfo,
    cache: ReducedCache,
}

pub fn da_reduce(system: DASystem) -> Result<DaHamiltonian> {
    let m = system.v11.rows;
    let k = system.v22.rows;
    require_square(&system.p11, m, "P11")?;
    require_square(&system.v11, m, "V11")?;
    require_square(&system.v22, k, "V22")?;
    if system.v12.rows != m || system.v12.cols != k {
        return Err(Error::DimensionMismatch(format!("V12 is {}x{}, expected {m}x{k}", system.v12.rows, system.v12.cols)));
    }
    for (name, cm) in [("P11", &system.p11), ("V11", &system.v11), ("V12", &system.v12), ("V22", &system.v22)] {
        cm.validate(name)?;
    }
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    let mut theta_p = f64::INFINITY;
    let mut record = |v22: &RMat| {
        let nu = linalg::real_symmetric_eigen(v22).0;
        for j in 0..k {
            lo[j] = lo[j].min(nu[j]);
            hi[j] = hi[j].max(nu[j]);
        }
    };
    for x in sample_grid(SAMPLE_HALF_WIDTH, 4001) {
        record(&system.v22.eval(x));
        theta_p = theta_p.min(min_eig(&system.p11.eval(x)));
    }
    let mut full_min = f64::INFINITY;
    let mut quad = f64::INFINITY;
    for side in [Side::Minus, Side::Plus] {
        record(&system.v22.limit(side));
        theta_p = theta_p.min(min_eig(&system.p11.limit(side)));
        let (v11, v12, v22) = (system.v11.limit(side), system.v12.limit(side), system.v22.limit(side));
        let mut full = RMat::zeros(m + k, m + k);
        full.view_mut((0, 0), (m, m)).copy_from(&v11);
        full.view_mut((0, m), (m, k)).copy_from(&v12);
        full.view_mut((m, 0), (k, m)).copy_from(&v12.transpose());
        full.view_mut((m, m), (k, k)).copy_from(&v22);
        full_min = full_min.min(min_eig(&full));
        quad = quad.min(asymptotics::da_quadratic_bound(&to_complex(&v11), &to_complex(&v12), &to_complex(&v22)));
    }
    if !(theta_p > 0.0) {
        return Err(Error::Validation { assumption: "DA1".into(), detail: "P11 is not positive definite".into() });
    }
    let excluded: Vec<(f64, f64)> = (0..k).map(|j| (lo[j] - EXCLUDED_RANGE_MARGIN, hi[j] + EXCLUDED_RANGE_MARGIN)).collect();
    let lowest_range = excluded.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let kappa = full_min.min(lowest_range);
    Ok(DaHamiltonian { system, m, k, info: EssentialSpectrumInfo { kappa, excluded, quadratic_bound: Some(quad) }, cache: Mutex::new(HashMap::new()) })
}

/// V11 + V12 (lambda I - V22)^{-1} V12^T and its lambda-derivative.
pub fn reduced_potential(v11: &RMat, v12: &RMat, v22: &RMat, lambda: f64) -> Result<(RMat, RMat)> {
    let k = v22.nrows();
    let shifted = RMat::identity(k, k) * lambda - v22;
    let inv = shifted.try_inverse().ok_or_else(|| Error::Admissibility(format!("lambda = {lambda} is an eigenvalue of V22")))?;
    let vr = v11 + v12 * &inv * v12.transpose();
    let vl = -(v12 * &inv * &inv * v12.transpose());
    Ok((vr, vl))
}

impl DaHamiltonian {
    fn reduced_at(&self, x: f64, lambda: f64) -> (RMat, RMat) {
        reduced_potential(&self.system.v11.eval(x), &self.system.v12.eval(x), &self.system.v22.eval(x), lambda).expect("lambda admissible")
    }

    fn reduced_limit(&self, side: Side, lambda: f64) -> (RMat, RMat) {
        reduced_potential(&self.system.v11.limit(side), &self.system.v12.limit(side), &self.system.v22.limit(side), lambda).expect("lambda admissible")
    }

    /// Reduced potential sampled on a grid, cached by (grid id, lambda).
    pub fn reduced_on_grid(&self, grid_id: u64, xs: &[f64], lambda: f64) -> Arc<Vec<RMat>> {
        let key = (grid_id, lambda.to_bits());
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return v.clone();
        }
        let vals: Arc<Vec<RMat>> = Arc::new(xs.iter().map(|&x| self.reduced_at(x, lambda).0).collect());
        self.cache.lock().unwrap().insert(key, vals.clone());
        vals
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    fn endstates(&self, lambda: f64) -> SlEndstates {
        let id = CMat::identity(self.m, self.m);
        SlEndstates {
            p_minus: to_complex(&self.system.p11.limit(Side::Minus)),
            v_minus: to_complex(&self.reduced_limit(Side::Minus, lambda).0),
            q_minus: id.clone(),
            p_plus: to_complex(&self.system.p11.limit(Side::Plus)),
            v_plus: to_complex(&self.reduced_limit(Side::Plus, lambda).0),
            q_plus: id,
        }
    }
}

impl HamiltonianSystem for DaHamiltonian {
    fn half_dim(&self) -> usize {
        self.m
    }

    fn b(&self, x: f64, lambda: f64) -> CMat {
        let p = sym_inverse(&self.system.p11.eval(x), "P11").expect("P11 validated");
        block_diag(&(RMat::identity(self.m, self.m) * lambda - self.reduced_at(x, lambda).0), &p)
    }

    fn b_lambda(&self, x: f64, lambda: f64) -> CMat {
        block_diag(&(RMat::identity(self.m, self.m) - self.reduced_at(x, lambda).1), &RMat::zeros(self.m, self.m))
    }

    fn b_limit(&self, side: Side, lambda: f64) -> CMat {
        let p = sym_inverse(&self.system.p11.limit(side), "P11").expect("P11 validated");
        block_diag(&(RMat::identity(self.m, self.m) * lambda - self.reduced_limit(side, lambda).0), &p)
    }

    fn kappa(&self) -> f64 {
        self.info.kappa
    }

    fn decay(&self) -> Decay {
        [&self.system.p11, &self.system.v11, &self.system.v12, &self.system.v22].iter().map(|m| m.decay()).fold(Decay::None, Decay::slowest)
    }

    fn label(&self) -> String {
        format!("differential_algebraic(m={}, n={})", self.m, self.m + self.k)
    }

    fn target(&self) -> Option<MonotoneTarget> {
        Some(MonotoneTarget::Dirichlet)
    }

    /// Admissible: outside every excluded range and hyperbolic at both ends.
    fn check_admissible(&self, lambda: f64) -> Result<()> {
        if !lambda.is_finite() {
            return Err(Error::EssentialSpectrum { lambda, kappa: self.info.kappa });
        }
        self.info.check_interval(lambda, lambda).or_else(|e| match e {
            Error::EssentialSpectrum { .. } => Ok(()),
            other => Err(other),
        })?;
        for side in [Side::Minus, Side::Plus] {
            let (vr, _) = self.reduced_limit(side, lambda);
            let gap = asymptotics::generalized_min_eigenvalue(&to_complex(&(vr - RMat::identity(self.m, self.m) * lambda)), &CMat::identity(self.m, self.m))?;
            if !(gap > HYPERBOLICITY_MARGIN) {
                return Err(Error::EssentialSpectrum { lambda, kappa: self.info.kappa });
            }
        }
        Ok(())
    }

    fn asymptotic_frames(&self, lambda: f64) -> Result<AsymptoticFrames> {
        self.check_admissible(lambda)?;
        asymptotics::sl_asymptotic_frames(&self.endstates(lambda), lambda)
    }

    fn check_interval(&self, lambda1: f64, lambda2: f64) -> Result<()> {
        if !(lambda1 < lambda2) {
            return Err(Error::Admissibility(format!("need lambda1 < lambda2, got [{lambda1}, {lambda2}]")));
        }
        self.info.check_interval(lambda1, lambda2).or_else(|e| match e {
            Error::EssentialSpectrum { .. } => Ok(()),
            other => Err(other),
        })?;
        self.check_admissible(lambda1)?;
        self.check_admissible(lambda2)
    }

    /// -sup ||V(x; lambda)|| over lambda <= lambda_hi, bounded by ||V11|| + ||V12||^2 / (min nu(V22) - lambda_hi).
    fn left_shelf_floor(&self, half_width: f64, lambda_hi: f64, safety: f64) -> Result<f64> {
        let bound = |v11: &RMat, v12: &RMat, v22: &RMat| -> f64 {
            let gap = min_eig(v22) - lambda_hi;
            spectral_norm_real(v11) + spectral_norm_real(v12).powi(2) / gap
        };
        let mut cv: f64 = 0.0;
        for x in sample_grid(half_width, 4001) {
            cv = cv.max(bound(&self.system.v11.eval(x), &self.system.v12.eval(x), &self.system.v22.eval(x)));
        }
        for side in [Side::Minus, Side::Plus] {
            cv = cv.max(bound(&self.system.v11.limit(side), &self.system.v12.limit(side), &self.system.v22.limit(side)));
        }
        if !cv.is_finite() || cv < 0.0 {
            return Err(Error::Input("sampled reduced potential is unbounded; supply an explicit bound".into()));
        }
        Ok(-cv * safety)
    }
}

/// Left-shelf floor of any system with the default safety factor.
pub fn left_shelf_bound(sys: &dyn HamiltonianSystem, half_width: f64, lambda_hi: f64) -> Result<f64> {
    sys.left_shelf_floor(half_width, lambda_hi, DEFAULT_SAFETY)
}

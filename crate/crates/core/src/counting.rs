//! Eigenvalue counts: Maslov box, target exchange, monotone kernel sums and the left shelf.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{self, Direction, IntegratorOptions, TruncationPolicy};
use crate::linalg::{self, CMat};
use crate::maslov::{self, ConjugatePoint, CrossingKind, MaslovBox, TrackingOptions, XPath};
use crate::model::{HamiltonianSystem, MonotoneTarget};
use crate::symplectic::{self, LagrangianFrame};
use crate::systems::DEFAULT_SAFETY;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MaslovBox,
    KernelSum,
    Both,
}

/// Numerical settings shared by all counting pipelines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountOptions {
    pub method: Method,
    pub integrator: IntegratorOptions,
    pub tracking: TrackingOptions,
    /// Integrated coefficient tail tolerance used to choose c.
    pub tail_tol: f64,
    /// Fixed half-width; chosen automatically when absent.
    pub c: Option<f64>,
    pub grid_points: usize,
    pub max_dx: f64,
    /// Safety factor on sampled bound constants of the left shelf.
    pub floor_safety: f64,
    /// Threshold on the transversality gap at x = c flagging lambda as an eigenvalue.
    pub eigenvalue_gap_tol: f64,
    /// Lambda shift used when the closed-form exchange does not apply.
    pub exchange_shift: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            method: Method::Both,
            integrator: IntegratorOptions::default(),
            tracking: TrackingOptions::default(),
            tail_tol: evolution::DEFAULT_TAIL_TOL,
            c: None,
            grid_points: evolution::DEFAULT_GRID_POINTS,
            max_dx: evolution::DEFAULT_MAX_DX,
            floor_safety: DEFAULT_SAFETY,
            eigenvalue_gap_tol: 1e-6,
            exchange_shift: 1e-6,
        }
    }
}

impl CountOptions {
    /// The truncation policy for [lambda1, lambda2].
    pub fn policy(&self, sys: &dyn HamiltonianSystem, lambda1: f64, lambda2: f64) -> Result<TruncationPolicy> {
        let mut p = match self.c {
            Some(c) => {
                if !(c > 0.0) {
                    return Err(Error::Input(format!("c must be positive, got {c}")));
                }
                evolution::check_b2_gap(sys, lambda1, lambda2, evolution::DEFAULT_B2_GAP_MIN)?;
                TruncationPolicy::with_c(c)
            }
            None => evolution::choose_truncation(sys, lambda1, lambda2, self.tail_tol)?,
        };
        p.grid_points = self.grid_points;
        p.max_dx = self.max_dx;
        Ok(p)
    }
}

/// A conjugate point tagged with where it was found.
#[derive(Clone, Debug, Serialize)]
pub struct LocatedConjugatePoint {
    pub lambda: f64,
    /// "x" for x-direction paths, "lambda" for the top shelf.
    pub along: String,
    pub target: String,
    #[serde(flatten)]
    pub point: ConjugatePoint,
}

/// Hörmander index of a target exchange at one lambda.
#[derive(Clone, Debug, Serialize)]
pub struct HormanderData {
    pub lambda: f64,
    pub target: MonotoneTarget,
    pub s: i64,
    /// The closed-form value applies (lambda is not an eigenvalue).
    pub closed_form: bool,
    /// Lambda shift used when lambda is numerically an eigenvalue.
    pub shifted_by: Option<f64>,
    pub i_plus: Option<usize>,
    pub i_minus: Option<usize>,
}

/// Whether an endpoint lambda is numerically an eigenvalue.
#[derive(Clone, Debug, Serialize)]
pub struct EndpointCheck {
    pub lambda: f64,
    pub transversality_gap: f64,
    pub is_eigenvalue: bool,
}

/// Count over [lambda1, lambda2) or (-inf, lambda2).
#[derive(Clone, Debug, Serialize)]
pub struct CountResult {
    pub query: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda1: Option<f64>,
    pub lambda2: f64,
    pub kappa: f64,
    pub method: Method,
    /// bottom, right, top, left.
    pub shelf_indices: Option<[i64; 4]>,
    /// Kernel sums at (lambda1, lambda2).
    pub kernel_sums: Option<[usize; 2]>,
    pub conjugate_points: Vec<LocatedConjugatePoint>,
    pub hormander: Vec<HormanderData>,
    pub endpoints: Vec<EndpointCheck>,
    pub left_shelf_floor: Option<f64>,
    pub floor_check_lambda: Option<f64>,
    pub policy: TruncationPolicy,
}

fn target_frame(sys: &dyn HamiltonianSystem) -> Result<(MonotoneTarget, LagrangianFrame)> {
    let t = sys.target().ok_or_else(|| Error::Unsupported(format!("{}: no monotone target", sys.label())))?;
    Ok((t, t.frame(sys.half_dim())))
}

fn target_name(t: MonotoneTarget) -> &'static str {
    match t {
        MonotoneTarget::Dirichlet => "dirichlet",
        MonotoneTarget::Fourth => "fourth_order_t",
    }
}

fn locate(points: &[ConjugatePoint], lambda: f64, along: &str, target: &str) -> Vec<LocatedConjugatePoint> {
    points.iter().map(|p| LocatedConjugatePoint { lambda, along: along.into(), target: target.into(), point: p.clone() }).collect()
}

/// Transversality gap of X(c; lambda) and Xtilde_+(lambda); small values mean lambda is an eigenvalue.
pub fn endpoint_check(sys: &dyn HamiltonianSystem, lambda: f64, policy: &TruncationPolicy, opts: &CountOptions) -> Result<EndpointCheck> {
    let end = evolution::evolve_to_end(sys, lambda, policy, &opts.integrator)?;
    let gap = symplectic::transversality_gap(&end, &sys.asymptotic_frames(lambda)?.xt_plus);
    Ok(EndpointCheck { lambda, transversality_gap: gap, is_eigenvalue: gap < opts.eigenvalue_gap_tol })
}

/// Kernel sum against the monotone target at one lambda.
#[derive(Clone, Debug, Serialize)]
pub struct KernelSum {
    pub lambda: f64,
    pub count: usize,
    pub conjugate_points: Vec<ConjugatePoint>,
    /// Maslov index of the x-path against the target.
    pub index: i64,
    /// (x, sigma_min of X* J X_target) on the evolution grid.
    #[serde(skip)]
    pub sigma_scan: Vec<(f64, f64)>,
    /// Local minima of the scan below the dip threshold.
    pub scan_dips: usize,
}

/// Sum over x of dim(l(x; lambda) ∩ target), with arrivals at x = c excluded; every crossing must be negative.
pub fn kernel_sum_count(sys: &dyn HamiltonianSystem, lambda: f64, policy: &TruncationPolicy, opts: &CountOptions) -> Result<KernelSum> {
    let (_, target) = target_frame(sys)?;
    let path = evolution::evolve_frame(sys, lambda, policy, Direction::FromLeft, &opts.integrator)?;
    let xp = XPath { sys, path: &path, target: target.clone() };
    let res = maslov::maslov_along(&xp, &path.grid, &opts.tracking)?;
    let mut count = 0usize;
    for cp in &res.conjugate_points {
        if cp.directions.iter().any(|&d| d > 0) && cp.kind != CrossingKind::Arrival {
            return Err(Error::Monotonicity(format!("positive crossing at x = {} (lambda = {lambda})", cp.param)));
        }
        if cp.kind != CrossingKind::Arrival {
            count += cp.multiplicity;
        }
    }
    if count as i64 != -res.index {
        return Err(Error::Consistency(format!("kernel sum {count} differs from -Maslov index {}", -res.index)));
    }
    let sigma_scan: Vec<(f64, f64)> = path.grid.iter().zip(&path.frames).map(|(&x, f)| (x, linalg::sigma_min(&symplectic::j_product(f, &target)))).collect();
    let dip = 10.0 * opts.tracking.kernel_tol.sqrt();
    let scan_dips = (1..sigma_scan.len().saturating_sub(1)).filter(|&k| sigma_scan[k].1 < dip && sigma_scan[k].1 <= sigma_scan[k - 1].1 && sigma_scan[k].1 <= sigma_scan[k + 1].1).count();
    Ok(KernelSum { lambda, count, conjugate_points: res.conjugate_points, index: res.index, sigma_scan, scan_dips })
}

fn inertia_neg_zero(m: &CMat) -> usize {
    let h = linalg::hermitian_part(m);
    let tol = 1e-10 * linalg::max_abs(&h).max(1.0);
    let (neg, zero, _) = linalg::inertia(&h, tol);
    neg + zero
}

/// n_- + n_0 of (Yt Xt^{-1} - Y X^{-1}).
fn interpolation_index(tilde: &LagrangianFrame, l: &LagrangianFrame) -> Result<usize> {
    let a = linalg::solve_right(&tilde.y, &tilde.x, 1e12)?;
    let b = linalg::solve_right(&l.y, &l.x, 1e12)?;
    Ok(inertia_neg_zero(&(a - b)))
}

/// Hörmander index for exchanging Xtilde_+(lambda) with the monotone target.
pub fn hormander_exchange(sys: &dyn HamiltonianSystem, lambda: f64, policy: &TruncationPolicy, opts: &CountOptions) -> Result<HormanderData> {
    let (target, _) = target_frame(sys)?;
    let check = endpoint_check(sys, lambda, policy, opts)?;
    let (lam, shifted_by) = if check.is_eigenvalue { (lambda - opts.exchange_shift, Some(opts.exchange_shift)) } else { (lambda, None) };
    let frames = sys.asymptotic_frames(lam)?;
    match target {
        MonotoneTarget::Dirichlet => {
            let i_plus = interpolation_index(&frames.xt_plus, &frames.xt_plus_g)?;
            let i_minus = interpolation_index(&frames.xt_plus, &frames.x_minus)?;
            Ok(HormanderData { lambda, target, s: i_plus as i64 - i_minus as i64, closed_form: shifted_by.is_none(), shifted_by, i_plus: Some(i_plus), i_minus: Some(i_minus) })
        }
        MonotoneTarget::Fourth => {
            // l_+ is spanned by the growing frame at +infinity, which coincides with X_-.
            let same = symplectic::grassmannian_distance(&frames.xt_plus_g, &frames.x_minus) < 1e-10;
            if !same {
                return Err(Error::Consistency("fourth-order growing frame at +infinity differs from X_-".into()));
            }
            Ok(HormanderData { lambda, target, s: 0, closed_form: shifted_by.is_none(), shifted_by, i_plus: None, i_minus: None })
        }
    }
}

/// Maslov indices of the x-path at lambda against Xtilde_+(lambda) and against the monotone target.
#[derive(Clone, Debug, Serialize)]
pub struct ExchangeCheck {
    pub lambda: f64,
    pub against_tilde_plus: i64,
    pub against_target: i64,
    pub s: i64,
}

pub fn exchange_check(sys: &dyn HamiltonianSystem, lambda: f64, policy: &TruncationPolicy, opts: &CountOptions) -> Result<ExchangeCheck> {
    let (_, target) = target_frame(sys)?;
    let path = evolution::evolve_frame(sys, lambda, policy, Direction::FromLeft, &opts.integrator)?;
    let tilde = sys.asymptotic_frames(lambda)?.xt_plus;
    let a = maslov::maslov_along(&XPath { sys, path: &path, target: tilde }, &path.grid, &opts.tracking)?.index;
    let b = maslov::maslov_along(&XPath { sys, path: &path, target }, &path.grid, &opts.tracking)?.index;
    let s = hormander_exchange(sys, lambda, policy, opts)?.s;
    Ok(ExchangeCheck { lambda, against_tilde_plus: a, against_target: b, s })
}

/// N([lambda1, lambda2)).
pub fn count_interval(sys: &dyn HamiltonianSystem, lambda1: f64, lambda2: f64, opts: &CountOptions) -> Result<CountResult> {
    sys.check_interval(lambda1, lambda2)?;
    let policy = opts.policy(sys, lambda1, lambda2)?;
    let method = if sys.target().is_none() { Method::MaslovBox } else { opts.method };
    let mut result = CountResult {
        query: "count_interval".into(),
        n: 0,
        lambda1: Some(lambda1),
        lambda2,
        kappa: sys.kappa(),
        method,
        shelf_indices: None,
        kernel_sums: None,
        conjugate_points: Vec::new(),
        hormander: Vec::new(),
        endpoints: vec![endpoint_check(sys, lambda1, &policy, opts)?, endpoint_check(sys, lambda2, &policy, opts)?],
        left_shelf_floor: None,
        floor_check_lambda: None,
        policy,
    };
    let mut box_n = None;
    if matches!(method, Method::MaslovBox | Method::Both) {
        let bx = maslov::maslov_box(sys, lambda1, lambda2, &policy, &opts.integrator, &opts.tracking)?;
        box_n = Some(box_count(&bx)?);
        result.shelf_indices = Some(bx.indices());
        result.conjugate_points.extend(locate(&bx.right.conjugate_points, lambda2, "x", "tilde_plus"));
        result.conjugate_points.extend(locate(&bx.left.conjugate_points, lambda1, "x", "tilde_plus"));
        result.conjugate_points.extend(locate(&bx.top.conjugate_points, f64::NAN, "lambda", "tilde_plus"));
    }
    let mut ks_n = None;
    if matches!(method, Method::KernelSum | Method::Both) {
        let (t, _) = target_frame(sys)?;
        let mut sums = [0usize; 2];
        for (k, &lam) in [lambda1, lambda2].iter().enumerate() {
            let h = hormander_exchange(sys, lam, &policy, opts)?;
            if h.s != 0 {
                return Err(Error::Consistency(format!("target exchange index s = {} at lambda = {lam}", h.s)));
            }
            result.hormander.push(h);
            let ks = kernel_sum_count(sys, lam, &policy, opts)?;
            result.conjugate_points.extend(locate(&ks.conjugate_points, lam, "x", target_name(t)));
            sums[k] = ks.count;
        }
        if sums[1] < sums[0] {
            return Err(Error::Monotonicity(format!("kernel sums decrease in lambda: {} then {}", sums[0], sums[1])));
        }
        result.kernel_sums = Some(sums);
        ks_n = Some(sums[1] - sums[0]);
    }
    result.n = match (box_n, ks_n) {
        (Some(a), Some(b)) if a != b => return Err(Error::Consistency(format!("Maslov box gives {a} but kernel sums give {b}"))),
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => unreachable!(),
    };
    Ok(result)
}

fn box_count(bx: &MaslovBox) -> Result<usize> {
    let n = -bx.right.index - bx.left.index;
    if n != bx.top.index {
        return Err(Error::Consistency(format!("top shelf {} differs from -right - left = {n}", bx.top.index)));
    }
    usize::try_from(n).map_err(|_| Error::Consistency(format!("negative count {n} from shelves {:?}", bx.indices())))
}

/// The lambda used to confirm the left shelf is empty.
pub fn floor_check_lambda(floor: f64, lambda2: f64) -> f64 {
    let l = if floor < 0.0 { 1.1 * floor } else { floor - 1e-3 };
    l.min(lambda2 - 1e-3)
}

/// N((-inf, lambda2)) from the kernel sum at lambda2, after confirming the shelf at the floor is empty.
pub fn count_below(sys: &dyn HamiltonianSystem, lambda2: f64, opts: &CountOptions) -> Result<CountResult> {
    if !sys.below_essential_spectrum(lambda2) {
        return Err(Error::Unsupported(format!("lambda2 = {lambda2} is not below the essential spectrum (kappa = {})", sys.kappa())));
    }
    let (t, _) = target_frame(sys)?;
    let half = evolution::C_CAP.min(opts.c.unwrap_or(0.0).max(crate::systems::SAMPLE_HALF_WIDTH));
    let floor = sys.left_shelf_floor(half, lambda2, opts.floor_safety)?;
    let lam_check = floor_check_lambda(floor, lambda2);
    let policy = opts.policy(sys, lam_check, lambda2)?;
    let shelf = kernel_sum_count(sys, lam_check, &policy, opts)?;
    if shelf.count != 0 {
        return Err(Error::Consistency(format!("{} conjugate points below the left-shelf floor {floor} (at lambda = {lam_check})", shelf.count)));
    }
    let h = hormander_exchange(sys, lambda2, &policy, opts)?;
    if h.s != 0 {
        return Err(Error::Consistency(format!("target exchange index s = {} at lambda = {lambda2}", h.s)));
    }
    let ks = kernel_sum_count(sys, lambda2, &policy, opts)?;
    let mut result = CountResult {
        query: "count_below".into(),
        n: ks.count,
        lambda1: None,
        lambda2,
        kappa: sys.kappa(),
        method: Method::KernelSum,
        shelf_indices: None,
        kernel_sums: Some([0, ks.count]),
        conjugate_points: locate(&ks.conjugate_points, lambda2, "x", target_name(t)),
        hormander: vec![h],
        endpoints: vec![endpoint_check(sys, lambda2, &policy, opts)?],
        left_shelf_floor: Some(floor),
        floor_check_lambda: Some(lam_check),
        policy,
    };
    if opts.method == Method::Both {
        let bx = maslov::maslov_box(sys, lam_check, lambda2, &policy, &opts.integrator, &opts.tracking)?;
        let n = box_count(&bx)?;
        if n != ks.count {
            return Err(Error::Consistency(format!("kernel sum gives {} but the Maslov box over [{lam_check}, {lambda2}) gives {n}", ks.count)));
        }
        result.shelf_indices = Some(bx.indices());
        result.method = Method::Both;
    }
    Ok(result)
}

/// Conjugate points of the x-path at lambda against the monotone target (or Xtilde_+ without one).
pub fn conjugate_points(sys: &dyn HamiltonianSystem, lambda: f64, opts: &CountOptions) -> Result<(Vec<LocatedConjugatePoint>, maslov::RotationTrace, TruncationPolicy)> {
    sys.check_admissible(lambda)?;
    let policy = opts.policy(sys, lambda, lambda)?;
    let path = evolution::evolve_frame(sys, lambda, &policy, Direction::FromLeft, &opts.integrator)?;
    let (target, name) = match sys.target() {
        Some(t) => (t.frame(sys.half_dim()), target_name(t)),
        None => (sys.asymptotic_frames(lambda)?.xt_plus, "tilde_plus"),
    };
    let mut topts = opts.tracking;
    topts.crossing_forms = true;
    let res = maslov::maslov_along(&XPath { sys, path: &path, target }, &path.grid, &topts)?;
    Ok((locate(&res.conjugate_points, lambda, "x", name), res.trace, policy))
}

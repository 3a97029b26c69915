//! Spectral flow of W-tilde through -1: eigenvalue tracking, signed crossings with
//! endpoint conventions, and the four-shelf Maslov box.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{self, fmt17, Direction, EvolvedFramePath, IntegratorOptions, TruncationPolicy};
use crate::linalg;
use crate::model::HamiltonianSystem;
use crate::symplectic::{self, LagrangianFrame};

/// Knobs for eigenvalue tracking and crossing detection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingOptions {
    /// Largest accepted per-step movement of any matched eigenvalue (radians).
    pub max_step_angle: f64,
    pub max_depth: usize,
    /// Angular distance from pi treated as lying on -1.
    pub eps_eig: f64,
    /// Parameter tolerance of crossing localization.
    pub localize_tol: f64,
    /// Evaluate crossing forms at interior crossings.
    pub crossing_forms: bool,
    /// Kernel tolerance for multiplicity checks.
    pub kernel_tol: f64,
}

impl Default for TrackingOptions {
    fn default() -> Self {
        TrackingOptions { max_step_angle: 0.5, max_depth: 30, eps_eig: 1e-8, localize_tol: 1e-10, crossing_forms: false, kernel_tol: 1e-6 }
    }
}

/// A path of frame pairs (evolving plane, target) parametrized by a real t.
pub trait FramePairPath: Sync {
    fn pair(&self, t: f64) -> Result<(LagrangianFrame, LagrangianFrame)>;

    /// Crossing form of the pair at t (restricted to the intersection), if available.
    fn crossing_form(&self, t: f64, scale: f64, tol: f64) -> Result<linalg::CMat> {
        let h = 1e-6 * scale.max(1e-3);
        let (f1, d1) = evolution::fd_derivative(&|s| self.pair(s).map(|p| p.0), t, h)?;
        let (f2, d2) = evolution::fd_derivative(&|s| self.pair(s).map(|p| p.1), t, h)?;
        Ok(evolution::pair_crossing_form(&f1, &evolution::frame_form(&f1, &d1), &f2, &evolution::frame_form(&f2, &d2), tol))
    }
}

/// Path given by a closure.
pub struct ClosurePath<F: Fn(f64) -> Result<(LagrangianFrame, LagrangianFrame)> + Sync>(pub F);

impl<F: Fn(f64) -> Result<(LagrangianFrame, LagrangianFrame)> + Sync> FramePairPath for ClosurePath<F> {
    fn pair(&self, t: f64) -> Result<(LagrangianFrame, LagrangianFrame)> {
        (self.0)(t)
    }
}

/// x-path of an evolved frame against a fixed target.
pub struct XPath<'a> {
    pub sys: &'a dyn HamiltonianSystem,
    pub path: &'a EvolvedFramePath,
    pub target: LagrangianFrame,
}

impl FramePairPath for XPath<'_> {
    fn pair(&self, t: f64) -> Result<(LagrangianFrame, LagrangianFrame)> {
        Ok((self.path.frame_at(self.sys, t)?, self.target.clone()))
    }

    fn crossing_form(&self, t: f64, _scale: f64, tol: f64) -> Result<linalg::CMat> {
        let f = self.path.frame_at(self.sys, t)?.orthonormalized();
        let form = evolution::x_crossing_form(self.sys, self.path.lambda, t, &f);
        let zero = linalg::CMat::zeros(f.n(), f.n());
        Ok(evolution::pair_crossing_form(&f, &form, &self.target, &zero, tol))
    }
}

/// Angles of W-tilde eigenvalues tracked continuously along a path.
#[derive(Clone, Debug, Serialize)]
pub struct RotationTrace {
    pub params: Vec<f64>,
    /// Unwrapped angle of each label at each parameter.
    pub angles: Vec<Vec<f64>>,
    /// Permutation mapping labels to the eigenvalue order returned at each parameter.
    pub matching: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    Interior,
    Arrival,
    Departure,
}

/// An intersection event of the two planes along the path.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugatePoint {
    pub param: f64,
    pub multiplicity: usize,
    /// Rotation sense of each eigenvalue at -1 (+1 counterclockwise, -1 clockwise, 0 resting).
    pub directions: Vec<i8>,
    /// Contribution to the index under the endpoint conventions.
    pub contribution: i64,
    pub kind: CrossingKind,
    /// Some eigenvalue stayed on -1 for two or more consecutive samples.
    pub resting: bool,
    /// dim ker(X1* J X2) at the located parameter.
    pub kernel_dimension: Option<usize>,
    /// Signature of the crossing form, when evaluated.
    pub form_signature: Option<i64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaslovResult {
    pub index: i64,
    pub conjugate_points: Vec<ConjugatePoint>,
    #[serde(skip)]
    pub trace: RotationTrace,
}

fn raw_angles(pair: &(LagrangianFrame, LagrangianFrame), eps: f64) -> Result<Vec<f64>> {
    let w = symplectic::build_wtilde(&pair.0, &pair.1)?;
    Ok(w.angles().into_iter().map(|a| if PI - a.abs() <= eps { PI } else { a }).collect())
}

/// Match `raw` to the labelled unwrapped angles `prev`; returns (unwrapped, permutation).
fn match_angles(prev: &[f64], raw: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = prev.len();
    let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| linalg::wrap_angle(raw[j] - prev[i]).abs()).collect()).collect();
    let perm = linalg::hungarian(&cost);
    let unwrapped = (0..n).map(|i| prev[i] + linalg::wrap_angle(raw[perm[i]] - prev[i])).collect();
    (unwrapped, perm)
}

/// Winding floor of an unwrapped angle: floor((theta - pi) / 2 pi), snapped when within eps of a multiple.
fn winding(theta: f64, eps: f64) -> i64 {
    let phi = (theta - PI) / (2.0 * PI);
    let r = phi.round();
    if (phi - r).abs() <= eps / (2.0 * PI) {
        r as i64
    } else {
        phi.floor() as i64
    }
}

fn on_minus_one(theta: f64, eps: f64) -> bool {
    let phi = (theta - PI) / (2.0 * PI);
    (phi - phi.round()).abs() <= eps / (2.0 * PI)
}

/// Track W-tilde eigenvalues along the path through `params` (monotone, either direction).
pub fn track_spectral_flow(path: &dyn FramePairPath, params: &[f64], opts: &TrackingOptions) -> Result<RotationTrace> {
    if params.len() < 2 {
        return Err(Error::Input("a path needs at least two parameters".into()));
    }
    let raws: Vec<Vec<f64>> = params.par_iter().map(|&t| path.pair(t).and_then(|p| raw_angles(&p, opts.eps_eig))).collect::<Result<_>>()?;
    let n = raws[0].len();
    let mut trace = RotationTrace { params: vec![params[0]], angles: vec![raws[0].clone()], matching: vec![(0..n).collect()] };
    for k in 1..params.len() {
        refine_segment(path, params[k - 1], params[k], raws[k].clone(), 0, opts, &mut trace)?;
    }
    Ok(trace)
}

fn refine_segment(path: &dyn FramePairPath, ta: f64, tb: f64, raw_b: Vec<f64>, depth: usize, opts: &TrackingOptions, trace: &mut RotationTrace) -> Result<()> {
    let prev = trace.angles.last().unwrap().clone();
    let (unwrapped, perm) = match_angles(&prev, &raw_b);
    let step = prev.iter().zip(&unwrapped).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max);
    if step <= opts.max_step_angle {
        trace.params.push(tb);
        trace.angles.push(unwrapped);
        trace.matching.push(perm);
        return Ok(());
    }
    if depth >= opts.max_depth {
        return Err(Error::Tracking(format!("refinement depth {} exhausted on segment [{ta}, {tb}] (step {step:.3} rad)", opts.max_depth)));
    }
    let mid = 0.5 * (ta + tb);
    let raw_mid = raw_angles(&path.pair(mid)?, opts.eps_eig)?;
    refine_segment(path, ta, mid, raw_mid, depth + 1, opts, trace)?;
    refine_segment(path, mid, tb, raw_b, depth + 1, opts, trace)
}

/// Bisect [ta, tb] for the parameter where label `k` (angle `theta_a` at ta) changes winding.
fn localize(path: &dyn FramePairPath, mut ta: f64, mut tb: f64, start: &[f64], k: usize, opts: &TrackingOptions) -> Result<f64> {
    let mut angles_a = start.to_vec();
    let fa = winding(angles_a[k], opts.eps_eig);
    let mut iter = 0;
    while (tb - ta).abs() > opts.localize_tol * (1.0 + ta.abs()) && iter < 80 {
        iter += 1;
        let mid = 0.5 * (ta + tb);
        let raw = raw_angles(&path.pair(mid)?, opts.eps_eig)?;
        let (un, _) = match_angles(&angles_a, &raw);
        if on_minus_one(un[k], opts.eps_eig) {
            return Ok(mid);
        }
        if winding(un[k], opts.eps_eig) == fa {
            ta = mid;
            angles_a = un;
        } else {
            tb = mid;
        }
    }
    Ok(0.5 * (ta + tb))
}

struct Event {
    param: f64,
    direction: i8,
    contribution: i64,
    resting: bool,
}

/// Maslov index of a trace with the arrival/departure conventions and located crossings.
pub fn maslov_index(path: &dyn FramePairPath, trace: &RotationTrace, opts: &TrackingOptions) -> Result<MaslovResult> {
    let m = trace.params.len();
    let n = trace.angles[0].len();
    let t0 = trace.params[0];
    let t1 = trace.params[m - 1];
    let eps = opts.eps_eig;
    let mut index = 0i64;
    let mut events: Vec<Event> = Vec::new();
    for k in 0..n {
        let th: Vec<f64> = trace.angles.iter().map(|a| a[k]).collect();
        let w: Vec<i64> = th.iter().map(|&t| winding(t, eps)).collect();
        let at: Vec<bool> = th.iter().map(|&t| on_minus_one(t, eps)).collect();
        index += w[m - 1] - w[0];
        for i in 0..m - 1 {
            let dw = w[i + 1] - w[i];
            if dw == 0 {
                continue;
            }
            let resting = (at[i] && i > 0 && at[i - 1]) || (at[i + 1] && i + 2 < m && at[i + 2]);
            let param = if at[i + 1] {
                if i + 2 < m && !at[i] && !at[i + 2] && (th[i] - th[i + 1]).abs() < 2.0 * eps && (th[i + 2] - th[i + 1]).abs() < 2.0 * eps {
                    return Err(Error::DegenerateCrossing { param: trace.params[i + 1] });
                }
                trace.params[i + 1]
            } else if at[i] {
                trace.params[i]
            } else {
                localize(path, trace.params[i], trace.params[i + 1], &trace.angles[i], k, opts)?
            };
            let direction = if dw > 0 { 1 } else { -1 };
            for _ in 0..dw.abs() {
                events.push(Event { param, direction, contribution: dw.signum(), resting });
            }
        }
        // endpoint touches that do not change the index
        if at[0] && w[1] == w[0] {
            let dir = rotation_sense(th[0], th[1], eps);
            events.push(Event { param: t0, direction: dir, contribution: 0, resting: at[1] });
        }
        if at[m - 1] && w[m - 1] == w[m - 2] {
            let dir = rotation_sense(th[m - 2], th[m - 1], eps);
            events.push(Event { param: t1, direction: dir, contribution: 0, resting: at[m - 2] });
        }
    }
    events.sort_by(|a, b| (a.param - t0).abs().partial_cmp(&(b.param - t0).abs()).unwrap());
    let mut points: Vec<ConjugatePoint> = Vec::new();
    let scale = (t1 - t0).abs().max(1.0);
    for e in events {
        let kind = if e.param == t0 {
            CrossingKind::Departure
        } else if e.param == t1 {
            CrossingKind::Arrival
        } else {
            CrossingKind::Interior
        };
        if let Some(last) = points.last_mut() {
            if (last.param - e.param).abs() <= 1e-8 * scale && last.kind == kind {
                last.multiplicity += 1;
                last.directions.push(e.direction);
                last.contribution += e.contribution;
                last.resting |= e.resting;
                continue;
            }
        }
        points.push(ConjugatePoint { param: e.param, multiplicity: 1, directions: vec![e.direction], contribution: e.contribution, kind, resting: e.resting, kernel_dimension: None, form_signature: None });
    }
    for p in points.iter_mut() {
        let pair = path.pair(p.param)?;
        p.kernel_dimension = Some(symplectic::intersection_dimension(&pair.0, &pair.1, opts.kernel_tol)?);
        if opts.crossing_forms && p.kind == CrossingKind::Interior {
            let mut form = path.crossing_form(p.param, scale, opts.kernel_tol)?;
            if t1 < t0 {
                // forms are taken along increasing t; the path runs the other way
                form = -form;
            }
            let tol = 1e-8 * linalg::max_abs(&form).max(1e-300);
            p.form_signature = Some(evolution::signature(&form, tol));
        }
    }
    Ok(MaslovResult { index, conjugate_points: points, trace: trace.clone() })
}

fn rotation_sense(a: f64, b: f64, eps: f64) -> i8 {
    if (b - a).abs() <= eps {
        0
    } else if b > a {
        1
    } else {
        -1
    }
}

/// Track and count in one call.
pub fn maslov_along(path: &dyn FramePairPath, params: &[f64], opts: &TrackingOptions) -> Result<MaslovResult> {
    let trace = track_spectral_flow(path, params, opts)?;
    maslov_index(path, &trace, opts)
}

impl RotationTrace {
    /// CSV rows: param, angle_1, ..., angle_n.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.angles.first().map(|a| a.len()).unwrap_or(0);
        let mut header = vec!["param".to_string()];
        header.extend((1..=n).map(|k| format!("angle_{k}")));
        w.write_record(&header).map_err(evolution::io_err)?;
        for (t, a) in self.params.iter().zip(&self.angles) {
            let mut row = vec![fmt17(*t)];
            row.extend(a.iter().map(|&v| fmt17(v)));
            w.write_record(&row).map_err(evolution::io_err)?;
        }
        w.flush().map_err(|e| Error::Input(e.to_string()))
    }
}

// ---------------------------------------------------------------- Maslov box

/// Default number of initial lambda samples on shelves in the lambda direction.
pub const LAMBDA_SHELF_POINTS: usize = 17;

fn lambda_params(from: f64, to: f64, k: usize) -> Vec<f64> {
    (0..k).map(|j| from + (to - from) * j as f64 / (k - 1) as f64).collect()
}

/// The four shelf indices of the box [-c, c] x [lambda1, lambda2].
#[derive(Clone, Debug, Serialize)]
pub struct MaslovBox {
    pub lambda1: f64,
    pub lambda2: f64,
    pub c: f64,
    pub bottom: MaslovResult,
    pub right: MaslovResult,
    pub top: MaslovResult,
    pub left: MaslovResult,
}

impl MaslovBox {
    pub fn indices(&self) -> [i64; 4] {
        [self.bottom.index, self.right.index, self.top.index, self.left.index]
    }

    pub fn sum(&self) -> i64 {
        self.indices().iter().sum()
    }
}

/// Maslov index of the evolving plane against Xtilde_+(lambda) over [-c, c] at fixed lambda.
pub fn x_shelf(sys: &dyn HamiltonianSystem, lambda: f64, policy: &TruncationPolicy, iopts: &IntegratorOptions, topts: &TrackingOptions, reverse: bool) -> Result<(MaslovResult, EvolvedFramePath)> {
    let path = evolution::evolve_frame(sys, lambda, policy, Direction::FromLeft, iopts)?;
    let target = sys.asymptotic_frames(lambda)?.xt_plus;
    let xp = XPath { sys, path: &path, target };
    let mut params = path.grid.clone();
    if reverse {
        params.reverse();
    }
    let res = maslov_along(&xp, &params, topts)?;
    Ok((res, path))
}

/// Matching point of the top shelf.
pub const TOP_MATCHING_POINT: f64 = 0.0;

/// Left-lying and right-lying frames at the matching point, as a path in lambda.
/// Their intersections and crossing signs agree with those of X(c; lambda) and Xtilde_+(lambda),
/// since both pairs are related by the same symplectic propagator.
pub fn top_path<'a>(sys: &'a dyn HamiltonianSystem, policy: &'a TruncationPolicy, iopts: &'a IntegratorOptions) -> impl FramePairPath + 'a {
    ClosurePath(move |lambda: f64| {
        let left = evolution::evolve_to(sys, lambda, policy, Direction::FromLeft, TOP_MATCHING_POINT, iopts)?;
        let right = evolution::evolve_to(sys, lambda, policy, Direction::FromRight, TOP_MATCHING_POINT, iopts)?;
        Ok((left, right))
    })
}

/// X_-(lambda) paired with Xtilde_+(lambda), as a path in lambda.
pub fn bottom_path(sys: &dyn HamiltonianSystem) -> impl FramePairPath + '_ {
    ClosurePath(move |lambda: f64| {
        let f = sys.asymptotic_frames(lambda)?;
        Ok((f.x_minus.orthonormalized(), f.xt_plus))
    })
}

/// Bottom, right, top and left shelves; checks that the bottom vanishes and the sum is zero.
pub fn maslov_box(sys: &dyn HamiltonianSystem, lambda1: f64, lambda2: f64, policy: &TruncationPolicy, iopts: &IntegratorOptions, topts: &TrackingOptions) -> Result<MaslovBox> {
    if !(lambda1 < lambda2) {
        return Err(Error::Admissibility(format!("need lambda1 < lambda2, got [{lambda1}, {lambda2}]")));
    }
    sys.check_admissible(lambda1)?;
    sys.check_admissible(lambda2)?;
    let bottom = maslov_along(&bottom_path(sys), &lambda_params(lambda1, lambda2, LAMBDA_SHELF_POINTS), topts)?;
    let (right, _) = x_shelf(sys, lambda2, policy, iopts, topts, false)?;
    let top = maslov_along(&top_path(sys, policy, iopts), &lambda_params(lambda2, lambda1, LAMBDA_SHELF_POINTS), topts)?;
    let (left, _) = x_shelf(sys, lambda1, policy, iopts, topts, true)?;
    let bx = MaslovBox { lambda1, lambda2, c: policy.c, bottom, right, top, left };
    if bx.bottom.index != 0 {
        return Err(Error::Truncation(format!("bottom shelf index {} is nonzero; increase c", bx.bottom.index)));
    }
    if bx.sum() != 0 {
        return Err(Error::Consistency(format!("shelf indices {:?} do not sum to zero", bx.indices())));
    }
    Ok(bx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Profile;
    use crate::systems::*;

    fn rotating(t: f64) -> Result<(LagrangianFrame, LagrangianFrame)> {
        Ok((LagrangianFrame::from_real(&[t.cos()], &[t.sin()], 1)?, LagrangianFrame::dirichlet(1)))
    }

    #[test]
    fn winding_conventions() {
        let e = 1e-8;
        assert_eq!(winding(PI, e), 0);
        assert_eq!(winding(PI - 0.1, e), -1);
        assert_eq!(winding(PI + 0.1, e), 0);
        assert_eq!(winding(3.0 * PI + 1e-12, e), 1);
    }

    #[test]
    fn constant_path_has_constant_angles() {
        let p = ClosurePath(|_t: f64| rotating(0.3));
        let tr = track_spectral_flow(&p, &[0.0, 0.5, 1.0], &TrackingOptions::default()).unwrap();
        assert!(tr.angles.iter().all(|a| (a[0] - tr.angles[0][0]).abs() < 1e-15));
    }

    #[test]
    fn rotating_frame_winds_once() {
        let p = ClosurePath(rotating);
        let opts = TrackingOptions { crossing_forms: true, ..Default::default() };
        let params: Vec<f64> = (0..9).map(|k| PI * k as f64 / 8.0).collect();
        let tr = track_spectral_flow(&p, &params, &opts).unwrap();
        let total = tr.angles.last().unwrap()[0] - tr.angles[0][0];
        assert!((total - 2.0 * PI).abs() < 1e-12);
        assert!(tr.angles.windows(2).all(|w| w[1][0] > w[0][0]));
        let r = maslov_index(&p, &tr, &opts).unwrap();
        assert_eq!(r.index, 1);
        assert_eq!(r.conjugate_points.len(), 1);
        let cp = &r.conjugate_points[0];
        assert!((cp.param - PI / 2.0).abs() < 1e-9);
        assert_eq!(cp.kind, CrossingKind::Interior);
        assert_eq!(cp.kernel_dimension, Some(1));
        assert_eq!(cp.form_signature, Some(1));
    }

    #[test]
    fn reversed_path_flips_the_form() {
        let p = ClosurePath(rotating);
        let opts = TrackingOptions { crossing_forms: true, ..Default::default() };
        let params: Vec<f64> = (0..9).map(|k| PI * (8 - k) as f64 / 8.0).collect();
        let r = maslov_along(&p, &params, &opts).unwrap();
        assert_eq!(r.index, -1);
        assert_eq!(r.conjugate_points[0].form_signature, Some(-1));
    }

    #[test]
    fn endpoint_conventions() {
        let opts = TrackingOptions::default();
        // departure clockwise from -1
        let p = ClosurePath(|t: f64| rotating(PI / 2.0 - t));
        assert_eq!(maslov_along(&p, &[0.0, 0.3], &opts).unwrap().index, -1);
        // departure counterclockwise
        let p = ClosurePath(|t: f64| rotating(PI / 2.0 + t));
        let r = maslov_along(&p, &[0.0, 0.3], &opts).unwrap();
        assert_eq!(r.index, 0);
        assert_eq!(r.conjugate_points[0].kind, CrossingKind::Departure);
        // arrival counterclockwise
        let p = ClosurePath(|t: f64| rotating(PI / 2.0 - 0.3 + t));
        assert_eq!(maslov_along(&p, &[0.0, 0.3], &opts).unwrap().index, 1);
        // arrival clockwise
        let p = ClosurePath(|t: f64| rotating(PI / 2.0 + 0.3 - t));
        let r = maslov_along(&p, &[0.0, 0.3], &opts).unwrap();
        assert_eq!(r.index, 0);
        assert_eq!(r.conjugate_points[0].kind, CrossingKind::Arrival);
        // clockwise interior pass
        let p = ClosurePath(|t: f64| rotating(2.0 - t));
        assert_eq!(maslov_along(&p, &[0.0, 1.0], &opts).unwrap().index, -1);
    }

    #[test]
    fn resting_eigenvalue_is_flagged() {
        let p = ClosurePath(|t: f64| rotating(if t < 0.5 { PI / 2.0 } else { PI / 2.0 - (t - 0.5) }));
        let r = maslov_along(&p, &[0.0, 0.25, 0.5, 0.75, 1.0], &TrackingOptions::default()).unwrap();
        assert_eq!(r.index, -1);
        assert!(r.conjugate_points.iter().any(|c| c.resting));
    }

    #[test]
    fn path_additivity() {
        let p = ClosurePath(|t: f64| rotating(3.0 * t));
        let opts = TrackingOptions::default();
        let grid = |a: f64, b: f64| (0..=40).map(|k| a + (b - a) * k as f64 / 40.0).collect::<Vec<_>>();
        let whole = maslov_along(&p, &grid(0.0, 2.0), &opts).unwrap().index;
        let a = maslov_along(&p, &grid(0.0, 0.7), &opts).unwrap().index;
        let b = maslov_along(&p, &grid(0.7, 2.0), &opts).unwrap().index;
        assert_eq!(whole, a + b);
        assert_eq!(whole, 2);
    }

    #[test]
    fn box_for_free_and_sech2() {
        let iopts = IntegratorOptions::default();
        let topts = TrackingOptions::default();
        let free = sl_to_hamiltonian(SturmLiouvilleSystem::scalar_schrodinger(Profile::constant(0.0))).unwrap();
        let b = maslov_box(&free, -2.0, -1.0, &TruncationPolicy::with_c(4.0), &iopts, &topts).unwrap();
        assert_eq!(b.indices(), [0, 0, 0, 0]);
        let well = sl_to_hamiltonian(SturmLiouvilleSystem::scalar_schrodinger(Profile::sech2(-2.0))).unwrap();
        let b = maslov_box(&well, -2.0, -0.5, &TruncationPolicy::with_c(11.0), &iopts, &topts).unwrap();
        assert_eq!(b.sum(), 0);
        assert_eq!(b.top.index, 1);
        assert_eq!(-b.right.index - b.left.index, 1);
    }
}

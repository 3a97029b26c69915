//! Frame evolution across the truncated line [-c, c] with QR growth compensation,
//! truncation selection and crossing forms.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{HamiltonianSystem, Side};
use crate::symplectic::{self, LagrangianFrame};

/// Options of the embedded Runge-Kutta integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Largest Grassmannian distance allowed between consecutive accepted frames.
    pub continuity_cap: f64,
    /// Lagrangian tolerance; steps whose residual exceeds ten times this are rejected.
    pub lagrangian_tol: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { rtol: 1e-10, atol: 1e-12, initial_step: 1e-2, min_step: 1e-12, max_steps: 2_000_000, continuity_cap: 0.2, lagrangian_tol: 1e-8 }
    }
}

/// Truncation of the real line to [-c, c] and the output grid on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub c: f64,
    pub growth_margin: f64,
    pub b2_gap_min: f64,
    /// Number of uniformly spaced compactified grid points.
    pub grid_points: usize,
    /// Extra points are inserted so that no grid step exceeds this length in x.
    pub max_dx: f64,
}

impl TruncationPolicy {
    pub fn with_c(c: f64) -> Self {
        TruncationPolicy { c, growth_margin: DEFAULT_GROWTH_MARGIN, b2_gap_min: DEFAULT_B2_GAP_MIN, grid_points: DEFAULT_GRID_POINTS, max_dx: DEFAULT_MAX_DX }
    }

    pub fn grid(&self) -> Vec<f64> {
        evolution_grid(self.c, self.grid_points, self.max_dx)
    }
}

pub const DEFAULT_GROWTH_MARGIN: f64 = 1.0;
pub const DEFAULT_B2_GAP_MIN: f64 = 1e-6;
pub const DEFAULT_GRID_POINTS: usize = 2001;
pub const DEFAULT_MAX_DX: f64 = 0.5;
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
pub const C_FLOOR: f64 = 2.0;
/// Required e^{-2 mu c} for the slowest asymptotic rate mu.
pub const MODE_TOL: f64 = 1e-4;
pub const C_CAP: f64 = 200.0;

/// Grid uniform in tau on [-tanh(c/2), tanh(c/2)] with x = 2 artanh(tau), refined to steps of at most `max_dx`.
pub fn evolution_grid(c: f64, points: usize, max_dx: f64) -> Vec<f64> {
    let m = points.max(3);
    let tmax = (0.5 * c).tanh();
    let mut base: Vec<f64> = (0..m)
        .map(|k| {
            let tau = -tmax + 2.0 * tmax * k as f64 / (m - 1) as f64;
            (2.0 * tau.atanh()).clamp(-c, c)
        })
        .collect();
    base[0] = -c;
    base[m - 1] = c;
    base[(m - 1) / 2] = if m % 2 == 1 { 0.0 } else { base[(m - 1) / 2] };
    base.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut out = Vec::with_capacity(base.len());
    for w in base.windows(2) {
        let gap = w[1] - w[0];
        let pieces = if max_dx > 0.0 { (gap / max_dx).ceil().max(1.0) as usize } else { 1 };
        for j in 0..pieces {
            out.push(w[0] + gap * j as f64 / pieces as f64);
        }
    }
    out.push(c);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Initialized with X_-(lambda) at x = -c and integrated rightward.
    FromLeft,
    /// Initialized with Xtilde_+(lambda) at x = +c and integrated leftward.
    FromRight,
}

/// Frames of the evolving plane on the output grid (stored in increasing x).
#[derive(Clone, Debug)]
pub struct EvolvedFramePath {
    pub grid: Vec<f64>,
    pub frames: Vec<LagrangianFrame>,
    pub lambda: f64,
    pub direction: Direction,
    /// Accumulated log|det R| removed by re-orthonormalization up to each grid point.
    pub rescale_log: Vec<f64>,
    pub residuals: Vec<f64>,
    pub options: IntegratorOptions,
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(terms: &[(f64, &CMat)], base: &CMat, h: f64) -> CMat {
    let mut out = base.clone();
    for (w, k) in terms {
        if *w != 0.0 {
            out.zip_apply(*k, |o, v| *o += v * (h * w));
        }
    }
    out
}

/// One Dormand-Prince step; returns (5th-order solution, error estimate).
fn dp_step<F: Fn(f64, &CMat) -> CMat>(f: &F, x: f64, s: &CMat, h: f64) -> (CMat, CMat) {
    let k1 = f(x, s);
    let k2 = f(x + C2 * h, &axpy(&[(A21, &k1)], s, h));
    let k3 = f(x + C3 * h, &axpy(&[(A31, &k1), (A32, &k2)], s, h));
    let k4 = f(x + C4 * h, &axpy(&[(A41, &k1), (A42, &k2), (A43, &k3)], s, h));
    let k5 = f(x + C5 * h, &axpy(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], s, h));
    let k6 = f(x + h, &axpy(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], s, h));
    let y = axpy(&[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], s, h);
    let k7 = f(x + h, &y);
    let err = axpy(&[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)], &CMat::zeros(s.nrows(), s.ncols()), h);
    (y, err)
}

fn error_ratio(err: &CMat, a: &CMat, b: &CMat, opts: &IntegratorOptions) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..err.nrows() {
        for j in 0..err.ncols() {
            let scale = opts.atol + opts.rtol * a[(i, j)].norm().max(b[(i, j)].norm());
            worst = worst.max(err[(i, j)].norm() / scale);
        }
    }
    worst
}

/// State normalization after an accepted step: returns log|det| removed, or None to reject.
trait Normalizer {
    fn normalize(&self, before: &CMat, after: CMat) -> Option<(CMat, f64)>;
}

/// Frame states: QR re-orthonormalization with residual and continuity checks.
struct FrameNormalizer {
    n: usize,
    lag_limit: f64,
    continuity_cap: f64,
}

fn frame_residual(q: &CMat, n: usize) -> f64 {
    let x = q.rows(0, n);
    let y = q.rows(n, n);
    linalg::norm_inf(&(x.adjoint() * y - y.adjoint() * x))
}

impl Normalizer for FrameNormalizer {
    fn normalize(&self, before: &CMat, after: CMat) -> Option<(CMat, f64)> {
        let (q, logdet) = linalg::orthonormalize(&after);
        if frame_residual(&q, self.n) > self.lag_limit {
            return None;
        }
        let p0 = before * before.adjoint();
        let p1 = &q * q.adjoint();
        if linalg::spectral_norm(&(p1 - p0)) > self.continuity_cap {
            return None;
        }
        Some((q, logdet))
    }
}

/// Augmented states [Y; Z; I] (2n + 2n + n rows): Y regauged by QR, Z -> Z G, I -> G* I G.
struct AugmentedNormalizer {
    n: usize,
    lag_limit: f64,
    continuity_cap: f64,
}

impl Normalizer for AugmentedNormalizer {
    fn normalize(&self, before: &CMat, after: CMat) -> Option<(CMat, f64)> {
        let n = self.n;
        let y = after.rows(0, 2 * n).into_owned();
        let qr = y.clone().qr();
        let r = qr.r();
        let q = qr.q();
        if frame_residual(&q, n) > self.lag_limit {
            return None;
        }
        let y0 = before.rows(0, 2 * n);
        if linalg::spectral_norm(&(&q * q.adjoint() - y0 * y0.adjoint())) > self.continuity_cap {
            return None;
        }
        let g = r.clone().try_inverse()?;
        let z = after.rows(2 * n, 2 * n) * &g;
        let i = g.adjoint() * after.rows(4 * n, n) * &g;
        let logdet = (0..n).map(|k| r[(k, k)].norm().ln()).sum();
        let mut out = CMat::zeros(5 * n, n);
        out.rows_mut(0, 2 * n).copy_from(&q);
        out.rows_mut(2 * n, 2 * n).copy_from(&z);
        out.rows_mut(4 * n, n).copy_from(&i);
        Some((out, logdet))
    }
}

/// Integrate from x0 to x1 (either direction); returns (state, log|det| removed, last step size).
fn integrate<F: Fn(f64, &CMat) -> CMat, N: Normalizer>(f: &F, norm: &N, x0: f64, x1: f64, s0: &CMat, h0: f64, opts: &IntegratorOptions) -> Result<(CMat, f64, f64)> {
    let span = x1 - x0;
    if span == 0.0 {
        return Ok((s0.clone(), 0.0, h0));
    }
    let dir = span.signum();
    let mut x = x0;
    let mut s = s0.clone();
    let mut h = h0.abs().max(opts.min_step).min(span.abs());
    let mut logdet = 0.0;
    let mut steps = 0usize;
    let mut last_h = h;
    while (x1 - x) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::IntegrationAccuracy(format!("step budget exhausted at x = {x}")));
        }
        let remaining = (x1 - x).abs();
        let final_step = h >= remaining * (1.0 - 1e-12);
        let step = if final_step { remaining } else { h };
        let (y, err) = dp_step(f, x, &s, dir * step);
        let ratio = error_ratio(&err, &s, &y, opts);
        let accepted = if ratio <= 1.0 && y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) { norm.normalize(&s, y) } else { None };
        match accepted {
            Some((next, ld)) => {
                x = if final_step { x1 } else { x + dir * step };
                s = next;
                logdet += ld;
                last_h = step;
                let grow = if ratio > 0.0 { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
                h = step * grow;
            }
            None => {
                let shrink = if ratio > 1.0 && ratio.is_finite() { (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.5) } else { 0.5 };
                h = step * shrink;
                if h < opts.min_step {
                    return Err(Error::IntegrationAccuracy(format!(
                        "step size underflow at x = {x}: Lagrangian residual or continuity cap cannot be met; tighten rtol or lower lagrangian_tol"
                    )));
                }
            }
        }
    }
    Ok((s, logdet, last_h))
}

fn frame_rhs<'a>(sys: &'a dyn HamiltonianSystem, lambda: f64) -> impl Fn(f64, &CMat) -> CMat + 'a {
    move |x, s| sys.a(x, lambda) * s
}

fn frame_normalizer(n: usize, opts: &IntegratorOptions) -> FrameNormalizer {
    FrameNormalizer { n, lag_limit: 10.0 * opts.lagrangian_tol, continuity_cap: opts.continuity_cap }
}

fn initial_frame(sys: &dyn HamiltonianSystem, lambda: f64, direction: Direction) -> Result<LagrangianFrame> {
    let frames = sys.asymptotic_frames(lambda)?;
    Ok(match direction {
        Direction::FromLeft => frames.x_minus,
        Direction::FromRight => frames.xt_plus,
    })
}

/// Evolve the left-lying (or right-lying) plane across the policy grid.
pub fn evolve_frame(sys: &dyn HamiltonianSystem, lambda: f64, policy: &TruncationPolicy, direction: Direction, opts: &IntegratorOptions) -> Result<EvolvedFramePath> {
    let grid = policy.grid();
    let n = sys.half_dim();
    let f = frame_rhs(sys, lambda);
    let norm = frame_normalizer(n, opts);
    let (mut s, _) = linalg::orthonormalize(&initial_frame(sys, lambda, direction)?.stacked());
    let m = grid.len();
    let mut frames = vec![LagrangianFrame::dirichlet(n); m];
    let mut rescale = vec![0.0; m];
    let mut residuals = vec![0.0; m];
    let order: Vec<usize> = match direction {
        Direction::FromLeft => (0..m).collect(),
        Direction::FromRight => (0..m).rev().collect(),
    };
    let mut h = opts.initial_step;
    let mut total = 0.0;
    frames[order[0]] = LagrangianFrame::from_stacked(&s)?;
    residuals[order[0]] = frame_residual(&s, n);
    for w in order.windows(2) {
        let (next, ld, hl) = integrate(&f, &norm, grid[w[0]], grid[w[1]], &s, h, opts)?;
        s = next;
        h = hl.max(opts.initial_step * 1e-3);
        total += ld;
        frames[w[1]] = LagrangianFrame::from_stacked(&s)?;
        rescale[w[1]] = total;
        residuals[w[1]] = frame_residual(&s, n);
    }
    Ok(EvolvedFramePath { grid, frames, lambda, direction, rescale_log: rescale, residuals, options: *opts })
}

/// The left-lying frame at x = c, produced by the same stepping as [`evolve_frame`].
pub fn evolve_to_end(sys: &dyn HamiltonianSystem, lambda: f64, policy: &TruncationPolicy, opts: &IntegratorOptions) -> Result<LagrangianFrame> {
    evolve_to(sys, lambda, policy, Direction::FromLeft, policy.c, opts)
}

/// The left- or right-lying frame at a grid point `x_stop`, stepping over the policy grid.
pub fn evolve_to(sys: &dyn HamiltonianSystem, lambda: f64, policy: &TruncationPolicy, direction: Direction, x_stop: f64, opts: &IntegratorOptions) -> Result<LagrangianFrame> {
    let mut grid: Vec<f64> = match direction {
        Direction::FromLeft => policy.grid().into_iter().filter(|&x| x < x_stop).collect(),
        Direction::FromRight => policy.grid().into_iter().rev().filter(|&x| x > x_stop).collect(),
    };
    grid.push(x_stop);
    let n = sys.half_dim();
    let f = frame_rhs(sys, lambda);
    let norm = frame_normalizer(n, opts);
    let (mut s, _) = linalg::orthonormalize(&initial_frame(sys, lambda, direction)?.stacked());
    let mut h = opts.initial_step;
    for w in grid.windows(2) {
        let (next, _, hl) = integrate(&f, &norm, w[0], w[1], &s, h, opts)?;
        s = next;
        h = hl.max(opts.initial_step * 1e-3);
    }
    LagrangianFrame::from_stacked(&s)
}

impl EvolvedFramePath {
    pub fn c(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Frame at an arbitrary x in [-c, c], integrated from the nearest stored point upstream.
    pub fn frame_at(&self, sys: &dyn HamiltonianSystem, x: f64) -> Result<LagrangianFrame> {
        let c = self.c();
        if !(x >= -c - 1e-12 && x <= c + 1e-12) {
            return Err(Error::Input(format!("x = {x} outside [-{c}, {c}]")));
        }
        let k = self.grid.partition_point(|&g| g <= x);
        let start = match self.direction {
            Direction::FromLeft => k.saturating_sub(1),
            Direction::FromRight => k.min(self.grid.len() - 1),
        };
        if self.grid[start] == x {
            return Ok(self.frames[start].clone());
        }
        let f = frame_rhs(sys, self.lambda);
        let norm = frame_normalizer(sys.half_dim(), &self.options);
        let (s, _, _) = integrate(&f, &norm, self.grid[start], x, &self.frames[start].stacked(), self.options.initial_step, &self.options)?;
        LagrangianFrame::from_stacked(&s)
    }

    /// CSV rows: x, rescale_log, residual, then Re/Im of X and Y entries (row-major).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.frames[0].n();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string(), "rescale_log".into(), "lagrangian_residual".into()];
        for block in ["X", "Y"] {
            for i in 0..n {
                for j in 0..n {
                    header.push(format!("re_{block}_{i}{j}"));
                    header.push(format!("im_{block}_{i}{j}"));
                }
            }
        }
        w.write_record(&header).map_err(io_err)?;
        for (k, fr) in self.frames.iter().enumerate() {
            let mut row = vec![fmt17(self.grid[k]), fmt17(self.rescale_log[k]), fmt17(self.residuals[k])];
            for m in [&fr.x, &fr.y] {
                for i in 0..n {
                    for j in 0..n {
                        row.push(fmt17(m[(i, j)].re));
                        row.push(fmt17(m[(i, j)].im));
                    }
                }
            }
            w.write_record(&row).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Input(e.to_string()))?;
        Ok(())
    }
}

pub(crate) fn io_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

/// Seventeen significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------- truncation

/// Integral of g over [c, infinity) by Gauss-Legendre on doubling segments.
pub fn tail_integral<G: Fn(f64) -> f64>(g: &G, c: f64) -> f64 {
    let mut total = 0.0;
    let mut a = c;
    let mut len = 1.0;
    for _ in 0..60 {
        let b = a + len;
        let mut seg = 0.0;
        for j in 0..8 {
            let lo = a + len * j as f64 / 8.0;
            seg += linalg::gauss_legendre5(g, lo, lo + len / 8.0);
        }
        total += seg;
        if seg.abs() <= 1e-10 * total.abs() || (total == 0.0 && a > c + 1e3) {
            break;
        }
        a = b;
        len *= 2.0;
    }
    total
}

/// Chooses c from the coefficient tails and verifies asymptotic transversality on [lambda1, lambda2].
pub fn choose_truncation(sys: &dyn HamiltonianSystem, lambda1: f64, lambda2: f64, tol: f64) -> Result<TruncationPolicy> {
    let tail = |x: f64| sys.tail(x, lambda1).max(sys.tail(-x, lambda1)).max(sys.tail(x, lambda2)).max(sys.tail(-x, lambda2));
    let c_tail = if tail_integral(&tail, 0.0) < tol {
        0.0
    } else {
        if tail_integral(&tail, C_CAP) >= tol {
            return Err(Error::Truncation(format!("tail criterion: integrated coefficient tail beyond the cap c = {C_CAP} exceeds tol = {tol:.1e}")));
        }
        let (mut lo, mut hi) = (0.0, C_CAP);
        while hi - lo > 1e-3 {
            let mid = 0.5 * (lo + hi);
            if tail_integral(&tail, mid) < tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let mut mu_min = f64::INFINITY;
    for lambda in [lambda1, lambda2] {
        let f = sys.asymptotic_frames(lambda)?;
        for d in f.d_minus.iter().chain(&f.d_plus) {
            mu_min = mu_min.min(d.re.abs());
        }
    }
    let c_mode = MODE_TOL.recip().ln() / (2.0 * mu_min);
    let c = C_FLOOR.max(c_tail + DEFAULT_GROWTH_MARGIN).max(c_mode);
    if c > C_CAP {
        return Err(Error::Truncation(format!("c = {c:.3} (tail {c_tail:.3}, slowest mode rate {mu_min:.3e}) is above the cap {C_CAP}")));
    }
    let policy = TruncationPolicy::with_c(c);
    check_b2_gap(sys, lambda1, lambda2, policy.b2_gap_min)?;
    Ok(policy)
}

/// Minimum transversality gap of X_-(lambda) and Xtilde_+(lambda) on 11 lambda values.
pub fn check_b2_gap(sys: &dyn HamiltonianSystem, lambda1: f64, lambda2: f64, gap_min: f64) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for k in 0..11 {
        let lambda = lambda1 + (lambda2 - lambda1) * k as f64 / 10.0;
        let gap = sys.asymptotic_frames(lambda)?.transversality_gap();
        worst = worst.min(gap);
        if gap < gap_min {
            return Err(Error::Truncation(format!("transversality criterion: gap {gap:.3e} < {gap_min:.1e} at lambda = {lambda}")));
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------- crossing forms

/// X*Y' - Y*X' for a frame and its derivative.
pub fn frame_form(f: &LagrangianFrame, df: &LagrangianFrame) -> CMat {
    linalg::hermitian_part(&(f.x.adjoint() * &df.y - f.y.adjoint() * &df.x))
}

/// The x-direction form -X* J X' = -X* B X of the evolving plane.
pub fn x_crossing_form(sys: &dyn HamiltonianSystem, lambda: f64, x: f64, frame: &LagrangianFrame) -> CMat {
    let s = frame.stacked();
    linalg::hermitian_part(&-(s.adjoint() * sys.b(x, lambda) * s))
}

/// Derivative of a frame family by central differences in the graph gauge of `center`.
pub fn fd_derivative<F: Fn(f64) -> Result<LagrangianFrame>>(family: &F, t: f64, h: f64) -> Result<(LagrangianFrame, LagrangianFrame)> {
    let center = family(t)?.orthonormalized();
    let q = center.stacked();
    let align = |f: LagrangianFrame| -> Result<CMat> {
        let s = f.stacked();
        let g = linalg::solve(&(q.adjoint() * &s), &CMat::identity(q.ncols(), q.ncols()), 1e12)?;
        Ok(s * g)
    };
    let plus = align(family(t + h)?)?;
    let minus = align(family(t - h)?)?;
    let d = (plus - minus).map(|z| z / (2.0 * h));
    Ok((center, LagrangianFrame::from_stacked(&d)?))
}

/// Crossing form of a pair restricted to the intersection: A*(F1)A - B*(F2)B over
/// an orthonormal basis of pairs (a, b) with X1 a = X2 b.
pub fn pair_crossing_form(f1: &LagrangianFrame, form1: &CMat, f2: &LagrangianFrame, form2: &CMat, tol: f64) -> CMat {
    let s1 = f1.stacked();
    let s2 = f2.stacked();
    let n = f1.n();
    let mut m = CMat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (2 * n, n)).copy_from(&s1);
    m.view_mut((0, n), (2 * n, n)).copy_from(&(-&s2));
    let sv = linalg::singular_values(&m);
    let scale = sv.first().cloned().unwrap_or(1.0).max(1e-300);
    let k = sv.iter().filter(|&&s| s < tol * scale).count();
    if k == 0 {
        return CMat::zeros(0, 0);
    }
    let basis = linalg::null_space(&m, k);
    let a = basis.rows(0, n).into_owned();
    let b = basis.rows(n, n).into_owned();
    // normalize so that the intersection vectors X1 a are orthonormal
    let v = &s1 * &a;
    let gram = v.adjoint() * &v;
    let (vals, vecs) = linalg::hermitian_eigen(&gram);
    let inv_sqrt = CMat::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&l| Complex64::new(1.0 / l.max(1e-300).sqrt(), 0.0))));
    let w = &vecs * inv_sqrt * vecs.adjoint();
    let (a, b) = (a * &w, b * &w);
    linalg::hermitian_part(&(a.adjoint() * form1 * &a - b.adjoint() * form2 * &b))
}

/// Signature (positive minus negative eigenvalues) of a Hermitian form.
pub fn signature(form: &CMat, tol: f64) -> i64 {
    let (neg, _, pos) = linalg::inertia(form, tol);
    pos as i64 - neg as i64
}

/// Result of integrating the lambda-variational system alongside the frame.
#[derive(Clone, Debug)]
pub struct LambdaIdentity {
    pub x: f64,
    /// X* J Z with Z the lambda-variation started from zero at -c.
    pub variational_form: CMat,
    /// Integral of X* B_lambda X from -c in the same gauge.
    pub quadrature: CMat,
    pub frame: LagrangianFrame,
}

/// Integrate (X, Z = d_lambda X, int X* B_lambda X) from -c to x_end.
pub fn lambda_identity(sys: &dyn HamiltonianSystem, lambda: f64, policy: &TruncationPolicy, x_end: f64, opts: &IntegratorOptions) -> Result<LambdaIdentity> {
    let n = sys.half_dim();
    let grid: Vec<f64> = policy.grid().into_iter().filter(|&x| x < x_end).chain(std::iter::once(x_end)).collect();
    let (q0, _) = linalg::orthonormalize(&initial_frame(sys, lambda, Direction::FromLeft)?.stacked());
    let mut s = CMat::zeros(5 * n, n);
    s.rows_mut(0, 2 * n).copy_from(&q0);
    let f = move |x: f64, st: &CMat| -> CMat {
        let y = st.rows(0, 2 * n);
        let z = st.rows(2 * n, 2 * n);
        let a = sys.a(x, lambda);
        let bl = sys.b_lambda(x, lambda);
        let al = -linalg::apply_j(&bl);
        let mut out = CMat::zeros(5 * n, n);
        out.rows_mut(0, 2 * n).copy_from(&(&a * y));
        out.rows_mut(2 * n, 2 * n).copy_from(&(&a * z + &al * y));
        out.rows_mut(4 * n, n).copy_from(&(y.adjoint() * &bl * y));
        out
    };
    let norm = AugmentedNormalizer { n, lag_limit: 10.0 * opts.lagrangian_tol, continuity_cap: opts.continuity_cap };
    let mut h = opts.initial_step;
    for w in grid.windows(2) {
        let (next, _, hl) = integrate(&f, &norm, w[0], w[1], &s, h, opts)?;
        s = next;
        h = hl.max(opts.initial_step * 1e-3);
    }
    let frame = LagrangianFrame::from_stacked(&s.rows(0, 2 * n).into_owned())?;
    let z = LagrangianFrame::from_stacked(&s.rows(2 * n, 2 * n).into_owned())?;
    let variational_form = symplectic::j_product(&frame, &z);
    Ok(LambdaIdentity { x: x_end, variational_form, quadrature: s.rows(4 * n, n).into_owned(), frame })
}

/// Whether the endstate at `side` is reached within `tol` at |x| = c (used in diagnostics).
pub fn endstate_tail(sys: &dyn HamiltonianSystem, lambda: f64, c: f64, side: Side) -> f64 {
    let x = match side {
        Side::Minus => -c,
        Side::Plus => c,
    };
    sys.tail(x, lambda)
}

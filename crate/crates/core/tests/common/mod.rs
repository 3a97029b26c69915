#![allow(dead_code)]

use maslov_core::coefficients::{CoefMatrix, Profile};
use maslov_core::linalg::{c, CMat, I};
use maslov_core::model::HamiltonianSystem;
use maslov_core::oracle::Discretize;
use maslov_core::symplectic::LagrangianFrame;
use maslov_core::systems::*;
use num_complex::Complex64;
use rand::Rng;

pub fn sl(v: Profile) -> SlHamiltonian {
    sl_to_hamiltonian(SturmLiouvilleSystem::scalar_schrodinger(v)).unwrap()
}

pub fn sl_matrix(v: CoefMatrix) -> SlHamiltonian {
    let n = v.rows;
    sl_to_hamiltonian(SturmLiouvilleSystem { p: CoefMatrix::constant_identity(n), v, q: CoefMatrix::constant_identity(n) }).unwrap()
}

pub fn traveling(amplitude: f64, s: f64) -> TravelingHamiltonian {
    traveling_to_hamiltonian(TravelingWaveSystem { v: CoefMatrix::scalar(Profile::sech2(amplitude)), s }).unwrap()
}

/// phi'''' - a sech^2(x) phi.
pub fn fourth(a: f64) -> FourthHamiltonian {
    fourth_to_hamiltonian(FourthOrderSystem { v: CoefMatrix::scalar(Profile::sech2(-a)) }).unwrap()
}

/// m = 1, n = 2: V11 = -2 sech^2, V12 = eps sech, V22 = 2.
pub fn da(eps: f64) -> DaHamiltonian {
    da_reduce(DASystem {
        p11: CoefMatrix::constant_identity(1),
        v11: CoefMatrix::scalar(Profile::sech2(-2.0)),
        v12: CoefMatrix::scalar(Profile::Sech { amplitude: eps, width: 1.0, center: 0.0 }),
        v22: CoefMatrix::scalar(Profile::constant(2.0)),
    })
    .unwrap()
}

pub fn two_channel() -> SlHamiltonian {
    let coupling = Profile::Sech { amplitude: 0.3, width: 1.0, center: 0.0 };
    sl_matrix(
        CoefMatrix::from_rows(vec![
            vec![Profile::GaussianWell { depth: 3.0, width: 1.0, center: 0.0 }, coupling.clone()],
            vec![coupling, Profile::Kink { left: 1.0, right: 1.5, width: 1.0 }],
        ])
        .unwrap(),
    )
}

pub fn tabulated_sech2() -> SlHamiltonian {
    let x: Vec<f64> = (-400..=400).map(|k| k as f64 * 0.05).collect();
    let y: Vec<f64> = x.iter().map(|&t| -2.0 / t.cosh().powi(2)).collect();
    sl(Profile::Tabulated { file: None, x, y })
}

/// A system usable by both the Maslov pipelines and the oracle.
pub trait Both: HamiltonianSystem + Discretize {}
impl<T: HamiltonianSystem + Discretize> Both for T {}

pub struct Example {
    pub name: &'static str,
    pub sys: Box<dyn Both>,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Every shipped example with an admissible interval.
pub fn examples() -> Vec<Example> {
    vec![
        Example { name: "sech2 well", sys: Box::new(sl(Profile::sech2(-2.0))), lambda1: -2.0, lambda2: -0.5 },
        Example { name: "poschl-teller m=2", sys: Box::new(sl(Profile::PoschlTeller { m: 2 })), lambda1: -5.0, lambda2: -2.0 },
        Example { name: "poschl-teller m=3", sys: Box::new(sl(Profile::PoschlTeller { m: 3 })), lambda1: -10.0, lambda2: -0.5 },
        Example { name: "traveling s=0.5", sys: Box::new(traveling(-2.0, 0.5)), lambda1: -2.5, lambda2: -0.01 },
        Example { name: "fourth order a=2", sys: Box::new(fourth(2.0)), lambda1: -2.5, lambda2: -0.2 },
        Example { name: "differential-algebraic", sys: Box::new(da(0.5)), lambda1: -3.0, lambda2: -0.5 },
        Example { name: "two channel", sys: Box::new(two_channel()), lambda1: -3.0, lambda2: -0.05 },
        Example { name: "tabulated sech2", sys: Box::new(tabulated_sech2()), lambda1: -2.0, lambda2: -0.5 },
    ]
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen_range(1e-12..1.0);
    let v: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn random_complex(rng: &mut impl Rng, r: usize, k: usize) -> CMat {
    CMat::from_fn(r, k, |_, _| Complex64::new(gaussian(rng), gaussian(rng)))
}

pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMat {
    random_complex(rng, n, n).qr().q()
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMat {
    let a = random_complex(rng, n, n);
    (&a + a.adjoint()).map(|z| z * 0.5)
}

/// Symplectic unitary: independent rotations in each (j, n + j) plane after x, y -> Ux, Uy.
fn random_symplectic_unitary(rng: &mut impl Rng, n: usize) -> CMat {
    let u = random_unitary(rng, n);
    let mut t = CMat::zeros(2 * n, 2 * n);
    t.view_mut((0, 0), (n, n)).copy_from(&u);
    t.view_mut((n, n), (n, n)).copy_from(&u);
    let mut r = CMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        let th: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        r[(j, j)] = c(th.cos());
        r[(j, n + j)] = c(-th.sin());
        r[(n + j, j)] = c(th.sin());
        r[(n + j, n + j)] = c(th.cos());
    }
    r * t
}

/// Random invertible gauge with condition number below about 10.
pub fn random_gauge(rng: &mut impl Rng, n: usize) -> CMat {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| c(rng.gen_range(0.3..3.0)) * (I * rng.gen_range(0.0..6.0)).exp()));
    u * d * v
}

/// Two Lagrangian frames whose spans share exactly k dimensions.
pub fn random_pair(rng: &mut impl Rng, n: usize, k: usize) -> (LagrangianFrame, LagrangianFrame) {
    let s1 = random_hermitian(rng, n);
    let w = random_unitary(rng, n);
    let mut delta = CMat::zeros(n, n);
    for j in 0..n - k {
        let sigma = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let col = w.column(j).into_owned();
        delta += &col * col.adjoint() * c(sigma);
    }
    let s2 = &s1 + delta;
    let t = random_symplectic_unitary(rng, n);
    let graph = |s: &CMat| {
        let mut m = CMat::zeros(2 * n, n);
        m.view_mut((0, 0), (n, n)).copy_from(&CMat::identity(n, n));
        m.view_mut((n, 0), (n, n)).copy_from(s);
        LagrangianFrame::from_stacked(&(&t * m)).unwrap()
    };
    (graph(&s1), graph(&s2))
}

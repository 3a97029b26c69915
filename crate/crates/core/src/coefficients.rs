//! Scalar coefficient families and symmetric matrix-valued coefficients built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::model::{Decay, Side};

fn one() -> f64 {
    1.0
}

/// A scalar coefficient profile on the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// c
    Constant { value: f64 },
    /// amplitude * sech^2((x - center) / width)
    Sech2 {
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// -m(m+1) sech^2 x
    PoschlTeller { m: u32 },
    /// -depth * exp(-((x - center) / width)^2)
    GaussianWell {
        depth: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// amplitude * sech((x - center) / width)
    Sech {
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// amplitude * (1 + |x|)^(-power)
    Algebraic { amplitude: f64, power: f64 },
    /// left + (right - left)(1 + tanh(x / width)) / 2
    Kink {
        left: f64,
        right: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Piecewise-linear interpolation of samples, constant beyond the ends.
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<String>,
        #[serde(default)]
        x: Vec<f64>,
        #[serde(default)]
        y: Vec<f64>,
    },
    /// Sum of profiles.
    Sum { terms: Vec<Profile> },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn sech2(amplitude: f64) -> Self {
        Profile::Sech2 { amplitude, width: 1.0, center: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Sech2 { amplitude, width, center } => {
                let s = 1.0 / ((x - center) / width).cosh();
                amplitude * s * s
            }
            Profile::PoschlTeller { m } => {
                let s = 1.0 / x.cosh();
                -((m * (m + 1)) as f64) * s * s
            }
            Profile::GaussianWell { depth, width, center } => -depth * (-((x - center) / width).powi(2)).exp(),
            Profile::Sech { amplitude, width, center } => amplitude / ((x - center) / width).cosh(),
            Profile::Algebraic { amplitude, power } => amplitude * (1.0 + x.abs()).powf(-power),
            Profile::Kink { left, right, width } => left + (right - left) * 0.5 * (1.0 + (x / width).tanh()),
            Profile::Tabulated { x: xs, y: ys, .. } => interpolate(xs, ys, x),
            Profile::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    pub fn limit(&self, side: Side) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Kink { left, right, .. } => match side {
                Side::Minus => *left,
                Side::Plus => *right,
            },
            Profile::Tabulated { y, .. } => match side {
                Side::Minus => y.first().cloned().unwrap_or(0.0),
                Side::Plus => y.last().cloned().unwrap_or(0.0),
            },
            Profile::Sum { terms } => terms.iter().map(|t| t.limit(side)).sum(),
            _ => 0.0,
        }
    }

    /// Decay of |profile - limit| at infinity.
    pub fn decay(&self) -> Decay {
        match self {
            Profile::Constant { .. } => Decay::None,
            Profile::Sech2 { width, .. } => Decay::Exponential(2.0 / width.abs()),
            Profile::PoschlTeller { .. } => Decay::Exponential(2.0),
            Profile::GaussianWell { .. } => Decay::Exponential(f64::INFINITY),
            Profile::Sech { width, .. } => Decay::Exponential(1.0 / width.abs()),
            Profile::Algebraic { power, .. } => Decay::Polynomial(*power),
            Profile::Kink { width, .. } => Decay::Exponential(2.0 / width.abs()),
            Profile::Tabulated { x, .. } => {
                if x.is_empty() {
                    Decay::None
                } else {
                    Decay::Compact(x[0].abs().max(x[x.len() - 1].abs()))
                }
            }
            Profile::Sum { terms } => terms.iter().map(|t| t.decay()).fold(Decay::None, Decay::slowest),
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let bad = |msg: &str| Err(Error::Input(format!("{path}: {msg}")));
        match self {
            Profile::Sech2 { width, .. } | Profile::GaussianWell { width, .. } | Profile::Sech { width, .. } | Profile::Kink { width, .. } if !(*width > 0.0) => bad("width must be positive"),
            Profile::Algebraic { power, .. } if !(*power > 1.0) => bad("power must exceed 1 for integrable tails"),
            Profile::Tabulated { x, y, .. } => {
                if x.len() < 2 || x.len() != y.len() {
                    return bad("tabulated profile needs at least two (x, y) samples of equal length");
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("tabulated x samples must be strictly increasing");
                }
                Ok(())
            }
            Profile::Sum { terms } => {
                for (k, t) in terms.iter().enumerate() {
                    t.validate(&format!("{path}.terms[{k}]"))?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] * (1.0 - t) + ys[k + 1] * t
}

/// Real matrix coefficient with entry-wise profiles (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Profile>,
}

impl CoefMatrix {
    pub fn scalar(p: Profile) -> Self {
        CoefMatrix { rows: 1, cols: 1, entries: vec![p] }
    }

    pub fn constant_identity(n: usize) -> Self {
        Self::diagonal((0..n).map(|_| Profile::constant(1.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CoefMatrix { rows, cols, entries: vec![Profile::constant(0.0); rows * cols] }
    }

    pub fn diagonal(diag: Vec<Profile>) -> Self {
        let n = diag.len();
        let mut entries = vec![Profile::constant(0.0); n * n];
        for (k, p) in diag.into_iter().enumerate() {
            entries[k * n + k] = p;
        }
        CoefMatrix { rows: n, cols: n, entries }
    }

    pub fn from_rows(rows: Vec<Vec<Profile>>) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map(|v| v.len()).unwrap_or(0);
        if r == 0 || cols == 0 || rows.iter().any(|v| v.len() != cols) {
            return Err(Error::Input("coefficient matrix rows must be nonempty and of equal length".into()));
        }
        Ok(CoefMatrix { rows: r, cols, entries: rows.into_iter().flatten().collect() })
    }

    pub fn get(&self, i: usize, j: usize) -> &Profile {
        &self.entries[i * self.cols + j]
    }

    pub fn eval(&self, x: f64) -> RMat {
        RMat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(x))
    }

    pub fn limit(&self, side: Side) -> RMat {
        RMat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).limit(side))
    }

    pub fn decay(&self) -> Decay {
        self.entries.iter().map(|p| p.decay()).fold(Decay::None, Decay::slowest)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Symmetry of the profile layout (entry (i,j) equals entry (j,i)).
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                self.get(i, j).validate(&format!("{path}[{i}][{j}]"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_evaluate() {
        assert!((Profile::PoschlTeller { m: 2 }.eval(0.0) + 6.0).abs() < 1e-15);
        assert!((Profile::sech2(-2.0).eval(0.0) + 2.0).abs() < 1e-15);
        let g = Profile::GaussianWell { depth: 3.0, width: 2.0, center: 0.0 };
        assert!((g.eval(2.0) + 3.0 * (-1.0f64).exp()).abs() < 1e-15);
        let k = Profile::Kink { left: 1.0, right: 3.0, width: 1.0 };
        assert_eq!(k.limit(Side::Minus), 1.0);
        assert_eq!(k.limit(Side::Plus), 3.0);
        assert!((k.eval(0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolates_and_extends() {
        let t = Profile::Tabulated { file: None, x: vec![-1.0, 0.0, 1.0], y: vec![0.0, -2.0, 0.0] };
        assert_eq!(t.eval(-0.5), -1.0);
        assert_eq!(t.eval(5.0), 0.0);
        assert_eq!(t.limit(Side::Plus), 0.0);
        assert!(t.validate("v").is_ok());
        let bad = Profile::Tabulated { file: None, x: vec![0.0, 0.0], y: vec![1.0, 1.0] };
        assert!(bad.validate("v").is_err());
    }

    #[test]
    fn profile_toml_round_trip() {
        let p: Profile = toml_like(r#"{"family":"poschl_teller","m":3}"#);
        assert_eq!(p, Profile::PoschlTeller { m: 3 });
        let p: Profile = toml_like(r#"{"family":"sech2","amplitude":-2.0}"#);
        assert_eq!(p, Profile::sech2(-2.0));
    }

    fn toml_like(s: &str) -> Profile {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn matrix_symmetry_and_limits() {
        let m = CoefMatrix::from_rows(vec![vec![Profile::sech2(-2.0), Profile::constant(1.0)], vec![Profile::constant(1.0), Profile::constant(3.0)]]).unwrap();
        assert!(m.is_symmetric());
        let lim = m.limit(Side::Plus);
        assert_eq!(lim[(0, 0)], 0.0);
        assert_eq!(lim[(1, 1)], 3.0);
        assert_eq!(m.decay(), Decay::Exponential(2.0));
    }
}

//! Region-wise coefficients of the transmission problem.

use crate::error::{Error, Result};
use crate::mesh::{Rect, Region};
use crate::Point;
use serde::{Deserialize, Serialize};

/// Row-major 2x2 matrix.
pub type Mat2 = [[f64; 2]; 2];

pub fn mat_vec(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn scaled_identity(s: f64) -> Mat2 {
    [[s, 0.0], [0.0, s]]
}

pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(a: &Mat2) -> [f64; 2] {
    let (p, r) = (a[0][0], a[1][1]);
    let q = 0.5 * (a[0][1] + a[1][0]);
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    [mean - rad, mean + rad]
}

/// Conductivity tensor: a scalar, a constant matrix, or an affine field
/// `base + x * dx + y * dy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tensor {
    Scalar(f64),
    Matrix(Mat2),
    Affine { base: Mat2, dx: Mat2, dy: Mat2 },
}

impl Tensor {
    pub fn at(&self, x: Point) -> Mat2 {
        match self {
            Tensor::Scalar(s) => scaled_identity(*s),
            Tensor::Matrix(m) => *m,
            Tensor::Affine { base, dx, dy } => {
                let mut m = *base;
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] += x[0] * dx[i][j] + x[1] * dy[i][j];
                    }
                }
                m
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        !matches!(self, Tensor::Affine { .. })
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Tensor::Scalar(s) => Some(*s),
            Tensor::Matrix(m) if m[0][1] == 0.0 && m[1][0] == 0.0 && m[0][0] == m[1][1] => {
                Some(m[0][0])
            }
            _ => None,
        }
    }
}

/// Monotone nonlinearity with `rho(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    Zero,
    Linear { lambda: f64 },
    Cubic,
    LinearPlusCubic { lambda: f64 },
    Atan,
}

impl Nonlinearity {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear { lambda } => lambda * u,
            Nonlinearity::Cubic => u * u * u,
            Nonlinearity::LinearPlusCubic { lambda } => lambda * u + u * u * u,
            Nonlinearity::Atan => u.atan(),
        }
    }

    pub fn deriv(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear { lambda } => lambda,
            Nonlinearity::Cubic => 3.0 * u * u,
            Nonlinearity::LinearPlusCubic { lambda } => lambda + 3.0 * u * u,
            Nonlinearity::Atan => 1.0 / (1.0 + u * u),
        }
    }

    /// Polynomial degree, `None` for transcendental nonlinearities.
    pub fn degree(&self) -> Option<usize> {
        match self {
            Nonlinearity::Zero => Some(0),
            Nonlinearity::Linear { .. } => Some(1),
            Nonlinearity::Cubic | Nonlinearity::LinearPlusCubic { .. } => Some(3),
            Nonlinearity::Atan => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Nonlinearity::Zero | Nonlinearity::Atan)
    }

    /// Lower bound of `rho'` over the real line.
    pub fn min_slope(&self) -> f64 {
        match *self {
            Nonlinearity::Linear { lambda } | Nonlinearity::LinearPlusCubic { lambda } => lambda,
            _ => 0.0,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match *self {
            Nonlinearity::Linear { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => Err(
                Error::Material(format!("{name}: linear slope must be >= 0, got {lambda}")),
            ),
            Nonlinearity::LinearPlusCubic { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::Material(format!(
                    "{name}: linear_plus_cubic needs lambda > 0, got {lambda}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Source term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Constant {
        value: f64,
    },
    /// Sum of `c * x^i * y^j` over the listed `[i, j, c]` terms.
    Polynomial {
        terms: Vec<(u32, u32, f64)>,
    },
    /// Bilinear interpolation of `values[j][i]` on a uniform grid spanning `bounds`.
    Tabulated {
        bounds: Rect,
        values: Vec<Vec<f64>>,
    },
}

impl Source {
    pub fn constant(value: f64) -> Self {
        Source::Constant { value }
    }

    pub fn at(&self, x: Point) -> f64 {
        match self {
            Source::Constant { value } => *value,
            Source::Polynomial { terms } => terms
                .iter()
                .map(|&(i, j, c)| c * x[0].powi(i as i32) * x[1].powi(j as i32))
                .sum(),
            Source::Tabulated { bounds, values } => {
                let ny = values.len();
                let nx = values[0].len();
                let fx = ((x[0] - bounds.min[0]) / bounds.width() * (nx - 1) as f64)
                    .clamp(0.0, (nx - 1) as f64);
                let fy = ((x[1] - bounds.min[1]) / bounds.height() * (ny - 1) as f64)
                    .clamp(0.0, (ny - 1) as f64);
                let (i, j) = ((fx as usize).min(nx - 2), (fy as usize).min(ny - 2));
                let (s, t) = (fx - i as f64, fy - j as f64);
                (1.0 - t) * ((1.0 - s) * values[j][i] + s * values[j][i + 1])
                    + t * ((1.0 - s) * values[j + 1][i] + s * values[j + 1][i + 1])
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Source::Constant { .. })
    }

    fn validate(&self, name: &str) -> Result<()> {
        if let Source::Tabulated { bounds, values } = self {
            let nx = values.first().map_or(0, Vec::len);
            if values.len() < 2 || nx < 2 || values.iter().any(|r| r.len() != nx) {
                return Err(Error::Material(format!(
                    "{name}: tabulated source needs a rectangular grid of at least 2x2"
                )));
            }
            if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
                return Err(Error::Material(format!(
                    "{name}: tabulated source has empty bounds"
                )));
            }
        }
        Ok(())
    }
}

/// Problem variant: a second material phase, or a void with a natural
/// boundary condition on its rim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Transmission,
    Extremal,
}

/// Coefficients `(beta, rho, f)` for the inclusion phase (index 1) and the
/// surrounding matrix (index 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub beta1: Tensor,
    pub beta2: Tensor,
    pub rho1: Nonlinearity,
    pub rho2: Nonlinearity,
    pub f1: Source,
    pub f2: Source,
}

impl MaterialSpec {
    /// Same coefficients in both phases.
    pub fn homogeneous(beta: f64, rho: Nonlinearity, f: f64) -> Self {
        MaterialSpec {
            beta1: Tensor::Scalar(beta),
            beta2: Tensor::Scalar(beta),
            rho1: rho,
            rho2: rho,
            f1: Source::constant(f),
            f2: Source::constant(f),
        }
    }

    /// Phase `Inclusion` uses index 1, everything else index 2.
    pub fn beta(&self, region: Region, x: Point) -> Mat2 {
        match region {
            Region::Inclusion => self.beta1.at(x),
            _ => self.beta2.at(x),
        }
    }

    pub fn rho(&self, region: Region) -> &Nonlinearity {
        match region {
            Region::Inclusion => &self.rho1,
            _ => &self.rho2,
        }
    }

    pub fn f(&self, region: Region, x: Point) -> f64 {
        match region {
            Region::Inclusion => self.f1.at(x),
            _ => self.f2.at(x),
        }
    }

    /// Both conductivities are constant in space.
    pub fn constant_beta(&self) -> bool {
        self.beta1.is_constant() && self.beta2.is_constant()
    }

    /// Checks coercivity of both tensors on a sample grid of `bounds`, the
    /// monotonicity parameters, and the extra requirements of the void case.
    pub fn validate(&self, bounds: &Rect, mode: Mode) -> Result<()> {
        self.rho1.validate("rho1")?;
        self.rho2.validate("rho2")?;
        self.f1.validate("f1")?;
        self.f2.validate("f2")?;
        let n = 8;
        for (name, tensor) in [("beta1", &self.beta1), ("beta2", &self.beta2)] {
            if mode == Mode::Extremal && name == "beta1" {
                continue;
            }
            for j in 0..=n {
                for i in 0..=n {
                    let x = [
                        bounds.min[0] + bounds.width() * i as f64 / n as f64,
                        bounds.min[1] + bounds.height() * j as f64 / n as f64,
                    ];
                    let m = tensor.at(x);
                    let lo = sym_eigenvalues(&m)[0];
                    if !(lo > 0.0) || m.iter().flatten().any(|v| !v.is_finite()) {
                        return Err(Error::Material(format!(
                            "{name} is not uniformly elliptic: smallest eigenvalue {lo} at ({}, {})",
                            x[0], x[1]
                        )));
                    }
                }
            }
        }
        if mode == Mode::Extremal {
            let b2 = match &self.beta2 {
                Tensor::Affine { .. } => None,
                t => Some(t.at([0.0, 0.0])),
            };
            let spd_constant = b2.is_some_and(|m| m[0][1] == m[1][0]);
            let bounded = spd_constant && self.rho2.is_bounded();
            let strictly_monotone = self.rho2.min_slope() > 0.0;
            if !(bounded || strictly_monotone) {
                return Err(Error::Material(
                    "void mode needs either a constant symmetric beta2 with bounded rho2, or rho2' >= lambda > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_eigenvalues() {
        let e = sym_eigenvalues(&[[2.0, 1.0], [1.0, 2.0]]);
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_data() {
        let b = Rect::unit_square();
        let mut m = MaterialSpec::homogeneous(1.0, Nonlinearity::Atan, 1.0);
        m.validate(&b, Mode::Transmission).unwrap();
        m.validate(&b, Mode::Extremal).unwrap();
        m.beta2 = Tensor::Matrix([[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(
            m.validate(&b, Mode::Transmission),
            Err(Error::Material(_))
        ));
        let mut m = MaterialSpec::homogeneous(1.0, Nonlinearity::Cubic, 1.0);
        assert!(m.validate(&b, Mode::Extremal).is_err());
        m.rho2 = Nonlinearity::LinearPlusCubic { lambda: 0.5 };
        m.validate(&b, Mode::Extremal).unwrap();
        m.rho1 = Nonlinearity::Linear { lambda: -1.0 };
        assert!(m.validate(&b, Mode::Transmission).is_err());
    }

    #[test]
    fn toml_forms() {
        #[derive(Deserialize)]
        struct W {
            a: Tensor,
            b: Tensor,
            r: Nonlinearity,
            f: Source,
        }
        let w: W = toml::from_str(
            "a = 2.0\nb = [[1.0, 0.5], [0.5, 1.0]]\nr = { kind = \"linear\", lambda = 1.0 }\nf = { kind = \"polynomial\", terms = [[1, 0, 2.0]] }",
        )
        .unwrap();
        assert_eq!(w.a, Tensor::Scalar(2.0));
        assert_eq!(w.b.at([0.0, 0.0])[0][1], 0.5);
        assert_eq!(w.r.eval(3.0), 3.0);
        assert_eq!(w.f.at([0.25, 7.0]), 0.5);
    }

    #[test]
    fn tabulated_source_reproduces_bilinear() {
        let s = Source::Tabulated {
            bounds: Rect::unit_square(),
            values: vec![vec![0.0, 1.0], vec![2.0, 3.0]],
        };
        assert!((s.at([0.3, 0.6]) - (0.3 + 2.0 * 0.6)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn shipped_nonlinearities_are_monotone(u in -50.0f64..50.0, lambda in 0.01f64..10.0) {
            for rho in [Nonlinearity::Zero, Nonlinearity::Linear { lambda }, Nonlinearity::Cubic,
                        Nonlinearity::LinearPlusCubic { lambda }, Nonlinearity::Atan] {
                prop_assert_eq!(rho.eval(0.0), 0.0);
                prop_assert!(rho.deriv(u) >= 0.0);
                let t = 1e-6 * (1.0 + u.abs());
                let fd = (rho.eval(u + t) - rho.eval(u - t)) / (2.0 * t);
                prop_assert!((fd - rho.deriv(u)).abs() <= 1e-5 * (1.0 + rho.deriv(u).abs()));
            }
        }
    }
}

use crate::error::{Error, Result};
use crate::mesh::Mesh2D;
use crate::Point;
use serde::{Deserialize, Serialize};

/// Continuous piecewise-linear function given by its vertex values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodalField {
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(values: Vec<f64>) -> Self {
        NodalField { values }
    }

    pub fn zeros(n: usize) -> Self {
        NodalField {
            values: vec![0.0; n],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh2D, f: impl Fn(Point) -> f64) -> Self {
        NodalField {
            values: mesh.vertices().iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, mesh: &Mesh2D) -> Result<()> {
        if self.values.len() != mesh.num_vertices() {
            return Err(Error::Argument(format!(
                "field has {} values but the mesh has {} vertices",
                self.values.len(),
                mesh.num_vertices()
            )));
        }
        Ok(())
    }

    /// Value inside triangle `t` at barycentric coordinates `lam`.
    pub fn eval_in(&self, mesh: &Mesh2D, t: usize, lam: [f64; 3]) -> f64 {
        let tri = mesh.triangles()[t];
        (0..3).map(|k| lam[k] * self.values[tri[k]]).sum()
    }

    pub fn eval(&self, mesh: &Mesh2D, x: Point) -> Result<f64> {
        self.check(mesh)?;
        let (t, lam) = mesh.locate_point(x)?;
        Ok(self.eval_in(mesh, t, lam))
    }

    /// Constant gradient on triangle `t`.
    pub fn gradient_on(&self, mesh: &Mesh2D, t: usize) -> [f64; 2] {
        let g = basis_gradients(mesh, t);
        let tri = mesh.triangles()[t];
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += self.values[tri[k]] * g[k][0];
            out[1] += self.values[tri[k]] * g[k][1];
        }
        out
    }

    pub fn sub(&self, other: &NodalField) -> NodalField {
        NodalField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &NodalField) -> NodalField {
        NodalField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> NodalField {
        NodalField {
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Gradients of the three hat functions on triangle `t`.
pub fn basis_gradients(mesh: &Mesh2D, t: usize) -> [[f64; 2]; 3] {
    let [p0, p1, p2] = mesh.coords(t);
    let two_a = 2.0 * mesh.signed_area(t);
    [
        [(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a],
        [(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a],
        [(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a],
    ]
}

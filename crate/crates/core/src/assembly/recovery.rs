use super::NodalField;
use crate::error::{Error, Result};
use crate::mesh::{dist, Mesh2D};
use crate::Point;
use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;

/// Gradient and value at a point from a quadratic least-squares patch fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovery {
    pub gradient: [f64; 2],
    pub value: f64,
    pub radius: f64,
    pub vertices: usize,
}

/// Gradient of `field` at `z`; the patch radius defaults to twice the
/// size of the triangle containing `z`.
pub fn recover_gradient(
    mesh: &Mesh2D,
    field: &NodalField,
    z: Point,
    radius: Option<f64>,
) -> Result<[f64; 2]> {
    recover_gradient_with(mesh, field, z, radius).map(|r| r.gradient)
}

pub fn recover_gradient_with(
    mesh: &Mesh2D,
    field: &NodalField,
    z: Point,
    radius: Option<f64>,
) -> Result<Recovery> {
    field.check(mesh)?;
    let (t0, lam) = mesh.locate_point(z)?;
    let r = radius.unwrap_or(2.0 * mesh.diameter(t0));
    if !(r > 0.0) {
        return Err(Error::Argument(format!(
            "patch radius must be positive, got {r}"
        )));
    }
    let region = mesh.region(t0);
    let pts = mesh.vertices();
    let adj = mesh.adjacency();
    let mut inside = vec![false; mesh.num_vertices()];
    let mut queue: VecDeque<usize> = mesh.triangles()[t0].iter().copied().collect();
    let mut patch = Vec::new();
    for &v in &mesh.triangles()[t0] {
        inside[v] = true;
    }
    // breadth-first growth keeps the scan local to the ball
    let mut seen = inside.clone();
    while let Some(v) = queue.pop_front() {
        if dist(pts[v], z) <= r {
            patch.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    for v in patch.iter() {
        inside[*v] = true;
    }
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        if mesh.region(t) != region && tri.iter().any(|&v| inside[v] && dist(pts[v], z) <= r) {
            return Err(Error::Locality {
                x: z[0],
                y: z[1],
                radius: r,
            });
        }
    }
    if patch.len() < 6 {
        return Err(Error::Patch {
            x: z[0],
            y: z[1],
            found: patch.len(),
        });
    }
    patch.sort_unstable();
    let a = DMatrix::from_fn(patch.len(), 6, |i, j| {
        let p = pts[patch[i]];
        let (s, t) = ((p[0] - z[0]) / r, (p[1] - z[1]) / r);
        [1.0, s, t, s * s, s * t, t * t][j]
    });
    let b = DVector::from_iterator(patch.len(), patch.iter().map(|&v| field.values()[v]));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let c = svd
        .solve(&b, 1e-12 * smax)
        .map_err(|e| Error::Degenerate(format!("patch fit failed: {e}")))?;
    if svd.rank(1e-10 * smax) < 6 {
        return Err(Error::Patch {
            x: z[0],
            y: z[1],
            found: patch.len(),
        });
    }
    Ok(Recovery {
        gradient: [c[1] / r, c[2] / r],
        value: field.eval_in(mesh, t0, lam),
        radius: r,
        vertices: patch.len(),
    })
}

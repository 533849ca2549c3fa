use super::Mesh2D;
use crate::error::{Error, Result};
use crate::Point;

/// Uniform bucket grid over the mesh bounding box. Each cell lists the
/// triangles whose bounding box meets it, in increasing id order.
#[derive(Debug, Clone)]
pub struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    tol: f64,
}

impl Locator {
    pub fn new(mesh: &Mesh2D) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let w = (hi[0] - lo[0]).max(f64::MIN_POSITIVE);
        let hgt = (hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let n = mesh.num_triangles().max(1) as f64;
        let cell = (w * hgt / n).sqrt().max(1e-300);
        let nx = ((w / cell).ceil() as usize).clamp(1, 4096);
        let ny = ((hgt / cell).ceil() as usize).clamp(1, 4096);
        let cell = (w / nx as f64).max(hgt / ny as f64);
        let mut buckets = vec![Vec::new(); nx * ny];
        let clampi = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        for t in 0..mesh.num_triangles() {
            let c = mesh.coords(t);
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in c {
                for d in 0..2 {
                    a[d] = a[d].min(p[d]);
                    b[d] = b[d].max(p[d]);
                }
            }
            let (i0, i1) = (
                clampi((a[0] - lo[0]) / cell, nx),
                clampi((b[0] - lo[0]) / cell, nx),
            );
            let (j0, j1) = (
                clampi((a[1] - lo[1]) / cell, ny),
                clampi((b[1] - lo[1]) / cell, ny),
            );
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        let tol = 1e-12 * w.max(hgt);
        Locator {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
            tol,
        }
    }

    /// Lowest-numbered triangle containing `x` (boundaries included) together
    /// with clamped, renormalised barycentric coordinates.
    pub fn locate(&self, mesh: &Mesh2D, x: Point) -> Result<(usize, [f64; 3])> {
        let fi = (x[0] - self.origin[0]) / self.cell;
        let fj = (x[1] - self.origin[1]) / self.cell;
        let slack = self.tol / self.cell;
        if !(fi >= -slack
            && fj >= -slack
            && fi <= self.nx as f64 + slack
            && fj <= self.ny as f64 + slack)
        {
            return Err(Error::Lookup { x: x[0], y: x[1] });
        }
        let i = (fi.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fj.floor().max(0.0) as usize).min(self.ny - 1);
        for &t in &self.buckets[j * self.nx + i] {
            let lam = barycentric(mesh.coords(t), x);
            let scale = mesh.diameter(t).max(self.tol);
            if lam.iter().all(|&l| l * scale >= -self.tol) {
                let mut l = lam.map(|v| v.max(0.0));
                let s: f64 = l.iter().sum();
                l.iter_mut().for_each(|v| *v /= s);
                return Ok((t, l));
            }
        }
        Err(Error::Lookup { x: x[0], y: x[1] })
    }
}

/// Barycentric coordinates of `x` with respect to triangle `c`.
pub fn barycentric(c: [Point; 3], x: Point) -> [f64; 3] {
    let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    let l1 =
        ((x[0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (x[1] - c[0][1])) / det;
    let l2 =
        ((c[1][0] - c[0][0]) * (x[1] - c[0][1]) - (x[0] - c[0][0]) * (c[1][1] - c[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

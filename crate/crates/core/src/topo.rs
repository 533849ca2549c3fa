//! Closed-form topological derivative at points and on grids.

use crate::assembly::{recover_gradient_with, NodalField};
use crate::error::{Error, Result};
use crate::exterior::{
    disk_polarisation_analytic, polarisation_matrix, ExteriorNumerics, PolarisationMatrix,
};
use crate::material::{dot, mat_sub, mat_vec, transpose, Mat2, MaterialSpec, Mode, Tensor};
use crate::mesh::{
    distance_to_polygon, distance_to_segment, InclusionShape, Marker, Mesh2D, Region, ShapeKind,
};
use crate::Point;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

/// Where polarisation matrices come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolSource {
    #[default]
    Numeric,
    AnalyticDisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TdOptions {
    /// Patch radius in units of the size of the triangle containing `z`.
    pub patch_factor: f64,
    /// Exclusion distance in units of the patch radius.
    pub exclusion_factor: f64,
    pub pol_source: PolSource,
    pub exterior: ExteriorNumerics,
}

impl Default for TdOptions {
    fn default() -> Self {
        TdOptions {
            patch_factor: 2.0,
            exclusion_factor: 2.0,
            pol_source: PolSource::Numeric,
            exterior: ExteriorNumerics::default(),
        }
    }
}

/// Memoised polarisation matrices keyed on the frozen coefficients (rounded
/// to 12 significant digits), the shape, the mode and the numerics.
#[derive(Debug, Default)]
pub struct PolarisationCache {
    map: Mutex<HashMap<String, Arc<Mutex<Option<PolarisationMatrix>>>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl PolarisationCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    /// Number of matrices actually computed.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }

    pub fn get(
        &self,
        beta1: &Mat2,
        beta2: &Mat2,
        shape: &InclusionShape,
        mode: Mode,
        options: &TdOptions,
    ) -> Result<PolarisationMatrix> {
        let round = |m: &Mat2| {
            m.iter()
                .flatten()
                .map(|v| format!("{v:.11e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let key = format!(
            "{}|{}|{}|{:?}|{}",
            if mode == Mode::Extremal {
                String::new()
            } else {
                round(beta1)
            },
            round(beta2),
            serde_json::to_string(&shape.reference()).unwrap_or_default(),
            mode,
            serde_json::to_string(&(options.pol_source, options.exterior)).unwrap_or_default(),
        );
        let slot = self
            .map
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_default()
            .clone();
        let mut slot = slot.lock().expect("cache slot lock");
        if let Some(p) = *slot {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(p);
        }
        let p = match options.pol_source {
            PolSource::Numeric => {
                polarisation_matrix(beta1, beta2, shape, mode, &options.exterior)?
            }
            PolSource::AnalyticDisk => {
                if !matches!(shape.kind, ShapeKind::Disk { .. }) {
                    return Err(Error::Argument(
                        "analytic polarisation is only available for disks".into(),
                    ));
                }
                // scale invariant, so any disk radius is fine
                disk_polarisation_analytic(&Tensor::Matrix(*beta1), &Tensor::Matrix(*beta2), mode)?
            }
        };
        self.misses.fetch_add(1, Ordering::SeqCst);
        *slot = Some(p);
        Ok(p)
    }
}

/// Topological derivative at one point with its two constituent terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TdSample {
    pub z: Point,
    pub u_z: f64,
    pub q_z: f64,
    pub grad_u: [f64; 2],
    pub grad_q: [f64; 2],
    pub pol: PolarisationMatrix,
    pub zeta: [f64; 2],
    pub term_dlg: f64,
    pub term_r: f64,
    pub value: f64,
}

/// Pointwise data recovered from the discrete fields.
struct PointData {
    u: f64,
    q: f64,
    gu: [f64; 2],
    gq: [f64; 2],
}

fn point_data(
    mesh: &Mesh2D,
    u: &NodalField,
    q: &NodalField,
    z: Point,
    options: &TdOptions,
) -> Result<PointData> {
    let (t, _) = mesh.locate_point(z)?;
    if mesh.region(t) != Region::Matrix {
        return Err(Error::Argument(format!(
            "z = ({}, {}) is not in the matrix phase",
            z[0], z[1]
        )));
    }
    let r = options.patch_factor * mesh.diameter(t);
    let ru = recover_gradient_with(mesh, u, z, Some(r))?;
    let rq = recover_gradient_with(mesh, q, z, Some(r))?;
    Ok(PointData {
        u: ru.value,
        q: rq.value,
        gu: ru.gradient,
        gq: rq.gradient,
    })
}

/// Transmission case: `dlG = (b1 - b2) grad u . grad q + (rho1(u) - rho2(u)) q
/// - (f1 - f2) q` and `R = (b1 - b2) grad u . P zeta` with `zeta = -(b1 - b2)^T grad q`.
pub fn td_at_point(
    mesh: &Mesh2D,
    u: &NodalField,
    q: &NodalField,
    material: &MaterialSpec,
    shape: &InclusionShape,
    z: Point,
    options: &TdOptions,
    cache: &PolarisationCache,
) -> Result<TdSample> {
    let d = point_data(mesh, u, q, z, options)?;
    let (b1, b2) = (material.beta1.at(z), material.beta2.at(z));
    let db = mat_sub(&b1, &b2);
    let flux = mat_vec(&db, d.gu);
    let term_dlg = dot(flux, d.gq) + (material.rho1.eval(d.u) - material.rho2.eval(d.u)) * d.q
        - (material.f1.at(z) - material.f2.at(z)) * d.q;
    let pol = cache.get(&b1, &b2, shape, Mode::Transmission, options)?;
    let g = mat_vec(&transpose(&db), d.gq);
    let zeta = [-g[0], -g[1]];
    let term_r = dot(flux, pol.apply(zeta));
    Ok(TdSample {
        z,
        u_z: d.u,
        q_z: d.q,
        grad_u: d.gu,
        grad_q: d.gq,
        pol,
        zeta,
        term_dlg,
        term_r,
        value: term_dlg + term_r,
    })
}

/// Void case: `dlG = -b2 grad u . grad q - rho2(u) q + f2 q - u^2` and
/// `R = -b2 grad u . P zeta` with `zeta = b2^T grad q`. The `-u^2` term is the
/// cost removed with the void.
pub fn td_at_point_extremal(
    mesh: &Mesh2D,
    u: &NodalField,
    q: &NodalField,
    material: &MaterialSpec,
    shape: &InclusionShape,
    z: Point,
    options: &TdOptions,
    cache: &PolarisationCache,
) -> Result<TdSample> {
    let d = point_data(mesh, u, q, z, options)?;
    let b2 = material.beta2.at(z);
    let flux = mat_vec(&b2, d.gu);
    let term_dlg =
        -dot(flux, d.gq) - material.rho2.eval(d.u) * d.q + material.f2.at(z) * d.q - d.u * d.u;
    let pol = cache.get(&b2, &b2, shape, Mode::Extremal, options)?;
    let zeta = mat_vec(&transpose(&b2), d.gq);
    let term_r = -dot(flux, pol.apply(zeta));
    Ok(TdSample {
        z,
        u_z: d.u,
        q_z: d.q,
        grad_u: d.gu,
        grad_q: d.gq,
        pol,
        zeta,
        term_dlg,
        term_r,
        value: term_dlg + term_r,
    })
}

pub fn td_at_point_mode(
    mesh: &Mesh2D,
    u: &NodalField,
    q: &NodalField,
    material: &MaterialSpec,
    shape: &InclusionShape,
    z: Point,
    mode: Mode,
    options: &TdOptions,
    cache: &PolarisationCache,
) -> Result<TdSample> {
    match mode {
        Mode::Transmission => td_at_point(mesh, u, q, material, shape, z, options, cache),
        Mode::Extremal => td_at_point_extremal(mesh, u, q, material, shape, z, options, cache),
    }
}

/// Single-expression form for scalar coefficients:
/// `(b1 - b2) grad u . (I - P (b1 - b2)) grad q + (rho1 - rho2) q - (f1 - f2) q`.
pub fn combined_value(sample: &TdSample, material: &MaterialSpec) -> Result<f64> {
    let z = sample.z;
    let (b1, b2) = match (material.beta1.as_scalar(), material.beta2.as_scalar()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Argument(
                "combined form needs scalar coefficients".into(),
            ))
        }
    };
    let db = b1 - b2;
    let pg = sample.pol.apply(sample.grad_q);
    let inner = [sample.grad_q[0] - db * pg[0], sample.grad_q[1] - db * pg[1]];
    Ok(db * dot(sample.grad_u, inner)
        + (material.rho1.eval(sample.u_z) - material.rho2.eval(sample.u_z)) * sample.q_z
        - (material.f1.at(z) - material.f2.at(z)) * sample.q_z)
}

/// Cell-centred evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: Point,
    pub max: Point,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push([
                    self.min[0] + (i as f64 + 0.5) * (self.max[0] - self.min[0]) / self.nx as f64,
                    self.min[1] + (j as f64 + 0.5) * (self.max[1] - self.min[1]) / self.ny as f64,
                ]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TdPoint {
    pub z: Point,
    pub sample: Option<TdSample>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TdField {
    pub grid: GridSpec,
    /// Row-major over the grid, `x` fastest.
    pub points: Vec<TdPoint>,
}

impl TdField {
    /// Index and value of the smallest evaluated point.
    pub fn argmin(&self) -> Option<(usize, f64)> {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.sample.as_ref().map(|s| (i, s.value)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn evaluated(&self) -> usize {
        self.points.iter().filter(|p| p.sample.is_some()).count()
    }
}

/// Why `z` cannot be evaluated, if it cannot.
fn exclusion_reason(mesh: &Mesh2D, z: Point, options: &TdOptions) -> Option<String> {
    let (t, _) = match mesh.locate_point(z) {
        Ok(v) => v,
        Err(_) => return Some("outside the mesh".into()),
    };
    if mesh.region(t) != Region::Matrix {
        return Some("inside an inclusion".into());
    }
    let reach = options.exclusion_factor * options.patch_factor * mesh.diameter(t);
    let pts = mesh.vertices();
    let near_outer = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.marker == Marker::Outer)
        .any(|e| distance_to_segment(z, pts[e.vertices[0]], pts[e.vertices[1]]) < reach);
    if near_outer {
        return Some("too close to the outer boundary".into());
    }
    let near_interface = mesh.shapes().iter().enumerate().any(|(k, s)| {
        let is_interface = (0..mesh.num_triangles())
            .any(|t| mesh.owner(t) == Some(k) && mesh.region(t) != Region::Matrix);
        is_interface && distance_to_polygon(z, &s.polygon) < reach
    });
    if near_interface {
        return Some("too close to an interface".into());
    }
    None
}

/// Topological derivative over a grid. Points too close to the outer
/// boundary or an interface, or inside an inclusion, are skipped.
#[allow(clippy::too_many_arguments)]
pub fn td_field(
    mesh: &Mesh2D,
    u: &NodalField,
    q: &NodalField,
    material: &MaterialSpec,
    shape: &InclusionShape,
    grid: &GridSpec,
    mode: Mode,
    options: &TdOptions,
    cache: &PolarisationCache,
) -> TdField {
    use rayon::prelude::*;
    let points = grid
        .points()
        .into_par_iter()
        .map(|z| {
            if let Some(reason) = exclusion_reason(mesh, z, options) {
                return TdPoint {
                    z,
                    sample: None,
                    skipped: Some(reason),
                };
            }
            match td_at_point_mode(mesh, u, q, material, shape, z, mode, options, cache) {
                Ok(s) => TdPoint {
                    z,
                    sample: Some(s),
                    skipped: None,
                },
                Err(e) => TdPoint {
                    z,
                    sample: None,
                    skipped: Some(e.to_string()),
                },
            }
        })
        .collect();
    TdField {
        grid: *grid,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{Nonlinearity, Source};
    use crate::mesh::{build_rect_mesh, Rect};
    use crate::pde::{solve_adjoint, solve_state, solve_state_extremal, NewtonSettings};

    fn setup(
        material: &MaterialSpec,
        fitted: &[InclusionShape],
    ) -> (Mesh2D, NodalField, NodalField) {
        let m = build_rect_mesh(&Rect::unit_square(), 0.03, fitted).unwrap();
        let s = NewtonSettings::default();
        let u = solve_state(&m, material, &s).unwrap().u;
        let q = solve_adjoint(&m, material, &u, Mode::Transmission, &s).unwrap();
        (m, u, q)
    }

    fn benchmark() -> MaterialSpec {
        MaterialSpec {
            beta1: Tensor::Scalar(2.0),
            beta2: Tensor::Scalar(1.0),
            rho1: Nonlinearity::Cubic,
            rho2: Nonlinearity::Linear { lambda: 1.0 },
            f1: Source::constant(1.0),
            f2: Source::constant(1.0),
        }
    }

    fn disk() -> InclusionShape {
        InclusionShape::disk([0.0, 0.0], 1.0)
    }

    #[test]
    fn zero_contrast_is_null() {
        let mat = MaterialSpec::homogeneous(1.0, Nonlinearity::Cubic, 1.0);
        let (m, u, q) = setup(&mat, &[]);
        let s = td_at_point(
            &m,
            &u,
            &q,
            &mat,
            &disk(),
            [0.6, 0.6],
            &TdOptions::default(),
            &PolarisationCache::new(),
        )
        .unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.value, s.term_dlg + s.term_r);
    }

    #[test]
    fn disk_gradient_coefficient_is_two_thirds() {
        let mut mat = benchmark();
        mat.rho1 = mat.rho2;
        let (m, u, q) = setup(&mat, &[InclusionShape::disk([0.3, 0.3], 0.15)]);
        let cache = PolarisationCache::new();
        let s = td_at_point(
            &m,
            &u,
            &q,
            &mat,
            &disk(),
            [0.7, 0.7],
            &TdOptions::default(),
            &cache,
        )
        .unwrap();
        let expected = 2.0 / 3.0 * dot(s.grad_u, s.grad_q);
        assert!(
            (s.value - expected).abs() < 0.02 * expected.abs(),
            "{} vs {expected}",
            s.value
        );
        let combined = combined_value(&s, &mat).unwrap();
        assert!((combined - s.value).abs() < 1e-12 * s.value.abs().max(1e-300));
        let analytic = TdOptions {
            pol_source: PolSource::AnalyticDisk,
            ..TdOptions::default()
        };
        let a = td_at_point(&m, &u, &q, &mat, &disk(), [0.7, 0.7], &analytic, &cache).unwrap();
        assert!((a.value - expected).abs() < 1e-12 * expected.abs());
        assert!(td_at_point(
            &m,
            &u,
            &q,
            &mat,
            &disk(),
            [0.3, 0.3],
            &TdOptions::default(),
            &cache
        )
        .is_err());
    }

    #[test]
    fn extremal_disk_doubles_gradient_term() {
        let mat = MaterialSpec::homogeneous(1.0, Nonlinearity::Atan, 1.0);
        let m = build_rect_mesh(&Rect::unit_square(), 0.03, &[]).unwrap();
        let s = NewtonSettings::default();
        let u = solve_state_extremal(&m, &mat, &s).unwrap().u;
        let q = solve_adjoint(&m, &mat, &u, Mode::Extremal, &s).unwrap();
        let cache = PolarisationCache::new();
        let t = td_at_point_extremal(
            &m,
            &u,
            &q,
            &mat,
            &disk(),
            [0.5, 0.5],
            &TdOptions::default(),
            &cache,
        )
        .unwrap();
        let grad = -2.0 * dot(t.grad_u, t.grad_q);
        let rest = -t.u_z.atan() * t.q_z + t.q_z - t.u_z * t.u_z;
        assert!((t.value - rest - grad).abs() <= 0.02 * grad.abs().max(1e-12) + 1e-12);
        // symmetric data: mirror points agree
        let a = td_at_point_extremal(
            &m,
            &u,
            &q,
            &mat,
            &disk(),
            [0.35, 0.6],
            &TdOptions::default(),
            &cache,
        )
        .unwrap();
        let b = td_at_point_extremal(
            &m,
            &u,
            &q,
            &mat,
            &disk(),
            [0.65, 0.6],
            &TdOptions::default(),
            &cache,
        )
        .unwrap();
        assert!((a.value - b.value).abs() <= 1e-3 * a.value.abs());
        let mut zero = mat.clone();
        zero.f2 = Source::constant(0.0);
        let u0 = solve_state_extremal(&m, &zero, &s).unwrap().u;
        let q0 = solve_adjoint(&m, &zero, &u0, Mode::Extremal, &s).unwrap();
        let t0 = td_at_point_extremal(
            &m,
            &u0,
            &q0,
            &zero,
            &disk(),
            [0.5, 0.5],
            &TdOptions::default(),
            &cache,
        )
        .unwrap();
        assert_eq!(t0.value, 0.0);
    }

    #[test]
    fn field_solves_one_polarisation_and_scales() {
        let bounds = Rect::new([0.0, 0.0], [4.0, 4.0]);
        let mat = benchmark();
        let m = build_rect_mesh(&bounds, 0.1, &[]).unwrap();
        let s = NewtonSettings::default();
        let u = solve_state(&m, &mat, &s).unwrap().u;
        let q = solve_adjoint(&m, &mat, &u, Mode::Transmission, &s).unwrap();
        let grid = GridSpec {
            min: [1.0, 1.0],
            max: [3.0, 3.0],
            nx: 32,
            ny: 32,
        };
        let cache = PolarisationCache::new();
        let f = td_field(
            &m,
            &u,
            &q,
            &mat,
            &disk(),
            &grid,
            Mode::Transmission,
            &TdOptions::default(),
            &cache,
        );
        assert_eq!(
            f.evaluated(),
            1024,
            "{:?}",
            f.points.iter().find_map(|p| p.skipped.clone())
        );
        assert_eq!(cache.misses(), 1);
        assert_eq!(cache.hits(), 1023);
        let f2 = td_field(
            &m,
            &u,
            &q.scaled(2.0),
            &mat,
            &disk(),
            &grid,
            Mode::Transmission,
            &TdOptions::default(),
            &cache,
        );
        assert_eq!(f.argmin().unwrap().0, f2.argmin().unwrap().0);
        for (a, b) in f.points.iter().zip(&f2.points) {
            let (a, b) = (a.sample.as_ref().unwrap(), b.sample.as_ref().unwrap());
            assert!((2.0 * a.value - b.value).abs() <= 1e-12 * b.value.abs());
        }
    }

    #[test]
    fn points_inside_or_near_inclusions_are_skipped() {
        let mat = benchmark();
        let (m, u, q) = setup(&mat, &[InclusionShape::disk([0.3, 0.3], 0.15)]);
        let grid = GridSpec {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
            nx: 8,
            ny: 8,
        };
        let opts = TdOptions {
            pol_source: PolSource::AnalyticDisk,
            ..TdOptions::default()
        };
        let f = td_field(
            &m,
            &u,
            &q,
            &mat,
            &disk(),
            &grid,
            Mode::Transmission,
            &opts,
            &PolarisationCache::new(),
        );
        let centre = f
            .points
            .iter()
            .find(|p| (p.z[0] - 0.3125).abs() < 1e-12 && (p.z[1] - 0.3125).abs() < 1e-12)
            .unwrap();
        assert_eq!(centre.skipped.as_deref(), Some("inside an inclusion"));
        assert!(f.evaluated() > 0);
    }
}

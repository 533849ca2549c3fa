//! Point placement and constrained Delaunay triangulation.
//!
//! Fitted boundaries are inserted as constraint edges. Around each fitted
//! shape we place rings of Steiner points (radially scaled copies of the
//! shape polygon) whose spacing grows geometrically from the interface
//! spacing to the background size; the rest of the domain is filled with a
//! triangular lattice. Delaunay refinement then removes poorly shaped
//! triangles without touching the constraint edges.

use super::shape::{dist, distance_to_polygon, point_in_polygon, segments_intersect};
use super::{BoundaryEdge, FittedShape, InclusionShape, Marker, Mesh2D};
use crate::error::{Error, Result};
use crate::Point;
use serde::{Deserialize, Serialize};
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Self {
        Rect { min, max }
    }

    pub fn unit_square() -> Self {
        Rect::new([0.0, 0.0], [1.0, 1.0])
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, x: Point) -> bool {
        x[0] >= self.min[0] && x[0] <= self.max[0] && x[1] >= self.min[1] && x[1] <= self.max[1]
    }

    /// Distance from an interior point to the rectangle boundary.
    pub fn inner_distance(&self, x: Point) -> f64 {
        (x[0] - self.min[0])
            .min(self.max[0] - x[0])
            .min(x[1] - self.min[1])
            .min(self.max[1] - x[1])
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.min,
            [self.max[0], self.min[1]],
            self.max,
            [self.min[0], self.max[1]],
        ]
    }
}

/// Controls for [`build_rect_mesh_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshOptions {
    /// Background edge length.
    pub h: f64,
    /// Segments used to polygonise disks and ellipses.
    pub n_seg: usize,
    /// Interface spacing as a fraction of each shape's scale.
    pub interface_fraction: f64,
    /// Geometric growth of the ring spacing away from a fitted boundary.
    pub grading: f64,
    /// Minimum angle enforced by Delaunay refinement, in degrees.
    pub min_angle_deg: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions {
            h: 0.05,
            n_seg: 64,
            interface_fraction: 0.125,
            grading: 1.25,
            min_angle_deg: 20.0,
        }
    }
}

/// Controls for [`build_ball_mesh_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BallOptions {
    pub interface_h: f64,
    pub grading: f64,
    pub n_seg: usize,
    pub min_angle_deg: f64,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions {
            interface_h: 0.05,
            grading: 1.2,
            n_seg: 64,
            min_angle_deg: 20.0,
        }
    }
}

/// Fitted mesh of `bounds` with default options and background size `h`.
pub fn build_rect_mesh(bounds: &Rect, h: f64, fitted: &[InclusionShape]) -> Result<Mesh2D> {
    build_rect_mesh_with(
        bounds,
        fitted,
        &MeshOptions {
            h,
            ..MeshOptions::default()
        },
    )
}

pub fn build_rect_mesh_with(
    bounds: &Rect,
    fitted: &[InclusionShape],
    opts: &MeshOptions,
) -> Result<Mesh2D> {
    let h = opts.h;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!(
            "mesh size must be positive, got {h}"
        )));
    }
    if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
        return Err(Error::Argument("empty bounding rectangle".into()));
    }
    check_options(opts.grading, opts.n_seg)?;
    let polygons = fitted_polygons(fitted, opts.n_seg)?;
    for (s, poly) in fitted.iter().zip(&polygons) {
        let clearance = poly
            .iter()
            .map(|&p| bounds.inner_distance(p))
            .fold(f64::INFINITY, f64::min);
        if !(clearance >= 2.0 * h) {
            return Err(Error::Geometry(format!(
                "shape at ({}, {}) is closer than 2h = {} to the domain boundary",
                s.center[0],
                s.center[1],
                2.0 * h
            )));
        }
    }
    check_disjoint(&polygons)?;

    let mut pts = PointSet::new(h);
    let mut constraints = Vec::new();
    let outer: Vec<Point> = resample_edges(&bounds.corners(), h);
    let outer_ids = pts.push_constraint_loop(&outer, &mut constraints);
    let mut shape_ids = Vec::new();
    let spacings: Vec<f64> = fitted
        .iter()
        .map(|s| (s.scale * opts.interface_fraction).min(h))
        .collect();
    for (poly, &t) in polygons.iter().zip(&spacings) {
        let fine = resample_edges(poly, t);
        shape_ids.push(pts.push_constraint_loop(&fine, &mut constraints));
    }

    let inside = |x: Point, s: f64| bounds.inner_distance(x) >= 0.45 * s;
    // finest shapes first so their rings win the proximity test
    let mut order: Vec<usize> = (0..fitted.len()).collect();
    order.sort_by(|&a, &b| spacings[a].total_cmp(&spacings[b]));
    for &k in &order {
        for (p, s) in shape_rings(&fitted[k], &polygons[k], spacings[k], opts.grading, h, None) {
            if inside(p, s)
                && polygons
                    .iter()
                    .all(|q| distance_to_polygon(p, q) >= 0.45 * s)
            {
                pts.try_push(p, 0.5 * s);
            }
        }
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let ny = (bounds.height() / dy).ceil() as usize;
    let nx = (bounds.width() / h).ceil() as usize;
    for j in 1..ny {
        let y = bounds.min[1] + j as f64 * bounds.height() / ny as f64;
        let shift = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..=nx {
            let x = bounds.min[0] + (i as f64 + shift) * bounds.width() / nx as f64;
            let p = [x, y];
            if inside(p, h)
                && polygons
                    .iter()
                    .all(|q| distance_to_polygon(p, q) >= 0.45 * h)
            {
                pts.try_push(p, 0.5 * h);
            }
        }
    }
    let max_area = 3f64.sqrt() / 4.0 * h * h;
    triangulate(
        pts,
        constraints,
        &outer_ids,
        &shape_ids,
        fitted,
        polygons,
        max_area,
        opts.min_angle_deg,
    )
}

/// Ball `B_R(0)` fitted to `shape` (placed at the origin with unit scale).
pub fn build_ball_mesh(radius: f64, shape: &InclusionShape, grading: f64) -> Result<Mesh2D> {
    build_ball_mesh_with(
        radius,
        shape,
        &BallOptions {
            grading,
            ..BallOptions::default()
        },
    )
}

pub fn build_ball_mesh_with(
    radius: f64,
    shape: &InclusionShape,
    opts: &BallOptions,
) -> Result<Mesh2D> {
    check_options(opts.grading, opts.n_seg)?;
    if !(opts.interface_h > 0.0) {
        return Err(Error::Argument("interface spacing must be positive".into()));
    }
    let shape = shape.reference();
    shape.validate()?;
    let diam = shape.diameter(opts.n_seg);
    if !(radius >= 5.0 * diam) {
        return Err(Error::Argument(format!(
            "truncation radius {radius} is below 5 x diam(omega) = {}",
            5.0 * diam
        )));
    }
    let poly = shape.polygon(opts.n_seg);
    let t = opts.interface_h;
    let rings = shape_rings(&shape, &poly, t, opts.grading, f64::INFINITY, Some(radius));
    let s_out = rings
        .iter()
        .filter(|(p, _)| p[0].hypot(p[1]) > 0.5 * radius)
        .map(|&(_, s)| s)
        .fold(t, f64::max)
        .min(2.0 * PI * radius / 24.0);
    let n_out = ((2.0 * PI * radius / s_out).ceil() as usize).max(24);
    let outer: Vec<Point> = (0..n_out)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n_out as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect();

    let mut pts = PointSet::new(4.0 * t);
    let mut constraints = Vec::new();
    let outer_ids = pts.push_constraint_loop(&outer, &mut constraints);
    let fine = resample_edges(&poly, t);
    let shape_ids = vec![pts.push_constraint_loop(&fine, &mut constraints)];
    for (p, s) in rings {
        let r = p[0].hypot(p[1]);
        if r <= radius - 0.6 * s.min(s_out) && distance_to_polygon(p, &poly) >= 0.45 * s {
            pts.try_push(p, 0.5 * s);
        }
    }
    triangulate(
        pts,
        constraints,
        &outer_ids,
        &shape_ids,
        &[shape],
        vec![poly],
        f64::INFINITY,
        opts.min_angle_deg,
    )
}

fn check_options(grading: f64, n_seg: usize) -> Result<()> {
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::Argument(format!(
            "grading factor must be >= 1, got {grading}"
        )));
    }
    if n_seg < 8 {
        return Err(Error::Argument(format!(
            "need at least 8 boundary segments, got {n_seg}"
        )));
    }
    Ok(())
}

fn fitted_polygons(fitted: &[InclusionShape], n_seg: usize) -> Result<Vec<Vec<Point>>> {
    fitted
        .iter()
        .map(|s| {
            s.validate()?;
            Ok(s.polygon(n_seg))
        })
        .collect()
}

fn check_disjoint(polygons: &[Vec<Point>]) -> Result<()> {
    for i in 0..polygons.len() {
        for j in (i + 1)..polygons.len() {
            let (a, b) = (&polygons[i], &polygons[j]);
            let nested = point_in_polygon(a[0], b) || point_in_polygon(b[0], a);
            let crossing = (0..a.len()).any(|p| {
                (0..b.len()).any(|q| {
                    segments_intersect(a[p], a[(p + 1) % a.len()], b[q], b[(q + 1) % b.len()])
                })
            });
            if nested || crossing {
                return Err(Error::Geometry(format!(
                    "fitted shapes {i} and {j} overlap"
                )));
            }
        }
    }
    Ok(())
}

/// Splits every edge of a closed polygon into pieces no longer than `spacing`.
/// Original vertices are kept; inserted ones are collinear with their edge.
fn resample_edges(poly: &[Point], spacing: f64) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let m = ((dist(a, b) / spacing) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        for k in 0..m {
            let t = k as f64 / m as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Points at equal arc-length spacing along a closed polygon.
fn resample_closed(poly: &[Point], spacing: f64, phase: f64) -> Vec<Point> {
    let n = poly.len();
    let lens: Vec<f64> = (0..n).map(|i| dist(poly[i], poly[(i + 1) % n])).collect();
    let perimeter: f64 = lens.iter().sum();
    let count = ((perimeter / spacing).round() as usize).max(6);
    let step = perimeter / count as f64;
    let mut out = Vec::with_capacity(count);
    let (mut edge, mut start) = (0usize, 0.0);
    for k in 0..count {
        let s = (k as f64 + phase) * step;
        while edge + 1 < n && start + lens[edge] < s {
            start += lens[edge];
            edge += 1;
        }
        let t = if lens[edge] > 0.0 {
            ((s - start) / lens[edge]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (a, b) = (poly[edge], poly[(edge + 1) % n]);
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    out
}

/// Candidate Steiner points around one fitted shape with their local spacing.
/// Rings grow outward until the spacing exceeds `h_far`, or until they reach
/// `stop_radius` (measured from the shape centre) when given.
fn shape_rings(
    shape: &InclusionShape,
    poly: &[Point],
    t: f64,
    grading: f64,
    h_far: f64,
    stop_radius: Option<f64>,
) -> Vec<(Point, f64)> {
    let c = shape.center;
    let rel: Vec<Point> = poly.iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect();
    let mean_r = rel.iter().map(|p| p[0].hypot(p[1])).sum::<f64>() / rel.len() as f64;
    let max_r = rel.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    let min_r = rel
        .iter()
        .map(|p| p[0].hypot(p[1]))
        .fold(f64::INFINITY, f64::min);
    let scaled = |lambda: f64| -> Vec<Point> {
        rel.iter()
            .map(|p| [c[0] + lambda * p[0], c[1] + lambda * p[1]])
            .collect()
    };
    let mut out = Vec::new();
    let row = 3f64.sqrt() / 2.0;

    // outward
    let (mut s, mut d, mut k) = (t, 0.0, 0usize);
    loop {
        let s_next = s * grading;
        d += 0.5 * (s + s_next.min(h_far)) * row;
        s = s_next.min(h_far);
        k += 1;
        let lambda = 1.0 + d / mean_r;
        if let Some(r) = stop_radius {
            if lambda * max_r + 0.5 * s >= r {
                break;
            }
        }
        let phase = if k % 2 == 1 { 0.5 } else { 0.0 };
        out.extend(
            resample_closed(&scaled(lambda), s, phase)
                .into_iter()
                .map(|p| (p, s)),
        );
        if s >= h_far {
            // one ring at the background spacing blends into the lattice
            break;
        }
        if k > 10_000 {
            break;
        }
    }

    // inward
    let (mut s, mut d, mut k) = (t, 0.0, 0usize);
    loop {
        let s_next = s * grading;
        d += 0.5 * (s + s_next) * row;
        s = s_next;
        k += 1;
        let lambda = 1.0 - d / mean_r;
        if lambda * min_r < 0.6 * s {
            break;
        }
        let phase = if k % 2 == 1 { 0.5 } else { 0.0 };
        out.extend(
            resample_closed(&scaled(lambda), s, phase)
                .into_iter()
                .map(|p| (p, s)),
        );
    }
    out.push((c, s));
    out
}

/// Points accepted for triangulation, with a hash grid for proximity tests.
struct PointSet {
    points: Vec<Point>,
    cell: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl PointSet {
    fn new(cell: f64) -> Self {
        PointSet {
            points: Vec::new(),
            cell,
            grid: HashMap::new(),
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        (
            (p[0] / self.cell).floor() as i64,
            (p[1] / self.cell).floor() as i64,
        )
    }

    fn insert(&mut self, p: Point) -> usize {
        let id = self.points.len();
        self.points.push(p);
        let k = self.key(p);
        self.grid.entry(k).or_default().push(id);
        id
    }

    fn push_constraint_loop(
        &mut self,
        loop_pts: &[Point],
        constraints: &mut Vec<[usize; 2]>,
    ) -> Vec<usize> {
        let ids: Vec<usize> = loop_pts.iter().map(|&p| self.insert(p)).collect();
        for i in 0..ids.len() {
            constraints.push([ids[i], ids[(i + 1) % ids.len()]]);
        }
        ids
    }

    /// Inserts `p` unless an existing point lies within `radius`.
    fn try_push(&mut self, p: Point, radius: f64) -> bool {
        let (kx, ky) = self.key(p);
        let reach = (radius / self.cell).ceil() as i64;
        for ix in (kx - reach)..=(kx + reach) {
            for iy in (ky - reach)..=(ky + reach) {
                if let Some(ids) = self.grid.get(&(ix, iy)) {
                    if ids.iter().any(|&i| dist(self.points[i], p) < radius) {
                        return false;
                    }
                }
            }
        }
        self.insert(p);
        true
    }
}

#[allow(clippy::too_many_arguments)]
fn triangulate(
    pts: PointSet,
    constraints: Vec<[usize; 2]>,
    outer_ids: &[usize],
    shape_ids: &[Vec<usize>],
    fitted: &[InclusionShape],
    polygons: Vec<Vec<Point>>,
    max_area: f64,
    min_angle_deg: f64,
) -> Result<Mesh2D> {
    let bits = |p: Point| (p[0].to_bits(), p[1].to_bits());
    let mut shape_of: HashMap<(u64, u64), usize> = HashMap::new();
    for (k, ids) in shape_ids.iter().enumerate() {
        for &i in ids {
            shape_of.insert(bits(pts.points[i]), k);
        }
    }
    let outer_set: std::collections::HashSet<(u64, u64)> =
        outer_ids.iter().map(|&i| bits(pts.points[i])).collect();

    let input: Vec<Point2<f64>> = pts.points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let mut cdt =
        ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(input, constraints)
            .map_err(|e| Error::Geometry(format!("triangulation failed: {e:?}")))?;
    let mut params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(min_angle_deg))
        .keep_constraint_edges();
    if max_area.is_finite() {
        params = params.with_max_allowed_area(max_area);
    }
    let result = cdt.refine(params);
    if !result.refinement_complete {
        log::warn!("mesh refinement stopped at the vertex budget");
    }

    let vertices: Vec<Point> = cdt
        .vertices()
        .map(|v| [v.position().x, v.position().y])
        .collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for f in cdt.inner_faces() {
        let [a, b, c] = f.vertices();
        triangles.push([a.fix().index(), b.fix().index(), c.fix().index()]);
    }
    // deterministic numbering independent of the face iteration order
    let owner: Vec<Option<usize>> = triangles
        .iter()
        .map(|t| {
            let cen = [
                (vertices[t[0]][0] + vertices[t[1]][0] + vertices[t[2]][0]) / 3.0,
                (vertices[t[0]][1] + vertices[t[1]][1] + vertices[t[2]][1]) / 3.0,
            ];
            polygons.iter().position(|poly| point_in_polygon(cen, poly))
        })
        .collect();

    let mut edges = Vec::new();
    for e in cdt.undirected_edges() {
        if !e.is_constraint_edge() {
            continue;
        }
        let [a, b] = e.vertices();
        let (pa, pb) = (vertices[a.fix().index()], vertices[b.fix().index()]);
        let (ka, kb) = (bits(pa), bits(pb));
        let shape = match (shape_of.get(&ka), shape_of.get(&kb)) {
            (Some(&sa), Some(&sb)) if sa == sb => Some(sa),
            _ if outer_set.contains(&ka) && outer_set.contains(&kb) => None,
            _ => {
                return Err(Error::Geometry(
                    "constraint edge split during refinement".into(),
                ))
            }
        };
        edges.push(BoundaryEdge {
            vertices: [a.fix().index(), b.fix().index()],
            marker: if shape.is_some() {
                Marker::Interface
            } else {
                Marker::Outer
            },
            shape,
        });
    }
    let shapes = fitted
        .iter()
        .cloned()
        .zip(polygons)
        .map(|(shape, polygon)| FittedShape { shape, polygon })
        .collect();
    let mesh = Mesh2D::from_parts(vertices, triangles, owner, shapes, edges);
    mesh.check()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Region;

    #[test]
    fn empty_unit_square() {
        let m = build_rect_mesh(&Rect::unit_square(), 0.1, &[]).unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        assert!(m.regions().iter().all(|&r| r == Region::Matrix));
        m.check().unwrap();
        assert!(m.h_max() <= 0.1 * 1.6);
    }

    #[test]
    fn disk_inclusion_area_is_polygon_area() {
        let disk = InclusionShape::disk([0.5, 0.5], 0.1);
        let m = build_rect_mesh(&Rect::unit_square(), 0.1, std::slice::from_ref(&disk)).unwrap();
        let a = m.region_area(Region::Inclusion);
        let n = 64.0;
        let inscribed = 0.5 * n * 0.01 * (2.0 * PI / n).sin();
        assert!((a - inscribed).abs() < 1e-12);
        assert!((a - PI * 0.01).abs() / (PI * 0.01) < 2.0 * 1.6e-3);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_inclusion_is_graded() {
        let eps = 0.01;
        let disk = InclusionShape::disk([0.7, 0.7], eps);
        let m = build_rect_mesh(&Rect::unit_square(), 0.1, &[disk]).unwrap();
        let iface = m.shape_vertices(0);
        let on_iface: std::collections::HashSet<usize> = iface.into_iter().collect();
        let mut worst: f64 = 0.0;
        for t in 0..m.num_triangles() {
            let tri = m.triangles()[t];
            let touching = (0..3).filter(|&k| on_iface.contains(&tri[k])).count();
            if touching >= 2 {
                worst = worst.max(m.diameter(t));
            }
        }
        assert!(worst <= 2.0 * eps / 8.0, "interface triangle size {worst}");
        for e in m.boundary_edges().iter().filter(|e| e.shape.is_some()) {
            let [a, b] = e.vertices;
            assert!(dist(m.vertices()[a], m.vertices()[b]) <= eps / 8.0 + 1e-15);
        }
    }

    #[test]
    fn argument_and_geometry_errors() {
        assert!(matches!(
            build_rect_mesh(&Rect::unit_square(), 0.0, &[]),
            Err(Error::Argument(_))
        ));
        let near_edge = InclusionShape::disk([0.1, 0.5], 0.08);
        assert!(matches!(
            build_rect_mesh(&Rect::unit_square(), 0.05, &[near_edge]),
            Err(Error::Geometry(_))
        ));
        let a = InclusionShape::disk([0.5, 0.5], 0.1);
        let b = InclusionShape::disk([0.55, 0.5], 0.1);
        assert!(matches!(
            build_rect_mesh(&Rect::unit_square(), 0.05, &[a, b]),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn ball_mesh_contracts() {
        let disk = InclusionShape::disk([0.0, 0.0], 1.0);
        let m = build_ball_mesh(50.0, &disk, 1.3).unwrap();
        assert!(m.num_vertices() < 100_000);
        for e in m.boundary_edges().iter().filter(|e| e.shape.is_some()) {
            let [a, b] = e.vertices;
            assert!(dist(m.vertices()[a], m.vertices()[b]) <= 0.05 + 1e-12);
        }
        for t in 0..m.num_triangles() {
            let c = m.centroid(t);
            let inside = c[0].hypot(c[1]) < 1.0;
            assert_eq!(
                m.region(t) == Region::Inclusion,
                inside,
                "triangle {t} at {c:?}"
            );
        }
        let bigger = build_ball_mesh(100.0, &disk, 1.3).unwrap();
        assert!((bigger.num_vertices() as f64) < 2.0 * m.num_vertices() as f64);
        assert!(matches!(
            build_ball_mesh(5.0, &disk, 1.3),
            Err(Error::Argument(_))
        ));
    }
}

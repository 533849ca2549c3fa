//! Boundary-fitted triangulations of the hold-all domain, the inclusion and
//! the truncated exterior ball.

mod generate;
mod locate;
mod refine;
mod shape;

pub use generate::{
    build_ball_mesh, build_ball_mesh_with, build_rect_mesh, build_rect_mesh_with, BallOptions,
    MeshOptions, Rect,
};
pub use locate::Locator;
pub use shape::{
    dist, distance_to_polygon, distance_to_segment, point_in_polygon, polygon_is_simple,
    signed_polygon_area, InclusionShape, ShapeKind,
};

use crate::error::{Error, Result};
use crate::Point;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::OnceLock;

/// Material label of a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Inclusion,
    Matrix,
    Hole,
}

impl Region {
    pub fn code(self) -> i32 {
        match self {
            Region::Matrix => 0,
            Region::Inclusion => 1,
            Region::Hole => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    Outer,
    Interface,
    HoleBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub marker: Marker,
    /// Fitted shape the edge belongs to (`None` on the outer boundary).
    pub shape: Option<usize>,
}

/// A shape the mesh is fitted to, together with its polygonised boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedShape {
    pub shape: InclusionShape,
    pub polygon: Vec<Point>,
}

impl FittedShape {
    pub fn area(&self) -> f64 {
        signed_polygon_area(&self.polygon)
    }
}

/// Conforming triangulation with per-triangle region tags and marked
/// boundary / interface edges. Triangles are counter-clockwise.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
    owner: Vec<Option<usize>>,
    shapes: Vec<FittedShape>,
    edges: Vec<BoundaryEdge>,
    h_max: f64,
    locator: OnceLock<Locator>,
    adjacency: OnceLock<Vec<Vec<usize>>>,
}

impl PartialEq for Mesh2D {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.triangles == other.triangles
            && self.regions == other.regions
            && self.edges == other.edges
    }
}

impl Mesh2D {
    /// Assembles a mesh from raw parts. Triangles owned by a fitted shape are
    /// tagged `Inclusion`, all others `Matrix`.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        owner: Vec<Option<usize>>,
        shapes: Vec<FittedShape>,
        mut edges: Vec<BoundaryEdge>,
    ) -> Self {
        assert_eq!(triangles.len(), owner.len());
        let regions = owner
            .iter()
            .map(|o| {
                if o.is_some() {
                    Region::Inclusion
                } else {
                    Region::Matrix
                }
            })
            .collect();
        edges.sort_by_key(|e| (e.shape.map_or(0, |s| s + 1), e.vertices));
        let h_max = triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| shape::dist(vertices[a], vertices[b]))
            .fold(0.0, f64::max);
        let mut m = Mesh2D {
            vertices,
            triangles,
            regions,
            owner,
            shapes,
            edges,
            h_max,
            locator: OnceLock::new(),
            adjacency: OnceLock::new(),
        };
        m.update_markers();
        m
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, t: usize) -> Region {
        self.regions[t]
    }

    /// Index of the fitted shape containing triangle `t`.
    pub fn owner(&self, t: usize) -> Option<usize> {
        self.owner[t]
    }

    pub fn shapes(&self) -> &[FittedShape] {
        &self.shapes
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn coords(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.coords(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.num_triangles())
            .filter(|&t| self.regions[t] == region)
            .map(|t| self.area(t))
            .sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.coords(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Longest edge of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.coords(t);
        shape::dist(a, b)
            .max(shape::dist(b, c))
            .max(shape::dist(c, a))
    }

    /// Copy of the mesh with every triangle of fitted shape `shape` relabelled.
    /// Geometry and vertex numbering are unchanged.
    pub fn retag_shape(&self, shape: usize, region: Region) -> Result<Mesh2D> {
        if shape >= self.shapes.len() {
            return Err(Error::Argument(format!("mesh has no fitted shape {shape}")));
        }
        let mut m = self.clone();
        for t in 0..m.triangles.len() {
            if m.owner[t] == Some(shape) {
                m.regions[t] = region;
            }
        }
        m.update_markers();
        Ok(m)
    }

    fn update_markers(&mut self) {
        let mut edge_tri: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_tri.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        for e in self.edges.iter_mut() {
            if e.shape.is_none() {
                e.marker = Marker::Outer;
                continue;
            }
            let [a, b] = e.vertices;
            let tris = edge_tri
                .get(&(a.min(b), a.max(b)))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            let holes = tris
                .iter()
                .filter(|&&t| self.regions[t] == Region::Hole)
                .count();
            e.marker = if holes == 1 {
                Marker::HoleBoundary
            } else {
                Marker::Interface
            };
        }
    }

    /// Vertices lying on an edge with the given marker, sorted.
    pub fn marked_vertices(&self, marker: Marker) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.marker == marker)
            .flat_map(|e| e.vertices)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Vertices on the polygon of fitted shape `shape`.
    pub fn shape_vertices(&self, shape: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.shape == Some(shape))
            .flat_map(|e| e.vertices)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Sorted vertex neighbourhoods including the vertex itself; this is the
    /// sparsity pattern of every P1 operator on the mesh.
    pub fn adjacency(&self) -> &[Vec<usize>] {
        self.adjacency.get_or_init(|| {
            let mut adj = vec![Vec::new(); self.vertices.len()];
            for (i, a) in adj.iter_mut().enumerate() {
                a.push(i);
            }
            for t in &self.triangles {
                for &i in t {
                    for &j in t {
                        if i != j {
                            adj[i].push(j);
                        }
                    }
                }
            }
            for a in adj.iter_mut() {
                a.sort_unstable();
                a.dedup();
            }
            adj
        })
    }

    pub fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::new(self))
    }

    /// Triangle containing `x` and its barycentric coordinates.
    pub fn locate_point(&self, x: Point) -> Result<(usize, [f64; 3])> {
        self.locator().locate(self, x)
    }

    /// Uniform red refinement: every triangle is split into four similar ones.
    pub fn refine_uniform(&self) -> Mesh2D {
        refine::refine_uniform(self)
    }

    /// Checks orientation, conformity and interface alignment.
    pub fn check(&self) -> Result<()> {
        for t in 0..self.num_triangles() {
            if !(self.signed_area(t) > 0.0) {
                return Err(Error::Geometry(format!(
                    "triangle {t} has non-positive signed area"
                )));
            }
        }
        let mut edge_tri: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_tri.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let marked: HashMap<(usize, usize), &BoundaryEdge> = self
            .edges
            .iter()
            .map(|e| {
                (
                    (
                        e.vertices[0].min(e.vertices[1]),
                        e.vertices[0].max(e.vertices[1]),
                    ),
                    e,
                )
            })
            .collect();
        for (key, tris) in &edge_tri {
            match tris.len() {
                1 => {
                    if marked.get(key).map(|e| e.marker) != Some(Marker::Outer) {
                        return Err(Error::Geometry(format!(
                            "edge {key:?} is on the hull but not marked outer"
                        )));
                    }
                }
                2 => {
                    let (r0, r1) = (self.regions[tris[0]], self.regions[tris[1]]);
                    if r0 != r1
                        && !matches!(
                            marked.get(key).map(|e| e.marker),
                            Some(Marker::Interface | Marker::HoleBoundary)
                        )
                    {
                        return Err(Error::Geometry(format!(
                            "region change across unmarked edge {key:?}"
                        )));
                    }
                }
                n => {
                    return Err(Error::Geometry(format!(
                        "edge {key:?} shared by {n} triangles"
                    )))
                }
            }
        }
        Ok(())
    }
}

use crate::error::{Error, Result};
use crate::Point;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Reference shape of an inclusion, centred at the origin before scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeKind {
    Disk {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Counter-clockwise or clockwise simple polygon containing the origin.
    Polygon {
        vertices: Vec<Point>,
    },
}

impl ShapeKind {
    pub fn unit_disk() -> Self {
        ShapeKind::Disk { radius: 1.0 }
    }

    /// Square of side 1 centred at the origin.
    pub fn unit_square() -> Self {
        ShapeKind::Polygon {
            vertices: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]],
        }
    }
}

/// The inclusion `z + eps * omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionShape {
    #[serde(flatten)]
    pub kind: ShapeKind,
    #[serde(default)]
    pub center: Point,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl InclusionShape {
    pub fn new(kind: ShapeKind, center: Point, scale: f64) -> Self {
        InclusionShape {
            kind,
            center,
            scale,
        }
    }

    pub fn disk(center: Point, radius: f64) -> Self {
        InclusionShape::new(ShapeKind::unit_disk(), center, radius)
    }

    /// Same reference shape placed at the origin with unit scale.
    pub fn reference(&self) -> Self {
        InclusionShape::new(self.kind.clone(), [0.0, 0.0], 1.0)
    }

    pub fn at(&self, center: Point, scale: f64) -> Self {
        InclusionShape::new(self.kind.clone(), center, scale)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Geometry(format!(
                "inclusion scale must be positive, got {}",
                self.scale
            )));
        }
        match &self.kind {
            ShapeKind::Disk { radius } if !(*radius > 0.0) => Err(Error::Geometry(format!(
                "disk radius must be positive, got {radius}"
            ))),
            ShapeKind::Ellipse { a, b } if !(*a > 0.0 && *b > 0.0) => Err(Error::Geometry(
                format!("ellipse radii must be positive, got ({a}, {b})"),
            )),
            ShapeKind::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Geometry("polygon needs at least 3 vertices".into()));
                }
                if !polygon_is_simple(vertices) {
                    return Err(Error::Geometry("polygon is self-intersecting".into()));
                }
                if !point_in_polygon([0.0, 0.0], vertices) {
                    return Err(Error::Geometry(
                        "origin must lie strictly inside the polygon".into(),
                    ));
                }
                if distance_to_polygon([0.0, 0.0], vertices) <= 0.0 {
                    return Err(Error::Geometry(
                        "origin lies on the polygon boundary".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Reference polygon (before placement), counter-clockwise. Curved shapes
    /// use `n_seg` segments.
    pub fn reference_polygon(&self, n_seg: usize) -> Vec<Point> {
        let mut pts = match &self.kind {
            ShapeKind::Disk { radius } => (0..n_seg)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n_seg as f64;
                    [radius * t.cos(), radius * t.sin()]
                })
                .collect(),
            ShapeKind::Ellipse { a, b } => (0..n_seg)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n_seg as f64;
                    [a * t.cos(), b * t.sin()]
                })
                .collect(),
            ShapeKind::Polygon { vertices } => vertices.clone(),
        };
        if signed_polygon_area(&pts) < 0.0 {
            pts.reverse();
        }
        pts
    }

    /// Polygonised boundary of `z + eps * omega`, counter-clockwise.
    pub fn polygon(&self, n_seg: usize) -> Vec<Point> {
        self.reference_polygon(n_seg)
            .into_iter()
            .map(|p| {
                [
                    self.center[0] + self.scale * p[0],
                    self.center[1] + self.scale * p[1],
                ]
            })
            .collect()
    }

    /// Area of the polygonised shape.
    pub fn polygon_area(&self, n_seg: usize) -> f64 {
        signed_polygon_area(&self.polygon(n_seg))
    }

    /// Largest distance between two polygon vertices.
    pub fn diameter(&self, n_seg: usize) -> f64 {
        let p = self.polygon(n_seg);
        let mut d: f64 = 0.0;
        for a in &p {
            for b in &p {
                d = d.max(dist(*a, *b));
            }
        }
        d
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn signed_polygon_area(p: &[Point]) -> f64 {
    let n = p.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

/// Even-odd crossing test.
pub fn point_in_polygon(x: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi[1] > x[1]) != (pj[1] > x[1]) {
            let xc = pj[0] + (x[1] - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
            if x[0] < xc {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn distance_to_segment(x: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(x, [a[0] + t * d[0], a[1] + t * d[1]])
}

pub fn distance_to_polygon(x: Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| distance_to_segment(x, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

pub(crate) fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (o1, o2, o3, o4) = (
        orient(a, b, c),
        orient(a, b, d),
        orient(c, d, a),
        orient(c, d, b),
    );
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

pub fn polygon_is_simple(p: &[Point]) -> bool {
    let n = p.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // skip adjacent edges, which share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

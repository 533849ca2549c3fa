use super::{BoundaryEdge, Mesh2D};
use std::collections::HashMap;

/// Red refinement. Children inherit region, owner and edge markers; fitted
/// polygons are unchanged because new vertices sit on straight edges.
pub(super) fn refine_uniform(mesh: &Mesh2D) -> Mesh2D {
    let mut vertices = mesh.vertices.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<crate::Point>| -> usize {
        *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    let mut owner = Vec::with_capacity(4 * mesh.triangles.len());
    let mut regions = Vec::with_capacity(4 * mesh.triangles.len());
    for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        for child in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            triangles.push(child);
            owner.push(mesh.owner[t]);
            regions.push(mesh.regions[t]);
        }
    }
    let mut edges = Vec::with_capacity(2 * mesh.edges.len());
    for e in &mesh.edges {
        let [a, b] = e.vertices;
        let m = midpoint(a, b, &mut vertices);
        edges.push(BoundaryEdge {
            vertices: [a, m],
            ..*e
        });
        edges.push(BoundaryEdge {
            vertices: [m, b],
            ..*e
        });
    }
    let mut out = Mesh2D::from_parts(vertices, triangles, owner, mesh.shapes.clone(), edges);
    out.regions = regions;
    out.update_markers();
    out
}

#[cfg(test)]
mod tests {
    use crate::mesh::{build_rect_mesh, InclusionShape, Marker, Rect, Region};

    #[test]
    fn refinement_preserves_areas_and_tags() {
        let m = build_rect_mesh(
            &Rect::unit_square(),
            0.1,
            &[InclusionShape::disk([0.5, 0.5], 0.2)],
        )
        .unwrap();
        let m = m.retag_shape(0, Region::Hole).unwrap();
        let r = m.refine_uniform();
        r.check().unwrap();
        assert_eq!(r.num_triangles(), 4 * m.num_triangles());
        for region in [Region::Matrix, Region::Hole] {
            assert!((r.region_area(region) - m.region_area(region)).abs() < 1e-12);
        }
        assert_eq!(r.boundary_edges().len(), 2 * m.boundary_edges().len());
        assert!(r
            .boundary_edges()
            .iter()
            .filter(|e| e.shape.is_some())
            .all(|e| e.marker == Marker::HoleBoundary));
        assert!((r.h_max() - 0.5 * m.h_max()).abs() < 1e-12);
    }
}

//! Triangulations of the sphere used as fixtures: the boundary complexes of
//! the tetrahedron, octahedron, and icosahedron.

use crate::mesh::Mesh;

/// 4 vertices, 6 edges, 4 triangles.
pub fn tetrahedron() -> Mesh {
    Mesh::build(4, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
        .expect("tetrahedron is a closed surface")
}

/// 6 vertices, 12 edges, 8 triangles. Vertices 0 and 5 are antipodal poles.
pub fn octahedron() -> Mesh {
    Mesh::build(
        6,
        vec![
            [0, 1, 2],
            [0, 2, 3],
            [0, 3, 4],
            [0, 4, 1],
            [5, 2, 1],
            [5, 3, 2],
            [5, 4, 3],
            [5, 1, 4],
        ],
    )
    .expect("octahedron is a closed surface")
}

/// 12 vertices, 30 edges, 20 triangles. Vertex 0 caps the ring 1..=5,
/// vertex 11 caps the ring 6..=10, and an antiprism band joins the rings.
pub fn icosahedron() -> Mesh {
    Mesh::build(
        12,
        vec![
            [0, 1, 2],
            [0, 2, 3],
            [0, 3, 4],
            [0, 4, 5],
            [0, 5, 1],
            [1, 6, 2],
            [2, 6, 7],
            [2, 7, 3],
            [3, 7, 8],
            [3, 8, 4],
            [4, 8, 9],
            [4, 9, 5],
            [5, 9, 10],
            [5, 10, 1],
            [1, 10, 6],
            [6, 11, 7],
            [7, 11, 8],
            [8, 11, 9],
            [9, 11, 10],
            [10, 11, 6],
        ],
    )
    .expect("icosahedron is a closed surface")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_vertex_of_the_icosahedron_has_degree_five() {
        let m = icosahedron();
        for v in 0..m.vertex_count() {
            assert_eq!(m.corners_at(v).len(), 5, "vertex {v}");
        }
    }

    #[test]
    fn octahedron_equators_have_degree_four() {
        let m = octahedron();
        for v in 0..m.vertex_count() {
            assert_eq!(m.corners_at(v).len(), 4, "vertex {v}");
        }
    }
}

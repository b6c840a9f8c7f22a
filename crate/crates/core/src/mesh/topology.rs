use nalgebra::{Matrix3, Vector3};

use super::{edge_uses, MeshError, PolyhedronMesh};

/// One undirected edge with the dyad that enters the edge sum of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    /// Endpoints in the order face `faces.0` traverses them.
    pub vertices: (usize, usize),
    pub faces: (usize, usize),
    /// `n_A n_A,e^T + n_B n_B,e^T`.
    pub dyad: Matrix3<f64>,
    pub length: f64,
}

/// Face normals, face dyads and edge records for a validated mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyTable {
    pub normals: Vec<Vector3<f64>>,
    pub face_dyads: Vec<Matrix3<f64>>,
    pub edges: Vec<EdgeRecord>,
}

/// In-plane unit normal of a face at its edge `from -> to`, pointing away
/// from the face interior.
fn edge_normal(from: &Vector3<f64>, to: &Vector3<f64>, face_normal: &Vector3<f64>) -> Vector3<f64> {
    (to - from).cross(face_normal).normalize()
}

impl TopologyTable {
    pub fn build(mesh: &PolyhedronMesh) -> Result<Self, MeshError> {
        let report = mesh.validate();
        if !report.is_valid() {
            return Err(MeshError::Invalid(report));
        }
        let normals: Vec<Vector3<f64>> = (0..mesh.face_count())
            .map(|f| mesh.face_normal(f))
            .collect();
        let face_dyads = normals.iter().map(|n| n * n.transpose()).collect();

        let uses = edge_uses(mesh);
        let mut keys: Vec<_> = uses.keys().copied().collect();
        keys.sort_unstable();
        let verts = mesh.vertices();
        let edges = keys
            .into_iter()
            .map(|key| {
                let u = &uses[&key];
                let (fa, from_a, to_a) = u[0];
                let (fb, from_b, to_b) = u[1];
                let na = normals[fa];
                let nb = normals[fb];
                let nae = edge_normal(&verts[from_a], &verts[to_a], &na);
                let nbe = edge_normal(&verts[from_b], &verts[to_b], &nb);
                EdgeRecord {
                    vertices: (from_a, to_a),
                    faces: (fa, fb),
                    dyad: na * nae.transpose() + nb * nbe.transpose(),
                    length: (verts[to_a] - verts[from_a]).norm(),
                }
            })
            .collect();
        Ok(Self {
            normals,
            face_dyads,
            edges,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::{cube, regular_tetrahedron};

    #[test]
    fn face_dyads_are_projectors() {
        let topo = TopologyTable::build(&cube()).unwrap();
        for f in &topo.face_dyads {
            assert!((f.trace() - 1.0).abs() < 1e-12);
            assert!((f * f - f).abs().max() < 1e-12);
            assert!((f - f.transpose()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn edge_dyads_symmetric_on_tetrahedron() {
        let mesh = regular_tetrahedron();
        let topo = TopologyTable::build(&mesh).unwrap();
        assert_eq!(topo.edges.len(), 6);
        for e in &topo.edges {
            assert!((e.dyad - e.dyad.transpose()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn coplanar_cube_edge_dyad_vanishes() {
        // Two triangles of the same square face share a diagonal; both have
        // normal n and opposite in-plane edge normals, so E_e = n(n1 + n2)^T = 0.
        let mesh = cube();
        let topo = TopologyTable::build(&mesh).unwrap();
        let diagonal = topo
            .edges
            .iter()
            .find(|e| (topo.normals[e.faces.0] - topo.normals[e.faces.1]).norm() < 1e-12)
            .expect("cube triangulation has face diagonals");
        let n = topo.normals[diagonal.faces.0];
        let (a, b) = diagonal.vertices;
        let v = mesh.vertices();
        let n1 = (v[b] - v[a]).cross(&n).normalize();
        let n2 = -n1;
        let expected = n * n1.transpose() + n * n2.transpose();
        assert!((diagonal.dyad - expected).abs().max() < 1e-12);
        assert!(diagonal.dyad.abs().max() < 1e-12);
    }

    #[test]
    fn axis_aligned_cube_edge_dyad() {
        // Edge along z at x = 1, y = 1 between the +x and +y faces. The +x face
        // has in-plane edge normal +y and vice versa, so E = x y^T + y x^T.
        let mesh = cube();
        let topo = TopologyTable::build(&mesh).unwrap();
        let v = mesh.vertices();
        let edge = topo
            .edges
            .iter()
            .find(|e| {
                let (a, b) = e.vertices;
                let mid = 0.5 * (v[a] + v[b]);
                (mid - Vector3::new(1.0, 1.0, 0.5)).norm() < 1e-12
            })
            .unwrap();
        let mut expected = Matrix3::zeros();
        expected[(0, 1)] = 1.0;
        expected[(1, 0)] = 1.0;
        assert!((edge.dyad - expected).abs().max() < 1e-12, "{}", edge.dyad);
    }

    #[test]
    fn edge_count_is_three_halves_faces() {
        let topo = TopologyTable::build(&cube()).unwrap();
        assert_eq!(2 * topo.edges.len(), 3 * topo.normals.len());
    }

    #[test]
    fn invalid_mesh_rejected() {
        let c = cube();
        let mesh = PolyhedronMesh::new(c.vertices().to_vec(), c.faces()[1..].to_vec()).unwrap();
        assert!(matches!(
            TopologyTable::build(&mesh),
            Err(MeshError::Invalid(_))
        ));
    }
}

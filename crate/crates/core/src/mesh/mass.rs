use nalgebra::{Matrix3, Vector3};

use super::{MeshError, PolyhedronMesh};

/// Volume, centroid and inertia of a uniform-density solid bounded by a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MassProperties {
    /// m^3
    pub volume: f64,
    /// kg
    pub mass: f64,
    pub centroid: Vector3<f64>,
    /// About the centroid, kg m^2.
    pub inertia: Matrix3<f64>,
}

/// Sum of signed tetrahedra `(origin, a, b, c)` over all faces.
pub(crate) fn signed_volume(mesh: &PolyhedronMesh) -> f64 {
    mesh.faces()
        .iter()
        .map(|&[a, b, c]| {
            let v = mesh.vertices();
            v[a].dot(&v[b].cross(&v[c]))
        })
        .sum::<f64>()
        / 6.0
}

impl PolyhedronMesh {
    /// Volume by the divergence theorem applied to `div(x)/3`: one third of
    /// the flux of the position field through every face.
    pub fn divergence_volume(&self) -> f64 {
        (0..self.face_count())
            .map(|f| 0.5 * self.face_cross(f).dot(&self.face_centroid(f)))
            .sum::<f64>()
            / 3.0
    }

    /// Volume from the signed-tetrahedron decomposition.
    pub fn signed_volume(&self) -> f64 {
        signed_volume(self)
    }

    pub fn mass_properties(&self, density: f64) -> Result<MassProperties, MeshError> {
        if !(density > 0.0) {
            return Err(MeshError::NonPositiveDensity(density));
        }
        let mut volume = 0.0;
        let mut first = Vector3::zeros();
        // Second moment integral of x x^T over the solid, about the origin.
        let mut second = Matrix3::zeros();
        let canonical = Matrix3::new(2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0) / 120.0;
        for &[a, b, c] in self.faces() {
            let v = self.vertices();
            let m = Matrix3::from_columns(&[v[a], v[b], v[c]]);
            let det = m.determinant();
            volume += det / 6.0;
            first += det / 24.0 * (v[a] + v[b] + v[c]);
            second += det * m * canonical * m.transpose();
        }
        let centroid = first / volume;
        let central = second - volume * centroid * centroid.transpose();
        let inertia = density * (Matrix3::identity() * central.trace() - central);
        Ok(MassProperties {
            volume,
            mass: density * volume,
            centroid,
            inertia,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::{cube, icosphere, tetrahedron};

    #[test]
    fn unit_cube() {
        let p = cube().mass_properties(1.0).unwrap();
        assert!((p.volume - 1.0).abs() < 1e-14);
        assert!((p.centroid - Vector3::repeat(0.5)).norm() < 1e-14);
        // Solid cube about its center: m a^2 / 6 on the diagonal.
        let expected = Matrix3::identity() / 6.0;
        assert!((p.inertia - expected).abs().max() < 1e-14);
    }

    #[test]
    fn corner_tetrahedron_volume() {
        let p = tetrahedron().mass_properties(1.0).unwrap();
        assert!((p.volume - 1.0 / 6.0).abs() < 1e-15);
        assert!((p.centroid - Vector3::repeat(0.25)).norm() < 1e-15);
    }

    #[test]
    fn two_volume_routes_agree() {
        let mesh =
            icosphere(3, 2.5).map_vertices(|v| Vector3::new(1.3 * v.x + 0.4, v.y - 2.0, 0.7 * v.z));
        let a = mesh.divergence_volume();
        let b = mesh.signed_volume();
        assert!(((a - b) / b).abs() < 1e-12);
    }

    #[test]
    fn inertia_symmetric_positive_definite() {
        let mesh = icosphere(2, 1.0).map_vertices(|v| Vector3::new(2.0 * v.x, v.y, 0.5 * v.z));
        let p = mesh.mass_properties(2000.0).unwrap();
        assert!((p.inertia - p.inertia.transpose()).abs().max() < 1e-9 * p.inertia.norm());
        assert!(p.inertia.symmetric_eigenvalues().iter().all(|&l| l > 0.0));
    }

    #[test]
    fn rejects_non_positive_density() {
        assert!(matches!(
            cube().mass_properties(0.0),
            Err(MeshError::NonPositiveDensity(_))
        ));
    }
}

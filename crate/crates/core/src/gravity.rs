//! Exterior gravity of a constant-density polyhedron.
//!
//! With `r_e` the vector from the field point to an edge endpoint, `r_f` the
//! vector to a face vertex, `L_e = ln((a + b + l) / (a + b - l))` and `w_f`
//! the signed solid angle of face `f`:
//!
//! ```text
//! U     =  G rho / 2 * ( sum_e r_e' E_e r_e L_e  -  sum_f r_f' F_f r_f w_f )
//! g     =  G rho     * (-sum_e E_e r_e L_e       +  sum_f F_f r_f w_f )
//! lap U = -G rho sum_f w_f
//! ```
//!
//! `U` is positive and `g = grad U` points toward the body.

use nalgebra::Vector3;
use thiserror::Error;

use crate::mesh::{
    distance_to_segment, solid_angle_with_norms, MassProperties, MeshError, PolyhedronMesh,
    TopologyTable,
};
use crate::GRAVITATIONAL_CONSTANT;

/// Field points closer than this fraction of the bounding radius to an edge
/// are rejected.
pub const SINGULAR_DISTANCE_FRACTION: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GravityError {
    #[error("field point {point:?} is {distance:e} m from edge {edge}; the edge term is singular")]
    Singular {
        point: [f64; 3],
        edge: usize,
        distance: f64,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Anything that supplies a gravitational potential and its gradient.
pub trait GravityField: Send + Sync {
    fn potential(&self, p: &Vector3<f64>) -> Result<f64, GravityError>;
    fn acceleration(&self, p: &Vector3<f64>) -> Result<Vector3<f64>, GravityError>;
}

/// Potential, acceleration and Laplacian at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    /// m^2/s^2, positive.
    pub potential: f64,
    /// m/s^2, body frame.
    pub acceleration: Vector3<f64>,
    /// s^-2; zero outside, `-4 pi G rho` inside.
    pub laplacian: f64,
}

/// Constant-density polyhedron field.
#[derive(Debug, Clone)]
pub struct GravityModel {
    mesh: PolyhedronMesh,
    topology: TopologyTable,
    density: f64,
    gravitational_constant: f64,
    singular_distance: f64,
}

impl GravityModel {
    pub fn new(mesh: PolyhedronMesh, density: f64) -> Result<Self, GravityError> {
        Self::with_constant(mesh, density, GRAVITATIONAL_CONSTANT)
    }

    pub fn with_constant(
        mesh: PolyhedronMesh,
        density: f64,
        gravitational_constant: f64,
    ) -> Result<Self, GravityError> {
        if !(density > 0.0) {
            return Err(GravityError::NonPositive {
                name: "density",
                value: density,
            });
        }
        if !(gravitational_constant > 0.0) {
            return Err(GravityError::NonPositive {
                name: "gravitational constant",
                value: gravitational_constant,
            });
        }
        let topology = TopologyTable::build(&mesh)?;
        let singular_distance = SINGULAR_DISTANCE_FRACTION * mesh.bounding_radius();
        Ok(Self {
            mesh,
            topology,
            density,
            gravitational_constant,
            singular_distance,
        })
    }

    pub fn mesh(&self) -> &PolyhedronMesh {
        &self.mesh
    }

    pub fn topology(&self) -> &TopologyTable {
        &self.topology
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn gravitational_constant(&self) -> f64 {
        self.gravitational_constant
    }

    pub fn mass_properties(&self) -> MassProperties {
        self.mesh
            .mass_properties(self.density)
            .expect("density checked at construction")
    }

    /// `G M` of the body, m^3/s^2.
    pub fn gm(&self) -> f64 {
        self.gravitational_constant * self.mass_properties().mass
    }

    /// Evaluates all three field quantities in one pass over the mesh.
    pub fn evaluate(&self, p: &Vector3<f64>) -> Result<FieldSample, GravityError> {
        let verts = self.mesh.vertices();
        let rel: Vec<Vector3<f64>> = verts.iter().map(|v| v - p).collect();
        let norms: Vec<f64> = rel.iter().map(|r| r.norm()).collect();

        let mut edge_pot = 0.0;
        let mut edge_acc = Vector3::zeros();
        for (ei, edge) in self.topology.edges.iter().enumerate() {
            let (i, j) = edge.vertices;
            let (a, b, l) = (norms[i], norms[j], edge.length);
            let gap = a + b - l;
            if gap <= 1e-6 * l {
                let d = distance_to_segment(p, &verts[i], &verts[j]);
                if d <= self.singular_distance {
                    return Err(GravityError::Singular {
                        point: [p.x, p.y, p.z],
                        edge: ei,
                        distance: d,
                    });
                }
            }
            let wire = ((a + b + l) / gap).ln();
            let er = edge.dyad * rel[i];
            edge_pot += rel[i].dot(&er) * wire;
            edge_acc += er * wire;
        }

        let mut face_pot = 0.0;
        let mut face_acc = Vector3::zeros();
        let mut omega_sum = 0.0;
        for (fi, &[a, b, c]) in self.mesh.faces().iter().enumerate() {
            let omega =
                solid_angle_with_norms(&rel[a], &rel[b], &rel[c], norms[a], norms[b], norms[c]);
            let n = &self.topology.normals[fi];
            let h = n.dot(&rel[a]);
            face_pot += h * h * omega;
            face_acc += n * (h * omega);
            omega_sum += omega;
        }

        let g_rho = self.gravitational_constant * self.density;
        Ok(FieldSample {
            potential: 0.5 * g_rho * (edge_pot - face_pot),
            acceleration: g_rho * (face_acc - edge_acc),
            laplacian: -g_rho * omega_sum,
        })
    }

    pub fn laplacian(&self, p: &Vector3<f64>) -> Result<f64, GravityError> {
        Ok(self.evaluate(p)?.laplacian)
    }
}

impl GravityField for GravityModel {
    fn potential(&self, p: &Vector3<f64>) -> Result<f64, GravityError> {
        Ok(self.evaluate(p)?.potential)
    }

    fn acceleration(&self, p: &Vector3<f64>) -> Result<Vector3<f64>, GravityError> {
        Ok(self.evaluate(p)?.acceleration)
    }
}

/// Point mass at `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMassField {
    pub gm: f64,
    pub center: Vector3<f64>,
}

impl GravityField for PointMassField {
    fn potential(&self, p: &Vector3<f64>) -> Result<f64, GravityError> {
        Ok(self.gm / (p - self.center).norm())
    }

    fn acceleration(&self, p: &Vector3<f64>) -> Result<Vector3<f64>, GravityError> {
        let r = self.center - p;
        let d = r.norm();
        Ok(r * (self.gm / (d * d * d)))
    }
}

/// Constant acceleration everywhere; `U = g . p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    pub g: Vector3<f64>,
}

impl GravityField for UniformField {
    fn potential(&self, p: &Vector3<f64>) -> Result<f64, GravityError> {
        Ok(self.g.dot(p))
    }

    fn acceleration(&self, _p: &Vector3<f64>) -> Result<Vector3<f64>, GravityError> {
        Ok(self.g)
    }
}

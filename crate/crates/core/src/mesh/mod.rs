//! Triangulated shape models: ingest, validation, topology tables and mass
//! properties.
//!
//! Vertices are stored in meters in the asteroid body-fixed frame. Faces are
//! vertex-index triples wound counterclockwise when viewed from outside, so
//! that `(b - a) x (c - a)` points out of the body.

mod mass;
mod parse;
pub mod shapes;
mod topology;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector3;
use thiserror::Error;

pub use mass::MassProperties;
pub use parse::{parse_shape_model, ShapeFormat};
pub use topology::{EdgeRecord, TopologyTable};

/// Faces smaller than this fraction of the squared bounding radius are degenerate.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-12;

/// `|sum of solid angles - 2 pi|` below this is treated as a point on the surface.
pub const ON_SURFACE_BAND: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face} references vertex {index}, but only {vertex_count} vertices exist")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("mesh failed validation: {0}")]
    Invalid(ValidationReport),
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("point {0:?} lies on the surface; interior test is indeterminate")]
    OnSurface([f64; 3]),
}

/// Closed triangulated polyhedron.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedronMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl PolyhedronMesh {
    /// Builds a mesh after checking that every face index is in range. Full
    /// geometric validation is left to [`PolyhedronMesh::validate`].
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (fi, face) in faces.iter().enumerate() {
            if let Some(&bad) = face.iter().find(|&&i| i >= n) {
                return Err(MeshError::IndexOutOfRange {
                    face: fi,
                    index: bad,
                    vertex_count: n,
                });
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_vertices(&self, face: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized outward normal, with length equal to twice the face area.
    pub fn face_cross(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    pub fn face_normal(&self, face: usize) -> Vector3<f64> {
        self.face_cross(face).normalize()
    }

    pub fn face_centroid(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(face);
        (a + b + c) / 3.0
    }

    /// Center of the axis-aligned bounding box.
    pub fn bounding_center(&self) -> Vector3<f64> {
        let (lo, hi) = self.bounding_box();
        0.5 * (lo + hi)
    }

    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Largest distance from the bounding-box center to any vertex.
    pub fn bounding_radius(&self) -> f64 {
        let c = self.bounding_center();
        self.vertices
            .iter()
            .map(|v| (v - c).norm())
            .fold(0.0, f64::max)
    }

    /// Returns a copy with every vertex multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v * s).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Returns a copy with every vertex mapped through `f`.
    pub fn map_vertices(&self, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Checks every structural invariant and reports all violations found.
    pub fn validate(&self) -> ValidationReport {
        validate_mesh(self)
    }

    /// Sum of area-weighted outward normals; zero for a closed surface.
    pub fn closure_residual(&self) -> Vector3<f64> {
        (0..self.faces.len())
            .map(|f| 0.5 * self.face_cross(f))
            .sum()
    }

    /// Sum of the signed solid angles subtended by every face at `p`:
    /// `4 pi` strictly inside, `0` strictly outside.
    pub fn solid_angle_sum(&self, p: &Vector3<f64>) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                solid_angle(
                    &(self.vertices[a] - p),
                    &(self.vertices[b] - p),
                    &(self.vertices[c] - p),
                )
            })
            .sum()
    }

    /// Interior test from the solid-angle sum.
    pub fn contains_point(&self, p: &Vector3<f64>) -> Result<bool, MeshError> {
        let omega = self.solid_angle_sum(p);
        if (omega - 2.0 * PI).abs() < ON_SURFACE_BAND {
            return Err(MeshError::OnSurface([p.x, p.y, p.z]));
        }
        Ok(omega > 2.0 * PI)
    }

    /// Closest point on the surface to `p` and the index of the face it lies on.
    pub fn closest_point(&self, p: &Vector3<f64>) -> (Vector3<f64>, usize) {
        let mut best = (Vector3::zeros(), 0usize, f64::INFINITY);
        for (fi, &[a, b, c]) in self.faces.iter().enumerate() {
            let q = closest_point_on_triangle(
                p,
                &self.vertices[a],
                &self.vertices[b],
                &self.vertices[c],
            );
            let d2 = (q - p).norm_squared();
            if d2 < best.2 {
                best = (q, fi, d2);
            }
        }
        (best.0, best.1)
    }

    /// Outward direction of the surface near `p`: the area-weighted normal of
    /// every face whose distance to `p` ties the minimum. At a vertex or edge
    /// this blends the incident faces.
    pub fn outward_normal_near(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let dists: Vec<f64> = self
            .faces
            .iter()
            .map(|&[a, b, c]| {
                let q = closest_point_on_triangle(
                    p,
                    &self.vertices[a],
                    &self.vertices[b],
                    &self.vertices[c],
                );
                (q - p).norm()
            })
            .collect();
        let dmin = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let band = dmin + 1e-9 * self.bounding_radius();
        let n: Vector3<f64> = dists
            .iter()
            .enumerate()
            .filter(|(_, &d)| d <= band)
            .map(|(f, _)| self.face_cross(f))
            .sum();
        n.normalize()
    }
}

/// Signed solid angle of triangle `(r1, r2, r3)` seen from the origin, using
/// the two-argument arctangent form. Positive when the triangle is wound
/// counterclockwise as seen from the origin's far side (i.e. the origin lies
/// behind an outward-facing face).
pub fn solid_angle(r1: &Vector3<f64>, r2: &Vector3<f64>, r3: &Vector3<f64>) -> f64 {
    let (l1, l2, l3) = (r1.norm(), r2.norm(), r3.norm());
    solid_angle_with_norms(r1, r2, r3, l1, l2, l3)
}

#[inline]
pub(crate) fn solid_angle_with_norms(
    r1: &Vector3<f64>,
    r2: &Vector3<f64>,
    r3: &Vector3<f64>,
    l1: f64,
    l2: f64,
    l3: f64,
) -> f64 {
    let num = r1.dot(&r2.cross(r3));
    let den = l1 * l2 * l3 + l1 * r2.dot(r3) + l2 * r3.dot(r1) + l3 * r1.dot(r2);
    // A point in the plane of the face sees it edge-on. atan2(0, den < 0) would
    // give +-2 pi depending on the sign of zero; the principal value is 0.
    if num == 0.0 {
        return 0.0;
    }
    2.0 * num.atan2(den)
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> Vector3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Distance from `p` to the segment `ab`.
pub fn distance_to_segment(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

/// A single broken invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    IndexOutOfRange {
        face: usize,
        index: usize,
    },
    DegenerateFace {
        face: usize,
        area: f64,
    },
    /// Edge used by fewer than two faces.
    OpenEdge {
        edge: (usize, usize),
        faces: Vec<usize>,
    },
    /// Edge shared by more than two faces.
    NonManifoldEdge {
        edge: (usize, usize),
        faces: Vec<usize>,
    },
    /// Face whose winding disagrees with the majority of its neighbours.
    InconsistentWinding {
        face: usize,
        edges: Vec<(usize, usize)>,
    },
    /// Edge traversed twice in the same direction where neither face could be singled out.
    InconsistentEdge {
        edge: (usize, usize),
        faces: Vec<usize>,
    },
    EulerCharacteristic {
        vertices: usize,
        edges: usize,
        faces: usize,
    },
    InwardOrientation {
        signed_volume: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexOutOfRange { face, index } => {
                write!(f, "face {face}: vertex index {index} out of range")
            }
            Violation::DegenerateFace { face, area } => {
                write!(f, "face {face}: degenerate (area {area:e})")
            }
            Violation::OpenEdge { edge, faces } => {
                write!(f, "open edge {edge:?} used by faces {faces:?}")
            }
            Violation::NonManifoldEdge { edge, faces } => {
                write!(f, "non-manifold edge {edge:?} used by faces {faces:?}")
            }
            Violation::InconsistentWinding { face, edges } => {
                write!(f, "inconsistent winding: face {face} (edges {edges:?})")
            }
            Violation::InconsistentEdge { edge, faces } => {
                write!(
                    f,
                    "inconsistent winding on edge {edge:?} between faces {faces:?}"
                )
            }
            Violation::EulerCharacteristic {
                vertices,
                edges,
                faces,
            } => write!(
                f,
                "Euler characteristic V - E + F = {} - {} + {} != 2",
                vertices, edges, faces
            ),
            Violation::InwardOrientation { signed_volume } => {
                write!(f, "normals point inward (signed volume {signed_volume:e})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn open_edges(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| matches!(v, Violation::OpenEdge { .. }))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Undirected edge key with the smaller index first.
fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Undirected edge to its directed uses `(face, from, to)`.
pub(crate) type EdgeUses = HashMap<(usize, usize), Vec<(usize, usize, usize)>>;

pub(crate) fn edge_uses(mesh: &PolyhedronMesh) -> EdgeUses {
    let mut uses = EdgeUses::new();
    for (fi, &[a, b, c]) in mesh.faces.iter().enumerate() {
        for (from, to) in [(a, b), (b, c), (c, a)] {
            uses.entry(edge_key(from, to))
                .or_default()
                .push((fi, from, to));
        }
    }
    uses
}

pub fn validate_mesh(mesh: &PolyhedronMesh) -> ValidationReport {
    let mut violations = Vec::new();
    let n = mesh.vertices.len();

    for (fi, face) in mesh.faces.iter().enumerate() {
        for &i in face {
            if i >= n {
                violations.push(Violation::IndexOutOfRange { face: fi, index: i });
            }
        }
    }
    if !violations.is_empty() {
        return ValidationReport { violations };
    }

    let r = mesh.bounding_radius();
    let min_area = DEGENERATE_AREA_FRACTION * r * r;
    for fi in 0..mesh.faces.len() {
        let area = mesh.face_area(fi);
        let [a, b, c] = mesh.faces[fi];
        if !(area >= min_area) || a == b || b == c || a == c {
            violations.push(Violation::DegenerateFace { face: fi, area });
        }
    }

    let uses = edge_uses(mesh);
    let mut keys: Vec<_> = uses.keys().copied().collect();
    keys.sort_unstable();

    let mut watertight = true;
    let mut bad_edges: Vec<((usize, usize), Vec<usize>)> = Vec::new();
    for key in &keys {
        let u = &uses[key];
        let faces: Vec<usize> = u.iter().map(|x| x.0).collect();
        match u.len() {
            2 => {
                if u[0].1 == u[1].1 {
                    bad_edges.push((*key, faces));
                }
            }
            0 | 1 => {
                watertight = false;
                violations.push(Violation::OpenEdge { edge: *key, faces });
            }
            _ => {
                watertight = false;
                violations.push(Violation::NonManifoldEdge { edge: *key, faces });
            }
        }
    }

    // Attribute same-direction edges to the faces that own most of them.
    if !bad_edges.is_empty() {
        let mut per_face: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for (edge, faces) in &bad_edges {
            for &f in faces {
                per_face.entry(f).or_default().push(*edge);
            }
        }
        let mut flagged: Vec<usize> = per_face
            .iter()
            .filter(|(_, e)| e.len() >= 2)
            .map(|(&f, _)| f)
            .collect();
        flagged.sort_unstable();
        for &f in &flagged {
            let mut edges = per_face[&f].clone();
            edges.sort_unstable();
            violations.push(Violation::InconsistentWinding { face: f, edges });
        }
        for (edge, faces) in &bad_edges {
            if !faces.iter().any(|f| flagged.contains(f)) {
                violations.push(Violation::InconsistentEdge {
                    edge: *edge,
                    faces: faces.clone(),
                });
            }
        }
    }

    if watertight {
        let e = keys.len();
        let chi = n as i64 - e as i64 + mesh.faces.len() as i64;
        if chi != 2 {
            violations.push(Violation::EulerCharacteristic {
                vertices: n,
                edges: e,
                faces: mesh.faces.len(),
            });
        }
        if bad_edges.is_empty() {
            let vol = mass::signed_volume(mesh);
            if !(vol > 0.0) {
                violations.push(Violation::InwardOrientation { signed_volume: vol });
            }
        }
    }

    ValidationReport { violations }
}

/// Number of distinct undirected edges.
pub fn edge_count(mesh: &PolyhedronMesh) -> usize {
    edge_uses(mesh).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use shapes::{cube, tetrahedron};

    #[test]
    fn closed_tetrahedron_is_valid() {
        let report = tetrahedron().validate();
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn removing_a_face_opens_three_edges() {
        let t = tetrahedron();
        let mesh = PolyhedronMesh::new(t.vertices().to_vec(), t.faces()[1..].to_vec()).unwrap();
        let report = mesh.validate();
        assert_eq!(report.open_edges().count(), 3, "{report}");
    }

    #[test]
    fn reversed_face_is_named() {
        let t = tetrahedron();
        let mut faces = t.faces().to_vec();
        faces[2].swap(1, 2);
        let mesh = PolyhedronMesh::new(t.vertices().to_vec(), faces).unwrap();
        let report = mesh.validate();
        let named: Vec<usize> = report
            .violations
            .iter()
            .filter_map(|v| match v {
                Violation::InconsistentWinding { face, .. } => Some(*face),
                _ => None,
            })
            .collect();
        assert_eq!(named, vec![2], "{report}");
    }

    #[test]
    fn fully_reversed_mesh_reports_inward_orientation() {
        let c = cube();
        let faces = c.faces().iter().map(|&[a, b, c]| [a, c, b]).collect();
        let mesh = PolyhedronMesh::new(c.vertices().to_vec(), faces).unwrap();
        let report = mesh.validate();
        assert!(matches!(
            report.violations.as_slice(),
            [Violation::InwardOrientation { .. }]
        ));
    }

    #[test]
    fn degenerate_face_detected() {
        let verts = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
        ];
        let mesh = PolyhedronMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        assert!(mesh
            .validate()
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DegenerateFace { face: 0, .. })));
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = PolyhedronMesh::new(vec![Vector3::zeros(); 3], vec![[0, 1, 3]]).unwrap_err();
        assert!(matches!(err, MeshError::IndexOutOfRange { index: 3, .. }));
    }

    #[test]
    fn euler_formula_for_cube() {
        let c = cube();
        assert_eq!(
            (c.vertex_count(), c.face_count(), edge_count(&c)),
            (8, 12, 18)
        );
    }

    #[test]
    fn contains_center_and_rejects_far_point() {
        let c = cube();
        assert!(c.contains_point(&Vector3::new(0.5, 0.5, 0.5)).unwrap());
        let far = Vector3::repeat(100.0 * c.bounding_radius());
        assert!(!c.contains_point(&far).unwrap());
    }

    #[test]
    fn face_centroid_is_on_surface() {
        let c = cube();
        let p = c.face_centroid(3);
        assert!(matches!(c.contains_point(&p), Err(MeshError::OnSurface(_))));
    }

    #[test]
    fn closest_point_regions() {
        let a = Vector3::new(0.0, 0.0, 0.0);
        let b = Vector3::new(1.0, 0.0, 0.0);
        let c = Vector3::new(0.0, 1.0, 0.0);
        let q = closest_point_on_triangle(&Vector3::new(0.2, 0.2, 3.0), &a, &b, &c);
        assert!((q - Vector3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        let q = closest_point_on_triangle(&Vector3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(q, a);
        let q = closest_point_on_triangle(&Vector3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((q - Vector3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }
}

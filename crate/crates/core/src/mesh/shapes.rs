//! Procedural shape models used by tests, fixtures and the scenario runner.

use std::collections::HashMap;

use nalgebra::{Rotation3, Vector3};

use super::PolyhedronMesh;

/// Tetrahedron with vertices at the origin and the three unit axes.
pub fn tetrahedron() -> PolyhedronMesh {
    let v = vec![
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
    ];
    PolyhedronMesh::new(v, vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]).unwrap()
}

/// Regular tetrahedron inscribed in the unit sphere.
pub fn regular_tetrahedron() -> PolyhedronMesh {
    let s = 1.0 / 3f64.sqrt();
    let v = vec![
        Vector3::new(s, s, s),
        Vector3::new(s, -s, -s),
        Vector3::new(-s, s, -s),
        Vector3::new(-s, -s, s),
    ];
    PolyhedronMesh::new(v, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]).unwrap()
}

/// Unit cube `[0, 1]^3` split into 12 triangles.
pub fn cube() -> PolyhedronMesh {
    box_mesh(Vector3::zeros(), Vector3::repeat(1.0))
}

/// Axis-aligned box between `lo` and `hi`.
pub fn box_mesh(lo: Vector3<f64>, hi: Vector3<f64>) -> PolyhedronMesh {
    let mut v = Vec::with_capacity(8);
    for i in 0..8 {
        v.push(Vector3::new(
            if i & 1 == 0 { lo.x } else { hi.x },
            if i & 2 == 0 { lo.y } else { hi.y },
            if i & 4 == 0 { lo.z } else { hi.z },
        ));
    }
    let faces = vec![
        [0, 2, 3],
        [0, 3, 1], // z = lo
        [4, 5, 7],
        [4, 7, 6], // z = hi
        [0, 1, 5],
        [0, 5, 4], // y = lo
        [2, 6, 7],
        [2, 7, 3], // y = hi
        [0, 4, 6],
        [0, 6, 2], // x = lo
        [1, 3, 7],
        [1, 7, 5], // x = hi
    ];
    PolyhedronMesh::new(v, faces).unwrap()
}

/// Geodesic sphere: an icosahedron subdivided `level` times, `20 * 4^level` faces.
pub fn icosphere(level: u32, radius: f64) -> PolyhedronMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
            let key = if a < b { (a, b) } else { (b, a) };
            *cache.entry(key).or_insert_with(|| {
                verts.push((0.5 * (verts[a] + verts[b])).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| v * radius).collect();
    PolyhedronMesh::new(verts, faces).unwrap()
}

/// Landing vertex of the Castalia-class model, body frame, meters.
pub const CASTALIA_SITE: [f64; 3] = [726.0, 0.0, 286.0];

/// Radius of the contact-binary surface along unit direction `u` before scaling:
/// a triaxial ellipsoid pinched at the waist, with a larger `+x` lobe.
fn bilobed_radius(u: &Vector3<f64>) -> f64 {
    let (a, b, c) = (900.0, 700.0, 400.0);
    let ellipsoid = 1.0 / ((u.x / a).powi(2) + (u.y / b).powi(2) + (u.z / c).powi(2)).sqrt();
    let waist = 1.0 - 0.3 * (-(u.x / 0.35).powi(2)).exp();
    let lobes = 1.0 + 0.08 * u.x;
    ellipsoid * waist * lobes
}

/// Star-shaped contact-binary model about 1.8 x 1.2 x 0.8 km, centered on its
/// own centroid, with vertex 0 placed exactly at [`CASTALIA_SITE`].
///
/// A stand-in for the radar shape model of 4769 Castalia, which is not
/// redistributed here. `level` controls the resolution (`20 * 4^level` faces).
pub fn castalia_like(level: u32) -> PolyhedronMesh {
    let target = Vector3::from(CASTALIA_SITE);
    let base = icosphere(level, 1.0);
    let mut offset = Vector3::zeros();
    let mut verts = Vec::new();
    // The site must land on `target` after re-centering on the centroid, so
    // iterate on the centroid offset; it settles within a few passes.
    for _ in 0..12 {
        let want: Vector3<f64> = target + offset;
        let rot = Rotation3::rotation_between(&base.vertices()[0], &want.normalize())
            .unwrap_or_else(Rotation3::identity);
        let dirs: Vec<Vector3<f64>> = base.vertices().iter().map(|v| rot * v).collect();
        let scale = want.norm() / bilobed_radius(&dirs[0]);
        verts = dirs.iter().map(|u| u * scale * bilobed_radius(u)).collect();
        let mesh = PolyhedronMesh::new(verts.clone(), base.faces().to_vec()).unwrap();
        let c = mesh.mass_properties(1.0).unwrap().centroid;
        for v in verts.iter_mut() {
            *v -= c;
        }
        let settled = (c - offset).norm() < 1e-9;
        offset = c;
        if settled {
            break;
        }
    }
    verts[0] = target;
    PolyhedronMesh::new(verts, base.faces().to_vec()).unwrap()
}

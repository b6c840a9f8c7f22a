//! Body-fixed and landing-site frames.
//!
//! The landing-site frame has its origin at the site and its `Z` axis along
//! the radial direction from the asteroid's center of mass. Both frames rotate
//! with the asteroid, so transforming velocities between them is a pure
//! rotation.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("landing site must be away from the body center")]
    ZeroSite,
    #[error("landing site lies on the spin axis; longitude is undefined, supply it explicitly")]
    DegenerateLongitude,
}

/// Position and velocity in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl CartesianState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self { position, velocity }
    }
}

/// Landing-site frame anchored at `site`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteFrame {
    /// Site position in the body frame, m.
    pub site: Vector3<f64>,
    pub latitude: f64,
    pub longitude: f64,
    /// Site-to-body rotation; columns are the site axes in body coordinates.
    pub rotation: Matrix3<f64>,
}

fn site_rotation(latitude: f64, longitude: f64) -> Matrix3<f64> {
    let (sp, cp) = latitude.sin_cos();
    let (sl, cl) = longitude.sin_cos();
    Matrix3::new(
        cl * sp,
        -sl,
        cl * cp, //
        sl * sp,
        cl,
        sl * cp, //
        -cp,
        0.0,
        sp,
    )
}

impl SiteFrame {
    /// Frame at `site` with longitude and latitude taken from its spherical
    /// coordinates.
    pub fn from_position(site: Vector3<f64>) -> Result<Self, FrameError> {
        let r = site.norm();
        if !(r > 0.0) {
            return Err(FrameError::ZeroSite);
        }
        if site.x.hypot(site.y) <= 1e-12 * r {
            return Err(FrameError::DegenerateLongitude);
        }
        Self::with_longitude(site, site.y.atan2(site.x))
    }

    /// Frame at `site` with a caller-chosen longitude. Needed on the spin axis.
    pub fn with_longitude(site: Vector3<f64>, longitude: f64) -> Result<Self, FrameError> {
        let r = site.norm();
        if !(r > 0.0) {
            return Err(FrameError::ZeroSite);
        }
        let latitude = (site.z / r).clamp(-1.0, 1.0).asin();
        Ok(Self {
            site,
            latitude,
            longitude,
            rotation: site_rotation(latitude, longitude),
        })
    }

    /// Local up, body frame.
    pub fn up(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    /// Rotates a free vector from site to body axes.
    pub fn vector_to_body(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Rotates a free vector from body to site axes.
    pub fn vector_to_site(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.tr_mul(v)
    }

    pub fn position_to_body(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * r + self.site
    }

    pub fn position_to_site(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.tr_mul(&(r - self.site))
    }

    pub fn body_to_site(&self, s: &CartesianState) -> CartesianState {
        CartesianState {
            position: self.position_to_site(&s.position),
            velocity: self.vector_to_site(&s.velocity),
        }
    }

    pub fn site_to_body(&self, s: &CartesianState) -> CartesianState {
        CartesianState {
            position: self.position_to_body(&s.position),
            velocity: self.vector_to_body(&s.velocity),
        }
    }
}

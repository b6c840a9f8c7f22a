//! Asteroid spin, sun position and the non-gravitational disturbance model.

use nalgebra::{Rotation3, Vector3};
use thiserror::Error;

/// Astronomical unit, m.
pub const ASTRONOMICAL_UNIT: f64 = 1.495_978_707e11;
/// Heliocentric gravitational parameter used when none is configured, m^3/s^2.
pub const DEFAULT_MU_SUN: f64 = 1.327e20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvironmentError {
    #[error("spacecraft coincides with the sun")]
    CoincidentSun,
    #[error("{name} is invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Uniform rotation about the body-fixed `+Z` axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    /// rad/s
    pub rate: f64,
}

impl SpinState {
    pub fn new(rate: f64) -> Result<Self, EnvironmentError> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(EnvironmentError::InvalidParameter {
                name: "spin rate",
                value: rate,
            });
        }
        Ok(Self { rate })
    }

    pub fn from_period(period: f64) -> Result<Self, EnvironmentError> {
        if !(period > 0.0) {
            return Err(EnvironmentError::InvalidParameter {
                name: "rotation period",
                value: period,
            });
        }
        Self::new(2.0 * std::f64::consts::PI / period)
    }

    pub fn angular_velocity(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.rate)
    }
}

/// Where the sun is, expressed in the rotating body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SunEphemeris {
    /// Sun held at a constant body-frame position.
    Fixed {
        direction: Vector3<f64>,
        distance: f64,
    },
    /// Sun on a circular path in an inertially fixed plane; the body frame
    /// rotates underneath it at the spin rate.
    Circular {
        radius: f64,
        rate: f64,
        phase: f64,
        normal: Vector3<f64>,
    },
}

impl Default for SunEphemeris {
    fn default() -> Self {
        SunEphemeris::Fixed {
            direction: Vector3::x(),
            distance: ASTRONOMICAL_UNIT,
        }
    }
}

impl SunEphemeris {
    pub fn fixed(direction: Vector3<f64>, distance: f64) -> Result<Self, EnvironmentError> {
        if !(distance > 0.0) {
            return Err(EnvironmentError::InvalidParameter {
                name: "sun distance",
                value: distance,
            });
        }
        let n = direction.norm();
        if !(n > 0.0) {
            return Err(EnvironmentError::InvalidParameter {
                name: "sun direction norm",
                value: n,
            });
        }
        Ok(SunEphemeris::Fixed {
            direction: direction / n,
            distance,
        })
    }

    pub fn circular(
        radius: f64,
        rate: f64,
        phase: f64,
        normal: Vector3<f64>,
    ) -> Result<Self, EnvironmentError> {
        if !(radius > 0.0) {
            return Err(EnvironmentError::InvalidParameter {
                name: "sun orbit radius",
                value: radius,
            });
        }
        let n = normal.norm();
        if !(n > 0.0) {
            return Err(EnvironmentError::InvalidParameter {
                name: "orbit normal norm",
                value: n,
            });
        }
        Ok(SunEphemeris::Circular {
            radius,
            rate,
            phase,
            normal: normal / n,
        })
    }

    /// In-plane reference direction of a circular orbit: body `+X` projected
    /// into the plane, or `+Y` when the normal is along `X`.
    fn reference_axes(normal: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let seed = if normal.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let e1 = (seed - normal * normal.dot(&seed)).normalize();
        let e2 = normal.cross(&e1);
        (e1, e2)
    }

    /// Sun position at time `t`, body frame, m.
    pub fn position(&self, spin: &SpinState, t: f64) -> Vector3<f64> {
        match *self {
            SunEphemeris::Fixed {
                direction,
                distance,
            } => direction * distance,
            SunEphemeris::Circular {
                radius,
                rate,
                phase,
                normal,
            } => {
                let (e1, e2) = Self::reference_axes(&normal);
                let theta = phase + rate * t;
                let inertial = radius * (theta.cos() * e1 + theta.sin() * e2);
                Rotation3::from_axis_angle(&Vector3::z_axis(), -spin.rate * t) * inertial
            }
        }
    }
}

/// Solar radiation pressure and solar third-body parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceParams {
    /// Lumped SRP coefficient; acceleration is `eta / |d|^2` away from the sun, m^3/s^2.
    pub srp_coefficient: f64,
    /// Solar gravitational parameter, m^3/s^2.
    pub mu_sun: f64,
    /// Include the `-mu d / |d|^3` term that makes the third-body term tidal.
    pub indirect: bool,
}

impl Default for DisturbanceParams {
    fn default() -> Self {
        Self {
            srp_coefficient: 0.0,
            mu_sun: DEFAULT_MU_SUN,
            indirect: true,
        }
    }
}

/// Everything outside the spacecraft except the body's own gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsteroidEnvironment {
    pub spin: SpinState,
    pub sun: SunEphemeris,
    pub disturbance: DisturbanceParams,
    /// Constant disturbance torque on the spacecraft, body axes, N m.
    pub disturbance_torque: Vector3<f64>,
}

impl Default for AsteroidEnvironment {
    fn default() -> Self {
        Self {
            spin: SpinState { rate: 0.0 },
            sun: SunEphemeris::default(),
            disturbance: DisturbanceParams::default(),
            disturbance_torque: Vector3::zeros(),
        }
    }
}

impl AsteroidEnvironment {
    /// Gravity-only environment: no spin, no SRP, no sun.
    pub fn quiescent() -> Self {
        Self {
            disturbance: DisturbanceParams {
                srp_coefficient: 0.0,
                mu_sun: 0.0,
                indirect: true,
            },
            ..Self::default()
        }
    }

    pub fn sun_position(&self, t: f64) -> Vector3<f64> {
        self.sun.position(&self.spin, t)
    }

    pub fn disturbance_accel(
        &self,
        r: &Vector3<f64>,
        t: f64,
    ) -> Result<Vector3<f64>, EnvironmentError> {
        disturbance_accel(&self.disturbance, &self.sun_position(t), r)
    }
}

/// SRP plus solar third-body acceleration on a spacecraft at `r`, with the
/// sun at `d`, both relative to the asteroid center.
///
/// The tidal form is evaluated without subtracting two nearly equal terms:
/// `|d|^3 - |r - d|^3` is expanded through `|d|^2 - |r - d|^2 = 2 r.d - r.r`.
pub fn disturbance_accel(
    params: &DisturbanceParams,
    d: &Vector3<f64>,
    r: &Vector3<f64>,
) -> Result<Vector3<f64>, EnvironmentError> {
    let rho = r - d;
    let rho_n = rho.norm();
    if rho_n == 0.0 {
        return Err(EnvironmentError::CoincidentSun);
    }
    let d_n = d.norm();
    let srp = if params.srp_coefficient != 0.0 {
        -d * (params.srp_coefficient / (d_n * d_n * d_n))
    } else {
        Vector3::zeros()
    };
    if params.mu_sun == 0.0 {
        return Ok(srp);
    }
    let rho3 = rho_n * rho_n * rho_n;
    let direct = -rho * (params.mu_sun / rho3);
    if !params.indirect {
        return Ok(srp + direct);
    }
    // -mu [ rho/|rho|^3 + d/|d|^3 ] = -mu [ r/|rho|^3 + d (1/|d|^3 - 1/|rho|^3) ]
    let d3 = d_n * d_n * d_n;
    let sq_diff = 2.0 * r.dot(d) - r.dot(r);
    let lin_diff = sq_diff / (d_n + rho_n);
    let cube_diff = lin_diff * (d_n * d_n + d_n * rho_n + rho_n * rho_n);
    let tidal = -params.mu_sun * (r / rho3 - d * (cube_diff / (d3 * rho3)));
    Ok(srp + tidal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_params_give_zero() {
        let p = DisturbanceParams {
            srp_coefficient: 0.0,
            mu_sun: 0.0,
            indirect: true,
        };
        let a = disturbance_accel(
            &p,
            &Vector3::new(1.5e11, 0.0, 0.0),
            &Vector3::new(10.0, 3.0, 1.0),
        )
        .unwrap();
        assert_eq!(a, Vector3::zeros());
    }

    #[test]
    fn tidal_term_vanishes_at_center() {
        let p = DisturbanceParams::default();
        let a =
            disturbance_accel(&p, &Vector3::new(1.2e11, -3e10, 4e9), &Vector3::zeros()).unwrap();
        assert_eq!(a, Vector3::zeros());
    }

    #[test]
    fn srp_and_tidal_magnitudes() {
        let d = Vector3::new(1.496e11, 0.0, 0.0);
        let r = Vector3::new(1e3, 0.0, 0.0);
        let srp_only = DisturbanceParams {
            srp_coefficient: 1e17,
            mu_sun: 0.0,
            indirect: true,
        };
        let a = disturbance_accel(&srp_only, &d, &r).unwrap();
        let expected = 1e17 / (1.496e11f64 * 1.496e11);
        assert!((a.norm() - expected).abs() < 1e-12 * expected);
        assert!((expected - 4.47e-6).abs() < 0.01e-6);
        assert!(a.x < 0.0, "SRP pushes away from the sun");

        let tidal_only = DisturbanceParams {
            srp_coefficient: 0.0,
            mu_sun: 1.327e20,
            indirect: true,
        };
        let a = disturbance_accel(&tidal_only, &d, &r).unwrap();
        // Along the sun line the tidal term is mu [1/(d-r)^2 - 1/d^2]; expanded in
        // x = r/d to stay clear of cancellation: mu/d^2 (2x + 3x^2 + 4x^3 + ...).
        let (dn, rn) = (1.496e11f64, 1e3f64);
        let x = rn / dn;
        let exact = 1.327e20 / (dn * dn) * (2.0 * x + 3.0 * x * x + 4.0 * x * x * x);
        let linear = 2.0 * 1.327e20 * rn / (dn * dn * dn);
        assert!((a.x - exact).abs() < 1e-9 * exact, "{} vs {}", a.x, exact);
        assert!((a.norm() - linear).abs() < 1e-6 * linear);
        assert!((linear - 7.93e-11).abs() < 0.01e-11);
    }

    #[test]
    fn tidal_term_is_linear_near_center() {
        let p = DisturbanceParams::default();
        let d = Vector3::new(0.6e11, 1.3e11, 0.0);
        let r = Vector3::new(30.0, -40.0, 12.0);
        let a1 = disturbance_accel(&p, &d, &r).unwrap();
        let a2 = disturbance_accel(&p, &d, &(r * 2.0)).unwrap();
        assert!((a2 - 2.0 * a1).norm() < 1e-6 * a2.norm());
    }

    #[test]
    fn coincident_sun_rejected() {
        let d = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(
            disturbance_accel(&DisturbanceParams::default(), &d, &d),
            Err(EnvironmentError::CoincidentSun)
        );
    }

    #[test]
    fn fixed_sun_is_constant() {
        let e = AsteroidEnvironment {
            spin: SpinState::new(1e-3).unwrap(),
            sun: SunEphemeris::fixed(Vector3::x(), 1.496e11).unwrap(),
            ..AsteroidEnvironment::default()
        };
        assert_eq!(e.sun_position(0.0), Vector3::new(1.496e11, 0.0, 0.0));
        assert_eq!(e.sun_position(5e4), Vector3::new(1.496e11, 0.0, 0.0));
    }

    #[test]
    fn circular_sun_phase_and_quarter_period() {
        let rate = 2e-7;
        let sun = SunEphemeris::circular(1.5e11, rate, 0.0, Vector3::z()).unwrap();
        let still = SpinState::new(0.0).unwrap();
        let p0 = sun.position(&still, 0.0);
        assert!((p0 - Vector3::new(1.5e11, 0.0, 0.0)).norm() < 1e-3);
        let quarter = FRAC_PI_2 / rate;
        let p1 = sun.position(&still, quarter);
        assert!((p1 - Vector3::new(0.0, 1.5e11, 0.0)).norm() < 1.0);
    }

    #[test]
    fn circular_sun_counter_rotates_with_spin() {
        let sun = SunEphemeris::circular(1.0e11, 0.0, 0.0, Vector3::z()).unwrap();
        let spin = SpinState::new(1e-4).unwrap();
        let t = FRAC_PI_2 / 1e-4;
        let p = sun.position(&spin, t);
        assert!((p - Vector3::new(0.0, -1.0e11, 0.0)).norm() < 1.0);
    }

    #[test]
    fn continuity_in_position() {
        let p = DisturbanceParams {
            srp_coefficient: 1e17,
            ..DisturbanceParams::default()
        };
        let d = Vector3::new(1.496e11, 0.0, 0.0);
        let r = Vector3::new(700.0, 200.0, 100.0);
        let a = disturbance_accel(&p, &d, &r).unwrap();
        let b = disturbance_accel(&p, &d, &(r + Vector3::repeat(1e-6))).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn negative_spin_rejected() {
        assert!(SpinState::new(-1.0).is_err());
        assert!(SpinState::from_period(0.0).is_err());
    }
}

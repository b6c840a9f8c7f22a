//! Descent reference trajectories with a quadratic-in-time acceleration.
//!
//! ```text
//! a_d(t) = C0 + C1 t + C2 t^2
//! v_d(t) = C0 t + C1 t^2 / 2 + C2 t^3 / 3 + v0
//! r_d(t) = C0 t^2 / 2 + C1 t^3 / 6 + C2 t^4 / 12 + v0 t + r0
//! ```
//!
//! The three coefficient vectors are fixed by the terminal position, velocity
//! and acceleration at `t = tau`. The transfer time itself is chosen so the
//! vertical (`Z`) acceleration is linear in time, i.e. `C2_z = 0`.

use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("transfer time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("no positive transfer time satisfies the vertical boundary conditions (discriminant {discriminant:e})")]
    Infeasible { discriminant: f64 },
    #[error("boundary conditions must be finite")]
    NonFinite,
}

/// Two-point boundary data, landing-site frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub r0: Vector3<f64>,
    pub v0: Vector3<f64>,
    pub r_final: Vector3<f64>,
    pub v_final: Vector3<f64>,
    pub a_final: Vector3<f64>,
}

impl BoundaryConditions {
    fn is_finite(&self) -> bool {
        [self.r0, self.v0, self.r_final, self.v_final, self.a_final]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Reference acceleration, velocity and position at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample {
    pub acceleration: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceProfile {
    /// m/s^2
    pub c0: Vector3<f64>,
    /// m/s^3
    pub c1: Vector3<f64>,
    /// m/s^4
    pub c2: Vector3<f64>,
    /// s
    pub tau: f64,
    pub bc: BoundaryConditions,
}

/// Coefficients meeting `bc` at time `tau`.
pub fn solve_profile(bc: &BoundaryConditions, tau: f64) -> Result<GuidanceProfile, GuidanceError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(GuidanceError::NonPositiveTime(tau));
    }
    if !bc.is_finite() {
        return Err(GuidanceError::NonFinite);
    }
    let dr = bc.r_final - bc.r0;
    let (t2, t3, t4) = (tau * tau, tau * tau * tau, tau * tau * tau * tau);
    let c0 = bc.a_final - 6.0 * (bc.v_final + bc.v0) / tau + 12.0 * dr / t2;
    let c1 = -6.0 * bc.a_final / tau + 6.0 * (5.0 * bc.v_final + 3.0 * bc.v0) / t2 - 48.0 * dr / t3;
    let c2 = 6.0 * bc.a_final / t2 - 12.0 * (2.0 * bc.v_final + bc.v0) / t3 + 36.0 * dr / t4;
    Ok(GuidanceProfile {
        c0,
        c1,
        c2,
        tau,
        bc: *bc,
    })
}

/// Smallest positive `tau` with `C2_z = 0`, i.e. the smallest positive root of
/// `a_z tau^2 - 2 (2 vf_z + v0_z) tau + 6 (rf_z - r0_z) = 0`.
pub fn solve_transfer_time(bc: &BoundaryConditions) -> Result<f64, GuidanceError> {
    if !bc.is_finite() {
        return Err(GuidanceError::NonFinite);
    }
    let a = bc.a_final.z;
    let b = -2.0 * (2.0 * bc.v_final.z + bc.v0.z);
    let c = 6.0 * (bc.r_final.z - bc.r0.z);
    let discriminant = b * b - 4.0 * a * c;
    let infeasible = GuidanceError::Infeasible { discriminant };

    if a == 0.0 {
        if b == 0.0 {
            return Err(infeasible);
        }
        let tau = -c / b;
        return if tau > 0.0 { Ok(tau) } else { Err(infeasible) };
    }
    if discriminant < 0.0 {
        return Err(infeasible);
    }
    // Cancellation-free pair of roots.
    let q = -0.5 * (b + b.signum() * discriminant.sqrt());
    let mut roots = Vec::with_capacity(2);
    if q != 0.0 {
        roots.push(q / a);
        roots.push(c / q);
    } else {
        roots.push(0.0);
    }
    roots
        .into_iter()
        .filter(|&r| r > 0.0 && r.is_finite())
        .min_by(|x, y| x.total_cmp(y))
        .ok_or(infeasible)
}

impl GuidanceProfile {
    /// Solves for `tau` from the vertical channel, then for the coefficients.
    pub fn plan(bc: &BoundaryConditions) -> Result<Self, GuidanceError> {
        solve_profile(bc, solve_transfer_time(bc)?)
    }

    /// Reference at `t`, clamped to `[0, tau]`.
    pub fn sample(&self, t: f64) -> ReferenceSample {
        let t = t.clamp(0.0, self.tau);
        let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
        ReferenceSample {
            acceleration: self.c0 + self.c1 * t + self.c2 * t2,
            velocity: self.c0 * t + self.c1 * (t2 / 2.0) + self.c2 * (t3 / 3.0) + self.bc.v0,
            position: self.c0 * (t2 / 2.0)
                + self.c1 * (t3 / 6.0)
                + self.c2 * (t4 / 12.0)
                + self.bc.v0 * t
                + self.bc.r0,
        }
    }
}

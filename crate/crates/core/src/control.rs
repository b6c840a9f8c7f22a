//! Descent tracking and reaction-wheel attitude control.
//!
//! Translation uses a PD law on the error to a guidance reference, optionally
//! with feedforward of the reference acceleration and cancellation of the
//! natural accelerations at the current point. Attitude uses a PD law on the
//! rotation vector of the error rotation, allocated one-to-one to three
//! body-axis wheels that each saturate independently.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::dynamics::{
    Command, ControlLaw, DynamicsError, NaturalAcceleration, Saturation, SpacecraftState,
};
use crate::guidance::{GuidanceProfile, ReferenceSample};

/// Per-wheel torque limit of the reference lander, N m.
pub const DEFAULT_WHEEL_TORQUE: f64 = 0.025;
/// Default wheel rotor inertia, kg m^2.
pub const DEFAULT_WHEEL_INERTIA: f64 = 1e-3;

/// Error rotations this close to pi have no well-defined axis.
const AMBIGUOUS_ANGLE_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("attitude error of {angle} rad is too close to 180 degrees; the correction axis is ambiguous")]
    AmbiguousAxis { angle: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("inertia tensor must be symmetric positive-definite")]
    NotPositiveDefinite,
}

fn check_non_negative(name: &'static str, v: &Vector3<f64>) -> Result<(), ControlError> {
    match v.iter().find(|x| !(**x >= 0.0)) {
        Some(&value) => Err(ControlError::Negative { name, value }),
        None => Ok(()),
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ControlError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ControlError::NonPositive { name, value })
    }
}

/// What the translational law adds on top of the PD terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Feedforward {
    /// Pure PD on position and velocity error.
    Off,
    /// Reference acceleration minus gravity and disturbance.
    GravityDisturbance,
    /// Reference acceleration minus every natural term, including the
    /// Coriolis and centrifugal accelerations of the rotating frame.
    #[default]
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationGains {
    /// s^-2
    pub kp: Vector3<f64>,
    /// s^-1
    pub kd: Vector3<f64>,
    pub feedforward: Feedforward,
    /// Per-axis magnitude limit, m/s^2.
    pub accel_limit: Option<f64>,
}

impl Default for TranslationGains {
    fn default() -> Self {
        Self {
            kp: Vector3::repeat(4e-4),
            kd: Vector3::repeat(4e-2),
            feedforward: Feedforward::Full,
            accel_limit: None,
        }
    }
}

impl TranslationGains {
    pub fn new(kp: f64, kd: f64) -> Self {
        Self {
            kp: Vector3::repeat(kp),
            kd: Vector3::repeat(kd),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        check_non_negative("kp", &self.kp)?;
        check_non_negative("kd", &self.kd)?;
        if let Some(limit) = self.accel_limit {
            check_positive("acceleration limit", limit)?;
        }
        Ok(())
    }
}

/// Tracking acceleration toward `reference`, clamped per axis.
pub fn descent_accel_command(
    position: &Vector3<f64>,
    velocity: &Vector3<f64>,
    reference: &ReferenceSample,
    natural: &NaturalAcceleration,
    gains: &TranslationGains,
) -> (Vector3<f64>, Saturation) {
    let e = position - reference.position;
    let e_dot = velocity - reference.velocity;
    let mut u = -gains.kp.component_mul(&e) - gains.kd.component_mul(&e_dot);
    match gains.feedforward {
        Feedforward::Off => {}
        Feedforward::GravityDisturbance => {
            u += reference.acceleration - natural.gravity - natural.disturbance
        }
        Feedforward::Full => u += reference.acceleration - natural.total(),
    }
    let mut flags = Saturation::default();
    if let Some(limit) = gains.accel_limit {
        for axis in 0..3 {
            if u[axis].abs() > limit {
                u[axis] = limit.copysign(u[axis]);
                flags.0 |= Saturation::accel_axis(axis);
            }
        }
    }
    (u, flags)
}

/// Mass, dimensions and inertia tensor of a rigid spacecraft.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacecraftInertia {
    /// kg
    pub mass: f64,
    /// m
    pub dims: Vector3<f64>,
    /// kg m^2, body axes.
    pub inertia: Matrix3<f64>,
}

impl SpacecraftInertia {
    pub fn new(mass: f64, dims: Vector3<f64>, inertia: Matrix3<f64>) -> Result<Self, ControlError> {
        check_positive("mass", mass)?;
        if (inertia - inertia.transpose()).abs().max() > 1e-12 * inertia.abs().max()
            || inertia.cholesky().is_none()
        {
            return Err(ControlError::NotPositiveDefinite);
        }
        Ok(Self {
            mass,
            dims,
            inertia,
        })
    }
}

/// Uniform solid box of the given mass and edge lengths along body X, Y, Z.
pub fn box_inertia(mass: f64, dims: Vector3<f64>) -> Result<SpacecraftInertia, ControlError> {
    check_positive("mass", mass)?;
    for &d in dims.iter() {
        check_positive("dimension", d)?;
    }
    let (a2, b2, c2) = (dims.x * dims.x, dims.y * dims.y, dims.z * dims.z);
    let k = mass / 12.0;
    let inertia =
        Matrix3::from_diagonal(&Vector3::new(k * (b2 + c2), k * (a2 + c2), k * (a2 + b2)));
    SpacecraftInertia::new(mass, dims, inertia)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeGains {
    /// N m / rad
    pub cp: Vector3<f64>,
    /// N m s / rad
    pub cd: Vector3<f64>,
}

impl AttitudeGains {
    pub fn new(cp: Vector3<f64>, cd: Vector3<f64>) -> Result<Self, ControlError> {
        check_non_negative("cp", &cp)?;
        check_non_negative("cd", &cd)?;
        Ok(Self { cp, cd })
    }

    /// Gains proportional to the principal moments: `cp = kp J_ii`, `cd = kd J_ii`.
    pub fn scaled_to(inertia: &Matrix3<f64>, kp: f64, kd: f64) -> Result<Self, ControlError> {
        let diag = inertia.diagonal();
        Self::new(diag * kp, diag * kd)
    }
}

/// Three wheels aligned with the body axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionWheelSet {
    /// N m per wheel.
    pub max_torque: f64,
    /// kg m^2 per wheel.
    pub wheel_inertia: f64,
    /// Stored angular momentum per wheel, N m s.
    pub momentum: Vector3<f64>,
    /// Per-wheel momentum capacity, N m s.
    pub momentum_limit: Option<f64>,
}

impl Default for ReactionWheelSet {
    fn default() -> Self {
        Self {
            max_torque: DEFAULT_WHEEL_TORQUE,
            wheel_inertia: DEFAULT_WHEEL_INERTIA,
            momentum: Vector3::zeros(),
            momentum_limit: None,
        }
    }
}

impl ReactionWheelSet {
    pub fn validate(&self) -> Result<(), ControlError> {
        check_positive("wheel torque limit", self.max_torque)?;
        check_positive("wheel inertia", self.wheel_inertia)?;
        if let Some(h) = self.momentum_limit {
            check_positive("wheel momentum limit", h)?;
        }
        Ok(())
    }

    /// Wheel spin rates relative to the body, rad/s.
    pub fn wheel_speeds(&self) -> Vector3<f64> {
        self.momentum / self.wheel_inertia
    }

    /// Clamps a requested body torque per wheel. Returns the torque each wheel
    /// actually exerts on the body and the saturation flags raised.
    pub fn allocate(&self, requested: &Vector3<f64>) -> (Vector3<f64>, Saturation) {
        let mut applied = *requested;
        let mut flags = Saturation::default();
        for axis in 0..3 {
            if applied[axis].abs() > self.max_torque {
                applied[axis] = self.max_torque.copysign(applied[axis]);
                flags.0 |= Saturation::wheel(axis);
            }
            if let Some(limit) = self.momentum_limit {
                // Body torque tau drains wheel momentum: h' = -tau.
                let h = self.momentum[axis];
                if h.abs() >= limit && h * applied[axis] < 0.0 {
                    applied[axis] = 0.0;
                    flags.0 |= Saturation::momentum(axis);
                }
            }
        }
        (applied, flags)
    }

    /// Advances wheel momentum after `applied` was held for `dt`.
    pub fn integrate(&mut self, applied: &Vector3<f64>, dt: f64) {
        self.momentum -= applied * dt;
    }
}

/// Rotation vector (axis times angle) of the body-frame error `q_d^-1 q`.
pub fn attitude_error(
    q: &UnitQuaternion<f64>,
    q_d: &UnitQuaternion<f64>,
) -> Result<Vector3<f64>, ControlError> {
    let mut err = (q_d.inverse() * q).into_inner();
    // Shortest rotation: q and -q describe the same attitude.
    if err.w < 0.0 {
        err = -err;
    }
    let angle = 2.0 * err.imag().norm().atan2(err.w);
    if angle >= std::f64::consts::PI - AMBIGUOUS_ANGLE_MARGIN {
        return Err(ControlError::AmbiguousAxis { angle });
    }
    Ok(UnitQuaternion::new_unchecked(err).scaled_axis())
}

/// PD torque request and its wheel-limited realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueCommand {
    /// Unclamped PD torque, N m.
    pub requested: Vector3<f64>,
    /// Torque the wheels apply to the body, N m.
    pub applied: Vector3<f64>,
    pub saturation: Saturation,
}

pub fn attitude_torque_command(
    q: &UnitQuaternion<f64>,
    omega: &Vector3<f64>,
    q_d: &UnitQuaternion<f64>,
    omega_d: &Vector3<f64>,
    gains: &AttitudeGains,
    wheels: &ReactionWheelSet,
) -> Result<TorqueCommand, ControlError> {
    let e = attitude_error(q, q_d)?;
    let requested = -gains.cp.component_mul(&e) - gains.cd.component_mul(&(omega - omega_d));
    let (applied, saturation) = wheels.allocate(&requested);
    Ok(TorqueCommand {
        requested,
        applied,
        saturation,
    })
}

/// Attitude from 3-2-1 (yaw, pitch, roll) Euler angles given as `[roll, pitch, yaw]`.
pub fn euler_321_to_quaternion(angles: &Vector3<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(angles.x, angles.y, angles.z)
}

/// Inverse of [`euler_321_to_quaternion`].
pub fn quaternion_to_euler_321(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let (roll, pitch, yaw) = q.euler_angles();
    Vector3::new(roll, pitch, yaw)
}

/// Tracks a guidance profile started at `start_time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentController {
    pub profile: GuidanceProfile,
    pub gains: TranslationGains,
    pub start_time: f64,
}

impl DescentController {
    pub fn new(
        profile: GuidanceProfile,
        gains: TranslationGains,
        start_time: f64,
    ) -> Result<Self, ControlError> {
        gains.validate()?;
        Ok(Self {
            profile,
            gains,
            start_time,
        })
    }

    pub fn reference(&self, t: f64) -> ReferenceSample {
        self.profile.sample(t - self.start_time)
    }
}

impl ControlLaw for DescentController {
    fn command(
        &mut self,
        state: &SpacecraftState,
        natural: &NaturalAcceleration,
    ) -> Result<Command, DynamicsError> {
        let reference = self.reference(state.time);
        let (acceleration, saturation) = descent_accel_command(
            &state.position,
            &state.velocity,
            &reference,
            natural,
            &self.gains,
        );
        Ok(Command {
            acceleration,
            saturation,
            ..Command::default()
        })
    }
}

/// Holds a target attitude and rate with the wheel set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeController {
    pub target: UnitQuaternion<f64>,
    pub target_rate: Vector3<f64>,
    pub gains: AttitudeGains,
    pub wheels: ReactionWheelSet,
}

impl AttitudeController {
    pub fn new(
        target: UnitQuaternion<f64>,
        gains: AttitudeGains,
        wheels: ReactionWheelSet,
    ) -> Result<Self, ControlError> {
        wheels.validate()?;
        Ok(Self {
            target,
            target_rate: Vector3::zeros(),
            gains,
            wheels,
        })
    }
}

impl ControlLaw for AttitudeController {
    fn command(
        &mut self,
        state: &SpacecraftState,
        _: &NaturalAcceleration,
    ) -> Result<Command, DynamicsError> {
        let tc = attitude_torque_command(
            &state.attitude,
            &state.angular_velocity,
            &self.target,
            &self.target_rate,
            &self.gains,
            &self.wheels,
        )?;
        Ok(Command {
            torque: tc.applied,
            wheel_torques: tc.applied,
            saturation: tc.saturation,
            ..Command::default()
        })
    }

    fn commit(&mut self, command: &Command, dt: f64) {
        self.wheels.integrate(&command.wheel_torques, dt);
    }
}

/// Optional translation and attitude loops run side by side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Autopilot {
    pub translation: Option<DescentController>,
    pub attitude: Option<AttitudeController>,
}

impl ControlLaw for Autopilot {
    fn command(
        &mut self,
        state: &SpacecraftState,
        natural: &NaturalAcceleration,
    ) -> Result<Command, DynamicsError> {
        let mut cmd = Command::default();
        if let Some(t) = self.translation.as_mut() {
            let c = t.command(state, natural)?;
            cmd.acceleration = c.acceleration;
            cmd.saturation.0 |= c.saturation.0;
        }
        if let Some(a) = self.attitude.as_mut() {
            let c = a.command(state, natural)?;
            cmd.torque = c.torque;
            cmd.wheel_torques = c.wheel_torques;
            cmd.saturation.0 |= c.saturation.0;
        }
        Ok(cmd)
    }

    fn commit(&mut self, command: &Command, dt: f64) {
        if let Some(a) = self.attitude.as_mut() {
            a.commit(command, dt);
        }
    }
}

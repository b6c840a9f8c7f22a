//! Coupled translational and attitude propagation in the rotating asteroid
//! frame (or the landing-site frame attached to it).
//!
//! Translational motion obeys
//!
//! ```text
//! R'' = u + g + d - 2 w x R' - w x (w x R)
//! ```
//!
//! with every term expressed in the state's frame. The asteroid spin `w` is
//! constant. Attitude obeys Euler's equation `w_b' = J^-1 (-w_b x J w_b + tau)`
//! and `q' = q (x) [0, w_b] / 2`.
//!
//! Integration is classical fixed-step RK4 with zero-order-hold control:
//! the controller is sampled once at the start of every step.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::control::ControlError;
use crate::environment::{AsteroidEnvironment, EnvironmentError};
use crate::frames::SiteFrame;
use crate::gravity::{GravityError, GravityField};
use crate::mesh::{closest_point_on_triangle, PolyhedronMesh, ON_SURFACE_BAND};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Gravity(#[from] GravityError),
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("state left the {radius} m bounding sphere at t = {time} s")]
    Divergence {
        time: f64,
        radius: f64,
        log: Box<TrajectoryLog>,
    },
    #[error("inertia matrix is singular")]
    SingularInertia,
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("at least one terminating event is required")]
    NoTerminatingEvent,
    #[error("a surface event was requested but no surface model is attached")]
    MissingSurface,
    #[error("event tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// Which frame a state's position and velocity are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Body,
    Site,
}

impl Frame {
    pub fn name(&self) -> &'static str {
        match self {
            Frame::Body => "body",
            Frame::Site => "site",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacecraftState {
    pub frame: Frame,
    /// m
    pub position: Vector3<f64>,
    /// m/s, relative to the rotating frame
    pub velocity: Vector3<f64>,
    /// Spacecraft body relative to the tagged frame.
    pub attitude: UnitQuaternion<f64>,
    /// rad/s, spacecraft body axes
    pub angular_velocity: Vector3<f64>,
    /// s
    pub time: f64,
}

impl SpacecraftState {
    pub fn new(frame: Frame, position: Vector3<f64>, velocity: Vector3<f64>, time: f64) -> Self {
        Self {
            frame,
            position,
            velocity,
            attitude: UnitQuaternion::identity(),
            angular_velocity: Vector3::zeros(),
            time,
        }
    }
}

/// Every non-control acceleration acting at a state, in the state's frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NaturalAcceleration {
    pub gravity: Vector3<f64>,
    pub disturbance: Vector3<f64>,
    /// `-2 w x R'`
    pub coriolis: Vector3<f64>,
    /// `-w x (w x R)`
    pub centrifugal: Vector3<f64>,
}

impl NaturalAcceleration {
    pub fn total(&self) -> Vector3<f64> {
        self.gravity + self.disturbance + self.coriolis + self.centrifugal
    }
}

/// Bit flags recording which actuators clipped during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Saturation(pub u16);

impl Saturation {
    pub const ACCEL_X: u16 = 1 << 0;
    pub const ACCEL_Y: u16 = 1 << 1;
    pub const ACCEL_Z: u16 = 1 << 2;
    pub const WHEEL_1: u16 = 1 << 3;
    pub const WHEEL_2: u16 = 1 << 4;
    pub const WHEEL_3: u16 = 1 << 5;
    pub const MOMENTUM_1: u16 = 1 << 6;
    pub const MOMENTUM_2: u16 = 1 << 7;
    pub const MOMENTUM_3: u16 = 1 << 8;

    pub fn any(&self) -> bool {
        self.0 != 0
    }

    pub fn contains(&self, flag: u16) -> bool {
        self.0 & flag != 0
    }

    pub fn accel_axis(axis: usize) -> u16 {
        Self::ACCEL_X << axis
    }

    pub fn wheel(axis: usize) -> u16 {
        Self::WHEEL_1 << axis
    }

    pub fn momentum(axis: usize) -> u16 {
        Self::MOMENTUM_1 << axis
    }
}

/// What the controller applies over one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Command {
    /// Control acceleration, state frame, m/s^2.
    pub acceleration: Vector3<f64>,
    /// Body torque, N m.
    pub torque: Vector3<f64>,
    /// Per-wheel torque on the spacecraft, N m.
    pub wheel_torques: Vector3<f64>,
    pub saturation: Saturation,
}

/// Controller sampled once per step.
pub trait ControlLaw {
    fn command(
        &mut self,
        state: &SpacecraftState,
        natural: &NaturalAcceleration,
    ) -> Result<Command, DynamicsError>;

    /// Called after `command` has been held for `dt` seconds.
    fn commit(&mut self, _command: &Command, _dt: f64) {}
}

/// Applies nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoControl;

impl ControlLaw for NoControl {
    fn command(
        &mut self,
        _: &SpacecraftState,
        _: &NaturalAcceleration,
    ) -> Result<Command, DynamicsError> {
        Ok(Command::default())
    }
}

/// Formulation of the translational equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameSpec {
    Body,
    Site(SiteFrame),
}

/// Gravity field, environment and frame needed to evaluate the translational
/// right-hand side.
#[derive(Clone, Copy)]
pub struct TranslationalModel<'a> {
    pub field: &'a dyn GravityField,
    pub env: &'a AsteroidEnvironment,
    pub frame: FrameSpec,
}

impl<'a> TranslationalModel<'a> {
    pub fn body(field: &'a dyn GravityField, env: &'a AsteroidEnvironment) -> Self {
        Self {
            field,
            env,
            frame: FrameSpec::Body,
        }
    }

    pub fn site(
        field: &'a dyn GravityField,
        env: &'a AsteroidEnvironment,
        site: SiteFrame,
    ) -> Self {
        Self {
            field,
            env,
            frame: FrameSpec::Site(site),
        }
    }

    pub fn frame_tag(&self) -> Frame {
        match self.frame {
            FrameSpec::Body => Frame::Body,
            FrameSpec::Site(_) => Frame::Site,
        }
    }

    /// Position relative to the asteroid center, body axes.
    pub fn body_position(&self, r: &Vector3<f64>) -> Vector3<f64> {
        match &self.frame {
            FrameSpec::Body => *r,
            FrameSpec::Site(f) => f.position_to_body(r),
        }
    }

    pub fn body_velocity(&self, v: &Vector3<f64>) -> Vector3<f64> {
        match &self.frame {
            FrameSpec::Body => *v,
            FrameSpec::Site(f) => f.vector_to_body(v),
        }
    }

    fn in_frame(&self, v: &Vector3<f64>) -> Vector3<f64> {
        match &self.frame {
            FrameSpec::Body => *v,
            FrameSpec::Site(f) => f.vector_to_site(v),
        }
    }

    pub fn natural_acceleration(
        &self,
        t: f64,
        r: &Vector3<f64>,
        v: &Vector3<f64>,
    ) -> Result<NaturalAcceleration, DynamicsError> {
        let rb = self.body_position(r);
        let w = self.env.spin.angular_velocity();
        let gravity = self.in_frame(&self.field.acceleration(&rb)?);
        let disturbance = self.in_frame(&self.env.disturbance_accel(&rb, t)?);
        let w_frame = self.in_frame(&w);
        let coriolis = -2.0 * w_frame.cross(v);
        let centrifugal = self.in_frame(&(-w.cross(&w.cross(&rb))));
        Ok(NaturalAcceleration {
            gravity,
            disturbance,
            coriolis,
            centrifugal,
        })
    }

    /// `(R', R'')` for control acceleration `u`.
    pub fn translational_derivative(
        &self,
        t: f64,
        r: &Vector3<f64>,
        v: &Vector3<f64>,
        u: &Vector3<f64>,
    ) -> Result<(Vector3<f64>, Vector3<f64>), DynamicsError> {
        let n = self.natural_acceleration(t, r, v)?;
        Ok((*v, u + n.total()))
    }
}

/// `(q', w')` for body rate `omega`, total body torque `torque` and inertia `inertia`.
pub fn attitude_derivative(
    q: &Quaternion<f64>,
    omega: &Vector3<f64>,
    torque: &Vector3<f64>,
    inertia: &Matrix3<f64>,
) -> Result<(Quaternion<f64>, Vector3<f64>), DynamicsError> {
    let inv = inertia
        .try_inverse()
        .ok_or(DynamicsError::SingularInertia)?;
    Ok(attitude_rates(q, omega, torque, inertia, &inv))
}

#[inline]
fn attitude_rates(
    q: &Quaternion<f64>,
    omega: &Vector3<f64>,
    torque: &Vector3<f64>,
    inertia: &Matrix3<f64>,
    inertia_inv: &Matrix3<f64>,
) -> (Quaternion<f64>, Vector3<f64>) {
    let q_dot = q * Quaternion::from_imag(*omega) * 0.5;
    let w_dot = inertia_inv * (torque - omega.cross(&(inertia * omega)));
    (q_dot, w_dot)
}

/// Something with an inside and an outside.
pub trait Surface: Sync {
    /// Signed distance estimate: positive outside, negative inside.
    fn clearance(&self, p: &Vector3<f64>) -> f64;
}

impl Surface for PolyhedronMesh {
    fn clearance(&self, p: &Vector3<f64>) -> f64 {
        surface_clearance(self, p)
    }
}

/// Signed distance to the mesh: magnitude is the distance to the nearest face,
/// sign is positive outside. When the nearest point is interior to a face the
/// sign comes from that face's normal; otherwise from the solid-angle sum.
pub fn surface_clearance(mesh: &PolyhedronMesh, p: &Vector3<f64>) -> f64 {
    let verts = mesh.vertices();
    let mut best = (f64::INFINITY, Vector3::zeros(), 0usize);
    for (fi, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let q = closest_point_on_triangle(p, &verts[a], &verts[b], &verts[c]);
        let d2 = (p - q).norm_squared();
        if d2 < best.0 {
            best = (d2, q, fi);
        }
    }
    let dist = best.0.sqrt();
    if dist == 0.0 {
        return 0.0;
    }
    let offset = p - best.1;
    let along = offset.dot(&mesh.face_normal(best.2));
    if along.abs() >= (1.0 - 1e-9) * dist {
        return along.signum() * dist;
    }
    let omega = mesh.solid_angle_sum(p);
    if omega > 2.0 * std::f64::consts::PI + ON_SURFACE_BAND {
        -dist
    } else {
        dist
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// Surface clearance crosses zero from above.
    SurfaceImpact,
    /// Surface clearance drops below the given height, m.
    AltitudeBelow(f64),
    /// The given duration has elapsed since the start, s.
    TimeElapsed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub kind: EventKind,
    /// Bracket width at which event location stops, s.
    pub tolerance: f64,
}

impl EventSpec {
    pub fn impact(tolerance: f64) -> Self {
        Self {
            kind: EventKind::SurfaceImpact,
            tolerance,
        }
    }

    pub fn altitude_below(height: f64, tolerance: f64) -> Self {
        Self {
            kind: EventKind::AltitudeBelow(height),
            tolerance,
        }
    }

    pub fn elapsed(duration: f64) -> Self {
        Self {
            kind: EventKind::TimeElapsed(duration),
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub time: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: UnitQuaternion<f64>,
    pub angular_velocity: Vector3<f64>,
    pub command: Command,
    pub gravity: Vector3<f64>,
    pub disturbance: Vector3<f64>,
}

impl LogRecord {
    pub fn state(&self, frame: Frame) -> SpacecraftState {
        SpacecraftState {
            frame,
            position: self.position,
            velocity: self.velocity,
            attitude: self.attitude,
            angular_velocity: self.angular_velocity,
            time: self.time,
        }
    }
}

/// One record per step; the last may follow a shortened step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub frame: Frame,
    pub dt: f64,
    pub records: Vec<LogRecord>,
}

impl TrajectoryLog {
    pub fn last(&self) -> Option<&LogRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Termination {
    pub kind: EventKind,
    pub time: f64,
    pub state: SpacecraftState,
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub log: TrajectoryLog,
    pub termination: Termination,
}

/// Integrated state vector.
#[derive(Debug, Clone, Copy)]
struct Phase {
    r: Vector3<f64>,
    v: Vector3<f64>,
    q: Quaternion<f64>,
    w: Vector3<f64>,
}

impl Phase {
    fn axpy(&self, h: f64, d: &Phase) -> Phase {
        Phase {
            r: self.r + d.r * h,
            v: self.v + d.v * h,
            q: self.q + d.q * h,
            w: self.w + d.w * h,
        }
    }
}

/// Fixed-step propagator over a translational model with optional attitude.
pub struct Propagator<'a> {
    pub model: TranslationalModel<'a>,
    pub surface: Option<&'a dyn Surface>,
    /// Spacecraft inertia; attitude is frozen when absent.
    pub inertia: Option<Matrix3<f64>>,
    pub dt: f64,
    pub events: Vec<EventSpec>,
    /// Body-frame distance from the asteroid center beyond which the run diverges.
    pub bounding_radius: f64,
}

impl<'a> Propagator<'a> {
    pub fn new(model: TranslationalModel<'a>, dt: f64) -> Self {
        Self {
            model,
            surface: None,
            inertia: None,
            dt,
            events: Vec::new(),
            bounding_radius: f64::INFINITY,
        }
    }

    pub fn with_surface(mut self, surface: &'a dyn Surface) -> Self {
        self.surface = Some(surface);
        self
    }

    pub fn with_inertia(mut self, inertia: Matrix3<f64>) -> Self {
        self.inertia = Some(inertia);
        self
    }

    pub fn with_event(mut self, event: EventSpec) -> Self {
        self.events.push(event);
        self
    }

    pub fn with_bounding_radius(mut self, radius: f64) -> Self {
        self.bounding_radius = radius;
        self
    }

    fn derivative(
        &self,
        t: f64,
        s: &Phase,
        cmd: &Command,
        inertia: Option<&(Matrix3<f64>, Matrix3<f64>)>,
    ) -> Result<Phase, DynamicsError> {
        let (dr, dv) = self
            .model
            .translational_derivative(t, &s.r, &s.v, &cmd.acceleration)?;
        let (dq, dw) = match inertia {
            Some((j, j_inv)) => {
                let torque = cmd.torque + self.model.env.disturbance_torque;
                attitude_rates(&s.q, &s.w, &torque, j, j_inv)
            }
            None => (Quaternion::new(0.0, 0.0, 0.0, 0.0), Vector3::zeros()),
        };
        Ok(Phase {
            r: dr,
            v: dv,
            q: dq,
            w: dw,
        })
    }

    fn rk4(
        &self,
        t: f64,
        s: &Phase,
        h: f64,
        cmd: &Command,
        inertia: Option<&(Matrix3<f64>, Matrix3<f64>)>,
    ) -> Result<Phase, DynamicsError> {
        let k1 = self.derivative(t, s, cmd, inertia)?;
        let k2 = self.derivative(t + 0.5 * h, &s.axpy(0.5 * h, &k1), cmd, inertia)?;
        let k3 = self.derivative(t + 0.5 * h, &s.axpy(0.5 * h, &k2), cmd, inertia)?;
        let k4 = self.derivative(t + h, &s.axpy(h, &k3), cmd, inertia)?;
        let mut next = Phase {
            r: s.r + (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r) * (h / 6.0),
            v: s.v + (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v) * (h / 6.0),
            q: s.q + (k1.q + k2.q * 2.0 + k3.q * 2.0 + k4.q) * (h / 6.0),
            w: s.w + (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w) * (h / 6.0),
        };
        next.q = next.q.normalize();
        Ok(next)
    }

    fn event_value(&self, kind: &EventKind, r: &Vector3<f64>) -> f64 {
        let surface = self.surface.expect("checked before propagation");
        let c = surface.clearance(&self.model.body_position(r));
        match kind {
            EventKind::SurfaceImpact => c,
            EventKind::AltitudeBelow(h) => c - h,
            EventKind::TimeElapsed(_) => f64::INFINITY,
        }
    }

    fn record(&self, t: f64, s: &Phase, cmd: Command, natural: &NaturalAcceleration) -> LogRecord {
        LogRecord {
            time: t,
            position: s.r,
            velocity: s.v,
            attitude: UnitQuaternion::new_unchecked(s.q),
            angular_velocity: s.w,
            command: cmd,
            gravity: natural.gravity,
            disturbance: natural.disturbance,
        }
    }

    fn to_state(&self, t: f64, s: &Phase) -> SpacecraftState {
        SpacecraftState {
            frame: self.model.frame_tag(),
            position: s.r,
            velocity: s.v,
            attitude: UnitQuaternion::new_unchecked(s.q),
            angular_velocity: s.w,
            time: t,
        }
    }

    pub fn propagate(
        &self,
        initial: &SpacecraftState,
        controller: &mut dyn ControlLaw,
    ) -> Result<Propagation, DynamicsError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(DynamicsError::InvalidStep(self.dt));
        }
        if self.events.is_empty() {
            return Err(DynamicsError::NoTerminatingEvent);
        }
        for e in &self.events {
            if !(e.tolerance > 0.0) {
                return Err(DynamicsError::InvalidTolerance(e.tolerance));
            }
            if !matches!(e.kind, EventKind::TimeElapsed(_)) && self.surface.is_none() {
                return Err(DynamicsError::MissingSurface);
            }
        }
        let inertia = match self.inertia {
            Some(j) => Some((j, j.try_inverse().ok_or(DynamicsError::SingularInertia)?)),
            None => None,
        };
        let inertia = inertia.as_ref();

        let t0 = initial.time;
        let t_end = self
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::TimeElapsed(d) => Some(t0 + d),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);
        let crossing: Vec<&EventSpec> = self
            .events
            .iter()
            .filter(|e| !matches!(e.kind, EventKind::TimeElapsed(_)))
            .collect();

        let mut s = Phase {
            r: initial.position,
            v: initial.velocity,
            q: initial.attitude.into_inner().normalize(),
            w: initial.angular_velocity,
        };
        // A start on the surface counts as outside so that an immediate
        // descent into the body registers as an impact.
        let mut prev: Vec<f64> = crossing
            .iter()
            .map(|e| self.event_value(&e.kind, &s.r).max(0.0))
            .collect();

        let mut log = TrajectoryLog {
            frame: self.model.frame_tag(),
            dt: self.dt,
            records: Vec::new(),
        };
        let mut step: u64 = 0;
        let mut t = t0;
        loop {
            let natural = self.model.natural_acceleration(t, &s.r, &s.v)?;
            let state = self.to_state(t, &s);
            if t >= t_end {
                // Final record after a time-elapsed stop; nothing more is applied.
                log.records
                    .push(self.record(t, &s, Command::default(), &natural));
                return Ok(Propagation {
                    log,
                    termination: Termination {
                        kind: EventKind::TimeElapsed(t_end - t0),
                        time: t,
                        state,
                    },
                });
            }
            let cmd = controller.command(&state, &natural)?;
            log.records.push(self.record(t, &s, cmd, &natural));

            let nominal = t0 + (step + 1) as f64 * self.dt;
            let (t_next, h) = if nominal >= t_end {
                (t_end, t_end - t)
            } else {
                (nominal, nominal - t)
            };
            let next = self.rk4(t, &s, h, &cmd, inertia)?;

            if self.model.body_position(&next.r).norm() > self.bounding_radius {
                controller.commit(&cmd, h);
                let n = self
                    .model
                    .natural_acceleration(t_next, &next.r, &next.v)
                    .unwrap_or(natural);
                log.records.push(self.record(t_next, &next, cmd, &n));
                return Err(DynamicsError::Divergence {
                    time: t_next,
                    radius: self.bounding_radius,
                    log: Box::new(log),
                });
            }

            let values: Vec<f64> = crossing
                .iter()
                .map(|e| self.event_value(&e.kind, &next.r))
                .collect();
            let fired: Vec<usize> = (0..crossing.len())
                .filter(|&i| prev[i] >= 0.0 && values[i] < 0.0)
                .collect();
            if !fired.is_empty() {
                let tol = fired
                    .iter()
                    .map(|&i| crossing[i].tolerance)
                    .fold(f64::INFINITY, f64::min);
                let (mut lo, mut hi) = (0.0, h);
                let mut first = fired[0];
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    let probe = self.rk4(t, &s, mid, &cmd, inertia)?;
                    let hit = fired
                        .iter()
                        .copied()
                        .find(|&i| self.event_value(&crossing[i].kind, &probe.r) < 0.0);
                    match hit {
                        Some(i) => {
                            first = i;
                            hi = mid;
                        }
                        None => lo = mid,
                    }
                }
                let h_evt = 0.5 * (lo + hi);
                let at = self.rk4(t, &s, h_evt, &cmd, inertia)?;
                controller.commit(&cmd, h_evt);
                let t_evt = t + h_evt;
                let n = self
                    .model
                    .natural_acceleration(t_evt, &at.r, &at.v)
                    .unwrap_or(natural);
                log.records.push(self.record(t_evt, &at, cmd, &n));
                return Ok(Propagation {
                    log,
                    termination: Termination {
                        kind: crossing[first].kind,
                        time: t_evt,
                        state: self.to_state(t_evt, &at),
                    },
                });
            }

            controller.commit(&cmd, h);
            prev = values;
            s = next;
            t = t_next;
            step += 1;
        }
    }
}

/// Free-function form of [`Propagator::propagate`].
pub fn propagate(
    propagator: &Propagator<'_>,
    initial: &SpacecraftState,
    controller: &mut dyn ControlLaw,
) -> Result<Propagation, DynamicsError> {
    propagator.propagate(initial, controller)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::SpinState;
    use crate::gravity::{PointMassField, UniformField};

    fn zero_field() -> UniformField {
        UniformField {
            g: Vector3::zeros(),
        }
    }

    #[test]
    fn reduces_to_gravity_without_spin() {
        let field = PointMassField {
            gm: 5.0,
            center: Vector3::zeros(),
        };
        let env = AsteroidEnvironment::quiescent();
        let m = TranslationalModel::body(&field, &env);
        let r = Vector3::new(3.0, -4.0, 0.0);
        let (_, a) = m
            .translational_derivative(0.0, &r, &Vector3::new(1.0, 1.0, 1.0), &Vector3::zeros())
            .unwrap();
        assert_eq!(a, field.acceleration(&r).unwrap());
    }

    #[test]
    fn centrifugal_term() {
        let field = zero_field();
        let env = AsteroidEnvironment {
            spin: SpinState::new(2e-3).unwrap(),
            ..AsteroidEnvironment::quiescent()
        };
        let m = TranslationalModel::body(&field, &env);
        let r = Vector3::new(500.0, 0.0, 0.0);
        let (_, a) = m
            .translational_derivative(0.0, &r, &Vector3::zeros(), &Vector3::zeros())
            .unwrap();
        assert!((a - Vector3::new(4e-6 * 500.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn coriolis_term() {
        let field = zero_field();
        let env = AsteroidEnvironment {
            spin: SpinState::new(1e-3).unwrap(),
            ..AsteroidEnvironment::quiescent()
        };
        let m = TranslationalModel::body(&field, &env);
        let (_, a) = m
            .translational_derivative(0.0, &Vector3::zeros(), &Vector3::x(), &Vector3::zeros())
            .unwrap();
        assert!((a - Vector3::new(0.0, -2e-3, 0.0)).norm() < 1e-18);
    }

    #[test]
    fn attitude_derivative_cases() {
        let j = Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 3.0));
        let q = Quaternion::identity();
        let (dq, dw) = attitude_derivative(&q, &Vector3::zeros(), &Vector3::zeros(), &j).unwrap();
        assert_eq!(dq, Quaternion::new(0.0, 0.0, 0.0, 0.0));
        assert_eq!(dw, Vector3::zeros());

        let (_, dw) =
            attitude_derivative(&q, &Vector3::new(0.0, 0.7, 0.0), &Vector3::zeros(), &j).unwrap();
        assert_eq!(dw, Vector3::zeros());

        let (_, dw) =
            attitude_derivative(&q, &Vector3::new(1.0, 1.0, 0.0), &Vector3::zeros(), &j).unwrap();
        assert!((dw - Vector3::new(0.0, 0.0, -1.0 / 3.0)).norm() < 1e-15);

        assert!(matches!(
            attitude_derivative(&q, &Vector3::zeros(), &Vector3::zeros(), &Matrix3::zeros()),
            Err(DynamicsError::SingularInertia)
        ));
    }

    #[test]
    fn free_motion() {
        let field = zero_field();
        let env = AsteroidEnvironment::quiescent();
        let p = Propagator::new(TranslationalModel::body(&field, &env), 0.1)
            .with_event(EventSpec::elapsed(10.0));
        let init =
            SpacecraftState::new(Frame::Body, Vector3::new(1.0, 2.0, 3.0), Vector3::x(), 0.0);
        let out = p.propagate(&init, &mut NoControl).unwrap();
        let end = out.termination.state;
        assert!((end.position - Vector3::new(11.0, 2.0, 3.0)).norm() < 1e-12);
        assert!((out.termination.time - 10.0).abs() < 1e-12);
        assert_eq!(out.log.records.len(), 101);
        for w in out.log.records.windows(2) {
            assert!(w[1].time > w[0].time);
        }
    }

    #[test]
    fn rejects_missing_events_and_bad_step() {
        let field = zero_field();
        let env = AsteroidEnvironment::quiescent();
        let init = SpacecraftState::new(Frame::Body, Vector3::zeros(), Vector3::zeros(), 0.0);
        let p = Propagator::new(TranslationalModel::body(&field, &env), 0.1);
        assert!(matches!(
            p.propagate(&init, &mut NoControl),
            Err(DynamicsError::NoTerminatingEvent)
        ));
        let p = Propagator::new(TranslationalModel::body(&field, &env), 0.0)
            .with_event(EventSpec::elapsed(1.0));
        assert!(matches!(
            p.propagate(&init, &mut NoControl),
            Err(DynamicsError::InvalidStep(_))
        ));
        let p = Propagator::new(TranslationalModel::body(&field, &env), 0.1)
            .with_event(EventSpec::impact(1e-3));
        assert!(matches!(
            p.propagate(&init, &mut NoControl),
            Err(DynamicsError::MissingSurface)
        ));
    }

    #[test]
    fn divergence_keeps_partial_log() {
        let field = zero_field();
        let env = AsteroidEnvironment::quiescent();
        let p = Propagator::new(TranslationalModel::body(&field, &env), 1.0)
            .with_event(EventSpec::elapsed(100.0))
            .with_bounding_radius(10.0);
        let init = SpacecraftState::new(Frame::Body, Vector3::zeros(), Vector3::x(), 0.0);
        match p.propagate(&init, &mut NoControl) {
            Err(DynamicsError::Divergence { time, log, .. }) => {
                assert!((time - 11.0).abs() < 1e-12);
                assert_eq!(log.records.len(), 12);
            }
            other => panic!("{other:?}"),
        }
    }
}

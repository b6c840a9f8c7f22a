//! Ballistic hops on the rotating body and the shooting solution of the hop
//! boundary-value problem.
//!
//! Hops are propagated in the body-fixed frame with no control acceleration.
//! The shooting solver runs Newton's method on the launch velocity, with the
//! Jacobian of the arrival position taken by forward differences.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::control::AttitudeController;
use crate::dynamics::{
    DynamicsError, EventKind, EventSpec, Frame, NoControl, Propagator, SpacecraftState, Surface,
    TrajectoryLog, TranslationalModel,
};
use crate::environment::AsteroidEnvironment;
use crate::gravity::GravityField;
use crate::mesh::PolyhedronMesh;

/// Escape radius as a multiple of the body's bounding radius.
pub const ESCAPE_RADIUS_FACTOR: f64 = 10.0;

/// Points within this fraction of the bounding radius of the surface count as
/// on it.
pub const SURFACE_BAND_FRACTION: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum HopError {
    #[error("invalid hop problem: {0}")]
    InvalidProblem(String),
    #[error("launch velocity points into the surface (outward component {normal_speed} m/s)")]
    InvalidLaunch { normal_speed: f64 },
    #[error("shooting did not converge in {iterations} iterations; best residual {best_residual} m at v0 = {best_velocity:?}")]
    NotConverged {
        iterations: usize,
        best_residual: f64,
        best_velocity: [f64; 3],
    },
    #[error("shooting Jacobian is singular")]
    SingularJacobian,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// How a hop ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HopOutcome {
    /// Touched the surface at `time` (s after launch), body frame.
    Impact {
        time: f64,
        position: Vector3<f64>,
        velocity: Vector3<f64>,
    },
    /// Crossed the escape sphere.
    Escape { time: f64 },
    /// Still aloft at the time limit.
    Timeout,
}

impl HopOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            HopOutcome::Impact { .. } => "impact",
            HopOutcome::Escape { .. } => "escape",
            HopOutcome::Timeout => "timeout",
        }
    }
}

/// Attitude loop flown during a hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopAttitude {
    pub controller: AttitudeController,
    pub inertia: Matrix3<f64>,
    pub initial_attitude: UnitQuaternion<f64>,
    pub initial_rate: Vector3<f64>,
}

/// Shared integration settings for hops and shooting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopOptions {
    /// Integration step, s.
    pub dt: f64,
    /// Impact time tolerance, s.
    pub event_tolerance: f64,
    /// Distance from the body center treated as escape, m.
    pub escape_radius: f64,
    pub attitude: Option<HopAttitude>,
}

impl HopOptions {
    pub fn for_mesh(mesh: &PolyhedronMesh) -> Self {
        Self {
            dt: 1.0,
            event_tolerance: 1e-3,
            escape_radius: ESCAPE_RADIUS_FACTOR * mesh.bounding_radius(),
            attitude: None,
        }
    }
}

/// A propagated hop.
#[derive(Debug, Clone)]
pub struct HopFlight {
    pub log: TrajectoryLog,
    pub outcome: HopOutcome,
}

/// Propagates an uncontrolled hop from `r0` with body-frame velocity `v0`
/// until impact, escape or `t_max` seconds.
#[allow(clippy::too_many_arguments)]
pub fn ballistic_hop(
    field: &dyn GravityField,
    env: &AsteroidEnvironment,
    mesh: &PolyhedronMesh,
    r0: &Vector3<f64>,
    v0: &Vector3<f64>,
    t_max: f64,
    options: &HopOptions,
) -> Result<HopFlight, HopError> {
    if !(t_max > 0.0) {
        return Err(HopError::InvalidProblem(format!(
            "time limit must be positive, got {t_max}"
        )));
    }
    let clearance = mesh.clearance(r0);
    if clearance < -SURFACE_BAND_FRACTION * mesh.bounding_radius() {
        return Err(HopError::InvalidProblem(format!(
            "launch point is {} m inside the surface",
            -clearance
        )));
    }
    if clearance.abs() <= SURFACE_BAND_FRACTION * mesh.bounding_radius() {
        let normal_speed = v0.dot(&mesh.outward_normal_near(r0));
        if normal_speed < 0.0 {
            return Err(HopError::InvalidLaunch { normal_speed });
        }
    }

    let model = TranslationalModel::body(field, env);
    let mut propagator = Propagator::new(model, options.dt)
        .with_surface(mesh)
        .with_event(EventSpec::impact(options.event_tolerance))
        .with_event(EventSpec::elapsed(t_max))
        .with_bounding_radius(options.escape_radius);
    let mut initial = SpacecraftState::new(Frame::Body, *r0, *v0, 0.0);

    let result = match options.attitude {
        Some(att) => {
            propagator = propagator.with_inertia(att.inertia);
            initial.attitude = att.initial_attitude;
            initial.angular_velocity = att.initial_rate;
            let mut ctl = att.controller;
            propagator.propagate(&initial, &mut ctl)
        }
        None => propagator.propagate(&initial, &mut NoControl),
    };
    match result {
        Ok(p) => {
            let outcome = match p.termination.kind {
                EventKind::SurfaceImpact => HopOutcome::Impact {
                    time: p.termination.time,
                    position: p.termination.state.position,
                    velocity: p.termination.state.velocity,
                },
                _ => HopOutcome::Timeout,
            };
            Ok(HopFlight {
                log: p.log,
                outcome,
            })
        }
        Err(DynamicsError::Divergence { time, log, .. }) => Ok(HopFlight {
            log: *log,
            outcome: HopOutcome::Escape { time },
        }),
        Err(e) => Err(e.into()),
    }
}

/// Fixed time-of-flight hop between two surface points, body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopProblem {
    pub launch: Vector3<f64>,
    pub target: Vector3<f64>,
    /// s
    pub time_of_flight: f64,
    /// Arrival miss distance accepted as converged, m.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl HopProblem {
    pub fn new(launch: Vector3<f64>, target: Vector3<f64>, time_of_flight: f64) -> Self {
        Self {
            launch,
            target,
            time_of_flight,
            tolerance: 0.1,
            max_iterations: 15,
        }
    }

    fn validate(&self) -> Result<(), HopError> {
        if !(self.time_of_flight > 0.0) || !self.time_of_flight.is_finite() {
            return Err(HopError::InvalidProblem(format!(
                "time of flight must be positive, got {}",
                self.time_of_flight
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(HopError::InvalidProblem(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// Checks both end points lie within the surface band of `mesh`.
    pub fn check_on_surface(&self, mesh: &PolyhedronMesh) -> Result<(), HopError> {
        let band = SURFACE_BAND_FRACTION * mesh.bounding_radius();
        for (name, p) in [("launch", &self.launch), ("target", &self.target)] {
            let c = mesh.clearance(p);
            if c.abs() > band {
                return Err(HopError::InvalidProblem(format!(
                    "{name} point is {c} m from the surface (band {band} m)"
                )));
            }
        }
        Ok(())
    }
}

/// Shooting settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub dt: f64,
    /// Forward-difference velocity perturbation, m/s.
    pub jacobian_step: f64,
    /// Replaces the flat-field initial guess.
    pub initial_guess: Option<Vector3<f64>>,
    pub escape_radius: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            dt: 1.0,
            jacobian_step: 1e-4,
            initial_guess: None,
            escape_radius: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HopSolution {
    /// Launch velocity, body frame, m/s.
    pub launch_velocity: Vector3<f64>,
    /// `|r(tau) - r_if|`, m.
    pub residual: f64,
    /// Newton updates taken.
    pub iterations: usize,
    /// Forward propagation of the converged launch velocity over `tau`.
    pub log: TrajectoryLog,
    /// Arrival position, body frame.
    pub arrival_position: Vector3<f64>,
    /// Arrival velocity, body frame.
    pub arrival_velocity: Vector3<f64>,
}

/// `v0 = dr / tau - g(r_i0) tau / 2`.
pub fn flat_field_guess(
    field: &dyn GravityField,
    problem: &HopProblem,
) -> Result<Vector3<f64>, HopError> {
    let g = field
        .acceleration(&problem.launch)
        .map_err(DynamicsError::from)?;
    let tau = problem.time_of_flight;
    Ok((problem.target - problem.launch) / tau - 0.5 * g * tau)
}

fn arrive(
    model: TranslationalModel<'_>,
    problem: &HopProblem,
    v0: &Vector3<f64>,
    options: &ShootingOptions,
) -> Result<(Vector3<f64>, Vector3<f64>, TrajectoryLog), HopError> {
    let p = Propagator::new(model, options.dt)
        .with_event(EventSpec::elapsed(problem.time_of_flight))
        .with_bounding_radius(options.escape_radius)
        .propagate(
            &SpacecraftState::new(Frame::Body, problem.launch, *v0, 0.0),
            &mut NoControl,
        )?;
    Ok((
        p.termination.state.position,
        p.termination.state.velocity,
        p.log,
    ))
}

/// Newton shooting for the launch velocity. Surface contact along the way is
/// not checked; use [`ballistic_hop`] on the result to test feasibility.
pub fn solve_hop_velocity(
    problem: &HopProblem,
    field: &dyn GravityField,
    env: &AsteroidEnvironment,
    options: &ShootingOptions,
) -> Result<HopSolution, HopError> {
    problem.validate()?;
    let model = TranslationalModel::body(field, env);
    let mut v = match options.initial_guess {
        Some(v) => v,
        None => flat_field_guess(field, problem)?,
    };
    let (mut r_end, mut v_end, mut log) = arrive(model, problem, &v, options)?;
    let mut miss = r_end - problem.target;
    let mut iterations = 0;

    while miss.norm() > problem.tolerance {
        if iterations >= problem.max_iterations {
            return Err(HopError::NotConverged {
                iterations,
                best_residual: miss.norm(),
                best_velocity: [v.x, v.y, v.z],
            });
        }
        let h = options.jacobian_step;
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let mut dv = v;
            dv[k] += h;
            let (r_k, _, _) = arrive(model, problem, &dv, options)?;
            jac.set_column(k, &((r_k - r_end) / h));
        }
        let step = jac.lu().solve(&(-miss)).ok_or(HopError::SingularJacobian)?;
        if !step.iter().all(|x| x.is_finite()) {
            return Err(HopError::SingularJacobian);
        }

        // Halve the step until the miss shrinks.
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..8 {
            let trial = v + step * scale;
            match arrive(model, problem, &trial, options) {
                Ok((r, vel, l)) if (r - problem.target).norm() < miss.norm() => {
                    accepted = Some((trial, r, vel, l));
                    break;
                }
                _ => scale *= 0.5,
            }
        }
        iterations += 1;
        let Some((trial, r, vel, l)) = accepted else {
            return Err(HopError::NotConverged {
                iterations,
                best_residual: miss.norm(),
                best_velocity: [v.x, v.y, v.z],
            });
        };
        v = trial;
        r_end = r;
        v_end = vel;
        log = l;
        miss = r_end - problem.target;
    }

    Ok(HopSolution {
        launch_velocity: v,
        residual: miss.norm(),
        iterations,
        log,
        arrival_position: r_end,
        arrival_velocity: v_end,
    })
}

/// One element of a hop batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HopTask {
    /// Propagate a given launch.
    Launch {
        r0: Vector3<f64>,
        v0: Vector3<f64>,
        t_max: f64,
    },
    /// Solve a boundary-value problem.
    Solve(HopProblem),
}

#[derive(Debug)]
pub enum HopResult {
    Flight(HopFlight),
    Solution(HopSolution),
}

/// Runs every task independently on a pool of `width` threads. Results come
/// back in task order; one failure does not stop the others.
pub fn hop_batch(
    tasks: &[HopTask],
    field: &dyn GravityField,
    env: &AsteroidEnvironment,
    mesh: &PolyhedronMesh,
    hop: &HopOptions,
    shooting: &ShootingOptions,
    width: usize,
) -> Result<Vec<Result<HopResult, HopError>>, HopError> {
    if tasks.is_empty() {
        return Err(HopError::InvalidProblem("hop batch is empty".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(width.max(1))
        .build()
        .map_err(|e| HopError::InvalidProblem(format!("thread pool: {e}")))?;
    let run = |task: &HopTask| match task {
        HopTask::Launch { r0, v0, t_max } => {
            ballistic_hop(field, env, mesh, r0, v0, *t_max, hop).map(HopResult::Flight)
        }
        HopTask::Solve(problem) => problem
            .check_on_surface(mesh)
            .and_then(|_| solve_hop_velocity(problem, field, env, shooting))
            .map(HopResult::Solution),
    };
    Ok(pool.install(|| tasks.par_iter().map(run).collect()))
}

/// Launch velocities at `speeds` in `azimuths` (rad, measured in the local
/// tangent plane from the projection of body `+z`, or `+x` near the poles),
/// tilted `elevation` rad above the tangent plane of `site`.
pub fn launch_grid(
    mesh: &PolyhedronMesh,
    site: &Vector3<f64>,
    speeds: &[f64],
    azimuths: &[f64],
    elevation: f64,
) -> Vec<Vector3<f64>> {
    let n = mesh.outward_normal_near(site);
    let seed = if n.z.abs() < 0.9 {
        Vector3::z()
    } else {
        Vector3::x()
    };
    let e1 = (seed - n * n.dot(&seed)).normalize();
    let e2 = n.cross(&e1);
    let mut out = Vec::with_capacity(speeds.len() * azimuths.len());
    for &az in azimuths {
        let tangent = e1 * az.cos() + e2 * az.sin();
        let dir = tangent * elevation.cos() + n * elevation.sin();
        for &s in speeds {
            out.push(dir * s);
        }
    }
    out
}

/// Largest deviation of a logged track from the constant-gravity parabola
/// through its first state, divided by the largest displacement from launch.
/// Near zero for a flat-field hop.
pub fn parabolic_deviation(log: &TrajectoryLog) -> f64 {
    let Some(first) = log.records.first() else {
        return 0.0;
    };
    let (r0, v0, g0, t0) = (first.position, first.velocity, first.gravity, first.time);
    let (mut dev, mut span) = (0.0f64, 0.0f64);
    for rec in &log.records {
        let t = rec.time - t0;
        let parabola = r0 + v0 * t + 0.5 * g0 * t * t;
        dev = dev.max((rec.position - parabola).norm());
        span = span.max((rec.position - r0).norm());
    }
    if span > 0.0 {
        dev / span
    } else {
        0.0
    }
}

/// Attitude-error angle at the end of a flight, rad.
pub fn final_attitude_error(log: &TrajectoryLog, target: &UnitQuaternion<f64>) -> Option<f64> {
    log.last().map(|r| target.angle_to(&r.attitude))
}

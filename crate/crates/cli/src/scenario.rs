//! Builds the physical models from a configuration and runs the phases.

use nalgebra::{UnitQuaternion, Vector3};
use smallbody_gnc::control::{
    box_inertia, euler_321_to_quaternion, AttitudeController, AttitudeGains, Autopilot,
    DescentController, Feedforward, ReactionWheelSet, SpacecraftInertia, TranslationGains,
};
use smallbody_gnc::dynamics::{
    DynamicsError, EventKind, EventSpec, Frame, Propagator, SpacecraftState, Termination,
    TrajectoryLog, TranslationalModel,
};
use smallbody_gnc::environment::{
    AsteroidEnvironment, DisturbanceParams, SpinState, SunEphemeris, ASTRONOMICAL_UNIT,
};
use smallbody_gnc::frames::SiteFrame;
use smallbody_gnc::gravity::{GravityField, GravityModel};
use smallbody_gnc::guidance::{BoundaryConditions, GuidanceProfile};
use smallbody_gnc::hop::{
    ballistic_hop, hop_batch, launch_grid, HopError, HopFlight, HopOptions, HopOutcome, HopProblem,
    HopResult, HopSolution, HopTask, ShootingOptions, ESCAPE_RADIUS_FACTOR,
};
use smallbody_gnc::mesh::{parse_shape_model, PolyhedronMesh};
use smallbody_gnc::GRAVITATIONAL_CONSTANT;

use crate::config::{
    FeedforwardMode, HopBatchConfig, LandingConfig, PointConfig, ScenarioConfig, SunConfig, Units,
};
use crate::CliError;

fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

/// Models shared by every phase of a run.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mesh: PolyhedronMesh,
    pub gravity: GravityModel,
    pub env: AsteroidEnvironment,
    pub site: Option<SiteFrame>,
}

/// Loads a shape model, honoring the configured default units.
pub fn load_mesh(path: &std::path::Path, units: Option<Units>) -> Result<PolyhedronMesh, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read shape model {}: {e}", path.display()))
    })?;
    // A directive inside the file comes later and therefore wins.
    let text = match units {
        Some(Units::Km) => format!("# units: km\n{text}"),
        _ => text,
    };
    parse_shape_model(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn build_environment(
    cfg: &crate::config::EnvironmentConfig,
) -> Result<AsteroidEnvironment, CliError> {
    let spin = match (cfg.rotation_period, cfg.spin_rate) {
        (Some(p), _) => SpinState::from_period(p),
        (None, Some(w)) => SpinState::new(w),
        (None, None) => SpinState::new(0.0),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let sun = match &cfg.sun {
        SunConfig::Fixed {
            direction,
            distance_au,
        } => SunEphemeris::fixed(v3(*direction), distance_au * ASTRONOMICAL_UNIT),
        SunConfig::Circular {
            distance_au,
            rate,
            phase,
            normal,
        } => SunEphemeris::circular(distance_au * ASTRONOMICAL_UNIT, *rate, *phase, v3(*normal)),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(AsteroidEnvironment {
        spin,
        sun,
        disturbance: DisturbanceParams {
            srp_coefficient: cfg.srp_coefficient,
            mu_sun: cfg.mu_sun,
            indirect: cfg.indirect,
        },
        disturbance_torque: v3(cfg.disturbance_torque),
    })
}

/// One propagated phase, possibly cut short by a physics failure.
#[derive(Debug, Clone)]
pub struct PhaseRun {
    pub name: &'static str,
    pub log: TrajectoryLog,
    pub termination: Option<Termination>,
    pub profile: Option<GuidanceProfile>,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct HopRun {
    pub problem: HopProblem,
    pub result: Result<HopSolution, HopError>,
    /// Re-propagation of the solution with surface contact enabled.
    pub check: Option<HopOutcome>,
}

#[derive(Debug)]
pub struct BatchRun {
    pub launch: Vector3<f64>,
    pub velocities: Vec<Vector3<f64>>,
    pub speeds: Vec<f64>,
    pub azimuths_deg: Vec<f64>,
    pub results: Vec<Result<HopFlight, HopError>>,
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Self, CliError> {
        config.validate()?;
        let mesh = load_mesh(&config.model.shape, config.model.units)?;
        let g = config
            .model
            .gravitational_constant
            .unwrap_or(GRAVITATIONAL_CONSTANT);
        let gravity = GravityModel::with_constant(mesh.clone(), config.model.density, g)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let env = build_environment(&config.environment)?;
        let site = match &config.site {
            None => None,
            Some(s) => {
                let p = resolve_point(&mesh, s.vertex, s.position, "site")?;
                let frame = match s.longitude {
                    Some(lon) => SiteFrame::with_longitude(p, lon),
                    None => SiteFrame::from_position(p),
                }
                .map_err(|e| CliError::Config(e.to_string()))?;
                Some(frame)
            }
        };
        Ok(Self {
            config,
            mesh,
            gravity,
            env,
            site,
        })
    }

    pub fn escape_radius(&self) -> f64 {
        ESCAPE_RADIUS_FACTOR * self.mesh.bounding_radius()
    }

    fn site_frame(&self) -> Result<SiteFrame, CliError> {
        self.site
            .ok_or_else(|| CliError::Config("a [site] section is required".into()))
    }

    /// Boundary conditions for the descent, with `a_final` defaulting to
    /// minus local gravity at the target.
    pub fn descent_boundary(&self) -> Result<BoundaryConditions, CliError> {
        let d = self
            .config
            .descent
            .as_ref()
            .ok_or_else(|| CliError::Config("no [descent] section".into()))?;
        let site = self.site_frame()?;
        let r_final = v3(d.r_final);
        let a_final = match d.a_final {
            Some(a) => v3(a),
            None => {
                let g = self
                    .gravity
                    .acceleration(&site.position_to_body(&r_final))
                    .map_err(|e| CliError::Physics(e.to_string()))?;
                -site.vector_to_site(&g)
            }
        };
        Ok(BoundaryConditions {
            r0: v3(d.r0),
            v0: v3(d.v0),
            r_final,
            v_final: v3(d.v_final),
            a_final,
        })
    }

    pub fn descent_profile(&self) -> Result<GuidanceProfile, CliError> {
        let bc = self.descent_boundary()?;
        let tau = self.config.descent.as_ref().and_then(|d| d.tau);
        match tau {
            Some(t) => smallbody_gnc::guidance::solve_profile(&bc, t),
            None => GuidanceProfile::plan(&bc),
        }
        .map_err(|e| CliError::Physics(format!("descent guidance: {e}")))
    }

    pub fn run_descent(&self) -> Result<PhaseRun, CliError> {
        let d = self.config.descent.as_ref().expect("checked by caller");
        let site = self.site_frame()?;
        let profile = self.descent_profile()?;
        let gains = TranslationGains {
            kp: Vector3::repeat(d.kp),
            kd: Vector3::repeat(d.kd),
            feedforward: match d.feedforward {
                FeedforwardMode::Off => Feedforward::Off,
                FeedforwardMode::GravityDisturbance => Feedforward::GravityDisturbance,
                FeedforwardMode::Full => Feedforward::Full,
            },
            accel_limit: d.accel_limit,
        };
        let mut controller = DescentController::new(profile, gains, 0.0)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let model = TranslationalModel::site(&self.gravity, &self.env, site);
        let propagator = Propagator::new(model, d.dt)
            .with_surface(&self.mesh)
            .with_event(EventSpec::impact(1e-3))
            .with_event(EventSpec::elapsed(profile.tau))
            .with_bounding_radius(self.escape_radius());
        let initial = SpacecraftState::new(Frame::Site, profile.bc.r0, profile.bc.v0, 0.0);
        Ok(phase_result(
            "descent",
            Some(profile),
            d.dt,
            propagator.propagate(&initial, &mut controller),
        ))
    }

    pub fn landing_inertia(l: &LandingConfig) -> Result<SpacecraftInertia, CliError> {
        box_inertia(l.mass, v3(l.dims)).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn landing_controller(
        l: &LandingConfig,
        inertia: &SpacecraftInertia,
    ) -> Result<AttitudeController, CliError> {
        let cfg_err = |e: smallbody_gnc::control::ControlError| CliError::Config(e.to_string());
        let scaled =
            AttitudeGains::scaled_to(&inertia.inertia, l.cp_scale, l.cd_scale).map_err(cfg_err)?;
        let gains = AttitudeGains::new(
            l.cp.map(v3).unwrap_or(scaled.cp),
            l.cd.map(v3).unwrap_or(scaled.cd),
        )
        .map_err(cfg_err)?;
        let wheels = ReactionWheelSet {
            max_torque: l.wheel_max_torque,
            wheel_inertia: l.wheel_inertia,
            momentum: Vector3::zeros(),
            momentum_limit: l.momentum_limit,
        };
        AttitudeController::new(euler_321_to_quaternion(&v3(l.target_euler)), gains, wheels)
            .map_err(cfg_err)
    }

    /// Free fall from `start` (site frame) with attitude control only.
    pub fn run_landing(
        &self,
        start: Option<(Vector3<f64>, Vector3<f64>)>,
    ) -> Result<PhaseRun, CliError> {
        let l = self.config.landing.as_ref().expect("checked by caller");
        let site = self.site_frame()?;
        let inertia = Self::landing_inertia(l)?;
        let attitude = Self::landing_controller(l, &inertia)?;
        let (r0, v0) = match (l.r0, l.v0, start) {
            (Some(r), Some(v), _) => (v3(r), v3(v)),
            (r, v, Some((sr, sv))) => (r.map(v3).unwrap_or(sr), v.map(v3).unwrap_or(sv)),
            (r, v, None) => (
                r.map(v3).unwrap_or(Vector3::new(0.0, 0.0, 100.0)),
                v.map(v3).unwrap_or(Vector3::new(0.0, 0.0, -0.2)),
            ),
        };
        let model = TranslationalModel::site(&self.gravity, &self.env, site);
        let propagator = Propagator::new(model, l.dt)
            .with_surface(&self.mesh)
            .with_inertia(inertia.inertia)
            .with_event(EventSpec::impact(l.event_tolerance))
            .with_event(EventSpec::elapsed(l.t_max))
            .with_bounding_radius(self.escape_radius());
        let mut initial = SpacecraftState::new(Frame::Site, r0, v0, 0.0);
        initial.attitude = euler_321_to_quaternion(&v3(l.euler0));
        initial.angular_velocity = v3(l.omega0);
        let mut controller = Autopilot {
            translation: None,
            attitude: Some(attitude),
        };
        Ok(phase_result(
            "landing",
            None,
            l.dt,
            propagator.propagate(&initial, &mut controller),
        ))
    }

    pub fn hop_problems(&self) -> Result<Vec<(HopProblem, f64)>, CliError> {
        self.config
            .hops
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let launch = resolve(&self.mesh, &h.launch, &format!("hops[{i}].launch"))?;
                let target = resolve(&self.mesh, &h.target, &format!("hops[{i}].target"))?;
                let problem = HopProblem {
                    launch,
                    target,
                    time_of_flight: h.time_of_flight,
                    tolerance: h.tolerance,
                    max_iterations: h.max_iterations,
                };
                problem
                    .check_on_surface(&self.mesh)
                    .map_err(|e| CliError::Config(format!("hops[{i}]: {e}")))?;
                Ok((problem, h.dt))
            })
            .collect()
    }

    /// Solves every configured hop, then re-flies each solution with surface
    /// contact enabled.
    pub fn run_hops(&self) -> Result<Vec<HopRun>, CliError> {
        let mut out = Vec::new();
        for (problem, dt) in self.hop_problems()? {
            let shooting = ShootingOptions {
                dt,
                escape_radius: self.escape_radius(),
                ..ShootingOptions::default()
            };
            let result = smallbody_gnc::hop::solve_hop_velocity(
                &problem,
                &self.gravity,
                &self.env,
                &shooting,
            );
            let check = result.as_ref().ok().and_then(|s| {
                let opts = HopOptions {
                    dt,
                    ..HopOptions::for_mesh(&self.mesh)
                };
                ballistic_hop(
                    &self.gravity,
                    &self.env,
                    &self.mesh,
                    &problem.launch,
                    &s.launch_velocity,
                    2.0 * problem.time_of_flight,
                    &opts,
                )
                .ok()
                .map(|f| f.outcome)
            });
            out.push(HopRun {
                problem,
                result,
                check,
            });
        }
        Ok(out)
    }

    pub fn batch_velocities(
        &self,
        b: &HopBatchConfig,
    ) -> Result<(Vector3<f64>, Vec<Vector3<f64>>), CliError> {
        let launch = resolve(&self.mesh, &b.launch, "hop_batch.launch")?;
        let az: Vec<f64> = b.azimuths_deg.iter().map(|a| a.to_radians()).collect();
        let v = launch_grid(
            &self.mesh,
            &launch,
            &b.speeds,
            &az,
            b.elevation_deg.to_radians(),
        );
        Ok((launch, v))
    }

    /// Propagates the launch grid on `width` threads (config value unless overridden).
    pub fn run_hop_batch(&self, width: Option<usize>) -> Result<BatchRun, CliError> {
        let b = self
            .config
            .hop_batch
            .as_ref()
            .ok_or_else(|| CliError::Config("no [hop_batch] section".into()))?;
        let (launch, velocities) = self.batch_velocities(b)?;
        let tasks: Vec<HopTask> = velocities
            .iter()
            .map(|v| HopTask::Launch {
                r0: launch,
                v0: *v,
                t_max: b.t_max,
            })
            .collect();
        let opts = HopOptions {
            dt: b.dt,
            ..HopOptions::for_mesh(&self.mesh)
        };
        let results = hop_batch(
            &tasks,
            &self.gravity,
            &self.env,
            &self.mesh,
            &opts,
            &ShootingOptions::default(),
            width.unwrap_or(b.width),
        )
        .map_err(|e| CliError::Config(e.to_string()))?
        .into_iter()
        .map(|r| {
            r.map(|res| match res {
                HopResult::Flight(f) => f,
                HopResult::Solution(_) => unreachable!("batch holds launches only"),
            })
        })
        .collect();
        // Order: every speed for the first azimuth, then the next azimuth.
        let mut speeds = Vec::new();
        let mut azimuths_deg = Vec::new();
        for &a in &b.azimuths_deg {
            for &s in &b.speeds {
                speeds.push(s);
                azimuths_deg.push(a);
            }
        }
        Ok(BatchRun {
            launch,
            velocities,
            speeds,
            azimuths_deg,
            results,
        })
    }
}

fn resolve_point(
    mesh: &PolyhedronMesh,
    vertex: Option<usize>,
    position: Option<[f64; 3]>,
    what: &str,
) -> Result<Vector3<f64>, CliError> {
    match (vertex, position) {
        (Some(i), None) => mesh.vertices().get(i).copied().ok_or_else(|| {
            CliError::Config(format!(
                "{what}: vertex {i} out of range ({} vertices)",
                mesh.vertex_count()
            ))
        }),
        (None, Some(p)) => Ok(v3(p)),
        _ => Err(CliError::Config(format!(
            "{what}: give exactly one of `vertex` or `position`"
        ))),
    }
}

/// Height, m, by which hop endpoints given as vertices are raised along the
/// outward normal: the field's edge terms are singular exactly on a vertex.
pub const HOP_VERTEX_LIFT: f64 = 0.01;

fn resolve(mesh: &PolyhedronMesh, p: &PointConfig, what: &str) -> Result<Vector3<f64>, CliError> {
    let r = resolve_point(mesh, p.vertex, p.position, what)?;
    Ok(match p.vertex {
        Some(_) => r + mesh.outward_normal_near(&r) * HOP_VERTEX_LIFT,
        None => r,
    })
}

fn phase_result(
    name: &'static str,
    profile: Option<GuidanceProfile>,
    dt: f64,
    result: Result<smallbody_gnc::dynamics::Propagation, DynamicsError>,
) -> PhaseRun {
    match result {
        Ok(p) => PhaseRun {
            name,
            log: p.log,
            termination: Some(p.termination),
            profile,
            error: None,
        },
        Err(DynamicsError::Divergence { time, radius, log }) => PhaseRun {
            name,
            log: *log,
            termination: None,
            profile,
            error: Some(format!("left the {radius} m sphere at t = {time} s")),
        },
        Err(e) => PhaseRun {
            name,
            log: TrajectoryLog {
                frame: Frame::Site,
                dt,
                records: Vec::new(),
            },
            termination: None,
            profile,
            error: Some(e.to_string()),
        },
    }
}

impl PhaseRun {
    pub fn event_label(&self) -> String {
        match &self.termination {
            Some(t) => match t.kind {
                EventKind::SurfaceImpact => "surface-impact".into(),
                EventKind::AltitudeBelow(h) => format!("altitude-below-{h}"),
                EventKind::TimeElapsed(_) => "time-elapsed".into(),
            },
            None => "diverged".into(),
        }
    }

    pub fn terminal_state(&self) -> Option<SpacecraftState> {
        match &self.termination {
            Some(t) => Some(t.state),
            None => self.log.last().map(|r| r.state(self.log.frame)),
        }
    }
}

/// Attitude error of `q` from `target`, rad.
pub fn attitude_error_angle(q: &UnitQuaternion<f64>, target: &UnitQuaternion<f64>) -> f64 {
    target.angle_to(q)
}

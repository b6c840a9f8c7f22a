//! Scenario configuration (TOML). Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub environment: EnvironmentConfig,
    pub site: Option<SiteConfig>,
    pub descent: Option<DescentConfig>,
    pub landing: Option<LandingConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hops: Vec<HopConfig>,
    pub hop_batch: Option<HopBatchConfig>,
    pub gravity: Option<GravitySampleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seed for any sampling utilities.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    M,
    Km,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Shape-model file; relative paths resolve against the config file.
    pub shape: PathBuf,
    /// Coordinate units of the file when it carries no units directive.
    pub units: Option<Units>,
    /// kg/m^3
    pub density: f64,
    pub gravitational_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// s; mutually exclusive with `spin_rate`.
    pub rotation_period: Option<f64>,
    /// rad/s
    pub spin_rate: Option<f64>,
    #[serde(default)]
    pub sun: SunConfig,
    /// m^3/s^2
    #[serde(default)]
    pub srp_coefficient: f64,
    /// m^3/s^2
    #[serde(default = "default_mu_sun")]
    pub mu_sun: f64,
    #[serde(default = "default_true")]
    pub indirect: bool,
    /// N m, spacecraft body axes.
    #[serde(default)]
    pub disturbance_torque: [f64; 3],
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            rotation_period: None,
            spin_rate: None,
            sun: SunConfig::default(),
            srp_coefficient: 0.0,
            mu_sun: default_mu_sun(),
            indirect: true,
            disturbance_torque: [0.0; 3],
        }
    }
}

fn default_mu_sun() -> f64 {
    smallbody_gnc::environment::DEFAULT_MU_SUN
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum SunConfig {
    /// Sun fixed in the inertial frame (appears to circle in the body frame
    /// when the body spins).
    Fixed {
        #[serde(default = "default_sun_direction")]
        direction: [f64; 3],
        /// astronomical units
        #[serde(default = "default_sun_distance")]
        distance_au: f64,
    },
    /// Heliocentric circular orbit.
    Circular {
        distance_au: f64,
        /// rad/s
        rate: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default = "default_orbit_normal")]
        normal: [f64; 3],
    },
}

impl Default for SunConfig {
    fn default() -> Self {
        SunConfig::Fixed {
            direction: default_sun_direction(),
            distance_au: default_sun_distance(),
        }
    }
}

fn default_sun_direction() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn default_sun_distance() -> f64 {
    1.0
}

fn default_orbit_normal() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Landing site: exactly one of `vertex` or `position`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub vertex: Option<usize>,
    pub position: Option<[f64; 3]>,
    /// rad; required when the site is on the spin axis.
    pub longitude: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FeedforwardMode {
    Off,
    GravityDisturbance,
    #[default]
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentConfig {
    /// Site frame, m.
    pub r0: [f64; 3],
    pub v0: [f64; 3],
    pub r_final: [f64; 3],
    pub v_final: [f64; 3],
    /// Defaults to minus local gravity at `r_final`.
    pub a_final: Option<[f64; 3]>,
    /// Overrides the transfer time chosen from the vertical channel, s.
    pub tau: Option<f64>,
    #[serde(default = "default_descent_dt")]
    pub dt: f64,
    #[serde(default = "default_kp")]
    pub kp: f64,
    #[serde(default = "default_kd")]
    pub kd: f64,
    #[serde(default)]
    pub feedforward: FeedforwardMode,
    /// m/s^2 per axis.
    pub accel_limit: Option<f64>,
}

fn default_descent_dt() -> f64 {
    0.5
}
fn default_kp() -> f64 {
    4e-4
}
fn default_kd() -> f64 {
    4e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandingConfig {
    /// Site frame; defaults to the descent terminal state, or `[0, 0, 100]`.
    pub r0: Option<[f64; 3]>,
    /// Defaults to the descent terminal velocity, or `[0, 0, -0.2]`.
    pub v0: Option<[f64; 3]>,
    /// Initial 3-2-1 Euler angles `[roll, pitch, yaw]`, rad.
    #[serde(default)]
    pub euler0: [f64; 3],
    /// rad/s, body axes.
    #[serde(default)]
    pub omega0: [f64; 3],
    #[serde(default)]
    pub target_euler: [f64; 3],
    /// kg
    #[serde(default = "default_mass")]
    pub mass: f64,
    /// m, body X, Y, Z.
    #[serde(default = "default_dims")]
    pub dims: [f64; 3],
    /// Proportional gain per unit principal moment, s^-2.
    #[serde(default = "default_cp_scale")]
    pub cp_scale: f64,
    /// Derivative gain per unit principal moment, s^-1.
    #[serde(default = "default_cd_scale")]
    pub cd_scale: f64,
    /// Explicit per-axis gains, N m / rad and N m s / rad; override the scales.
    pub cp: Option<[f64; 3]>,
    pub cd: Option<[f64; 3]>,
    #[serde(default = "default_wheel_torque")]
    pub wheel_max_torque: f64,
    #[serde(default = "default_wheel_inertia")]
    pub wheel_inertia: f64,
    pub momentum_limit: Option<f64>,
    #[serde(default = "default_landing_dt")]
    pub dt: f64,
    /// s
    #[serde(default = "default_landing_t_max")]
    pub t_max: f64,
    /// s
    #[serde(default = "default_event_tolerance")]
    pub event_tolerance: f64,
}

fn default_mass() -> f64 {
    50.0
}
fn default_dims() -> [f64; 3] {
    [0.6, 0.36, 0.36]
}
fn default_cp_scale() -> f64 {
    0.5
}
fn default_cd_scale() -> f64 {
    2.0
}
fn default_wheel_torque() -> f64 {
    smallbody_gnc::control::DEFAULT_WHEEL_TORQUE
}
fn default_wheel_inertia() -> f64 {
    smallbody_gnc::control::DEFAULT_WHEEL_INERTIA
}
fn default_landing_dt() -> f64 {
    0.05
}
fn default_landing_t_max() -> f64 {
    5000.0
}
fn default_event_tolerance() -> f64 {
    1e-3
}

/// A point on the surface: exactly one of `vertex` or `position` (body frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub vertex: Option<usize>,
    pub position: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopConfig {
    pub launch: PointConfig,
    pub target: PointConfig,
    /// s
    pub time_of_flight: f64,
    /// m
    #[serde(default = "default_hop_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_hop_dt")]
    pub dt: f64,
}

fn default_hop_tolerance() -> f64 {
    0.1
}
fn default_max_iterations() -> usize {
    15
}
fn default_hop_dt() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopBatchConfig {
    pub launch: PointConfig,
    /// m/s
    pub speeds: Vec<f64>,
    /// Launch azimuths in the local tangent plane, degrees.
    #[serde(default = "default_azimuths")]
    pub azimuths_deg: Vec<f64>,
    /// Launch elevation above the local tangent plane, degrees.
    #[serde(default = "default_elevation")]
    pub elevation_deg: f64,
    /// s
    #[serde(default = "default_hop_t_max")]
    pub t_max: f64,
    #[serde(default = "default_hop_dt")]
    pub dt: f64,
    #[serde(default = "default_width")]
    pub width: usize,
}

fn default_azimuths() -> Vec<f64> {
    vec![0.0]
}
fn default_elevation() -> f64 {
    45.0
}
fn default_hop_t_max() -> f64 {
    20000.0
}
fn default_width() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravitySampleConfig {
    /// Body frame, m.
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
    pub grid: Option<GridConfig>,
}

/// Regular lattice between two corners, inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub counts: [usize; 3],
}

impl GridConfig {
    pub fn points(&self) -> Vec<[f64; 3]> {
        let axis = |k: usize, i: usize| {
            if self.counts[k] <= 1 {
                self.min[k]
            } else {
                self.min[k] + (self.max[k] - self.min[k]) * i as f64 / (self.counts[k] - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.counts.iter().product());
        for i in 0..self.counts[0] {
            for j in 0..self.counts[1] {
                for k in 0..self.counts[2] {
                    out.push([axis(0, i), axis(1, j), axis(2, k)]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Emit plot-ready datasets.
    #[serde(default = "default_true")]
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            plots: true,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive, got {v}")))
    }
}

fn exactly_one(
    name: &str,
    vertex: &Option<usize>,
    position: &Option<[f64; 3]>,
) -> Result<(), CliError> {
    match (vertex, position) {
        (Some(_), None) | (None, Some(_)) => Ok(()),
        _ => Err(config_err(format!(
            "{name}: give exactly one of `vertex` or `position`"
        ))),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Reads, resolves relative paths against the file's directory, and validates.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.model.shape.is_relative() {
            cfg.model.shape = base.join(&cfg.model.shape);
        }
        if let Some(dir) = cfg.output.dir.as_mut() {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("model.density", self.model.density)?;
        if let Some(g) = self.model.gravitational_constant {
            positive("model.gravitational_constant", g)?;
        }
        if !self.model.shape.is_file() {
            return Err(config_err(format!(
                "shape model {} does not exist",
                self.model.shape.display()
            )));
        }
        let env = &self.environment;
        match (env.rotation_period, env.spin_rate) {
            (Some(_), Some(_)) => {
                return Err(config_err(
                    "environment: give at most one of `rotation_period` or `spin_rate`",
                ))
            }
            (Some(p), None) => positive("environment.rotation_period", p)?,
            (None, Some(w)) if w.is_nan() || w < 0.0 => {
                return Err(config_err(format!(
                    "environment.spin_rate must be non-negative, got {w}"
                )))
            }
            _ => {}
        }
        if env.srp_coefficient < 0.0 || env.mu_sun < 0.0 {
            return Err(config_err(
                "environment: srp_coefficient and mu_sun must be non-negative",
            ));
        }
        if let Some(site) = &self.site {
            exactly_one("site", &site.vertex, &site.position)?;
        }
        if (self.descent.is_some() || self.landing.is_some()) && self.site.is_none() {
            return Err(config_err("descent and landing need a [site] section"));
        }
        if let Some(d) = &self.descent {
            positive("descent.dt", d.dt)?;
            if d.kp < 0.0 || d.kd < 0.0 {
                return Err(config_err("descent gains must be non-negative"));
            }
            if let Some(t) = d.tau {
                positive("descent.tau", t)?;
            }
            if let Some(l) = d.accel_limit {
                positive("descent.accel_limit", l)?;
            }
        }
        if let Some(l) = &self.landing {
            positive("landing.dt", l.dt)?;
            positive("landing.t_max", l.t_max)?;
            positive("landing.mass", l.mass)?;
            positive("landing.wheel_max_torque", l.wheel_max_torque)?;
            positive("landing.wheel_inertia", l.wheel_inertia)?;
            positive("landing.event_tolerance", l.event_tolerance)?;
            for d in l.dims {
                positive("landing.dims", d)?;
            }
        }
        for (i, h) in self.hops.iter().enumerate() {
            exactly_one(
                &format!("hops[{i}].launch"),
                &h.launch.vertex,
                &h.launch.position,
            )?;
            exactly_one(
                &format!("hops[{i}].target"),
                &h.target.vertex,
                &h.target.position,
            )?;
            positive("hops.time_of_flight", h.time_of_flight)?;
            positive("hops.tolerance", h.tolerance)?;
            positive("hops.dt", h.dt)?;
        }
        if let Some(b) = &self.hop_batch {
            exactly_one("hop_batch.launch", &b.launch.vertex, &b.launch.position)?;
            if b.speeds.is_empty() || b.azimuths_deg.is_empty() {
                return Err(config_err(
                    "hop_batch needs at least one speed and one azimuth",
                ));
            }
            positive("hop_batch.t_max", b.t_max)?;
            positive("hop_batch.dt", b.dt)?;
            if b.width == 0 {
                return Err(config_err("hop_batch.width must be at least 1"));
            }
        }
        Ok(())
    }

    /// Applies `--dt-override` to every phase.
    pub fn override_dt(&mut self, dt: f64) -> Result<(), CliError> {
        positive("--dt-override", dt)?;
        if let Some(d) = self.descent.as_mut() {
            d.dt = dt;
        }
        if let Some(l) = self.landing.as_mut() {
            l.dt = dt;
        }
        for h in &mut self.hops {
            h.dt = dt;
        }
        if let Some(b) = self.hop_batch.as_mut() {
            b.dt = dt;
        }
        Ok(())
    }
}

//! CSV and JSON writers. Floats are printed in shortest round-trip form, so
//! identical runs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;
use smallbody_gnc::control::quaternion_to_euler_321;
use smallbody_gnc::dynamics::{LogRecord, Saturation, TrajectoryLog};
use smallbody_gnc::gravity::GravityModel;
use smallbody_gnc::guidance::GuidanceProfile;
use smallbody_gnc::hop::{parabolic_deviation, HopOutcome};

use crate::config::ScenarioConfig;
use crate::scenario::{BatchRun, HopRun, PhaseRun, Scenario};
use crate::CliError;

pub const TRAJECTORY_HEADER: &str =
    "t,rx,ry,rz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz,ux,uy,uz,tqx,tqy,tqz,wheel1,wheel2,wheel3,sat_flags";

pub const GRAVITY_HEADER: &str = "x,y,z,V,gx,gy,gz,laplacian,error";

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
}

fn record_row(out: &mut String, r: &LogRecord) {
    let q = r.attitude.quaternion();
    let c = &r.command;
    push_row(
        out,
        &[
            r.time,
            r.position.x,
            r.position.y,
            r.position.z,
            r.velocity.x,
            r.velocity.y,
            r.velocity.z,
            q.w,
            q.i,
            q.j,
            q.k,
            r.angular_velocity.x,
            r.angular_velocity.y,
            r.angular_velocity.z,
            c.acceleration.x,
            c.acceleration.y,
            c.acceleration.z,
            c.torque.x,
            c.torque.y,
            c.torque.z,
            c.wheel_torques.x,
            c.wheel_torques.y,
            c.wheel_torques.z,
        ],
    );
    let _ = writeln!(out, ",{}", c.saturation.0);
}

/// One row per logged step; the first line names the frame of the positions.
pub fn trajectory_csv(log: &TrajectoryLog) -> String {
    let mut out = String::with_capacity(64 + log.records.len() * 300);
    let _ = writeln!(out, "# frame: {}", log.frame.name());
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in &log.records {
        record_row(&mut out, r);
    }
    out
}

/// `x,y,z,V,gx,gy,gz,laplacian,error`; singular points keep their row with
/// empty values and the error message.
pub fn gravity_csv(model: &GravityModel, points: &[[f64; 3]]) -> String {
    let mut out = String::from(GRAVITY_HEADER);
    out.push('\n');
    for p in points {
        let _ = write!(out, "{},{},{},", p[0], p[1], p[2]);
        match model.evaluate(&Vector3::new(p[0], p[1], p[2])) {
            Ok(s) => {
                push_row(
                    &mut out,
                    &[
                        s.potential,
                        s.acceleration.x,
                        s.acceleration.y,
                        s.acceleration.z,
                        s.laplacian,
                    ],
                );
                out.push_str(",\n");
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(out, ",,,,,{msg}");
            }
        }
    }
    out
}

/// Plot data: descent position and velocity with the reference.
pub fn descent_state_plot(log: &TrajectoryLog, profile: &GuidanceProfile) -> String {
    let mut out = String::from("t,rx,ry,rz,vx,vy,vz,ref_rx,ref_ry,ref_rz,ref_vx,ref_vy,ref_vz\n");
    for r in &log.records {
        let s = profile.sample(r.time);
        push_row(
            &mut out,
            &[
                r.time,
                r.position.x,
                r.position.y,
                r.position.z,
                r.velocity.x,
                r.velocity.y,
                r.velocity.z,
                s.position.x,
                s.position.y,
                s.position.z,
                s.velocity.x,
                s.velocity.y,
                s.velocity.z,
            ],
        );
        out.push('\n');
    }
    out
}

/// Plot data: commanded acceleration.
pub fn control_plot(log: &TrajectoryLog) -> String {
    let mut out = String::from("t,ux,uy,uz\n");
    for r in &log.records {
        let u = r.command.acceleration;
        push_row(&mut out, &[r.time, u.x, u.y, u.z]);
        out.push('\n');
    }
    out
}

/// Plot data: landing position and velocity.
pub fn state_plot(log: &TrajectoryLog) -> String {
    let mut out = String::from("t,rx,ry,rz,vx,vy,vz\n");
    for r in &log.records {
        push_row(
            &mut out,
            &[
                r.time,
                r.position.x,
                r.position.y,
                r.position.z,
                r.velocity.x,
                r.velocity.y,
                r.velocity.z,
            ],
        );
        out.push('\n');
    }
    out
}

/// Plot data: 3-2-1 Euler angles and body rates.
pub fn attitude_plot(log: &TrajectoryLog) -> String {
    let mut out = String::from("t,roll,pitch,yaw,wx,wy,wz\n");
    for r in &log.records {
        let e = quaternion_to_euler_321(&r.attitude);
        let w = r.angular_velocity;
        push_row(&mut out, &[r.time, e.x, e.y, e.z, w.x, w.y, w.z]);
        out.push('\n');
    }
    out
}

/// Plot data: wheel torques.
pub fn torque_plot(log: &TrajectoryLog) -> String {
    let mut out = String::from("t,wheel1,wheel2,wheel3\n");
    for r in &log.records {
        let w = r.command.wheel_torques;
        push_row(&mut out, &[r.time, w.x, w.y, w.z]);
        out.push('\n');
    }
    out
}

/// Plot data: every hop track in the body frame with its speed.
pub fn hops_plot(tracks: &[(usize, &TrajectoryLog)]) -> String {
    let mut out = String::from("hop,t,x,y,z,speed\n");
    for (i, log) in tracks {
        for r in &log.records {
            let _ = write!(out, "{i},");
            push_row(
                &mut out,
                &[
                    r.time,
                    r.position.x,
                    r.position.y,
                    r.position.z,
                    r.velocity.norm(),
                ],
            );
            out.push('\n');
        }
    }
    out
}

pub fn batch_table(batch: &BatchRun) -> String {
    let mut out = String::from(
        "index,speed,azimuth_deg,v0x,v0y,v0z,outcome,time,x,y,z,vx,vy,vz,parabolic_deviation,error\n",
    );
    for (i, res) in batch.results.iter().enumerate() {
        let v = batch.velocities[i];
        let _ = write!(
            out,
            "{i},{},{},{},{},{},",
            batch.speeds[i], batch.azimuths_deg[i], v.x, v.y, v.z
        );
        match res {
            Ok(flight) => {
                let dev = parabolic_deviation(&flight.log);
                match flight.outcome {
                    HopOutcome::Impact {
                        time,
                        position: p,
                        velocity: w,
                    } => {
                        let _ = write!(out, "impact,");
                        push_row(&mut out, &[time, p.x, p.y, p.z, w.x, w.y, w.z, dev]);
                    }
                    HopOutcome::Escape { time } => {
                        let _ = write!(out, "escape,{time},,,,,,,{dev}");
                    }
                    HopOutcome::Timeout => {
                        let _ = write!(out, "timeout,,,,,,,,{dev}");
                    }
                }
                out.push_str(",\n");
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(out, "error,,,,,,,,,{msg}");
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SaturationCounts {
    pub accel: usize,
    pub wheel: usize,
    pub momentum: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub time: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub euler_321: [f64; 3],
    pub angular_velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSummary {
    pub name: String,
    pub frame: String,
    pub dt: f64,
    pub rows: usize,
    pub event: String,
    pub terminal: Option<StateSummary>,
    pub peak_accel: f64,
    pub peak_torque: f64,
    pub saturation_steps: SaturationCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_position_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_velocity_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopSummary {
    pub launch: [f64; 3],
    pub target: [f64; 3],
    pub time_of_flight: f64,
    pub converged: bool,
    pub launch_velocity: Option<[f64; 3]>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub arrival_velocity: Option<[f64; 3]>,
    pub surface_check: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub launches: usize,
    pub impacts: usize,
    pub escapes: usize,
    pub timeouts: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub vertices: usize,
    pub faces: usize,
    pub volume: f64,
    pub mass: f64,
    pub gm: f64,
    pub bounding_radius: f64,
}

/// Self-contained record of a run. Wall-clock time is kept out so that
/// repeated runs compare byte for byte; it goes to `timing.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub version: String,
    pub config: ScenarioConfig,
    pub model: ModelSummary,
    pub phases: Vec<PhaseSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hops: Vec<HopSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hop_batch: Option<BatchSummary>,
}

fn arr(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub fn model_summary(s: &Scenario) -> ModelSummary {
    let mp = s.gravity.mass_properties();
    ModelSummary {
        vertices: s.mesh.vertex_count(),
        faces: s.mesh.face_count(),
        volume: mp.volume,
        mass: mp.mass,
        gm: s.gravity.gm(),
        bounding_radius: s.mesh.bounding_radius(),
    }
}

pub fn phase_summary(run: &PhaseRun) -> PhaseSummary {
    let mut sat = SaturationCounts::default();
    let (mut peak_accel, mut peak_torque) = (0.0f64, 0.0f64);
    for r in &run.log.records {
        let f = r.command.saturation;
        let any = |flags: [u16; 3]| flags.iter().any(|&b| f.contains(b));
        if any([
            Saturation::ACCEL_X,
            Saturation::ACCEL_Y,
            Saturation::ACCEL_Z,
        ]) {
            sat.accel += 1;
        }
        if any([
            Saturation::WHEEL_1,
            Saturation::WHEEL_2,
            Saturation::WHEEL_3,
        ]) {
            sat.wheel += 1;
        }
        if any([
            Saturation::MOMENTUM_1,
            Saturation::MOMENTUM_2,
            Saturation::MOMENTUM_3,
        ]) {
            sat.momentum += 1;
        }
        peak_accel = peak_accel.max(r.command.acceleration.norm());
        peak_torque = peak_torque.max(r.command.torque.norm());
    }
    let terminal = run.terminal_state().map(|s| StateSummary {
        time: s.time,
        position: arr(&s.position),
        velocity: arr(&s.velocity),
        euler_321: arr(&quaternion_to_euler_321(&s.attitude)),
        angular_velocity: arr(&s.angular_velocity),
    });
    let (pos_err, vel_err) = match (&run.profile, run.terminal_state()) {
        (Some(p), Some(s)) => (
            Some((s.position - p.bc.r_final).norm()),
            Some((s.velocity - p.bc.v_final).norm()),
        ),
        _ => (None, None),
    };
    PhaseSummary {
        name: run.name.to_string(),
        frame: run.log.frame.name().to_string(),
        dt: run.log.dt,
        rows: run.log.records.len(),
        event: run.event_label(),
        terminal,
        peak_accel,
        peak_torque,
        saturation_steps: sat,
        transfer_time: run.profile.map(|p| p.tau),
        terminal_position_error: pos_err,
        terminal_velocity_error: vel_err,
        error: run.error.clone(),
    }
}

pub fn hop_summary(run: &HopRun) -> HopSummary {
    let p = &run.problem;
    let (converged, v, res, it, arr_v, err) = match &run.result {
        Ok(s) => (
            true,
            Some(arr(&s.launch_velocity)),
            Some(s.residual),
            Some(s.iterations),
            Some(arr(&s.arrival_velocity)),
            None,
        ),
        Err(e) => (false, None, None, None, None, Some(e.to_string())),
    };
    HopSummary {
        launch: arr(&p.launch),
        target: arr(&p.target),
        time_of_flight: p.time_of_flight,
        converged,
        launch_velocity: v,
        residual: res,
        iterations: it,
        arrival_velocity: arr_v,
        surface_check: run.check.map(|o| o.label().to_string()),
        error: err,
    }
}

pub fn batch_summary(batch: &BatchRun) -> BatchSummary {
    let mut s = BatchSummary {
        launches: batch.results.len(),
        impacts: 0,
        escapes: 0,
        timeouts: 0,
        errors: 0,
    };
    for r in &batch.results {
        match r {
            Ok(f) => match f.outcome {
                HopOutcome::Impact { .. } => s.impacts += 1,
                HopOutcome::Escape { .. } => s.escapes += 1,
                HopOutcome::Timeout => s.timeouts += 1,
            },
            Err(_) => s.errors += 1,
        }
    }
    s
}

pub fn summary_json(summary: &RunSummary) -> Result<String, CliError> {
    serde_json::to_string_pretty(summary)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Io(e.to_string()))
}

//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line (written straight to stderr so it survives output capture) and then
//! asserts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbgnc::config::ScenarioConfig;
use sbgnc::scenario::Scenario;
use sbgnc::RunOptions;
use smallbody_gnc::control::attitude_error;
use smallbody_gnc::dynamics::{
    surface_clearance, EventSpec, Frame, NoControl, Propagator, SpacecraftState, TranslationalModel,
};
use smallbody_gnc::environment::AsteroidEnvironment;
use smallbody_gnc::gravity::{GravityField, GravityModel, PointMassField, UniformField};
use smallbody_gnc::guidance::{BoundaryConditions, GuidanceProfile};
use smallbody_gnc::hop::{
    parabolic_deviation, solve_hop_velocity, HopOutcome, HopProblem, ShootingOptions,
};
use smallbody_gnc::mesh::shapes::{castalia_like, icosphere};
use smallbody_gnc::GRAVITATIONAL_CONSTANT;
use tempfile::TempDir;

fn report(n: u32, pass: bool, detail: String) {
    let line = format!(
        "criterion {n}: {} - {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn scenario_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/castalia.toml")
}

fn castalia_scenario() -> Scenario {
    Scenario::build(ScenarioConfig::load(&scenario_path()).unwrap()).unwrap()
}

fn random_point_in_box(rng: &mut ChaCha8Rng, lo: &Vector3<f64>, hi: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(
        rng.gen_range(lo.x..hi.x),
        rng.gen_range(lo.y..hi.y),
        rng.gen_range(lo.z..hi.z),
    )
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let d = random_point_in_box(rng, &Vector3::repeat(-1.0), &Vector3::repeat(1.0));
        let n = d.norm();
        if n > 0.1 && n <= 1.0 {
            return d / n;
        }
    }
}

#[test]
fn criterion_1_far_field() {
    let mesh = icosphere(3, 1000.0);
    assert!(mesh.face_count() >= 1280);
    let model = GravityModel::new(mesh, 2000.0).unwrap();
    let (gm, radius) = (model.gm(), model.mesh().bounding_radius());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let limits = [(10.0, 1e-2), (20.0, 2.5e-3), (40.0, 7e-4)];
    let mut worst = [0.0f64; 3];
    let started = Instant::now();
    for i in 0..1000 {
        let k = i % 3;
        let r = limits[k].0 * radius;
        let a = model
            .acceleration(&(random_direction(&mut rng) * r))
            .unwrap()
            .norm();
        worst[k] = worst[k].max((a - gm / (r * r)).abs() / (gm / (r * r)));
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = worst.iter().zip(&limits).all(|(w, l)| *w < l.1) && elapsed < 1.0;
    report(
        1,
        pass,
        format!(
            "rel err {:.2e}/{:.2e}/{:.2e} at 10/20/40 R, 1000 samples in {elapsed:.3} s",
            worst[0], worst[1], worst[2]
        ),
    );
}

#[test]
fn criterion_2_gauss_laplacian() {
    let model = GravityModel::new(castalia_like(2), 2100.0).unwrap();
    let mesh = model.mesh();
    let scale = 4.0 * std::f64::consts::PI * GRAVITATIONAL_CONSTANT * 2100.0;
    let band = 1e-6 * mesh.bounding_radius();
    let (lo, hi) = mesh.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    while inside.len() < 1000 || outside.len() < 1000 {
        let p = random_point_in_box(&mut rng, &(lo * 1.5), &(hi * 1.5));
        if surface_clearance(mesh, &p).abs() < band {
            continue;
        }
        if mesh.contains_point(&p).unwrap() {
            if inside.len() < 1000 {
                inside.push(p);
            }
        } else if outside.len() < 1000 {
            outside.push(p);
        }
    }
    let worst_in = inside
        .iter()
        .map(|p| (model.laplacian(p).unwrap() + scale).abs() / scale)
        .fold(0.0, f64::max);
    let worst_out = outside
        .iter()
        .map(|p| model.laplacian(p).unwrap().abs() / scale)
        .fold(0.0, f64::max);
    report(
        2,
        worst_in < 1e-6 && worst_out < 1e-6,
        format!("interior rel err {worst_in:.2e}, exterior |lap|/(4 pi G rho) {worst_out:.2e}"),
    );
}

#[test]
fn criterion_3_gradient_consistency() {
    let model = GravityModel::new(castalia_like(2), 2100.0).unwrap();
    let mesh = model.mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (lo, hi) = mesh.bounding_box();
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 500 {
        let p = random_point_in_box(&mut rng, &(lo * 3.0), &(hi * 3.0));
        let h = 1e-4 * p.norm();
        // Keep the stencil clear of the surface.
        if mesh.contains_point(&p).unwrap() || surface_clearance(mesh, &p) < 10.0 * h {
            continue;
        }
        let mut fd = Vector3::zeros();
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = h;
            fd[i] = (model.potential(&(p + e)).unwrap() - model.potential(&(p - e)).unwrap())
                / (2.0 * h);
        }
        let g = model.acceleration(&p).unwrap();
        worst = worst.max((fd - g).norm() / g.norm());
        n += 1;
    }
    report(
        3,
        worst < 1e-6,
        format!("worst central-difference rel err {worst:.2e} over 500 points"),
    );
}

#[test]
fn criterion_4_guidance_exactness() {
    let bc = BoundaryConditions {
        r0: Vector3::new(-500.0, 1000.0, 1100.0),
        v0: Vector3::new(2.2, -1.2, -0.1),
        r_final: Vector3::new(0.0, 0.0, 100.0),
        v_final: Vector3::new(0.0, 0.0, -0.2),
        a_final: Vector3::zeros(),
    };
    let p = GuidanceProfile::plan(&bc).unwrap();
    let rel = |a: Vector3<f64>, b: Vector3<f64>| (a - b).norm() / b.norm().max(1.0);
    let (s0, s1) = (p.sample(0.0), p.sample(p.tau));
    let errs = [
        rel(s0.position, bc.r0),
        rel(s0.velocity, bc.v0),
        rel(s1.position, bc.r_final),
        rel(s1.velocity, bc.v_final),
        (s1.acceleration - bc.a_final).norm(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let c2z = p.c2.z.abs();
    report(
        4,
        worst < 1e-9 && c2z <= 1e-12,
        format!(
            "tau {:.3} s, worst boundary err {worst:.2e}, |C2z| {c2z:.2e}",
            p.tau
        ),
    );
}

#[test]
fn criterion_5_closed_loop_descent() {
    let s = castalia_scenario();
    let started = Instant::now();
    let run = s.run_descent().unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let end = run.terminal_state().unwrap();
    let pos_err = (end.position - Vector3::new(0.0, 0.0, 100.0)).norm();
    let vel_err = (end.velocity - Vector3::new(0.0, 0.0, -0.2)).norm();
    let peak = run
        .log
        .records
        .iter()
        .map(|r| r.command.acceleration.norm())
        .fold(0.0, f64::max);
    let finite = run
        .log
        .records
        .iter()
        .all(|r| r.command.acceleration.iter().all(|x| x.is_finite()));
    report(
        5,
        run.error.is_none() && pos_err < 1.0 && vel_err < 0.01 && finite && peak < 1e-2 && elapsed < 30.0,
        format!(
            "terminal |dr| {pos_err:.2e} m, |dv| {vel_err:.2e} m/s, peak |u| {peak:.2e} m/s^2, {elapsed:.2} s"
        ),
    );
}

#[test]
fn criterion_6_landing_attitude() {
    let s = castalia_scenario();
    let landing = s.config.landing.clone().unwrap();
    let j = Scenario::landing_inertia(&landing).unwrap().inertia;
    let j_ok = (j - Matrix3::from_diagonal(&Vector3::new(1.08, 2.04, 2.04))).amax() < 1e-12;

    let descent = s.run_descent().unwrap();
    let start = descent.terminal_state().map(|t| (t.position, t.velocity));
    let run = s.run_landing(start).unwrap();
    let touchdown = run.log.last().unwrap();
    let err = attitude_error(&touchdown.attitude, &UnitQuaternion::identity()).unwrap();
    let worst_axis = err.amax().to_degrees();
    let rate = touchdown.angular_velocity.norm();
    let peak_wheel = run
        .log
        .records
        .iter()
        .map(|r| r.command.wheel_torques.amax())
        .fold(0.0, f64::max);
    let vz = touchdown.velocity.z.abs();
    let impacted = run.event_label() == "surface-impact";
    report(
        6,
        j_ok && impacted && worst_axis < 1.0 && rate < 0.01 && peak_wheel <= 0.025 && (0.135..=0.54).contains(&vz),
        format!(
            "touchdown at {:.1} s: max axis err {worst_axis:.2e} deg, |w| {rate:.2e} rad/s, peak wheel {peak_wheel:.4} N m, |vz| {vz:.3} m/s",
            touchdown.time
        ),
    );
}

#[test]
fn criterion_7_hop_shooting() {
    // Uniform-field harness against the closed form.
    let g = Vector3::new(1e-5, -3e-5, -1.5e-4);
    let field = UniformField { g };
    let quiet = AsteroidEnvironment::quiescent();
    let (r0, r1, tau) = (Vector3::zeros(), Vector3::new(120.0, 60.0, -5.0), 800.0);
    let opts = ShootingOptions {
        initial_guess: Some(Vector3::new(0.1, 0.0, 0.2)),
        ..ShootingOptions::default()
    };
    let sol = solve_hop_velocity(&HopProblem::new(r0, r1, tau), &field, &quiet, &opts).unwrap();
    let exact = (r1 - r0) / tau - 0.5 * g * tau;
    let closed_form = (sol.launch_velocity - exact).norm() / exact.norm();

    // Castalia-class problems from the scenario.
    let s = castalia_scenario();
    let runs = s.run_hops().unwrap();
    let mut hops_ok = !runs.is_empty();
    let mut worst_residual = 0.0f64;
    let mut worst_refly = 0.0f64;
    let mut most_iterations = 0;
    for run in &runs {
        let Ok(sol) = &run.result else {
            hops_ok = false;
            continue;
        };
        worst_residual = worst_residual.max(sol.residual);
        most_iterations = most_iterations.max(sol.iterations);
        let end = Propagator::new(TranslationalModel::body(&s.gravity, &s.env), 0.5)
            .with_event(EventSpec::elapsed(run.problem.time_of_flight))
            .propagate(
                &SpacecraftState::new(Frame::Body, run.problem.launch, sol.launch_velocity, 0.0),
                &mut NoControl,
            )
            .unwrap()
            .termination
            .state
            .position;
        worst_refly = worst_refly.max((end - run.problem.target).norm());
        hops_ok &= sol.residual < run.problem.tolerance && sol.iterations <= 15;
    }
    hops_ok &= worst_refly < 0.1;

    // Launch grid: at least one non-parabolic re-impacting track.
    let batch = s.run_hop_batch(None).unwrap();
    let speeds_ok = batch.speeds.iter().all(|v| (0.1..=0.45).contains(v));
    let deviations: Vec<f64> = batch
        .results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .filter(|f| matches!(f.outcome, HopOutcome::Impact { .. }))
        .map(|f| parabolic_deviation(&f.log))
        .collect();
    let curved = deviations.iter().filter(|d| **d > 0.05).count();

    report(
        7,
        closed_form < 1e-9 && hops_ok && speeds_ok && curved >= 1,
        format!(
            "closed-form rel err {closed_form:.2e}; {} hops, worst residual {worst_residual:.2e} m in <= {most_iterations} iterations, re-fly miss {worst_refly:.2e} m; {} of {} grid launches re-impact, {curved} non-parabolic (deviation > 5%)",
            runs.len(),
            deviations.len(),
            batch.results.len()
        ),
    );
}

fn kepler_run(dt: f64, t: f64) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    let field = PointMassField {
        gm: 1.0,
        center: Vector3::zeros(),
    };
    let env = AsteroidEnvironment::quiescent();
    let start = SpacecraftState::new(
        Frame::Body,
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.1, 0.2),
        0.0,
    );
    Propagator::new(TranslationalModel::body(&field, &env), dt)
        .with_event(EventSpec::elapsed(t))
        .propagate(&start, &mut NoControl)
        .unwrap()
        .log
        .records
        .iter()
        .map(|r| (r.position, r.velocity))
        .collect()
}

#[test]
fn criterion_8_integrator_order_and_energy() {
    let t = 6.0;
    let end = |dt| *kepler_run(dt, t).last().unwrap();
    let reference = end(0.05 / 16.0).0;
    let ratio = (end(0.05).0 - reference).norm() / (end(0.025).0 - reference).norm();

    let field = PointMassField {
        gm: 1.0,
        center: Vector3::zeros(),
    };
    let energy = |(r, v): &(Vector3<f64>, Vector3<f64>)| {
        0.5 * v.norm_squared() - field.potential(r).unwrap()
    };
    let track = kepler_run(0.01, 100.0);
    let e0 = energy(&track[0]);
    let drift = track
        .iter()
        .map(|s| ((energy(s) - e0) / e0).abs())
        .fold(0.0, f64::max);
    report(
        8,
        (12.0..=20.0).contains(&ratio) && drift < 1e-8 && track.len() > 10_000,
        format!(
            "step-halving error ratio {ratio:.2}; energy drift {drift:.2e} over {} steps",
            track.len() - 1
        ),
    );
}

fn output_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_9_determinism() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let opts = RunOptions {
            out: Some(out.clone()),
            quiet: true,
            ..RunOptions::default()
        };
        sbgnc::run_scenario(&scenario_path(), &opts).unwrap();
        output_files(&out)
    };
    let (a, b) = (run("a"), run("b"));
    let full_identical = a == b && !a.is_empty();

    let batch = |width: usize| {
        let out = tmp.path().join(format!("w{width}"));
        let opts = RunOptions {
            out: Some(out.clone()),
            quiet: true,
            width: Some(width),
            ..RunOptions::default()
        };
        sbgnc::run_hop_batch(&scenario_path(), &opts).unwrap();
        output_files(&out)
    };
    let (w1, w8) = (batch(1), batch(8));
    let batch_identical = w1 == w8 && w1.iter().filter(|(n, _)| n.starts_with("hop_")).count() >= 8;
    report(
        9,
        full_identical && batch_identical,
        format!(
            "full scenario: {} files, identical = {full_identical}; hop batch at width 1 vs 8: {} files, identical = {batch_identical}",
            a.len(),
            w1.len()
        ),
    );
}

//! Scenario runner for the small-body GNC toolkit: configuration loading,
//! phase execution and file output behind the `sbgnc` binary.

pub mod config;
pub mod output;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use config::ScenarioConfig;
use output::{
    attitude_plot, batch_summary, batch_table, control_plot, descent_state_plot, gravity_csv,
    hop_summary, hops_plot, model_summary, phase_summary, state_plot, summary_json, torque_plot,
    trajectory_csv, write_file, RunSummary,
};
use scenario::Scenario;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SBGNC_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("physics error: {0}")]
    Physics(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

/// Options shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub dt_override: Option<f64>,
    pub quiet: bool,
    /// Thread count for hop batches; the config value when absent.
    pub width: Option<usize>,
}

/// What a run produced, for callers that want more than the files.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: RunSummary,
    pub files: Vec<PathBuf>,
}

fn resolve_out_dir(cfg: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sbgnc-out"))
}

/// Loads and fully validates a scenario (including reading the mesh) before
/// anything is written.
pub fn prepare(config_path: &Path, opts: &RunOptions) -> Result<(Scenario, PathBuf), CliError> {
    let mut cfg = ScenarioConfig::load(config_path)?;
    if let Some(dt) = opts.dt_override {
        cfg.override_dt(dt)?;
    }
    let out = resolve_out_dir(&cfg, opts);
    let scenario = Scenario::build(cfg)?;
    Ok((scenario, out))
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_file(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

fn say(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

/// Runs descent, landing, hop problems and the hop batch, whichever are
/// configured, and writes every output. Physics failures still write the
/// partial logs and the summary before returning the error.
pub fn run_scenario(config_path: &Path, opts: &RunOptions) -> Result<RunReport, CliError> {
    let (scenario, out_dir) = prepare(config_path, opts)?;
    let started = Instant::now();
    let mut w = Writer::new(out_dir.clone())?;
    let plots = scenario.config.output.plots;
    let mut phases = Vec::new();
    let mut failure: Option<CliError> = None;

    let mut landing_start = None;
    if scenario.config.descent.is_some() {
        let run = scenario.run_descent()?;
        say(
            opts.quiet,
            format!(
                "descent: {} rows, {}",
                run.log.records.len(),
                run.event_label()
            ),
        );
        w.put("descent.csv", &trajectory_csv(&run.log))?;
        if plots {
            if let Some(p) = &run.profile {
                w.put("plot_descent_state.csv", &descent_state_plot(&run.log, p))?;
            }
            w.put("plot_descent_control.csv", &control_plot(&run.log))?;
        }
        if let Some(e) = &run.error {
            failure = Some(CliError::Physics(format!("descent: {e}")));
        }
        landing_start = run.terminal_state().map(|s| (s.position, s.velocity));
        phases.push(phase_summary(&run));
    }

    if failure.is_none() && scenario.config.landing.is_some() {
        let run = scenario.run_landing(landing_start)?;
        say(
            opts.quiet,
            format!(
                "landing: {} rows, {}",
                run.log.records.len(),
                run.event_label()
            ),
        );
        w.put("landing.csv", &trajectory_csv(&run.log))?;
        if plots {
            w.put("plot_landing_state.csv", &state_plot(&run.log))?;
            w.put("plot_landing_attitude.csv", &attitude_plot(&run.log))?;
            w.put("plot_landing_torque.csv", &torque_plot(&run.log))?;
        }
        if let Some(e) = &run.error {
            failure = Some(CliError::Physics(format!("landing: {e}")));
        }
        phases.push(phase_summary(&run));
    }

    let mut hops = Vec::new();
    if failure.is_none() && !scenario.config.hops.is_empty() {
        let runs = scenario.run_hops()?;
        let mut tracks = Vec::new();
        for (i, run) in runs.iter().enumerate() {
            if let Ok(sol) = &run.result {
                w.put(
                    &format!("hop_solution_{i:02}.csv"),
                    &trajectory_csv(&sol.log),
                )?;
                tracks.push((i, &sol.log));
            }
            hops.push(hop_summary(run));
        }
        say(
            opts.quiet,
            format!("hops: {} solved of {}", tracks.len(), runs.len()),
        );
        if plots && !tracks.is_empty() {
            w.put("plot_hop_solutions.csv", &hops_plot(&tracks))?;
        }
        if let Some((i, e)) = runs
            .iter()
            .enumerate()
            .find_map(|(i, r)| r.result.as_ref().err().map(|e| (i, e)))
        {
            failure = Some(CliError::NonConvergence(format!("hop {i}: {e}")));
        }
    }

    let mut batch = None;
    if scenario.config.hop_batch.is_some() && !matches!(failure, Some(CliError::Physics(_))) {
        let b = scenario.run_hop_batch(opts.width)?;
        write_batch(&mut w, &b, plots)?;
        say(
            opts.quiet,
            format!("hop batch: {} launches", b.results.len()),
        );
        batch = Some(batch_summary(&b));
    }

    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: scenario.config.clone(),
        model: model_summary(&scenario),
        phases,
        hops,
        hop_batch: batch,
    };
    w.put("summary.json", &summary_json(&summary)?)?;
    let timing = format!(
        "{{\n  \"wall_clock_seconds\": {}\n}}\n",
        started.elapsed().as_secs_f64()
    );
    w.put("timing.json", &timing)?;

    match failure {
        Some(e) => Err(e),
        None => Ok(RunReport {
            out_dir,
            summary,
            files: w.files,
        }),
    }
}

fn write_batch(w: &mut Writer, b: &scenario::BatchRun, plots: bool) -> Result<(), CliError> {
    let mut tracks = Vec::new();
    for (i, r) in b.results.iter().enumerate() {
        if let Ok(f) = r {
            w.put(&format!("hop_{i:03}.csv"), &trajectory_csv(&f.log))?;
            tracks.push((i, &f.log));
        }
    }
    w.put("hop_batch.csv", &batch_table(b))?;
    if plots {
        w.put("plot_hop_batch.csv", &hops_plot(&tracks))?;
    }
    Ok(())
}

/// Runs only the configured hop batch.
pub fn run_hop_batch(config_path: &Path, opts: &RunOptions) -> Result<RunReport, CliError> {
    let (scenario, out_dir) = prepare(config_path, opts)?;
    if scenario.config.hop_batch.is_none() {
        return Err(CliError::Config("no [hop_batch] section".into()));
    }
    let mut w = Writer::new(out_dir.clone())?;
    let b = scenario.run_hop_batch(opts.width)?;
    write_batch(&mut w, &b, scenario.config.output.plots)?;
    say(
        opts.quiet,
        format!("hop batch: {} launches", b.results.len()),
    );
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: scenario.config.clone(),
        model: model_summary(&scenario),
        phases: Vec::new(),
        hops: Vec::new(),
        hop_batch: Some(batch_summary(&b)),
    };
    w.put("summary.json", &summary_json(&summary)?)?;
    Ok(RunReport {
        out_dir,
        summary,
        files: w.files,
    })
}

/// Samples the field at the configured points and grid into `gravity_samples.csv`.
pub fn run_gravity(config_path: &Path, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let (scenario, out_dir) = prepare(config_path, opts)?;
    let spec = scenario
        .config
        .gravity
        .as_ref()
        .ok_or_else(|| CliError::Config("no [gravity] section".into()))?;
    let mut points = spec.points.clone();
    if let Some(g) = &spec.grid {
        points.extend(g.points());
    }
    let mut w = Writer::new(out_dir)?;
    w.put(
        "gravity_samples.csv",
        &gravity_csv(&scenario.gravity, &points),
    )?;
    say(opts.quiet, format!("gravity: {} samples", points.len()));
    Ok(w.files.remove(0))
}

/// Checks a shape model; returns the printable report and whether it is valid.
pub fn validate_mesh(
    path: &Path,
    units: Option<config::Units>,
) -> Result<(String, bool), CliError> {
    let mesh = scenario::load_mesh(path, units)?;
    let report = mesh.validate();
    let mut text = format!(
        "{}: {} vertices, {} faces\n",
        path.display(),
        mesh.vertex_count(),
        mesh.face_count()
    );
    if report.is_valid() {
        let mp = mesh
            .mass_properties(1.0)
            .map_err(|e| CliError::Config(e.to_string()))?;
        text.push_str(&format!(
            "valid closed manifold; volume {} m^3, centroid [{}, {}, {}] m\n",
            mp.volume, mp.centroid.x, mp.centroid.y, mp.centroid.z
        ));
    } else {
        text.push_str(&format!("{report}\n"));
    }
    Ok((text, report.is_valid()))
}

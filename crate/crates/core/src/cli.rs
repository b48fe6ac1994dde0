//! Command-line front end. Every command writes its artifacts and a
//! `manifest.json` into the output directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use crate::classical;
use crate::error::{Error, Result};
use crate::euler::{self, EulerConfig};
use crate::geometry::{compare_series, extract_fireline, FieldSource};
use crate::grid::Grid2;
use crate::io::{self, RunManifest};
use crate::net::Activation;
use crate::pinn::{self, LevelSetSolution, Sampling, TrainingConfig};
use crate::scenario::{load_scenario, Domain3, ScenarioConfig};

/// Magnitude beyond which extrapolated level-set values are suspect.
pub const FORENSIC_PSI_LIMIT: f64 = 20.0;

#[derive(Parser, Debug)]
#[command(name = "firepinn", version, about = "Level-set fire spread: PINN training, reference solver, comparison")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train the level-set surrogate on a scenario.
    Train {
        scenario: PathBuf,
        #[command(flatten)]
        training: TrainingArgs,
    },
    /// Run the finite-difference reference solver.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Output times in seconds (default: five evenly spaced).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        times: Vec<f64>,
    },
    /// Fireline metrics between a trained solution and snapshots or a second solution.
    Compare {
        solution: PathBuf,
        #[arg(long, conflicts_with = "other")]
        snapshots: Option<PathBuf>,
        #[arg(long)]
        other: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        times: Vec<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Evaluate a trained solution outside its training interval.
    Forensic {
        solution: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        times: Vec<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Train the Euler-system surrogate and report loss convergence.
    EulerStudy { config: PathBuf },
    /// Time training and the reference solve.
    Bench {
        scenario: PathBuf,
        #[command(flatten)]
        training: TrainingArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

/// Training overrides; anything left out keeps the library default.
#[derive(Args, Debug, Clone)]
pub struct TrainingArgs {
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Learning rate reached at the last iteration (geometric decay).
    #[arg(long)]
    pub final_learning_rate: Option<f64>,
    /// Keep the learning rate constant.
    #[arg(long, conflicts_with = "final_learning_rate")]
    pub constant_rate: bool,
    #[arg(long)]
    pub interior_batch: Option<usize>,
    #[arg(long)]
    pub boundary_batch: Option<usize>,
    #[arg(long)]
    pub pde_weight: Option<f64>,
    #[arg(long)]
    pub bc_weight: Option<f64>,
    #[arg(long)]
    pub grad_eps: Option<f64>,
    /// Draw training points from the fixed training mesh instead of strata.
    #[arg(long)]
    pub grid_sampling: bool,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub activation: Option<String>,
}

impl TrainingArgs {
    pub fn to_config(&self, seed: u64) -> Result<TrainingConfig> {
        let mut c = TrainingConfig { seed, ..TrainingConfig::default() };
        if let Some(v) = self.iterations {
            c.iterations = v;
        }
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if self.constant_rate {
            c.final_learning_rate = None;
        } else if self.final_learning_rate.is_some() {
            c.final_learning_rate = self.final_learning_rate;
        }
        if let Some(v) = self.interior_batch {
            c.interior_batch = v;
        }
        if let Some(v) = self.boundary_batch {
            c.boundary_batch = v;
        }
        if let Some(v) = self.pde_weight {
            c.pde_weight = v;
        }
        if let Some(v) = self.bc_weight {
            c.bc_weight = v;
        }
        if let Some(v) = self.grad_eps {
            c.grad_eps = v;
        }
        if self.grid_sampling {
            c.sampling = Sampling::Grid;
        }
        if let Some(h) = self.hidden {
            c.layer_sizes = vec![3, h, 1];
        }
        if let Some(a) = &self.activation {
            c.activation = Activation::from_name(a)?;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug, Clone, Copy)]
pub struct GridArgs {
    #[arg(long, default_value_t = 201)]
    pub nx: usize,
    #[arg(long, default_value_t = 201)]
    pub ny: usize,
}

impl GridArgs {
    pub fn over(&self, d: &Domain3) -> Result<Grid2> {
        Grid2::spanning(d.x_min, d.x_max, d.y_min, d.y_max, self.nx, self.ny)
    }
}

/// Process exit code for an error: 1 invalid input, 2 numerical failure,
/// 3 file system.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => 3,
        Error::Divergence { .. } | Error::NonFinite { .. } | Error::NonPhysical { .. } | Error::Cfl { .. } => 2,
        _ => 1,
    }
}

fn even_times(d: &Domain3, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (d.t_min + (d.t_max - d.t_min) * k as f64 / (n - 1) as f64).min(d.t_max))
        .collect()
}

fn read_scenario(path: &Path) -> Result<ScenarioConfig> {
    load_scenario(&io::read_text(path)?)
}

struct Run {
    manifest: RunManifest,
    out_dir: PathBuf,
}

impl Run {
    fn new(cli: &Cli, command: &str) -> Self {
        Self {
            manifest: RunManifest {
                command: command.into(),
                seed: cli.seed,
                threads: rayon::current_num_threads(),
                ..RunManifest::default()
            },
            out_dir: cli.out_dir.clone(),
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out_dir.join(name);
        self.manifest.artifacts.push(p.clone());
        p
    }

    fn config<T: Serialize>(&mut self, value: &T) {
        self.manifest.config = serde_json::to_value(value).unwrap_or_default();
    }

    fn time(&mut self, phase: &str, start: Instant) {
        self.manifest.timings.insert(phase.into(), start.elapsed().as_secs_f64());
    }

    fn finish(mut self) -> Result<()> {
        let p = self.out_dir.join("manifest.json");
        self.manifest.artifacts.push(p.clone());
        io::write_json(&p, &self.manifest)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train { scenario, training } => cmd_train(cli, scenario, training),
        Command::Simulate { scenario, grid, times } => cmd_simulate(cli, scenario, grid, times),
        Command::Compare { solution, snapshots, other, times, grid } => {
            cmd_compare(cli, solution, snapshots.as_deref(), other.as_deref(), times, grid)
        }
        Command::Forensic { solution, times, grid } => cmd_forensic(cli, solution, times, grid),
        Command::EulerStudy { config } => cmd_euler_study(cli, config),
        Command::Bench { scenario, training, grid, repeats } => cmd_bench(cli, scenario, training, grid, *repeats),
    }
}

fn cmd_train(cli: &Cli, path: &Path, args: &TrainingArgs) -> Result<()> {
    let config = args.to_config(cli.seed)?;
    let scenario = read_scenario(path)?;
    let mut run = Run::new(cli, "train");
    run.config(&config);
    run.manifest.scenario_hash = Some(scenario.hash());
    let start = Instant::now();
    let every = (config.iterations / 20).max(1);
    let solution = pinn::train_with_progress(&scenario, &config, |k, loss| {
        if k % every == 0 || k + 1 == config.iterations {
            info!("iteration {k}: loss {loss:.4e}");
        }
    })?;
    run.time("train", start);
    let sol_path = run.path("solution.json");
    io::save_solution(&sol_path, &solution)?;
    let loss_path = run.path("loss.csv");
    io::write_text(&loss_path, &io::loss_csv(&solution.loss_history))?;
    info!("final loss {:.4e}", solution.final_loss().unwrap_or(f64::NAN));
    run.finish()
}

fn cmd_simulate(cli: &Cli, path: &Path, grid: &GridArgs, times: &[f64]) -> Result<()> {
    let scenario = read_scenario(path)?;
    let g = grid.over(&scenario.domain)?;
    let times = if times.is_empty() { even_times(&scenario.domain, 5) } else { times.to_vec() };
    let mut run = Run::new(cli, "simulate");
    run.config(&serde_json::json!({ "nx": g.nx, "ny": g.ny, "times": times }));
    run.manifest.scenario_hash = Some(scenario.hash());
    let start = Instant::now();
    let stack = classical::solve(&scenario, &g, &times)?;
    run.time("solve", start);
    info!("{} steps", stack.steps);
    let paths = io::write_stack(&cli.out_dir, &stack)?;
    run.manifest.artifacts.extend(paths);
    run.finish()
}

fn bbox(d: &Domain3) -> String {
    format!("[{}, {}] x [{}, {}]", d.x_min, d.x_max, d.y_min, d.y_max)
}

fn same_box(a: &Domain3, b: &Domain3) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
    close(a.x_min, b.x_min) && close(a.x_max, b.x_max) && close(a.y_min, b.y_min) && close(a.y_max, b.y_max)
}

fn cmd_compare(
    cli: &Cli,
    solution: &Path,
    snapshots: Option<&Path>,
    other: Option<&Path>,
    times: &[f64],
    grid: &GridArgs,
) -> Result<()> {
    let sol = io::load_solution(solution)?;
    let mut run = Run::new(cli, "compare");
    run.manifest.scenario_hash = Some(sol.scenario_hash.clone());
    let start = Instant::now();
    // the reference (A) is the snapshot stack or the second solution
    let (reference, g, times): (Box<dyn FieldSource>, Grid2, Vec<f64>) = match (snapshots, other) {
        (Some(dir), _) => {
            let stack = io::read_stack(dir)?;
            let gd = Domain3 {
                t_min: sol.domain.t_min,
                t_max: sol.domain.t_max,
                x_min: stack.grid.x0,
                x_max: stack.grid.x_max(),
                y_min: stack.grid.y0,
                y_max: stack.grid.y_max(),
            };
            if !same_box(&gd, &sol.domain) {
                return Err(Error::validation(format!(
                    "domains differ: snapshots {} vs solution {}",
                    bbox(&gd),
                    bbox(&sol.domain)
                )));
            }
            let t = if times.is_empty() { stack.times.clone() } else { times.to_vec() };
            let g = stack.grid;
            (Box::new(stack), g, t)
        }
        (None, Some(path)) => {
            let b = io::load_solution(path)?;
            if !same_box(&b.domain, &sol.domain) {
                return Err(Error::validation(format!(
                    "domains differ: {} vs {}",
                    bbox(&b.domain),
                    bbox(&sol.domain)
                )));
            }
            let t = if times.is_empty() { even_times(&sol.domain, 5) } else { times.to_vec() };
            (Box::new(b), grid.over(&sol.domain)?, t)
        }
        (None, None) => return Err(Error::validation("compare needs --snapshots or --other")),
    };
    run.config(&serde_json::json!({ "times": times, "nx": g.nx, "ny": g.ny }));
    let series = compare_series(reference.as_ref(), &sol, &times, &g)?;
    run.time("compare", start);
    let p = run.path("metrics.json");
    io::write_json(&p, &series.records)?;
    let p = run.path("metrics.csv");
    io::write_text(&p, &io::metrics_csv(&series))?;
    for (k, &t) in times.iter().enumerate() {
        let line = extract_fireline(&sol.field_at(t, &g)?, 0.0, t);
        let p = run.path(&format!("fireline_{k:03}.csv"));
        io::write_text(&p, &io::fireline_csv(&line))?;
    }
    run.finish()
}

fn cmd_forensic(cli: &Cli, solution: &Path, times: &[f64], grid: &GridArgs) -> Result<()> {
    let sol: LevelSetSolution = io::load_solution(solution)?;
    let g = grid.over(&sol.domain)?;
    let mut run = Run::new(cli, "forensic");
    run.manifest.scenario_hash = Some(sol.scenario_hash.clone());
    run.config(&serde_json::json!({ "times": times, "nx": g.nx, "ny": g.ny }));
    let start = Instant::now();
    for (k, &t) in times.iter().enumerate() {
        let (field, outside) = pinn::extrapolate(&sol, t, &g)?;
        let peak = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > FORENSIC_PSI_LIMIT {
            warn!("t = {t}: |psi| reaches {peak:.3}, outside (-{FORENSIC_PSI_LIMIT}, {FORENSIC_PSI_LIMIT}); extrapolation is unreliable");
        }
        info!("t = {t}: {outside} s outside the training interval");
        let p = run.path(&format!("forensic_{k:03}.csv"));
        io::write_snapshot(&p, t, &field)?;
    }
    run.time("evaluate", start);
    run.finish()
}

fn cmd_euler_study(cli: &Cli, path: &Path) -> Result<()> {
    let mut config: EulerConfig = euler::parse_euler_config(&io::read_text(path)?)?;
    config.seed = cli.seed;
    let mut run = Run::new(cli, "euler-study");
    run.config(&config);
    let start = Instant::now();
    let every = (config.iterations / 20).max(1);
    let (_, report) = euler::convergence_study(&config, |k, loss| {
        if k % every == 0 {
            info!("iteration {k}: loss {loss:.4e}");
        }
    })?;
    run.time("train", start);
    let p = run.path("euler_loss.csv");
    io::write_text(&p, &io::loss_csv(&report.history))?;
    let p = run.path("euler_verdict.json");
    io::write_json(&p, &report)?;
    info!(
        "loss reduction {:.1}x ({})",
        report.reduction,
        if report.converged { "converged" } else { "not converged" }
    );
    run.finish()
}

#[derive(Serialize)]
struct BenchReport {
    train_seconds: f64,
    train_iterations: usize,
    per_iteration_us: f64,
    final_loss: f64,
    classical_seconds_mean: f64,
    classical_seconds_variance: f64,
    classical_steps: usize,
    classical_step_us: f64,
    threads: usize,
    profile: &'static str,
}

fn cmd_bench(cli: &Cli, path: &Path, args: &TrainingArgs, grid: &GridArgs, repeats: usize) -> Result<()> {
    let config = args.to_config(cli.seed)?;
    let scenario = read_scenario(path)?;
    let g = grid.over(&scenario.domain)?;
    let mut run = Run::new(cli, "bench");
    run.config(&config);
    run.manifest.scenario_hash = Some(scenario.hash());

    let start = Instant::now();
    let solution = pinn::train(&scenario, &config)?;
    let train_seconds = start.elapsed().as_secs_f64();
    run.time("train", start);

    let times = even_times(&scenario.domain, 5);
    let mut durations = Vec::new();
    let mut steps = 0;
    let start = Instant::now();
    for _ in 0..repeats.max(1) {
        let t0 = Instant::now();
        steps = classical::solve(&scenario, &g, &times)?.steps;
        durations.push(t0.elapsed().as_secs_f64());
    }
    run.time("classical", start);
    let n = durations.len() as f64;
    let mean = durations.iter().sum::<f64>() / n;
    let var = durations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let report = BenchReport {
        train_seconds,
        train_iterations: solution.loss_history.len(),
        per_iteration_us: train_seconds * 1e6 / solution.loss_history.len() as f64,
        final_loss: solution.final_loss().unwrap_or(f64::NAN),
        classical_seconds_mean: mean,
        classical_seconds_variance: var,
        classical_steps: steps,
        classical_step_us: if steps > 0 { mean * 1e6 / steps as f64 } else { 0.0 },
        threads: rayon::current_num_threads(),
        profile: if cfg!(debug_assertions) { "debug" } else { "release" },
    };
    let p = run.path("bench.json");
    io::write_json(&p, &report)?;
    run.manifest.timings.extend(BTreeMap::from([("per_iteration_us".to_string(), report.per_iteration_us)]));
    run.finish()
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if cli.threads > 0 {
        // the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::validation("x")), 1);
        assert_eq!(exit_code(&Error::Parse("x".into())), 1);
        assert_eq!(exit_code(&Error::Divergence { iteration: 3, loss: f64::NAN }), 2);
        assert_eq!(exit_code(&Error::io("a", std::io::Error::other("b"))), 3);
    }

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["firepinn", "simulate", "a.scn", "--times", "0,1.5", "--seed", "7", "--out-dir", "x"]).unwrap();
        assert_eq!(cli.seed, 7);
        assert_eq!(cli.out_dir, PathBuf::from("x"));
        match cli.command {
            Command::Simulate { times, .. } => assert_eq!(times, vec![0.0, 1.5]),
            _ => panic!(),
        }
    }

    #[test]
    fn zero_iterations_is_rejected() {
        let cli = Cli::try_parse_from(["firepinn", "train", "a.scn", "--iterations", "0"]).unwrap();
        let Command::Train { training, .. } = &cli.command else { panic!() };
        let err = training.to_config(0).unwrap_err();
        assert!(err.to_string().contains("iterations must be positive"));
        assert_eq!(exit_code(&err), 1);
    }

    #[test]
    fn negative_forensic_times_parse() {
        let cli = Cli::try_parse_from(["firepinn", "forensic", "s.json", "--times", "-4,-2"]).unwrap();
        let Command::Forensic { times, .. } = cli.command else { panic!() };
        assert_eq!(times, vec![-4.0, -2.0]);
    }
}

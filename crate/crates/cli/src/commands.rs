//! The subcommands. Each returns the process exit code; messages go to
//! stdout (results) and stderr (diagnostics).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use reachgrid_core::player::{play, DisturbanceMode, Outcome, PlayConfig, PlayRecord};
use reachgrid_core::scenario::{builtin_scenario, gen_random_scenario, mode_towards, validate_task, BUILTIN_NAMES};
use reachgrid_core::solver::{solve_with_extension, PolicyFlavor, SolveError};
use reachgrid_core::{GridVec, HybridState, Mode, StateVec};

use crate::bench::{self, BenchConfig};
use crate::export::{self, outcome_code, CsvRow, RunManifest};
use crate::plot::{self, View};
use crate::sweep;
use crate::taskfile::{self, LoadedTask, TaskFileError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_UNSOLVABLE: u8 = 2;
pub const EXIT_PLAY_FAILURE: u8 = 3;
pub const EXIT_TIMEOUT: u8 = 4;
pub const EXIT_INVARIANT: u8 = 5;

/// Default output directory when `--out` is not given.
pub const OUT_ENV: &str = "REACHGRID_OUT";

#[derive(Debug, Parser)]
#[command(name = "reachgrid", version, about = "Robust reach-avoid control synthesis and simulation on 3D grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check route validity and tube perforation of a task file.
    Validate {
        task: String,
    },
    /// Solve one modal game and write its statistics.
    Solve(SolveArgs),
    /// Play the hybrid game, or sweep many seeds.
    Play(PlayArgs),
    /// Time backups on a synthetic obstacle-free scope.
    Bench(BenchArgs),
    /// Redraw scene plots from a task and a trajectory CSV.
    Plot(PlotArgs),
    /// Write a built-in or randomly generated scenario as a task file.
    Scenario(ScenarioArgs),
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "reachgrid-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Task file, or `builtin:<name>`.
    pub task: String,
    /// Route segment `s`, flown from `p_s` towards `p_{s+1}`.
    #[arg(long, default_value_t = 1)]
    pub segment: u32,
    /// Override the mode of the modal game.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    pub out: OutArg,
    /// Also write the raw value table.
    #[arg(long)]
    pub dump_table: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Depart,
    Cruise,
    Arrive,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Depart => Mode::Depart,
            ModeArg::Cruise => Mode::Cruise,
            ModeArg::Arrive => Mode::Arrive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    None,
    Wind,
    Worst,
}

impl From<DistArg> for DisturbanceMode {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::None => DisturbanceMode::None,
            DistArg::Wind => DisturbanceMode::RandomWind,
            DistArg::Worst => DisturbanceMode::WorstCase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Nonstat,
    Quasi,
}

impl From<PolicyArg> for PolicyFlavor {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Nonstat => PolicyFlavor::NonStationary,
            PolicyArg::Quasi => PolicyFlavor::QuasiStationary,
        }
    }
}

#[derive(Debug, Args)]
pub struct PlayArgs {
    /// Task file, or `builtin:<name>`.
    pub task: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DistArg::Wind)]
    pub dist: DistArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::Nonstat)]
    pub policy: PolicyArg,
    /// Play this many consecutive seeds starting at `--seed` instead of one.
    #[arg(long)]
    pub sweep: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = default_jobs())]
    pub jobs: usize,
    #[command(flatten)]
    pub out: OutArg,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Number of states in the synthetic scope.
    #[arg(long, default_value_t = 1_000_000)]
    pub cells: usize,
    #[arg(long, default_value_t = 1)]
    pub stages: u32,
    #[arg(long, default_value_t = 1)]
    pub reps: u32,
    /// Control set `[±r]^3`.
    #[arg(long, default_value_t = 1)]
    pub control_radius: i32,
    /// Wind magnitude (0 for calm).
    #[arg(long, default_value_t = 1)]
    pub wind: i32,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Task file, or `builtin:<name>`.
    pub task: String,
    /// Trajectory to draw dashed red.
    #[arg(long)]
    pub csv: PathBuf,
    /// Reference trajectory to draw solid blue.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// One of the built-in names, or `random`.
    pub name: String,
    /// Destination task file.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [20u32, 20, 10])]
    pub dims: Vec<u32>,
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    #[arg(long, default_value_t = 4)]
    pub waypoints: usize,
}

pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Validate { task } => cmd_validate(&task),
        Command::Solve(a) => cmd_solve(&a),
        Command::Play(a) => cmd_play(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Plot(a) => cmd_plot(&a),
        Command::Scenario(a) => cmd_scenario(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_VALIDATION
        }
    }
}

/// Loads a task file or a `builtin:<name>` scenario.
pub fn load(spec: &str) -> Result<LoadedTask, TaskFileError> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let s = builtin_scenario(name)?;
        return Ok(LoadedTask {
            task: s.task,
            params: s.params,
            note: Some(s.note.into()),
        });
    }
    taskfile::load_task(Path::new(spec))
}

fn load_or_report(spec: &str) -> Result<LoadedTask, u8> {
    load(spec).map_err(|e| {
        match e {
            TaskFileError::Io { .. } => eprintln!("{e}"),
            _ => eprintln!("{spec}: {e}"),
        }
        EXIT_VALIDATION
    })
}

fn task_path(spec: &str) -> Option<&Path> {
    (!spec.starts_with("builtin:")).then(|| Path::new(spec))
}

fn params_json(t: &LoadedTask) -> serde_json::Value {
    serde_json::to_value(taskfile::ParamsSection::from_params(&t.params)).unwrap_or_default()
}

pub fn cmd_validate(spec: &str) -> Result<u8> {
    let t = match load_or_report(spec) {
        Ok(t) => t,
        Err(code) => return Ok(code),
    };
    // Loading validates; rerun for the witness.
    let witness = validate_task(&t.task)?;
    println!(
        "ok: {} waypoints, {} obstacle cells, tube witness of {} cells",
        t.task.route().len(),
        t.task.obstacle_count(),
        witness.len()
    );
    Ok(EXIT_OK)
}

pub fn cmd_solve(a: &SolveArgs) -> Result<u8> {
    let t = match load_or_report(&a.task) {
        Ok(t) => t,
        Err(code) => return Ok(code),
    };
    let n = t.task.route().len() as u32;
    if a.segment == 0 || a.segment >= n {
        eprintln!("segment must lie in 1..={}", n - 1);
        return Ok(EXIT_VALIDATION);
    }
    let i = a.segment + 1;
    let mode = a.mode.map(Mode::from).unwrap_or_else(|| mode_towards(i, &t.task));
    let from = t.task.route()[a.segment as usize - 1];
    let s = HybridState::new(mode, StateVec::new(from, GridVec::ZERO, i));
    fs::create_dir_all(&a.out.out).with_context(|| format!("creating {}", a.out.out.display()))?;
    RunManifest::new("solve", task_path(&a.task), params_json(&t), vec![], &a.out.out).write(&a.out.out)?;
    match solve_with_extension(&s, &t.task, &t.params) {
        Ok(solved) => {
            let summary = export::solve_summary(&solved.game, &solved.solution);
            fs::write(a.out.out.join("solve.txt"), summary.render())?;
            if a.dump_table {
                let f = fs::File::create(a.out.out.join("table.bin"))?;
                export::write_table(std::io::BufWriter::new(f), &solved.solution)?;
            }
            print!("{}", summary.render());
            Ok(EXIT_OK)
        }
        Err(SolveError::Unsolvable {
            extensions,
            winning_states,
        }) => {
            let mut summary = export::Summary::new();
            summary
                .set("mode", mode)
                .set("waypoint", i)
                .set("unsolvable", true)
                .set("extensions", extensions)
                .set("winning_states", winning_states);
            fs::write(a.out.out.join("solve.txt"), summary.render())?;
            eprintln!(
                "unsolvable: start state outside the winning region after {extensions} scope extensions \
                 ({winning_states} winning states at the first stage)"
            );
            Ok(EXIT_UNSOLVABLE)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(EXIT_UNSOLVABLE)
        }
    }
}

fn csv_rows(rec: &PlayRecord) -> Vec<CsvRow> {
    rec.rows.iter().enumerate().map(|(n, r)| CsvRow::from_row(n, r)).collect()
}

fn write_plots(t: &LoadedTask, dir: &Path, reference: Option<&[CsvRow]>, played: &[CsvRow]) -> Result<()> {
    for view in [View::Top, View::Side] {
        let svg = plot::render(view, &t.task, &t.params, reference, played);
        fs::write(dir.join(format!("{}.svg", view.name())), svg)?;
    }
    Ok(())
}

fn write_csv_file(path: &Path, rec: &PlayRecord) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    export::write_csv(std::io::BufWriter::new(f), &rec.rows)
}

pub fn cmd_play(a: &PlayArgs) -> Result<u8> {
    let t = match load_or_report(&a.task) {
        Ok(t) => t,
        Err(code) => return Ok(code),
    };
    fs::create_dir_all(&a.out.out).with_context(|| format!("creating {}", a.out.out.display()))?;
    if let Some(count) = a.sweep {
        return play_sweep(a, &t, count);
    }
    let cfg = PlayConfig::new(a.seed, a.dist.into()).with_flavor(a.policy.into());
    let rec = play(&t.task, &t.params, &cfg);
    write_csv_file(&a.out.out.join("trajectory.csv"), &rec)?;
    let played = csv_rows(&rec);
    let mut summary = export::play_summary(&rec);
    summary
        .set("seed", a.seed)
        .set("disturbance", DisturbanceMode::from(a.dist).name())
        .set("unsafe_visits", sweep::unsafe_visits(&t.task, &rec));
    let reference = if a.dist == DistArg::None {
        None
    } else {
        let calm = PlayConfig::new(a.seed, DisturbanceMode::None).with_flavor(a.policy.into());
        let r = play(&t.task, &t.params, &calm);
        write_csv_file(&a.out.out.join("reference.csv"), &r)?;
        Some(csv_rows(&r))
    };
    if let Some(dev) = reference.as_deref().and_then(|r| plot::reference_deviation(r, &played)) {
        summary
            .set("reference_deviation", dev)
            .set("reference_within_tube", dev <= t.task.delta_tube() as i32);
    }
    write_plots(&t, &a.out.out, reference.as_deref(), &played)?;
    fs::write(a.out.out.join("summary.txt"), summary.render())?;
    RunManifest::new("play", task_path(&a.task), params_json(&t), vec![a.seed], &a.out.out).write(&a.out.out)?;
    print!("{}", summary.render());
    Ok(outcome_code(rec.outcome))
}

fn play_sweep(a: &PlayArgs, t: &LoadedTask, count: u64) -> Result<u8> {
    let failures = Mutex::new(Vec::new());
    let results = sweep::sweep(
        &t.task,
        &t.params,
        a.dist.into(),
        a.policy.into(),
        a.seed,
        count,
        a.jobs,
        |seed, rec| {
            if rec.outcome != Outcome::Terminated {
                failures.lock().expect("failure log").push((seed, rec.clone()));
            }
        },
    );
    let mut w = csv::Writer::from_path(a.out.out.join("sweep.csv"))?;
    w.write_record(["seed", "outcome", "steps", "cost", "unsafe_visits", "events"])?;
    for r in &results {
        w.write_record([
            r.seed.to_string(),
            r.outcome.to_string(),
            r.steps.to_string(),
            r.cost.to_string(),
            r.unsafe_visits.to_string(),
            r.reached_goals.to_string(),
        ])?;
    }
    w.flush()?;
    // Keep the trajectories of failed seeds for inspection.
    for (seed, rec) in failures.into_inner().expect("failure log") {
        write_csv_file(&a.out.out.join(format!("failed-{seed}.csv")), &rec)?;
    }
    let mut summary = sweep::sweep_summary(&results);
    summary.set("disturbance", DisturbanceMode::from(a.dist).name());
    fs::write(a.out.out.join("summary.txt"), summary.render())?;
    let seeds = (a.seed..a.seed + count).collect();
    RunManifest::new("play --sweep", task_path(&a.task), params_json(t), seeds, &a.out.out).write(&a.out.out)?;
    print!("{}", summary.render());
    let code = results
        .iter()
        .find(|r| r.outcome != Outcome::Terminated)
        .map_or(EXIT_OK, |r| outcome_code(r.outcome));
    Ok(code)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<u8> {
    let cfg = BenchConfig {
        cells: a.cells,
        stages: a.stages,
        reps: a.reps,
        control_radius: a.control_radius,
        wind: a.wind,
    };
    let Some(r) = bench::run(&cfg) else {
        println!("nothing to do");
        return Ok(EXIT_OK);
    };
    println!("states={}", r.states);
    println!("controls={}", r.controls);
    println!("disturbances={}", r.disturbances);
    println!("backups={}", r.backups);
    println!("peak_cells={}", r.peak_cells);
    println!("wall_min_s={:.4}", r.min());
    println!("wall_median_s={:.4}", r.median());
    println!("backups_per_sec={:.0}", r.backups_per_sec());
    println!("secs_per_million={:.4}", r.secs_per_million());
    Ok(EXIT_OK)
}

pub fn cmd_plot(a: &PlotArgs) -> Result<u8> {
    let t = match load_or_report(&a.task) {
        Ok(t) => t,
        Err(code) => return Ok(code),
    };
    let played = export::read_csv_file(&a.csv)?;
    let reference = a.reference.as_deref().map(export::read_csv_file).transpose()?;
    fs::create_dir_all(&a.out.out)?;
    write_plots(&t, &a.out.out, reference.as_deref(), &played)?;
    Ok(EXIT_OK)
}

pub fn cmd_scenario(a: &ScenarioArgs) -> Result<u8> {
    let (task, params, note) = if a.name == "random" {
        let [x, y, z] = a.dims[..] else {
            bail!("--dims takes three values");
        };
        let task = gen_random_scenario(a.seed, [x, y, z], a.density, a.waypoints)?;
        let note = format!(
            "random cloud: seed {}, {x}x{y}x{z}, density {}, {} waypoints",
            a.seed, a.density, a.waypoints
        );
        (task, reachgrid_core::scenario::windy_params(3, 12), note)
    } else if BUILTIN_NAMES.contains(&a.name.as_str()) {
        let s = builtin_scenario(&a.name)?;
        (s.task, s.params, s.note.to_string())
    } else {
        eprintln!("unknown scenario {:?}; expected random or one of {}", a.name, BUILTIN_NAMES.join(", "));
        return Ok(EXIT_VALIDATION);
    };
    taskfile::save_task(&task, &params, Some(&note), &a.output)?;
    println!("wrote {}", a.output.display());
    Ok(EXIT_OK)
}

//! `scopp` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 unparseable or
//! structurally invalid input, 3 validation failure (e.g. `--strict-faa`
//! bounds), 4 the area yields no free cells.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scopp_core::export;
use scopp_core::mission::{run_pipeline, MissionSpec, Scenario};
use scopp_core::sim::{evaluate, scalability_sweep, sweep_baseline};
use scopp_core::Error;

const SEED_ENV: &str = "SCOPP_SEED";

#[derive(Parser)]
#[command(name = "scopp", version, about = "Multi-robot coverage path planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a mission and write GeoJSON, CSV and a coverage plot.
    Plan(PlanArgs),
    /// Sweep team sizes and seeds; write CSV tables and SVG plots.
    Bench(BenchArgs),
    /// Time each pipeline stage for one run.
    Profile(ProfileArgs),
    /// Plan the equal-strip sweep baseline.
    Baseline(PlanArgs),
}

#[derive(Args)]
struct Common {
    /// Mission file (JSON).
    #[arg(long)]
    mission: PathBuf,
    /// Overrides the mission seed and $SCOPP_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Treat out-of-bounds altitude or speed as an error.
    #[arg(long)]
    strict_faa: bool,
    /// Also write the main output to stdout.
    #[arg(long)]
    print: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    /// Team size; defaults to the number of start positions.
    #[arg(long)]
    robots: Option<usize>,
    #[arg(long, default_value = "plan.geojson")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    team_sizes: Vec<usize>,
    /// Defaults to five consecutive seeds from the resolved seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long, default_value = "bench")]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    robots: Option<usize>,
    #[arg(long, default_value = "profile.csv")]
    out: PathBuf,
}

enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Core(Error::Parse { .. } | Error::InvalidInput(_) | Error::OutOfRange(_)) => 2,
            Failure::Core(Error::Validation(_)) => 3,
            Failure::Core(Error::EmptyGrid(_)) => 4,
            Failure::Core(_) => 1,
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn write(path: &Path, contents: &str) -> Outcome<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn env_seed() -> Outcome<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Failure::Core(Error::InvalidInput(format!(
                "{SEED_ENV}={v:?} is not an unsigned integer"
            )))
        }),
        Err(_) => Ok(None),
    }
}

/// Loads, resolves and validates the mission. The returned spec carries the
/// resolved seed and strictness, so echoing it reproduces the run.
fn load(c: &Common) -> Outcome<MissionSpec> {
    let text = fs::read_to_string(&c.mission)
        .map_err(|e| Failure::Io(format!("{}: {e}", c.mission.display())))?;
    let mut mission = MissionSpec::from_json(&text)?;
    let seed = match (c.seed, mission.options.seed) {
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) => env_seed()?.unwrap_or(0),
    };
    mission.options.seed = Some(seed);
    mission.options.strict_faa |= c.strict_faa;
    for w in mission.validate()? {
        eprintln!("warning: {w}");
    }
    Ok(mission)
}

/// Expands the start list to exactly `n` entries, cycling as the planner does.
fn with_team(mut mission: MissionSpec, n: Option<usize>) -> Outcome<MissionSpec> {
    let n = n.unwrap_or(mission.robots.len());
    if n == 0 {
        return Err(Error::InvalidInput("--robots must be >= 1".into()).into());
    }
    let starts = mission.robots.clone();
    mission.robots = (0..n).map(|i| starts[i % starts.len()]).collect();
    Ok(mission)
}

fn emit_plan(args: &PlanArgs, baseline: bool) -> Outcome<()> {
    let mission = with_team(load(&args.common)?, args.robots)?;
    let n = mission.robots.len();
    let (strategy, plan, grid) = if baseline {
        let scenario = Scenario::new(&mission)?;
        let grid = scenario.grid()?;
        let b = sweep_baseline(&grid, &scenario.robots(n), &scenario.projection)?;
        (b.strategy, b.plan, grid)
    } else {
        let run = run_pipeline(&mission, n, mission.seed())?;
        ("qlbm".to_string(), run.plan, run.grid)
    };
    let metrics = evaluate(&plan, &mission.uav, &grid)?;
    let doc = export::to_pretty(&export::plan_document(&strategy, &mission, &plan, &metrics));
    write(&args.out, &doc)?;
    write(
        &args.out.with_extension("csv"),
        &export::plan_csv(&plan, mission.uav.velocity_mps),
    )?;
    write(
        &args.out.with_extension("svg"),
        &export::coverage_svg(&metrics),
    )?;
    eprintln!(
        "{strategy}: {n} robots, {} cells, completion {} s -> {}",
        grid.n_free(),
        export::fmt_num(metrics.completion_time),
        args.out.display()
    );
    if args.common.print {
        print!("{doc}");
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> Outcome<()> {
    let mission = load(&args.common)?;
    let seeds = args.seeds.clone().unwrap_or_else(|| {
        let s = mission.seed();
        (0..5).map(|i| s.wrapping_add(i)).collect()
    });
    if args.team_sizes.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidInput("need at least one team size and one seed".into()).into());
    }
    let table = scalability_sweep(&mission, &args.team_sizes, &seeds)?;
    let csv = export::sweep_csv(&table);
    let (mission_svg, compute_svg) = export::sweep_svgs(&table);
    write(&args.out.join("bench.csv"), &csv)?;
    write(
        &args.out.join("bench_timing.csv"),
        &export::sweep_timing_csv(&table),
    )?;
    write(&args.out.join("mission_time.svg"), &mission_svg)?;
    write(&args.out.join("computing_time.svg"), &compute_svg)?;
    eprintln!("{} runs -> {}", table.rows.len(), args.out.display());
    if args.common.print {
        print!("{csv}");
    }
    Ok(())
}

fn profile(args: &ProfileArgs) -> Outcome<()> {
    let mission = with_team(load(&args.common)?, args.robots)?;
    let n = mission.robots.len();
    let timings = run_pipeline(&mission, n, mission.seed())?.timings;
    let csv = export::profile_csv(&timings);
    write(&args.out, &csv)?;
    write(
        &args.out.with_extension("svg"),
        &export::profile_svg(&[(format!("{n} robots"), timings)]),
    )?;
    eprintln!("profile ({n} robots) -> {}", args.out.display());
    if args.common.print {
        print!("{csv}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => emit_plan(a, false),
        Command::Baseline(a) => emit_plan(a, true),
        Command::Bench(a) => bench(a),
        Command::Profile(a) => profile(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Io(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prrt_connect::harness::{
    export_trajectory_csv, parse_methods, read_trajectory_csv, render_svg, run_benchmark,
    write_stats_csv, write_trials_csv, BenchmarkConfig, Settings,
};
use prrt_connect::{plan, track, Error, PlanResult, Result, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "prrtc",
    version,
    about = "Goal-biased RRT planning with intermediate-goal repair, smoothing and tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Parameter override, e.g. `--param lambda=0` (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a path and write plan.json, path.csv and plan.svg.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan, then track the smoothed path; adds trajectory.csv.
    Track {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare planners over paired-seed trials; writes stats.csv and trials.csv.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "rrt,prrt,prrt_connect")]
        methods: String,
        #[arg(long)]
        out: PathBuf,
        /// Fill the mean_ms column with measured wall time.
        #[arg(long)]
        timing: bool,
    },
    /// Render a saved plan (and optional trajectory) to SVG.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<(Scenario, Settings)> {
    let scenario = Scenario::load(&common.scenario)?;
    let settings = Settings::with_overrides(&common.params)?.for_scenario(&scenario);
    Ok((scenario, settings))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn plan_into(
    scenario: &Scenario,
    settings: &Settings,
    seed: u64,
    out: &Path,
) -> Result<PlanResult> {
    create_dir(out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let result = plan(scenario, &settings.connect, &mut rng)?;
    write(&out.join("plan.json"), &result.to_json())?;
    let mut csv = String::from("x,y\n");
    for p in &result.path {
        csv.push_str(&format!("{:.6},{:.6}\n", p.x, p.y));
    }
    write(&out.join("path.csv"), &csv)?;
    Ok(result)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan { common, seed, out } => {
            let (scenario, settings) = load(&common)?;
            let result = plan_into(&scenario, &settings, seed, &out)?;
            write(
                &out.join("plan.svg"),
                &render_svg(&scenario, Some(&result), None)?,
            )?;
            println!(
                "planned {} samples, {} iterations, {} hindering obstacle(s)",
                result.path.len(),
                result.total_iterations,
                result.hindering_ids.len()
            );
        }
        Command::Track { common, seed, out } => {
            let (scenario, settings) = load(&common)?;
            let result = plan_into(&scenario, &settings, seed, &out)?;
            let trajectory = track(
                &result.smooth_path(),
                scenario.start,
                &scenario.ego,
                &settings.mpc,
                settings.stanley_gain,
            )?;
            export_trajectory_csv(&trajectory, out.join("trajectory.csv"))?;
            write(
                &out.join("track.svg"),
                &render_svg(&scenario, Some(&result), Some(&trajectory))?,
            )?;
            println!("tracked {} steps", trajectory.len());
        }
        Command::Bench {
            common,
            trials,
            seed,
            methods,
            out,
            timing,
        } => {
            let (scenario, settings) = load(&common)?;
            let methods = parse_methods(&methods)?;
            let config = BenchmarkConfig::new(scenario, methods, trials, seed, settings.connect);
            let stats = run_benchmark(&config)?;
            create_dir(&out)?;
            write_stats_csv(&stats, out.join("stats.csv"), timing)?;
            write_trials_csv(&stats, out.join("trials.csv"))?;
            for r in &stats.rows {
                println!(
                    "{:<13} mean {:>8.1}  std {:>8.1}  success {:.2}",
                    r.method.name(),
                    r.mean_iterations,
                    r.std_iterations,
                    r.success_rate
                );
            }
        }
        Command::Render {
            common,
            plan,
            trajectory,
            out,
        } => {
            let (scenario, _) = load(&common)?;
            let text = std::fs::read_to_string(&plan).map_err(|e| Error::Io {
                path: plan.clone(),
                source: e,
            })?;
            let result = PlanResult::from_json(&text).map_err(|e| Error::Json {
                path: plan.clone(),
                source: e,
            })?;
            let trajectory = trajectory.map(read_trajectory_csv).transpose()?;
            write(
                &out,
                &render_svg(&scenario, Some(&result), trajectory.as_ref())?,
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Paired-seed planner comparison: plain RRT, pRRT and pRRT-Connect on one
//! scenario.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connect::{plan, ConnectParams};
use crate::error::{Error, Result};
use crate::rrt::{prrt, PlannerParams, PlanningContext};
use crate::sampling::generate_ppm;
use crate::world::{Obstacle, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rrt,
    Prrt,
    PrrtConnect,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Rrt, Method::Prrt, Method::PrrtConnect];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rrt => "rrt",
            Method::Prrt => "prrt",
            Method::PrrtConnect => "prrt_connect",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rrt" => Ok(Method::Rrt),
            "prrt" => Ok(Method::Prrt),
            "prrt_connect" | "prrtc" => Ok(Method::PrrtConnect),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Parses a comma-separated method list, keeping the given order.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for m in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m: Method = m.parse()?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(Error::InvalidParameter("empty method list".into()));
    }
    Ok(methods)
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub base_seed: u64,
    pub rrt: PlannerParams,
    pub prrt: PlannerParams,
    pub connect: ConnectParams,
}

impl BenchmarkConfig {
    /// Standard setup: RRT is pRRT at zero bias, pRRT-Connect shares the pRRT
    /// parameters.
    pub fn new(
        scenario: Scenario,
        methods: Vec<Method>,
        trials: usize,
        base_seed: u64,
        connect: ConnectParams,
    ) -> Self {
        let prrt = connect.planner;
        Self {
            scenario,
            methods,
            trials,
            base_seed,
            rrt: PlannerParams { bias: 0.0, ..prrt },
            prrt,
            connect,
        }
    }

    pub fn params_for(&self, method: Method) -> &PlannerParams {
        match method {
            Method::Rrt => &self.rrt,
            Method::Prrt => &self.prrt,
            Method::PrrtConnect => &self.connect.planner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub method: Method,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub iterations: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: Method,
    pub trials: usize,
    pub successes: usize,
    /// Mean over successful trials; NaN if none succeeded.
    pub mean_iterations: f64,
    /// Sample standard deviation over successful trials.
    pub std_iterations: f64,
    pub success_rate: f64,
    pub mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkStats {
    pub rows: Vec<MethodStats>,
    pub outcomes: Vec<TrialOutcome>,
}

impl BenchmarkStats {
    pub fn row(&self, method: Method) -> Option<&MethodStats> {
        self.rows.iter().find(|r| r.method == method)
    }
}

fn run_trial(config: &BenchmarkConfig, method: Method, trial: usize) -> Result<TrialOutcome> {
    let seed = config.base_seed.wrapping_add(trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = &config.scenario;
    let started = Instant::now();
    let (success, iterations) = match method {
        Method::Rrt | Method::Prrt => {
            // Baselines know every obstacle from the start.
            let params = config.params_for(method);
            let obstacles: Vec<&Obstacle> = scenario.obstacles.iter().collect();
            let ctx = PlanningContext {
                bounds: &scenario.bounds,
                obstacles: &obstacles,
                ego: &scenario.ego,
            };
            let ppm = generate_ppm(
                scenario.goal,
                params.bias,
                params.spread,
                &scenario.bounds,
                &scenario.obstacles,
                params.cell_size,
            )?;
            let run = prrt(scenario.start, scenario.goal, &ppm, params, &ctx, &mut rng);
            (run.succeeded(), run.iterations)
        }
        Method::PrrtConnect => match plan(scenario, &config.connect, &mut rng) {
            Ok(result) => (true, result.total_iterations),
            Err(Error::PlanningFailed { .. }) => (false, 0),
            Err(e) => return Err(e),
        },
    };
    Ok(TrialOutcome {
        method,
        trial,
        seed,
        success,
        iterations,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

fn summarize(method: Method, outcomes: &[TrialOutcome]) -> MethodStats {
    let ok: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.success)
        .map(|o| o.iterations as f64)
        .collect();
    let n = ok.len();
    let mean = if n == 0 {
        f64::NAN
    } else {
        ok.iter().sum::<f64>() / n as f64
    };
    let std = if n < 2 {
        0.0
    } else {
        (ok.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let ms: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.success)
        .map(|o| o.elapsed_ms)
        .collect();
    MethodStats {
        method,
        trials: outcomes.len(),
        successes: n,
        mean_iterations: mean,
        std_iterations: std,
        success_rate: if outcomes.is_empty() {
            0.0
        } else {
            n as f64 / outcomes.len() as f64
        },
        mean_ms: if ms.is_empty() {
            f64::NAN
        } else {
            ms.iter().sum::<f64>() / ms.len() as f64
        },
    }
}

/// Runs every method for `trials` paired seeds. Trial `k` uses seed
/// `base_seed + k` for every method; trials run in parallel.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkStats> {
    config.scenario.validate()?;
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    config.rrt.validate()?;
    config.prrt.validate()?;
    config.connect.planner.validate()?;

    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for &method in &config.methods {
        let mut runs = (0..config.trials)
            .into_par_iter()
            .map(|k| run_trial(config, method, k))
            .collect::<Result<Vec<_>>>()?;
        runs.sort_by_key(|o| o.trial);
        rows.push(summarize(method, &runs));
        outcomes.extend(runs);
    }
    Ok(BenchmarkStats { rows, outcomes })
}

fn fmt_stat(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3}")
    } else {
        "NA".to_string()
    }
}

/// Writes `stats.csv`. Wall time is non-deterministic, so it is only written
/// when `include_timing` is set; otherwise the column holds `NA`.
pub fn write_stats_csv(
    stats: &BenchmarkStats,
    path: impl AsRef<Path>,
    include_timing: bool,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("method,mean_iters,std_iters,success_rate,mean_ms\n");
    for r in &stats.rows {
        let ms = if include_timing {
            fmt_stat(r.mean_ms)
        } else {
            "NA".into()
        };
        out.push_str(&format!(
            "{},{},{},{:.3},{}\n",
            r.method,
            fmt_stat(r.mean_iterations),
            fmt_stat(r.std_iterations),
            r.success_rate,
            ms
        ));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

/// Per-trial outcomes, one row per (method, trial).
pub fn write_trials_csv(stats: &BenchmarkStats, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("method,trial,seed,success,iterations\n");
    for o in &stats.outcomes {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            o.method, o.trial, o.seed, o.success, o.iterations
        ));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

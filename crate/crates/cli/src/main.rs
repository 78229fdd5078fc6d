use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ugv_core::bnb::solve;
use ugv_core::experiments::{
    baseline, generate_scenario, run_rng, sweep, write_trace_csv, GenParams, Scheme, SweepConfig,
    SweepKind,
};
use ugv_core::local_search::{self, DEFAULT_RADIUS};
use ugv_core::oracle::certify;
use ugv_core::{Scenario, SolveReport};

#[derive(Parser)]
#[command(name = "ugv", version, about = "Minimum-energy UGV data collection planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random scenario and write it as JSON.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Find the optimal plan for a scenario.
    Solve {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Init::Naive)]
        init: Init,
        #[arg(long, default_value_t = 20)]
        ls_iters: usize,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        ls_radius: usize,
        /// Seed for the local-search warm start.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-iteration pool trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate a fixed-selection reference scheme.
    Baseline {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write CSV.
    Sweep {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Comma-separated grid values; a per-kind default when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// K = 50, M = 12 and 100 runs instead of the desk-scale defaults.
        #[arg(long)]
        paper_scale: bool,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 20)]
        ls_iters: usize,
    },
    /// Cross-check the solvers against brute-force references.
    Verify {
        #[arg(long, default_value_t = 8)]
        max_m: usize,
        #[arg(long, default_value_t = 50)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    n0_dbm: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Time budget, seconds.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    map_side: Option<f64>,
    #[arg(long)]
    velocity: Option<f64>,
    #[arg(long)]
    gamma_min: Option<f64>,
    #[arg(long)]
    gamma_max: Option<f64>,
}

impl ParamArgs {
    fn apply(&self, mut p: GenParams) -> GenParams {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { p.$f = v; })* };
        }
        set!(k, m, n0_dbm, mu, t, map_side, velocity, gamma_min, gamma_max);
        p
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Naive,
    LocalSearch,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    NoMove,
    FullPath,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Noise,
    Qos,
    Mu,
    Vertices,
    PoolTrace,
}

impl From<KindArg> for SweepKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Noise => SweepKind::Noise,
            KindArg::Qos => SweepKind::Qos,
            KindArg::Mu => SweepKind::Mu,
            KindArg::Vertices => SweepKind::Vertices,
            KindArg::PoolTrace => SweepKind::PoolTrace,
        }
    }
}

#[derive(Serialize)]
struct UserPlan {
    user: usize,
    serve: usize,
    time_s: f64,
    power_w: f64,
}

#[derive(Serialize)]
struct TourOut<'a> {
    order: &'a [usize],
    length_m: f64,
    upsilon_s: f64,
}

#[derive(Serialize)]
struct StatsOut {
    bound_evals: u64,
    leaf_evals: u64,
    iterations: usize,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct ReportOut<'a> {
    feasible: bool,
    objective: f64,
    motion_energy_j: f64,
    comm_energy_j: f64,
    selection: String,
    tour: TourOut<'a>,
    multiplier: f64,
    max_power_w: f64,
    users: Vec<UserPlan>,
    stats: StatsOut,
}

impl<'a> ReportOut<'a> {
    fn new(r: &'a SolveReport) -> Self {
        let users = r
            .alloc
            .serve
            .iter()
            .enumerate()
            .map(|(k, &serve)| UserPlan {
                user: k,
                serve,
                time_s: r.alloc.s[k],
                power_w: r.alloc.q[k],
            })
            .collect();
        ReportOut {
            feasible: true,
            objective: r.objective,
            motion_energy_j: r.motion_energy,
            comm_energy_j: r.comm_energy,
            selection: r.selection.to_string(),
            tour: TourOut {
                order: &r.tour.order,
                length_m: r.tour.length,
                upsilon_s: r.tour.upsilon,
            },
            multiplier: r.alloc.rho,
            max_power_w: r.alloc.max_power(),
            users,
            stats: StatsOut {
                bound_evals: r.stats.bound_evals,
                leaf_evals: r.stats.leaf_evals,
                iterations: r.stats.trace.len().saturating_sub(1),
                wall_time_s: r.stats.wall_time.as_secs_f64(),
            },
        }
    }
}

fn load(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { out, params, seed } => {
            let p = GenParams {
                seed,
                ..params.apply(GenParams::default())
            };
            let sc = generate_scenario(&p)?;
            fs::write(&out, sc.to_json()?).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("wrote {} (M = {}, K = {})", out.display(), p.m, p.k);
        }
        Command::Solve {
            scenario,
            init,
            ls_iters,
            ls_radius,
            seed,
            out,
            trace,
        } => {
            let sc = load(&scenario)?;
            let start = match init {
                Init::Naive => None,
                Init::LocalSearch => {
                    let mut rng = run_rng(seed, 0);
                    let ls = local_search::search(&sc, ls_iters, ls_radius, &mut rng)?;
                    Some((ls.value, ls.selection))
                }
            };
            let report = solve(&sc, start)?;
            if let Some(path) = trace {
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_trace_csv(&report.stats.trace, BufWriter::new(file))?;
            }
            emit(&serde_json::to_string_pretty(&ReportOut::new(&report))?, out.as_deref())?;
        }
        Command::Baseline {
            scenario,
            scheme,
            out,
        } => {
            let sc = load(&scenario)?;
            let scheme = match scheme {
                SchemeArg::NoMove => Scheme::NoMove,
                SchemeArg::FullPath => Scheme::FullPath,
            };
            let text = match baseline(scheme, &sc)? {
                Some(r) => serde_json::to_string_pretty(&ReportOut::new(&r))?,
                None => serde_json::to_string_pretty(&serde_json::json!({
                    "feasible": false,
                    "scheme": scheme,
                }))?,
            };
            emit(&text, out.as_deref())?;
        }
        Command::Sweep {
            kind,
            grid,
            runs,
            seed,
            out,
            paper_scale,
            k,
            m,
            ls_iters,
        } => {
            let kind = SweepKind::from(kind);
            let default_runs = if paper_scale { 100 } else { 20 };
            let mut cfg = SweepConfig::new(kind, runs.unwrap_or(default_runs), seed);
            if paper_scale {
                cfg.params = GenParams::default();
                if kind == SweepKind::PoolTrace {
                    cfg.grid = vec![12.0];
                }
            }
            if let Some(g) = grid {
                cfg.grid = g;
            }
            if let Some(k) = k {
                cfg.params.k = k;
            }
            if let Some(m) = m {
                cfg.params.m = m;
            }
            cfg.ls_iters = ls_iters;
            let table = sweep(&cfg)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            table.write_csv(BufWriter::new(file))?;
            eprintln!("wrote {}", out.display());
        }
        Command::Verify {
            max_m,
            cases,
            seed,
        } => {
            let checks = certify(max_m, cases, seed)?;
            let mut all = true;
            for c in &checks {
                println!(
                    "{} {}: {} cases, {} failures, worst {:.3e}",
                    if c.passed() { "ok  " } else { "FAIL" },
                    c.name,
                    c.cases,
                    c.failures,
                    c.worst
                );
                all &= c.passed();
            }
            if !all {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

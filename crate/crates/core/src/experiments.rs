//! Random scenario generation, baseline schemes and parameter sweeps.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bnb::{evaluate, solve};
use crate::error::{Error, Result};
use crate::local_search::{self, DEFAULT_RADIUS};
use crate::model::{dbm_to_watts, gain, Selection};
use crate::plan::{SolveReport, TraceRecord};
use crate::scenario::{Positions, Scenario, ScenarioData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    /// Side of the square area, meters.
    pub map_side: f64,
    pub k: usize,
    pub m: usize,
    pub pathloss_exponent: f64,
    /// Path loss at the reference distance.
    pub rho0: f64,
    pub d0: f64,
    pub eta: f64,
    pub beta: f64,
    pub n0_dbm: f64,
    pub t: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub velocity: f64,
    pub mu: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            map_side: 20.0,
            k: 50,
            m: 12,
            pathloss_exponent: 2.5,
            rho0: 1e-3,
            d0: 1.0,
            eta: 0.78,
            beta: 0.5,
            n0_dbm: -95.0,
            t: 500.0,
            gamma_min: 1.0,
            gamma_max: 2.0,
            alpha1: 0.29,
            alpha2: 7.4,
            velocity: 1.0,
            mu: 1.0,
            seed: 0,
        }
    }
}

impl GenParams {
    /// Smaller instances that keep sweeps and exhaustive checks cheap.
    pub fn desk() -> Self {
        GenParams {
            k: 20,
            m: 8,
            ..GenParams::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("map_side", self.map_side),
            ("pathloss_exponent", self.pathloss_exponent),
            ("rho0", self.rho0),
            ("d0", self.d0),
            ("eta", self.eta),
            ("beta", self.beta),
            ("T", self.t),
            ("gamma_min", self.gamma_min),
            ("velocity", self.velocity),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
        }
        if self.k == 0 || self.m == 0 {
            return Err(Error::InvalidParams("K and M must be at least 1".into()));
        }
        if !(self.gamma_max >= self.gamma_min) {
            return Err(Error::InvalidParams("gamma_max must be >= gamma_min".into()));
        }
        if self.alpha1 < 0.0 || self.alpha2 < 0.0 || !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidParams("motion coefficients or mu out of range".into()));
        }
        Ok(())
    }
}

/// Generator for run `run` under a master seed: one ChaCha stream per run.
pub fn run_rng(master_seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run);
    rng
}

/// Mean channel power gain at distance `d`: `rho0 * (d / d0)^(-exponent)`.
pub fn path_loss(params: &GenParams, d: f64) -> f64 {
    params.rho0 * (d / params.d0).powf(-params.pathloss_exponent)
}

/// Circularly-symmetric complex Gaussian with variance `loss`.
pub fn draw_channel<R: Rng + ?Sized>(loss: f64, rng: &mut R) -> Complex64 {
    let scale = (loss / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Scenario drawn from `params.seed` (stream 0).
pub fn generate_scenario(params: &GenParams) -> Result<Scenario> {
    generate_with_rng(params, &mut run_rng(params.seed, 0))
}

/// Draws vertex and user positions uniformly in the square, then Rayleigh
/// channels with power-law path loss on both hops.
pub fn generate_with_rng<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Result<Scenario> {
    params.validate()?;
    let side = Uniform::new_inclusive(0.0, params.map_side);
    let point = |rng: &mut R| [side.sample(rng), side.sample(rng)];
    let vertices: Vec<[f64; 2]> = (0..params.m).map(|_| point(rng)).collect();
    let users: Vec<[f64; 2]> = (0..params.k).map(|_| point(rng)).collect();
    let gamma_dist = Uniform::new_inclusive(params.gamma_min, params.gamma_max);
    let gamma: Vec<f64> = (0..params.k).map(|_| gamma_dist.sample(rng)).collect();

    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let d: Vec<Vec<f64>> = vertices
        .iter()
        .map(|&a| vertices.iter().map(|&b| dist(a, b)).collect())
        .collect();

    let n0 = dbm_to_watts(params.n0_dbm);
    let mut a_gain = vec![vec![0.0; params.m]; params.k];
    for (k, &u) in users.iter().enumerate() {
        for (m, &v) in vertices.iter().enumerate() {
            let loss = path_loss(params, dist(u, v));
            let g = draw_channel(loss, rng);
            let h = draw_channel(loss, rng);
            a_gain[k][m] = gain(g, h, params.beta, params.eta, n0)?;
        }
    }

    Scenario::new(ScenarioData {
        m: params.m,
        k: params.k,
        d,
        a_gain,
        gamma,
        t: params.t,
        velocity: params.velocity,
        alpha1: params.alpha1,
        alpha2: params.alpha2,
        mu: params.mu,
        n0_dbm: params.n0_dbm,
        beta: params.beta,
        eta: params.eta,
        positions: Some(Positions { vertices, users }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    NoMove,
    FullPath,
}

impl Scheme {
    pub fn selection(self, m: usize) -> Selection {
        match self {
            Scheme::NoMove => Selection::depot_only(m),
            Scheme::FullPath => Selection::full(m),
        }
    }
}

/// Plan of a fixed-selection scheme; `None` when the full path leaves no
/// time to communicate.
pub fn baseline(scheme: Scheme, scenario: &Scenario) -> Result<Option<SolveReport>> {
    evaluate(scenario, &scheme.selection(scenario.num_vertices()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Noise,
    Qos,
    Mu,
    Vertices,
    PoolTrace,
}

impl SweepKind {
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepKind::Noise => vec![-120.0, -110.0, -100.0, -90.0, -80.0, -70.0, -60.0],
            SweepKind::Qos => vec![1.0, 2.0, 4.0, 8.0, 16.0],
            SweepKind::Mu => vec![0.0, 0.25, 0.5, 0.75, 1.0],
            SweepKind::Vertices => vec![4.0, 6.0, 8.0, 10.0],
            SweepKind::PoolTrace => vec![10.0],
        }
    }

    fn label(self) -> &'static str {
        match self {
            SweepKind::Noise => "noise_dbm",
            SweepKind::Qos => "gamma",
            SweepKind::Mu => "mu",
            SweepKind::Vertices => "vertices",
            SweepKind::PoolTrace => "vertices",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub grid: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    /// Physics and sizes shared by every run; `seed` inside is ignored.
    pub params: GenParams,
    /// Local-search iterations for the warm-started trace.
    pub ls_iters: usize,
}

impl SweepConfig {
    pub fn new(kind: SweepKind, runs: usize, seed: u64) -> Self {
        SweepConfig {
            kind,
            grid: kind.default_grid(),
            runs,
            seed,
            params: GenParams::desk(),
            ls_iters: 20,
        }
    }
}

/// Objectives of the three schemes at one grid point of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub sweep: String,
    pub x: f64,
    /// Run index, or `aggregate` for the mean over runs.
    pub run: String,
    pub proposed: f64,
    pub proposed_motion: f64,
    pub proposed_comm: f64,
    pub no_move: f64,
    /// Empty when the full path is infeasible.
    pub full_path: Option<f64>,
    pub full_path_feasible: usize,
    pub selected: f64,
    pub max_power: f64,
    pub bound_evals: f64,
    pub leaf_evals: f64,
}

/// One branch-and-bound iteration for the pool-trace experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub vertices: usize,
    pub init: String,
    pub run: String,
    pub iteration: usize,
    pub pool_nodes: f64,
    pub candidates: f64,
    pub incumbent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepTable {
    Energy(Vec<EnergyRow>),
    Trace(Vec<TraceRow>),
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match self {
            SweepTable::Energy(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
            SweepTable::Trace(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Writes one branch-and-bound trace as CSV.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in trace {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

fn grid_usize(x: f64) -> Result<usize> {
    if x >= 1.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(Error::InvalidParams(format!("vertex count {x} is not a positive integer")))
    }
}

/// Scenario of run `run` at grid value `x`. Draws are shared across grid
/// values: the grid only rescales noise, overrides targets or the weight, or
/// truncates a larger vertex set.
fn instance(cfg: &SweepConfig, run: usize, x: f64) -> Result<Scenario> {
    let mut params = cfg.params.clone();
    let mut rng = run_rng(cfg.seed, run as u64);
    match cfg.kind {
        SweepKind::Noise => {
            params.n0_dbm = x;
            generate_with_rng(&params, &mut rng)
        }
        SweepKind::Qos => {
            let sc = generate_with_rng(&params, &mut rng)?;
            sc.with_gamma(vec![x; params.k])
        }
        SweepKind::Mu => generate_with_rng(&params, &mut rng)?.with_mu(x),
        SweepKind::Vertices | SweepKind::PoolTrace => {
            let max_m = cfg.grid.iter().map(|&g| grid_usize(g)).collect::<Result<Vec<_>>>()?;
            params.m = max_m.into_iter().max().unwrap_or(params.m);
            generate_with_rng(&params, &mut rng)?.restrict_vertices(grid_usize(x)?)
        }
    }
}

fn energy_row(cfg: &SweepConfig, run: usize, x: f64) -> Result<EnergyRow> {
    let sc = instance(cfg, run, x)?;
    let proposed = solve(&sc, None)?;
    let no_move = baseline(Scheme::NoMove, &sc)?.expect("stationary plan is always feasible");
    let full = baseline(Scheme::FullPath, &sc)?;
    Ok(EnergyRow {
        sweep: cfg.kind.label().into(),
        x,
        run: run.to_string(),
        proposed: proposed.objective,
        proposed_motion: proposed.motion_energy,
        proposed_comm: proposed.comm_energy,
        no_move: no_move.objective,
        full_path: full.as_ref().map(|r| r.objective),
        full_path_feasible: usize::from(full.is_some()),
        selected: proposed.selection.count() as f64,
        max_power: proposed.alloc.max_power(),
        bound_evals: proposed.stats.bound_evals as f64,
        leaf_evals: proposed.stats.leaf_evals as f64,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn aggregate(rows: &[EnergyRow]) -> EnergyRow {
    let first = &rows[0];
    let feasible: Vec<f64> = rows.iter().filter_map(|r| r.full_path).collect();
    EnergyRow {
        sweep: first.sweep.clone(),
        x: first.x,
        run: "aggregate".into(),
        proposed: mean(rows.iter().map(|r| r.proposed)),
        proposed_motion: mean(rows.iter().map(|r| r.proposed_motion)),
        proposed_comm: mean(rows.iter().map(|r| r.proposed_comm)),
        no_move: mean(rows.iter().map(|r| r.no_move)),
        full_path: (!feasible.is_empty()).then(|| mean(feasible.iter().copied())),
        full_path_feasible: feasible.len(),
        selected: mean(rows.iter().map(|r| r.selected)),
        max_power: mean(rows.iter().map(|r| r.max_power)),
        bound_evals: mean(rows.iter().map(|r| r.bound_evals)),
        leaf_evals: mean(rows.iter().map(|r| r.leaf_evals)),
    }
}

fn trace_rows(cfg: &SweepConfig, run: usize, x: f64) -> Result<Vec<TraceRow>> {
    let sc = instance(cfg, run, x)?;
    let m = sc.num_vertices();
    let naive = solve(&sc, None)?;
    // A separate stream keeps the warm start independent of the draws.
    let mut ls_rng = run_rng(cfg.seed ^ 0x5eed, run as u64);
    let warm = local_search::search(&sc, cfg.ls_iters.max(1), DEFAULT_RADIUS, &mut ls_rng)?;
    let warmed = solve(&sc, Some((warm.value, warm.selection)))?;
    let mut rows = Vec::new();
    for (init, report) in [("naive", &naive), ("local-search", &warmed)] {
        for rec in &report.stats.trace {
            rows.push(TraceRow {
                vertices: m,
                init: init.into(),
                run: run.to_string(),
                iteration: rec.iteration,
                pool_nodes: rec.pool_nodes as f64,
                candidates: rec.candidates as f64,
                incumbent: rec.incumbent,
            });
        }
    }
    Ok(rows)
}

/// Mean pool size per iteration; finished runs count as an empty pool.
fn trace_aggregate(per_run: &[Vec<TraceRow>], m: usize) -> Vec<TraceRow> {
    let mut out = Vec::new();
    for init in ["naive", "local-search"] {
        let series: Vec<Vec<&TraceRow>> = per_run
            .iter()
            .map(|rows| rows.iter().filter(|r| r.init == init).collect())
            .collect();
        let longest = series.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..longest {
            let at = |f: fn(&TraceRow) -> f64| {
                mean(series.iter().map(|s| s.get(i).map_or(0.0, |r| f(r))))
            };
            let incumbent = mean(
                series
                    .iter()
                    .map(|s| s.get(i).or(s.last()).map_or(f64::NAN, |r| r.incumbent)),
            );
            out.push(TraceRow {
                vertices: m,
                init: init.into(),
                run: "aggregate".into(),
                iteration: i,
                pool_nodes: at(|r| r.pool_nodes),
                candidates: at(|r| r.candidates),
                incumbent,
            });
        }
    }
    out
}

/// Runs every (grid value, run) pair in parallel and assembles rows in
/// grid-then-run order, followed by one aggregate row per grid value.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    if cfg.grid.is_empty() || cfg.runs == 0 {
        return Err(Error::InvalidParams("sweep needs a grid value and a run".into()));
    }
    match cfg.kind {
        SweepKind::PoolTrace => {
            let mut rows = Vec::new();
            for &x in &cfg.grid {
                let per_run: Vec<Vec<TraceRow>> = (0..cfg.runs)
                    .into_par_iter()
                    .map(|run| trace_rows(cfg, run, x))
                    .collect::<Result<_>>()?;
                rows.extend(per_run.iter().flatten().cloned());
                rows.extend(trace_aggregate(&per_run, grid_usize(x)?));
            }
            Ok(SweepTable::Trace(rows))
        }
        _ => {
            let mut rows = Vec::new();
            for &x in &cfg.grid {
                let per_run: Vec<EnergyRow> = (0..cfg.runs)
                    .into_par_iter()
                    .map(|run| energy_row(cfg, run, x))
                    .collect::<Result<_>>()?;
                let agg = aggregate(&per_run);
                rows.extend(per_run);
                rows.push(agg);
            }
            Ok(SweepTable::Energy(rows))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let p = GenParams::default();
        assert_eq!((p.k, p.m, p.map_side, p.t), (50, 12, 20.0, 500.0));
        assert_eq!((p.eta, p.beta, p.n0_dbm, p.rho0), (0.78, 0.5, -95.0, 1e-3));
        assert_eq!((p.alpha1, p.alpha2, p.velocity, p.mu), (0.29, 7.4, 1.0, 1.0));
        assert_eq!((p.gamma_min, p.gamma_max, p.pathloss_exponent), (1.0, 2.0, 2.5));
    }

    #[test]
    fn generation_is_deterministic() {
        let p = GenParams {
            seed: 42,
            ..GenParams::desk()
        };
        let a = generate_scenario(&p).unwrap().to_json().unwrap();
        let b = generate_scenario(&p).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(&GenParams { seed: 43, ..p }).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = GenParams {
            map_side: 0.0,
            ..GenParams::default()
        };
        assert!(generate_scenario(&p).is_err());
        let p = GenParams {
            mu: 1.5,
            ..GenParams::default()
        };
        assert!(generate_scenario(&p).is_err());
    }

    #[test]
    fn noise_only_rescales_gains() {
        let cfg = SweepConfig::new(SweepKind::Noise, 1, 9);
        let a = instance(&cfg, 0, -90.0).unwrap();
        let b = instance(&cfg, 0, -100.0).unwrap();
        for k in 0..a.num_users() {
            for m in 0..a.num_vertices() {
                let r = b.gain(k, m) / a.gain(k, m);
                assert!((r - 10.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn vertex_sweep_nests_instances() {
        let mut cfg = SweepConfig::new(SweepKind::Vertices, 1, 3);
        cfg.grid = vec![3.0, 5.0];
        let small = instance(&cfg, 0, 3.0).unwrap();
        let big = instance(&cfg, 0, 5.0).unwrap();
        assert_eq!(big.restrict_vertices(3).unwrap(), small);
    }
}

//! Experiment execution and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{loss_parameters, resolve_p2, ExperimentConfig, Format, Mode, Params, ProtocolKind, SweepPoint};
use crate::error::{config, Error, Result};
use crate::protocol1::{self, BoundStatus, ProtocolOneConfig};
use crate::protocol2::{self, ProtocolTwoConfig};
use crate::qubitproto::{self, QubitChannelSpec};
use crate::rng::stream_rng;

/// Largest `k` simulated per trial.
pub const MAX_SIMULATED_K: u64 = 100_000;

/// Command-line overrides shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Files written and experiments with no non-trivial bound anywhere.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub infeasible: Vec<String>,
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }

    /// CSV rendering; floats keep 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Int(v) => (*v).into(),
            Cell::Bool(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

/// Rows under a fixed header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::render))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let records: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                fs::write(path, serde_json::to_string_pretty(&records)? + "\n")?;
            }
        }
        Ok(())
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn point_cells(cfg: &ExperimentConfig, p: &SweepPoint) -> Vec<Cell> {
    let cols = cfg.point_columns();
    cols.iter()
        .map(|c| {
            let v = p.values.iter().find(|(n, _)| n == c).map(|(_, v)| *v).unwrap_or(f64::NAN);
            match c.as_str() {
                "n" | "k" | "shots_per_setting" => Cell::Int(v as u64),
                _ => Cell::Float(v),
            }
        })
        .collect()
}

fn p1_params(p: &SweepPoint) -> ProtocolOneConfig {
    match p.params {
        Params::P1(c) => c,
        _ => unreachable!("protocol checked at parse time"),
    }
}

fn p2_params(p: &SweepPoint) -> Result<ProtocolTwoConfig> {
    match &p.params {
        Params::P2(c) => resolve_p2(&p.channel, c),
        _ => unreachable!("protocol checked at parse time"),
    }
}

fn verdict_columns(protocol: ProtocolKind, mode: Mode) -> &'static [&'static str] {
    match (protocol, mode) {
        (ProtocolKind::P1, Mode::Analytic) => {
            &["q_lower", "q_lower_per_n", "ent_lower", "eta_star", "lambda", "zeta", "mu", "delta", "status"]
        }
        (ProtocolKind::P1, Mode::Simulate) => {
            &["passed", "avg_distance", "retries", "q_lower", "ent_lower", "eta_star", "lambda", "zeta", "mu", "delta"]
        }
        (ProtocolKind::P2, Mode::Analytic) => {
            &["a", "c", "q_lower", "q_lower_per_n", "b_iid", "nu1", "nu2", "eta_star", "h_min"]
        }
        (ProtocolKind::P2, Mode::Simulate) => {
            &["a", "c", "sigma_max", "gamma_min", "passed", "q_lower", "b_iid", "nu1", "nu2"]
        }
        (ProtocolKind::Qubit, Mode::Analytic) => &["coherent_info", "q_lower_per_use"],
        (ProtocolKind::Qubit, Mode::Simulate) => &[
            "coherent_info",
            "estimate_coherent_info",
            "worst_conditional_entropy",
            "polytope_feasible",
            "truth_in_polytope",
            "q_lower_per_use",
            "heuristic",
        ],
        (ProtocolKind::Asymptotic, _) => &["t", "B", "B_iid", "capacity_pure_loss"],
    }
}

fn status_name(s: BoundStatus) -> &'static str {
    match s {
        BoundStatus::Positive => "positive",
        BoundStatus::NonPositive => "non_positive",
        BoundStatus::TriviallyZero => "trivially_zero",
        BoundStatus::CutoffDominated => "cutoff_dominated",
    }
}

struct Evaluated {
    cells: Vec<Cell>,
    feasible: bool,
}

fn check_simulated_k(k: u64) -> Result<()> {
    if k > MAX_SIMULATED_K {
        return Err(Error::Infeasible(format!(
            "simulation is capped at k <= {MAX_SIMULATED_K} per trial, got k = {k}"
        )));
    }
    Ok(())
}

fn qubit_shots(shots_per_setting: u64) -> u64 {
    shots_per_setting * qubitproto::SETTINGS as u64
}

fn evaluate_point(cfg: &ExperimentConfig, p: &SweepPoint, seed: u64) -> Result<Evaluated> {
    let feasible = |cells| Evaluated { cells, feasible: true };
    match (cfg.protocol, cfg.mode) {
        (ProtocolKind::P1, Mode::Analytic) => {
            let c = p1_params(p);
            let q = protocol1::theorem1_bound(&c)?;
            let e = protocol1::entanglement_bound(&c)?;
            let ok = !matches!(q.status, BoundStatus::TriviallyZero | BoundStatus::CutoffDominated);
            Ok(Evaluated {
                cells: vec![
                    Cell::Float(q.value),
                    Cell::Float(q.value / c.n as f64),
                    Cell::opt(e.map(|e| e.value)),
                    Cell::opt(q.eta_star),
                    Cell::Float(q.lambda),
                    Cell::opt(q.zeta),
                    Cell::opt(q.mu),
                    Cell::opt(q.delta),
                    Cell::Text(status_name(q.status).into()),
                ],
                feasible: ok,
            })
        }
        (ProtocolKind::P1, Mode::Simulate) => {
            let c = p1_params(p);
            check_simulated_k(c.k)?;
            let mut rng = stream_rng(seed, p.index as u64);
            let mut channel = p.channel;
            let record = protocol1::simulate_test(&c, &mut channel, &mut rng)?;
            let (passed, avg) = record.evaluate(c.t)?;
            let v = protocol1::ProtocolOneVerdict::from_test(&c, passed, avg)?;
            let retries: u64 = record.retries.iter().map(|&r| r as u64).sum();
            Ok(feasible(vec![
                Cell::Bool(v.passed),
                Cell::Float(v.avg_distance),
                Cell::Int(retries),
                Cell::opt(v.q_lower),
                Cell::opt(v.ent_lower),
                Cell::opt(v.eta_star),
                Cell::opt(v.lambda),
                Cell::opt(v.zeta),
                Cell::opt(v.mu),
                Cell::opt(v.delta),
            ]))
        }
        (ProtocolKind::P2, Mode::Analytic) => {
            let c = p2_params(p)?;
            let b = protocol2::theorem2_bound(&c)?;
            Ok(feasible(vec![
                Cell::Float(c.a),
                Cell::Float(c.c),
                Cell::Float(b.value),
                Cell::Float(b.value / c.n as f64),
                Cell::Float(b.b_iid),
                Cell::Float(b.nu1),
                Cell::Float(b.nu2),
                Cell::Float(b.eta_star),
                Cell::Float(b.h_min),
            ]))
        }
        (ProtocolKind::P2, Mode::Simulate) => {
            let c = p2_params(p)?;
            check_simulated_k(c.k)?;
            let mut rng = stream_rng(seed, p.index as u64);
            let v = protocol2::run_protocol_two(&c, &p.channel, &mut rng)?;
            Ok(feasible(vec![
                Cell::Float(c.a),
                Cell::Float(c.c),
                Cell::Float(v.sigma_max),
                Cell::Float(v.gamma_min),
                Cell::Bool(v.passed),
                Cell::Float(v.q_lower),
                Cell::Float(v.b_iid),
                Cell::Float(v.nu1),
                Cell::Float(v.nu2),
            ]))
        }
        (ProtocolKind::Qubit, mode) => {
            let Params::Qubit(q) = p.params else { unreachable!("protocol checked at parse time") };
            let choi = qubitproto::choi_state(&QubitChannelSpec::new(q.alpha, q.beta));
            let info = qubitproto::coherent_information(&choi)?;
            if mode == Mode::Analytic {
                let bound = qubitproto::qubit_iid_bound(-info, qubit_shots(q.shots_per_setting), q.epsilon, 2)?;
                return Ok(feasible(vec![Cell::Float(info), Cell::Float(bound.max(0.0))]));
            }
            let mut rng = stream_rng(seed, p.index as u64);
            let counts = qubitproto::simulate_tomography(&choi, q.shots_per_setting, q.delta, &mut rng)?;
            let inside = qubitproto::polytope_halfspace_check(&choi, &counts)?;
            let report = qubitproto::evaluate_counts(&counts, q.epsilon, q.search, &mut rng)?;
            Ok(feasible(vec![
                Cell::Float(info),
                Cell::Float(report.estimate_coherent_info),
                Cell::Float(report.worst_conditional_entropy),
                Cell::Bool(report.polytope_feasible),
                Cell::Bool(inside),
                Cell::Float(report.q_lower_per_use),
                Cell::Bool(report.heuristic),
            ]))
        }
        (ProtocolKind::Asymptotic, _) => {
            let Params::Asymptotic(a) = p.params else { unreachable!("protocol checked at parse time") };
            let (tau, n_th) = loss_parameters(&p.channel).expect("validated loss channel");
            let t = match a.t {
                Some(t) => t,
                None => protocol1::asymptotic_threshold_t(tau, a.n_bar, n_th, a.d)?,
            };
            let b = protocol1::asymptotic_b(a.d, t)?;
            let (ta, tc) = protocol2::optimal_thresholds_loss(tau, a.n_bar, n_th)?;
            let b_iid = protocol2::asymptotic_biid(ta, tc, a.n_bar)?;
            let cap = if n_th == 0.0 {
                Cell::Float(protocol2::energy_constrained_capacity_pure_loss(tau, a.n_bar)?)
            } else {
                Cell::Empty
            };
            Ok(feasible(vec![Cell::Float(t), Cell::Float(b), Cell::Float(b_iid), cap]))
        }
    }
}

fn resolve_seed(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<u64> {
    if let Some(s) = opts.seed {
        return Ok(s);
    }
    match (cfg.mode, cfg.monte_carlo) {
        (_, Some(mc)) => Ok(mc.seed),
        (Mode::Analytic, None) => Ok(0),
        (Mode::Simulate, None) => Err(config("stochastic runs need a seed")),
    }
}

fn output_path(opts: &RunOptions, file: &str) -> PathBuf {
    match &opts.out_dir {
        Some(dir) => dir.join(file),
        None => PathBuf::from(file),
    }
}

/// Evaluates every sweep point of one experiment.
pub fn evaluate_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(Table, bool)> {
    let seed = resolve_seed(cfg, opts)?;
    let points = cfg.points()?;
    let results: Vec<Result<Evaluated>> =
        with_pool(opts.threads, || points.par_iter().map(|p| evaluate_point(cfg, p, seed)).collect())?;
    let mut columns = cfg.point_columns();
    columns.extend(verdict_columns(cfg.protocol, cfg.mode).iter().map(|s| s.to_string()));
    let mut table = Table { columns, rows: Vec::with_capacity(points.len()) };
    let mut any_feasible = false;
    for (p, r) in points.iter().zip(results) {
        let ev = r?;
        any_feasible |= ev.feasible;
        let mut row = point_cells(cfg, p);
        row.extend(ev.cells);
        table.rows.push(row);
    }
    Ok((table, any_feasible))
}

/// `run`: evaluates each experiment and writes its table.
pub fn run_experiments(cfgs: &[ExperimentConfig], opts: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::default();
    for cfg in cfgs {
        let (table, feasible) = evaluate_experiment(cfg, opts)?;
        let path = output_path(opts, &cfg.output.path);
        table.write(&path, cfg.output.format)?;
        report.files.push(path);
        if !feasible {
            report.infeasible.push(format!(
                "{}: the bound is trivially zero (lambda >= sqrt(epsilon/2)) at every sweep point",
                cfg.name
            ));
        }
    }
    Ok(report)
}

/// Aggregate of one sweep point of a Monte Carlo campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: serde_json::Map<String, serde_json::Value>,
    pub trials: u64,
    pub first_stream: u64,
    pub last_stream: u64,
    pub pass_rate: Option<f64>,
    pub pass_rate_se: Option<f64>,
    /// Closed-form pass probability for loss channels (correlated-noise
    /// protocol only).
    pub predicted_pass_probability: Option<f64>,
    /// Fraction of trials with the true variance at most `σ_max`.
    pub sigma_coverage: Option<f64>,
    /// Fraction of trials with the true cross-correlation at least `γ_min`.
    pub gamma_coverage: Option<f64>,
    /// Fraction of trials whose confidence polytope contains the true state.
    pub polytope_coverage: Option<f64>,
    pub coverage_se: Option<f64>,
}

/// Summary file of a Monte Carlo campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub name: String,
    pub protocol: ProtocolKind,
    pub seed: u64,
    pub trials_per_point: u64,
    /// Trial `j` of point `i` uses stream `i · trials_per_point + j`.
    pub stream_layout: String,
    pub points: Vec<PointSummary>,
}

fn rate_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

struct TrialOutcome {
    cells: Vec<Cell>,
    passed: Option<bool>,
    covered: [Option<bool>; 3],
}

fn run_trial(cfg: &ExperimentConfig, p: &SweepPoint, seed: u64, stream: u64) -> Result<TrialOutcome> {
    let mut rng = stream_rng(seed, stream);
    match cfg.protocol {
        ProtocolKind::P1 => {
            let c = p1_params(p);
            let mut channel = p.channel;
            let record = protocol1::simulate_test(&c, &mut channel, &mut rng)?;
            let (passed, avg) = record.evaluate(c.t)?;
            let retries: u64 = record.retries.iter().map(|&r| r as u64).sum();
            Ok(TrialOutcome {
                cells: vec![Cell::Bool(passed), Cell::Float(avg), Cell::Int(retries)],
                passed: Some(passed),
                covered: [None; 3],
            })
        }
        ProtocolKind::P2 => {
            let c = p2_params(p)?;
            let (_, var_y, cov) = protocol2::heterodyne_moments(&p.channel, c.n_bar)?;
            let sigma_b = var_y - 0.5;
            let v = protocol2::run_protocol_two(&c, &p.channel, &mut rng)?;
            let (sc, gc) = (sigma_b <= v.sigma_max, cov >= v.gamma_min);
            Ok(TrialOutcome {
                cells: vec![
                    Cell::Float(v.sigma_max),
                    Cell::Float(v.gamma_min),
                    Cell::Bool(v.passed),
                    Cell::Bool(sc),
                    Cell::Bool(gc),
                ],
                passed: Some(v.passed),
                covered: [Some(sc), Some(gc), None],
            })
        }
        ProtocolKind::Qubit => {
            let Params::Qubit(q) = p.params else { unreachable!("protocol checked at parse time") };
            let choi = qubitproto::choi_state(&QubitChannelSpec::new(q.alpha, q.beta));
            let counts = qubitproto::simulate_tomography(&choi, q.shots_per_setting, q.delta, &mut rng)?;
            let inside = qubitproto::polytope_halfspace_check(&choi, &counts)?;
            Ok(TrialOutcome { cells: vec![Cell::Bool(inside)], passed: None, covered: [None, None, Some(inside)] })
        }
        ProtocolKind::Asymptotic => Err(config("the asymptotic protocol has no Monte Carlo mode")),
    }
}

fn trial_columns(protocol: ProtocolKind) -> &'static [&'static str] {
    match protocol {
        ProtocolKind::P1 => &["passed", "avg_distance", "retries"],
        ProtocolKind::P2 => &["sigma_max", "gamma_min", "passed", "sigma_covered", "gamma_covered"],
        ProtocolKind::Qubit => &["truth_in_polytope"],
        ProtocolKind::Asymptotic => &[],
    }
}

fn predicted_pass(cfg: &ExperimentConfig, p: &SweepPoint) -> Option<f64> {
    if cfg.protocol != ProtocolKind::P1 {
        return None;
    }
    let c = p1_params(p);
    match loss_parameters(&p.channel) {
        Some((tau, n_th)) if n_th == 0.0 && tau > 0.0 => {
            protocol1::pass_probability_pure_loss(c.k, c.t, c.d, tau, c.n_bar).ok()
        }
        _ => None,
    }
}

/// `montecarlo`: repeated independent trials per sweep point. Writes the
/// per-trial table to the configured output and a summary next to it with
/// extension `.summary.json`.
pub fn run_montecarlo(cfgs: &[ExperimentConfig], opts: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::default();
    for cfg in cfgs {
        let mc =
            cfg.monte_carlo.ok_or_else(|| config(format!("{}: montecarlo needs a monte_carlo block", cfg.name)))?;
        if cfg.protocol == ProtocolKind::Asymptotic {
            return Err(config("the asymptotic protocol has no Monte Carlo mode"));
        }
        let seed = opts.seed.unwrap_or(mc.seed);
        let points = cfg.points()?;
        for p in &points {
            match p.params {
                Params::P1(c) => check_simulated_k(c.k)?,
                Params::P2(c) => check_simulated_k(c.k)?,
                _ => {}
            }
        }
        let jobs: Vec<(usize, u64)> = (0..points.len()).flat_map(|i| (0..mc.trials).map(move |j| (i, j))).collect();
        let outcomes: Vec<Result<TrialOutcome>> = with_pool(opts.threads, || {
            jobs.par_iter().map(|&(i, j)| run_trial(cfg, &points[i], seed, i as u64 * mc.trials + j)).collect()
        })?;
        let mut columns = cfg.point_columns();
        columns.extend(["trial".to_string(), "stream".to_string()]);
        columns.extend(trial_columns(cfg.protocol).iter().map(|s| s.to_string()));
        let mut table = Table { columns, rows: Vec::with_capacity(jobs.len()) };
        let mut summaries = Vec::with_capacity(points.len());
        let mut outcomes = outcomes.into_iter();
        for (i, p) in points.iter().enumerate() {
            let mut passes = 0u64;
            let mut has_pass = false;
            let mut covered = [0u64; 3];
            let mut has_cov = [false; 3];
            for j in 0..mc.trials {
                let o = outcomes.next().expect("one outcome per job")?;
                if let Some(pass) = o.passed {
                    has_pass = true;
                    passes += pass as u64;
                }
                for (slot, c) in o.covered.iter().enumerate() {
                    if let Some(c) = c {
                        has_cov[slot] = true;
                        covered[slot] += *c as u64;
                    }
                }
                let stream = i as u64 * mc.trials + j;
                let mut row = point_cells(cfg, p);
                row.extend([Cell::Int(j), Cell::Int(stream)]);
                row.extend(o.cells);
                table.rows.push(row);
            }
            let n = mc.trials;
            let rate = |count: u64, present: bool| present.then(|| count as f64 / n as f64);
            let pass_rate = rate(passes, has_pass);
            let coverage = [rate(covered[0], has_cov[0]), rate(covered[1], has_cov[1]), rate(covered[2], has_cov[2])];
            let coverage_se = coverage.iter().flatten().next().map(|_| {
                // standard error at the worst observed coverage
                let worst = coverage.iter().flatten().fold(1.0f64, |a, &b| a.min(b));
                rate_se(worst, n)
            });
            let point = cfg.point_columns().into_iter().zip(point_cells(cfg, p).iter().map(Cell::json)).collect();
            summaries.push(PointSummary {
                point,
                trials: n,
                first_stream: i as u64 * n,
                last_stream: i as u64 * n + n - 1,
                pass_rate,
                pass_rate_se: pass_rate.map(|r| rate_se(r, n)),
                predicted_pass_probability: predicted_pass(cfg, p),
                sigma_coverage: coverage[0],
                gamma_coverage: coverage[1],
                polytope_coverage: coverage[2],
                coverage_se,
            });
        }
        let path = output_path(opts, &cfg.output.path);
        table.write(&path, cfg.output.format)?;
        let summary = CampaignSummary {
            name: cfg.name.clone(),
            protocol: cfg.protocol,
            seed,
            trials_per_point: mc.trials,
            stream_layout: "point_index * trials_per_point + trial".into(),
            points: summaries,
        };
        let summary_path = path.with_extension("summary.json");
        fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")?;
        report.files.push(path);
        report.files.push(summary_path);
    }
    Ok(report)
}

//! Reproducible experiments: distance-versus-iteration traces and dimension
//! sweeps, configured by a flat key-value file.
//!
//! # Config format
//!
//! One `key = value` per line. Lines starting with `#` and `[section]`
//! headers are ignored. Keys:
//!
//! | key               | meaning                                                    | default |
//! |-------------------|------------------------------------------------------------|---------|
//! | `entropy`         | entropy name, e.g. `burg`                                  | required |
//! | `target`          | target spec, e.g. `gamma:a=5;b=1`                          | required |
//! | `schedule`        | `0.05`, `constant:h=0.05` or `harmonic:a=0.3`              | required |
//! | `steps`           | number of steps                                            | required |
//! | `chains`          | number of parallel chains (= size of each cloud)           | required |
//! | `seed`            | base seed of the chains                                    | `0` |
//! | `init`            | `exact` or a comma list of starting coordinates            | `exact` |
//! | `checkpoint_every`| distance checkpoints every this many steps                 | `10` |
//! | `repetitions`     | reference clouds per checkpoint                            | `20` |
//! | `reference_size`  | points per reference cloud; must equal `chains`            | `chains` |
//! | `reference_seeds` | comma list of reference seeds (overrides `repetitions`)    | derived from `seed` |
//! | `method`          | `auto`, `exact-1d`, `assignment`, `product-marginal`       | `auto` |
//! | `pairs`           | pairs for the assumption certificates                      | `10000` |
//! | `override_gate`   | run even if the step size fails the gate                   | `false` |
//! | `dims`            | dimensions for `sweep`, comma list                         | `1,2,4,8` |
//! | `trace_out`       | CSV output path                                            | none |
//! | `report_out`      | JSON output path                                           | none |

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, AssumptionReport, BoundReport, EstimateOptions};
use crate::entropy::parse_entropy;
use crate::error::{Error, Result};
use crate::metrics::{distance_to_target, DistanceSummary, EmpiricalMeasure, W2Method};
use crate::rng::derive_seed;
use crate::sampler::{run_parallel_chains, ChainConfig, Init, Recording, StepSchedule};
use crate::target::{parse_target, Family, TargetSpec};

/// Fraction of the run, counted from the end, averaged for the plateau.
pub const PLATEAU_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Exact,
    Point(Vec<f64>),
}

impl std::fmt::Display for InitSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitSpec::Exact => write!(f, "exact"),
            InitSpec::Point(v) => {
                let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", s.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub entropy: String,
    pub target: String,
    pub schedule: StepSchedule,
    pub steps: u64,
    pub chains: usize,
    pub seed: u64,
    pub init: InitSpec,
    pub checkpoint_every: u64,
    pub repetitions: usize,
    pub reference_size: usize,
    pub reference_seeds: Option<Vec<u64>>,
    pub method: W2Method,
    pub pairs: usize,
    pub override_gate: bool,
    pub dims: Vec<usize>,
    pub trace_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
}

fn list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| Error::Parse(format!("bad entry `{t}` for `{key}`"))))
        .collect()
}

fn one<T: FromStr>(s: &str, key: &str) -> Result<T> {
    s.trim().parse::<T>().map_err(|_| Error::Parse(format!("bad value `{s}` for `{key}`")))
}

impl ExperimentConfig {
    pub fn new(entropy: &str, target: &str, schedule: StepSchedule, steps: u64, chains: usize) -> Self {
        Self {
            entropy: entropy.into(),
            target: target.into(),
            schedule,
            steps,
            chains,
            seed: 0,
            init: InitSpec::Exact,
            checkpoint_every: 10,
            repetitions: 20,
            reference_size: chains,
            reference_seeds: None,
            method: W2Method::Auto,
            pairs: 10_000,
            override_gate: false,
            dims: vec![1, 2, 4, 8],
            trace_out: None,
            report_out: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: Vec<(String, String)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            let k = k.trim().to_string();
            if kv.iter().any(|(e, _)| *e == k) {
                return Err(Error::Parse(format!("duplicate key `{k}`")));
            }
            kv.push((k, v.trim().to_string()));
        }
        let get = |k: &str| kv.iter().find(|(e, _)| e == k).map(|(_, v)| v.as_str());
        let req = |k: &str| get(k).ok_or_else(|| Error::Parse(format!("missing key `{k}`")));
        const KNOWN: [&str; 17] = [
            "entropy", "target", "schedule", "steps", "chains", "seed", "init", "checkpoint_every",
            "repetitions", "reference_size", "reference_seeds", "method", "pairs", "override_gate",
            "dims", "trace_out", "report_out",
        ];
        if let Some((k, _)) = kv.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown key `{k}`")));
        }

        let chains: usize = one(req("chains")?, "chains")?;
        let mut c = Self::new(
            req("entropy")?,
            req("target")?,
            req("schedule")?.parse()?,
            one(req("steps")?, "steps")?,
            chains,
        );
        if let Some(v) = get("seed") {
            c.seed = one(v, "seed")?;
        }
        if let Some(v) = get("init") {
            c.init = if v == "exact" { InitSpec::Exact } else { InitSpec::Point(list(v, "init")?) };
        }
        if let Some(v) = get("checkpoint_every") {
            c.checkpoint_every = one(v, "checkpoint_every")?;
        }
        if let Some(v) = get("repetitions") {
            c.repetitions = one(v, "repetitions")?;
        }
        if let Some(v) = get("reference_size") {
            c.reference_size = one(v, "reference_size")?;
        }
        if let Some(v) = get("reference_seeds") {
            c.reference_seeds = Some(list(v, "reference_seeds")?);
        }
        if let Some(v) = get("method") {
            c.method = v.parse()?;
        }
        if let Some(v) = get("pairs") {
            c.pairs = one(v, "pairs")?;
        }
        if let Some(v) = get("override_gate") {
            c.override_gate = one(v, "override_gate")?;
        }
        if let Some(v) = get("dims") {
            c.dims = list(v, "dims")?;
        }
        c.trace_out = get("trace_out").map(PathBuf::from);
        c.report_out = get("report_out").map(PathBuf::from);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.checkpoint_every == 0 {
            return Err(Error::InvalidParameters("chains and checkpoint_every must be positive".into()));
        }
        if self.reference_size != self.chains {
            return Err(Error::InvalidParameters(format!(
                "reference_size {} must equal chains {}",
                self.reference_size, self.chains
            )));
        }
        if self.reference_seeds.as_ref().map_or(self.repetitions == 0, |s| s.is_empty()) {
            return Err(Error::InvalidParameters("need at least one reference cloud".into()));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::InvalidParameters("dims must be positive".into()));
        }
        Ok(())
    }

    /// Serializes to the key-value format; `parse` inverts it exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::from("[experiment]\n");
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("entropy", self.entropy.clone());
        put("target", self.target.clone());
        put("schedule", self.schedule.to_string());
        put("steps", self.steps.to_string());
        put("chains", self.chains.to_string());
        put("seed", self.seed.to_string());
        put("init", self.init.to_string());
        put("checkpoint_every", self.checkpoint_every.to_string());
        put("repetitions", self.repetitions.to_string());
        put("reference_size", self.reference_size.to_string());
        if let Some(seeds) = &self.reference_seeds {
            put("reference_seeds", seeds.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        }
        let method = match self.method {
            W2Method::Sliced { .. } => "sliced",
            m => m.label(),
        };
        put("method", method.into());
        put("pairs", self.pairs.to_string());
        put("override_gate", self.override_gate.to_string());
        put("dims", self.dims.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        if let Some(p) = &self.trace_out {
            put("trace_out", p.display().to_string());
        }
        if let Some(p) = &self.report_out {
            put("report_out", p.display().to_string());
        }
        s
    }

    fn reference_seeds(&self) -> Vec<u64> {
        self.reference_seeds.clone().unwrap_or_else(|| {
            let base = derive_seed(self.seed, u64::MAX);
            (0..self.repetitions as u64).map(|r| derive_seed(base, r)).collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: u64,
    pub w2phi_median: f64,
    pub w2phi_iqr: f64,
    /// `NaN` when no bound applies (constants not declared for this pair).
    pub bound_value: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceResult {
    pub config: String,
    pub rows: Vec<TraceRow>,
    pub report: AssumptionReport,
    pub bound: Option<BoundReport>,
    pub rejections: u64,
    pub halvings: u64,
}

impl ConvergenceResult {
    /// Mean of the checkpoint medians over the final quarter of the run.
    pub fn plateau(&self) -> f64 {
        plateau(&self.rows)
    }
}

pub fn plateau(rows: &[TraceRow]) -> f64 {
    let last = rows.last().map_or(0, |r| r.k);
    let start = (last as f64 * (1.0 - PLATEAU_FRACTION)).ceil() as u64;
    let tail: Vec<f64> = rows.iter().filter(|r| r.k >= start).map(|r| r.w2phi_median).collect();
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Least-squares slope of `ln(median − plateau)` against `k` over
/// checkpoints with `k ≤ k_max` whose excess over the plateau exceeds
/// `threshold`. `None` when fewer than two checkpoints qualify.
pub fn decay_slope(rows: &[TraceRow], plateau: f64, k_max: u64, threshold: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.k <= k_max && r.w2phi_median - plateau > threshold)
        .map(|r| (r.k as f64, (r.w2phi_median - plateau).ln()))
        .collect();
    fit_slope(&pts)
}

/// Ordinary least-squares slope.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn run_with_target(cfg: &ExperimentConfig, target: &TargetSpec) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let p = target.dim();
    let entropy = parse_entropy(&cfg.entropy, p)?;
    let init = match &cfg.init {
        InitSpec::Exact => Init::Exact,
        InitSpec::Point(v) => {
            let x = match v.len() {
                1 => vec![v[0]; p],
                n if n == p => v.clone(),
                n => return Err(Error::SizeMismatch(format!("init has {n} coordinates, expected {p}"))),
            };
            Init::Fixed(DVector::from_vec(x))
        }
    };
    let chain_cfg = ChainConfig {
        schedule: cfg.schedule,
        n_steps: cfg.steps,
        recording: Recording { burn_in: 0, every: cfg.checkpoint_every },
        override_gate: cfg.override_gate,
    };
    let chains = run_parallel_chains(entropy.as_ref(), target, &chain_cfg, &init, cfg.chains, cfg.seed)?;
    let rejections = chains.iter().map(|t| t.rejections).sum();
    let halvings = chains.iter().map(|t| t.halvings).sum();

    let seeds = cfg.reference_seeds();
    let steps = &chains[0].steps;
    let mut summaries: Vec<(u64, DistanceSummary)> = Vec::with_capacity(steps.len());
    for (idx, &k) in steps.iter().enumerate() {
        let cloud = EmpiricalMeasure::new(chains.iter().map(|t| t.points[idx].clone()).collect())?;
        let values = seeds
            .iter()
            .map(|&s| {
                distance_to_target(entropy.as_ref(), target, &cloud, cfg.method, 1, s).map(|d| d.values[0])
            })
            .collect::<Result<Vec<_>>>()?;
        summaries.push((k, DistanceSummary::from_values(values)));
    }

    let report = analysis::estimate_constants(entropy.as_ref(), target, &EstimateOptions::new(cfg.pairs, cfg.seed))?;
    let w0 = summaries.first().map(|s| s.1.median);
    let c = report.constants();
    let applies = entropy.name() == target.paired_entropy() && target.constants_declared().is_some();
    let (bound, curve): (Option<BoundReport>, Option<Vec<f64>>) = if !applies {
        (None, None)
    } else {
        match cfg.schedule {
            StepSchedule::Constant { h } => {
                let b = analysis::bound_report(&c, h, p, w0)?;
                let curve = summaries.iter().map(|(k, _)| b.bound_at(*k).unwrap_or(f64::NAN)).collect();
                (Some(b), Some(curve))
            }
            StepSchedule::Harmonic { .. } => {
                let rec = analysis::bound_recursion(&c, &cfg.schedule, p, w0.unwrap_or(0.0), cfg.steps)?;
                let curve = summaries.iter().map(|(k, _)| rec[*k as usize]).collect();
                (None, Some(curve))
            }
        }
    };
    let floor = bound.as_ref().map_or(f64::NAN, |b| b.floor);
    let rows = summaries
        .into_iter()
        .enumerate()
        .map(|(i, (k, s))| TraceRow {
            k,
            w2phi_median: s.median,
            w2phi_iqr: s.iqr,
            bound_value: curve.as_ref().map_or(f64::NAN, |c| c[i]),
            floor,
        })
        .collect();
    Ok(ConvergenceResult { config: cfg.to_text(), rows, report, bound, rejections, halvings })
}

/// Runs the chains, measures the distance to π at every checkpoint and
/// evaluates the bound with `W₀` taken as the median distance at `k = 0`.
pub fn run_convergence_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceResult> {
    let target = parse_target(&cfg.target)?;
    run_with_target(cfg, &target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub plateau: f64,
    pub final_iqr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: String,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln plateau` against `ln p`.
    pub slope: Option<f64>,
}

/// Repeats the convergence experiment for product targets of each
/// dimension in `dims`, built from the one-dimensional Gamma in `cfg`.
pub fn run_dimension_sweep(cfg: &ExperimentConfig, dims: &[usize]) -> Result<SweepResult> {
    let base = parse_target(&cfg.target)?;
    let Family::Gamma { shape, rate, .. } = base.family() else {
        return Err(Error::InvalidParameters("the dimension sweep needs a Gamma target".into()));
    };
    if shape.len() != 1 {
        return Err(Error::InvalidParameters("the dimension sweep needs a one-dimensional Gamma target".into()));
    }
    let mut rows = Vec::with_capacity(dims.len());
    for &p in dims {
        let target = TargetSpec::gamma(vec![shape[0]; p], vec![rate[0]; p])?;
        let res = run_with_target(cfg, &target)?;
        rows.push(SweepRow {
            p,
            plateau: res.plateau(),
            final_iqr: res.rows.last().map_or(f64::NAN, |r| r.w2phi_iqr),
        });
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.p as f64).ln(), r.plateau.ln())).collect();
    Ok(SweepResult { config: cfg.to_text(), slope: fit_slope(&pts), rows })
}

pub fn write_trace_table<W: Write>(mut out: W, rows: &[TraceRow]) -> Result<()> {
    writeln!(out, "k,w2phi_median,w2phi_iqr,bound_value,floor")?;
    for r in rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.k, r.w2phi_median, r.w2phi_iqr, r.bound_value, r.floor
        )?;
    }
    Ok(())
}

pub fn write_sweep_table<W: Write>(mut out: W, res: &SweepResult) -> Result<()> {
    writeln!(out, "p,plateau,final_iqr")?;
    for r in &res.rows {
        writeln!(out, "{},{:.16e},{:.16e}", r.p, r.plateau, r.final_iqr)?;
    }
    Ok(())
}

//! The HRLMC Markov chain.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::entropy::Entropy;
use crate::error::{Error, Result};
use crate::rng::{standard_normal_vector, stream_rng, ChainRng};
use crate::target::TargetSpec;

/// Fresh-noise retries for a step whose dual point leaves 𝒴 before the
/// step size is halved.
pub const MAX_RETRIES: usize = 50;
/// Halvings allowed for a single step before giving up.
pub const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepSchedule {
    Constant { h: f64 },
    /// `h_k = a / k` for `k ≥ 1`.
    Harmonic { a: f64 },
}

impl StepSchedule {
    /// Step size of the `k`-th step (`k ≥ 1`).
    pub fn step(&self, k: u64) -> f64 {
        match *self {
            StepSchedule::Constant { h } => h,
            StepSchedule::Harmonic { a } => a / k.max(1) as f64,
        }
    }

    /// The largest step the schedule ever emits.
    pub fn first(&self) -> f64 {
        self.step(1)
    }

    fn validate(&self) -> Result<()> {
        let v = self.first();
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameters(format!("step size must be positive, got {v}")))
        }
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::Constant { h } => write!(f, "constant:h={h}"),
            StepSchedule::Harmonic { a } => write!(f, "harmonic:a={a}"),
        }
    }
}

impl FromStr for StepSchedule {
    type Err = Error;

    /// `0.05`, `constant:h=0.05` or `harmonic:a=0.3`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |v: &str| {
            v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad step `{v}`: {e}")))
        };
        let sched = if let Some(v) = s.strip_prefix("constant:h=") {
            StepSchedule::Constant { h: num(v)? }
        } else if let Some(v) = s.strip_prefix("harmonic:a=") {
            StepSchedule::Harmonic { a: num(v)? }
        } else {
            StepSchedule::Constant { h: num(s)? }
        };
        sched.validate()?;
        Ok(sched)
    }
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub x: DVector<f64>,
    /// Cached `∇φ(x)`.
    pub y: DVector<f64>,
    pub k: u64,
    pub rng: ChainRng,
    /// Proposals rejected because the dual point left 𝒴.
    pub rejections: u64,
    /// Steps that needed a reduced step size.
    pub halvings: u64,
}

impl ChainState {
    pub fn new(entropy: &dyn Entropy, x0: DVector<f64>, rng: ChainRng) -> Result<Self> {
        let y = entropy.grad(&x0)?;
        Ok(Self { x: x0, y, k: 0, rng, rejections: 0, halvings: 0 })
    }
}

/// `y' = y − h∇f(x) + √(2h)[D²φ(x)]^{1/2}ξ`.
fn dual_proposal(
    entropy: &dyn Entropy,
    grad_f: &DVector<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    h: f64,
    xi: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(y.len());
    match entropy.hessian_diagonal(x)? {
        Some(d) => {
            for i in 0..y.len() {
                out[i] = y[i] - h * grad_f[i] + (2.0 * h * d[i]).sqrt() * xi[i];
            }
        }
        None => {
            let noise = entropy.hessian_sqrt_mul(x, xi)?;
            let s = (2.0 * h).sqrt();
            for i in 0..y.len() {
                out[i] = y[i] - h * grad_f[i] + s * noise[i];
            }
        }
    }
    Ok(out)
}

/// One HRLMC step of size `h`.
///
/// With `noise = Some(ξ)` the step is deterministic and a dual-domain exit
/// is returned as an error. Without it the step draws exactly `p` normals
/// unless the proposal is rejected; rejected proposals are redrawn up to
/// [`MAX_RETRIES`] times, after which the step size is halved for this
/// step only.
pub fn hrlmc_step(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    state: &mut ChainState,
    h: f64,
    noise: Option<&DVector<f64>>,
) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameters(format!("step size must be positive, got {h}")));
    }
    let p = state.x.len();
    let grad_f = target.grad(&state.x)?;
    if let Some(xi) = noise {
        if xi.len() != p {
            return Err(Error::SizeMismatch(format!("noise has length {}, expected {p}", xi.len())));
        }
        let y_new = dual_proposal(entropy, &grad_f, &state.x, &state.y, h, xi)?;
        let x_new = entropy.grad_conjugate(&y_new)?;
        state.x = x_new;
        state.y = y_new;
        state.k += 1;
        return Ok(());
    }

    let mut h_try = h;
    for halving in 0..=MAX_HALVINGS {
        for _ in 0..MAX_RETRIES {
            let xi = standard_normal_vector(&mut state.rng, p);
            let y_new = dual_proposal(entropy, &grad_f, &state.x, &state.y, h_try, &xi)?;
            match entropy.grad_conjugate(&y_new) {
                Ok(x_new) => {
                    state.x = x_new;
                    state.y = y_new;
                    state.k += 1;
                    if halving > 0 {
                        state.halvings += 1;
                    }
                    return Ok(());
                }
                Err(Error::DualDomainViolation { .. }) => state.rejections += 1,
                Err(e) => return Err(e),
            }
        }
        h_try *= 0.5;
    }
    Err(Error::NumericalBreakdown(format!(
        "step {} from x = {:?} left the dual domain after {MAX_HALVINGS} halvings",
        state.k + 1,
        state.x.as_slice()
    )))
}

/// Which steps are stored. Step `k` is recorded when `k ≥ burn_in` and
/// `(k − burn_in)` is a multiple of `every`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recording {
    pub burn_in: u64,
    pub every: u64,
}

impl Default for Recording {
    fn default() -> Self {
        Self { burn_in: 0, every: 1 }
    }
}

impl Recording {
    pub fn records(&self, k: u64) -> bool {
        k >= self.burn_in && (k - self.burn_in) % self.every.max(1) == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub schedule: StepSchedule,
    pub n_steps: u64,
    pub recording: Recording,
    /// Skip the admissibility gate on the step size.
    pub override_gate: bool,
}

impl ChainConfig {
    pub fn new(schedule: StepSchedule, n_steps: u64) -> Self {
        Self { schedule, n_steps, recording: Recording::default(), override_gate: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<u64>,
    /// Step size that produced each recorded point (0 for the start).
    pub h: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub rejections: u64,
    pub halvings: u64,
}

/// Upper end of the step-size window when `entropy` is the entropy the
/// target's constants were declared for; `None` otherwise.
pub fn admissible_window(entropy: &dyn Entropy, target: &TargetSpec) -> Result<Option<f64>> {
    let (Some(c), Some(kappa)) = (target.constants_declared(), entropy.kappa_declared()) else {
        return Ok(None);
    };
    if entropy.name() != target.paired_entropy() {
        return Ok(None);
    }
    let kt = analysis::kappa_tilde(kappa, c.delta, c.m, c.big_m);
    if !(kt * kt < 2.0 * c.m) {
        return Err(Error::InadmissibleRegime { kappa_tilde: kt, limit: (2.0 * c.m).sqrt() });
    }
    Ok(Some(analysis::step_window(c.m, c.big_m, kt)))
}

/// Largest harmonic coefficient `a` (equivalently the largest constant
/// step) whose first step passes the admissibility gate.
pub fn max_admissible_step(entropy: &dyn Entropy, target: &TargetSpec) -> Result<f64> {
    admissible_window(entropy, target)?
        .map(|w| w * (1.0 - 1e-9))
        .ok_or_else(|| Error::Unavailable(format!(
            "no declared constants for {} with entropy {}",
            target.name(),
            entropy.name()
        )))
}

fn check_setup(entropy: &dyn Entropy, target: &TargetSpec, config: &ChainConfig) -> Result<()> {
    if !entropy.sampler_admissible() {
        return Err(Error::InadmissibleEntropy(entropy.name()));
    }
    if entropy.dim() != target.dim() {
        return Err(Error::SizeMismatch(format!(
            "entropy dimension {} vs target dimension {}",
            entropy.dim(),
            target.dim()
        )));
    }
    config.schedule.validate()?;
    if !config.override_gate {
        if let Some(upper) = admissible_window(entropy, target)? {
            let h = config.schedule.first();
            if !(h < upper) {
                return Err(Error::InadmissibleStepSize { h, upper });
            }
        }
    }
    Ok(())
}

fn advance(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    config: &ChainConfig,
    mut state: ChainState,
) -> Result<Trajectory> {
    let mut traj = Trajectory { steps: vec![], h: vec![], points: vec![], rejections: 0, halvings: 0 };
    if config.recording.records(0) {
        traj.steps.push(0);
        traj.h.push(0.0);
        traj.points.push(state.x.clone());
    }
    for k in 1..=config.n_steps {
        let h = config.schedule.step(k);
        hrlmc_step(entropy, target, &mut state, h, None)?;
        if config.recording.records(k) {
            traj.steps.push(k);
            traj.h.push(h);
            traj.points.push(state.x.clone());
        }
    }
    traj.rejections = state.rejections;
    traj.halvings = state.halvings;
    Ok(traj)
}

/// A single chain on stream 0 of `seed`.
pub fn run_chain(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    config: &ChainConfig,
    x0: &DVector<f64>,
    seed: u64,
) -> Result<Trajectory> {
    check_setup(entropy, target, config)?;
    let state = ChainState::new(entropy, x0.clone(), stream_rng(seed, 0))?;
    advance(entropy, target, config, state)
}

/// Starting points for parallel chains.
#[derive(Debug, Clone)]
pub enum Init {
    Fixed(DVector<f64>),
    PerChain(Vec<DVector<f64>>),
    /// Each chain starts from an exact draw taken from its own stream.
    Exact,
}

/// `n_chains` independent chains; chain `i` uses stream `i` of `base_seed`,
/// so the output does not depend on the thread count.
pub fn run_parallel_chains(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    config: &ChainConfig,
    init: &Init,
    n_chains: usize,
    base_seed: u64,
) -> Result<Vec<Trajectory>> {
    if n_chains == 0 {
        return Err(Error::InvalidParameters("need at least one chain".into()));
    }
    if let Init::PerChain(v) = init {
        if v.len() != n_chains {
            return Err(Error::SizeMismatch(format!(
                "{} starting points for {n_chains} chains",
                v.len()
            )));
        }
    }
    check_setup(entropy, target, config)?;
    (0..n_chains)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(base_seed, i as u64);
            let x0 = match init {
                Init::Fixed(x) => x.clone(),
                Init::PerChain(v) => v[i].clone(),
                Init::Exact => target.draw(&mut rng),
            };
            let state = ChainState::new(entropy, x0, rng)?;
            advance(entropy, target, config, state)
        })
        .collect()
}

/// Writes `chain,step,h,x_1..x_p` rows with 17 significant digits.
pub fn write_trace_csv<W: Write>(mut out: W, chains: &[Trajectory]) -> Result<()> {
    let p = chains
        .iter()
        .find_map(|t| t.points.first().map(|x| x.len()))
        .unwrap_or(0);
    let mut header = String::from("chain,step,h");
    for j in 1..=p {
        header.push_str(&format!(",x_{j}"));
    }
    writeln!(out, "{header}")?;
    for (c, t) in chains.iter().enumerate() {
        for ((k, h), x) in t.steps.iter().zip(&t.h).zip(&t.points) {
            write!(out, "{c},{k},{h:.16e}")?;
            for v in x.iter() {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Start and end of a fine-step surrogate for the continuous dynamics
/// started at stationarity, both mapped to the dual space: returns
/// `(∇φ(L₀), ∇φ(L_s))` with `L₀ ∼ π`.
pub fn reference_chain(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    s: f64,
    substeps: u64,
    seed: u64,
    replica: u64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if substeps < 100 {
        return Err(Error::InvalidParameters(format!("need at least 100 substeps, got {substeps}")));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameters(format!("horizon must be non-negative, got {s}")));
    }
    let mut rng = stream_rng(seed, replica);
    let x0 = target.draw(&mut rng);
    let mut state = ChainState::new(entropy, x0, rng)?;
    let start = state.y.clone();
    if s > 0.0 {
        let h = s / substeps as f64;
        for _ in 0..substeps {
            hrlmc_step(entropy, target, &mut state, h, None)?;
        }
    }
    Ok((start, state.y))
}

/// Monte-Carlo mean of `‖∇φ(L₀) − ∇φ(L_s)‖²` and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementStats {
    pub s: f64,
    pub replicas: usize,
    pub mean_sq: f64,
    pub std_error: f64,
}

pub fn increment_statistics(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    s: f64,
    substeps: u64,
    replicas: usize,
    seed: u64,
) -> Result<IncrementStats> {
    if replicas < 2 {
        return Err(Error::InvalidParameters("need at least 2 replicas".into()));
    }
    let sq: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            reference_chain(entropy, target, s, substeps, seed, r as u64)
                .map(|(a, b)| (a - b).norm_squared())
        })
        .collect::<Result<_>>()?;
    let n = replicas as f64;
    let mean = sq.iter().sum::<f64>() / n;
    let var = sq.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(IncrementStats { s, replicas, mean_sq: mean, std_error: (var / n).sqrt() })
}

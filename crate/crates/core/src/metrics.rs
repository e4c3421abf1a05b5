//! Mirror Wasserstein distances between point clouds and moment
//! diagnostics.

use std::io::BufRead;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::entropy::Entropy;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, standard_normal_vector, stream_rng};
use crate::target::TargetSpec;

/// Uniformly weighted point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<DVector<f64>>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidParameters("empirical measure needs at least one point".into()));
        };
        let p = first.len();
        if p == 0 || points.iter().any(|x| x.len() != p) {
            return Err(Error::SizeMismatch("points of an empirical measure must share a positive dimension".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Reads one point per line, comma separated. Blank lines, lines
    /// starting with `#` and a non-numeric header line are skipped. When the
    /// header names columns `x_1, x_2, …` only those are read, so sampler
    /// traces load directly.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut columns: Option<Vec<usize>> = None;
        let mut header_seen = false;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = match &columns {
                Some(cols) => cols
                    .iter()
                    .map(|&c| fields.get(c).copied().unwrap_or("").parse::<f64>())
                    .collect(),
                None => fields.iter().map(|t| t.parse::<f64>()).collect(),
            };
            match parsed {
                Ok(v) => points.push(DVector::from_vec(v)),
                Err(_) if points.is_empty() && !header_seen => {
                    header_seen = true;
                    let xs: Vec<usize> =
                        fields.iter().enumerate().filter(|(_, f)| f.starts_with("x_")).map(|(i, _)| i).collect();
                    if !xs.is_empty() {
                        columns = Some(xs);
                    }
                }
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            }
        }
        Self::new(points)
    }
}

/// Applies `∇φ` to every point.
pub fn mirror_embed(entropy: &dyn Entropy, measure: &EmpiricalMeasure) -> Result<Vec<DVector<f64>>> {
    measure.points().iter().map(|x| entropy.grad(x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum W2Method {
    Auto,
    /// Rank coupling; exact for `p = 1`.
    Exact1d,
    /// Exact empirical optimal matching, `n ≤ 2048`.
    Assignment,
    /// Average over random directions of 1-D squared distances. A lower
    /// bound on W₂, not an estimate of it.
    Sliced { projections: usize, seed: u64 },
    /// Sum over coordinates of the 1-D squared distances of the marginals.
    /// Equals W₂ between product laws when `φ` is separable; on empirical
    /// clouds it avoids the `n^{-1/p}` bias of the joint matching.
    ProductMarginal,
}

impl FromStr for W2Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(W2Method::Auto),
            "exact-1d" => Ok(W2Method::Exact1d),
            "assignment" => Ok(W2Method::Assignment),
            "sliced" => Ok(W2Method::Sliced { projections: 256, seed: 0 }),
            "product-marginal" => Ok(W2Method::ProductMarginal),
            other => Err(Error::Parse(format!("unknown distance method `{other}`"))),
        }
    }
}

impl W2Method {
    pub fn label(&self) -> &'static str {
        match self {
            W2Method::Auto => "auto",
            W2Method::Exact1d => "exact-1d",
            W2Method::Assignment => "assignment",
            W2Method::Sliced { .. } => "sliced",
            W2Method::ProductMarginal => "product-marginal",
        }
    }
}

pub const MAX_ASSIGNMENT_POINTS: usize = 2048;
const AUTO_ASSIGNMENT_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub value: f64,
    pub method: String,
    pub n_points: usize,
    /// Projection count (sliced) or optimal total squared cost (assignment).
    pub aux: Option<f64>,
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn mean_sq_sorted(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn coord(points: &[DVector<f64>], j: usize) -> Vec<f64> {
    points.iter().map(|x| x[j]).collect()
}

/// Squared W₂ between two equal-size embedded clouds, by method. `Auto`
/// must already be resolved.
fn w2_squared(a: &[DVector<f64>], b: &[DVector<f64>], method: W2Method) -> Result<(f64, Option<f64>)> {
    let n = a.len();
    let p = a[0].len();
    match method {
        W2Method::Auto => unreachable!("resolved by caller"),
        W2Method::Exact1d => {
            if p != 1 {
                return Err(Error::MethodUnavailable(format!("exact-1d needs p = 1, got p = {p}")));
            }
            Ok((mean_sq_sorted(&sorted(coord(a, 0)), &sorted(coord(b, 0))), None))
        }
        W2Method::ProductMarginal => {
            let total = (0..p)
                .map(|j| mean_sq_sorted(&sorted(coord(a, j)), &sorted(coord(b, j))))
                .sum();
            Ok((total, None))
        }
        W2Method::Assignment => {
            if n > MAX_ASSIGNMENT_POINTS {
                return Err(Error::MethodUnavailable(format!(
                    "assignment supports at most {MAX_ASSIGNMENT_POINTS} points, got {n}"
                )));
            }
            let mut cost = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    cost[i * n + j] = (&a[i] - &b[j]).norm_squared();
                }
            }
            let sol = assignment::solve(&cost, n)?;
            let total = assignment::assignment_cost(&cost, n, &sol);
            Ok((total / n as f64, Some(total)))
        }
        W2Method::Sliced { projections, seed } => {
            if projections == 0 {
                return Err(Error::InvalidParameters("sliced estimator needs projections".into()));
            }
            let mut rng = stream_rng(seed, 0);
            let mut acc = 0.0;
            for _ in 0..projections {
                let mut dir = standard_normal_vector(&mut rng, p);
                let norm = dir.norm();
                dir /= norm;
                let pa = sorted(a.iter().map(|x| x.dot(&dir)).collect());
                let pb = sorted(b.iter().map(|x| x.dot(&dir)).collect());
                acc += mean_sq_sorted(&pa, &pb);
            }
            Ok((acc / projections as f64, Some(projections as f64)))
        }
    }
}

fn resolve(method: W2Method, n: usize, p: usize) -> W2Method {
    match method {
        W2Method::Auto if p == 1 => W2Method::Exact1d,
        W2Method::Auto if n <= AUTO_ASSIGNMENT_POINTS => W2Method::Assignment,
        W2Method::Auto => W2Method::Sliced { projections: 256, seed: 0 },
        m => m,
    }
}

/// W₂ with ground cost `‖∇φ(x) − ∇φ(x′)‖₂` between two empirical measures.
pub fn w2phi(
    entropy: &dyn Entropy,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    method: W2Method,
) -> Result<DistanceEstimate> {
    if mu.len() != nu.len() {
        return Err(Error::SizeMismatch(format!("{} vs {} points", mu.len(), nu.len())));
    }
    if mu.dim() != nu.dim() || mu.dim() != entropy.dim() {
        return Err(Error::SizeMismatch(format!(
            "dimensions {} and {} for an entropy of dimension {}",
            mu.dim(),
            nu.dim(),
            entropy.dim()
        )));
    }
    let a = mirror_embed(entropy, mu)?;
    let b = mirror_embed(entropy, nu)?;
    let method = resolve(method, mu.len(), mu.dim());
    let (sq, aux) = w2_squared(&a, &b, method)?;
    Ok(DistanceEstimate { value: sq.max(0.0).sqrt(), method: method.label().into(), n_points: mu.len(), aux })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub median: f64,
    pub iqr: f64,
    pub values: Vec<f64>,
}

impl DistanceSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let s = sorted(values.clone());
        Self { median: quantile(&s, 0.5), iqr: quantile(&s, 0.75) - quantile(&s, 0.25), values }
    }
}

/// Distance from a cloud to π: the cloud is compared against `repetitions`
/// independent equal-size exact-sample clouds; repetition `r` uses seed
/// `derive_seed(seed, r)`.
pub fn distance_to_target(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    cloud: &EmpiricalMeasure,
    method: W2Method,
    repetitions: usize,
    seed: u64,
) -> Result<DistanceSummary> {
    if repetitions == 0 {
        return Err(Error::InvalidParameters("need at least one repetition".into()));
    }
    let values = (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let reference = EmpiricalMeasure::new(target.exact_sample(cloud.len(), derive_seed(seed, r as u64)))?;
            w2phi(entropy, cloud, &reference, method).map(|d| d.value)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistanceSummary::from_values(values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub oracle_mean: Vec<f64>,
    pub oracle_variance: Vec<f64>,
    /// `(mean − oracle) / (s/√n)`.
    pub z_mean: Vec<f64>,
    /// `(variance − oracle) / SE(variance)` with `SE² = (m₄ − s⁴)/n`.
    pub z_variance: Vec<f64>,
}

fn z(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

pub fn moment_report(measure: &EmpiricalMeasure, target: &TargetSpec) -> Result<MomentReport> {
    if measure.dim() != target.dim() {
        return Err(Error::SizeMismatch(format!(
            "measure of dimension {} for a target of dimension {}",
            measure.dim(),
            target.dim()
        )));
    }
    let oracle = target.moments();
    let n = measure.len();
    let nf = n as f64;
    let mut rep = MomentReport {
        n,
        mean: vec![],
        variance: vec![],
        oracle_mean: oracle.mean.iter().cloned().collect(),
        oracle_variance: oracle.variance.iter().cloned().collect(),
        z_mean: vec![],
        z_variance: vec![],
    };
    for j in 0..measure.dim() {
        let xs = coord(measure.points(), j);
        let mean = xs.iter().sum::<f64>() / nf;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
        let var = if n > 1 { m2 * nf / (nf - 1.0) } else { 0.0 };
        rep.z_mean.push(z(mean - oracle.mean[j], (var / nf).sqrt()));
        rep.z_variance.push(z(var - oracle.variance[j], ((m4 - m2 * m2).max(0.0) / nf).sqrt()));
        rep.mean.push(mean);
        rep.variance.push(var);
    }
    Ok(rep)
}

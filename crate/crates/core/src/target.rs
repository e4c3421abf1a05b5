//! Target log-densities `π ∝ e^{−f}` with declared constants, exact samplers
//! and moment oracles.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::entropy::{Entropy, BOUNDARY_GUARD};
use crate::error::{Error, Result};
use crate::linalg;
use crate::quadrature::{self, Tolerance};
use crate::rng::{stream_rng, ChainRng};

/// Constants of the relative assumptions, declared for the paired entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredConstants {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub delta: f64,
    /// Normalized expectation `E_π‖D²φ‖₂`.
    pub r: f64,
}

#[derive(Debug, Clone)]
pub enum Family {
    /// `f(x) = xᵀAx/2`.
    Gaussian {
        a: DMatrix<f64>,
        /// `L⁻ᵀ` for `A = LLᵀ`, maps standard normals to `N(0, A⁻¹)`.
        l_inv_t: DMatrix<f64>,
    },
    /// `f(x) = Σ (1 − aᵢ) ln xᵢ + bᵢ xᵢ`.
    Gamma {
        shape: Vec<f64>,
        rate: Vec<f64>,
        laws: Vec<Gamma<f64>>,
    },
    /// `f(x) = (1 − a₁) ln x + (1 − a₂) ln(1 − x)`.
    Beta {
        a1: f64,
        a2: f64,
        laws: [Gamma<f64>; 2],
    },
}

#[derive(Debug, Clone)]
pub struct TargetSpec {
    family: Family,
    declared: Option<DeclaredConstants>,
}

/// How the constant `R` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RMethod {
    Declared,
    Quadrature,
    MonteCarlo,
}

impl std::str::FromStr for RMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "declared" => Ok(RMethod::Declared),
            "quadrature" => Ok(RMethod::Quadrature),
            "monte-carlo" | "mc" => Ok(RMethod::MonteCarlo),
            other => Err(Error::Parse(format!("unknown R method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct REstimate {
    pub method: RMethod,
    pub value: f64,
    /// Standard error (Monte Carlo), error bound (quadrature) or 0 (declared).
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: DVector<f64>,
    pub variance: DVector<f64>,
}

fn gamma_law(shape: f64, rate: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidParameters(format!("Gamma({shape}, {rate}): {e}")))
}

impl TargetSpec {
    pub fn gaussian(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidParameters("A must be a non-empty square matrix".into()));
        }
        if !linalg::is_symmetric(&a, 1e-12) {
            return Err(Error::InvalidParameters("A must be symmetric".into()));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParameters("A must be positive definite".into()))?;
        let l_inv_t = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameters("A is numerically singular".into()))?
            .transpose();
        let eig = a.clone().symmetric_eigenvalues();
        let m = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let big_m = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            family: Family::Gaussian { a, l_inv_t },
            declared: Some(DeclaredConstants { m, big_m, delta: 0.0, r: 1.0 }),
        })
    }

    /// Product Gamma law. Requires every shape above 3 so that `R` is finite.
    pub fn gamma(shape: Vec<f64>, rate: Vec<f64>) -> Result<Self> {
        if let Some(a) = shape.iter().find(|&&a| !(a > 3.0)) {
            return Err(Error::InvalidParameters(format!(
                "Gamma shape {a} must exceed 3, otherwise R = E[‖D²φ‖₂] is infinite (A2)"
            )));
        }
        let mut t = Self::gamma_unchecked(shape, rate)?;
        let Family::Gamma { shape, rate, .. } = &t.family else { unreachable!() };
        let m = shape.iter().map(|a| a - 1.0).fold(f64::INFINITY, f64::min);
        let big_m = shape.iter().map(|a| a - 1.0).fold(f64::NEG_INFINITY, f64::max);
        let r = shape
            .iter()
            .zip(rate)
            .map(|(a, b)| b * b / ((a - 1.0) * (a - 2.0)))
            .sum();
        t.declared = Some(DeclaredConstants { m, big_m, delta: 0.0, r });
        Ok(t)
    }

    /// Product Gamma law without the shape restriction and without declared
    /// constants; used to exercise divergence detection.
    pub fn gamma_unchecked(shape: Vec<f64>, rate: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() != rate.len() {
            return Err(Error::InvalidParameters(format!(
                "Gamma needs equally many shapes and rates, got {} and {}",
                shape.len(),
                rate.len()
            )));
        }
        if let Some(b) = rate.iter().find(|&&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidParameters(format!("Gamma rate {b} must be positive")));
        }
        if let Some(a) = shape.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameters(format!("Gamma shape {a} must be positive")));
        }
        let laws = shape
            .iter()
            .zip(&rate)
            .map(|(&a, &b)| gamma_law(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { family: Family::Gamma { shape, rate, laws }, declared: None })
    }

    /// Beta law on (0, 1). Requires both shapes above 2.
    pub fn beta(a1: f64, a2: f64) -> Result<Self> {
        if !(a1 > 2.0 && a2 > 2.0 && a1.is_finite() && a2.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "Beta shapes ({a1}, {a2}) must both exceed 2, otherwise R is infinite (A2)"
            )));
        }
        let s = a1 + a2;
        let r = (s - 1.0) * (s - 2.0) * (1.0 / ((a1 - 1.0) * (a1 - 2.0)) + 1.0 / ((a2 - 1.0) * (a2 - 2.0)));
        Ok(Self {
            family: Family::Beta { a1, a2, laws: [gamma_law(a1, 1.0)?, gamma_law(a2, 1.0)?] },
            declared: Some(DeclaredConstants {
                m: (a1 - 1.0).min(a2 - 1.0),
                big_m: (a1 - 1.0).max(a2 - 1.0),
                delta: 0.0,
                r,
            }),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        match &self.family {
            Family::Gaussian { a, .. } => a.nrows(),
            Family::Gamma { shape, .. } => shape.len(),
            Family::Beta { .. } => 1,
        }
    }

    /// Canonical name; `parse_target(t.name())` rebuilds the same target.
    pub fn name(&self) -> String {
        fn join(v: &[f64]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        match &self.family {
            Family::Gaussian { a, .. } => {
                let n = a.nrows();
                let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0));
                if diagonal {
                    let d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
                    format!("gaussian:A=diag({})", join(&d))
                } else {
                    let rows: Vec<String> = (0..n)
                        .map(|i| {
                            let r: Vec<f64> = (0..n).map(|j| a[(i, j)]).collect();
                            format!("[{}]", join(&r))
                        })
                        .collect();
                    format!("gaussian:A=[{}]", rows.join(","))
                }
            }
            Family::Gamma { shape, rate, .. } => {
                format!("gamma:a={};b={}", join(shape), join(rate))
            }
            Family::Beta { a1, a2, .. } => format!("beta:a1={a1},a2={a2}"),
        }
    }

    /// Name of the entropy the declared constants refer to.
    pub fn paired_entropy(&self) -> &'static str {
        match &self.family {
            Family::Gaussian { .. } => "euclidean",
            Family::Gamma { .. } => "burg",
            Family::Beta { .. } => "logit",
        }
    }

    pub fn constants_declared(&self) -> Option<DeclaredConstants> {
        self.declared
    }

    /// Open interval each coordinate lives in.
    pub fn support(&self) -> (f64, f64) {
        match &self.family {
            Family::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Gamma { .. } => (0.0, f64::INFINITY),
            Family::Beta { .. } => (0.0, 1.0),
        }
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        let (lo, hi) = self.support();
        let ok = x.len() == self.dim()
            && x.iter().all(|&t| {
                t.is_finite()
                    && (lo == f64::NEG_INFINITY || t > lo + BOUNDARY_GUARD)
                    && (hi == f64::INFINITY || t < hi - BOUNDARY_GUARD)
            });
        if ok {
            Ok(())
        } else {
            Err(Error::DomainViolation { entropy: self.name(), detail: format!("x = {:?}", x.as_slice()) })
        }
    }

    pub fn potential(&self, x: &DVector<f64>) -> Result<f64> {
        self.check(x)?;
        Ok(match &self.family {
            Family::Gaussian { a, .. } => 0.5 * x.dot(&(a * x)),
            Family::Gamma { shape, rate, .. } => x
                .iter()
                .zip(shape.iter().zip(rate))
                .map(|(&t, (&a, &b))| (1.0 - a) * t.ln() + b * t)
                .sum(),
            Family::Beta { a1, a2, .. } => {
                let t = x[0];
                (1.0 - a1) * t.ln() + (1.0 - a2) * (1.0 - t).ln()
            }
        })
    }

    pub fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x)?;
        Ok(match &self.family {
            Family::Gaussian { a, .. } => a * x,
            Family::Gamma { shape, rate, .. } => DVector::from_iterator(
                x.len(),
                x.iter().zip(shape.iter().zip(rate)).map(|(&t, (&a, &b))| (1.0 - a) / t + b),
            ),
            Family::Beta { a1, a2, .. } => {
                let t = x[0];
                DVector::from_element(1, (1.0 - a1) / t - (1.0 - a2) / (1.0 - t))
            }
        })
    }

    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(match &self.family {
            Family::Gaussian { a, .. } => a.clone(),
            Family::Gamma { shape, .. } => DMatrix::from_diagonal(&DVector::from_iterator(
                x.len(),
                x.iter().zip(shape).map(|(&t, &a)| (a - 1.0) / (t * t)),
            )),
            Family::Beta { a1, a2, .. } => {
                let t = x[0];
                DMatrix::from_element(1, 1, (a1 - 1.0) / (t * t) + (a2 - 1.0) / ((1.0 - t) * (1.0 - t)))
            }
        })
    }

    /// One exact draw from π.
    pub fn draw(&self, rng: &mut ChainRng) -> DVector<f64> {
        match &self.family {
            Family::Gaussian { l_inv_t, .. } => {
                let z = DVector::from_iterator(
                    l_inv_t.nrows(),
                    (0..l_inv_t.nrows()).map(|_| rng.sample::<f64, _>(StandardNormal)),
                );
                l_inv_t * z
            }
            Family::Gamma { laws, .. } => {
                DVector::from_iterator(laws.len(), laws.iter().map(|g| g.sample(rng)))
            }
            Family::Beta { laws, .. } => {
                let g1 = laws[0].sample(rng);
                let g2 = laws[1].sample(rng);
                DVector::from_element(1, g1 / (g1 + g2))
            }
        }
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn exact_sample(&self, n: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    pub fn moments(&self) -> Moments {
        match &self.family {
            Family::Gaussian { l_inv_t, .. } => {
                let cov = l_inv_t * l_inv_t.transpose();
                Moments { mean: DVector::zeros(cov.nrows()), variance: cov.diagonal() }
            }
            Family::Gamma { shape, rate, .. } => Moments {
                mean: DVector::from_iterator(shape.len(), shape.iter().zip(rate).map(|(a, b)| a / b)),
                variance: DVector::from_iterator(
                    shape.len(),
                    shape.iter().zip(rate).map(|(a, b)| a / (b * b)),
                ),
            },
            Family::Beta { a1, a2, .. } => {
                let s = a1 + a2;
                Moments {
                    mean: DVector::from_element(1, a1 / s),
                    variance: DVector::from_element(1, a1 * a2 / (s * s * (s + 1.0))),
                }
            }
        }
    }

    /// The tabulated closed form for `R`, which omits the density's
    /// normalizing constant: `Σ (aᵢ−3)!/bᵢ^{aᵢ−2}` for Gamma and
    /// `((a₁−3)!(a₂−1)! + (a₁−1)!(a₂−3)!)/(a₁+a₂−3)!` for Beta.
    pub fn r_table_formula(&self) -> f64 {
        match &self.family {
            Family::Gaussian { .. } => 1.0,
            Family::Gamma { shape, rate, .. } => shape
                .iter()
                .zip(rate)
                .map(|(&a, &b)| gamma_fn(a - 2.0) / b.powf(a - 2.0))
                .sum(),
            Family::Beta { a1, a2, .. } => {
                (gamma_fn(a1 - 2.0) * gamma_fn(*a2) + gamma_fn(*a1) * gamma_fn(a2 - 2.0))
                    / gamma_fn(a1 + a2 - 2.0)
            }
        }
    }
}

/// Estimate of `R = E_π‖D²φ(X)‖₂` for the given entropy.
///
/// `budget` is the number of exact draws for the Monte-Carlo method and is
/// ignored otherwise.
pub fn r_constant(
    target: &TargetSpec,
    entropy: &dyn Entropy,
    method: RMethod,
    budget: usize,
    seed: u64,
) -> Result<REstimate> {
    if entropy.dim() != target.dim() {
        return Err(Error::SizeMismatch(format!(
            "entropy dimension {} vs target dimension {}",
            entropy.dim(),
            target.dim()
        )));
    }
    match method {
        RMethod::Declared => {
            if entropy.name() != target.paired_entropy() {
                return Err(Error::Unavailable(format!(
                    "declared R refers to `{}`, not `{}`",
                    target.paired_entropy(),
                    entropy.name()
                )));
            }
            target
                .constants_declared()
                .map(|c| REstimate { method, value: c.r, error: 0.0 })
                .ok_or_else(|| Error::Unavailable(format!("no declared R for {}", target.name())))
        }
        RMethod::Quadrature => r_quadrature(target, entropy),
        RMethod::MonteCarlo => r_monte_carlo(target, entropy, budget, seed),
    }
}

fn r_quadrature(target: &TargetSpec, entropy: &dyn Entropy) -> Result<REstimate> {
    let p = target.dim();
    if p > 2 {
        return Err(Error::Unavailable(format!("quadrature for R needs p ≤ 2, got p = {p}")));
    }
    let f_ref = target.potential(&target.moments().mean)?;
    let weight = |x: &DVector<f64>| match target.potential(x) {
        Ok(f) => (f_ref - f).exp(),
        Err(_) => 0.0,
    };
    let norm = |x: &DVector<f64>| entropy.hessian_norm(x).unwrap_or(0.0);
    let tol = Tolerance::default();

    // Integrate over the support shrunk by `margin` on finite ends.
    let integrate = |g: &dyn Fn(&DVector<f64>) -> f64, margin: f64| -> Result<quadrature::Integral> {
        let (lo, hi) = target.support();
        let lo = if lo.is_finite() { lo + margin } else { lo };
        let hi = if hi.is_finite() { hi - margin } else { hi };
        if p == 1 {
            quadrature::integrate(|t| g(&DVector::from_element(1, t)), lo, hi, tol)
        } else {
            quadrature::integrate_2d(|s, t| g(&DVector::from_vec(vec![s, t])), (lo, hi), (lo, hi), tol)
        }
    };

    let z = integrate(&|x| weight(x), BOUNDARY_GUARD)?;
    let num = integrate(&|x| norm(x) * weight(x), BOUNDARY_GUARD)?;
    // A finite R does not depend on the innermost boundary layer.
    let trimmed = integrate(&|x| norm(x) * weight(x), 1e-6)?;
    if !(z.converged && num.converged) || !(z.value > 0.0) {
        return Err(Error::Divergent(format!(
            "quadrature for R did not converge on {}",
            target.name()
        )));
    }
    if (num.value - trimmed.value).abs() > 1e-4 * num.value.abs() {
        return Err(Error::Divergent(format!(
            "R integral on {} is dominated by the boundary layer ({} vs {} after trimming 1e-6)",
            target.name(),
            num.value,
            trimmed.value
        )));
    }
    let value = num.value / z.value;
    let error = value * (num.error / num.value.abs() + z.error / z.value);
    Ok(REstimate { method: RMethod::Quadrature, value, error })
}

fn r_monte_carlo(target: &TargetSpec, entropy: &dyn Entropy, n: usize, seed: u64) -> Result<REstimate> {
    if n < 2 {
        return Err(Error::InvalidParameters("Monte-Carlo R needs at least 2 draws".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let mut terms = Vec::with_capacity(n);
    for _ in 0..n {
        let x = target.draw(&mut rng);
        terms.push(entropy.hessian_norm(&x)?);
    }
    let sum: f64 = terms.iter().sum();
    let mean = sum / n as f64;
    let var = terms.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    let max_term = terms.iter().cloned().fold(0.0_f64, f64::max);
    if !mean.is_finite() || max_term / sum > 0.05 || se / mean > 0.1 {
        return Err(Error::Divergent(format!(
            "Monte-Carlo R on {} unstable: mean {mean}, standard error {se}, largest term share {}",
            target.name(),
            max_term / sum
        )));
    }
    Ok(REstimate { method: RMethod::MonteCarlo, value: mean, error: se })
}

/// The three registered targets: Gaussian `A = diag(1, 2)`, Gamma(5, 1) and
/// Beta(4, 4).
pub fn register_table2_targets() -> Vec<TargetSpec> {
    vec![
        TargetSpec::gaussian(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])))
            .expect("valid Gaussian"),
        TargetSpec::gamma(vec![5.0], vec![1.0]).expect("valid Gamma"),
        TargetSpec::beta(4.0, 4.0).expect("valid Beta"),
    ]
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number `{t}`: {e}"))))
        .collect()
}

fn parse_matrix(s: &str) -> Result<DMatrix<f64>> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("diag(").and_then(|r| r.strip_suffix(')')) {
        let d = parse_list(inner)?;
        return Ok(DMatrix::from_diagonal(&DVector::from_vec(d)));
    }
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected diag(..) or [[..],..], got `{s}`")))?;
    let rows: Vec<Vec<f64>> = inner
        .split(']')
        .map(|r| r.trim().trim_start_matches(',').trim().trim_start_matches('['))
        .filter(|r| !r.trim().is_empty())
        .map(parse_list)
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("matrix `{s}` is not square")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Splits `k1=v,v;k2=v` into keys and comma lists; tokens without `=`
/// continue the previous key.
fn parse_params(s: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for tok in s.split([',', ';']).map(str::trim).filter(|t| !t.is_empty()) {
        match tok.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_string(), parse_list(v)?)),
            None => match out.last_mut() {
                Some((_, vals)) => vals.extend(parse_list(tok)?),
                None => return Err(Error::Parse(format!("value `{tok}` without a key"))),
            },
        }
    }
    Ok(out)
}

fn take(params: &[(String, Vec<f64>)], key: &str) -> Option<Vec<f64>> {
    params.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone())
}

fn broadcast(v: Vec<f64>, p: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; p]),
        n if n == p => Ok(v),
        n => Err(Error::Parse(format!("{what} has {n} entries, expected 1 or {p}"))),
    }
}

/// Parses `gaussian:A=diag(1,2)`, `gaussian:A=[[2,0.5],[0.5,1]]`,
/// `gamma:a=5,b=1`, `gamma:a=5,5;b=1,1`, `gamma:a=5,b=1,p=4` and
/// `beta:a1=4,a2=4`.
pub fn parse_target(spec: &str) -> Result<TargetSpec> {
    let spec = spec.trim();
    let (head, params) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("target `{spec}` needs parameters after `:`")))?;
    match head.trim().to_ascii_lowercase().as_str() {
        "gaussian" => {
            let m = params
                .trim()
                .strip_prefix("A=")
                .ok_or_else(|| Error::Parse(format!("expected `A=` in `{spec}`")))?;
            TargetSpec::gaussian(parse_matrix(m)?)
        }
        "gamma" => {
            let kv = parse_params(params)?;
            let a = take(&kv, "a").ok_or_else(|| Error::Parse("gamma needs `a=`".into()))?;
            let b = take(&kv, "b").unwrap_or_else(|| vec![1.0]);
            let p = match take(&kv, "p") {
                Some(p) if p.len() == 1 && p[0] >= 1.0 && p[0].fract() == 0.0 => p[0] as usize,
                Some(_) => return Err(Error::Parse("`p` must be a positive integer".into())),
                None => a.len().max(b.len()),
            };
            TargetSpec::gamma(broadcast(a, p, "a")?, broadcast(b, p, "b")?)
        }
        "beta" => {
            let kv = parse_params(params)?;
            let one = |k: &str| -> Result<f64> {
                match take(&kv, k).as_deref() {
                    Some([v]) => Ok(*v),
                    _ => Err(Error::Parse(format!("beta needs a single `{k}=`"))),
                }
            };
            TargetSpec::beta(one("a1")?, one("a2")?)
        }
        other => Err(Error::Parse(format!("unknown target family `{other}`"))),
    }
}

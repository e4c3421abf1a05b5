//! Legendre-type entropies and their mirror maps.
//!
//! An entropy `φ` on an open convex domain `𝒳 ⊂ ℝᵖ` provides the mirror map
//! `∇φ : 𝒳 → 𝒴`, its inverse `∇φ*`, the Hessian metric `D²φ` and the SPD
//! square root of that metric. All registered entropies are separable,
//! `φ(x) = Σᵢ φᵢ(xᵢ)`, so every map acts coordinate-wise; the trait still
//! exposes full matrices so that non-separable entropies can be plugged in.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::ChainRng;

/// Points closer than this to the boundary of the domain are rejected.
pub const BOUNDARY_GUARD: f64 = 1e-12;

const INVERSION_TOL: f64 = 1e-12;
const INVERSION_MAX_ITER: usize = 100;

/// Coordinate-wise i.i.d. proposal used to draw interior points for the
/// sampled assumption certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Proposal {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
}

impl Proposal {
    pub fn sample(&self, rng: &mut ChainRng, dim: usize) -> DVector<f64> {
        match *self {
            Proposal::Uniform { lo, hi } => {
                DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(lo..hi)))
            }
            Proposal::LogUniform { lo, hi } => {
                let (a, b) = (lo.ln(), hi.ln());
                DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(a..b).exp()))
            }
        }
    }

    /// Widens the proposal range: log-uniform ranges are raised to the
    /// power `factor` around 1, uniform ranges are stretched about their
    /// midpoint.
    pub fn widen(&self, factor: f64) -> Proposal {
        match *self {
            Proposal::Uniform { lo, hi } => {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo) * factor;
                Proposal::Uniform { lo: mid - half, hi: mid + half }
            }
            Proposal::LogUniform { lo, hi } => Proposal::LogUniform {
                lo: lo.powf(factor),
                hi: hi.powf(factor),
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Proposal::Uniform { lo, hi } => format!("iid uniform({lo}, {hi}) per coordinate"),
            Proposal::LogUniform { lo, hi } => {
                format!("iid log-uniform({lo}, {hi}) per coordinate")
            }
        }
    }
}

/// A Legendre-type entropy.
///
/// Implementations must be immutable after construction.
pub trait Entropy: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    /// The self-concordance-like constant κ, `None` when unknown.
    fn kappa_declared(&self) -> Option<f64>;
    fn is_separable(&self) -> bool;
    fn interior_point(&self) -> DVector<f64>;
    fn proposal(&self) -> Proposal;

    /// Whether the sampler accepts this entropy. Test fixtures that violate
    /// the self-concordance-like condition return `false`.
    fn sampler_admissible(&self) -> bool {
        true
    }

    /// Strict membership in 𝒳, including the boundary guard.
    fn contains(&self, x: &DVector<f64>) -> bool;
    fn dual_contains(&self, y: &DVector<f64>) -> bool;

    fn value(&self, x: &DVector<f64>) -> Result<f64>;
    fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn grad_conjugate(&self, y: &DVector<f64>) -> Result<DVector<f64>>;
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Diagonal of the Hessian when it is diagonal.
    fn hessian_diagonal(&self, _x: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        Ok(None)
    }

    fn hessian_sqrt(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        match self.hessian_diagonal(x)? {
            Some(d) => Ok(DMatrix::from_diagonal(&d.map(f64::sqrt))),
            None => linalg::spd_sqrt(&self.hessian(x)?),
        }
    }

    /// `[D²φ(x)]^{1/2} v`.
    fn hessian_sqrt_mul(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        match self.hessian_diagonal(x)? {
            Some(d) => Ok(d.zip_map(v, |di, vi| di.sqrt() * vi)),
            None => Ok(self.hessian_sqrt(x)? * v),
        }
    }

    /// Spectral norm `‖D²φ(x)‖₂`.
    fn hessian_norm(&self, x: &DVector<f64>) -> Result<f64> {
        match self.hessian_diagonal(x)? {
            Some(d) => Ok(d.iter().fold(0.0_f64, |a, v| a.max(v.abs()))),
            None => Ok(linalg::spectral_norm(&self.hessian(x)?)),
        }
    }
}

/// Per-coordinate description of a separable entropy.
trait Coordinatewise {
    fn label(&self) -> String;
    fn coords(&self) -> usize;
    /// Open interval every coordinate lives in.
    fn interval(&self) -> (f64, f64);
    fn dual_interval(&self, i: usize) -> (f64, f64);
    fn phi(&self, i: usize, t: f64) -> f64;
    fn d1(&self, i: usize, t: f64) -> f64;
    fn d2(&self, i: usize, t: f64) -> f64;
    fn d1_inverse(&self, i: usize, s: f64) -> Result<f64>;
}

fn inside(t: f64, (lo, hi): (f64, f64)) -> bool {
    t.is_finite()
        && (lo == f64::NEG_INFINITY || t > lo + BOUNDARY_GUARD)
        && (hi == f64::INFINITY || t < hi - BOUNDARY_GUARD)
}

fn inside_open(s: f64, (lo, hi): (f64, f64)) -> bool {
    s.is_finite() && s > lo && s < hi
}

macro_rules! separable_entropy {
    ($ty:ty, kappa = $kappa:expr, proposal = $proposal:expr, interior = $interior:expr) => {
        separable_entropy!($ty, kappa = $kappa, proposal = $proposal, interior = $interior, admissible = true);
    };
    ($ty:ty, kappa = $kappa:expr, proposal = $proposal:expr, interior = $interior:expr, admissible = $adm:expr) => {
        impl Entropy for $ty {
            fn name(&self) -> String {
                self.label()
            }
            fn dim(&self) -> usize {
                self.coords()
            }
            fn kappa_declared(&self) -> Option<f64> {
                let f: fn(&$ty) -> Option<f64> = $kappa;
                f(self)
            }
            fn is_separable(&self) -> bool {
                true
            }
            fn interior_point(&self) -> DVector<f64> {
                DVector::from_element(self.coords(), $interior)
            }
            fn proposal(&self) -> Proposal {
                $proposal
            }
            fn sampler_admissible(&self) -> bool {
                $adm
            }
            fn contains(&self, x: &DVector<f64>) -> bool {
                x.len() == self.coords() && x.iter().all(|&t| inside(t, self.interval()))
            }
            fn dual_contains(&self, y: &DVector<f64>) -> bool {
                y.len() == self.coords()
                    && y.iter().enumerate().all(|(i, &s)| inside_open(s, self.dual_interval(i)))
            }
            fn value(&self, x: &DVector<f64>) -> Result<f64> {
                self.check(x)?;
                Ok(x.iter().enumerate().map(|(i, &t)| self.phi(i, t)).sum())
            }
            fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
                self.check(x)?;
                Ok(DVector::from_iterator(
                    x.len(),
                    x.iter().enumerate().map(|(i, &t)| self.d1(i, t)),
                ))
            }
            fn grad_conjugate(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
                if !self.dual_contains(y) {
                    return Err(Error::DualDomainViolation {
                        entropy: self.label(),
                        detail: format!("y = {:?}", y.as_slice()),
                    });
                }
                let mut x = DVector::zeros(y.len());
                for (i, &s) in y.iter().enumerate() {
                    x[i] = self.d1_inverse(i, s)?;
                }
                if !self.contains(&x) {
                    return Err(Error::DualDomainViolation {
                        entropy: self.label(),
                        detail: format!(
                            "preimage {:?} of y = {:?} lies within the boundary guard",
                            x.as_slice(),
                            y.as_slice()
                        ),
                    });
                }
                Ok(x)
            }
            fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
                let d = self.hessian_diagonal(x)?.expect("separable");
                Ok(DMatrix::from_diagonal(&d))
            }
            fn hessian_diagonal(&self, x: &DVector<f64>) -> Result<Option<DVector<f64>>> {
                self.check(x)?;
                Ok(Some(DVector::from_iterator(
                    x.len(),
                    x.iter().enumerate().map(|(i, &t)| self.d2(i, t)),
                )))
            }
        }

        impl $ty {
            fn check(&self, x: &DVector<f64>) -> Result<()> {
                if self.contains(x) {
                    Ok(())
                } else {
                    Err(Error::DomainViolation {
                        entropy: self.label(),
                        detail: format!("x = {:?}", x.as_slice()),
                    })
                }
            }
        }
    };
}

/// `φ(x) = ‖x‖²/2` on ℝᵖ.
#[derive(Debug, Clone, PartialEq)]
pub struct Euclidean {
    dim: usize,
}

impl Euclidean {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim }
    }
}

impl Coordinatewise for Euclidean {
    fn label(&self) -> String {
        "euclidean".into()
    }
    fn coords(&self) -> usize {
        self.dim
    }
    fn interval(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn dual_interval(&self, _: usize) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn phi(&self, _: usize, t: f64) -> f64 {
        0.5 * t * t
    }
    fn d1(&self, _: usize, t: f64) -> f64 {
        t
    }
    fn d2(&self, _: usize, _: f64) -> f64 {
        1.0
    }
    fn d1_inverse(&self, _: usize, s: f64) -> Result<f64> {
        Ok(s)
    }
}

separable_entropy!(
    Euclidean,
    kappa = |_| Some(0.0),
    proposal = Proposal::Uniform { lo: -10.0, hi: 10.0 },
    interior = 0.0
);

/// Burg entropy `φ(x) = −Σ ln xᵢ` on the positive orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct Burg {
    dim: usize,
}

impl Burg {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim }
    }
}

impl Coordinatewise for Burg {
    fn label(&self) -> String {
        "burg".into()
    }
    fn coords(&self) -> usize {
        self.dim
    }
    fn interval(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn dual_interval(&self, _: usize) -> (f64, f64) {
        (f64::NEG_INFINITY, 0.0)
    }
    fn phi(&self, _: usize, t: f64) -> f64 {
        -t.ln()
    }
    fn d1(&self, _: usize, t: f64) -> f64 {
        -1.0 / t
    }
    fn d2(&self, _: usize, t: f64) -> f64 {
        1.0 / (t * t)
    }
    fn d1_inverse(&self, _: usize, s: f64) -> Result<f64> {
        Ok(-1.0 / s)
    }
}

separable_entropy!(
    Burg,
    kappa = |_| Some(std::f64::consts::SQRT_2),
    proposal = Proposal::LogUniform { lo: 1e-3, hi: 1e3 },
    interior = 1.0
);

/// Logit barrier `φ(x) = −ln x − ln(1 − x)` on (0, 1), applied per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitBarrier {
    dim: usize,
}

impl LogitBarrier {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim }
    }
}

impl Coordinatewise for LogitBarrier {
    fn label(&self) -> String {
        "logit".into()
    }
    fn coords(&self) -> usize {
        self.dim
    }
    fn interval(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn dual_interval(&self, _: usize) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn phi(&self, _: usize, t: f64) -> f64 {
        -t.ln() - (1.0 - t).ln()
    }
    fn d1(&self, _: usize, t: f64) -> f64 {
        -1.0 / t + 1.0 / (1.0 - t)
    }
    fn d2(&self, _: usize, t: f64) -> f64 {
        1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))
    }
    fn d1_inverse(&self, _: usize, s: f64) -> Result<f64> {
        // Root in (0, 1) of s·x² + (2 − s)·x − 1 = 0, written as
        // x = 2 / (2 − s + √(4 + s²)) and rearranged for s > 0 so that no
        // cancellation occurs on either side.
        let r = (4.0 + s * s).sqrt();
        if s > 0.0 {
            Ok(2.0 / (2.0 + 4.0 / (r + s)))
        } else {
            Ok(2.0 / (2.0 - s + r))
        }
    }
}

separable_entropy!(
    LogitBarrier,
    kappa = |_| Some(std::f64::consts::SQRT_2),
    proposal = Proposal::Uniform { lo: 0.01, hi: 0.99 },
    interior = 0.5
);

/// Mixed entropy `φ(x) = Σ aᵢ xᵢ ln xᵢ − Σ (1 − aᵢ) ln xᵢ` with `aᵢ ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixed {
    a: Vec<f64>,
}

impl Mixed {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidParameters("mixed entropy needs at least one weight".into()));
        }
        if let Some(bad) = a.iter().find(|&&ai| !(0.0..1.0).contains(&ai)) {
            return Err(Error::InvalidParameters(format!(
                "mixed entropy weights must lie in [0, 1), got {bad}"
            )));
        }
        Ok(Self { a })
    }

    pub fn weights(&self) -> &[f64] {
        &self.a
    }

    /// Safeguarded Newton on `g(t) = a(t + 1) − (1 − a)e^{−t} − s` in
    /// `t = ln x`; `g` is increasing and concave.
    fn invert(&self, a: f64, s: f64) -> Result<f64> {
        if a == 0.0 {
            return Ok(-1.0 / s);
        }
        let b = 1.0 - a;
        let g = |t: f64| a * (t + 1.0) - b * (-t).exp() - s;
        let dg = |t: f64| a + b * (-t).exp();

        let mut t = if s > 0.0 { s / a - 1.0 } else { -(-s / b).max(1e-300).ln() };
        if !t.is_finite() {
            t = 0.0;
        }
        // Bracket the root.
        let (mut lo, mut hi) = (t, t);
        let mut step = 1.0;
        while g(lo) > 0.0 {
            lo -= step;
            step *= 2.0;
            if step > 1e6 {
                return Err(Error::ConvergenceFailure(format!("no lower bracket for s = {s}")));
            }
        }
        step = 1.0;
        while g(hi) < 0.0 {
            hi += step;
            step *= 2.0;
            if step > 1e6 {
                return Err(Error::ConvergenceFailure(format!("no upper bracket for s = {s}")));
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..INVERSION_MAX_ITER {
            let gt = g(t);
            if gt == 0.0 {
                return Ok(t.exp());
            }
            if gt < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let mut next = t - gt / dg(t);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= INVERSION_TOL * (1.0 + t.abs()) || hi - lo <= INVERSION_TOL {
                return Ok(next.exp());
            }
            t = next;
        }
        Err(Error::ConvergenceFailure(format!(
            "mixed entropy inversion for s = {s} did not reach {INVERSION_TOL} in {INVERSION_MAX_ITER} iterations"
        )))
    }
}

impl Coordinatewise for Mixed {
    fn label(&self) -> String {
        let parts: Vec<String> = self.a.iter().map(|v| v.to_string()).collect();
        format!("mixed:a={}", parts.join(","))
    }
    fn coords(&self) -> usize {
        self.a.len()
    }
    fn interval(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn dual_interval(&self, i: usize) -> (f64, f64) {
        if self.a[i] > 0.0 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, 0.0)
        }
    }
    fn phi(&self, i: usize, t: f64) -> f64 {
        let a = self.a[i];
        a * t * t.ln() - (1.0 - a) * t.ln()
    }
    fn d1(&self, i: usize, t: f64) -> f64 {
        let a = self.a[i];
        a * (t.ln() + 1.0) - (1.0 - a) / t
    }
    fn d2(&self, i: usize, t: f64) -> f64 {
        let a = self.a[i];
        a / t + (1.0 - a) / (t * t)
    }
    fn d1_inverse(&self, i: usize, s: f64) -> Result<f64> {
        self.invert(self.a[i], s)
    }
}

separable_entropy!(
    Mixed,
    kappa = |m| {
        let amax = m.a.iter().cloned().fold(0.0_f64, f64::max);
        Some((2.0 / (1.0 - amax)).sqrt())
    },
    proposal = Proposal::LogUniform { lo: 1e-3, hi: 1e3 },
    interior = 1.0
);

/// Boltzmann–Shannon entropy `φ(x) = Σ xᵢ ln xᵢ`.
///
/// Violates the self-concordance-like condition on the positive orthant;
/// shipped only as a negative fixture for the κ estimator and refused by
/// the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannShannon {
    dim: usize,
}

impl BoltzmannShannon {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim }
    }
}

impl Coordinatewise for BoltzmannShannon {
    fn label(&self) -> String {
        "shannon".into()
    }
    fn coords(&self) -> usize {
        self.dim
    }
    fn interval(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn dual_interval(&self, _: usize) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn phi(&self, _: usize, t: f64) -> f64 {
        t * t.ln()
    }
    fn d1(&self, _: usize, t: f64) -> f64 {
        t.ln() + 1.0
    }
    fn d2(&self, _: usize, t: f64) -> f64 {
        1.0 / t
    }
    fn d1_inverse(&self, _: usize, s: f64) -> Result<f64> {
        Ok((s - 1.0).exp())
    }
}

separable_entropy!(
    BoltzmannShannon,
    kappa = |_| Some(f64::INFINITY),
    proposal = Proposal::LogUniform { lo: 1e-3, hi: 1e3 },
    interior = 1.0,
    admissible = false
);

/// `αφ` for `α > 0`. Mirror maps satisfy `∇(αφ) = α∇φ` and
/// `∇(αφ)*(y) = ∇φ*(y/α)`; κ scales as `κ/√α`.
#[derive(Debug, Clone)]
pub struct Scaled {
    base: Arc<dyn Entropy>,
    alpha: f64,
}

impl Scaled {
    pub fn new(base: Arc<dyn Entropy>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameters(format!("scale must be positive, got {alpha}")));
        }
        Ok(Self { base, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Entropy for Scaled {
    fn name(&self) -> String {
        format!("{}*{}", self.alpha, self.base.name())
    }
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn kappa_declared(&self) -> Option<f64> {
        self.base.kappa_declared().map(|k| k / self.alpha.sqrt())
    }
    fn is_separable(&self) -> bool {
        self.base.is_separable()
    }
    fn interior_point(&self) -> DVector<f64> {
        self.base.interior_point()
    }
    fn proposal(&self) -> Proposal {
        self.base.proposal()
    }
    fn sampler_admissible(&self) -> bool {
        self.base.sampler_admissible()
    }
    fn contains(&self, x: &DVector<f64>) -> bool {
        self.base.contains(x)
    }
    fn dual_contains(&self, y: &DVector<f64>) -> bool {
        self.base.dual_contains(&(y / self.alpha))
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.alpha * self.base.value(x)?)
    }
    fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.base.grad(x)? * self.alpha)
    }
    fn grad_conjugate(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.base.grad_conjugate(&(y / self.alpha))
    }
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.base.hessian(x)? * self.alpha)
    }
    fn hessian_diagonal(&self, x: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        Ok(self.base.hessian_diagonal(x)?.map(|d| d * self.alpha))
    }
    fn hessian_sqrt(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.base.hessian_sqrt(x)? * self.alpha.sqrt())
    }
    fn hessian_sqrt_mul(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.base.hessian_sqrt_mul(x, v)? * self.alpha.sqrt())
    }
    fn hessian_norm(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.alpha * self.base.hessian_norm(x)?)
    }
}

/// The registered entropies with a computable mirror map: Euclidean and
/// Burg in two dimensions, the logit barrier on (0, 1) and the mixed
/// entropy with weights (0.3, 0.7).
pub fn register_table1_entropies() -> Vec<Arc<dyn Entropy>> {
    vec![
        Arc::new(Euclidean::new(2)),
        Arc::new(Burg::new(2)),
        Arc::new(LogitBarrier::new(1)),
        Arc::new(Mixed::new(vec![0.3, 0.7]).expect("valid weights")),
    ]
}

/// Parses an entropy name. `dim` is used for the names that do not carry
/// their own dimension.
///
/// Accepted forms: `euclidean`, `burg`, `logit`, `shannon`,
/// `mixed:a=0.3,0.7` (a single weight is broadcast to `dim`) and
/// `<alpha>*<name>` for a scaled entropy.
pub fn parse_entropy(spec: &str, dim: usize) -> Result<Arc<dyn Entropy>> {
    let spec = spec.trim();
    if dim == 0 {
        return Err(Error::InvalidParameters("entropy dimension must be positive".into()));
    }
    if let Some((alpha, rest)) = spec.split_once('*') {
        let alpha: f64 = alpha
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad scale in entropy `{spec}`")))?;
        let base = parse_entropy(rest, dim)?;
        return Ok(Arc::new(Scaled::new(base, alpha)?));
    }
    let (head, params) = match spec.split_once(':') {
        Some((h, p)) => (h.trim(), Some(p.trim())),
        None => (spec, None),
    };
    match head.to_ascii_lowercase().as_str() {
        "euclidean" => Ok(Arc::new(Euclidean::new(dim))),
        "burg" => Ok(Arc::new(Burg::new(dim))),
        "logit" => Ok(Arc::new(LogitBarrier::new(dim))),
        "shannon" | "boltzmann-shannon" => Ok(Arc::new(BoltzmannShannon::new(dim))),
        "mixed" => {
            let params = params.ok_or_else(|| Error::Parse("mixed entropy needs `a=`".into()))?;
            let list = params
                .strip_prefix("a=")
                .ok_or_else(|| Error::Parse(format!("expected `a=` in `{spec}`")))?;
            let mut a = list
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("bad weight in `{spec}`: {e}")))?;
            if a.len() == 1 && dim > 1 {
                a = vec![a[0]; dim];
            }
            Ok(Arc::new(Mixed::new(a)?))
        }
        other => Err(Error::Parse(format!("unknown entropy `{other}`"))),
    }
}

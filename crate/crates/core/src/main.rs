use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use lpcore::charpoly::DiskGrid;
use lpcore::experiments::{
    run_airy, run_bound_sweep, run_consistency, run_theorem32, run_theorem44, Experiment, ExperimentConfig,
};
use lpcore::interlace::{apply_kernel, sample_array};
use lpcore::lpfun::{eval_lp_with_bound, pv_eval, quantitative_bound, taylor_coeffs, taylor_coeffs_partition, DEFAULT_L};
use lpcore::models::{EnsembleSpec, LogGasDensity, Model, RngStream};
use lpcore::omega::{embed_weyl, OmegaPoint, WeylVector};
use lpcore::{Error, Result};

#[derive(Parser)]
#[command(name = "lpcore", version, about = "Laguerre-Pólya functions, random matrices and β-corners experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Gue,
    Ergodic,
    Gbe,
    Laguerre,
    InvLaguerre,
    HpCayley,
    LoggasHp,
    LoggasIl,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate E_ω at one point (`--z` or `--request`) or on the disk grid.
    Eval {
        /// JSON `{"omega":…,"z":[re,im],"eps":…}` or a path to one.
        #[arg(long)]
        request: Option<String>,
        /// Omega point as JSON or a path to a JSON file.
        #[arg(long)]
        omega: Option<String>,
        /// `re,im`
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Embed a Weyl vector into the parameter space.
    Embed {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        /// Divide by the length first.
        #[arg(long)]
        rescale: bool,
    },
    /// Taylor coefficients c_0 … c_J.
    Taylor {
        #[arg(long)]
        omega: String,
        #[arg(long, default_value_t = 10)]
        order: usize,
        /// Use the partition expansion instead of the recursion.
        #[arg(long)]
        partition: bool,
    },
    /// Principal-value partial products.
    Pv {
        #[arg(long)]
        omega: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
    },
    /// Quantitative bound at one point, or a random sweep when no points are given.
    Bound {
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        omega_t: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long)]
        l: Option<f64>,
    },
    /// Sample spectra from an ensemble.
    Sample {
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        /// Full ensemble spec as JSON or a path; overrides the model flags.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        eta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s_re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s_im: f64,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// One step of the corners kernel.
    Kernel {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
    },
    /// Interlacing array below a top row.
    Array {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        top: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
    },
    /// Ergodic-model convergence experiment.
    Thm32,
    /// Array stabilization experiment.
    Thm44,
    /// Edge experiment for the Gaussian β-ensemble.
    Airy,
    /// Consistency test of a β-family with a negative control.
    Consistency,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
    Criterion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::Bracketing { .. } | Error::StepSize { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Inline JSON or a path to a JSON file.
fn json_arg<T: for<'de> Deserialize<'de>>(s: &str) -> CliResult<T> {
    let t = s.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') {
        s.to_string()
    } else {
        std::fs::read_to_string(s).map_err(|e| usage(format!("cannot read {s}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid JSON: {e}")))
}

fn parse_z(s: &str) -> CliResult<Complex64> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| usage(format!("invalid z component `{p}`")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(usage(format!("z must be `re,im`, got `{s}`"))),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Runtime(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Deserialize)]
struct EvalRequest {
    omega: OmegaPoint,
    z: [f64; 2],
    #[serde(default)]
    eps: Option<f64>,
}

#[derive(Serialize)]
struct EvalResponse {
    value: [f64; 2],
    err_bound: f64,
}

#[derive(Serialize)]
struct GridRow {
    re_z: f64,
    im_z: f64,
    re_e: f64,
    im_e: f64,
    err_bound: f64,
}

#[derive(Serialize)]
struct SpectrumRow {
    trial: usize,
    index: usize,
    value: f64,
}

fn check_eps(bound: f64, eps: Option<f64>) -> CliResult<()> {
    match eps {
        Some(e) if bound > e => Err(Error::Unattainable { requested: e, achievable: bound }.into()),
        _ => Ok(()),
    }
}

fn experiment_config(cli: &Cli, kind: Experiment) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            if cfg.experiment != kind {
                return Err(usage(format!("config is for `{}`, not `{}`", cfg.experiment.name(), kind.name())));
            }
            cfg
        }
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(r) = cli.radius {
        cfg.radius = r;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn verdict(ok: bool, what: &str) -> CliResult<()> {
    eprintln!("{what}: {}", if ok { "pass" } else { "FAIL" });
    if ok { Ok(()) } else { Err(Failure::Criterion(format!("{what} criterion not met"))) }
}

fn run(cli: &Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(lpcore::experiments::DEFAULT_SEED);
    match &cli.cmd {
        Cmd::Eval { request, omega, z, eps } => {
            let (w, z, eps) = match (request, omega) {
                (Some(r), None) => {
                    let req: EvalRequest = json_arg(r)?;
                    (req.omega, Some(Complex64::new(req.z[0], req.z[1])), req.eps.or(*eps))
                }
                (None, Some(o)) => (json_arg(o)?, z.as_deref().map(parse_z).transpose()?, *eps),
                _ => return Err(usage("eval needs exactly one of --request or --omega")),
            };
            match z {
                Some(z) => {
                    let (v, b) = eval_lp_with_bound(&w, z);
                    check_eps(b, eps)?;
                    emit(out, &to_json(&EvalResponse { value: [v.re, v.im], err_bound: b }))
                }
                None => {
                    let grid = DiskGrid::new(cli.radius.unwrap_or(1.0))?;
                    let rows: Vec<GridRow> = grid
                        .points()
                        .iter()
                        .map(|z| {
                            let (v, b) = eval_lp_with_bound(&w, *z);
                            GridRow { re_z: z.re, im_z: z.im, re_e: v.re, im_e: v.im, err_bound: b }
                        })
                        .collect();
                    for r in &rows {
                        check_eps(r.err_bound, eps)?;
                    }
                    match cli.format {
                        Format::Csv => emit(out, &to_csv(&rows)?),
                        Format::Json => emit(out, &to_json(&rows)),
                    }
                }
            }
        }
        Cmd::Embed { x, rescale } => {
            let mut v = WeylVector::new(x.clone())?;
            if *rescale {
                v = v.scaled(1.0 / v.len() as f64)?;
            }
            emit(out, &to_json(&embed_weyl(&v)))
        }
        Cmd::Taylor { omega, order, partition } => {
            let w: OmegaPoint = json_arg(omega)?;
            let c = if *partition { taylor_coeffs_partition(&w, *order)? } else { taylor_coeffs(&w, *order) };
            match cli.format {
                Format::Csv => emit(out, &to_csv(c.iter().enumerate().map(|(j, v)| (j, *v)))?),
                Format::Json => emit(out, &to_json(&c)),
            }
        }
        Cmd::Pv { omega, z, radii } => {
            let w: OmegaPoint = json_arg(omega)?;
            emit(out, &to_json(&pv_eval(&w, parse_z(z)?, radii)?))
        }
        Cmd::Bound { omega, omega_t, z, l } => match (omega, omega_t) {
            (Some(a), Some(b)) => {
                let (w, wt): (OmegaPoint, OmegaPoint) = (json_arg(a)?, json_arg(b)?);
                let z = parse_z(z.as_deref().ok_or_else(|| usage("bound needs --z with two points"))?)?;
                let rhs = quantitative_bound(&w, &wt, z, l.unwrap_or(DEFAULT_L));
                let lhs = (eval_lp_with_bound(&w, z).0 - eval_lp_with_bound(&wt, z).0).norm();
                #[derive(Serialize)]
                struct Single {
                    lhs: f64,
                    rhs: f64,
                    holds: bool,
                }
                emit(out, &to_json(&Single { lhs, rhs, holds: lhs <= rhs }))?;
                verdict(lhs <= rhs, "bound")
            }
            (None, None) => {
                let cfg = experiment_config(cli, Experiment::Bound)?;
                let r = run_bound_sweep(&cfg)?;
                emit(cfg.out.as_deref(), &to_json(&r))?;
                verdict(r.pass, "bound sweep")
            }
            _ => Err(usage("bound needs both --omega and --omega-t, or neither for a sweep")),
        },
        Cmd::Sample { model, spec, n, beta, eta, s_re, s_im, omega, k } => {
            let spec = match (spec, model) {
                (Some(s), _) => json_arg::<EnsembleSpec>(s)?,
                (None, Some(m)) => {
                    let model = match m {
                        ModelKind::Gue => Model::Gue,
                        ModelKind::Ergodic => {
                            let w: OmegaPoint =
                                json_arg(omega.as_deref().ok_or_else(|| usage("ergodic model needs --omega"))?)?;
                            let k = k.unwrap_or(w.alpha_plus().len().max(w.alpha_minus().len()));
                            Model::Ergodic { omega: w, k }
                        }
                        ModelKind::Gbe => Model::Gbe { beta: *beta },
                        ModelKind::Laguerre => Model::Laguerre { beta: *beta, eta: *eta },
                        ModelKind::InvLaguerre => Model::InvLaguerre { beta: *beta, eta: *eta },
                        ModelKind::HpCayley => Model::HpCayley,
                        ModelKind::LoggasHp => Model::Loggas { target: LogGasDensity::Hp { s_re: *s_re, s_im: *s_im }, beta: *beta },
                        ModelKind::LoggasIl => Model::Loggas { target: LogGasDensity::Il { eta: *eta }, beta: *beta },
                    };
                    EnsembleSpec::new(model, *n)?
                }
                (None, None) => return Err(usage("sample needs --model or --spec")),
            };
            spec.validate()?;
            let stream = RngStream::new(seed);
            let trials = cli.trials.unwrap_or(1);
            let spectra: Vec<WeylVector> =
                (0..trials as u64).map(|t| spec.sample(stream.substream(t))).collect::<Result<_>>()?;
            eprintln!("seed {seed}");
            match cli.format {
                Format::Csv => emit(
                    out,
                    &to_csv(spectra.iter().enumerate().flat_map(|(t, s)| {
                        s.entries().iter().enumerate().map(move |(i, v)| SpectrumRow { trial: t, index: i, value: *v })
                    }))?,
                ),
                Format::Json => emit(out, &to_json(&spectra)),
            }
        }
        Cmd::Kernel { y, beta } => {
            let y = WeylVector::new(y.clone())?;
            emit(out, &to_json(&apply_kernel(&y, *beta, RngStream::new(seed))?))
        }
        Cmd::Array { top, beta } => {
            let top = WeylVector::new(top.clone())?;
            emit(out, &to_json(&sample_array(&top, *beta, RngStream::new(seed))?))
        }
        Cmd::Thm32 | Cmd::Thm44 => {
            let kind = if matches!(cli.cmd, Cmd::Thm32) { Experiment::Thm32 } else { Experiment::Thm44 };
            let cfg = experiment_config(cli, kind)?;
            let r = if kind == Experiment::Thm32 { run_theorem32(&cfg)? } else { run_theorem44(&cfg)? };
            let text = match cli.format {
                Format::Csv => r.to_csv()?,
                Format::Json => to_json(&r),
            };
            emit(cfg.out.as_deref(), &text)?;
            for (n, q) in r.points.iter().zip(&r.quartiles) {
                eprintln!("N={n:>6}  q25={:.6e}  median={:.6e}  q75={:.6e}", q.q25, q.median, q.q75);
            }
            eprintln!("per-trial decreasing fraction {:.3}", r.per_trial_fraction);
            verdict(r.converged, kind.name())
        }
        Cmd::Airy => {
            let cfg = experiment_config(cli, Experiment::Airy)?;
            let r = run_airy(&cfg)?;
            let text = match cli.format {
                Format::Csv => r.to_csv()?,
                Format::Json => to_json(&r),
            };
            emit(cfg.out.as_deref(), &text)?;
            eprintln!("exponent {:.4}  drift {:.4}", r.exponent, r.drift);
            verdict(r.pass, "airy")
        }
        Cmd::Consistency => {
            let cfg = experiment_config(cli, Experiment::Consistency)?;
            let r = run_consistency(&cfg)?;
            emit(cfg.out.as_deref(), &to_json(&r))?;
            verdict(r.pass, "consistency")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Criterion(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

//! `lsib`: label smoothing and the information bottleneck, from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod spec;
mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use lsib::curve::{empirical_curve, IbCurve};
use lsib::dataset::FactorRole;
use lsib::dist::info_point;
use lsib::objectives::{ls_minimizer_channel, SmoothingConfig};
use lsib::optim::AdamConfig;
use lsib::probe::{nuisance_report, Activation, MlpConfig, ProbeSetup};
use lsib::solver::{ls_theoretical_points, margin_over_ls, sweep_beta, SolverConfig};
use lsib::trainer::{train_tabular, verify_propositions, TrainConfig, TrainLoss};
use lsib::{Dataset, Error, InfoPoint};

use spec::{generate, generate_labels, parse_grid, Generated, GRAMMAR};
use svg::{Plot, Style};

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "lsib",
    version,
    about = "Label smoothing as an information bottleneck: curves, sweeps, solvers and probes",
    after_help = GRAMMAR,
    after_long_help = format!("{GRAMMAR}\n\nExit codes: 0 ok, 1 verification failed, 2 invalid input or \
        precondition, 3 optimizer did not converge, 4 I/O error.")
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Seed for generators and optimizers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Units for reported information quantities.
    #[arg(long, global = true, value_enum, default_value_t = Units::Nats)]
    units: Units,
    /// Output CSV path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Optional SVG plot path.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Tolerance: pass threshold for `verify`, gradient threshold for `solve`.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Units {
    Nats,
    Bits,
}

impl Units {
    fn factor(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Dataset CSV with header x_id,y,count.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Generator spec, see below.
    #[arg(long)]
    gen: Option<String>,
}

impl Source {
    fn load(&self, seed: u64) -> lsib::Result<Dataset> {
        match (&self.data, &self.gen) {
            (Some(path), _) => Dataset::load(path).map_err(|e| match e {
                Error::Io(io) => Error::Io(std::io::Error::new(
                    io.kind(),
                    format!("{}: {io}", path.display()),
                )),
                other => other,
            }),
            (None, Some(g)) => generate_labels(g, seed),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMode {
    #[value(alias = "closed_form")]
    ClosedForm,
    Trained,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Nuisance,
    Redundant,
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    Relu,
    Tanh,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train CE/LS models over an α grid and check them against the IB curve.
    Verify {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "0:0.9:0.1")]
        alphas: String,
    },
    /// Information points of label-smoothing channels over an α grid.
    SweepAlpha {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "0:0.9:0.1")]
        alphas: String,
        #[arg(long, value_enum, default_value_t = SweepMode::ClosedForm)]
        mode: SweepMode,
    },
    /// Minimize the IB Lagrangian directly over a β grid.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "0:1:0.1")]
        betas: String,
        /// Representation alphabet size (defaults to the class count).
        #[arg(long)]
        t_size: Option<usize>,
        #[arg(long, default_value_t = 50_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-2)]
        lr: f64,
    },
    /// Sample the empirical IB curve.
    Curve {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Right end of the I(X;T) axis in nats (default ln of the input count).
        #[arg(long)]
        x_max: Option<f64>,
    },
    /// Probe trained MLPs for a nuisance or redundant factor.
    Probe {
        #[arg(long, value_enum)]
        role: RoleArg,
        #[arg(long, default_value = "0,0.6")]
        alphas: String,
        /// Number of seeds, counting up from --seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Aggregate CSV path.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Hidden width [default: 32].
        #[arg(long)]
        hidden: Option<usize>,
        /// Hidden activation [default: tanh].
        #[arg(long, value_enum)]
        activation: Option<ActivationArg>,
        /// Training epochs [default: 60].
        #[arg(long)]
        epochs: Option<usize>,
        /// Minibatch size [default: 64].
        #[arg(long)]
        batch: Option<usize>,
        /// Adam learning rate for the MLP [default: 0.01].
        #[arg(long)]
        lr: Option<f64>,
        /// Std of first-layer weights [default: 0.1].
        #[arg(long)]
        init_scale: Option<f64>,
        /// Values of the informative factor [default: 64].
        #[arg(long)]
        nf: Option<usize>,
        /// Values of the second factor [default: 8].
        #[arg(long)]
        ns: Option<usize>,
        /// Class count [default: 32].
        #[arg(long)]
        k: Option<usize>,
        /// Rows per seed [default: 4000].
        #[arg(long)]
        rows: Option<usize>,
        /// Redraw probability of a redundant factor [default: 0.2].
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Write a generated dataset as CSV.
    Gen {
        #[arg(long = "gen")]
        spec: String,
    },
    /// Summary statistics of a dataset.
    Info {
        #[command(flatten)]
        source: Source,
    },
}

/// Comment lines heading every CSV the tool writes.
fn manifest(common: &Common) -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    format!(
        "# lsib {}\n# units={}\n# seed={}\n# args={}\n",
        env!("CARGO_PKG_VERSION"),
        common.units.name(),
        common.seed,
        args.join(" ")
    )
}

fn write_out(path: Option<&Path>, text: &str) -> lsib::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn emit(common: &Common, body: &[u8]) -> lsib::Result<()> {
    let mut text = manifest(common);
    text.push_str(&String::from_utf8_lossy(body));
    write_out(common.out.as_deref(), &text)
}

fn emit_svg(common: &Common, plot: impl FnOnce() -> Plot) -> lsib::Result<()> {
    if let Some(path) = &common.svg {
        std::fs::write(path, plot().render())?;
    }
    Ok(())
}

fn xy(p: InfoPoint, f: f64) -> (f64, f64) {
    (p.i_xt * f, p.i_ty * f)
}

fn curve_series(plot: &mut Plot, curve: &IbCurve, x_max: f64, f: f64) {
    let pts = curve
        .sample(x_max, 64)
        .into_iter()
        .map(|p| xy(p, f))
        .collect();
    plot.add("empirical IB curve", "black", Style::Line, pts);
}

fn dpi_series(plot: &mut Plot, x_max: f64, f: f64) {
    plot.add(
        "I(T;Y) = I(X;T)",
        "gray",
        Style::Dashed,
        vec![(0.0, 0.0), (x_max * f, x_max * f)],
    );
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Csv(c) if c.is_io_error() => EXIT_IO,
        Error::Diverged { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

fn run(cli: Cli) -> lsib::Result<u8> {
    let common = &cli.common;
    let f = common.units.factor();
    let unit = common.units.name();
    match cli.cmd {
        Cmd::Verify { source, alphas } => {
            let d = source.load(common.seed)?;
            let alphas = parse_grid(&alphas)?;
            let tol = common.tol.unwrap_or(1e-3);
            let base = TrainConfig {
                seed: common.seed,
                ..TrainConfig::new(TrainLoss::CrossEntropy)
            };
            let report = verify_propositions(&d, &alphas, tol, &base)?;
            let mut body = Vec::new();
            report.write_csv(&mut body, f)?;
            emit(common, &body)?;
            eprint!("{}", report.to_table(f, unit));
            emit_svg(common, || {
                let mut plot = Plot::new("Trained label-smoothing points", unit);
                let x_max = (d.n_inputs() as f64).ln().max(report.h_y);
                curve_series(
                    &mut plot,
                    &IbCurve::new(report.h_y).expect("finite entropy"),
                    x_max,
                    f,
                );
                plot.add(
                    "closed form",
                    "steelblue",
                    Style::Dots,
                    report.rows.iter().map(|r| xy(r.theory, f)).collect(),
                );
                plot.add(
                    "trained",
                    "crimson",
                    Style::Dots,
                    report.rows.iter().map(|r| xy(r.point, f)).collect(),
                );
                plot
            })?;
            Ok(if report.all_passed() {
                0
            } else if report.rows.iter().any(|r| !r.converged) {
                EXIT_NO_CONVERGENCE
            } else {
                EXIT_FAILED_CHECK
            })
        }
        Cmd::SweepAlpha {
            source,
            alphas,
            mode,
        } => {
            let d = source.load(common.seed)?;
            let alphas = parse_grid(&alphas)?;
            let rows: Vec<(f64, InfoPoint, bool)> = match mode {
                SweepMode::ClosedForm => alphas
                    .iter()
                    .map(|&a| {
                        let c =
                            ls_minimizer_channel(&d, &SmoothingConfig::uniform(a, d.n_classes())?)?;
                        Ok((a, info_point(&d, &c)?, true))
                    })
                    .collect::<lsib::Result<_>>()?,
                SweepMode::Trained => alphas
                    .par_iter()
                    .map(|&a| {
                        let loss = if a == 0.0 {
                            TrainLoss::CrossEntropy
                        } else {
                            TrainLoss::label_smoothing(a, d.n_classes())?
                        };
                        let h = train_tabular(
                            &d,
                            &TrainConfig {
                                seed: common.seed,
                                ..TrainConfig::new(loss)
                            },
                        )?;
                        Ok((a, h.point, h.converged))
                    })
                    .collect::<lsib::Result<_>>()?,
            };
            let mut body = String::from("alpha,i_xt,i_ty\n");
            for (a, p, _) in &rows {
                body.push_str(&format!("{a:?},{:?},{:?}\n", p.i_xt * f, p.i_ty * f));
            }
            emit(common, body.as_bytes())?;
            emit_svg(common, || {
                let mut plot = Plot::new("Label smoothing in the information plane", unit);
                let x_max = (d.n_inputs() as f64).ln();
                match empirical_curve(&d) {
                    Ok(curve) => curve_series(&mut plot, &curve, x_max, f),
                    Err(_) => dpi_series(&mut plot, x_max.min(d.entropy_y()), f),
                }
                plot.add(
                    "label smoothing",
                    "crimson",
                    Style::Dots,
                    rows.iter().map(|r| xy(r.1, f)).collect(),
                );
                plot
            })?;
            let stalled: Vec<String> = rows
                .iter()
                .filter(|r| !r.2)
                .map(|r| format!("{:?}", r.0))
                .collect();
            if stalled.is_empty() {
                Ok(0)
            } else {
                eprintln!("training did not converge for alpha {}", stalled.join(", "));
                Ok(EXIT_NO_CONVERGENCE)
            }
        }
        Cmd::Solve {
            source,
            betas,
            t_size,
            max_iters,
            lr,
        } => {
            let d = source.load(common.seed)?;
            let betas = parse_grid(&betas)?;
            let cfg = SolverConfig {
                t_size,
                max_iters,
                grad_tol: common.tol.unwrap_or(SolverConfig::default().grad_tol),
                adam: AdamConfig {
                    learning_rate: lr,
                    ..AdamConfig::default()
                },
                seed: common.seed,
                ..SolverConfig::default()
            };
            let results = sweep_beta(&d, &betas, &cfg);
            let mut body = String::from("beta,i_xt,i_ty,objective,iters,converged\n");
            let mut code = 0;
            let mut solved = Vec::new();
            for (beta, r) in betas.iter().zip(results) {
                match r {
                    Ok(s) => {
                        body.push_str(&format!(
                            "{beta:?},{:?},{:?},{:?},{},{}\n",
                            s.point.i_xt * f,
                            s.point.i_ty * f,
                            s.objective * f,
                            s.iterations,
                            s.converged
                        ));
                        if !s.converged {
                            code = code.max(EXIT_NO_CONVERGENCE);
                        }
                        solved.push(s.point);
                    }
                    Err(e) => {
                        eprintln!("beta {beta:?}: {e}");
                        code = code.max(exit_code(&e));
                    }
                }
            }
            emit(common, body.as_bytes())?;
            let ls_alphas: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
            let ls: Vec<InfoPoint> = ls_theoretical_points(&d, &ls_alphas)?
                .into_iter()
                .map(|p| p.1)
                .collect();
            if let Some(best) = solved
                .iter()
                .filter_map(|p| margin_over_ls(p, &ls))
                .max_by(f64::total_cmp)
            {
                eprintln!(
                    "largest I(T;Y) margin over label smoothing: {:.6} {unit}",
                    best * f
                );
            }
            emit_svg(common, || {
                let mut plot = Plot::new("IB Lagrangian solutions", unit);
                let x_max = solved
                    .iter()
                    .chain(&ls)
                    .map(|p| p.i_xt)
                    .fold(d.entropy_y(), f64::max);
                dpi_series(&mut plot, x_max, f);
                if let Ok(curve) = empirical_curve(&d) {
                    curve_series(&mut plot, &curve, x_max, f);
                }
                plot.add(
                    "label smoothing (theory)",
                    "steelblue",
                    Style::Line,
                    ls.iter().map(|&p| xy(p, f)).collect(),
                );
                plot.add(
                    "Lagrangian optimum",
                    "crimson",
                    Style::Dots,
                    solved.iter().map(|&p| xy(p, f)).collect(),
                );
                plot
            })?;
            Ok(code)
        }
        Cmd::Curve {
            source,
            points,
            x_max,
        } => {
            let d = source.load(common.seed)?;
            let curve = empirical_curve(&d)?;
            let x_max = x_max.unwrap_or_else(|| (d.n_inputs() as f64).ln().max(curve.h_y()));
            let mut body = Vec::new();
            curve.write_csv(&mut body, x_max, points, f)?;
            emit(common, &body)?;
            emit_svg(common, || {
                let mut plot = Plot::new("Empirical IB curve", unit);
                dpi_series(&mut plot, x_max, f);
                curve_series(&mut plot, &curve, x_max, f);
                plot
            })?;
            Ok(0)
        }
        Cmd::Probe {
            role,
            alphas,
            seeds,
            summary,
            hidden,
            activation,
            epochs,
            batch,
            lr,
            init_scale,
            nf,
            ns,
            k,
            rows,
            noise,
        } => {
            let role = match role {
                RoleArg::Nuisance => FactorRole::Nuisance,
                RoleArg::Redundant => FactorRole::Redundant,
            };
            let alphas = parse_grid(&alphas)?;
            let seeds: Vec<u64> = (0..seeds).map(|i| common.seed.wrapping_add(i)).collect();
            let mut setup = ProbeSetup::default();
            let mlp: &mut MlpConfig = &mut setup.mlp;
            if let Some(v) = hidden {
                mlp.hidden_width = v;
            }
            if let Some(v) = activation {
                mlp.activation = match v {
                    ActivationArg::Relu => Activation::Relu,
                    ActivationArg::Tanh => Activation::Tanh,
                };
            }
            if let Some(v) = epochs {
                mlp.epochs = v;
            }
            if let Some(v) = batch {
                mlp.batch_size = v;
            }
            if let Some(v) = lr {
                mlp.adam.learning_rate = v;
            }
            if let Some(v) = init_scale {
                mlp.init_scale = v;
            }
            setup.n_informative = nf.unwrap_or(setup.n_informative);
            setup.n_second = ns.unwrap_or(setup.n_second);
            setup.n_classes = k.unwrap_or(setup.n_classes);
            setup.n_rows = rows.unwrap_or(setup.n_rows);
            setup.redundant_noise = noise.unwrap_or(setup.redundant_noise);

            let report = nuisance_report(role, &alphas, &seeds, &setup)?;
            let mut body = Vec::new();
            report.write_runs_csv(&mut body)?;
            emit(common, &body)?;
            if let Some(path) = &summary {
                let mut agg = Vec::new();
                report.write_summary_csv(&mut agg)?;
                let mut text = manifest(common);
                text.push_str(&String::from_utf8_lossy(&agg));
                write_out(Some(path), &text)?;
            }
            for run in &report.runs {
                if let Err(e) = &run.result {
                    eprintln!("alpha {:?} seed {}: {e}", run.alpha, run.seed);
                }
            }
            eprintln!(
                "{:>6} {:>4} {:>18} {:>18}",
                "alpha", "n", "probe acc", "target acc"
            );
            for s in &report.summary {
                eprintln!(
                    "{:>6} {:>4} {:>9.4} ± {:<6.4} {:>9.4} ± {:<6.4}",
                    s.alpha, s.n_ok, s.probe_mean, s.probe_sd, s.target_mean, s.target_sd
                );
            }
            eprintln!("spearman(alpha, probe acc) = {:.3}", report.trend);
            Ok(if report.runs.iter().any(|r| r.result.is_err()) {
                EXIT_NO_CONVERGENCE
            } else {
                0
            })
        }
        Cmd::Gen { spec } => {
            let mut body = Vec::new();
            match generate(&spec, common.seed)? {
                Generated::Labels(d) => d.write_csv(&mut body)?,
                Generated::Features(fd) => fd.write_csv(&mut body)?,
            }
            emit(common, &body)?;
            Ok(0)
        }
        Cmd::Info { source } => {
            let d = source.load(common.seed)?;
            let contradicting = d.detect_contradictions();
            let ids: Vec<&str> = contradicting
                .iter()
                .map(|&x| d.x_ids()[x].as_str())
                .collect();
            let mut body = String::from("key,value\n");
            body.push_str(&format!("inputs,{}\n", d.n_inputs()));
            body.push_str(&format!("classes,{}\n", d.n_classes()));
            body.push_str(&format!("samples,{}\n", d.total()));
            body.push_str(&format!("h_y,{:?}\n", d.entropy_y() * f));
            body.push_str(&format!(
                "h_y_given_x,{:?}\n",
                d.conditional_entropy_y() * f
            ));
            body.push_str(&format!("contradicting_inputs,{}\n", contradicting.len()));
            if !ids.is_empty() {
                body.push_str(&format!("contradicting_ids,{}\n", ids.join(" ")));
            }
            emit(common, body.as_bytes())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! Training an "infinitely flexible" model: one free softmax row per unique
//! input, so any channel is representable. Used to confirm that gradient
//! training lands on the closed-form optima.

use std::fmt::Write as _;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::{softmax_into, Channel};
use crate::curve::{check_feasible, empirical_curve, Feasibility};
use crate::dataset::Dataset;
use crate::dist::{entropy_of, info_point, kl_of, InfoPoint};
use crate::error::{Error, Result};
use crate::objectives::{optimal_ls_channel, SmoothingConfig};
use crate::optim::{Adam, AdamConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum TrainLoss {
    CrossEntropy,
    LabelSmoothing(SmoothingConfig),
    /// Cross entropy minus `beta` times the output entropy.
    ConfidencePenalty {
        beta: f64,
    },
}

impl TrainLoss {
    pub fn label_smoothing(alpha: f64, n_classes: usize) -> Result<Self> {
        Ok(TrainLoss::LabelSmoothing(SmoothingConfig::uniform(
            alpha, n_classes,
        )?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: TrainLoss,
    pub adam: AdamConfig,
    pub max_iters: usize,
    /// Stop when the loss is within this of its known minimum (CE and LS).
    pub loss_tol: f64,
    /// Gradient inf-norm threshold, used when no minimum is known (CP).
    pub grad_tol: f64,
    pub init_sigma: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(loss: TrainLoss) -> Self {
        TrainConfig {
            loss,
            adam: AdamConfig::default(),
            max_iters: 200_000,
            loss_tol: 1e-10,
            grad_tol: 1e-9,
            init_sigma: 0.01,
            seed: 0,
        }
    }

    fn validate(&self, d: &Dataset) -> Result<()> {
        if !(self.loss_tol > 0.0) || !(self.grad_tol > 0.0) {
            return Err(Error::Validation(
                "loss_tol and grad_tol must be positive".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::Validation("max_iters must be at least 1".into()));
        }
        match &self.loss {
            TrainLoss::LabelSmoothing(cfg) if cfg.r().len() != d.n_classes() => Err(Error::Shape {
                what: "smoothing distribution vs classes",
                expected: d.n_classes(),
                got: cfg.r().len(),
            }),
            TrainLoss::ConfidencePenalty { beta } if !(*beta >= 0.0 && beta.is_finite()) => {
                Err(Error::Validation(format!("beta must be >= 0, got {beta}")))
            }
            _ => self.adam.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub channel: Channel,
    /// `(iteration, loss)`, sampled every 100 iterations plus the endpoints.
    pub loss_trace: Vec<(usize, f64)>,
    pub point: InfoPoint,
    pub iterations: usize,
    pub converged: bool,
}

impl TrainHistory {
    pub fn initial_loss(&self) -> f64 {
        self.loss_trace.first().map_or(f64::NAN, |t| t.1)
    }

    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().map_or(f64::NAN, |t| t.1)
    }
}

/// Per-input training signal: label frequencies and, for CE/LS, the
/// averaged target row.
struct Targets {
    px: Vec<f64>,
    label_freq: Vec<Vec<f64>>,
    mean_target: Option<Vec<Vec<f64>>>,
}

impl Targets {
    fn new(d: &Dataset, loss: &TrainLoss) -> Self {
        let k = d.n_classes();
        let label_freq: Vec<Vec<f64>> = (0..d.n_inputs())
            .map(|x| {
                let nx = d.x_count(x) as f64;
                let mut f = vec![0.0; k];
                for &(y, c) in d.entries(x) {
                    f[y] = c as f64 / nx;
                }
                f
            })
            .collect();
        let mean_target = match loss {
            TrainLoss::CrossEntropy => Some(label_freq.clone()),
            TrainLoss::LabelSmoothing(cfg) => {
                let a = cfg.alpha();
                Some(
                    label_freq
                        .iter()
                        .map(|f| {
                            f.iter()
                                .zip(cfg.r().probs())
                                .map(|(&fy, &r)| (1.0 - a) * fy + a * r)
                                .collect()
                        })
                        .collect(),
                )
            }
            TrainLoss::ConfidencePenalty { .. } => None,
        };
        Targets {
            px: d.p_x(),
            label_freq,
            mean_target,
        }
    }
}

const TRACE_STRIDE: usize = 100;

/// Loss value, distance to the known minimum (if any) and logit gradient.
fn evaluate(
    targets: &Targets,
    loss: &TrainLoss,
    probs: &[f64],
    k: usize,
    grad: &mut [f64],
) -> (f64, Option<f64>) {
    let mut value = 0.0;
    let mut gap = targets.mean_target.as_ref().map(|_| 0.0);
    for x in 0..targets.px.len() {
        let c = &probs[x * k..(x + 1) * k];
        let g = &mut grad[x * k..(x + 1) * k];
        let px = targets.px[x];
        match (&targets.mean_target, loss) {
            (Some(mt), _) => {
                let q = &mt[x];
                let mut h = 0.0;
                for t in 0..k {
                    if q[t] > 0.0 {
                        h -= q[t] * c[t].ln();
                    }
                    g[t] = px * (c[t] - q[t]);
                }
                value += px * h;
                if let Some(gap) = gap.as_mut() {
                    *gap += px * kl_of(q, c);
                }
            }
            (None, TrainLoss::ConfidencePenalty { beta }) => {
                let f = &targets.label_freq[x];
                let h = entropy_of(c);
                let mut nll = 0.0;
                for t in 0..k {
                    if f[t] > 0.0 {
                        nll -= f[t] * c[t].ln();
                    }
                    let ln_c = if c[t] > 0.0 { c[t].ln() } else { 0.0 };
                    g[t] = px * ((c[t] - f[t]) + beta * c[t] * (ln_c + h));
                }
                value += px * (nll - beta * h);
            }
            (None, _) => unreachable!("targets exist for CE and LS"),
        }
    }
    (value, gap)
}

pub fn train_tabular(d: &Dataset, cfg: &TrainConfig) -> Result<TrainHistory> {
    cfg.validate(d)?;
    let k = d.n_classes();
    let n = d.n_inputs() * k;
    let normal = Normal::new(0.0, cfg.init_sigma)
        .map_err(|e| Error::Validation(format!("init sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut logits: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let targets = Targets::new(d, &cfg.loss);
    let mut adam = Adam::new(cfg.adam, n);
    let mut probs = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut trace = Vec::new();
    let converged;
    let mut iterations = 0;

    loop {
        for (out, row) in probs.chunks_mut(k).zip(logits.chunks(k)) {
            softmax_into(row, out);
        }
        let (value, gap) = evaluate(&targets, &cfg.loss, &probs, k, &mut grad);
        if !value.is_finite() {
            return Err(Error::Diverged {
                iteration: iterations,
                msg: format!("loss {value}; trace {trace:?}"),
                last_finite: None,
            });
        }
        let done = match gap {
            Some(gap) => gap <= cfg.loss_tol,
            None => grad.iter().fold(0.0f64, |a, g| a.max(g.abs())) <= cfg.grad_tol,
        };
        if iterations % TRACE_STRIDE == 0 || done || iterations == cfg.max_iters {
            trace.push((iterations, value));
        }
        if done || iterations == cfg.max_iters {
            converged = done;
            break;
        }
        adam.step(&mut logits, &grad);
        iterations += 1;
    }
    let channel = Channel::softmax(&logits, k)?;
    let point = info_point(d, &channel)?;
    Ok(TrainHistory {
        channel,
        loss_trace: trace,
        point,
        iterations,
        converged,
    })
}

/// One α of a verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub alpha: f64,
    pub point: InfoPoint,
    /// The closed-form point, which lies on the identity line.
    pub theory: InfoPoint,
    /// Largest component-wise distance to the closed-form point.
    pub gap: f64,
    pub on_curve: bool,
    pub converged: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub tol: f64,
    pub h_y: f64,
    pub rows: Vec<VerifyRow>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// CSV `alpha,i_xt,i_ty,theory_i,gap,pass`, information values scaled
    /// by `unit_factor`.
    pub fn write_csv<W: Write>(&self, mut out: W, unit_factor: f64) -> Result<()> {
        writeln!(out, "alpha,i_xt,i_ty,theory_i,gap,pass")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{}",
                r.alpha,
                r.point.i_xt * unit_factor,
                r.point.i_ty * unit_factor,
                r.theory.i_xt * unit_factor,
                r.gap * unit_factor,
                r.pass
            )?;
        }
        Ok(())
    }

    pub fn to_table(&self, unit_factor: f64, unit: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6} {:>12} {:>12} {:>12} {:>10}  result   (tol {:e}, H(Y) = {:.6} {unit})",
            "alpha",
            "I(X;T)",
            "I(T;Y)",
            "theory",
            "gap",
            self.tol,
            self.h_y * unit_factor
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>6.3} {:>12.6} {:>12.6} {:>12.6} {:>10.2e}  {}",
                r.alpha,
                r.point.i_xt * unit_factor,
                r.point.i_ty * unit_factor,
                r.theory.i_xt * unit_factor,
                r.gap * unit_factor,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        s
    }
}

/// Trains one tabular model per α (α = 0 is plain CE) and compares each
/// trained point with the empirical IB curve and the closed-form optimum.
pub fn verify_propositions(
    d: &Dataset,
    alphas: &[f64],
    tol: f64,
    base: &TrainConfig,
) -> Result<VerificationReport> {
    d.require_no_contradictions("proposition verification")?;
    let curve = empirical_curve(d)?;
    let rows = alphas
        .iter()
        .map(|&alpha| {
            let smoothing = SmoothingConfig::uniform(alpha, d.n_classes())?;
            let theory = info_point(d, &optimal_ls_channel(d, &smoothing)?)?;
            let loss = if alpha == 0.0 {
                TrainLoss::CrossEntropy
            } else {
                TrainLoss::LabelSmoothing(smoothing)
            };
            let hist = train_tabular(
                d,
                &TrainConfig {
                    loss,
                    ..base.clone()
                },
            )?;
            let point = hist.point;
            let gap = (point.i_xt - theory.i_xt)
                .abs()
                .max((point.i_ty - theory.i_ty).abs());
            let on_curve = check_feasible(&point, &curve, tol)? == Feasibility::OnCurve;
            Ok(VerifyRow {
                alpha,
                point,
                theory,
                gap,
                on_curve,
                converged: hist.converged,
                pass: on_curve && gap <= tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport {
        tol,
        h_y: curve.h_y(),
        rows,
    })
}

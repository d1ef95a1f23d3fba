//! Direct minimization of the empirical IB Lagrangian `-Î(T;Y) + β·Î(X;T)`
//! over channels parameterized as one softmax logit row per unique input.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::channel::{softmax_into, Channel};
use crate::dataset::Dataset;
use crate::dist::{info_point, InfoPoint};
use crate::error::{Error, Result};
use crate::objectives::{ls_minimizer_channel, SmoothingConfig};
use crate::optim::{Adam, AdamConfig};

/// `-Î(T;Y) + β·Î(X;T)` on the empirical joint.
pub fn lagrangian_value(d: &Dataset, c: &Channel, beta: f64) -> Result<f64> {
    let p = info_point(d, c)?;
    Ok(-p.i_ty + beta * p.i_xt)
}

#[inline]
fn safe_ln(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        0.0
    }
}

/// Dataset marginals cached for repeated gradient evaluations.
struct Workspace<'a> {
    d: &'a Dataset,
    px: Vec<f64>,
    py: Vec<f64>,
    t_size: usize,
    probs: Vec<f64>,
    pt: Vec<f64>,
    pty: Vec<f64>,
    grad_c: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(d: &'a Dataset, t_size: usize) -> Self {
        let n = d.n_inputs() * t_size;
        Workspace {
            d,
            px: d.p_x(),
            py: d.p_y(),
            t_size,
            probs: vec![0.0; n],
            pt: vec![0.0; t_size],
            pty: vec![0.0; t_size * d.n_classes()],
            grad_c: vec![0.0; n],
        }
    }

    /// Fills `grad` with the logit gradient and returns the objective.
    fn evaluate(&mut self, logits: &[f64], beta: f64, grad: &mut [f64]) -> f64 {
        let m = self.t_size;
        let k = self.d.n_classes();
        let n = self.d.total() as f64;
        for (out, row) in self.probs.chunks_mut(m).zip(logits.chunks(m)) {
            softmax_into(row, out);
        }

        self.pt.iter_mut().for_each(|v| *v = 0.0);
        self.pty.iter_mut().for_each(|v| *v = 0.0);
        for (x, row) in self.probs.chunks(m).enumerate() {
            for (t, &c) in row.iter().enumerate() {
                self.pt[t] += self.px[x] * c;
            }
            for &(y, count) in self.d.entries(x) {
                let pxy = count as f64 / n;
                for (t, &c) in row.iter().enumerate() {
                    self.pty[t * k + y] += pxy * c;
                }
            }
        }
        let ln_pt: Vec<f64> = self.pt.iter().map(|&v| safe_ln(v)).collect();
        // ln p(t|y)
        let ln_pt_y: Vec<f64> = self
            .pty
            .iter()
            .enumerate()
            .map(|(i, &v)| safe_ln(v / self.py[i % k]))
            .collect();

        // objective: -I(T;Y) + beta I(X;T)
        let mut i_xt = 0.0;
        let mut i_ty = 0.0;
        for (x, row) in self.probs.chunks(m).enumerate() {
            for (t, &c) in row.iter().enumerate() {
                if c > 0.0 {
                    i_xt += self.px[x] * c * (c.ln() - ln_pt[t]);
                }
            }
        }
        for t in 0..m {
            for y in 0..k {
                let v = self.pty[t * k + y];
                if v > 0.0 {
                    i_ty += v * (ln_pt_y[t * k + y] - ln_pt[t]);
                }
            }
        }

        // dL/dc(t|x) = -(Σ_y p(x,y) ln p(t|y) - p(x) ln p(t)) + β p(x) (ln c(t|x) - ln p(t))
        for (x, row) in self.probs.chunks(m).enumerate() {
            let g = &mut self.grad_c[x * m..(x + 1) * m];
            for (t, gt) in g.iter_mut().enumerate() {
                let mut suff = -self.px[x] * ln_pt[t];
                for &(y, count) in self.d.entries(x) {
                    suff += count as f64 / n * ln_pt_y[t * k + y];
                }
                let comp = self.px[x] * (safe_ln(row[t]) - ln_pt[t]);
                *gt = -suff + beta * comp;
            }
        }
        // chain through the row softmax
        for ((gz, gc), c) in grad
            .chunks_mut(m)
            .zip(self.grad_c.chunks(m))
            .zip(self.probs.chunks(m))
        {
            let mean: f64 = gc.iter().zip(c).map(|(a, b)| a * b).sum();
            for t in 0..m {
                gz[t] = c[t] * (gc[t] - mean);
            }
        }
        -i_ty + beta * i_xt
    }
}

fn check_logits(d: &Dataset, logits: &[f64], t_size: usize) -> Result<()> {
    if t_size == 0 || logits.len() != d.n_inputs() * t_size {
        return Err(Error::Shape {
            what: "logit matrix",
            expected: d.n_inputs() * t_size,
            got: logits.len(),
        });
    }
    if let Some(bad) = logits.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite logit {bad}")));
    }
    Ok(())
}

/// Gradient of the Lagrangian with respect to a row-major logit matrix with
/// `t_size` columns.
pub fn lagrangian_grad(d: &Dataset, logits: &[f64], t_size: usize, beta: f64) -> Result<Vec<f64>> {
    check_logits(d, logits, t_size)?;
    let mut ws = Workspace::new(d, t_size);
    let mut grad = vec![0.0; logits.len()];
    ws.evaluate(logits, beta, &mut grad);
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zeros,
    Gaussian { sigma: f64 },
    FromChannel(Channel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub beta: f64,
    /// Representation alphabet size; `None` uses the number of classes.
    pub t_size: Option<usize>,
    pub init: Init,
    pub adam: AdamConfig,
    pub max_iters: usize,
    /// Stop once the gradient's largest absolute entry is at most this.
    pub grad_tol: f64,
    pub seed: u64,
    /// Trace stride in iterations; the first and last states are always kept.
    pub trace_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: 0.0,
            t_size: None,
            init: Init::Gaussian { sigma: 0.01 },
            adam: AdamConfig::default(),
            max_iters: 50_000,
            grad_tol: 1e-7,
            seed: 0,
            trace_every: 100,
        }
    }
}

impl SolverConfig {
    pub fn with_beta(&self, beta: f64) -> Self {
        SolverConfig {
            beta,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Validation(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if self.t_size == Some(0) {
            return Err(Error::Validation("t_size must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Validation("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Validation("grad_tol must be positive".into()));
        }
        if let Init::Gaussian { sigma } = self.init {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::Validation(format!("invalid init sigma {sigma}")));
            }
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
    pub point: InfoPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub beta: f64,
    pub channel: Channel,
    pub objective: f64,
    pub point: InfoPoint,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

fn initial_logits(d: &Dataset, cfg: &SolverConfig, t_size: usize) -> Result<Vec<f64>> {
    let n = d.n_inputs() * t_size;
    match &cfg.init {
        Init::Zeros => Ok(vec![0.0; n]),
        Init::Gaussian { sigma } => {
            let normal = Normal::new(0.0, *sigma)
                .map_err(|e| Error::Validation(format!("init sigma: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
        }
        Init::FromChannel(c) => {
            if c.n_inputs() != d.n_inputs() || c.t_size() != t_size {
                return Err(Error::Shape {
                    what: "initial channel",
                    expected: n,
                    got: c.probs().len(),
                });
            }
            Ok(c.probs().iter().map(|&p| p.max(1e-300).ln()).collect())
        }
    }
}

fn trace_point(
    d: &Dataset,
    logits: &[f64],
    t_size: usize,
    beta: f64,
    iteration: usize,
) -> Result<TracePoint> {
    let c = Channel::softmax(logits, t_size)?;
    let point = info_point(d, &c)?;
    Ok(TracePoint {
        iteration,
        objective: -point.i_ty + beta * point.i_xt,
        point,
    })
}

/// Runs Adam on the logits until the gradient is small or the iteration
/// budget is spent.
pub fn solve(d: &Dataset, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let t_size = cfg.t_size.unwrap_or(d.n_classes());
    let mut logits = initial_logits(d, cfg, t_size)?;
    check_logits(d, &logits, t_size)?;
    let mut ws = Workspace::new(d, t_size);
    let mut grad = vec![0.0; logits.len()];
    let mut adam = Adam::new(cfg.adam, logits.len());
    let stride = cfg.trace_every.max(1);
    let mut trace = vec![trace_point(d, &logits, t_size, cfg.beta, 0)?];
    let mut last_finite = logits.clone();
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let obj = ws.evaluate(&logits, cfg.beta, &mut grad);
        if !obj.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                iteration: iterations,
                msg: format!("objective {obj}"),
                last_finite: Channel::softmax(&last_finite, t_size).ok().map(Box::new),
            });
        }
        last_finite.copy_from_slice(&logits);
        let inf_norm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if inf_norm <= cfg.grad_tol {
            converged = true;
            break;
        }
        if iterations == cfg.max_iters {
            break;
        }
        adam.step(&mut logits, &grad);
        iterations += 1;
        if iterations % stride == 0 {
            trace.push(trace_point(d, &logits, t_size, cfg.beta, iterations)?);
        }
    }
    if trace.last().map(|t| t.iteration) != Some(iterations) {
        trace.push(trace_point(d, &logits, t_size, cfg.beta, iterations)?);
    }

    let channel = Channel::softmax(&logits, t_size)?;
    let point = info_point(d, &channel)?;
    Ok(SolveResult {
        beta: cfg.beta,
        objective: -point.i_ty + cfg.beta * point.i_xt,
        channel,
        point,
        iterations,
        converged,
        trace,
    })
}

/// Independent solves, one per β, each seeded identically.
pub fn sweep_beta(d: &Dataset, betas: &[f64], cfg: &SolverConfig) -> Vec<Result<SolveResult>> {
    betas
        .par_iter()
        .map(|&beta| solve(d, &cfg.with_beta(beta)))
        .collect()
}

/// Upper limit on enumerated channels in [`brute_force_frontier`].
pub const MAX_ENUMERATION: u64 = 50_000_000;

/// All points of the `1/steps` grid on the simplex with `t_size` symbols.
fn simplex_grid(t_size: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(t: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if t == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(t - 1, left - v, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(t_size, steps, steps, &mut Vec::new(), &mut out);
    out
}

/// Non-dominated points (smaller `i_xt`, larger `i_ty`), sorted by `i_xt`.
pub fn pareto_frontier(mut points: Vec<InfoPoint>) -> Vec<InfoPoint> {
    points.sort_by(|a, b| a.i_xt.total_cmp(&b.i_xt).then(b.i_ty.total_cmp(&a.i_ty)));
    let mut out: Vec<InfoPoint> = Vec::new();
    for p in points {
        match out.last() {
            Some(last) if p.i_ty <= last.i_ty + 1e-12 => {}
            _ => out.push(p),
        }
    }
    out
}

/// Enumerates every channel whose rows lie on a `grid_step` simplex grid and
/// returns the Pareto frontier of the resulting information points.
pub fn brute_force_frontier(d: &Dataset, grid_step: f64) -> Result<Vec<InfoPoint>> {
    brute_force_frontier_with(d, d.n_classes(), grid_step)
}

pub fn brute_force_frontier_with(
    d: &Dataset,
    t_size: usize,
    grid_step: f64,
) -> Result<Vec<InfoPoint>> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::Validation(format!(
            "grid step {grid_step} outside (0, 0.5]"
        )));
    }
    if d.n_inputs() > 3 || t_size > 3 || t_size == 0 {
        return Err(Error::Size(format!(
            "enumeration supports at most 3 inputs and 3 symbols, got {} and {t_size}",
            d.n_inputs()
        )));
    }
    let steps = (1.0 / grid_step).round() as usize;
    let rows = simplex_grid(t_size, steps);
    let total = (rows.len() as u64).checked_pow(d.n_inputs() as u32);
    if total.is_none_or(|t| t > MAX_ENUMERATION) {
        return Err(Error::Size(format!(
            "{} grid rows over {} inputs exceeds {MAX_ENUMERATION} channels",
            rows.len(),
            d.n_inputs()
        )));
    }

    let n_inputs = d.n_inputs();
    let partial: Vec<Vec<InfoPoint>> = (0..rows.len())
        .into_par_iter()
        .map(|first| {
            let mut pts = Vec::new();
            let mut idx = vec![0usize; n_inputs];
            idx[0] = first;
            loop {
                let chosen: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
                let c = Channel::from_rows(chosen).expect("grid rows are distributions");
                pts.push(info_point(d, &c).expect("aligned channel"));
                // odometer over inputs 1..n
                let mut pos = 1;
                while pos < n_inputs {
                    idx[pos] += 1;
                    if idx[pos] < rows.len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos >= n_inputs {
                    break;
                }
            }
            pareto_frontier(pts)
        })
        .collect();
    Ok(pareto_frontier(partial.into_iter().flatten().collect()))
}

/// Smallest Lagrangian value over a set of information points.
pub fn best_lagrangian(points: &[InfoPoint], beta: f64) -> Option<f64> {
    points
        .iter()
        .map(|p| -p.i_ty + beta * p.i_xt)
        .min_by(f64::total_cmp)
}

/// Information points of the exact label-smoothing minimizer for each α,
/// with uniform smoothing. Valid with or without contradicting labels.
pub fn ls_theoretical_points(d: &Dataset, alphas: &[f64]) -> Result<Vec<(f64, InfoPoint)>> {
    alphas
        .iter()
        .map(|&a| {
            let cfg = SmoothingConfig::uniform(a, d.n_classes())?;
            let c = ls_minimizer_channel(d, &cfg)?;
            Ok((a, info_point(d, &c)?))
        })
        .collect()
}

/// Largest `i_ty` advantage of `point` over the label-smoothing curve at the
/// same `i_xt`, linearly interpolating between LS points. `None` when
/// `point.i_xt` lies outside the LS range.
pub fn margin_over_ls(point: &InfoPoint, ls_points: &[InfoPoint]) -> Option<f64> {
    let mut pts = ls_points.to_vec();
    pts.sort_by(|a, b| a.i_xt.total_cmp(&b.i_xt));
    let first = pts.first()?;
    let last = pts.last()?;
    if point.i_xt < first.i_xt || point.i_xt > last.i_xt {
        return None;
    }
    let ls_ty = pts
        .windows(2)
        .find(|w| point.i_xt <= w[1].i_xt)
        .map(|w| {
            let span = w[1].i_xt - w[0].i_xt;
            if span <= 0.0 {
                w[0].i_ty.max(w[1].i_ty)
            } else {
                let f = (point.i_xt - w[0].i_xt) / span;
                w[0].i_ty + f * (w[1].i_ty - w[0].i_ty)
            }
        })
        .unwrap_or(first.i_ty);
    Some(point.i_ty - ls_ty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_contradicting, gen_unique, ConfusionSpec, GenMode};
    use crate::dist::Dist;

    #[test]
    fn lagrangian_value_examples() {
        let d = gen_unique(2, 1, 0).unwrap();
        let labels = d.labels().unwrap();
        let det = Channel::from_rows(
            labels
                .iter()
                .map(|&y| Dist::point_mass(y, 2).unwrap().into_inner())
                .collect(),
        )
        .unwrap();
        assert!((lagrangian_value(&d, &det, 0.0).unwrap() + 2f64.ln()).abs() < 1e-12);
        let flat = Channel::constant(2, &Dist::new(vec![0.3, 0.7]).unwrap());
        for beta in [0.0, 0.7, 3.0] {
            assert!(lagrangian_value(&d, &flat, beta).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let d = gen_unique(3, 2, 4).unwrap();
        let g = lagrangian_grad(&d, &[0.0; 18], 3, 0.4).unwrap();
        for row in g.chunks(3) {
            assert!(row.iter().sum::<f64>().abs() < 1e-15);
        }
        let logits: Vec<f64> = (0..18).map(|i| (i as f64 * 1.3).sin()).collect();
        for row in lagrangian_grad(&d, &logits, 3, 0.4).unwrap().chunks(3) {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_rejects_bad_logits() {
        let d = gen_unique(2, 1, 0).unwrap();
        assert!(matches!(
            lagrangian_grad(&d, &[0.0, f64::INFINITY, 0.0, 0.0], 2, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            lagrangian_grad(&d, &[0.0; 3], 2, 1.0),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn pareto_keeps_nondominated() {
        let pts = vec![
            InfoPoint::new(0.0, 0.0),
            InfoPoint::new(0.5, 0.3),
            InfoPoint::new(0.4, 0.35),
            InfoPoint::new(0.5, 0.3),
            InfoPoint::new(1.0, 0.2),
        ];
        let f = pareto_frontier(pts);
        assert_eq!(f, vec![InfoPoint::new(0.0, 0.0), InfoPoint::new(0.4, 0.35)]);
    }

    #[test]
    fn coarse_frontier_contains_origin() {
        let d = gen_unique(2, 1, 0).unwrap();
        let f = brute_force_frontier(&d, 0.5).unwrap();
        assert_eq!(f[0], InfoPoint::new(0.0, 0.0));
        assert!((f.last().unwrap().i_ty - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn frontier_size_limits() {
        let d = gen_unique(2, 2, 0).unwrap();
        assert!(matches!(brute_force_frontier(&d, 0.1), Err(Error::Size(_))));
        let d = gen_unique(2, 1, 0).unwrap();
        assert!(brute_force_frontier(&d, 0.0).is_err());
        assert!(brute_force_frontier(&d, 0.6).is_err());
    }

    #[test]
    fn solver_config_validation() {
        let d = gen_unique(2, 1, 0).unwrap();
        for bad in [
            SolverConfig {
                beta: -1.0,
                ..Default::default()
            },
            SolverConfig {
                max_iters: 0,
                ..Default::default()
            },
            SolverConfig {
                grad_tol: 0.0,
                ..Default::default()
            },
            SolverConfig {
                t_size: Some(0),
                ..Default::default()
            },
        ] {
            assert!(matches!(solve(&d, &bad), Err(Error::Validation(_))));
        }
    }

    #[test]
    fn solve_is_deterministic_and_descends() {
        let spec = ConfusionSpec::new(vec![vec![0.7, 0.3], vec![0.3, 0.7]], 2, 10).unwrap();
        let d = gen_contradicting(&spec, GenMode::Exact, 0).unwrap();
        let cfg = SolverConfig {
            beta: 0.1,
            max_iters: 3000,
            seed: 5,
            ..Default::default()
        };
        let a = solve(&d, &cfg).unwrap();
        let b = solve(&d, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.objective <= a.trace[0].objective);
        assert!((a.objective - lagrangian_value(&d, &a.channel, 0.1).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn margin_interpolates() {
        let ls = [InfoPoint::new(0.0, 0.0), InfoPoint::new(1.0, 0.5)];
        let m = margin_over_ls(&InfoPoint::new(0.5, 0.3), &ls).unwrap();
        assert!((m - 0.05).abs() < 1e-15);
        assert!(margin_over_ls(&InfoPoint::new(1.5, 0.3), &ls).is_none());
    }
}

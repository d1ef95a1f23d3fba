//! Classification losses viewed as bottleneck objectives: cross entropy,
//! label smoothing, confidence penalty and the variational IB bound, all
//! evaluated on a channel against the empirical joint.
//!
//! Every loss is the count-weighted average over samples, i.e.
//! `Σ_{x,y} p̂(x,y) · term(x, y)`. Infinite terms propagate as `+∞`.

use crate::channel::Channel;
use crate::dataset::Dataset;
use crate::dist::{cross_entropy_of, entropy_of, is_zero, kl_of, Dist};
use crate::error::{Error, Result};

/// Smoothing weight `alpha` and smoothing distribution `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingConfig {
    alpha: f64,
    r: Dist,
}

impl SmoothingConfig {
    pub fn new(alpha: f64, r: Dist) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Validation(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(SmoothingConfig { alpha, r })
    }

    /// Uniform smoothing over `t_size` symbols.
    pub fn uniform(alpha: f64, t_size: usize) -> Result<Self> {
        SmoothingConfig::new(alpha, Dist::uniform(t_size)?)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r(&self) -> &Dist {
        &self.r
    }
}

/// Fixed classifier `q(y|t) = (1-ε)·1{y=t} + ε/K` used by the VIB bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierSpec {
    epsilon: f64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec { epsilon: 1e-3 }
    }
}

impl ClassifierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Validation(format!(
                "epsilon {epsilon} outside [0, 1)"
            )));
        }
        Ok(ClassifierSpec { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `q(y|t)` for `K` classes.
    pub fn prob(&self, y: usize, t: usize, n_classes: usize) -> f64 {
        let hit = if y == t { 1.0 - self.epsilon } else { 0.0 };
        hit + self.epsilon / n_classes as f64
    }
}

/// `(1-α)·1{T=y} + α·r(T)`.
pub fn smooth_target(y: usize, cfg: &SmoothingConfig) -> Result<Dist> {
    let size = cfg.r.len();
    if y >= size {
        return Err(Error::Index { index: y, size });
    }
    Dist::new(smooth_target_raw(y, cfg))
}

fn smooth_target_raw(y: usize, cfg: &SmoothingConfig) -> Vec<f64> {
    let a = cfg.alpha;
    let mut q: Vec<f64> = cfg.r.probs().iter().map(|&r| a * r).collect();
    q[y] += 1.0 - a;
    q
}

fn check_loss_shapes(d: &Dataset, c: &Channel) -> Result<()> {
    if c.n_inputs() != d.n_inputs() {
        return Err(Error::Shape {
            what: "channel rows vs dataset inputs",
            expected: d.n_inputs(),
            got: c.n_inputs(),
        });
    }
    if c.t_size() != d.n_classes() {
        return Err(Error::Shape {
            what: "channel alphabet vs classes",
            expected: d.n_classes(),
            got: c.t_size(),
        });
    }
    Ok(())
}

fn check_smoothing(c: &Channel, cfg: &SmoothingConfig) -> Result<()> {
    if cfg.r.len() != c.t_size() {
        return Err(Error::Shape {
            what: "smoothing distribution vs channel alphabet",
            expected: c.t_size(),
            got: cfg.r.len(),
        });
    }
    Ok(())
}

/// `-ln p` with `+∞` for zero.
fn nll(p: f64) -> f64 {
    if is_zero(p) {
        f64::INFINITY
    } else {
        -p.ln()
    }
}

/// `w · v` treating `0 · ∞` as zero.
fn weighted(w: f64, v: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * v
    }
}

/// Count-weighted mean of `term(x, y)`.
fn sample_mean(d: &Dataset, mut term: impl FnMut(usize, usize) -> f64) -> f64 {
    let n = d.total() as f64;
    let mut acc = 0.0;
    for (x, y, count) in d.iter() {
        acc += count as f64 / n * term(x, y);
    }
    acc
}

/// Mean negative log-likelihood of the labels.
pub fn ce_loss(d: &Dataset, c: &Channel) -> Result<f64> {
    check_loss_shapes(d, c)?;
    Ok(sample_mean(d, |x, y| nll(c.row(x)[y])))
}

/// Mean cross entropy between smoothed targets and channel rows.
pub fn ls_loss(d: &Dataset, c: &Channel, cfg: &SmoothingConfig) -> Result<f64> {
    check_loss_shapes(d, c)?;
    check_smoothing(c, cfg)?;
    let targets: Vec<Vec<f64>> = (0..d.n_classes())
        .map(|y| smooth_target_raw(y, cfg))
        .collect();
    Ok(sample_mean(d, |x, y| {
        cross_entropy_of(&targets[y], c.row(x))
    }))
}

/// The three parts of the label-smoothing loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsParts {
    /// `(1-α)` times the mean negative log-likelihood.
    pub weighted_nll: f64,
    /// `α` times the mean `KL[r ‖ c(·|x)]`.
    pub kl_term: f64,
    /// `α·H(r)`.
    pub constant: f64,
}

impl LsParts {
    pub fn total(&self) -> f64 {
        self.weighted_nll + self.kl_term + self.constant
    }
}

/// Splits the label-smoothing loss into likelihood, reverse-KL and constant.
pub fn ls_loss_decomposed(d: &Dataset, c: &Channel, cfg: &SmoothingConfig) -> Result<LsParts> {
    check_loss_shapes(d, c)?;
    check_smoothing(c, cfg)?;
    let a = cfg.alpha;
    let r = cfg.r.probs();
    let kl_rows: Vec<f64> = c.rows().map(|row| kl_of(r, row)).collect();
    Ok(LsParts {
        weighted_nll: weighted(1.0 - a, sample_mean(d, |x, y| nll(c.row(x)[y]))),
        kl_term: weighted(a, sample_mean(d, |x, _| kl_rows[x])),
        constant: a * entropy_of(r),
    })
}

/// Cross entropy minus `β` times the entropy of each output row.
pub fn cp_loss(d: &Dataset, c: &Channel, beta: f64) -> Result<f64> {
    check_loss_shapes(d, c)?;
    check_beta(beta)?;
    let row_entropy: Vec<f64> = c.rows().map(entropy_of).collect();
    Ok(sample_mean(d, |x, y| {
        nll(c.row(x)[y]) - beta * row_entropy[x]
    }))
}

/// The same loss written with a forward KL to the uniform distribution:
/// mean of `-ln c(y|x) + β·KL[c(·|x) ‖ uniform]`, minus `β·ln|T|`.
pub fn cp_loss_kl_form(d: &Dataset, c: &Channel, beta: f64) -> Result<f64> {
    check_loss_shapes(d, c)?;
    check_beta(beta)?;
    let uniform = vec![1.0 / c.t_size() as f64; c.t_size()];
    let kl_rows: Vec<f64> = c.rows().map(|row| kl_of(row, &uniform)).collect();
    let mean = sample_mean(d, |x, y| nll(c.row(x)[y]) + weighted(beta, kl_rows[x]));
    Ok(mean - beta * (c.t_size() as f64).ln())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Validation(format!(
            "beta must be finite and >= 0, got {beta}"
        )));
    }
    Ok(())
}

/// Empirical VIB loss with the fixed classifier of `spec`: the expected
/// negative log-likelihood under the channel (expectation outside the log)
/// plus `β·KL[c(·|x) ‖ r]`.
///
/// With `ε = 0` any channel mass off the label makes the first term `+∞`.
pub fn vib_loss(
    d: &Dataset,
    c: &Channel,
    beta: f64,
    spec: &ClassifierSpec,
    r: &Dist,
) -> Result<f64> {
    check_beta(beta)?;
    let kl_rows = kl_rows_to(d, c, r)?;
    let expected_nll = vib_expected_nll(d, c, spec);
    Ok(expected_nll + weighted(beta, sample_mean(d, |x, _| kl_rows[x])))
}

fn kl_rows_to(d: &Dataset, c: &Channel, r: &Dist) -> Result<Vec<f64>> {
    if c.n_inputs() != d.n_inputs() {
        return Err(Error::Shape {
            what: "channel rows vs dataset inputs",
            expected: d.n_inputs(),
            got: c.n_inputs(),
        });
    }
    if r.len() != c.t_size() {
        return Err(Error::Shape {
            what: "reference distribution vs channel alphabet",
            expected: c.t_size(),
            got: r.len(),
        });
    }
    Ok(c.rows().map(|row| kl_of(row, r.probs())).collect())
}

fn vib_expected_nll(d: &Dataset, c: &Channel, spec: &ClassifierSpec) -> f64 {
    let k = d.n_classes();
    sample_mean(d, |x, y| {
        c.row(x)
            .iter()
            .enumerate()
            .map(|(t, &p)| weighted(p, nll(spec.prob(y, t, k))))
            .sum()
    })
}

/// Variational upper bound on `Î(X;T)`: mean `KL[c(·|x) ‖ r]`.
pub fn compression_upper_bound(d: &Dataset, c: &Channel, r: &Dist) -> Result<f64> {
    let kl_rows = kl_rows_to(d, c, r)?;
    Ok(sample_mean(d, |x, _| kl_rows[x]))
}

/// Variational lower bound on `Î(T;Y)`:
/// `Σ p̂(x,y) E_c[ln q(y|T)] + Ĥ(Y)`.
pub fn sufficiency_lower_bound(d: &Dataset, c: &Channel, spec: &ClassifierSpec) -> Result<f64> {
    if c.n_inputs() != d.n_inputs() {
        return Err(Error::Shape {
            what: "channel rows vs dataset inputs",
            expected: d.n_inputs(),
            got: c.n_inputs(),
        });
    }
    Ok(d.entropy_y() - vib_expected_nll(d, c, spec))
}

/// Minimizer of the label-smoothing loss without assuming consistent
/// labels: each row is the count-weighted mean of the smoothed targets of
/// that input's labels.
pub fn ls_minimizer_channel(d: &Dataset, cfg: &SmoothingConfig) -> Result<Channel> {
    if cfg.r.len() != d.n_classes() {
        return Err(Error::Shape {
            what: "smoothing distribution vs classes",
            expected: d.n_classes(),
            got: cfg.r.len(),
        });
    }
    let targets: Vec<Vec<f64>> = (0..d.n_classes())
        .map(|y| smooth_target_raw(y, cfg))
        .collect();
    let rows = (0..d.n_inputs())
        .map(|x| {
            let nx = d.x_count(x) as f64;
            let mut row = vec![0.0; d.n_classes()];
            for &(y, count) in d.entries(x) {
                let w = count as f64 / nx;
                for (o, &q) in row.iter_mut().zip(&targets[y]) {
                    *o += w * q;
                }
            }
            row
        })
        .collect();
    Channel::from_rows(rows)
}

/// The label-smoothing optimum on consistently labeled data: row `x` is the
/// smoothed target of `x`'s label.
pub fn optimal_ls_channel(d: &Dataset, cfg: &SmoothingConfig) -> Result<Channel> {
    d.require_no_contradictions("optimal label-smoothing channel")?;
    ls_minimizer_channel(d, cfg)
}

/// `Σ p̂(x,y) H(q_{α,y})`, the minimum of the label-smoothing loss on
/// consistently labeled data.
pub fn mean_target_entropy(d: &Dataset, cfg: &SmoothingConfig) -> Result<f64> {
    if cfg.r.len() != d.n_classes() {
        return Err(Error::Shape {
            what: "smoothing distribution vs classes",
            expected: d.n_classes(),
            got: cfg.r.len(),
        });
    }
    let h: Vec<f64> = (0..d.n_classes())
        .map(|y| entropy_of(&smooth_target_raw(y, cfg)))
        .collect();
    Ok(sample_mean(d, |_, y| h[y]))
}

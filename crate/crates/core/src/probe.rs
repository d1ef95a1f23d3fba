//! Nuisance and redundant-factor probing on a small MLP.
//!
//! A one-hidden-layer network is trained on the one-hot codes of
//! `(informative, second)` factors to predict the label, with or without
//! label smoothing. A linear softmax probe is then fitted on the frozen
//! hidden activations to recover the second factor; its held-out accuracy
//! measures how much of that factor survives in the representation.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::channel::softmax_into;
use crate::dataset::{gen_factor_dataset, FactorGenConfig, FactorRole, FeatureDataset};
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn slope(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Validation(format!("unknown activation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MlpLoss {
    CrossEntropy,
    /// Uniform label smoothing with weight `alpha`.
    LabelSmoothing(f64),
}

impl MlpLoss {
    pub fn from_alpha(alpha: f64) -> Self {
        if alpha == 0.0 {
            MlpLoss::CrossEntropy
        } else {
            MlpLoss::LabelSmoothing(alpha)
        }
    }

    pub fn alpha(self) -> f64 {
        match self {
            MlpLoss::CrossEntropy => 0.0,
            MlpLoss::LabelSmoothing(a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden_width: usize,
    pub activation: Activation,
    pub adam: AdamConfig,
    pub epochs: usize,
    pub batch_size: usize,
    /// Standard deviation of the initial first-layer weights.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_width: 32,
            activation: Activation::Tanh,
            adam: AdamConfig::default(),
            epochs: 60,
            batch_size: 64,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_width == 0 || self.batch_size == 0 {
            return Err(Error::Validation(
                "hidden_width and batch_size must be at least 1".into(),
            ));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Validation(format!(
                "invalid init scale {}",
                self.init_scale
            )));
        }
        self.adam.validate()
    }
}

/// Parameters laid out as `[w1 (hidden × input), b1, w2 (out × hidden), b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    n_in: usize,
    n_hidden: usize,
    n_out: usize,
    activation: Activation,
    params: Vec<f64>,
}

impl Mlp {
    fn new(
        n_in: usize,
        n_hidden: usize,
        n_out: usize,
        activation: Activation,
        init_scale: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let w1 = Normal::new(0.0, init_scale).expect("validated scale");
        let w2 = Normal::new(0.0, (1.0 / n_hidden as f64).sqrt()).expect("positive width");
        let mut params = Vec::with_capacity(n_hidden * n_in + n_hidden + n_out * n_hidden + n_out);
        params.extend((0..n_hidden * n_in).map(|_| w1.sample(rng)));
        params.extend(std::iter::repeat_n(0.0, n_hidden));
        params.extend((0..n_out * n_hidden).map(|_| w2.sample(rng)));
        params.extend(std::iter::repeat_n(0.0, n_out));
        Mlp {
            n_in,
            n_hidden,
            n_out,
            activation,
            params,
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn hidden_width(&self) -> usize {
        self.n_hidden
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.n_hidden * self.n_in;
        let w2 = b1 + self.n_hidden;
        let b2 = w2 + self.n_out * self.n_hidden;
        (b1, w2, b2)
    }

    /// Hidden activations for an input given by its active one-hot columns.
    pub fn hidden(&self, active: &[usize], out: &mut [f64]) {
        let (b1, _, _) = self.offsets();
        for (j, o) in out.iter_mut().enumerate() {
            let mut z = self.params[b1 + j];
            for &i in active {
                z += self.params[j * self.n_in + i];
            }
            *o = self.activation.apply(z);
        }
    }

    fn logits(&self, hidden: &[f64], out: &mut [f64]) {
        let (_, w2, b2) = self.offsets();
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.params[w2 + k * self.n_hidden..w2 + (k + 1) * self.n_hidden];
            *o = self.params[b2 + k] + row.iter().zip(hidden).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn predict(&self, active: &[usize]) -> usize {
        let mut h = vec![0.0; self.n_hidden];
        let mut z = vec![0.0; self.n_out];
        self.hidden(active, &mut h);
        self.logits(&h, &mut z);
        argmax(&z)
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
        .0
}

/// Target distribution for label `y` under `loss`.
fn target(loss: MlpLoss, y: usize, k: usize, out: &mut [f64]) {
    let a = loss.alpha();
    out.iter_mut().for_each(|v| *v = a / k as f64);
    out[y] += 1.0 - a;
}

/// Mean loss over rows and, when `grad` is given, its gradient.
fn batch_loss(
    model: &Mlp,
    fd: &FeatureDataset,
    rows: &[usize],
    loss: MlpLoss,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let (h_n, k) = (model.n_hidden, model.n_out);
    let (b1, w2, b2) = model.offsets();
    let mut h = vec![0.0; h_n];
    let mut z = vec![0.0; k];
    let mut p = vec![0.0; k];
    let mut q = vec![0.0; k];
    let mut dh = vec![0.0; h_n];
    let scale = 1.0 / rows.len() as f64;
    let mut total = 0.0;
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    for &r in rows {
        let row = &fd.rows[r];
        let active = fd.active_features(row);
        model.hidden(&active, &mut h);
        model.logits(&h, &mut z);
        softmax_into(&z, &mut p);
        target(loss, row.y, k, &mut q);
        total -= q
            .iter()
            .zip(&p)
            .filter(|(&qi, _)| qi > 0.0)
            .map(|(&qi, &pi)| qi * pi.max(1e-300).ln())
            .sum::<f64>();
        let Some(g) = grad.as_deref_mut() else {
            continue;
        };
        dh.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..k {
            let dz = scale * (p[c] - q[c]);
            g[b2 + c] += dz;
            let w_row = w2 + c * h_n;
            for j in 0..h_n {
                g[w_row + j] += dz * h[j];
                dh[j] += dz * model.params[w_row + j];
            }
        }
        for j in 0..h_n {
            let da = dh[j] * model.activation.slope(h[j]);
            g[b1 + j] += da;
            for &i in &active {
                g[j * model.n_in + i] += da;
            }
        }
    }
    total * scale
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainStatus {
    Ok,
    /// Training accuracy stayed below the 0.95 target.
    BelowTarget {
        accuracy: f64,
    },
}

/// A trained network plus the facts needed to judge the run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedMlp {
    pub model: Mlp,
    pub loss: MlpLoss,
    pub seed: u64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub train_accuracy: f64,
    pub status: TrainStatus,
}

pub const TARGET_ACCURACY: f64 = 0.95;

pub fn accuracy(model: &Mlp, fd: &FeatureDataset) -> f64 {
    let hits = fd
        .rows
        .iter()
        .filter(|r| model.predict(&fd.active_features(r)) == r.y)
        .count();
    hits as f64 / fd.len().max(1) as f64
}

/// An untrained network with the configured initialization.
pub fn init_mlp(fd: &FeatureDataset, cfg: &MlpConfig) -> Result<Mlp> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(Mlp::new(
        fd.feature_width(),
        cfg.hidden_width,
        fd.n_classes,
        cfg.activation,
        cfg.init_scale,
        &mut rng,
    ))
}

/// Minibatch Adam on the label loss.
pub fn train_mlp(fd: &FeatureDataset, loss: MlpLoss, cfg: &MlpConfig) -> Result<TrainedMlp> {
    if fd.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let MlpLoss::LabelSmoothing(a) = loss {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Validation(format!("alpha {a} outside [0, 1]")));
        }
    }
    let mut model = init_mlp(fd, cfg)?;
    // shuffling uses a stream separate from initialization
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5ee_d0fb_a7c4);
    let all: Vec<usize> = (0..fd.len()).collect();
    let initial_loss = batch_loss(&model, fd, &all, loss, None);
    let mut adam = Adam::new(cfg.adam, model.params.len());
    let mut grad = vec![0.0; model.params.len()];
    let mut order = all.clone();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            batch_loss(&model, fd, batch, loss, Some(&mut grad));
            adam.step(&mut model.params, &grad);
        }
    }
    let final_loss = batch_loss(&model, fd, &all, loss, None);
    if !final_loss.is_finite() {
        return Err(Error::Diverged {
            iteration: cfg.epochs,
            msg: format!("MLP loss {final_loss}"),
            last_finite: None,
        });
    }
    let train_accuracy = accuracy(&model, fd);
    let status = if train_accuracy >= TARGET_ACCURACY {
        TrainStatus::Ok
    } else {
        TrainStatus::BelowTarget {
            accuracy: train_accuracy,
        }
    };
    Ok(TrainedMlp {
        model,
        loss,
        seed: cfg.seed,
        initial_loss,
        final_loss,
        train_accuracy,
        status,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub adam: AdamConfig,
    /// Full-batch probe updates.
    pub steps: usize,
    /// Fraction of rows used to fit the probe; the rest are held out.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            adam: AdamConfig {
                learning_rate: 0.05,
                ..AdamConfig::default()
            },
            steps: 300,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub probe_accuracy: f64,
    pub probe_cross_entropy: f64,
    pub target_accuracy: f64,
    pub alpha: f64,
    pub seed: u64,
}

/// Fits a softmax-regression probe from hidden activations to the second
/// factor and reports held-out accuracy and cross entropy. The network is
/// only read.
pub fn probe_factor(
    trained: &TrainedMlp,
    fd: &FeatureDataset,
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    let model = &trained.model;
    if model.n_in != fd.feature_width() || model.n_out != fd.n_classes {
        return Err(Error::Shape {
            what: "model input width vs feature width",
            expected: fd.feature_width(),
            got: model.n_in,
        });
    }
    if fd.len() < 2 {
        return Err(Error::Validation("probing needs at least two rows".into()));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "train fraction {} outside (0, 1)",
            cfg.train_fraction
        )));
    }
    cfg.adam.validate()?;

    let h_n = model.n_hidden;
    let mut features = vec![0.0; fd.len() * h_n];
    for (r, out) in fd.rows.iter().zip(features.chunks_mut(h_n)) {
        model.hidden(&fd.active_features(r), out);
    }
    let labels: Vec<usize> = fd.rows.iter().map(|r| r.second).collect();

    let mut order: Vec<usize> = (0..fd.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let n_train = ((fd.len() as f64 * cfg.train_fraction).round() as usize).clamp(1, fd.len() - 1);
    let (train, test) = order.split_at(n_train);

    let classes = fd.n_second;
    let width = h_n + 1;
    let mut weights = vec![0.0; classes * width];
    let mut grad = vec![0.0; weights.len()];
    let mut adam = Adam::new(cfg.adam, weights.len());
    let mut z = vec![0.0; classes];
    let mut p = vec![0.0; classes];

    let scores = |weights: &[f64], x: &[f64], z: &mut [f64]| {
        for (c, zc) in z.iter_mut().enumerate() {
            let w = &weights[c * width..(c + 1) * width];
            *zc = w[h_n] + w[..h_n].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    };

    for _ in 0..cfg.steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / train.len() as f64;
        for &i in train {
            let x = &features[i * h_n..(i + 1) * h_n];
            scores(&weights, x, &mut z);
            softmax_into(&z, &mut p);
            for c in 0..classes {
                let d = scale * (p[c] - if c == labels[i] { 1.0 } else { 0.0 });
                let g = &mut grad[c * width..(c + 1) * width];
                for (gj, xj) in g.iter_mut().zip(x) {
                    *gj += d * xj;
                }
                g[h_n] += d;
            }
        }
        adam.step(&mut weights, &grad);
    }

    let mut hits = 0usize;
    let mut ce = 0.0;
    for &i in test {
        let x = &features[i * h_n..(i + 1) * h_n];
        scores(&weights, x, &mut z);
        softmax_into(&z, &mut p);
        if argmax(&p) == labels[i] {
            hits += 1;
        }
        ce -= p[labels[i]].max(1e-300).ln();
    }
    Ok(ProbeResult {
        probe_accuracy: hits as f64 / test.len() as f64,
        probe_cross_entropy: ce / test.len() as f64,
        target_accuracy: trained.train_accuracy,
        alpha: trained.loss.alpha(),
        seed: trained.seed,
    })
}

/// Everything a probe sweep needs besides the α grid and seeds.
///
/// The defaults use as many classes as hidden units, so the output layer
/// reads every hidden direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSetup {
    pub n_informative: usize,
    pub n_second: usize,
    pub n_classes: usize,
    pub n_rows: usize,
    pub redundant_noise: f64,
    pub mlp: MlpConfig,
    pub probe: ProbeConfig,
}

impl Default for ProbeSetup {
    fn default() -> Self {
        ProbeSetup {
            n_informative: 64,
            n_second: 8,
            n_classes: 32,
            n_rows: 4000,
            redundant_noise: 0.2,
            mlp: MlpConfig::default(),
            probe: ProbeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRun {
    pub role: FactorRole,
    pub result: std::result::Result<ProbeResult, String>,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub n_ok: usize,
    pub probe_mean: f64,
    pub probe_sd: f64,
    pub target_mean: f64,
    pub target_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub role: FactorRole,
    pub runs: Vec<ProbeRun>,
    pub summary: Vec<AlphaSummary>,
    /// Spearman correlation between α and mean probe accuracy.
    pub trend: f64,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Average ranks, ties sharing the mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let (ma, _) = mean_sd(&ra);
    let (mb, _) = mean_sd(&rb);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

/// Trains one network per `(α, seed)` and probes it for the second factor.
///
/// Each seed generates its own dataset, shared by every α so that the
/// comparison across α is paired. Failed runs are kept in the report and
/// excluded from the aggregates.
pub fn nuisance_report(
    role: FactorRole,
    alphas: &[f64],
    seeds: &[u64],
    setup: &ProbeSetup,
) -> Result<ProbeReport> {
    if alphas.len() < 2 || !alphas.contains(&0.0) {
        return Err(Error::Validation(
            "≥ 2 alphas including 0.0 required".into(),
        ));
    }
    if seeds.len() < 3 {
        return Err(Error::Validation("≥ 3 seeds required".into()));
    }
    let jobs: Vec<(f64, u64)> = alphas
        .iter()
        .flat_map(|&a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    let runs: Vec<ProbeRun> = jobs
        .par_iter()
        .map(|&(alpha, seed)| {
            let result = (|| {
                let fd = gen_factor_dataset(&FactorGenConfig {
                    role,
                    n_informative: setup.n_informative,
                    n_second: setup.n_second,
                    n_classes: setup.n_classes,
                    n_rows: setup.n_rows,
                    redundant_noise: setup.redundant_noise,
                    seed,
                })?;
                let mlp = MlpConfig {
                    seed,
                    ..setup.mlp.clone()
                };
                let trained = train_mlp(&fd, MlpLoss::from_alpha(alpha), &mlp)?;
                let probe = ProbeConfig {
                    seed,
                    ..setup.probe.clone()
                };
                probe_factor(&trained, &fd, &probe)
            })();
            ProbeRun {
                role,
                result: result.map_err(|e| e.to_string()),
                alpha,
                seed,
            }
        })
        .collect();

    let summary: Vec<AlphaSummary> = alphas
        .iter()
        .map(|&alpha| {
            let ok: Vec<&ProbeResult> = runs
                .iter()
                .filter(|r| r.alpha == alpha)
                .filter_map(|r| r.result.as_ref().ok())
                .collect();
            let probe: Vec<f64> = ok.iter().map(|r| r.probe_accuracy).collect();
            let target: Vec<f64> = ok.iter().map(|r| r.target_accuracy).collect();
            let (probe_mean, probe_sd) = mean_sd(&probe);
            let (target_mean, target_sd) = mean_sd(&target);
            AlphaSummary {
                alpha,
                n_ok: ok.len(),
                probe_mean,
                probe_sd,
                target_mean,
                target_sd,
            }
        })
        .collect();
    let trend = spearman(
        &summary.iter().map(|s| s.alpha).collect::<Vec<_>>(),
        &summary.iter().map(|s| s.probe_mean).collect::<Vec<_>>(),
    );
    Ok(ProbeReport {
        role,
        runs,
        summary,
        trend,
    })
}

impl ProbeReport {
    pub fn summary_for(&self, alpha: f64) -> Option<&AlphaSummary> {
        self.summary.iter().find(|s| s.alpha == alpha)
    }

    /// Per-run CSV `role,alpha,seed,target_acc,probe_acc,probe_ce`. Failed
    /// runs have empty metric fields.
    pub fn write_runs_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "role,alpha,seed,target_acc,probe_acc,probe_ce")?;
        for r in &self.runs {
            match &r.result {
                Ok(p) => writeln!(
                    out,
                    "{},{:?},{},{:?},{:?},{:?}",
                    r.role,
                    r.alpha,
                    r.seed,
                    p.target_accuracy,
                    p.probe_accuracy,
                    p.probe_cross_entropy
                )?,
                Err(_) => writeln!(out, "{},{:?},{},,,", r.role, r.alpha, r.seed)?,
            }
        }
        Ok(())
    }

    /// Aggregate CSV of per-α means and standard deviations; the trend
    /// statistic is repeated on each row.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "role,alpha,n,probe_acc_mean,probe_acc_sd,target_acc_mean,target_acc_sd,spearman_alpha_probe")?;
        for s in &self.summary {
            writeln!(
                out,
                "{},{:?},{},{:?},{:?},{:?},{:?},{:?}",
                self.role,
                s.alpha,
                s.n_ok,
                s.probe_mean,
                s.probe_sd,
                s.target_mean,
                s.target_sd,
                self.trend
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(role: FactorRole, n_second: usize, seed: u64) -> FeatureDataset {
        gen_factor_dataset(&FactorGenConfig::new(role, 8, n_second, 4, 600, seed)).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let fd = small(FactorRole::Redundant, 3, 1);
        for activation in [Activation::Tanh, Activation::Relu] {
            let cfg = MlpConfig {
                hidden_width: 5,
                activation,
                init_scale: 0.7,
                ..Default::default()
            };
            let mut model = init_mlp(&fd, &cfg).unwrap();
            let rows: Vec<usize> = (0..40).collect();
            let loss = MlpLoss::LabelSmoothing(0.3);
            let mut grad = vec![0.0; model.params.len()];
            batch_loss(&model, &fd, &rows, loss, Some(&mut grad));
            let h = 1e-6;
            for i in (0..model.params.len()).step_by(7) {
                let orig = model.params[i];
                model.params[i] = orig + h;
                let up = batch_loss(&model, &fd, &rows, loss, None);
                model.params[i] = orig - h;
                let down = batch_loss(&model, &fd, &rows, loss, None);
                model.params[i] = orig;
                let fd_grad = (up - down) / (2.0 * h);
                assert!(
                    (fd_grad - grad[i]).abs() < 1e-6,
                    "{activation:?} param {i}: {fd_grad} vs {}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn training_is_deterministic_and_descends() {
        let fd = small(FactorRole::Nuisance, 4, 2);
        let cfg = MlpConfig {
            epochs: 5,
            ..Default::default()
        };
        let a = train_mlp(&fd, MlpLoss::LabelSmoothing(0.9), &cfg).unwrap();
        let b = train_mlp(&fd, MlpLoss::LabelSmoothing(0.9), &cfg).unwrap();
        assert_eq!(a.model.params(), b.model.params());
        assert!(a.final_loss < a.initial_loss);
    }

    #[test]
    fn ce_training_fits_the_task() {
        let fd = small(FactorRole::Nuisance, 8, 3);
        let t = train_mlp(&fd, MlpLoss::CrossEntropy, &MlpConfig::default()).unwrap();
        assert!(t.train_accuracy >= TARGET_ACCURACY);
        assert_eq!(t.status, TrainStatus::Ok);
    }

    #[test]
    fn constant_second_factor_is_trivially_probed() {
        let fd = small(FactorRole::Nuisance, 1, 4);
        let cfg = MlpConfig {
            epochs: 2,
            ..Default::default()
        };
        let t = train_mlp(&fd, MlpLoss::CrossEntropy, &cfg).unwrap();
        let r = probe_factor(&t, &fd, &ProbeConfig::default()).unwrap();
        assert_eq!(r.probe_accuracy, 1.0);
    }

    #[test]
    fn probe_leaves_model_untouched() {
        let fd = small(FactorRole::Nuisance, 4, 5);
        let cfg = MlpConfig {
            epochs: 3,
            ..Default::default()
        };
        let t = train_mlp(&fd, MlpLoss::CrossEntropy, &cfg).unwrap();
        let before = t.clone();
        probe_factor(&t, &fd, &ProbeConfig::default()).unwrap();
        assert_eq!(before, t);
    }

    #[test]
    fn probe_rejects_mismatched_model() {
        let fd = small(FactorRole::Nuisance, 4, 5);
        let other = small(FactorRole::Nuisance, 5, 5);
        let cfg = MlpConfig {
            epochs: 1,
            ..Default::default()
        };
        let t = train_mlp(&other, MlpLoss::CrossEntropy, &cfg).unwrap();
        assert!(matches!(
            probe_factor(&t, &fd, &ProbeConfig::default()),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn report_preconditions() {
        let setup = ProbeSetup::default();
        assert!(nuisance_report(FactorRole::Nuisance, &[0.0, 0.6], &[1], &setup).is_err());
        assert!(nuisance_report(FactorRole::Nuisance, &[0.1, 0.6], &[1, 2, 3], &setup).is_err());
        assert!(nuisance_report(FactorRole::Nuisance, &[0.0], &[1, 2, 3], &setup).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[0.0, 0.5, 1.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!((spearman(&[0.0, 0.5, 1.0], &[1.0, 2.0, 2.0]) - 0.8660254037844387).abs() < 1e-12);
        assert_eq!(spearman(&[0.0, 1.0], &[1.0, 1.0]), 0.0);
    }
}

//! Exact information measures over finite alphabets.
//!
//! Everything is in nats. Probabilities below [`ZERO_CUTOFF`] are treated as
//! exactly zero inside logarithms, so `0 ln 0 = 0` and no NaNs leak out.
//! Divergences whose support condition fails return `f64::INFINITY`.
//!
//! All sums run in a fixed index order, so results are bit-reproducible.

use crate::channel::Channel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Probabilities at or below this value contribute nothing to log terms.
pub const ZERO_CUTOFF: f64 = 1e-15;

/// Absolute tolerance on the total mass of a distribution.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn is_zero(p: f64) -> bool {
    p <= ZERO_CUTOFF
}

/// `-p ln p` with the `0 ln 0 = 0` convention.
#[inline]
pub(crate) fn neg_p_ln_p(p: f64) -> f64 {
    if is_zero(p) {
        0.0
    } else {
        -p * p.ln()
    }
}

pub(crate) fn check_simplex(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Validation(format!("{what}: empty distribution")));
    }
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::Validation(format!(
                "{what}: entry {i} is {p}, expected a nonnegative probability"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Validation(format!(
            "{what}: probabilities sum to {sum:.17}, expected 1"
        )));
    }
    Ok(())
}

/// A probability vector on a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist(Vec<f64>);

impl Dist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_simplex(&probs, "distribution")?;
        Ok(Dist(probs))
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Validation("uniform over an empty alphabet".into()));
        }
        Ok(Dist(vec![1.0 / size as f64; size]))
    }

    pub fn point_mass(index: usize, size: usize) -> Result<Self> {
        if index >= size {
            return Err(Error::Index { index, size });
        }
        let mut probs = vec![0.0; size];
        probs[index] = 1.0;
        Ok(Dist(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Dist {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Shannon entropy `-Σ p ln p`.
pub fn entropy(p: &Dist) -> f64 {
    entropy_of(p.probs())
}

/// Entropy of a raw probability slice. The slice is not validated.
pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    p.iter().map(|&v| neg_p_ln_p(v)).sum()
}

/// Cross-entropy `-Σ p ln q`, or `+∞` when `p` puts mass where `q` has none.
pub fn cross_entropy(p: &Dist, q: &Dist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape {
            what: "cross_entropy",
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(cross_entropy_of(p.probs(), q.probs()))
}

pub(crate) fn cross_entropy_of(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if is_zero(pi) {
            continue;
        }
        if is_zero(qi) {
            return f64::INFINITY;
        }
        acc -= pi * qi.ln();
    }
    acc
}

/// `KL[p ‖ q]`, or `+∞` on support mismatch.
pub fn kl_divergence(p: &Dist, q: &Dist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape {
            what: "kl_divergence",
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(kl_of(p.probs(), q.probs()))
}

/// Computed term by term so that `KL[p ‖ p]` is exactly zero.
pub(crate) fn kl_of(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if is_zero(pi) {
            continue;
        }
        if is_zero(qi) {
            return f64::INFINITY;
        }
        acc += pi * (pi / qi).ln();
    }
    acc.max(0.0)
}

/// A joint distribution over two finite alphabets, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    rows: usize,
    cols: usize,
    table: Vec<f64>,
}

impl Joint {
    pub fn new(rows: usize, cols: usize, table: Vec<f64>) -> Result<Self> {
        if rows * cols != table.len() {
            return Err(Error::Shape {
                what: "joint table",
                expected: rows * cols,
                got: table.len(),
            });
        }
        check_simplex(&table, "joint")?;
        Ok(Joint { rows, cols, table })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut table = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Shape {
                    what: "joint row",
                    expected: cols,
                    got: row.len(),
                });
            }
            table.extend_from_slice(row);
        }
        Joint::new(rows.len(), cols, table)
    }

    /// Builds a joint without re-validating. Callers guarantee the simplex
    /// invariant up to rounding.
    pub(crate) fn from_parts(rows: usize, cols: usize, table: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, table.len());
        Joint { rows, cols, table }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.table[a * self.cols + b]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.table
            .chunks(self.cols)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.table.chunks(self.cols) {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Joint {
        let mut table = vec![0.0; self.table.len()];
        for a in 0..self.rows {
            for b in 0..self.cols {
                table[b * self.rows + a] = self.table[a * self.cols + b];
            }
        }
        Joint::from_parts(self.cols, self.rows, table)
    }
}

/// Mutual information `Σ p(a,b) ln(p(a,b) / (p(a) p(b)))`.
pub fn mutual_information(j: &Joint) -> f64 {
    let pa = j.row_marginal();
    let pb = j.col_marginal();
    let mut acc = 0.0;
    for (a, row) in j.table.chunks(j.cols).enumerate() {
        for (b, &pab) in row.iter().enumerate() {
            if is_zero(pab) {
                continue;
            }
            acc += pab * (pab / (pa[a] * pb[b])).ln();
        }
    }
    acc.max(0.0)
}

/// A point on the information plane, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoPoint {
    pub i_xt: f64,
    pub i_ty: f64,
}

impl InfoPoint {
    pub fn new(i_xt: f64, i_ty: f64) -> Self {
        InfoPoint { i_xt, i_ty }
    }

    pub fn scaled(self, factor: f64) -> Self {
        InfoPoint {
            i_xt: self.i_xt * factor,
            i_ty: self.i_ty * factor,
        }
    }
}

fn check_aligned(d: &Dataset, c: &Channel) -> Result<()> {
    if c.n_inputs() != d.n_inputs() {
        return Err(Error::Shape {
            what: "channel rows vs dataset inputs",
            expected: d.n_inputs(),
            got: c.n_inputs(),
        });
    }
    Ok(())
}

/// Joint `p̂(x) c(t|x)` over inputs and representation symbols.
pub fn xt_joint(d: &Dataset, c: &Channel) -> Result<Joint> {
    check_aligned(d, c)?;
    let px = d.p_x();
    let m = c.t_size();
    let mut table = Vec::with_capacity(d.n_inputs() * m);
    for (x, &p) in px.iter().enumerate() {
        table.extend(c.row(x).iter().map(|&ct| p * ct));
    }
    Ok(Joint::from_parts(d.n_inputs(), m, table))
}

/// Joint `Σ_x p̂(x,y) c(t|x)` over representation symbols and classes.
pub fn ty_joint(d: &Dataset, c: &Channel) -> Result<Joint> {
    check_aligned(d, c)?;
    let k = d.n_classes();
    let m = c.t_size();
    let n = d.total() as f64;
    let mut table = vec![0.0; m * k];
    for x in 0..d.n_inputs() {
        let row = c.row(x);
        for &(y, count) in d.entries(x) {
            let pxy = count as f64 / n;
            for (t, &ct) in row.iter().enumerate() {
                table[t * k + y] += pxy * ct;
            }
        }
    }
    Ok(Joint::from_parts(m, k, table))
}

/// Exact `(Î(X;T), Î(T;Y))` of a channel against the empirical joint.
pub fn info_point(d: &Dataset, c: &Channel) -> Result<InfoPoint> {
    let i_xt = mutual_information(&xt_joint(d, c)?);
    let i_ty = mutual_information(&ty_joint(d, c)?);
    Ok(InfoPoint { i_xt, i_ty })
}

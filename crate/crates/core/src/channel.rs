//! Row-stochastic channels `p(T|X)`, one row per unique input.

use std::io::{Read, Write};

use crate::dataset::Dataset;
use crate::dist::{check_simplex, Dist};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    n_inputs: usize,
    t_size: usize,
    probs: Vec<f64>,
}

impl Channel {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let t_size = rows.first().map_or(0, Vec::len);
        if t_size == 0 {
            return Err(Error::Validation(
                "channel needs at least one row and symbol".into(),
            ));
        }
        let n_inputs = rows.len();
        let mut probs = Vec::with_capacity(n_inputs * t_size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != t_size {
                return Err(Error::Shape {
                    what: "channel row",
                    expected: t_size,
                    got: row.len(),
                });
            }
            check_simplex(&row, &format!("channel row {i}"))?;
            probs.extend(row);
        }
        Ok(Channel {
            n_inputs,
            t_size,
            probs,
        })
    }

    pub fn from_dists(rows: Vec<Dist>) -> Result<Self> {
        Channel::from_rows(rows.into_iter().map(Dist::into_inner).collect())
    }

    /// Every row equal to `row`.
    pub fn constant(n_inputs: usize, row: &Dist) -> Self {
        let mut probs = Vec::with_capacity(n_inputs * row.len());
        for _ in 0..n_inputs {
            probs.extend_from_slice(row.probs());
        }
        Channel {
            n_inputs,
            t_size: row.len(),
            probs,
        }
    }

    /// Row-wise softmax of a row-major logit matrix with `t_size` columns.
    pub fn softmax(logits: &[f64], t_size: usize) -> Result<Self> {
        if t_size == 0 || !logits.len().is_multiple_of(t_size) {
            return Err(Error::Shape {
                what: "logit matrix",
                expected: t_size,
                got: logits.len(),
            });
        }
        if let Some(bad) = logits.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite logit {bad}")));
        }
        let mut probs = vec![0.0; logits.len()];
        for (out, row) in probs.chunks_mut(t_size).zip(logits.chunks(t_size)) {
            softmax_into(row, out);
        }
        Ok(Channel {
            n_inputs: logits.len() / t_size,
            t_size,
            probs,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn t_size(&self) -> usize {
        self.t_size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.t_size..(x + 1) * self.t_size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.t_size)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest total-variation distance between corresponding rows.
    pub fn max_row_tv(&self, other: &Channel) -> Result<f64> {
        if self.n_inputs != other.n_inputs || self.t_size != other.t_size {
            return Err(Error::Shape {
                what: "channel comparison",
                expected: self.probs.len(),
                got: other.probs.len(),
            });
        }
        Ok(self
            .rows()
            .zip(other.rows())
            .map(|(a, b)| 0.5 * a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum::<f64>())
            .fold(0.0, f64::max))
    }

    /// Writes `x_id,p_0,...` rows in dataset order at full precision.
    pub fn write_csv<W: Write>(&self, d: &Dataset, out: W) -> Result<()> {
        if d.n_inputs() != self.n_inputs {
            return Err(Error::Shape {
                what: "channel rows vs dataset inputs",
                expected: d.n_inputs(),
                got: self.n_inputs,
            });
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x_id".to_string()];
        header.extend((0..self.t_size).map(|t| format!("p_{t}")));
        w.write_record(&header)?;
        for (id, row) in d.x_ids().iter().zip(self.rows()) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|p| format!("{p:?}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a channel CSV, checking that rows follow the dataset's x_id order.
    pub fn read_csv<R: Read>(d: &Dataset, input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(input);
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let id = rec.get(0).unwrap_or_default();
            match d.x_ids().get(i) {
                Some(expected) if expected == id => {}
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unexpected x_id {id:?} at row {i}"),
                    })
                }
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        msg: format!("bad probability {f:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.len() != d.n_inputs() {
            return Err(Error::Shape {
                what: "channel rows vs dataset inputs",
                expected: d.n_inputs(),
                got: rows.len(),
            });
        }
        Channel::from_rows(rows)
    }
}

pub(crate) fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

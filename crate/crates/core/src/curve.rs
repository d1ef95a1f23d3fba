//! The empirical IB curve of a consistently labeled dataset and the
//! erasure construction that realizes every point of its rising segment.

use std::io::Write;

use crate::channel::Channel;
use crate::dataset::Dataset;
use crate::dist::InfoPoint;
use crate::error::{Error, Result};

/// Default tolerance (nats) for classifying a point as on the curve.
pub const ON_CURVE_TOL: f64 = 1e-6;

/// `Î(T;Y) = min(Î(X;T), Ĥ(Y))`: identity up to the knee, flat after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbCurve {
    h_y: f64,
}

impl IbCurve {
    pub fn new(h_y: f64) -> Result<Self> {
        if !(h_y >= 0.0 && h_y.is_finite()) {
            return Err(Error::Domain(format!(
                "knee height {h_y} must be finite and >= 0"
            )));
        }
        Ok(IbCurve { h_y })
    }

    /// Knee height `Ĥ(Y)`.
    pub fn h_y(&self) -> f64 {
        self.h_y
    }

    pub fn value(&self, i_xt: f64) -> Result<f64> {
        if !(i_xt >= 0.0) {
            return Err(Error::Domain(format!("I(X;T) must be >= 0, got {i_xt}")));
        }
        Ok(i_xt.min(self.h_y))
    }

    /// `points` evenly spaced samples on `[0, x_max]`.
    pub fn sample(&self, x_max: f64, points: usize) -> Vec<InfoPoint> {
        let points = points.max(2);
        (0..points)
            .map(|i| {
                let x = x_max * i as f64 / (points - 1) as f64;
                InfoPoint::new(x, x.min(self.h_y))
            })
            .collect()
    }

    /// Writes sampled points as `i_xt,i_ty`, scaled by `unit_factor`.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        x_max: f64,
        points: usize,
        unit_factor: f64,
    ) -> Result<()> {
        writeln!(out, "i_xt,i_ty")?;
        for p in self.sample(x_max, points) {
            let p = p.scaled(unit_factor);
            writeln!(out, "{:?},{:?}", p.i_xt, p.i_ty)?;
        }
        Ok(())
    }
}

pub fn empirical_curve(d: &Dataset) -> Result<IbCurve> {
    d.require_no_contradictions("empirical IB curve")?;
    IbCurve::new(d.entropy_y())
}

pub fn curve_value(c: &IbCurve, i_xt: f64) -> Result<f64> {
    c.value(i_xt)
}

/// `T = B·f(X)` with `B ~ Bernoulli(alpha)`: row `x` keeps the label `f(x)`
/// with probability `alpha` and otherwise emits the erased symbol, which is
/// index `K`.
pub fn erasure_channel(d: &Dataset, alpha: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Validation(format!("alpha {alpha} outside [0, 1]")));
    }
    let labels = d.labels()?;
    let k = d.n_classes();
    let rows = labels
        .into_iter()
        .map(|y| {
            let mut row = vec![0.0; k + 1];
            row[y] = alpha;
            row[k] += 1.0 - alpha;
            row
        })
        .collect();
    Channel::from_rows(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    OnCurve,
    FeasibleInterior,
    Infeasible,
}

pub fn check_feasible(p: &InfoPoint, c: &IbCurve, tol: f64) -> Result<Feasibility> {
    let bound = c.value(p.i_xt.max(0.0))?;
    Ok(if (p.i_ty - bound).abs() <= tol {
        Feasibility::OnCurve
    } else if p.i_ty > bound + tol {
        Feasibility::Infeasible
    } else {
        Feasibility::FeasibleInterior
    })
}

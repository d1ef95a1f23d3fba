//! Parsing of generator specs (`kind:key=val,...`) and numeric grids.

use lsib::dataset::{
    gen_contradicting, gen_factor_dataset, gen_unique, ConfusionSpec, FactorGenConfig, FactorRole,
    FeatureDataset, GenMode,
};
use lsib::{Dataset, Error, Result};

pub const GRAMMAR: &str = "\
Generator specs (--gen):
  unique:k=<K>,per=<N>
      K classes, N unique inputs per class, one sample each.
  contradict:matrix=<row>|<row>...,nx=<N>,labels=<L>[,mode=exact|sampled]
      N inputs with L annotations each; input x draws labels from matrix
      row x mod K. Rows are '/'-separated probabilities, e.g.
      matrix=0.7/0.3|0.3/0.7.
  factor:role=nuisance|redundant,nf=<F>,ns=<S>,k=<K>,rows=<R>[,noise=<p>]
      Factor-structured feature rows (for `gen` only).
Grids (--alphas, --betas):
  start:stop:step   inclusive arithmetic grid, e.g. 0:0.9:0.1
  a,b,c             explicit list";

pub enum Generated {
    Labels(Dataset),
    Features(FeatureDataset),
}

fn bad(token: &str, msg: impl std::fmt::Display) -> Error {
    Error::Validation(format!("generator spec: {msg} at `{token}`"))
}

struct Fields<'a> {
    pairs: Vec<(&'a str, &'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn parse(body: &'a str, allowed: &[&str]) -> Result<Self> {
        let mut pairs = Vec::new();
        if body.trim().is_empty() {
            return Ok(Fields { pairs });
        }
        for token in body.split(',') {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| bad(token, "expected key=value"))?;
            let k = k.trim();
            if !allowed.contains(&k) {
                return Err(bad(
                    token,
                    format!("unknown key (expected one of {})", allowed.join(", ")),
                ));
            }
            if pairs.iter().any(|(seen, _, _)| *seen == k) {
                return Err(bad(token, "duplicate key"));
            }
            pairs.push((k, v.trim(), token));
        }
        Ok(Fields { pairs })
    }

    fn take(&mut self, key: &str) -> Option<(&'a str, &'a str)> {
        let i = self.pairs.iter().position(|(k, _, _)| *k == key)?;
        let (_, v, t) = self.pairs.remove(i);
        Some((v, t))
    }

    fn required<T: std::str::FromStr>(&mut self, key: &str, kind: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            Some((v, t)) => v.parse().map_err(|e| bad(t, e)),
            None => Err(bad(kind, format!("missing key `{key}`"))),
        }
    }

    fn optional<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            Some((v, t)) => v.parse().map(Some).map_err(|e| bad(t, e)),
            None => Ok(None),
        }
    }
}

fn parse_matrix(v: &str, token: &str) -> Result<Vec<Vec<f64>>> {
    v.split('|')
        .map(|row| {
            row.split('/')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|e| bad(token, format!("{e} in `{p}`")))
                })
                .collect()
        })
        .collect()
}

pub fn generate(spec: &str, seed: u64) -> Result<Generated> {
    let (kind, body) = spec.split_once(':').unwrap_or((spec, ""));
    let allowed: &[&str] = match kind.trim() {
        "unique" => &["k", "per"],
        "contradict" => &["matrix", "nx", "labels", "mode"],
        "factor" => &["role", "nf", "ns", "k", "rows", "noise"],
        other => return Err(bad(other, "unknown generator kind")),
    };
    let mut f = Fields::parse(body, allowed)?;
    let out = match kind.trim() {
        "unique" => {
            let k = f.required("k", kind)?;
            let per = f.required("per", kind)?;
            Generated::Labels(gen_unique(k, per, seed)?)
        }
        "contradict" => {
            let (m, t) = f
                .take("matrix")
                .ok_or_else(|| bad(kind, "missing key `matrix`"))?;
            let matrix = parse_matrix(m, t)?;
            let nx = f.required("nx", kind)?;
            let labels = f.required("labels", kind)?;
            let mode = match f.take("mode") {
                None | Some(("exact", _)) => GenMode::Exact,
                Some(("sampled", _)) => GenMode::Sampled,
                Some((_, t)) => return Err(bad(t, "mode must be exact or sampled")),
            };
            Generated::Labels(gen_contradicting(
                &ConfusionSpec::new(matrix, nx, labels)?,
                mode,
                seed,
            )?)
        }
        "factor" => {
            let role: FactorRole = f.required("role", kind)?;
            let nf = f.required("nf", kind)?;
            let ns = f.required("ns", kind)?;
            let k = f.required("k", kind)?;
            let rows = f.required("rows", kind)?;
            let mut cfg = FactorGenConfig::new(role, nf, ns, k, rows, seed);
            if let Some(noise) = f.optional("noise")? {
                cfg.redundant_noise = noise;
            }
            Generated::Features(gen_factor_dataset(&cfg)?)
        }
        _ => unreachable!("kind checked above"),
    };
    Ok(out)
}

/// A labeled dataset from a generator spec; factor specs are rejected.
pub fn generate_labels(spec: &str, seed: u64) -> Result<Dataset> {
    match generate(spec, seed)? {
        Generated::Labels(d) => Ok(d),
        Generated::Features(_) => Err(Error::Validation(
            "factor generator produces feature rows, not a labeled dataset".into(),
        )),
    }
}

pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| Error::Validation(format!("grid: {e} at `{t}`")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
                return Err(Error::Validation(format!(
                    "grid: need start <= stop and step > 0 at `{text}`"
                )));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            // round to the step's decimal precision so that 0.1 * 3 prints as 0.3
            let digits = decimals(step);
            (0..=n)
                .map(|i| round_to(a + i as f64 * h, digits))
                .collect()
        }
        [_] => text.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => {
            return Err(Error::Validation(format!(
                "grid: expected start:stop:step or a list at `{text}`"
            )))
        }
    };
    if values.is_empty() {
        return Err(Error::Validation("grid: empty".into()));
    }
    Ok(values)
}

fn decimals(token: &str) -> i32 {
    token
        .trim()
        .split_once('.')
        .map_or(0, |(_, frac)| frac.len() as i32)
        .clamp(0, 12)
        + 3
}

fn round_to(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("0:0.9:0.1").unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[9], 0.9);
        assert_eq!(parse_grid("0,0.3,0.6").unwrap(), vec![0.0, 0.3, 0.6]);
        assert_eq!(
            parse_grid("0:1:0.25").unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0,x").unwrap_err().to_string().contains("`x`"));
    }

    #[test]
    fn generators() {
        let Generated::Labels(d) = generate("unique:k=4,per=25", 0).unwrap() else {
            panic!()
        };
        assert_eq!(d.n_inputs(), 100);
        let d = generate_labels("contradict:matrix=0.7/0.3|0.3/0.7,nx=2,labels=10", 0).unwrap();
        assert_eq!(d.total(), 20);
        assert!(matches!(
            generate("factor:role=redundant,nf=8,ns=4,k=4,rows=100", 1).unwrap(),
            Generated::Features(_)
        ));
    }

    #[test]
    fn errors_cite_the_token() {
        let msg = |s: &str| generate(s, 0).err().unwrap().to_string();
        assert!(msg("unique:k=4,per=x").contains("`per=x`"));
        assert!(msg("unique:k=4,per=2,zz=1").contains("`zz=1`"));
        assert!(msg("unique:k=4").contains("per"));
        assert!(msg("blob:k=1").contains("`blob`"));
        assert!(msg("contradict:matrix=0.7/a|0.3/0.7,nx=2,labels=3").contains("matrix=0.7/a"));
        assert!(msg("unique:k4").contains("`k4`"));
    }
}

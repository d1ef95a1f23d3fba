//! Empirical joints `p̂(X,Y)` stored as integer counts, plus synthetic
//! generators and CSV ingestion.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{entropy_of, Joint};
use crate::error::{Error, Result};

/// Weighted empirical distribution over unique inputs and classes.
///
/// `x_ids` are opaque strings compared exactly. Each input holds its
/// `(class, count)` pairs sorted by class, every count at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x_ids: Vec<String>,
    counts: Vec<Vec<(usize, u64)>>,
    n_classes: usize,
    total: u64,
    notes: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from `(x_index, y, count)` triples. Repeated
    /// `(x, y)` pairs are summed.
    pub fn new<I>(x_ids: Vec<String>, n_classes: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        if n_classes == 0 {
            return Err(Error::Validation(
                "number of classes must be positive".into(),
            ));
        }
        let mut seen = HashMap::with_capacity(x_ids.len());
        for (i, id) in x_ids.iter().enumerate() {
            if let Some(prev) = seen.insert(id.as_str(), i) {
                return Err(Error::Validation(format!(
                    "duplicate x_id {id:?} at indices {prev} and {i}"
                )));
            }
        }
        let mut per_x: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); x_ids.len()];
        for (x, y, count) in entries {
            if x >= x_ids.len() {
                return Err(Error::Index {
                    index: x,
                    size: x_ids.len(),
                });
            }
            if y >= n_classes {
                return Err(Error::Validation(format!(
                    "class {y} out of range for K={n_classes}"
                )));
            }
            if count == 0 {
                return Err(Error::Validation(format!(
                    "zero count for input {:?}, class {y}",
                    x_ids[x]
                )));
            }
            *per_x[x].entry(y).or_insert(0) += count;
        }
        if let Some(x) = per_x.iter().position(BTreeMap::is_empty) {
            return Err(Error::Validation(format!(
                "input {:?} has no labels",
                x_ids[x]
            )));
        }
        let counts: Vec<Vec<(usize, u64)>> =
            per_x.into_iter().map(|m| m.into_iter().collect()).collect();
        let total = counts.iter().flatten().map(|&(_, c)| c).sum();
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset {
            x_ids,
            counts,
            n_classes,
            total,
            notes: Vec::new(),
        })
    }

    /// One sample per input with the given label.
    pub fn from_labels(x_ids: Vec<String>, labels: &[usize], n_classes: usize) -> Result<Self> {
        if x_ids.len() != labels.len() {
            return Err(Error::Shape {
                what: "labels vs x_ids",
                expected: x_ids.len(),
                got: labels.len(),
            });
        }
        Dataset::new(
            x_ids,
            n_classes,
            labels.iter().enumerate().map(|(x, &y)| (x, y, 1)),
        )
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn x_ids(&self) -> &[String] {
        &self.x_ids
    }

    pub fn n_inputs(&self) -> usize {
        self.x_ids.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Total sample count `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// `(class, count)` pairs of input `x`, sorted by class.
    pub fn entries(&self, x: usize) -> &[(usize, u64)] {
        &self.counts[x]
    }

    /// All `(x, y, count)` triples in `(x, y)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |&(y, c)| (x, y, c)))
    }

    pub fn x_count(&self, x: usize) -> u64 {
        self.counts[x].iter().map(|&(_, c)| c).sum()
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut out = vec![0; self.n_classes];
        for (_, y, c) in self.iter() {
            out[y] += c;
        }
        out
    }

    pub fn p_x(&self) -> Vec<f64> {
        let n = self.total as f64;
        (0..self.n_inputs())
            .map(|x| self.x_count(x) as f64 / n)
            .collect()
    }

    pub fn p_y(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.class_counts()
            .into_iter()
            .map(|c| c as f64 / n)
            .collect()
    }

    /// The empirical joint over (input, class).
    pub fn joint(&self) -> Joint {
        let n = self.total as f64;
        let mut table = vec![0.0; self.n_inputs() * self.n_classes];
        for (x, y, c) in self.iter() {
            table[x * self.n_classes + y] = c as f64 / n;
        }
        Joint::from_parts(self.n_inputs(), self.n_classes, table)
    }

    /// `Ĥ(Y)` in nats.
    pub fn entropy_y(&self) -> f64 {
        entropy_of(&self.p_y())
    }

    /// `Ĥ(Y|X)` in nats.
    pub fn conditional_entropy_y(&self) -> f64 {
        let n = self.total as f64;
        let mut acc = 0.0;
        for x in 0..self.n_inputs() {
            let nx = self.x_count(x) as f64;
            for &(_, c) in &self.counts[x] {
                let c = c as f64;
                acc -= c / n * (c / nx).ln();
            }
        }
        acc.max(0.0)
    }

    /// Indices of inputs observed with two or more distinct labels.
    pub fn detect_contradictions(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, row)| row.len() > 1)
            .map(|(x, _)| x)
            .collect()
    }

    /// The label function `f(x)` when every input has exactly one label.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.require_no_contradictions("labels are not a function of the input")?;
        Ok(self.counts.iter().map(|row| row[0].0).collect())
    }

    /// Fails with the offending x_ids when some input carries two labels.
    pub fn require_no_contradictions(&self, what: &str) -> Result<()> {
        let bad = self.detect_contradictions();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Precondition {
                msg: format!("{what}: dataset has contradicting labels"),
                x_ids: bad.into_iter().map(|x| self.x_ids[x].clone()).collect(),
            })
        }
    }

    /// Loads the `x_id,y,count` CSV format.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Dataset::read_csv(file)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(input).read_to_string(&mut text)?;

        let mut declared_k = None;
        let mut notes = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let Some(comment) = line.trim_start().strip_prefix('#') else {
                continue;
            };
            let comment = comment.trim();
            if let Some(k) = comment.strip_prefix("k=") {
                let k = k.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: i as u64 + 1,
                    msg: format!("bad class count {k:?}: {e}"),
                })?;
                declared_k = Some(k);
            } else if let Some(note) = comment.strip_prefix("note=") {
                notes.push(note.to_string());
            }
        }

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let expected = ["x_id", "y", "count"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(a, b)| a != b) {
            if headers.is_empty() || headers.iter().all(str::is_empty) {
                return Err(Error::EmptyDataset);
            }
            return Err(Error::Parse {
                line: headers.position().map_or(1, |p| p.line()),
                msg: format!(
                    "expected header x_id,y,count, got {:?}",
                    headers.iter().collect::<Vec<_>>()
                ),
            });
        }

        let mut index: HashMap<String, usize> = HashMap::new();
        let mut x_ids = Vec::new();
        let mut triples = Vec::new();
        let mut max_y = 0usize;
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 3 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 3 fields, got {}", rec.len()),
                });
            }
            let id = &rec[0];
            let y: i64 = rec[1].parse().map_err(|e| Error::Parse {
                line,
                msg: format!("bad class {:?}: {e}", &rec[1]),
            })?;
            let count: i64 = rec[2].parse().map_err(|e| Error::Parse {
                line,
                msg: format!("bad count {:?}: {e}", &rec[2]),
            })?;
            if y < 0 {
                return Err(Error::Validation(format!(
                    "line {line}: negative class {y}"
                )));
            }
            if count <= 0 {
                return Err(Error::Validation(format!(
                    "line {line}: count must be positive, got {count}"
                )));
            }
            let y = y as usize;
            if let Some(k) = declared_k {
                if y >= k {
                    return Err(Error::Validation(format!(
                        "line {line}: class {y} out of range for declared k={k}"
                    )));
                }
            }
            max_y = max_y.max(y);
            let x = *index.entry(id.to_string()).or_insert_with(|| {
                x_ids.push(id.to_string());
                x_ids.len() - 1
            });
            triples.push((x, y, count as u64));
        }
        if triples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let k = declared_k.unwrap_or(max_y + 1);
        let mut d = Dataset::new(x_ids, k, triples)?;
        d.notes = notes;
        Ok(d)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# k={}", self.n_classes)?;
        writeln!(out, "# weighting=raw-counts")?;
        for note in &self.notes {
            writeln!(out, "# note={note}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_id", "y", "count"])?;
        for (x, y, c) in self.iter() {
            w.write_record([self.x_ids[x].as_str(), &y.to_string(), &c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Balanced dataset with `per_class` unique inputs per class, one sample each.
///
/// The seed only permutes which input id carries which label.
pub fn gen_unique(n_classes: usize, per_class: usize, seed: u64) -> Result<Dataset> {
    if n_classes < 2 {
        return Err(Error::Validation(format!("need K >= 2, got {n_classes}")));
    }
    if per_class == 0 {
        return Err(Error::Validation("per_class must be at least 1".into()));
    }
    let n = n_classes * per_class;
    let mut labels: Vec<usize> = (0..n).map(|i| i % n_classes).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let width = (n - 1).to_string().len();
    let x_ids = (0..n).map(|i| format!("u{i:0width$}")).collect();
    Dataset::from_labels(x_ids, &labels, n_classes)
}

/// Annotator confusion: input `x` draws its labels from row `x mod K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionSpec {
    pub matrix: Vec<Vec<f64>>,
    pub n_x: usize,
    pub labels_per_x: u64,
}

impl ConfusionSpec {
    pub fn new(matrix: Vec<Vec<f64>>, n_x: usize, labels_per_x: u64) -> Result<Self> {
        let spec = ConfusionSpec {
            matrix,
            n_x,
            labels_per_x,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_classes(&self) -> usize {
        self.matrix.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.matrix.len();
        if k == 0 {
            return Err(Error::Validation("confusion matrix is empty".into()));
        }
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Shape {
                    what: "confusion matrix row",
                    expected: k,
                    got: row.len(),
                });
            }
            crate::dist::check_simplex(row, &format!("confusion row {i}"))?;
        }
        if self.n_x == 0 || self.labels_per_x == 0 {
            return Err(Error::Validation(
                "n_x and labels_per_x must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GenMode {
    /// Rounded expected counts.
    #[default]
    Exact,
    /// Categorical draws from the seeded generator.
    Sampled,
}

/// Rounds `total * probs` to integers summing to `total` (largest remainder),
/// keeping at least one count on every positive entry when `total` allows.
fn apportion(probs: &[f64], total: u64) -> Vec<u64> {
    let expected: Vec<f64> = probs.iter().map(|p| p * total as f64).collect();
    let mut counts: Vec<u64> = expected.iter().map(|e| (e + 1e-9).floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = expected[a] - counts[a] as f64;
        let rb = expected[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    let positive = probs.iter().filter(|&&p| p > 0.0).count() as u64;
    if total >= positive {
        for i in 0..probs.len() {
            if probs[i] > 0.0 && counts[i] == 0 {
                let donor = (0..counts.len())
                    .max_by_key(|&j| (counts[j], usize::MAX - j))
                    .unwrap();
                counts[donor] -= 1;
                counts[i] += 1;
            }
        }
    }
    counts
}

/// Multi-annotator dataset where inputs can carry contradicting labels.
pub fn gen_contradicting(spec: &ConfusionSpec, mode: GenMode, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let k = spec.n_classes();
    let width = spec.n_x.saturating_sub(1).to_string().len();
    let x_ids: Vec<String> = (0..spec.n_x).map(|i| format!("c{i:0width$}")).collect();
    let mut triples = Vec::new();
    let mut notes = Vec::new();
    match mode {
        GenMode::Exact => {
            for (x, id) in x_ids.iter().enumerate() {
                let row = &spec.matrix[x % k];
                let counts = apportion(row, spec.labels_per_x);
                let drift = row
                    .iter()
                    .zip(&counts)
                    .any(|(p, &c)| (p * spec.labels_per_x as f64 - c as f64).abs() > 1e-9);
                if drift {
                    notes.push(format!(
                        "{}: expected counts {:?} rounded to {:?}",
                        id,
                        row.iter()
                            .map(|p| p * spec.labels_per_x as f64)
                            .collect::<Vec<_>>(),
                        counts
                    ));
                }
                triples.extend(
                    counts
                        .into_iter()
                        .enumerate()
                        .filter(|&(_, c)| c > 0)
                        .map(|(y, c)| (x, y, c)),
                );
            }
        }
        GenMode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for x in 0..spec.n_x {
                let sampler = WeightedIndex::new(&spec.matrix[x % k])
                    .map_err(|e| Error::Validation(format!("confusion row: {e}")))?;
                let mut counts = vec![0u64; k];
                for _ in 0..spec.labels_per_x {
                    counts[sampler.sample(&mut rng)] += 1;
                }
                triples.extend(
                    counts
                        .into_iter()
                        .enumerate()
                        .filter(|&(_, c)| c > 0)
                        .map(|(y, c)| (x, y, c)),
                );
            }
        }
    }
    let mut d = Dataset::new(x_ids, k, triples)?;
    d.notes = notes;
    Ok(d)
}

/// How the second factor relates to the informative one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorRole {
    /// Independent of the informative factor and of the label.
    Nuisance,
    /// Generated from the informative factor only.
    Redundant,
}

impl fmt::Display for FactorRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FactorRole::Nuisance => "nuisance",
            FactorRole::Redundant => "redundant",
        })
    }
}

impl std::str::FromStr for FactorRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nuisance" => Ok(FactorRole::Nuisance),
            "redundant" => Ok(FactorRole::Redundant),
            other => Err(Error::Validation(format!("unknown factor role {other:?}"))),
        }
    }
}

/// One row of a factor-structured dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorRow {
    pub informative: usize,
    pub second: usize,
    pub y: usize,
}

/// Tabular data with an informative factor, a second factor, and a label.
/// Features are the concatenated one-hot codes of both factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    pub role: FactorRole,
    pub n_informative: usize,
    pub n_second: usize,
    pub n_classes: usize,
    pub rows: Vec<FactorRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorGenConfig {
    pub role: FactorRole,
    pub n_informative: usize,
    pub n_second: usize,
    pub n_classes: usize,
    pub n_rows: usize,
    /// Probability that a redundant factor is redrawn uniformly instead of
    /// following the informative factor. Zero gives the exact map.
    pub redundant_noise: f64,
    pub seed: u64,
}

impl FactorGenConfig {
    pub fn new(
        role: FactorRole,
        n_informative: usize,
        n_second: usize,
        n_classes: usize,
        n_rows: usize,
        seed: u64,
    ) -> Self {
        FactorGenConfig {
            role,
            n_informative,
            n_second,
            n_classes,
            n_rows,
            redundant_noise: 0.2,
            seed,
        }
    }
}

/// Label of informative value `f`; surjective onto the classes when
/// `n_informative >= n_classes`.
pub fn factor_label(f: usize, n_classes: usize) -> usize {
    f % n_classes
}

pub fn gen_factor_dataset(cfg: &FactorGenConfig) -> Result<FeatureDataset> {
    if cfg.n_classes < 1 || cfg.n_second < 1 || cfg.n_rows < 1 {
        return Err(Error::Validation(
            "classes, second-factor cardinality and row count must be positive".into(),
        ));
    }
    if cfg.n_informative < cfg.n_classes {
        return Err(Error::Validation(format!(
            "informative cardinality {} must be at least K={}",
            cfg.n_informative, cfg.n_classes
        )));
    }
    if !(0.0..=1.0).contains(&cfg.redundant_noise) {
        return Err(Error::Validation(format!(
            "redundant noise {} outside [0, 1]",
            cfg.redundant_noise
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rows = (0..cfg.n_rows)
        .map(|_| {
            let informative = rng.gen_range(0..cfg.n_informative);
            let second = match cfg.role {
                FactorRole::Nuisance => rng.gen_range(0..cfg.n_second),
                FactorRole::Redundant => {
                    if rng.gen::<f64>() < cfg.redundant_noise {
                        rng.gen_range(0..cfg.n_second)
                    } else {
                        informative % cfg.n_second
                    }
                }
            };
            FactorRow {
                informative,
                second,
                y: factor_label(informative, cfg.n_classes),
            }
        })
        .collect();
    Ok(FeatureDataset {
        role: cfg.role,
        n_informative: cfg.n_informative,
        n_second: cfg.n_second,
        n_classes: cfg.n_classes,
        rows,
    })
}

impl FeatureDataset {
    pub fn feature_width(&self) -> usize {
        self.n_informative + self.n_second
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column indices of the two active one-hot features of `row`.
    pub fn active_features(&self, row: &FactorRow) -> [usize; 2] {
        [row.informative, self.n_informative + row.second]
    }

    /// Empirical `Î(second; Y)`.
    pub fn mi_second_label(&self) -> f64 {
        let mut pair = vec![0u64; self.n_second * self.n_classes];
        for r in &self.rows {
            pair[r.second * self.n_classes + r.y] += 1;
        }
        let n = self.rows.len() as f64;
        let table = pair.iter().map(|&c| c as f64 / n).collect();
        crate::dist::mutual_information(&Joint::from_parts(self.n_second, self.n_classes, table))
    }

    /// Empirical `Î(second; Y | F)`, computed from integer counts so that a
    /// label determined by `F` gives exactly zero.
    pub fn conditional_mi_second_label(&self) -> f64 {
        let mut c_fsy: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
        let mut c_fs: HashMap<(usize, usize), u64> = HashMap::new();
        let mut c_fy: HashMap<(usize, usize), u64> = HashMap::new();
        let mut c_f: HashMap<usize, u64> = HashMap::new();
        for r in &self.rows {
            *c_fsy.entry((r.informative, r.second, r.y)).or_default() += 1;
            *c_fs.entry((r.informative, r.second)).or_default() += 1;
            *c_fy.entry((r.informative, r.y)).or_default() += 1;
            *c_f.entry(r.informative).or_default() += 1;
        }
        let n = self.rows.len() as f64;
        let mut acc = 0.0;
        for (&(f, s, y), &c) in &c_fsy {
            let num = c as f64 * c_f[&f] as f64;
            let den = c_fs[&(f, s)] as f64 * c_fy[&(f, y)] as f64;
            if num != den {
                acc += c as f64 / n * (num / den).ln();
            }
        }
        acc.max(0.0)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        FeatureDataset::read_csv(std::fs::File::open(path)?)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut role = None;
        let mut widths = None;
        let mut k = None;
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let lineno = i as u64 + 1;
            let parse_err = |msg: String| Error::Parse { line: lineno, msg };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(c) = trimmed.strip_prefix('#') {
                let c = c.trim();
                if let Some(v) = c.strip_prefix("role=") {
                    role = Some(v.trim().parse::<FactorRole>()?);
                } else if let Some(v) = c.strip_prefix("widths=") {
                    let parts: Vec<usize> = v
                        .split(',')
                        .map(|p| p.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| parse_err(format!("bad widths {v:?}: {e}")))?;
                    if parts.len() != 2 {
                        return Err(parse_err(format!("widths needs two values, got {v:?}")));
                    }
                    widths = Some((parts[0], parts[1]));
                } else if let Some(v) = c.strip_prefix("k=") {
                    k = Some(
                        v.trim()
                            .parse::<usize>()
                            .map_err(|e| parse_err(format!("bad class count {v:?}: {e}")))?,
                    );
                }
                continue;
            }
            if !header_seen {
                if trimmed.replace(' ', "") != "f,second,y" {
                    return Err(parse_err(format!(
                        "expected header f,second,y, got {trimmed:?}"
                    )));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 fields, got {}",
                    fields.len()
                )));
            }
            let mut vals = [0usize; 3];
            for (v, f) in vals.iter_mut().zip(&fields) {
                *v = f
                    .parse()
                    .map_err(|e| parse_err(format!("bad value {f:?}: {e}")))?;
            }
            rows.push(FactorRow {
                informative: vals[0],
                second: vals[1],
                y: vals[2],
            });
        }
        let role = role.ok_or_else(|| Error::Validation("missing `# role=` header".into()))?;
        let (n_informative, n_second) =
            widths.ok_or_else(|| Error::Validation("missing `# widths=` header".into()))?;
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_classes = k.unwrap_or_else(|| rows.iter().map(|r| r.y).max().unwrap_or(0) + 1);
        for r in &rows {
            if r.informative >= n_informative || r.second >= n_second || r.y >= n_classes {
                return Err(Error::Validation(format!(
                    "row {r:?} outside widths ({n_informative}, {n_second}) or K={n_classes}"
                )));
            }
        }
        Ok(FeatureDataset {
            role,
            n_informative,
            n_second,
            n_classes,
            rows,
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# role={}", self.role)?;
        writeln!(out, "# widths={},{}", self.n_informative, self.n_second)?;
        writeln!(out, "# k={}", self.n_classes)?;
        writeln!(out, "f,second,y")?;
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.informative, r.second, r.y)?;
        }
        out.flush()?;
        Ok(())
    }
}

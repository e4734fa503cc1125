//! Tabular datasets: synthetic generation, CSV ingestion, z-scoring and splits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Matrix, Rng, Stream};
use crate::scalar::Scalar;

/// Columns whose training std falls below this are left untouched.
pub const CONSTANT_COLUMN_STD: f64 = 1e-12;

pub const DEFAULT_LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub features: Matrix<T>,
    /// 0/1 per row when known.
    pub labels: Option<Vec<u8>>,
    pub feature_names: Vec<String>,
    pub standardization: Option<Standardization<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Matrix<T>, labels: Option<Vec<u8>>) -> Result<Self> {
        let names = default_feature_names(features.cols());
        Self::with_names(features, labels, names)
    }

    pub fn with_names(features: Matrix<T>, labels: Option<Vec<u8>>, feature_names: Vec<String>) -> Result<Self> {
        if feature_names.len() != features.cols() {
            return Err(Error::dims("feature names", features.cols(), feature_names.len()));
        }
        if let Some(labels) = &labels {
            if labels.len() != features.rows() {
                return Err(Error::dims("labels", features.rows(), labels.len()));
            }
            if let Some(bad) = labels.iter().find(|&&l| l > 1) {
                return Err(Error::invalid(format!("label {bad} is not 0 or 1")));
            }
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            standardization: None,
        })
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn labels(&self) -> Result<&[u8]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::invalid("dataset has no labels"))
    }

    pub fn n_positive(&self) -> usize {
        self.labels.as_ref().map_or(0, |l| l.iter().filter(|&&y| y == 1).count())
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            feature_names: self.feature_names.clone(),
            standardization: self.standardization.clone(),
        }
    }

    pub fn without_labels(&self) -> Self {
        Self {
            labels: None,
            ..self.clone()
        }
    }

    /// Writes a header row, then one row per sample; labels (if any) go in a
    /// trailing `label` column.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.write_records(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_records<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let mut header = self.feature_names.clone();
        if self.labels.is_some() {
            header.push(DEFAULT_LABEL_COLUMN.to_string());
        }
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for (r, row) in self.features.row_iter().enumerate() {
            record.clear();
            record.extend(row.iter().map(|v| v.to_f64_lossy().to_string()));
            if let Some(labels) = &self.labels {
                record.push(labels[r].to_string());
            }
            w.write_record(&record)?;
        }
        Ok(())
    }
}

fn default_feature_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

// ---------------------------------------------------------------------------
// Synthetic generation

/// Knobs for [`generate_synthetic`]. Class 1 is the minority class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub d: usize,
    /// Minority-class proportion.
    pub imbalance: f64,
    /// Hypercube half-side: cluster centers sit at `±class_sep` per informative axis.
    pub class_sep: f64,
    /// Fraction of rows whose label is swapped with a row of the other class.
    pub flip_fraction: f64,
    pub clusters_per_class: usize,
    /// Leading features carrying the clusters; the rest are pure N(0, 1). `None` means all `d`.
    pub n_informative: Option<usize>,
    /// Random linear combinations of the informative features, placed right after them.
    pub n_redundant: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 20_000,
            d: 20,
            imbalance: 0.05,
            class_sep: 1.0,
            flip_fraction: 0.01,
            clusters_per_class: 1,
            n_informative: None,
            n_redundant: 0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn informative(&self) -> usize {
        self.n_informative.unwrap_or(self.d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::arg(format!("n must be at least 10, got {}", self.n)));
        }
        if self.d < 2 {
            return Err(Error::arg(format!("d must be at least 2, got {}", self.d)));
        }
        if !(self.imbalance > 0.0 && self.imbalance < 0.5) {
            return Err(Error::arg(format!("imbalance must lie in (0, 0.5), got {}", self.imbalance)));
        }
        if !(0.0..=1.0).contains(&self.flip_fraction) {
            return Err(Error::arg(format!("flip_fraction must lie in [0, 1], got {}", self.flip_fraction)));
        }
        if !(self.class_sep.is_finite() && self.class_sep >= 0.0) {
            return Err(Error::arg(format!("class_sep must be finite and nonnegative, got {}", self.class_sep)));
        }
        if self.clusters_per_class == 0 {
            return Err(Error::arg("clusters_per_class must be at least 1"));
        }
        let inf = self.informative();
        if inf == 0 || inf > self.d {
            return Err(Error::arg(format!("n_informative must lie in 1..={}, got {inf}", self.d)));
        }
        if inf + self.n_redundant > self.d {
            return Err(Error::arg(format!(
                "{inf} informative plus {} redundant features exceed d = {}",
                self.n_redundant, self.d
            )));
        }
        let vertices_needed = 2 * self.clusters_per_class;
        if inf < 63 && (1u64 << inf) < vertices_needed as u64 {
            return Err(Error::arg(format!(
                "{inf} informative features give too few hypercube vertices for {vertices_needed} clusters"
            )));
        }
        let n_minority = self.minority_count();
        if n_minority < self.clusters_per_class || self.n - n_minority < self.clusters_per_class {
            return Err(Error::arg("too few samples for the requested clusters per class"));
        }
        Ok(())
    }

    pub fn minority_count(&self) -> usize {
        (self.imbalance * self.n as f64).round() as usize
    }
}

/// A generated dataset plus the cluster geometry behind it.
#[derive(Debug, Clone)]
pub struct Synthetic<T> {
    pub dataset: Dataset<T>,
    /// Cluster coordinates before the per-cluster linear mix (informative columns only).
    pub latent: Matrix<T>,
    /// Cluster centers, `2 * clusters_per_class` rows; the first half belong to class 0.
    pub centroids: Matrix<T>,
    /// Cluster index of every row.
    pub cluster: Vec<usize>,
    /// Rows whose label was swapped.
    pub flipped: Vec<usize>,
}

pub fn generate_synthetic<T: Scalar>(config: &SyntheticConfig) -> Result<Dataset<T>> {
    Ok(generate_synthetic_detailed(config)?.dataset)
}

/// Gaussian clusters on distinct hypercube vertices, one random linear map per
/// cluster to correlate the informative features, redundant linear
/// combinations of those, pure-noise filler features,
/// then count-preserving label swaps and a final row shuffle.
pub fn generate_synthetic_detailed<T: Scalar>(config: &SyntheticConfig) -> Result<Synthetic<T>> {
    config.validate()?;
    let mut rng = Rng::stream(config.seed, Stream::Data);
    let n = config.n;
    let d = config.d;
    let inf = config.informative();
    let k = config.clusters_per_class;
    let sep = T::lit(config.class_sep);

    let n_clusters = 2 * k;
    let mut vertices: Vec<Vec<bool>> = Vec::with_capacity(n_clusters);
    while vertices.len() < n_clusters {
        let v: Vec<bool> = (0..inf).map(|_| rng.bernoulli(0.5)).collect();
        if !vertices.contains(&v) {
            vertices.push(v);
        }
    }
    let centroids = Matrix::from_fn(n_clusters, inf, |c, j| if vertices[c][j] { sep } else { -sep });
    let mixes: Vec<Matrix<T>> = (0..n_clusters)
        .map(|_| Matrix::from_fn(inf, inf, |_, _| rng.uniform_range(-T::one(), T::one())))
        .collect();
    let red = config.n_redundant;
    let redundancy = Matrix::from_fn(inf, red, |_, _| rng.uniform_range(-T::one(), T::one()));

    let n_minority = config.minority_count();
    let n_majority = n - n_minority;
    let mut cluster = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (class, count) in [(0u8, n_majority), (1u8, n_minority)] {
        for i in 0..count {
            cluster.push(class as usize * k + i % k);
            labels.push(class);
        }
    }

    let mut latent = Matrix::zeros(n, inf);
    let mut features = Matrix::zeros(n, d);
    let mut z = vec![T::zero(); inf];
    for r in 0..n {
        let c = cluster[r];
        for v in z.iter_mut() {
            *v = rng.standard_normal();
        }
        let centre = centroids.row(c);
        for j in 0..inf {
            latent.set(r, j, centre[j] + z[j]);
        }
        let mix = &mixes[c];
        for j in 0..inf {
            let mixed = (0..inf).fold(T::zero(), |acc, i| acc + z[i] * mix.get(i, j));
            features.set(r, j, centre[j] + mixed);
        }
        for j in 0..red {
            let v = (0..inf).fold(T::zero(), |acc, i| acc + features.get(r, i) * redundancy.get(i, j));
            features.set(r, inf + j, v);
        }
        for j in inf + red..d {
            features.set(r, j, rng.standard_normal());
        }
    }

    // Swap labels between equal numbers of majority and minority rows so the
    // class balance survives the noise.
    let pairs = ((config.flip_fraction * n as f64) / 2.0).round() as usize;
    let pairs = pairs.min(n_minority);
    let mut flipped = Vec::with_capacity(2 * pairs);
    if pairs > 0 {
        let from_majority = rng.sample_indices(n_majority, pairs);
        let from_minority = rng.sample_indices(n_minority, pairs);
        for (a, b) in from_majority.into_iter().zip(from_minority) {
            let b = n_majority + b;
            labels.swap(a, b);
            flipped.push(a);
            flipped.push(b);
        }
    }

    let perm = rng.permutation(n);
    let mut inverse = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inverse[old] = new;
    }
    let mut flipped: Vec<usize> = flipped.into_iter().map(|i| inverse[i]).collect();
    flipped.sort_unstable();

    let features = features.select_rows(&perm);
    let latent = latent.select_rows(&perm);
    let labels = perm.iter().map(|&i| labels[i]).collect();
    let cluster = perm.iter().map(|&i| cluster[i]).collect();

    Ok(Synthetic {
        dataset: Dataset::new(features, Some(labels))?,
        latent,
        centroids,
        cluster,
        flipped,
    })
}

// ---------------------------------------------------------------------------
// CSV

/// Header plus raw string cells.
#[derive(Debug, Clone)]
struct Table {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::invalid("missing header row"));
    }
    let rows = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(Error::invalid("no rows"));
    }
    Ok(Table { header, rows })
}

fn parse_cell<T: Scalar>(table: &Table, row: usize, col: usize) -> Result<T> {
    let raw = table.rows[row].get(col).unwrap_or("").trim();
    let value: f64 = raw.parse().map_err(|_| Error::Parse {
        row: row + 1,
        column: table.header[col].clone(),
        message: format!("`{raw}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            row: row + 1,
            column: table.header[col].clone(),
            message: format!("`{raw}` is not finite"),
        });
    }
    Ok(T::lit(value))
}

fn parse_label(table: &Table, row: usize, col: usize) -> Result<u8> {
    let raw = table.rows[row].get(col).unwrap_or("").trim();
    match raw.parse::<f64>() {
        Ok(0.0) => Ok(0),
        Ok(1.0) => Ok(1),
        _ => Err(Error::invalid(format!(
            "label `{raw}` in row {} of column `{}` is not 0 or 1",
            row + 1,
            table.header[col]
        ))),
    }
}

fn column_index(table: &Table, name: &str) -> Result<usize> {
    table
        .header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::invalid(format!("column `{name}` not found in header")))
}

/// Reads a headed CSV. When `label_column` is given it must exist; it is
/// removed from the features and parsed as 0/1.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset<T>> {
    let table = read_table(path.as_ref())?;
    let label_idx = label_column.map(|name| column_index(&table, name)).transpose()?;
    let feature_cols: Vec<usize> = (0..table.header.len()).filter(|&c| Some(c) != label_idx).collect();
    build_dataset(&table, &feature_cols, label_idx)
}

/// Like [`load_csv`], but drops `label_column` silently when it is absent.
pub fn load_csv_optional_label<T: Scalar>(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset<T>> {
    let table = read_table(path.as_ref())?;
    let label_idx = table.header.iter().position(|h| h == label_column);
    let feature_cols: Vec<usize> = (0..table.header.len()).filter(|&c| Some(c) != label_idx).collect();
    build_dataset(&table, &feature_cols, label_idx)
}

/// Reads exactly the named feature columns, in the given order, plus an
/// optional label column if present.
pub fn load_csv_columns<T: Scalar>(
    path: impl AsRef<Path>,
    feature_names: &[String],
    label_column: Option<&str>,
) -> Result<Dataset<T>> {
    let table = read_table(path.as_ref())?;
    let feature_cols = feature_names
        .iter()
        .map(|name| column_index(&table, name))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = label_column.and_then(|name| table.header.iter().position(|h| h == name));
    build_dataset(&table, &feature_cols, label_idx)
}

fn build_dataset<T: Scalar>(table: &Table, feature_cols: &[usize], label_idx: Option<usize>) -> Result<Dataset<T>> {
    if feature_cols.is_empty() {
        return Err(Error::invalid("no feature columns"));
    }
    let n = table.rows.len();
    let mut data = Vec::with_capacity(n * feature_cols.len());
    for r in 0..n {
        for &c in feature_cols {
            data.push(parse_cell(table, r, c)?);
        }
    }
    let labels = label_idx
        .map(|c| (0..n).map(|r| parse_label(table, r, c)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let names = feature_cols.iter().map(|&c| table.header[c].clone()).collect();
    Dataset::with_names(Matrix::from_vec(n, feature_cols.len(), data)?, labels, names)
}

// ---------------------------------------------------------------------------
// Standardization

/// Per-feature z-score parameters fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization<T> {
    pub means: Vec<T>,
    pub stds: Vec<T>,
}

impl<T: Scalar> Standardization<T> {
    /// Population statistics. Constant columns get mean 0, std 1 (identity).
    pub fn fit(features: &Matrix<T>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::invalid("cannot standardize an empty dataset"));
        }
        let n = T::from_usize_lossy(features.rows());
        let sums = features.column_sums();
        let means: Vec<T> = sums.into_iter().map(|s| s / n).collect();
        let mut var = vec![T::zero(); features.cols()];
        for row in features.row_iter() {
            for ((v, &x), &m) in var.iter_mut().zip(row).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let mut out_means = Vec::with_capacity(means.len());
        let mut stds = Vec::with_capacity(means.len());
        for (m, v) in means.into_iter().zip(var) {
            let s = (v / n).sqrt();
            if s < T::lit(CONSTANT_COLUMN_STD) {
                out_means.push(T::zero());
                stds.push(T::one());
            } else {
                out_means.push(m);
                stds.push(s);
            }
        }
        Ok(Self { means: out_means, stds })
    }

    pub fn apply(&self, features: &Matrix<T>) -> Result<Matrix<T>> {
        if features.cols() != self.means.len() {
            return Err(Error::dims("standardization width", self.means.len(), features.cols()));
        }
        let mut out = features.clone();
        for r in 0..out.rows() {
            for ((x, &m), &s) in out.row_mut(r).iter_mut().zip(&self.means).zip(&self.stds) {
                *x = (*x - m) / s;
            }
        }
        Ok(out)
    }

    pub fn apply_dataset(&self, dataset: &Dataset<T>) -> Result<Dataset<T>> {
        Ok(Dataset {
            features: self.apply(&dataset.features)?,
            labels: dataset.labels.clone(),
            feature_names: dataset.feature_names.clone(),
            standardization: Some(self.clone()),
        })
    }
}

/// Z-scores `train` and every dataset in `others` with statistics fitted on `train`.
pub fn standardize<T: Scalar>(train: &Dataset<T>, others: &[&Dataset<T>]) -> Result<(Dataset<T>, Vec<Dataset<T>>)> {
    for other in others {
        if other.n_features() != train.n_features() {
            return Err(Error::dims("standardize feature count", train.n_features(), other.n_features()));
        }
    }
    let stats = Standardization::fit(&train.features)?;
    let train = stats.apply_dataset(train)?;
    let others = others
        .iter()
        .map(|o| stats.apply_dataset(o))
        .collect::<Result<Vec<_>>>()?;
    Ok((train, others))
}

// ---------------------------------------------------------------------------
// Splitting

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

/// Disjoint, sorted row-index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices<T: Scalar>(dataset: &Dataset<T>, spec: &SplitSpec) -> Result<SplitIndices> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::arg(format!("test_fraction must lie in (0, 1), got {}", spec.test_fraction)));
    }
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::arg("need at least two rows to split"));
    }
    let mut rng = Rng::stream(spec.seed, Stream::Split);
    let groups: Vec<Vec<usize>> = if spec.stratified {
        let labels = dataset
            .labels
            .as_ref()
            .ok_or_else(|| Error::invalid("stratified split needs labels"))?;
        (0u8..=1)
            .map(|class| (0..n).filter(|&i| labels[i] == class).collect())
            .collect()
    } else {
        vec![(0..n).collect()]
    };

    let mut train = Vec::with_capacity(n);
    let mut test = Vec::with_capacity(n);
    for mut group in groups {
        if group.is_empty() {
            continue;
        }
        rng.shuffle(&mut group);
        let mut n_test = (spec.test_fraction * group.len() as f64).round() as usize;
        if !spec.stratified {
            n_test = n_test.clamp(1, n - 1);
        }
        test.extend_from_slice(&group[..n_test]);
        train.extend_from_slice(&group[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn split<T: Scalar>(dataset: &Dataset<T>, spec: &SplitSpec) -> Result<(Dataset<T>, Dataset<T>)> {
    let idx = split_indices(dataset, spec)?;
    Ok((dataset.select_rows(&idx.train), dataset.select_rows(&idx.test)))
}

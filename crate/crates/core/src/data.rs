//! Datasets: synthetic unions of subspaces, file loaders, preprocessing and
//! in-sample / out-of-sample partitioning.
//!
//! All loaders return samples as columns of `x`. Image pixels are scaled to
//! `[0, 1]` and flattened row by row.
//!
//! Binary matrix format (`f64bin`, little-endian):
//!
//! ```text
//! b"LRSS" | u32 D | u32 N | u8 has_labels | D*N f64 (column-major) | N u32 labels (if has_labels)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

/// Samples as columns, with ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub name: String,
    /// Subspace dimension used for per-column truncation of the representation.
    pub default_d: usize,
}

impl Dataset {
    /// Labels are compacted to `0..C` preserving their order.
    pub fn new(
        x: DMatrix<f64>,
        labels: Vec<usize>,
        name: impl Into<String>,
        default_d: usize,
    ) -> Result<Self> {
        if labels.len() != x.ncols() {
            return invalid(format!("{} labels for {} samples", labels.len(), x.ncols()));
        }
        if default_d == 0 {
            return invalid("default subspace dimension must be positive");
        }
        Ok(Self {
            x,
            labels: compact_labels(&labels),
            name: name.into(),
            default_d,
        })
    }

    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.ncols() == 0
    }

    pub fn num_clusters(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Column indices of every cluster, in label order.
    pub fn cluster_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Columns `idx` as a new dataset. Labels are not recompacted.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_columns(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            name: self.name.clone(),
            default_d: self.default_d,
        }
    }
}

fn compact_labels(labels: &[usize]) -> Vec<usize> {
    let ids: BTreeMap<usize, usize> = labels
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    labels.iter().map(|l| ids[l]).collect()
}

/// Known benchmark layouts: clusters, samples per cluster and subspace dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetPreset {
    pub name: &'static str,
    pub clusters: usize,
    pub per_cluster: usize,
    pub subspace_dim: usize,
}

pub const MNIST: DatasetPreset = DatasetPreset {
    name: "mnist",
    clusters: 10,
    per_cluster: 1000,
    subspace_dim: 12,
};
pub const ORL: DatasetPreset = DatasetPreset {
    name: "orl",
    clusters: 40,
    per_cluster: 10,
    subspace_dim: 9,
};
pub const COIL20: DatasetPreset = DatasetPreset {
    name: "coil20",
    clusters: 20,
    per_cluster: 72,
    subspace_dim: 9,
};

pub fn preset(name: &str) -> Option<DatasetPreset> {
    [MNIST, ORL, COIL20]
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
}

/// Parameters of the synthetic union-of-subspaces generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub ambient_dim: usize,
    pub clusters: usize,
    pub subspace_dim: usize,
    pub points_per_cluster: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Random subspaces with Gaussian coefficients, isotropic noise and unit-norm columns.
pub fn synth_union_of_subspaces(p: &SynthParams) -> Result<Dataset> {
    Ok(synth_with_bases(p)?.0)
}

/// Like [`synth_union_of_subspaces`], also returning the orthonormal basis of each cluster.
pub fn synth_with_bases(p: &SynthParams) -> Result<(Dataset, Vec<DMatrix<f64>>)> {
    if p.subspace_dim == 0 || p.subspace_dim >= p.ambient_dim {
        return invalid(format!(
            "subspace dimension {} must lie in 1..{}",
            p.subspace_dim, p.ambient_dim
        ));
    }
    if p.clusters == 0 || p.points_per_cluster == 0 {
        return invalid("need at least one cluster and one point per cluster");
    }
    if !(p.noise_sigma.is_finite() && p.noise_sigma >= 0.0) {
        return invalid(format!(
            "noise deviation must be finite and >= 0, got {}",
            p.noise_sigma
        ));
    }
    if p.clusters * p.subspace_dim > p.ambient_dim {
        log::warn!(
            "{} subspaces of dimension {} in R^{} cannot be independent",
            p.clusters,
            p.subspace_dim,
            p.ambient_dim
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut gauss = move || -> f64 { StandardNormal.sample(&mut rng) };
    let n = p.clusters * p.points_per_cluster;
    let mut x = DMatrix::zeros(p.ambient_dim, n);
    let mut labels = Vec::with_capacity(n);
    let mut bases = Vec::with_capacity(p.clusters);
    for c in 0..p.clusters {
        let raw = DMatrix::from_fn(p.ambient_dim, p.subspace_dim, |_, _| gauss());
        let basis = raw.qr().q();
        for k in 0..p.points_per_cluster {
            let coef = DMatrix::from_fn(p.subspace_dim, 1, |_, _| gauss());
            let mut col = &basis * coef;
            if p.noise_sigma > 0.0 {
                col += DMatrix::from_fn(p.ambient_dim, 1, |_, _| p.noise_sigma * gauss());
            }
            x.column_mut(c * p.points_per_cluster + k)
                .copy_from(&col.column(0));
            labels.push(c);
        }
        bases.push(basis);
    }
    let (x, _) = normalize_columns(&x);
    let ds = Dataset::new(x, labels, "synth", p.subspace_dim)?;
    Ok((ds, bases))
}

/// Scale every nonzero column to unit Euclidean norm. Returns the indices of
/// zero columns, which are left untouched.
pub fn normalize_columns(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<usize>) {
    let mut out = x.clone();
    let mut zero = Vec::new();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        } else {
            zero.push(j);
        }
    }
    if !zero.is_empty() {
        log::warn!("{} zero columns left unnormalized", zero.len());
    }
    (out, zero)
}

struct Bytes<'a> {
    buf: &'a [u8],
    pos: usize,
    what: String,
}

impl<'a> Bytes<'a> {
    fn new(buf: &'a [u8], what: impl Into<String>) -> Self {
        Self {
            buf,
            pos: 0,
            what: what.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Parse(format!(
                "{}: truncated, missing {} bytes at offset {}",
                self.what,
                n - (self.buf.len() - self.pos),
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32_be(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u32_le(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// MNIST-style IDX image and label files.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img = read_file(images_path)?;
    let mut cur = Bytes::new(&img, images_path.display().to_string());
    let magic = cur.u32_be()?;
    if magic != IDX_IMAGES {
        return Err(Error::Parse(format!(
            "{}: bad magic, expected {IDX_IMAGES:#010x}, found {magic:#010x}",
            images_path.display()
        )));
    }
    let count = cur.u32_be()? as usize;
    let rows = cur.u32_be()? as usize;
    let cols = cur.u32_be()? as usize;
    let pixels = cur.take(count * rows * cols)?;
    let x = DMatrix::from_column_slice(
        rows * cols,
        count,
        &pixels.iter().map(|&p| p as f64 / 255.0).collect::<Vec<_>>(),
    );

    let lab = read_file(labels_path)?;
    let mut cur = Bytes::new(&lab, labels_path.display().to_string());
    let magic = cur.u32_be()?;
    if magic != IDX_LABELS {
        return Err(Error::Parse(format!(
            "{}: bad magic, expected {IDX_LABELS:#010x}, found {magic:#010x}",
            labels_path.display()
        )));
    }
    let n_labels = cur.u32_be()? as usize;
    if n_labels != count {
        return Err(Error::Parse(format!(
            "{count} images but {n_labels} labels"
        )));
    }
    let labels: Vec<usize> = cur.take(n_labels)?.iter().map(|&l| l as usize).collect();
    Dataset::new(x, labels, "idx", MNIST.subspace_dim)
}

/// Whitespace/comment-aware token reader for Netpbm headers.
fn pgm_header(buf: &[u8], path: &Path) -> Result<(bool, usize, usize, u32, usize)> {
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < buf.len() && (buf[pos].is_ascii_whitespace() || buf[pos] == b'#') {
            if buf[pos] == b'#' {
                while pos < buf.len() && buf[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() && buf[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse(format!(
                "{}: truncated PGM header",
                path.display()
            )));
        }
        tokens.push(String::from_utf8_lossy(&buf[start..pos]).into_owned());
    }
    let binary = match tokens[0].as_str() {
        "P5" => true,
        "P2" => false,
        other => {
            return Err(Error::Parse(format!(
                "{}: not a PGM file (magic {other:?})",
                path.display()
            )))
        }
    };
    let num = |i: usize, what: &str| -> Result<u64> {
        tokens[i]
            .parse::<u64>()
            .map_err(|_| Error::Parse(format!("{}: bad {what} {:?}", path.display(), tokens[i])))
    };
    let width = num(1, "width")? as usize;
    let height = num(2, "height")? as usize;
    let maxval = num(3, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!(
            "{}: maxval {maxval} outside 1..=65535",
            path.display()
        )));
    }
    // exactly one whitespace byte separates the header from binary data
    Ok((binary, width, height, maxval as u32, pos + 1))
}

/// One PGM image (P2 or P5) as `(width, height, pixels in [0, 1])`.
pub fn load_pgm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let buf = read_file(path)?;
    let (binary, w, h, maxval, data_start) = pgm_header(&buf, path)?;
    let count = w * h;
    let scale = maxval as f64;
    let pixels: Vec<f64> = if binary {
        let width = if maxval > 255 { 2 } else { 1 };
        let mut cur = Bytes::new(&buf, path.display().to_string());
        cur.pos = data_start.min(buf.len());
        let raw = cur.take(count * width)?;
        if width == 1 {
            raw.iter().map(|&b| b as f64 / scale).collect()
        } else {
            raw.chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale)
                .collect()
        }
    } else {
        let text = String::from_utf8_lossy(&buf[data_start.min(buf.len())..]);
        let vals: Vec<f64> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split_ascii_whitespace())
            .map(|t| {
                t.parse::<u32>()
                    .map(|v| v as f64 / scale)
                    .map_err(|_| Error::Parse(format!("{}: bad pixel value {t:?}", path.display())))
            })
            .collect::<Result<_>>()?;
        if vals.len() < count {
            return Err(Error::Parse(format!(
                "{}: truncated, expected {count} pixels, found {}",
                path.display(),
                vals.len()
            )));
        }
        vals.into_iter().take(count).collect()
    };
    if pixels.iter().any(|&p| p > 1.0) {
        return Err(Error::Parse(format!(
            "{}: pixel exceeds maxval",
            path.display()
        )));
    }
    Ok((w, h, pixels))
}

fn collect_pgm(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_pgm(&p, out)?;
        } else if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
            out.push(p);
        }
    }
    Ok(())
}

/// All `.pgm` files under `dir`; each file's label is its parent directory
/// name, numbered in sorted order.
pub fn load_pgm_dir(dir: &Path) -> Result<Dataset> {
    let mut files = Vec::new();
    collect_pgm(dir, &mut files)?;
    if files.is_empty() {
        return invalid(format!("no .pgm files under {}", dir.display()));
    }
    let class_of = |p: &Path| -> String {
        p.parent()
            .and_then(|d| d.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let classes: BTreeMap<String, usize> = files
        .iter()
        .map(|p| class_of(p))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let mut shape = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for f in &files {
        let (w, h, px) = load_pgm(f)?;
        match shape {
            None => shape = Some((w, h)),
            Some(s) if s != (w, h) => {
                return Err(Error::Parse(format!(
                    "{}: image is {w}x{h}, expected {}x{}",
                    f.display(),
                    s.0,
                    s.1
                )))
            }
            _ => {}
        }
        data.extend(px);
        labels.push(classes[&class_of(f)]);
    }
    let (w, h) = shape.unwrap();
    Dataset::new(
        DMatrix::from_column_slice(w * h, files.len(), &data),
        labels,
        "pgm",
        ORL.subspace_dim,
    )
}

/// CSV with one sample per column; with `has_labels_row` the last row holds
/// integer labels. Without it every sample gets label 0.
pub fn load_csv(path: &Path, has_labels_row: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: empty CSV", path.display())));
    }
    let n = rows[0].len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Parse(format!(
            "{}: row {} has {} fields, expected {n}",
            path.display(),
            i + 1,
            r.len()
        )));
    }
    let labels = if has_labels_row {
        let last = rows.pop().unwrap();
        last.iter()
            .enumerate()
            .map(|(j, t)| {
                t.parse::<usize>().map_err(|_| {
                    Error::Parse(format!(
                        "{}: bad label {t:?} in column {}",
                        path.display(),
                        j + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![0; n]
    };
    let d = rows.len();
    let mut x = DMatrix::zeros(d, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            let v: f64 = t.parse().map_err(|_| {
                Error::Parse(format!(
                    "{}: bad number {t:?} at row {}, column {}",
                    path.display(),
                    i + 1,
                    j + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!(
                    "{}: non-finite value at row {}, column {}",
                    path.display(),
                    i + 1,
                    j + 1
                )));
            }
            x[(i, j)] = v;
        }
    }
    Dataset::new(x, labels, "csv", COIL20.subspace_dim)
}

/// Writes the CSV layout read by [`load_csv`], with a trailing labels row.
pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| Error::Parse(format!("{}: {e}", path.display()));
    for row in ds.x.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:e}")))
            .map_err(csv_err)?;
    }
    w.write_record(ds.labels.iter().map(|l| l.to_string()))
        .map_err(csv_err)?;
    w.flush()?;
    Ok(())
}

const F64BIN_MAGIC: &[u8; 4] = b"LRSS";

pub fn save_f64bin(ds: &Dataset, path: &Path, with_labels: bool) -> Result<()> {
    let (d, n) = ds.x.shape();
    let mut out = Vec::with_capacity(13 + 8 * d * n + 4 * n);
    out.extend_from_slice(F64BIN_MAGIC);
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.push(with_labels as u8);
    for v in ds.x.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if with_labels {
        for &l in &ds.labels {
            out.extend_from_slice(&(l as u32).to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_f64bin(path: &Path) -> Result<Dataset> {
    let buf = read_file(path)?;
    let mut cur = Bytes::new(&buf, path.display().to_string());
    let magic = cur.take(4)?;
    if magic != F64BIN_MAGIC {
        return Err(Error::Parse(format!(
            "{}: bad magic, expected \"LRSS\", found {:?}",
            path.display(),
            String::from_utf8_lossy(magic)
        )));
    }
    let d = cur.u32_le()? as usize;
    let n = cur.u32_le()? as usize;
    let has_labels = match cur.take(1)?[0] {
        0 => false,
        1 => true,
        f => {
            return Err(Error::Parse(format!(
                "{}: bad label flag {f}",
                path.display()
            )))
        }
    };
    let payload = cur.take(8 * d * n).map_err(|_| {
        Error::Parse(format!(
            "{}: header claims {d}x{n} values but payload holds {} bytes",
            path.display(),
            buf.len() - 13
        ))
    })?;
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let labels = if has_labels {
        let raw = cur.take(4 * n)?;
        raw.chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect()
    } else {
        vec![0; n]
    };
    if cur.pos != buf.len() {
        return Err(Error::Parse(format!(
            "{}: {} trailing bytes",
            path.display(),
            buf.len() - cur.pos
        )));
    }
    Dataset::new(
        DMatrix::from_column_slice(d, n, &values),
        labels,
        "f64bin",
        COIL20.subspace_dim,
    )
}

/// Per-cluster sizes of an in-sample / out-of-sample split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionSpec {
    pub in_per_cluster: usize,
    pub out_per_cluster: usize,
    pub seed: u64,
}

/// A sampled split with the source column indices of each part.
#[derive(Debug, Clone)]
pub struct Partition {
    pub in_sample: Dataset,
    pub out_sample: Dataset,
    pub in_idx: Vec<usize>,
    pub out_idx: Vec<usize>,
}

/// Per cluster, draw `in_per_cluster` samples without replacement and then
/// `out_per_cluster` of the remainder.
pub fn sample_partition(ds: &Dataset, spec: &PartitionSpec) -> Result<Partition> {
    let groups = ds.cluster_indices();
    let need = spec.in_per_cluster + spec.out_per_cluster;
    if spec.in_per_cluster == 0 {
        return invalid("in-sample size per cluster must be positive");
    }
    if let Some((c, g)) = groups.iter().enumerate().find(|(_, g)| g.len() < need) {
        return invalid(format!(
            "cluster {c} has {} samples, partition needs {need}",
            g.len()
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_idx = Vec::with_capacity(groups.len() * spec.in_per_cluster);
    let mut out_idx = Vec::with_capacity(groups.len() * spec.out_per_cluster);
    for mut g in groups {
        g.shuffle(&mut rng);
        in_idx.extend_from_slice(&g[..spec.in_per_cluster]);
        out_idx.extend_from_slice(&g[spec.in_per_cluster..need]);
    }
    Ok(Partition {
        in_sample: ds.select(&in_idx),
        out_sample: ds.select(&out_idx),
        in_idx,
        out_idx,
    })
}

/// How held-out samples receive labels from a clustered in-sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutOfSampleMethod {
    /// Ridge coding over the in-sample columns; the cluster whose
    /// coefficients carry the most energy wins.
    RidgeEnergy { gamma: f64 },
}

impl Default for OutOfSampleMethod {
    fn default() -> Self {
        OutOfSampleMethod::RidgeEnergy { gamma: 1e-2 }
    }
}

impl std::fmt::Display for OutOfSampleMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutOfSampleMethod::RidgeEnergy { gamma } => write!(f, "ridge-energy(gamma={gamma})"),
        }
    }
}

pub fn out_of_sample_assign(
    x_in: &DMatrix<f64>,
    labels_in: &[usize],
    x_out: &DMatrix<f64>,
    method: OutOfSampleMethod,
) -> Result<Vec<usize>> {
    if x_in.ncols() == 0 {
        return invalid("empty in-sample set");
    }
    if labels_in.len() != x_in.ncols() {
        return invalid(format!(
            "{} labels for {} in-sample columns",
            labels_in.len(),
            x_in.ncols()
        ));
    }
    if x_out.nrows() != x_in.nrows() {
        return invalid(format!(
            "out-of-sample dimension {} differs from {}",
            x_out.nrows(),
            x_in.nrows()
        ));
    }
    let OutOfSampleMethod::RidgeEnergy { gamma } = method;
    if gamma.is_nan() || gamma <= 0.0 {
        return invalid(format!("ridge parameter must be positive, got {gamma}"));
    }
    let n = x_in.ncols();
    let k = labels_in.iter().max().unwrap() + 1;
    let system = x_in.tr_mul(x_in) + DMatrix::identity(n, n) * gamma;
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::Numerical("ridge system is not positive definite".into()))?;
    let coef = chol.solve(&x_in.tr_mul(x_out));
    Ok(coef
        .column_iter()
        .map(|col| {
            let mut energy = vec![0.0; k];
            for (i, &l) in labels_in.iter().enumerate() {
                energy[l] += col[i] * col[i];
            }
            (0..k).fold(0, |b, c| if energy[c] > energy[b] { c } else { b })
        })
        .collect())
}

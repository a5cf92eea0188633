//! From a representation matrix to cluster labels.
//!
//! `C` is truncated per column to its `d` largest-magnitude coefficients,
//! symmetrized into `A = (|C| + |C^T|) / 2`, and the symmetric normalized
//! Laplacian `L = I - D^{-1/2} A D^{-1/2}` is embedded through its smallest
//! eigenvectors. Rows of the embedding are normalized to unit length and
//! clustered with k-means.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::linalg;

/// Affinity matrix with its degree vector and normalized Laplacian.
#[derive(Debug, Clone)]
pub struct AffinityGraph {
    pub a: DMatrix<f64>,
    pub degrees: Vec<f64>,
    pub l: DMatrix<f64>,
}

/// Cluster assignment, one label in `0..num_clusters` per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    pub labels: Vec<usize>,
    pub num_clusters: usize,
}

/// Keep the `d` largest-magnitude entries of every column.
///
/// Equal magnitudes are ranked by row index, lower rows first.
pub fn ipd_threshold(c: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    let n = c.nrows();
    if d == 0 || d > n {
        return invalid(format!("IPD dimension must lie in 1..={n}, got {d}"));
    }
    let mut out = DMatrix::zeros(n, c.ncols());
    let mut order: Vec<usize> = (0..n).collect();
    for j in 0..c.ncols() {
        let col = c.column(j);
        order.sort_by(|&a, &b| col[b].abs().total_cmp(&col[a].abs()).then(a.cmp(&b)));
        for &i in &order[..d] {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

/// `(|C| + |C^T|) / 2`.
pub fn affinity(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !c.is_square() {
        return invalid(format!(
            "representation must be square, got {}x{}",
            c.nrows(),
            c.ncols()
        ));
    }
    let n = c.nrows();
    // entries computed pairwise so that A is exactly symmetric
    Ok(DMatrix::from_fn(n, n, |i, j| {
        0.5 * (c[(i, j)].abs() + c[(j, i)].abs())
    }))
}

/// Degrees and `I - D^{-1/2} A D^{-1/2}`; isolated vertices use
/// `D^{-1/2} = 0` and get `L_ii = 1`.
pub fn normalized_laplacian(a: &DMatrix<f64>) -> Result<AffinityGraph> {
    if !a.is_square() {
        return invalid(format!(
            "affinity must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        ));
    }
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            if !(v.is_finite() && v >= 0.0) || v != a[(j, i)] {
                return invalid(format!(
                    "affinity must be symmetric, finite and nonnegative (entry ({i}, {j}))"
                ));
            }
        }
    }
    let degrees: Vec<f64> = a.row_iter().map(|r| r.sum()).collect();
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let l = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - inv_sqrt[i] * a[(i, j)] * inv_sqrt[j]
    });
    Ok(AffinityGraph {
        a: a.clone(),
        degrees,
        l,
    })
}

/// k-means settings used on the spectral embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansSettings {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KMeansSettings {
    pub fn seeded(seed: u64) -> Self {
        Self {
            restarts: 20,
            max_iter: 300,
            seed,
        }
    }
}

/// Spectral clustering of a normalized Laplacian into `num_clusters` groups.
pub fn spectral_cluster(l: &DMatrix<f64>, num_clusters: usize, seed: u64) -> Result<ClusterLabels> {
    spectral_cluster_with(l, num_clusters, &KMeansSettings::seeded(seed))
}

pub fn spectral_cluster_with(
    l: &DMatrix<f64>,
    num_clusters: usize,
    km: &KMeansSettings,
) -> Result<ClusterLabels> {
    let n = l.nrows();
    if num_clusters == 0 || num_clusters > n {
        return invalid(format!(
            "cannot form {num_clusters} clusters from {n} samples"
        ));
    }
    if num_clusters == 1 {
        return Ok(ClusterLabels {
            labels: vec![0; n],
            num_clusters,
        });
    }
    let eig = linalg::sym_eig_smallest(l, num_clusters)?;
    let mut emb = eig.vectors;
    for mut row in emb.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let labels = kmeans(&emb, num_clusters, km)?.0;
    Ok(ClusterLabels {
        labels,
        num_clusters,
    })
}

/// Full pipeline from a representation matrix: IPD truncation, affinity,
/// Laplacian and spectral clustering.
pub fn cluster_representation(
    c: &DMatrix<f64>,
    d: usize,
    num_clusters: usize,
    seed: u64,
) -> Result<ClusterLabels> {
    let a = affinity(&ipd_threshold(c, d.min(c.nrows()))?)?;
    let g = normalized_laplacian(&a)?;
    spectral_cluster(&g.l, num_clusters, seed)
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..points.ncols() {
        let d = points[(i, k)] - centers[(c, k)];
        s += d * d;
    }
    s
}

/// Lloyd's k-means with k-means++ seeding over the rows of `points`.
///
/// Returns the labels and inertia of the best restart; restarts with equal
/// inertia keep the earlier one.
pub fn kmeans(points: &DMatrix<f64>, k: usize, km: &KMeansSettings) -> Result<(Vec<usize>, f64)> {
    let n = points.nrows();
    if k == 0 || k > n {
        return invalid(format!("cannot form {k} clusters from {n} points"));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for restart in 0..km.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(
            km.seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(restart as u64),
        );
        let (labels, inertia) = lloyd(points, k, km.max_iter, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus_init(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = points.nrows();
    let dim = points.ncols();
    let mut centers = DMatrix::zeros(k, dim);
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from(&points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

fn lloyd(
    points: &DMatrix<f64>,
    k: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let dim = points.ncols();
    let mut centers = plus_plus_init(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (mut bl, mut bd) = (0, f64::INFINITY);
            for c in 0..k {
                let d = sq_dist(points, i, &centers, c);
                if d < bd {
                    bl = c;
                    bd = d;
                }
            }
            dist[i] = bd;
            if labels[i] != bl {
                labels[i] = bl;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = DMatrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            let mut row = sums.row_mut(labels[i]);
            row += points.row(i);
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mut row = sums.row_mut(c);
                row /= count as f64;
                centers.row_mut(c).copy_from(&row);
            } else {
                // empty cluster: move it onto the worst-fit point
                let far = (0..n).fold(0, |b, i| if dist[i] > dist[b] { i } else { b });
                centers.row_mut(c).copy_from(&points.row(far));
                dist[far] = 0.0;
            }
        }
    }
    let inertia = (0..n)
        .map(|i| sq_dist(points, i, &centers, labels[i]))
        .sum();
    (labels, inertia)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ipd_examples() {
        let c = DMatrix::from_column_slice(3, 1, &[3.0, -5.0, 1.0]);
        assert_eq!(ipd_threshold(&c, 2).unwrap().as_slice(), &[3.0, -5.0, 0.0]);
        assert_eq!(ipd_threshold(&c, 3).unwrap(), c);
        let c = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]);
        assert_eq!(ipd_threshold(&c, 1).unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        assert!(ipd_threshold(&c, 0).is_err());
        assert!(ipd_threshold(&c, 4).is_err());
    }

    #[test]
    fn affinity_examples() {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(
            affinity(&c).unwrap(),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
        );
        assert_eq!(
            affinity(&DMatrix::zeros(3, 3)).unwrap(),
            DMatrix::zeros(3, 3)
        );
        assert!(affinity(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let g = normalized_laplacian(&a).unwrap();
        assert_eq!(g.l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(g.degrees, vec![1.0, 1.0]);
        let g = normalized_laplacian(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(g.l, DMatrix::identity(3, 3));
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(normalized_laplacian(&bad).is_err());
    }

    fn two_cliques() -> DMatrix<f64> {
        let mut a = DMatrix::zeros(4, 4);
        for (i, j) in [(0, 1), (2, 3)] {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        normalized_laplacian(&a).unwrap().l
    }

    #[test]
    fn separates_disconnected_cliques() {
        let labels = spectral_cluster(&two_cliques(), 2, 7).unwrap().labels;
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[2], labels[3]);
        assert_ne!(labels[0], labels[2]);
    }

    #[test]
    fn single_cluster_and_errors() {
        assert_eq!(
            spectral_cluster(&two_cliques(), 1, 0).unwrap().labels,
            vec![0; 4]
        );
        assert!(spectral_cluster(&two_cliques(), 5, 0).is_err());
    }

    #[test]
    fn repeatable_for_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = DMatrix::from_fn(30, 30, |_, _| rng.random::<f64>());
        a = (&a + a.transpose()) * 0.5;
        a.fill_diagonal(0.0);
        let l = normalized_laplacian(&a).unwrap().l;
        let first = spectral_cluster(&l, 3, 11).unwrap();
        for _ in 0..3 {
            assert_eq!(spectral_cluster(&l, 3, 11).unwrap(), first);
        }
    }

    #[test]
    fn kmeans_separates_blobs() {
        let pts = DMatrix::from_row_slice(
            6,
            2,
            &[0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 5.0, 5.0, 5.1, 5.0, 5.0, 5.1],
        );
        let (labels, inertia) = kmeans(&pts, 2, &KMeansSettings::seeded(1)).unwrap();
        assert!(labels[..3].iter().all(|&l| l == labels[0]));
        assert!(labels[3..].iter().all(|&l| l == labels[3]));
        assert_ne!(labels[0], labels[3]);
        assert!(inertia < 0.1);
    }
}

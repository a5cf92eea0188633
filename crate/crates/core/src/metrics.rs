//! Clustering scores and the two-sample rank-sum test.
//!
//! - ACC: fraction of samples matched after the best one-to-one relabeling
//!   (Hungarian algorithm on the confusion matrix).
//! - NMI: mutual information divided by the arithmetic mean of the two
//!   entropies.
//! - F1: pair-counting F1 over all unordered sample pairs.

use std::collections::BTreeMap;

use statrs::function::erf::erfc;

use crate::error::{invalid, Result};

/// ACC, NMI and pairwise F1 of one clustering, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub acc: f64,
    pub nmi: f64,
    pub f1: f64,
}

impl MetricReport {
    pub fn evaluate(truth: &[usize], pred: &[usize]) -> Result<Self> {
        Ok(Self {
            acc: accuracy(truth, pred)?,
            nmi: nmi(truth, pred)?,
            f1: pairwise_f1(truth, pred)?,
        })
    }
}

/// Minimum-cost perfect assignment of a square cost matrix.
///
/// `result[row] = column`. Among optimal assignments the lexicographically
/// smallest one is returned.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Vec<usize>> {
    let k = cost.len();
    if cost.iter().any(|r| r.len() != k) {
        return invalid("cost matrix must be square");
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return invalid("cost matrix has non-finite entries");
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let (assign, u, v) = shortest_augmenting_path(cost);

    // Every optimal assignment only uses edges that are tight for an optimal
    // dual, so the lexicographic minimum is a greedy choice among perfect
    // matchings of the tight-edge graph.
    let scale = cost.iter().flatten().fold(1.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-9 * scale * k as f64;
    let tight: Vec<Vec<bool>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| (cost[i][j] - u[i] - v[j]).abs() <= tol)
                .collect()
        })
        .collect();
    Ok(lexicographic_matching(&tight, assign))
}

/// O(k^3) Hungarian method with potentials. Returns the assignment and the
/// row/column duals.
fn shortest_augmenting_path(cost: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let k = cost.len();
    // 1-based with a virtual column 0
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; k];
    for j in 1..=k {
        assign[p[j] - 1] = j - 1;
    }
    (assign, u[1..].to_vec(), v[1..].to_vec())
}

fn lexicographic_matching(tight: &[Vec<bool>], mut row_to_col: Vec<usize>) -> Vec<usize> {
    let k = tight.len();
    let mut col_to_row = vec![0usize; k];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let mut fixed_col = vec![false; k];
    for i in 0..k {
        for j in 0..k {
            if fixed_col[j] || !tight[i][j] {
                continue;
            }
            if row_to_col[i] == j {
                break;
            }
            // free column row_to_col[i] by rerouting the row that holds j
            let target = row_to_col[i];
            let r = col_to_row[j];
            let mut trial_rc = row_to_col.clone();
            let mut trial_cr = col_to_row.clone();
            trial_rc[i] = j;
            trial_cr[j] = i;
            let mut blocked = fixed_col.clone();
            blocked[j] = true;
            let mut seen = vec![false; k];
            if reroute(
                r,
                target,
                tight,
                &mut trial_rc,
                &mut trial_cr,
                &blocked,
                &mut seen,
            ) {
                row_to_col = trial_rc;
                col_to_row = trial_cr;
                break;
            }
        }
        fixed_col[row_to_col[i]] = true;
    }
    row_to_col
}

/// Augmenting path from `row` to the free column `target`.
fn reroute(
    row: usize,
    target: usize,
    tight: &[Vec<bool>],
    rc: &mut [usize],
    cr: &mut [usize],
    blocked: &[bool],
    seen: &mut [bool],
) -> bool {
    for c in 0..tight.len() {
        if !tight[row][c] || blocked[c] || seen[c] {
            continue;
        }
        seen[c] = true;
        if c == target || reroute(cr[c], target, tight, rc, cr, blocked, seen) {
            rc[row] = c;
            cr[c] = row;
            return true;
        }
    }
    false
}

fn check_pair(truth: &[usize], pred: &[usize]) -> Result<()> {
    if truth.len() != pred.len() {
        return invalid(format!(
            "label vectors differ in length: {} vs {}",
            truth.len(),
            pred.len()
        ));
    }
    if truth.is_empty() {
        return invalid("empty labelings");
    }
    Ok(())
}

/// Dense contingency table with labels remapped to `0..k` in sorted order.
fn contingency(truth: &[usize], pred: &[usize]) -> Vec<Vec<usize>> {
    let remap = |xs: &[usize]| -> (Vec<usize>, usize) {
        let ids: BTreeMap<usize, usize> = xs
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        (xs.iter().map(|x| ids[x]).collect(), ids.len())
    };
    let (t, kt) = remap(truth);
    let (p, kp) = remap(pred);
    let mut table = vec![vec![0usize; kp]; kt];
    for (a, b) in t.into_iter().zip(p) {
        table[a][b] += 1;
    }
    table
}

/// Clustering accuracy under the best one-to-one label matching.
pub fn accuracy(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_pair(truth, pred)?;
    let table = contingency(truth, pred);
    let k = table.len().max(table[0].len());
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| -(table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as f64))
                .collect()
        })
        .collect();
    let assign = hungarian(&cost)?;
    let matched: f64 = assign.iter().enumerate().map(|(i, &j)| -cost[i][j]).sum();
    Ok(matched / truth.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, arithmetic-mean normalization.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_pair(truth, pred)?;
    let table = contingency(truth, pred);
    let n = truth.len() as f64;
    let rows: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<usize> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    let ht = entropy(rows.iter().copied(), n);
    let hp = entropy(cols.iter().copied(), n);
    if ht == 0.0 && hp == 0.0 {
        // both labelings are a single cluster
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ht + hp))).clamp(0.0, 1.0))
}

fn pairs(c: usize) -> u64 {
    let c = c as u64;
    c * c.saturating_sub(1) / 2
}

/// Pair-counting F1.
pub fn pairwise_f1(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_pair(truth, pred)?;
    let table = contingency(truth, pred);
    let tp: u64 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let truth_pairs: u64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let pred_pairs: u64 = (0..table[0].len())
        .map(|j| pairs(table.iter().map(|r| r[j]).sum()))
        .sum();
    let fp = pred_pairs - tp;
    let fn_ = truth_pairs - tp;
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// Two-sided Wilcoxon rank-sum p-value (normal approximation with tie and
/// continuity corrections). Both samples need at least 8 values.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 8 || b.len() < 8 {
        return invalid(format!(
            "rank-sum normal approximation needs at least 8 values per sample, got {} and {}",
            a.len(),
            b.len()
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return invalid("rank-sum samples must be finite");
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total = all.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_a += mid * all[i..=j].iter().filter(|e| e.1).count() as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let nn = n1 + n2;
    let mean = n1 * (nn + 1.0) / 2.0;
    let var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((rank_sum_a - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(erfc(z / std::f64::consts::SQRT_2).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(cost: &[Vec<f64>], a: &[usize]) -> f64 {
        a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
    }

    #[test]
    fn hungarian_examples() {
        let c = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(hungarian(&c).unwrap(), vec![0, 1]);
        let c = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(hungarian(&c).unwrap(), vec![1, 0]);
        let c = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = hungarian(&c).unwrap();
        assert_eq!(total(&c, &a), 5.0);
        assert_eq!(a, vec![1, 0, 2]);
    }

    #[test]
    fn hungarian_lexicographic_tie_break() {
        let c = vec![vec![1.0; 3]; 3];
        assert_eq!(hungarian(&c).unwrap(), vec![0, 1, 2]);
        // [1, 0, 2] and [2, 0, 1] both cost 3
        let c = vec![
            vec![5.0, 1.0, 1.0],
            vec![1.0, 5.0, 5.0],
            vec![5.0, 1.0, 1.0],
        ];
        assert_eq!(hungarian(&c).unwrap(), vec![1, 0, 2]);
        assert!(hungarian(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.75);
        // more predicted clusters than true ones
        assert_eq!(accuracy(&[0, 0, 0, 0], &[0, 1, 2, 2]).unwrap(), 0.5);
        assert!(accuracy(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-12);
        let v = nmi(&[0, 0, 1, 1], &[0, 0, 0, 1]).unwrap();
        assert!((v - 0.3437).abs() < 1e-4, "{v}");
        assert_eq!(nmi(&[3, 3, 3], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0], &[0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(pairwise_f1(&[0, 0, 1, 2], &[5, 5, 7, 8]).unwrap(), 1.0);
        assert_eq!(pairwise_f1(&[0, 0, 1], &[0, 1, 1]).unwrap(), 0.0);
        assert_eq!(pairwise_f1(&[0, 0, 0], &[0, 0, 1]).unwrap(), 0.5);
        assert_eq!(pairwise_f1(&[0, 1, 2], &[2, 1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn ranksum_examples() {
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        assert!(wilcoxon_ranksum(&a, &a).unwrap() >= 0.99);
        let b: Vec<f64> = (101..=110).map(f64::from).collect();
        assert!(wilcoxon_ranksum(&a, &b).unwrap() < 1e-3);
        assert!(wilcoxon_ranksum(&a[..7], &b).is_err());
        let c = vec![2.0; 9];
        assert_eq!(wilcoxon_ranksum(&c, &c).unwrap(), 1.0);
    }
}

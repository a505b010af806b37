use crate::container::{ModelReader, ModelWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{sq_dist, Real};

/// Feature agglomeration: each latent feature is the mean of a cluster of
/// input columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaModel {
    pub d: usize,
    /// Cluster of every input column, numbered by first member.
    pub assignment: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Ward clustering of the rows of `points` into exactly `k` clusters.
///
/// Nearest-neighbour chain over squared Euclidean distances with the
/// Lance–Williams update; the `n − k` lowest merges (stable by discovery
/// order on equal heights) define the partition.
pub fn ward_clusters<T: Real>(points: &Matrix<T>, k: usize) -> Result<Vec<usize>> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot form {k} clusters from {n} points")));
    }
    let mut dist = vec![0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(points.row(i), points.row(j)).as_f64();
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges: Vec<(usize, usize, f64)> = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    while merges.len() + 1 < n {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("active cluster"));
        }
        loop {
            let a = *chain.last().unwrap();
            let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| dist[a * n + p]);
            for j in 0..n {
                if active[j] && j != a && dist[a * n + j] < best_d {
                    best_d = dist[a * n + j];
                    best = Some(j);
                }
            }
            let b = best.expect("at least two active clusters");
            if Some(b) == prev {
                chain.pop();
                chain.pop();
                let (keep, gone) = (a.min(b), a.max(b));
                let (sa, sb) = (size[keep] as f64, size[gone] as f64);
                let dab = dist[keep * n + gone];
                for j in 0..n {
                    if !active[j] || j == keep || j == gone {
                        continue;
                    }
                    let sj = size[j] as f64;
                    let v = ((sa + sj) * dist[keep * n + j] + (sb + sj) * dist[gone * n + j] - sj * dab) / (sa + sb + sj);
                    dist[keep * n + j] = v;
                    dist[j * n + keep] = v;
                }
                active[gone] = false;
                size[keep] += size[gone];
                merges.push((keep, gone, dab));
                break;
            }
            chain.push(b);
        }
    }
    let mut order: Vec<usize> = (0..merges.len()).collect();
    order.sort_by(|&i, &j| merges[i].2.total_cmp(&merges[j].2));
    let mut parent: Vec<usize> = (0..n).collect();
    for &m in order.iter().take(n - k) {
        let (ra, rb) = (find(&mut parent, merges[m].0), find(&mut parent, merges[m].1));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out.push(label[r]);
    }
    debug_assert_eq!(next, k);
    Ok(out)
}

impl FaModel {
    pub fn fit<T: Real>(x: &Matrix<T>, d: usize) -> Result<Self> {
        Ok(FaModel { d, assignment: ward_clusters(&x.transpose(), d)? })
    }

    pub fn transform<T: Real>(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut counts = vec![0usize; self.d];
        for &c in &self.assignment {
            counts[c] += 1;
        }
        let mut out = Matrix::zeros(x.rows(), self.d);
        for i in 0..x.rows() {
            let row = x.row(i);
            let o = out.row_mut(i);
            for (&v, &c) in row.iter().zip(&self.assignment) {
                o[c] += v;
            }
            for (v, &c) in o.iter_mut().zip(&counts) {
                *v /= T::from_usize_lossy(c);
            }
        }
        out
    }

    pub(super) fn write(&self, w: &mut ModelWriter) {
        w.indices("assignment", &self.assignment);
    }

    pub(super) fn read(r: &ModelReader) -> Result<Self> {
        let assignment = r.indices("assignment")?;
        let d = assignment.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; d];
        for &c in &assignment {
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Model("feature assignment leaves an empty cluster".into()));
        }
        Ok(FaModel { d, assignment })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    /// Ward cost of a partition: sum of within-cluster squared deviations.
    fn within_ss(points: &Matrix<f64>, labels: &[usize], k: usize) -> f64 {
        (0..k)
            .map(|c| {
                let members: Vec<usize> = (0..points.rows()).filter(|&i| labels[i] == c).collect();
                let m = points.select_rows(&members);
                let mu = m.column_means();
                m.row_iter().map(|r| sq_dist(r, &mu)).sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn duplicate_columns_merge_first() {
        let mut rng = Rng::new(1);
        let base: Vec<[f64; 2]> = (0..10).map(|_| [rng.normal(), rng.normal()]).collect();
        let x = Matrix::from_fn(10, 4, |i, j| base[i][j / 2]);
        let m = FaModel::fit(&x, 2).unwrap();
        assert_eq!(m.assignment, vec![0, 0, 1, 1]);
        let row = Matrix::from_rows(&[[1.0, 3.0, 5.0, 7.0]]).unwrap();
        assert_eq!(m.transform(&row).row(0), &[2.0, 6.0]);
    }

    #[test]
    fn two_point_merge_height_matches_ward_cost() {
        // Three collinear points: 0 and 1 are closest, then 2 joins.
        let p = Matrix::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
        assert_eq!(ward_clusters(&p, 2).unwrap(), vec![0, 0, 1]);
        assert_eq!(ward_clusters(&p, 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(ward_clusters(&p, 1).unwrap(), vec![0, 0, 0]);
        assert!(ward_clusters(&p, 4).is_err());
    }

    #[test]
    fn matches_brute_force_on_small_sets() {
        // For well separated groups the Ward cut equals the optimal partition.
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let mut rng = Rng::new(4);
        let p = Matrix::from_fn(9, 2, |i, j| centers[i % 3][j] + 0.1 * rng.normal());
        let labels = ward_clusters(&p, 3).unwrap();
        for i in 0..9 {
            assert_eq!(labels[i], labels[i % 3]);
        }
        let ss = within_ss(&p, &labels, 3);
        assert!(ss < 1.0, "{ss}");
    }

    proptest! {
        #[test]
        fn assignment_is_a_partition_with_duplicates_together(
            cols in 3usize..9, rows in 2usize..6, seed in 0u64..1000, dup in 0usize..8,
        ) {
            let mut rng = Rng::new(seed);
            let mut x = Matrix::from_fn(rows, cols, |_, _| rng.normal());
            let (src, dst) = (dup % cols, (dup + 1) % cols);
            for i in 0..rows {
                let v = x.get(i, src);
                x.set(i, dst, v);
            }
            for d in 1..cols {
                let m = FaModel::fit(&x, d).unwrap();
                prop_assert_eq!(m.assignment.len(), cols);
                let mut used = vec![false; d];
                for &c in &m.assignment {
                    used[c] = true;
                }
                prop_assert!(used.iter().all(|&u| u));
                prop_assert_eq!(m.assignment[src], m.assignment[dst]);
            }
        }
    }
}

use crate::container::{ModelReader, ModelWriter};
use crate::dataset::LabelId;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{sq_dist, Real};

/// Brute-force k-nearest-neighbour majority vote.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnModel<T> {
    pub k: usize,
    pub x: Matrix<T>,
    pub y: Vec<LabelId>,
}

/// Indices of the `k` nearest training rows, nearest first; equal distances
/// keep the lower training index.
pub fn nearest<T: Real>(train: &Matrix<T>, q: &[T], k: usize) -> Vec<usize> {
    let mut best: Vec<(T, usize)> = Vec::with_capacity(k + 1);
    for (i, row) in train.row_iter().enumerate() {
        let d = sq_dist(row, q);
        if best.len() == k && d >= best[k - 1].0 {
            continue;
        }
        let pos = best.partition_point(|&(bd, _)| bd <= d);
        best.insert(pos, (d, i));
        best.truncate(k);
    }
    best.into_iter().map(|(_, i)| i).collect()
}

/// Most frequent label; ties go to the smallest label.
pub fn majority(labels: impl IntoIterator<Item = LabelId>) -> Option<LabelId> {
    let mut counts: Vec<(LabelId, usize)> = Vec::new();
    for l in labels {
        match counts.iter_mut().find(|(c, _)| *c == l) {
            Some((_, n)) => *n += 1,
            None => counts.push((l, 1)),
        }
    }
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(l, _)| l)
}

impl<T: Real> KnnModel<T> {
    pub fn train(x: &Matrix<T>, y: &[LabelId], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("knn: k must be at least 1"));
        }
        Ok(KnnModel { k, x: x.clone(), y: y.to_vec() })
    }

    pub fn predict(&self, x: &Matrix<T>) -> Vec<LabelId> {
        let k = self.k.min(self.x.rows());
        x.row_iter()
            .map(|q| majority(nearest(&self.x, q, k).into_iter().map(|i| self.y[i])).expect("non-empty training set"))
            .collect()
    }

    pub(super) fn write(&self, w: &mut ModelWriter) {
        let y: Vec<usize> = self.y.iter().map(|l| l.index()).collect();
        w.scalar("k", self.k).indices("y", &y).matrix("x", &self.x);
    }

    pub(super) fn read(r: &ModelReader) -> Result<Self> {
        let x: Matrix<T> = r.matrix("x")?;
        let y: Vec<LabelId> = r.indices("y")?.into_iter().map(|i| LabelId(i as u32)).collect();
        if y.len() != x.rows() {
            return Err(Error::Model("knn: label count differs from stored rows".into()));
        }
        Ok(KnnModel { k: r.scalar("k")?, x, y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    /// Full sort of every distance, then a plain vote count.
    fn oracle(train: &Matrix<f64>, y: &[LabelId], q: &[f64], k: usize) -> LabelId {
        let mut d: Vec<(f64, usize)> = train.row_iter().enumerate().map(|(i, r)| (sq_dist(r, q), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = std::collections::BTreeMap::new();
        for &(_, i) in &d[..k] {
            *votes.entry(y[i]).or_insert(0) += 1;
        }
        let top = *votes.values().max().unwrap();
        *votes.iter().find(|(_, &v)| v == top).unwrap().0
    }

    #[test]
    fn agrees_with_full_scan() {
        let mut rng = Rng::new(8);
        let x = Matrix::from_fn(200, 10, |_, _| rng.normal());
        let y: Vec<LabelId> = (0..200).map(|_| LabelId(rng.below(4) as u32)).collect();
        let q = Matrix::from_fn(200, 10, |_, _| rng.normal());
        for k in [1, 3, 5] {
            let m = KnnModel::train(&x, &y, k).unwrap();
            let p = m.predict(&q);
            for (i, row) in q.row_iter().enumerate() {
                assert_eq!(p[i], oracle(&x, &y, row, k), "k={k} row {i}");
            }
        }
    }

    #[test]
    fn hand_placed_vote_and_ties() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [-1.0], [5.0]]).unwrap();
        let (a, b) = (LabelId(0), LabelId(1));
        let m = KnnModel::train(&x, &[a, b, a, b], 3).unwrap();
        // Neighbours of 0.1: rows 0 (A), 1 (B), 2 (A).
        assert_eq!(m.predict(&Matrix::from_rows(&[[0.1]]).unwrap()), vec![a]);
        // Equidistant rows 1 and 2 from 0: lower index (row 1) wins the last slot for k=2.
        assert_eq!(nearest(&x, &[0.0], 2), vec![0, 1]);
        // Two-way vote tie resolves to the smaller label.
        let m2 = KnnModel::train(&x, &[b, a, a, b], 2).unwrap();
        assert_eq!(m2.predict(&Matrix::from_rows(&[[0.0]]).unwrap()), vec![a]);
    }

    #[test]
    fn k_one_returns_own_label_and_model_keeps_rows() {
        let mut rng = Rng::new(1);
        let x = Matrix::from_fn(30, 3, |_, _| rng.normal());
        let y: Vec<LabelId> = (0..30).map(|i| LabelId(i % 5)).collect();
        let m = KnnModel::train(&x, &y, 1).unwrap();
        assert_eq!(m.x.rows(), 30);
        assert_eq!(m.predict(&x), y);
    }
}

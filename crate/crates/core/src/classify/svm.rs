use std::collections::HashMap;

use crate::container::{ModelReader, ModelWriter};
use crate::dataset::LabelId;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Real;

/// Linear one-vs-rest SVM over standardized features.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel<T> {
    pub labels: Vec<LabelId>,
    pub means: Vec<T>,
    pub scales: Vec<T>,
    /// One row per label: feature weights followed by the bias.
    pub weights: Matrix<T>,
}

/// Distinct rows with their multiplicities, in order of first appearance.
fn unique_rows<T: Real>(x: &Matrix<T>, y: &[LabelId]) -> (Vec<usize>, Vec<f64>) {
    let mut seen: HashMap<(Vec<u64>, LabelId), usize> = HashMap::new();
    let mut first = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for (i, row) in x.row_iter().enumerate() {
        let key = (row.iter().map(|v| v.as_f64().to_bits()).collect(), y[i]);
        match seen.get(&key) {
            Some(&u) => counts[u] += 1.0,
            None => {
                seen.insert(key, first.len());
                first.push(i);
                counts.push(1.0);
            }
        }
    }
    (first, counts)
}

impl<T: Real> SvmModel<T> {
    /// Pegasos sub-gradient descent on the L2-regularized hinge loss, one
    /// binary problem per label.
    ///
    /// Training runs on distinct rows weighted by multiplicity, so a training
    /// set and any whole-number replication of it yield the same model.
    pub fn train(x: &Matrix<T>, y: &[LabelId], lambda: f64, epochs: usize, seed: u64) -> Result<Self> {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::invalid(format!("svm: lambda must be positive, got {lambda}")));
        }
        let mut labels = y.to_vec();
        labels.sort();
        labels.dedup();
        let (rows, counts) = unique_rows(x, y);
        let total: f64 = counts.iter().sum();
        let n = x.cols();

        let mut means = vec![0f64; n];
        for (&r, &c) in rows.iter().zip(&counts) {
            for (m, v) in means.iter_mut().zip(x.row(r)) {
                *m += c * v.as_f64();
            }
        }
        means.iter_mut().for_each(|m| *m /= total);
        let mut vars = vec![0f64; n];
        for (&r, &c) in rows.iter().zip(&counts) {
            for ((s, v), m) in vars.iter_mut().zip(x.row(r)).zip(&means) {
                *s += c * (v.as_f64() - m).powi(2);
            }
        }
        let scales: Vec<f64> = vars.iter().map(|s| (s / total).sqrt()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();

        // Standardized rows with a trailing constant for the bias.
        let z: Vec<Vec<f64>> = rows
            .iter()
            .map(|&r| {
                let mut v: Vec<f64> = x.row(r).iter().zip(&means).zip(&scales).map(|((v, m), s)| (v.as_f64() - m) / s).collect();
                v.push(1.0);
                v
            })
            .collect();
        let u = rows.len() as f64;
        let weight: Vec<f64> = counts.iter().map(|c| c * u / total).collect();
        let radius = 1.0 / lambda.sqrt();

        let root = Rng::new(seed);
        let mut weights = Matrix::zeros(labels.len(), n + 1);
        for (ci, &label) in labels.iter().enumerate() {
            let mut rng = root.fork(ci as u64);
            let target: Vec<f64> = rows.iter().map(|&r| if y[r] == label { 1.0 } else { -1.0 }).collect();
            // w = scale · v keeps the shrink step O(1).
            let mut v = vec![0f64; n + 1];
            let mut scale = 1.0f64;
            let mut sq_norm = 0.0f64;
            let mut order: Vec<usize> = (0..z.len()).collect();
            let mut t = 0f64;
            for _ in 0..epochs {
                rng.shuffle(&mut order);
                for &i in &order {
                    t += 1.0;
                    let eta = 1.0 / (lambda * t);
                    let margin = target[i] * scale * z[i].iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
                    let shrink = 1.0 - eta * lambda;
                    if shrink <= 0.0 {
                        v.iter_mut().for_each(|e| *e = 0.0);
                        scale = 1.0;
                        sq_norm = 0.0;
                    } else {
                        scale *= shrink;
                        sq_norm *= shrink * shrink;
                    }
                    if margin < 1.0 {
                        let step = eta * weight[i] * target[i] / scale;
                        let mut cross = 0.0;
                        let mut zz = 0.0;
                        for (e, &a) in v.iter_mut().zip(&z[i]) {
                            cross += *e * a;
                            zz += a * a;
                            *e += step * a;
                        }
                        sq_norm += 2.0 * scale * scale * step * cross + scale * scale * step * step * zz;
                    }
                    let norm = sq_norm.max(0.0).sqrt();
                    if norm > radius {
                        scale *= radius / norm;
                        sq_norm = radius * radius;
                    }
                    if scale < 1e-100 {
                        v.iter_mut().for_each(|e| *e *= scale);
                        scale = 1.0;
                    }
                }
            }
            for (dst, e) in weights.row_mut(ci).iter_mut().zip(&v) {
                *dst = T::lit(e * scale);
            }
        }
        Ok(SvmModel {
            labels,
            means: means.into_iter().map(T::lit).collect(),
            scales: scales.into_iter().map(T::lit).collect(),
            weights,
        })
    }

    /// Per-label decision values, `rows × labels`.
    pub fn scores(&self, x: &Matrix<T>) -> Matrix<T> {
        let n = self.means.len();
        Matrix::from_fn(x.rows(), self.labels.len(), |i, c| {
            let w = self.weights.row(c);
            let mut s = w[n];
            for (j, &v) in x.row(i).iter().enumerate() {
                s += w[j] * (v - self.means[j]) / self.scales[j];
            }
            s
        })
    }

    pub fn predict(&self, x: &Matrix<T>) -> Vec<LabelId> {
        let s = self.scores(x);
        s.row_iter()
            .map(|r| {
                let mut best = 0;
                for c in 1..r.len() {
                    if r[c] > r[best] {
                        best = c;
                    }
                }
                self.labels[best]
            })
            .collect()
    }

    pub(super) fn write(&self, w: &mut ModelWriter) {
        let labels: Vec<usize> = self.labels.iter().map(|l| l.index()).collect();
        w.indices("labels", &labels).vector("means", &self.means).vector("scales", &self.scales).matrix("weights", &self.weights);
    }

    pub(super) fn read(r: &ModelReader) -> Result<Self> {
        let m = SvmModel {
            labels: r.indices("labels")?.into_iter().map(|i| LabelId(i as u32)).collect(),
            means: r.vector("means")?,
            scales: r.vector("scales")?,
            weights: r.matrix("weights")?,
        };
        if m.weights.rows() != m.labels.len() || m.weights.cols() != m.means.len() + 1 || m.scales.len() != m.means.len() {
            return Err(Error::Model("svm: array shapes disagree".into()));
        }
        Ok(m)
    }
}

use crate::container::{ModelReader, ModelWriter};
use crate::error::Result;
use crate::linalg::sym_eig;
use crate::matrix::{matmul_bt, Matrix};
use crate::scalar::{axpy, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel<T> {
    pub means: Vec<T>,
    /// Unit principal axes, one per row (`d × n`).
    pub components: Matrix<T>,
    /// Variance along each axis, descending.
    pub explained: Vec<T>,
}

/// Sample covariance of the columns of `x`.
pub(crate) fn covariance<T: Real>(x: &Matrix<T>, means: &[T]) -> Matrix<T> {
    let n = x.cols();
    let mut s = Matrix::zeros(n, n);
    let mut centered = vec![T::zero(); n];
    for row in x.row_iter() {
        for ((c, &v), &m) in centered.iter_mut().zip(row).zip(means) {
            *c = v - m;
        }
        // Upper triangle only; mirrored below.
        let data = s.data_mut();
        for i in 0..n {
            let ci = centered[i];
            if ci != T::zero() {
                axpy(ci, &centered[i..], &mut data[i * n + i..(i + 1) * n]);
            }
        }
    }
    let denom = T::from_usize_lossy(x.rows().saturating_sub(1).max(1));
    for i in 0..n {
        for j in i..n {
            let v = s.get(i, j) / denom;
            s.set(i, j, v);
            s.set(j, i, v);
        }
    }
    s
}

impl<T: Real> PcaModel<T> {
    pub fn fit(x: &Matrix<T>, d: usize) -> Result<Self> {
        let means = x.column_means();
        let eig = sym_eig(&covariance(x, &means), d)?;
        let explained = eig.values.into_iter().map(|v| v.max(T::zero())).collect();
        Ok(PcaModel { means, components: eig.vectors, explained })
    }

    pub fn transform(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let centered = Matrix::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j) - self.means[j]);
        matmul_bt(&centered, &self.components)
    }

    /// Maps latent rows back to the input space.
    pub fn reconstruct(&self, z: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = z.matmul(&self.components)?;
        for i in 0..out.rows() {
            for (v, &m) in out.row_mut(i).iter_mut().zip(&self.means) {
                *v += m;
            }
        }
        Ok(out)
    }

    pub(super) fn write(&self, w: &mut ModelWriter) {
        w.vector("means", &self.means).vector("explained", &self.explained).matrix("components", &self.components);
    }

    pub(super) fn read(r: &ModelReader) -> Result<Self> {
        Ok(PcaModel { means: r.vector("means")?, components: r.matrix("components")?, explained: r.vector("explained")? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::matmul_bt;
    use crate::rng::Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = Rng::new(seed);
        let scales: Vec<f64> = (0..cols).map(|j| 1.0 + j as f64).collect();
        Matrix::from_fn(rows, cols, |_, j| rng.normal() * scales[j])
    }

    #[test]
    fn rank_one_line_recovers_direction() {
        let x = Matrix::from_fn(6, 2, |i, j| (i as f64 - 1.5) * if j == 0 { 1.0 } else { 2.0 });
        let m = PcaModel::fit(&x, 2).unwrap();
        let (a, b) = (1.0 / 5f64.sqrt(), 2.0 / 5f64.sqrt());
        let c = m.components.row(0);
        assert!((c[0] - a).abs() < 1e-12 && (c[1] - b).abs() < 1e-12, "{c:?}");
        assert!(m.explained[1].abs() < 1e-12);
    }

    #[test]
    fn components_orthonormal_and_full_rank_reconstructs() {
        let x = random(50, 6, 3);
        let m = PcaModel::fit(&x, 6).unwrap();
        let gram = matmul_bt(&m.components, &m.components).unwrap();
        assert!(gram.sub(&Matrix::identity(6)).unwrap().max_abs() < 1e-6);
        let back = m.reconstruct(&m.transform(&x).unwrap()).unwrap();
        assert!(back.sub(&x).unwrap().max_abs() < 1e-6);
        assert!(m.explained.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn mean_row_maps_to_zero() {
        let x = random(20, 4, 5);
        let m = PcaModel::fit(&x, 2).unwrap();
        let z = m.transform(&Matrix::new(1, 4, m.means.clone()).unwrap()).unwrap();
        assert!(z.max_abs() < 1e-12);
    }

    #[test]
    fn first_axis_beats_random_directions() {
        let x = random(80, 5, 7);
        let m = PcaModel::fit(&x, 1).unwrap();
        let residual = |dir: &[f64]| -> f64 {
            x.row_iter()
                .map(|r| {
                    let c: Vec<f64> = r.iter().zip(&m.means).map(|(v, mu)| v - mu).collect();
                    let p: f64 = c.iter().zip(dir).map(|(a, b)| a * b).sum();
                    c.iter().zip(dir).map(|(a, b)| (a - p * b).powi(2)).sum::<f64>()
                })
                .sum()
        };
        let best = residual(m.components.row(0));
        let mut rng = Rng::new(99);
        for _ in 0..100 {
            let v: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let u: Vec<f64> = v.iter().map(|a| a / norm).collect();
            assert!(best <= residual(&u) + 1e-9);
        }
    }

    #[test]
    fn covariance_matches_definition() {
        let x = random(15, 3, 8);
        let means = x.column_means();
        let s = covariance(&x, &means);
        for i in 0..3 {
            for j in 0..3 {
                let want: f64 = x.row_iter().map(|r| (r[i] - means[i]) * (r[j] - means[j])).sum::<f64>() / 14.0;
                assert!((s.get(i, j) - want).abs() < 1e-12);
            }
        }
    }
}

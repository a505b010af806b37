use crate::container::{ModelReader, ModelWriter};
use crate::error::Result;
use crate::matrix::{matmul, Matrix};
use crate::rng::Rng;
use crate::scalar::Real;

/// Linear random projection `x · R` with `R` of shape `n × d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionModel<T> {
    pub r: Matrix<T>,
}

/// Entries i.i.d. `Normal(0, 1/d)`.
pub fn gaussian_matrix<T: Real>(n: usize, d: usize, rng: &mut Rng) -> Matrix<T> {
    let scale = 1.0 / (d as f64).sqrt();
    Matrix::from_fn(n, d, |_, _| T::lit(rng.normal() * scale))
}

/// Sparse scheme with density `1/s`, `s = sqrt(n)`: entries are
/// `±sqrt(s/d)` with probability `1/(2s)` each, zero otherwise.
pub fn sparse_matrix<T: Real>(n: usize, d: usize, rng: &mut Rng) -> Matrix<T> {
    let s = (n as f64).sqrt().max(1.0);
    let p = 1.0 / (2.0 * s);
    let v = (s / d as f64).sqrt();
    Matrix::from_fn(n, d, |_, _| {
        let u = rng.uniform();
        T::lit(if u < p {
            v
        } else if u < 2.0 * p {
            -v
        } else {
            0.0
        })
    })
}

impl<T: Real> ProjectionModel<T> {
    pub fn transform(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        matmul(x, &self.r)
    }

    pub(super) fn write(&self, w: &mut ModelWriter) {
        w.matrix("projection", &self.r);
    }

    pub(super) fn read(r: &ModelReader) -> Result<Self> {
        Ok(ProjectionModel { r: r.matrix("projection")? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::sq_dist;

    #[test]
    fn gaussian_entries_have_variance_one_over_d() {
        let r: Matrix<f64> = gaussian_matrix(400, 50, &mut Rng::new(1));
        let n = r.data().len() as f64;
        let mean = r.data().iter().sum::<f64>() / n;
        let var = r.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01);
        assert!((var * 50.0 - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn sparse_entries_follow_three_point_law() {
        let (n, d) = (900, 40);
        let r: Matrix<f64> = sparse_matrix(n, d, &mut Rng::new(2));
        let v = (30.0f64 / d as f64).sqrt();
        let (mut pos, mut neg) = (0usize, 0usize);
        for &x in r.data() {
            if x == v {
                pos += 1;
            } else if x == -v {
                neg += 1;
            } else {
                assert_eq!(x, 0.0);
            }
        }
        // P(+) = P(-) = 1/60 over 36000 entries: mean 600, sd about 24.
        for c in [pos, neg] {
            assert!((c as f64 - 600.0).abs() < 5.0 * 24.4, "{c}");
        }
    }

    #[test]
    fn gaussian_projection_roughly_preserves_distances() {
        let mut rng = Rng::new(3);
        let x = Matrix::from_fn(50, 500, |_, _| rng.normal());
        let mut failures = 0;
        for seed in 0..20 {
            let m = ProjectionModel::<f64> { r: gaussian_matrix(500, 200, &mut Rng::new(seed)) };
            let z = m.transform(&x).unwrap();
            let ok = (0..50).all(|i| {
                (i + 1..50).all(|j| {
                    let ratio = (sq_dist(z.row(i), z.row(j)) / sq_dist(x.row(i), x.row(j))).sqrt();
                    (0.5..=1.5).contains(&ratio)
                })
            });
            failures += usize::from(!ok);
        }
        assert!(failures <= 1, "{failures} failing seeds");
    }
}

use crate::container::{ModelReader, ModelWriter};
use crate::error::{Error, Result};
use crate::matrix::{matmul, matmul_at, matmul_bt, Matrix};
use crate::rng::Rng;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct NmfParams {
    pub max_iter: usize,
    /// Stop once the relative objective change of one iteration drops below this.
    pub tol: f64,
    pub transform_iter: usize,
}

impl Default for NmfParams {
    fn default() -> Self {
        NmfParams { max_iter: 200, tol: 1e-4, transform_iter: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct NmfFactors<T> {
    /// `samples × d`.
    pub w: Matrix<T>,
    /// `d × features`.
    pub h: Matrix<T>,
    pub iterations: usize,
    /// Objective before the first update and after every half-update, when requested.
    pub trace: Vec<f64>,
}

/// `‖X − W·H‖²_F`, accumulated in `f64`.
pub fn nmf_objective<T: Real>(x: &Matrix<T>, w: &Matrix<T>, h: &Matrix<T>) -> Result<f64> {
    let wh = matmul(w, h)?;
    Ok(x.data().iter().zip(wh.data()).map(|(&a, &b)| (a.as_f64() - b.as_f64()).powi(2)).sum())
}

/// `m ← m ∘ num / den`, leaving entries with a zero denominator untouched.
fn multiplicative_step<T: Real>(m: &mut Matrix<T>, num: &Matrix<T>, den: &Matrix<T>) {
    for ((v, &a), &b) in m.data_mut().iter_mut().zip(num.data()).zip(den.data()) {
        if b > T::zero() {
            *v = *v * a / b;
        }
    }
}

/// Lee–Seung multiplicative updates for `X ≈ W·H` with `X ≥ 0`.
pub fn nmf_factorize<T: Real>(
    x: &Matrix<T>,
    d: usize,
    params: &NmfParams,
    rng: &mut Rng,
    trace: bool,
) -> Result<NmfFactors<T>> {
    if x.data().iter().any(|&v| v < T::zero()) {
        return Err(Error::invalid("nmf input must be non-negative"));
    }
    let mean = x.data().iter().map(|v| v.as_f64()).sum::<f64>() / x.data().len().max(1) as f64;
    if mean == 0.0 {
        return Err(Error::invalid("nmf input is identically zero"));
    }
    let scale = (mean / d as f64).sqrt();
    let mut w = Matrix::from_fn(x.rows(), d, |_, _| T::lit(scale * (0.01 + rng.uniform())));
    let mut h = Matrix::from_fn(d, x.cols(), |_, _| T::lit(scale * (0.01 + rng.uniform())));
    let x_sq: f64 = x.data().iter().map(|v| v.as_f64().powi(2)).sum();

    let mut out_trace = Vec::new();
    if trace {
        out_trace.push(nmf_objective(x, &w, &h)?);
    }
    let mut prev = f64::INFINITY;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        let num = matmul_at(&w, x)?;
        let den = matmul(&matmul_at(&w, &w)?, &h)?;
        multiplicative_step(&mut h, &num, &den);
        if trace {
            out_trace.push(nmf_objective(x, &w, &h)?);
        }

        let xht = matmul_bt(x, &h)?;
        let hht = matmul_bt(&h, &h)?;
        let den = matmul(&w, &hht)?;
        multiplicative_step(&mut w, &xht, &den);
        if trace {
            out_trace.push(nmf_objective(x, &w, &h)?);
        }

        // ‖X‖² − 2⟨W, XHᵀ⟩ + ⟨WᵀW, HHᵀ⟩ reuses the products already formed.
        let cross: f64 = w.data().iter().zip(xht.data()).map(|(a, b)| a.as_f64() * b.as_f64()).sum();
        let wtw = matmul_at(&w, &w)?;
        let quad: f64 = wtw.data().iter().zip(hht.data()).map(|(a, b)| a.as_f64() * b.as_f64()).sum();
        let obj = (x_sq - 2.0 * cross + quad).max(0.0);
        if prev.is_finite() && (prev - obj).abs() <= params.tol * prev.max(f64::MIN_POSITIVE) {
            break;
        }
        prev = obj;
    }
    Ok(NmfFactors { w, h, iterations, trace: out_trace })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmfModel<T> {
    pub mins: Vec<T>,
    pub maxs: Vec<T>,
    /// `d × n`.
    pub basis: Matrix<T>,
    /// Starting value for every coefficient when solving at transform time.
    pub coef_init: T,
    pub transform_iter: usize,
}

impl<T: Real> NmfModel<T> {
    pub fn fit(x: &Matrix<T>, d: usize, params: &NmfParams, rng: &mut Rng) -> Result<Self> {
        let n = x.cols();
        let mut mins = vec![T::infinity(); n];
        let mut maxs = vec![T::neg_infinity(); n];
        for r in x.row_iter() {
            for j in 0..n {
                mins[j] = mins[j].min(r[j]);
                maxs[j] = maxs[j].max(r[j]);
            }
        }
        if mins.iter().zip(&maxs).all(|(a, b)| a == b) {
            return Err(Error::invalid("nmf: every column is constant"));
        }
        let mut model = NmfModel { mins, maxs, basis: Matrix::zeros(0, n), coef_init: T::zero(), transform_iter: params.transform_iter };
        let scaled = model.scale(x);
        let factors = nmf_factorize(&scaled, d, params, rng, false)?;
        let mean = scaled.data().iter().map(|v| v.as_f64()).sum::<f64>() / scaled.data().len() as f64;
        model.coef_init = T::lit((mean / d as f64).sqrt());
        model.basis = factors.h;
        Ok(model)
    }

    /// Per-column min-max scaling; values below the training minimum clamp to 0.
    fn scale(&self, x: &Matrix<T>) -> Matrix<T> {
        Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            let range = self.maxs[j] - self.mins[j];
            if range > T::zero() {
                ((x.get(i, j) - self.mins[j]) / range).max(T::zero())
            } else {
                T::zero()
            }
        })
    }

    pub fn transform(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let xs = self.scale(x);
        let d = self.basis.rows();
        let xht = matmul_bt(&xs, &self.basis)?;
        let hht = matmul_bt(&self.basis, &self.basis)?;
        let mut w = Matrix::from_fn(x.rows(), d, |_, _| self.coef_init);
        for _ in 0..self.transform_iter {
            let den = matmul(&w, &hht)?;
            multiplicative_step(&mut w, &xht, &den);
        }
        Ok(w)
    }

    pub(super) fn write(&self, w: &mut ModelWriter) {
        w.scalar("transform_iter", self.transform_iter)
            .vector("coef_init", &[self.coef_init])
            .vector("mins", &self.mins)
            .vector("maxs", &self.maxs)
            .matrix("basis", &self.basis);
    }

    pub(super) fn read(r: &ModelReader) -> Result<Self> {
        let init: Vec<T> = r.vector("coef_init")?;
        Ok(NmfModel {
            mins: r.vector("mins")?,
            maxs: r.vector("maxs")?,
            basis: r.matrix("basis")?,
            coef_init: *init.first().ok_or_else(|| Error::Model("empty coef_init".into()))?,
            transform_iter: r.scalar("transform_iter")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nonneg(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = Rng::new(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.uniform())
    }

    #[test]
    fn objective_never_increases() {
        let x = nonneg(20, 6, 1);
        let f = nmf_factorize(&x, 3, &NmfParams::default(), &mut Rng::new(4), true).unwrap();
        assert_eq!(f.trace.len(), 2 * f.iterations + 1);
        for w in f.trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
        assert!(f.w.data().iter().chain(f.h.data()).all(|&v| v >= 0.0));
        assert!(f.trace.last().unwrap() < &f.trace[0]);
    }

    #[test]
    fn constant_data_is_rejected() {
        let x = Matrix::from_fn(5, 3, |_, j| j as f64);
        assert!(NmfModel::fit(&x, 2, &NmfParams::default(), &mut Rng::new(0)).is_err());
        assert!(nmf_factorize(&Matrix::<f64>::zeros(3, 3), 2, &NmfParams::default(), &mut Rng::new(0), false).is_err());
    }

    #[test]
    fn exact_low_rank_is_approximated_closely() {
        let w = nonneg(30, 2, 5);
        let h = nonneg(2, 8, 6);
        let x = matmul(&w, &h).unwrap();
        let params = NmfParams { max_iter: 2000, tol: 1e-12, transform_iter: 50 };
        let f = nmf_factorize(&x, 2, &params, &mut Rng::new(1), false).unwrap();
        let rel = nmf_objective(&x, &f.w, &f.h).unwrap() / x.data().iter().map(|v| v * v).sum::<f64>();
        assert!(rel < 1e-3, "{rel}");
    }

    #[test]
    fn negative_inputs_are_scaled_and_clamped() {
        let mut rng = Rng::new(2);
        let x = Matrix::from_fn(25, 5, |_, _| rng.normal());
        let m = NmfModel::fit(&x, 2, &NmfParams::default(), &mut Rng::new(3)).unwrap();
        let far = Matrix::from_fn(2, 5, |i, _| if i == 0 { -100.0 } else { 100.0 });
        let z = m.transform(&far).unwrap();
        assert!(z.data().iter().all(|&v| v >= 0.0 && v.is_finite()));
    }
}

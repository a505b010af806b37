//! Symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! iteration (the EISPACK `tred2`/`tql2` pair). Eigenvectors are accumulated
//! as rows so the QL rotations touch contiguous memory.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Symmetry tolerance applied to `|s_ij - s_ji|`, scaled by `max(1, max|s|)`.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// QL iterations allowed per eigenvalue.
pub const MAX_QL_ITERATIONS: usize = 60;

#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    /// Descending.
    pub values: Vec<T>,
    /// One unit eigenvector per row, `k × n`.
    pub vectors: Matrix<T>,
}

/// Top-`k` eigenpairs of a symmetric matrix, largest eigenvalue first.
///
/// Each eigenvector is sign-normalized so that its largest-magnitude
/// component (first one on ties) is positive.
pub fn sym_eig<T: Real>(s: &Matrix<T>, k: usize) -> Result<SymEigen<T>> {
    let n = s.rows();
    if s.cols() != n {
        return Err(Error::DimensionMismatch { op: "sym_eig", left: s.shape(), right: (n, n) });
    }
    if k > n {
        return Err(Error::invalid(format!("sym_eig: k = {k} exceeds matrix order {n}")));
    }
    s.ensure_finite()?;
    let tol = T::lit(SYMMETRY_TOL) * s.max_abs().max(T::one());
    for i in 0..n {
        for j in i + 1..n {
            let diff = (s.get(i, j) - s.get(j, i)).abs();
            if diff > tol {
                return Err(Error::NotSymmetric { i, j, diff: diff.as_f64() });
            }
        }
    }
    if n == 0 {
        return Ok(SymEigen { values: Vec::new(), vectors: Matrix::zeros(0, 0) });
    }

    // Work on the symmetrized copy.
    let mut v = vec![T::zero(); n * n];
    let half = T::lit(0.5);
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = (s.get(i, j) + s.get(j, i)) * half;
        }
    }
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(n, &mut v, &mut d, &mut e);
    // Rows of `z` are eigenvectors.
    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            z[j * n + i] = v[i * n + j];
        }
    }
    drop(v);
    tql2(n, &mut z, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut values = Vec::with_capacity(k);
    let mut vectors = Matrix::zeros(k, n);
    for (r, &idx) in order.iter().take(k).enumerate() {
        values.push(d[idx]);
        let src = &z[idx * n..(idx + 1) * n];
        let mut pivot = 0;
        for (j, x) in src.iter().enumerate() {
            if x.abs() > src[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if src[pivot] < T::zero() { -T::one() } else { T::one() };
        for (dst, &x) in vectors.row_mut(r).iter_mut().zip(src) {
            *dst = sign * x;
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Householder tridiagonalization. On exit `d` holds the diagonal, `e[1..]`
/// the sub-diagonal and `v` the accumulated orthogonal transform.
fn tred2<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
                v[idx(j, i)] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = T::zero();
    }
    v[idx(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit QL on the tridiagonal `(d, e)`. `z` holds eigenvectors as rows.
fn tql2<T: Real>(n: usize, z: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // e[n-1] is zero, so m < n always holds here.
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence { iterations: iter - 1 });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    /// Cyclic Jacobi rotations; independent eigenvalue route for cross-checks.
    fn jacobi_eigenvalues(s: &Matrix<f64>) -> Vec<f64> {
        let n = s.rows();
        let mut a = s.clone();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off += a.get(i, j) * a.get(i, j);
                    }
                }
            }
            if off < 1e-22 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a.get(p, q);
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - sn * akq);
                        a.set(k, q, sn * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - sn * aqk);
                        a.set(q, k, sn * apk + c * aqk);
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ev
    }

    fn random_sym(rng: &mut Rng, n: usize) -> Matrix<f64> {
        let a = Matrix::from_fn(n, n, |_, _| rng.normal());
        Matrix::from_fn(n, n, |i, j| a.get(i, j) + a.get(j, i))
    }

    fn check_pairs(s: &Matrix<f64>, eig: &SymEigen<f64>) {
        let n = s.rows();
        for (r, &lambda) in eig.values.iter().enumerate() {
            let v = eig.vectors.row(r);
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let sv: f64 = (0..n).map(|j| s.get(i, j) * v[j]).sum();
                worst = worst.max((sv - lambda * v[i]).abs());
            }
            assert!(worst <= 1e-6 * lambda.abs().max(1.0), "residual {worst}");
            for q in 0..eig.values.len() {
                let g: f64 = v.iter().zip(eig.vectors.row(q)).map(|(a, b)| a * b).sum();
                let want = if q == r { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-6);
            }
        }
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn diagonal_case() {
        let s = Matrix::<f64>::from_rows(&[[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        let eig = sym_eig(&s, 3).unwrap();
        assert_eq!(eig.values.len(), 3);
        for (got, want) in eig.values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let axes = [0, 2, 1];
        for (r, &ax) in axes.iter().enumerate() {
            assert!((eig.vectors.get(r, ax) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let s = Matrix::<f64>::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let eig = sym_eig(&s, 2).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((eig.vectors.get(0, 0) - h).abs() < 1e-12);
        assert!((eig.vectors.get(0, 1) - h).abs() < 1e-12);
        // (1,-1)/sqrt2 under the sign rule: first component wins the tie.
        assert!((eig.vectors.get(1, 0) - h).abs() < 1e-12);
        assert!((eig.vectors.get(1, 1) + h).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let eig = sym_eig(&Matrix::<f64>::zeros(4, 4), 1).unwrap();
        assert_eq!(eig.values, vec![0.0]);
        assert!((eig.vectors.frobenius() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_oversized_k() {
        let s = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&s, 1), Err(Error::NotSymmetric { .. })));
        assert!(sym_eig(&Matrix::<f64>::identity(2), 3).is_err());
    }

    #[test]
    fn one_by_one_and_f32() {
        let s = Matrix::from_rows(&[[-4.0f32]]).unwrap();
        let eig = sym_eig(&s, 1).unwrap();
        assert_eq!(eig.values, vec![-4.0]);
        assert_eq!(eig.vectors.get(0, 0), 1.0);
    }

    #[test]
    fn agrees_with_jacobi_on_random_matrices() {
        let mut rng = Rng::new(11);
        for n in [2, 3, 5, 8, 17] {
            let s = random_sym(&mut rng, n);
            let eig = sym_eig(&s, n).unwrap();
            check_pairs(&s, &eig);
            for (a, b) in eig.values.iter().zip(jacobi_eigenvalues(&s)) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        // Projector onto a 2-D subspace plus identity: eigenvalues {2,2,1,1}.
        let mut rng = Rng::new(5);
        let u = Matrix::from_fn(4, 2, |_, _| rng.normal());
        let mut s = Matrix::identity(4);
        let q = gram_schmidt(&u);
        for i in 0..4 {
            for j in 0..4 {
                let p: f64 = (0..2).map(|c| q.get(i, c) * q.get(j, c)).sum();
                s.set(i, j, s.get(i, j) + p);
            }
        }
        let eig = sym_eig(&s, 4).unwrap();
        check_pairs(&s, &eig);
        for (a, b) in eig.values.iter().zip([2.0, 2.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    fn gram_schmidt(u: &Matrix<f64>) -> Matrix<f64> {
        let mut q = u.clone();
        for c in 0..u.cols() {
            for prev in 0..c {
                let d: f64 = (0..u.rows()).map(|i| q.get(i, c) * q.get(i, prev)).sum();
                for i in 0..u.rows() {
                    q.set(i, c, q.get(i, c) - d * q.get(i, prev));
                }
            }
            let norm: f64 = (0..u.rows()).map(|i| q.get(i, c).powi(2)).sum::<f64>().sqrt();
            for i in 0..u.rows() {
                q.set(i, c, q.get(i, c) / norm);
            }
        }
        q
    }

    proptest! {
        #[test]
        fn full_reconstruction(seed in any::<u64>(), n in 1usize..9) {
            let mut rng = Rng::new(seed);
            let s = random_sym(&mut rng, n);
            let eig = sym_eig(&s, n).unwrap();
            let mut recon = Matrix::<f64>::zeros(n, n);
            for (r, &lambda) in eig.values.iter().enumerate() {
                let v = eig.vectors.row(r);
                for i in 0..n {
                    for j in 0..n {
                        recon.set(i, j, recon.get(i, j) + lambda * v[i] * v[j]);
                    }
                }
            }
            prop_assert!(recon.sub(&s).unwrap().frobenius() <= 1e-6);
            check_pairs(&s, &eig);
        }
    }
}

use crate::container::{ModelReader, ModelWriter};
use crate::error::{Error, Result};
use crate::matrix::{matmul, matmul_at, matmul_bt, Matrix};
use crate::rng::Rng;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct AeParams {
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AeParams {
    fn default() -> Self {
        AeParams { epochs: 30, batch: 256, learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One hidden ReLU layer of width `d` with a linear decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct AeNet<T> {
    /// Encoder, `d × n`.
    pub w1: Matrix<T>,
    pub b1: Vec<T>,
    /// Decoder, `n × d`.
    pub w2: Matrix<T>,
    pub b2: Vec<T>,
}

fn add_bias<T: Real>(m: &mut Matrix<T>, b: &[T]) {
    for i in 0..m.rows() {
        for (v, &bj) in m.row_mut(i).iter_mut().zip(b) {
            *v += bj;
        }
    }
}

fn column_sums<T: Real>(m: &Matrix<T>) -> Vec<T> {
    let mut s = vec![T::zero(); m.cols()];
    for r in m.row_iter() {
        for (a, &v) in s.iter_mut().zip(r) {
            *a += v;
        }
    }
    s
}

impl<T: Real> AeNet<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n: usize, d: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / (n + d) as f64).sqrt();
        let mut draw = |_, _| T::lit((2.0 * rng.uniform() - 1.0) * limit);
        let w1 = Matrix::from_fn(d, n, &mut draw);
        let w2 = Matrix::from_fn(n, d, &mut draw);
        AeNet { w1, b1: vec![T::zero(); d], w2, b2: vec![T::zero(); n] }
    }

    /// Pre-activations of the hidden layer.
    fn hidden_pre(&self, z: &Matrix<T>) -> Result<Matrix<T>> {
        let mut a = matmul_bt(z, &self.w1)?;
        add_bias(&mut a, &self.b1);
        Ok(a)
    }

    pub fn encode(&self, z: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.hidden_pre(z)?.map(|v| v.max(T::zero())))
    }

    pub fn decode(&self, h: &Matrix<T>) -> Result<Matrix<T>> {
        let mut y = matmul_bt(h, &self.w2)?;
        add_bias(&mut y, &self.b2);
        Ok(y)
    }

    /// Mean squared reconstruction error over all entries of `z`.
    pub fn loss(&self, z: &Matrix<T>) -> Result<T> {
        let y = self.decode(&self.encode(z)?)?;
        let total: T = y.data().iter().zip(z.data()).map(|(&a, &b)| (a - b) * (a - b)).sum();
        Ok(total / T::from_usize_lossy(z.data().len().max(1)))
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, z: &Matrix<T>) -> Result<(T, AeNet<T>)> {
        let a = self.hidden_pre(z)?;
        let h = a.map(|v| v.max(T::zero()));
        let y = self.decode(&h)?;
        let scale = T::lit(2.0) / T::from_usize_lossy(z.data().len().max(1));
        let mut loss = T::zero();
        let g = Matrix::from_fn(y.rows(), y.cols(), |i, j| {
            let e = y.get(i, j) - z.get(i, j);
            loss += e * e;
            e * scale
        });
        loss /= T::from_usize_lossy(z.data().len().max(1));
        let dw2 = matmul_at(&g, &h)?;
        let db2 = column_sums(&g);
        let mut da = matmul(&g, &self.w2)?;
        for (v, &pre) in da.data_mut().iter_mut().zip(a.data()) {
            if pre <= T::zero() {
                *v = T::zero();
            }
        }
        let dw1 = matmul_at(&da, z)?;
        let db1 = column_sums(&da);
        Ok((loss, AeNet { w1: dw1, b1: db1, w2: dw2, b2: db2 }))
    }

    /// All parameters in a fixed order: `w1, b1, w2, b2`.
    pub fn to_flat(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend_from_slice(self.w1.data());
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(self.w2.data());
        v.extend_from_slice(&self.b2);
        v
    }

    pub fn set_flat(&mut self, v: &[T]) {
        assert_eq!(v.len(), self.param_count(), "flat parameter length");
        let (a, rest) = v.split_at(self.w1.data().len());
        self.w1.data_mut().copy_from_slice(a);
        let (a, rest) = rest.split_at(self.b1.len());
        self.b1.copy_from_slice(a);
        let (a, rest) = rest.split_at(self.w2.data().len());
        self.w2.data_mut().copy_from_slice(a);
        self.b2.copy_from_slice(rest);
    }

    pub fn param_count(&self) -> usize {
        self.w1.data().len() + self.b1.len() + self.w2.data().len() + self.b2.len()
    }
}

/// Mini-batch Adam on the reconstruction loss.
///
/// Returns the network and the full-data loss before training followed by
/// the loss after each epoch.
pub fn train_autoencoder<T: Real>(z: &Matrix<T>, d: usize, params: &AeParams, rng: &mut Rng) -> Result<(AeNet<T>, Vec<T>)> {
    if params.batch == 0 {
        return Err(Error::invalid("autoencoder batch size must be positive"));
    }
    let mut net = AeNet::init(z.cols(), d, &mut rng.fork(0));
    let mut order_rng = rng.fork(1);
    let mut theta = net.to_flat();
    let mut m = vec![0f64; theta.len()];
    let mut v = vec![0f64; theta.len()];
    let mut step = 0i32;
    let mut losses = vec![net.loss(z)?];
    let mut order: Vec<usize> = (0..z.rows()).collect();
    for _ in 0..params.epochs {
        order_rng.shuffle(&mut order);
        for chunk in order.chunks(params.batch) {
            let (_, grad) = net.loss_and_grad(&z.select_rows(chunk))?;
            step += 1;
            let c1 = 1.0 - params.beta1.powi(step);
            let c2 = 1.0 - params.beta2.powi(step);
            for (((p, g), mi), vi) in theta.iter_mut().zip(grad.to_flat()).zip(&mut m).zip(&mut v) {
                let g = g.as_f64();
                *mi = params.beta1 * *mi + (1.0 - params.beta1) * g;
                *vi = params.beta2 * *vi + (1.0 - params.beta2) * g * g;
                let upd = params.learning_rate * (*mi / c1) / ((*vi / c2).sqrt() + params.eps);
                *p -= T::lit(upd);
            }
            net.set_flat(&theta);
        }
        losses.push(net.loss(z)?);
    }
    Ok((net, losses))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AeModel<T> {
    pub means: Vec<T>,
    pub scales: Vec<T>,
    pub net: AeNet<T>,
    /// Full-data loss before training and after each epoch.
    pub loss_trace: Vec<T>,
}

impl<T: Real> AeModel<T> {
    pub fn fit(x: &Matrix<T>, d: usize, params: &AeParams, rng: &mut Rng) -> Result<Self> {
        let means = x.column_means();
        let nrows = T::from_usize_lossy(x.rows());
        let mut scales = vec![T::zero(); x.cols()];
        for r in x.row_iter() {
            for ((s, &v), &m) in scales.iter_mut().zip(r).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut scales {
            *s = (*s / nrows).sqrt();
            if *s <= T::zero() {
                *s = T::one();
            }
        }
        let mut model = AeModel { means, scales, net: AeNet::init(0, 0, rng), loss_trace: Vec::new() };
        let (net, trace) = train_autoencoder(&model.standardize(x), d, params, rng)?;
        model.net = net;
        model.loss_trace = trace;
        Ok(model)
    }

    fn standardize(&self, x: &Matrix<T>) -> Matrix<T> {
        Matrix::from_fn(x.rows(), x.cols(), |i, j| (x.get(i, j) - self.means[j]) / self.scales[j])
    }

    pub fn transform(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        self.net.encode(&self.standardize(x))
    }

    pub(super) fn write(&self, w: &mut ModelWriter) {
        w.vector("means", &self.means)
            .vector("scales", &self.scales)
            .vector("loss_trace", &self.loss_trace)
            .matrix("w1", &self.net.w1)
            .vector("b1", &self.net.b1)
            .matrix("w2", &self.net.w2)
            .vector("b2", &self.net.b2);
    }

    pub(super) fn read(r: &ModelReader) -> Result<Self> {
        let net = AeNet { w1: r.matrix("w1")?, b1: r.vector("b1")?, w2: r.matrix("w2")?, b2: r.vector("b2")? };
        let (d, n) = net.w1.shape();
        if net.b1.len() != d || net.w2.shape() != (n, d) || net.b2.len() != n {
            return Err(Error::Model("autoencoder weight shapes disagree".into()));
        }
        Ok(AeModel { means: r.vector("means")?, scales: r.vector("scales")?, net, loss_trace: r.vector("loss_trace")? })
    }
}

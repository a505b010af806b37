//! Classifiers behind one train/predict contract: k-nearest neighbours,
//! linear SVM, CART and a uniform random guesser.

mod cart;
mod knn;
mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use cart::{CartModel, CartParams, Node};
pub use knn::{majority, nearest, KnnModel};
pub use svm::SvmModel;

use crate::container::{ModelReader, ModelWriter};
use crate::dataset::LabelId;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    Knn,
    Svm,
    Cart,
    Random,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [ClassifierKind::Knn, ClassifierKind::Svm, ClassifierKind::Cart, ClassifierKind::Random];
    pub const REAL: [ClassifierKind; 3] = [ClassifierKind::Knn, ClassifierKind::Svm, ClassifierKind::Cart];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Cart => "cart",
            ClassifierKind::Random => "random",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown classifier '{s}' (expected knn, svm, cart or random)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub k: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub cart: CartParams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        ClassifierSpec { kind, k: 5, lambda: 1e-4, epochs: 20, cart: CartParams::default(), seed }
    }
}

/// Uniform guess over the labels seen in training.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomModel {
    pub labels: Vec<LabelId>,
    pub seed: u64,
}

impl RandomModel {
    /// Each call restarts from the seed, so repeated calls agree.
    pub fn predict(&self, rows: usize) -> Vec<LabelId> {
        let mut rng = Rng::new(self.seed);
        (0..rows).map(|_| self.labels[rng.below(self.labels.len())]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierModel<T> {
    Knn(KnnModel<T>),
    Svm(SvmModel<T>),
    Cart(CartModel<T>),
    Random(RandomModel, usize),
}

pub fn train<T: Real>(spec: &ClassifierSpec, x: &Matrix<T>, y: &[LabelId]) -> Result<ClassifierModel<T>> {
    if x.rows() == 0 {
        return Err(Error::invalid("cannot train on an empty set"));
    }
    if x.rows() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    x.ensure_finite()?;
    Ok(match spec.kind {
        ClassifierKind::Knn => ClassifierModel::Knn(KnnModel::train(x, y, spec.k)?),
        ClassifierKind::Svm => ClassifierModel::Svm(SvmModel::train(x, y, spec.lambda, spec.epochs, spec.seed)?),
        ClassifierKind::Cart => ClassifierModel::Cart(CartModel::train(x, y, spec.cart)?),
        ClassifierKind::Random => {
            let mut labels = y.to_vec();
            labels.sort();
            labels.dedup();
            ClassifierModel::Random(RandomModel { labels, seed: spec.seed }, x.cols())
        }
    })
}

/// Fraction of exact matches; 0 for empty input.
pub fn accuracy(predicted: &[LabelId], truth: &[LabelId]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub train_time: Duration,
    pub test_time: Duration,
}

/// Trains on one set, predicts the other, timing both phases on the calling thread.
pub fn evaluate_timed<T: Real>(
    spec: &ClassifierSpec,
    train_x: &Matrix<T>,
    train_y: &[LabelId],
    test_x: &Matrix<T>,
    test_y: &[LabelId],
) -> Result<Evaluation> {
    if test_x.rows() != test_y.len() {
        return Err(Error::invalid(format!("{} test rows but {} labels", test_x.rows(), test_y.len())));
    }
    let start = Instant::now();
    let model = train(spec, train_x, train_y)?;
    let train_time = start.elapsed();
    let start = Instant::now();
    let predicted = model.predict(test_x)?;
    let test_time = start.elapsed();
    Ok(Evaluation { accuracy: accuracy(&predicted, test_y), train_time, test_time })
}

impl<T: Real> ClassifierModel<T> {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::Knn(_) => ClassifierKind::Knn,
            ClassifierModel::Svm(_) => ClassifierKind::Svm,
            ClassifierModel::Cart(_) => ClassifierKind::Cart,
            ClassifierModel::Random(..) => ClassifierKind::Random,
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            ClassifierModel::Knn(m) => m.x.cols(),
            ClassifierModel::Svm(m) => m.means.len(),
            ClassifierModel::Cart(m) => m.width,
            ClassifierModel::Random(_, w) => *w,
        }
    }

    pub fn predict(&self, x: &Matrix<T>) -> Result<Vec<LabelId>> {
        if x.cols() != self.input_width() {
            return Err(Error::DimensionMismatch { op: "predict", left: x.shape(), right: (0, self.input_width()) });
        }
        Ok(match self {
            ClassifierModel::Knn(m) => m.predict(x),
            ClassifierModel::Svm(m) => m.predict(x),
            ClassifierModel::Cart(m) => m.predict(x),
            ClassifierModel::Random(m, _) => m.predict(x.rows()),
        })
    }

    pub fn to_text(&self) -> String {
        self.to_text_with_labels(&[])
    }

    /// Serializes the model, recording the label names its ids refer to.
    pub fn to_text_with_labels(&self, label_names: &[String]) -> String {
        let mut w = ModelWriter::new(self.kind().name());
        if !label_names.is_empty() {
            w.strings("label_names", label_names);
        }
        match self {
            ClassifierModel::Knn(m) => m.write(&mut w),
            ClassifierModel::Svm(m) => m.write(&mut w),
            ClassifierModel::Cart(m) => m.write(&mut w),
            ClassifierModel::Random(m, width) => {
                let labels: Vec<usize> = m.labels.iter().map(|l| l.index()).collect();
                w.scalar("width", width).scalar("seed", m.seed).indices("labels", &labels);
            }
        }
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(Self::from_text_with_labels(text)?.0)
    }

    /// Parses a model and the label names stored with it (empty if none).
    pub fn from_text_with_labels(text: &str) -> Result<(Self, Vec<String>)> {
        let r = ModelReader::parse(text)?;
        let names = r.strings("label_names").unwrap_or_default();
        let kind: ClassifierKind =
            r.kind()?.parse().map_err(|_| Error::Model(format!("'{}' is not a classifier model", r.kind().unwrap_or(""))))?;
        let model = match kind {
            ClassifierKind::Knn => ClassifierModel::Knn(KnnModel::read(&r)?),
            ClassifierKind::Svm => ClassifierModel::Svm(SvmModel::read(&r)?),
            ClassifierKind::Cart => ClassifierModel::Cart(CartModel::read(&r)?),
            ClassifierKind::Random => {
                let labels: Vec<LabelId> = r.indices("labels")?.into_iter().map(|i| LabelId(i as u32)).collect();
                if labels.is_empty() {
                    return Err(Error::Model("random: empty label table".into()));
                }
                ClassifierModel::Random(RandomModel { labels, seed: r.scalar("seed")? }, r.scalar("width")?)
            }
        };
        Ok((model, names))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

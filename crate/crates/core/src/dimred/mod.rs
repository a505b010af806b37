//! Dimensionality reduction: six techniques behind one fit/transform contract.

mod agglomeration;
mod autoencoder;
mod nmf;
mod pca;
mod projection;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use agglomeration::{ward_clusters, FaModel};
pub use autoencoder::{train_autoencoder, AeModel, AeNet, AeParams};
pub use nmf::{nmf_factorize, nmf_objective, NmfFactors, NmfModel, NmfParams};
pub use pca::PcaModel;
pub use projection::{gaussian_matrix, sparse_matrix, ProjectionModel};

use crate::container::{ModelReader, ModelWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReducerKind {
    Pca,
    Grp,
    Srp,
    Nmf,
    Fa,
    Ae,
}

impl ReducerKind {
    pub const ALL: [ReducerKind; 6] =
        [ReducerKind::Pca, ReducerKind::Grp, ReducerKind::Srp, ReducerKind::Nmf, ReducerKind::Fa, ReducerKind::Ae];

    pub fn name(self) -> &'static str {
        match self {
            ReducerKind::Pca => "pca",
            ReducerKind::Grp => "grp",
            ReducerKind::Srp => "srp",
            ReducerKind::Nmf => "nmf",
            ReducerKind::Fa => "fa",
            ReducerKind::Ae => "ae",
        }
    }
}

impl fmt::Display for ReducerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReducerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReducerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown reducer '{s}' (expected pca, grp, srp, nmf, fa or ae)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducerSpec {
    pub kind: ReducerKind,
    pub d: usize,
    pub seed: u64,
    pub nmf: NmfParams,
    pub ae: AeParams,
}

impl ReducerSpec {
    pub fn new(kind: ReducerKind, d: usize, seed: u64) -> Self {
        ReducerSpec { kind, d, seed, nmf: NmfParams::default(), ae: AeParams::default() }
    }

    /// Checks `1 <= d <= width`.
    pub fn check_width(&self, width: usize) -> Result<()> {
        if self.d == 0 || self.d > width {
            return Err(Error::invalid(format!(
                "latent dimension d = {} must satisfy 1 <= d <= input width {width}",
                self.d
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReducerModel<T> {
    Pca(PcaModel<T>),
    Grp(ProjectionModel<T>),
    Srp(ProjectionModel<T>),
    Nmf(NmfModel<T>),
    Fa(FaModel),
    Ae(AeModel<T>),
}

pub fn fit<T: Real>(spec: &ReducerSpec, x: &Matrix<T>) -> Result<ReducerModel<T>> {
    spec.check_width(x.cols())?;
    if x.rows() < 2 {
        return Err(Error::invalid(format!("fit needs at least 2 rows, got {}", x.rows())));
    }
    x.ensure_finite()?;
    let mut rng = Rng::new(spec.seed);
    Ok(match spec.kind {
        ReducerKind::Pca => ReducerModel::Pca(PcaModel::fit(x, spec.d)?),
        ReducerKind::Grp => ReducerModel::Grp(ProjectionModel { r: gaussian_matrix(x.cols(), spec.d, &mut rng) }),
        ReducerKind::Srp => ReducerModel::Srp(ProjectionModel { r: sparse_matrix(x.cols(), spec.d, &mut rng) }),
        ReducerKind::Nmf => ReducerModel::Nmf(NmfModel::fit(x, spec.d, &spec.nmf, &mut rng)?),
        ReducerKind::Fa => ReducerModel::Fa(FaModel::fit(x, spec.d)?),
        ReducerKind::Ae => ReducerModel::Ae(AeModel::fit(x, spec.d, &spec.ae, &mut rng)?),
    })
}

/// Fits, transforms the same rows and reports the wall-clock time of both.
pub fn fit_transform_timed<T: Real>(spec: &ReducerSpec, x: &Matrix<T>) -> Result<(ReducerModel<T>, Matrix<T>, Duration)> {
    let start = Instant::now();
    let model = fit(spec, x)?;
    let latent = model.transform(x)?;
    Ok((model, latent, start.elapsed()))
}

impl<T: Real> ReducerModel<T> {
    pub fn kind(&self) -> ReducerKind {
        match self {
            ReducerModel::Pca(_) => ReducerKind::Pca,
            ReducerModel::Grp(_) => ReducerKind::Grp,
            ReducerModel::Srp(_) => ReducerKind::Srp,
            ReducerModel::Nmf(_) => ReducerKind::Nmf,
            ReducerModel::Fa(_) => ReducerKind::Fa,
            ReducerModel::Ae(_) => ReducerKind::Ae,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            ReducerModel::Pca(m) => m.components.rows(),
            ReducerModel::Grp(m) | ReducerModel::Srp(m) => m.r.cols(),
            ReducerModel::Nmf(m) => m.basis.rows(),
            ReducerModel::Fa(m) => m.d,
            ReducerModel::Ae(m) => m.net.w1.rows(),
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            ReducerModel::Pca(m) => m.means.len(),
            ReducerModel::Grp(m) | ReducerModel::Srp(m) => m.r.rows(),
            ReducerModel::Nmf(m) => m.mins.len(),
            ReducerModel::Fa(m) => m.assignment.len(),
            ReducerModel::Ae(m) => m.means.len(),
        }
    }

    pub fn transform(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.input_width() {
            return Err(Error::DimensionMismatch { op: "transform", left: x.shape(), right: (self.input_width(), self.d()) });
        }
        match self {
            ReducerModel::Pca(m) => m.transform(x),
            ReducerModel::Grp(m) | ReducerModel::Srp(m) => m.transform(x),
            ReducerModel::Nmf(m) => m.transform(x),
            ReducerModel::Fa(m) => Ok(m.transform(x)),
            ReducerModel::Ae(m) => m.transform(x),
        }
    }

    pub fn to_text(&self) -> String {
        let mut w = ModelWriter::new(self.kind().name());
        w.scalar("d", self.d());
        match self {
            ReducerModel::Pca(m) => m.write(&mut w),
            ReducerModel::Grp(m) | ReducerModel::Srp(m) => m.write(&mut w),
            ReducerModel::Nmf(m) => m.write(&mut w),
            ReducerModel::Fa(m) => m.write(&mut w),
            ReducerModel::Ae(m) => m.write(&mut w),
        }
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let r = ModelReader::parse(text)?;
        let kind: ReducerKind = r.kind()?.parse().map_err(|_| Error::Model(format!("'{}' is not a reducer model", r.kind().unwrap_or(""))))?;
        let model = match kind {
            ReducerKind::Pca => ReducerModel::Pca(PcaModel::read(&r)?),
            ReducerKind::Grp => ReducerModel::Grp(ProjectionModel::read(&r)?),
            ReducerKind::Srp => ReducerModel::Srp(ProjectionModel::read(&r)?),
            ReducerKind::Nmf => ReducerModel::Nmf(NmfModel::read(&r)?),
            ReducerKind::Fa => ReducerModel::Fa(FaModel::read(&r)?),
            ReducerKind::Ae => ReducerModel::Ae(AeModel::read(&r)?),
        };
        let d: usize = r.scalar("d")?;
        if d != model.d() {
            return Err(Error::Model(format!("declared d = {d} but arrays imply {}", model.d())));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = Rng::new(seed);
        Matrix::from_fn(rows, cols, |_, j| rng.normal() + j as f64 * 0.1)
    }

    #[test]
    fn every_kind_outputs_d_columns_and_single_rows_match_batch() {
        let x = sample(40, 7, 1);
        for kind in ReducerKind::ALL {
            let mut spec = ReducerSpec::new(kind, 3, 5);
            spec.ae.epochs = 3;
            let m = fit(&spec, &x).unwrap();
            assert_eq!((m.kind(), m.d(), m.input_width()), (kind, 3, 7));
            let z = m.transform(&x).unwrap();
            assert_eq!(z.shape(), (40, 3));
            for i in [0, 17, 39] {
                let single = m.transform(&x.select_rows(&[i])).unwrap();
                assert_eq!(single.row(0), z.row(i), "{kind} row {i}");
            }
            if kind == ReducerKind::Nmf {
                assert!(z.data().iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn save_load_transforms_identically() {
        let x = sample(30, 6, 2);
        for kind in ReducerKind::ALL {
            let mut spec = ReducerSpec::new(kind, 2, 9);
            spec.ae.epochs = 2;
            let m = fit(&spec, &x).unwrap();
            let back = ReducerModel::<f64>::from_text(&m.to_text()).unwrap();
            let (a, b) = (m.transform(&x).unwrap(), back.transform(&x).unwrap());
            let diff = a.sub(&b).unwrap().max_abs();
            assert!(diff <= 1e-12, "{kind}: {diff}");
        }
    }

    #[test]
    fn rejects_bad_d_and_width() {
        let x = sample(10, 4, 3);
        assert!(fit(&ReducerSpec::new(ReducerKind::Pca, 5, 0), &x).is_err());
        assert!(fit(&ReducerSpec::new(ReducerKind::Grp, 0, 0), &x).is_err());
        assert!(fit(&ReducerSpec::new(ReducerKind::Pca, 2, 0), &x.select_rows(&[0])).is_err());
        let m = fit(&ReducerSpec::new(ReducerKind::Srp, 2, 0), &x).unwrap();
        assert!(m.transform(&sample(3, 5, 0)).is_err());
    }

    #[test]
    fn seeded_reducers_are_deterministic() {
        let x = sample(25, 6, 4);
        for kind in [ReducerKind::Grp, ReducerKind::Srp, ReducerKind::Nmf, ReducerKind::Ae] {
            let mut spec = ReducerSpec::new(kind, 3, 11);
            spec.ae.epochs = 2;
            let a = fit(&spec, &x).unwrap().transform(&x).unwrap();
            let b = fit(&spec, &x).unwrap().transform(&x).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ReducerKind::ALL {
            assert_eq!(k.name().parse::<ReducerKind>().unwrap(), k);
        }
        assert!("lda".parse::<ReducerKind>().is_err());
    }
}

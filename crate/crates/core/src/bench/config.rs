use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classify::{CartParams, ClassifierKind, ClassifierSpec};
use crate::config::KvConfig;
use crate::dataset::Dataset;
use crate::dimred::{AeParams, NmfParams, ReducerKind, ReducerSpec};
use crate::error::{Error, Result};
use crate::ingest::{build_dataset, load_csv, GridEnrichment, StreamRegistry};
use crate::synth::{world_dataset, WorldConfig};

pub const DEFAULT_D_GRID: [usize; 6] = [5, 10, 25, 50, 100, 200];

/// Where balancing happens relative to the train/test split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Balance the whole dataset, then split.
    Paper,
    /// Split, then balance the training part only.
    LeakFree,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Paper => "paper",
            Protocol::LeakFree => "leakfree",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Protocol::Paper),
            "leakfree" => Ok(Protocol::LeakFree),
            _ => Err(Error::Config(format!("unknown protocol '{s}' (expected paper or leakfree)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Source {
    Synth(Box<WorldConfig>),
    Csv(PathBuf),
    Logs { dir: PathBuf, enrich: Option<PathBuf> },
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub source: Source,
    pub d_grid: Vec<usize>,
    pub reducers: Vec<ReducerKind>,
    pub classifiers: Vec<ClassifierKind>,
    pub protocol: Protocol,
    pub train_fraction: f64,
    pub seed: u64,
    pub repeats: usize,
    /// Apply SMOTE to training data.
    pub balance: bool,
    pub smote_k: usize,
    pub knn_k: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub cart: CartParams,
    pub ae: AeParams,
    pub nmf: NmfParams,
    /// Worker threads for cells that record no timings.
    pub threads: usize,
}

const KEYS: [&str; 25] = [
    "source",
    "csv",
    "logs",
    "enrich",
    "d_grid",
    "reducers",
    "classifiers",
    "protocol",
    "train_fraction",
    "repeats",
    "balance",
    "smote_k",
    "knn_k",
    "svm_lambda",
    "svm_epochs",
    "cart_max_depth",
    "cart_min_samples_split",
    "ae_epochs",
    "ae_batch",
    "ae_learning_rate",
    "nmf_max_iter",
    "nmf_tol",
    "nmf_transform_iter",
    "threads",
    "seed",
];

impl ExperimentConfig {
    /// Defaults around a given data source.
    pub fn new(source: Source, seed: u64) -> Self {
        ExperimentConfig {
            source,
            d_grid: DEFAULT_D_GRID.to_vec(),
            reducers: ReducerKind::ALL.to_vec(),
            classifiers: ClassifierKind::REAL.to_vec(),
            protocol: Protocol::LeakFree,
            train_fraction: 0.8,
            seed,
            repeats: 3,
            balance: true,
            smote_k: 5,
            knn_k: 5,
            svm_lambda: 1e-4,
            svm_epochs: 20,
            cart: CartParams::default(),
            ae: AeParams::default(),
            nmf: NmfParams::default(),
            threads: 1,
        }
    }

    /// Reads a bench config. Relative paths resolve against `base_dir`;
    /// `world.*` keys describe a synthetic world, whose seed defaults to
    /// `seed`. A `seed` key in the file is rejected when `seed` is given.
    pub fn from_kv(cfg: &KvConfig, base_dir: &Path, seed: Option<u64>) -> Result<Self> {
        for k in cfg.keys() {
            if !KEYS.contains(&k) && !k.starts_with("world.") {
                return Err(Error::Config(format!("unknown bench key '{k}'")));
            }
        }
        let seed = match (seed, cfg.get::<u64>("seed")?) {
            (Some(_), Some(_)) => return Err(Error::Config("seed given both on the command line and in the config".into())),
            (Some(s), None) | (None, Some(s)) => s,
            (None, None) => return Err(Error::Config("a seed is required".into())),
        };
        let resolve = |p: &str| -> PathBuf {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let source = match cfg.get_str("source").unwrap_or("synth") {
            "synth" => {
                let mut world = KvConfig::default();
                for (k, v) in cfg.with_prefix("world.") {
                    world.set(k, v);
                }
                if world.get_str("seed").is_none() {
                    world.set("seed", seed.to_string());
                }
                Source::Synth(Box::new(WorldConfig::from_kv(&world)?))
            }
            "csv" => Source::Csv(resolve(cfg.get_str("csv").ok_or_else(|| Error::Config("source = csv needs 'csv'".into()))?)),
            "logs" => Source::Logs {
                dir: resolve(cfg.get_str("logs").ok_or_else(|| Error::Config("source = logs needs 'logs'".into()))?),
                enrich: cfg.get_str("enrich").map(resolve),
            },
            other => return Err(Error::Config(format!("unknown source '{other}' (expected synth, csv or logs)"))),
        };
        let mut c = ExperimentConfig::new(source, seed);
        if let Some(g) = cfg.get_list("d_grid")? {
            c.d_grid = g;
        }
        if let Some(r) = cfg.get_list::<String>("reducers")? {
            c.reducers = r.iter().map(|s| s.parse()).collect::<Result<_>>().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(r) = cfg.get_list::<String>("classifiers")? {
            c.classifiers = r.iter().map(|s| s.parse()).collect::<Result<_>>().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(p) = cfg.get_str("protocol") {
            c.protocol = p.parse()?;
        }
        c.train_fraction = cfg.get_or("train_fraction", c.train_fraction)?;
        c.repeats = cfg.get_or("repeats", c.repeats)?;
        c.balance = cfg.get_or("balance", c.balance)?;
        c.smote_k = cfg.get_or("smote_k", c.smote_k)?;
        c.knn_k = cfg.get_or("knn_k", c.knn_k)?;
        c.svm_lambda = cfg.get_or("svm_lambda", c.svm_lambda)?;
        c.svm_epochs = cfg.get_or("svm_epochs", c.svm_epochs)?;
        c.cart.max_depth = cfg.get("cart_max_depth")?;
        c.cart.min_samples_split = cfg.get_or("cart_min_samples_split", c.cart.min_samples_split)?;
        c.ae.epochs = cfg.get_or("ae_epochs", c.ae.epochs)?;
        c.ae.batch = cfg.get_or("ae_batch", c.ae.batch)?;
        c.ae.learning_rate = cfg.get_or("ae_learning_rate", c.ae.learning_rate)?;
        c.nmf.max_iter = cfg.get_or("nmf_max_iter", c.nmf.max_iter)?;
        c.nmf.tol = cfg.get_or("nmf_tol", c.nmf.tol)?;
        c.nmf.transform_iter = cfg.get_or("nmf_transform_iter", c.nmf.transform_iter)?;
        c.threads = cfg.get_or("threads", c.threads)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_grid.is_empty() || self.reducers.is_empty() || self.classifiers.is_empty() {
            return Err(Error::Config("d_grid, reducers and classifiers must be non-empty".into()));
        }
        if self.d_grid.contains(&0) {
            return Err(Error::Config("d_grid values must be positive".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction must be in (0,1), got {}", self.train_fraction)));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks the grid against the data width.
    pub fn check_width(&self, width: usize) -> Result<()> {
        if let Some(&d) = self.d_grid.iter().find(|&&d| d > width) {
            return Err(Error::Config(format!("d_grid value {d} exceeds the feature width {width}")));
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset<f64>> {
        match &self.source {
            Source::Synth(w) => world_dataset(w),
            Source::Csv(p) => load_csv(p),
            Source::Logs { dir, enrich } => {
                let provider = match enrich {
                    Some(p) => GridEnrichment::load(p)?,
                    None => GridEnrichment::default(),
                };
                build_dataset(dir, &StreamRegistry::default_phone(), &provider)
            }
        }
    }

    /// Seed of repeat `r`.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }

    pub fn reducer_spec(&self, kind: ReducerKind, d: usize, seed: u64) -> ReducerSpec {
        let mut s = ReducerSpec::new(kind, d, seed);
        s.ae = self.ae.clone();
        s.nmf = self.nmf.clone();
        s
    }

    pub fn classifier_spec(&self, kind: ClassifierKind, seed: u64) -> ClassifierSpec {
        let mut s = ClassifierSpec::new(kind, seed);
        s.k = self.knn_k;
        s.lambda = self.svm_lambda;
        s.epochs = self.svm_epochs;
        s.cart = self.cart;
        s
    }
}

//! Labeled sample matrices and the schema describing their columns.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Index into a [`NameTable`] of activity labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub u32);

/// Index into a [`NameTable`] of user identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

impl LabelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl UserId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Sorted, duplicate-free list of names; an id is the position in the list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NameTable {
    names: Vec<String>,
}

impl NameTable {
    /// Builds a table from arbitrary names; duplicates collapse and the
    /// result is sorted so ids are independent of input order.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        NameTable { names: set.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok().map(|i| i as u32)
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Encoding {
    Passthrough(usize),
    OneHot(Vec<String>),
    MultiHot(Vec<String>),
    Boolean,
}

impl Encoding {
    pub fn width(&self) -> usize {
        match self {
            Encoding::Passthrough(a) => *a,
            Encoding::OneHot(t) | Encoding::MultiHot(t) => t.len(),
            Encoding::Boolean => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureGroup {
    pub stream: String,
    pub encoding: Encoding,
    pub offset: usize,
    pub width: usize,
    /// Encoded value used when the stream has no reading for a slot.
    pub default: Vec<f64>,
}

/// Ordered mapping from streams to contiguous column ranges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureSchema {
    groups: Vec<FeatureGroup>,
    total_width: usize,
}

impl FeatureSchema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a group at the next free offset.
    pub fn push(&mut self, stream: impl Into<String>, encoding: Encoding, default: Vec<f64>) -> Result<()> {
        let stream = stream.into();
        let width = encoding.width();
        if default.len() != width {
            return Err(Error::invalid(format!(
                "group '{stream}': default has {} values, width is {width}",
                default.len()
            )));
        }
        if self.groups.iter().any(|g| g.stream == stream) {
            return Err(Error::invalid(format!("duplicate feature group '{stream}'")));
        }
        self.groups.push(FeatureGroup { stream, encoding, offset: self.total_width, width, default });
        self.total_width += width;
        Ok(())
    }

    /// One passthrough column per name; used for data loaded without
    /// structural information.
    pub fn opaque<S: AsRef<str>>(names: &[S]) -> Self {
        let mut s = Self::new();
        for n in names {
            // Header names are unique in any valid file; fall back to a
            // positional name if not.
            let name = n.as_ref().to_string();
            let name = if s.group(&name).is_some() { format!("{name}#{}", s.total_width) } else { name };
            s.push(name, Encoding::Passthrough(1), vec![0.0]).expect("fresh group");
        }
        s
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn group(&self, stream: &str) -> Option<&FeatureGroup> {
        self.groups.iter().find(|g| g.stream == stream)
    }

    pub fn total_width(&self) -> usize {
        self.total_width
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Ingested,
    Synthetic,
    LoadedCsv,
    Balanced,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    pub y: Vec<LabelId>,
    pub users: Vec<UserId>,
    pub labels: NameTable,
    pub user_names: NameTable,
    pub schema: FeatureSchema,
    pub provenance: Provenance,
}

impl<T: Real> Dataset<T> {
    pub fn new(
        x: Matrix<T>,
        y: Vec<LabelId>,
        users: Vec<UserId>,
        labels: NameTable,
        user_names: NameTable,
        schema: FeatureSchema,
        provenance: Provenance,
    ) -> Result<Self> {
        let d = Dataset { x, y, users, labels, user_names, schema, provenance };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.len() != self.x.rows() || self.users.len() != self.x.rows() {
            return Err(Error::invalid(format!(
                "dataset has {} rows but {} labels and {} users",
                self.x.rows(),
                self.y.len(),
                self.users.len()
            )));
        }
        if self.x.cols() != self.schema.total_width() {
            return Err(Error::invalid(format!(
                "matrix width {} does not match schema width {}",
                self.x.cols(),
                self.schema.total_width()
            )));
        }
        if let Some(bad) = self.y.iter().find(|l| l.index() >= self.labels.len()) {
            return Err(Error::invalid(format!("label id {} outside label table", bad.0)));
        }
        if let Some(bad) = self.users.iter().find(|u| u.index() >= self.user_names.len()) {
            return Err(Error::invalid(format!("user id {} outside user table", bad.0)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    /// Row counts per label id, indexed by id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.labels.len()];
        for l in &self.y {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Copies the listed rows (schema, tables and provenance are kept).
    pub fn select(&self, idx: &[usize]) -> Self {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            users: idx.iter().map(|&i| self.users[i]).collect(),
            labels: self.labels.clone(),
            user_names: self.user_names.clone(),
            schema: self.schema.clone(),
            provenance: self.provenance,
        }
    }

    /// Same rows and labels with a different feature matrix (e.g. latents).
    pub fn with_features(&self, x: Matrix<T>) -> Result<Self> {
        let names: Vec<String> = (0..x.cols()).map(|j| format!("f{j}")).collect();
        Dataset::new(
            x,
            self.y.clone(),
            self.users.clone(),
            self.labels.clone(),
            self.user_names.clone(),
            FeatureSchema::opaque(&names),
            self.provenance,
        )
    }

    /// Checks the one-hot (row sum in {0,1}) and multi-hot (entries in {0,1})
    /// invariants. Balanced data is exempt.
    pub fn check_encoding(&self) -> Result<()> {
        if self.provenance == Provenance::Balanced {
            return Ok(());
        }
        for (r, row) in self.x.row_iter().enumerate() {
            for g in self.schema.groups() {
                let cells = &row[g.offset..g.offset + g.width];
                match g.encoding {
                    Encoding::OneHot(_) => {
                        let sum: f64 = cells.iter().map(|v| v.as_f64()).sum();
                        let binary = cells.iter().all(|v| *v == T::zero() || *v == T::one());
                        if !binary || !(sum == 0.0 || sum == 1.0) {
                            return Err(Error::invalid(format!("row {r}: one-hot group '{}' sums to {sum}", g.stream)));
                        }
                    }
                    Encoding::MultiHot(_) | Encoding::Boolean => {
                        if !cells.iter().all(|v| *v == T::zero() || *v == T::one()) {
                            return Err(Error::invalid(format!("row {r}: group '{}' is not 0/1", g.stream)));
                        }
                    }
                    Encoding::Passthrough(_) => {}
                }
            }
        }
        Ok(())
    }
}

//! Self-describing text container for fitted models.
//!
//! ```text
//! ctxlite-model 1
//! kind pca
//! d 2
//! vector means 3
//! 1.0000000000000000e0 ...
//! matrix components 2 3
//! <row>
//! <row>
//! end
//! ```
//!
//! Reals are written with 17 significant digits, so `f64` values survive a
//! round trip exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::csv::fmt_real;
use crate::matrix::Matrix;
use crate::scalar::Real;

const MAGIC: &str = "ctxlite-model 1";

#[derive(Default)]
pub struct ModelWriter {
    out: String,
}

impl ModelWriter {
    pub fn new(kind: &str) -> Self {
        let mut w = ModelWriter { out: String::new() };
        w.out.push_str(MAGIC);
        w.out.push('\n');
        w.scalar("kind", kind);
        w
    }

    pub fn scalar(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.out, "{key} {value}");
        self
    }

    pub fn vector<T: Real>(&mut self, name: &str, v: &[T]) -> &mut Self {
        let _ = writeln!(self.out, "vector {name} {}", v.len());
        self.line_of(v.iter().map(|x| fmt_real(x.as_f64())));
        self
    }

    pub fn indices(&mut self, name: &str, v: &[usize]) -> &mut Self {
        let _ = writeln!(self.out, "indices {name} {}", v.len());
        self.line_of(v.iter().map(usize::to_string));
        self
    }

    pub fn strings(&mut self, name: &str, v: &[String]) -> &mut Self {
        let _ = writeln!(self.out, "strings {name} {}", v.len());
        for s in v {
            self.out.push_str(s);
            self.out.push('\n');
        }
        self
    }

    pub fn matrix<T: Real>(&mut self, name: &str, m: &Matrix<T>) -> &mut Self {
        let _ = writeln!(self.out, "matrix {name} {} {}", m.rows(), m.cols());
        for r in m.row_iter() {
            self.line_of(r.iter().map(|x| fmt_real(x.as_f64())));
        }
        self
    }

    fn line_of(&mut self, items: impl Iterator<Item = String>) {
        let mut first = true;
        for s in items {
            if !first {
                self.out.push(' ');
            }
            self.out.push_str(&s);
            first = false;
        }
        self.out.push('\n');
    }

    pub fn finish(mut self) -> String {
        self.out.push_str("end\n");
        self.out
    }
}

#[derive(Debug, Default)]
pub struct ModelReader {
    scalars: BTreeMap<String, String>,
    vectors: BTreeMap<String, Vec<f64>>,
    indices: BTreeMap<String, Vec<usize>>,
    strings: BTreeMap<String, Vec<String>>,
    matrices: BTreeMap<String, (usize, usize, Vec<f64>)>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

impl ModelReader {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(bad(format!("missing '{MAGIC}' header")));
        }
        let mut r = ModelReader::default();
        let mut ended = false;
        while let Some(line) = lines.next() {
            let line = line.trim_end();
            if line == "end" {
                ended = true;
                break;
            }
            let mut parts = line.splitn(2, ' ');
            let key = parts.next().unwrap_or_default();
            let rest = parts.next().unwrap_or_default();
            let head: Vec<&str> = rest.split_whitespace().collect();
            let count = |i: usize| -> Result<usize> {
                head.get(i).ok_or_else(|| bad(format!("'{line}': missing size")))?.parse().map_err(|_| bad(format!("'{line}': bad size")))
            };
            match key {
                "vector" | "indices" => {
                    let name = head.first().ok_or_else(|| bad("unnamed array"))?.to_string();
                    let n = count(1)?;
                    let body = lines.next().ok_or_else(|| bad(format!("array '{name}' truncated")))?;
                    let items: Vec<&str> = body.split_whitespace().collect();
                    if items.len() != n {
                        return Err(bad(format!("array '{name}': expected {n} items, got {}", items.len())));
                    }
                    if key == "vector" {
                        r.vectors.insert(name, parse_all(&items)?);
                    } else {
                        r.indices.insert(name, parse_all(&items)?);
                    }
                }
                "strings" => {
                    let name = head.first().ok_or_else(|| bad("unnamed array"))?.to_string();
                    let n = count(1)?;
                    let mut v = Vec::with_capacity(n);
                    for _ in 0..n {
                        v.push(lines.next().ok_or_else(|| bad(format!("strings '{name}' truncated")))?.to_string());
                    }
                    r.strings.insert(name, v);
                }
                "matrix" => {
                    let name = head.first().ok_or_else(|| bad("unnamed matrix"))?.to_string();
                    let (rows, cols) = (count(1)?, count(2)?);
                    let mut data = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        let body = lines.next().ok_or_else(|| bad(format!("matrix '{name}' truncated")))?;
                        let items: Vec<&str> = body.split_whitespace().collect();
                        if items.len() != cols {
                            return Err(bad(format!("matrix '{name}': row has {} values, expected {cols}", items.len())));
                        }
                        data.extend(parse_all::<f64>(&items)?);
                    }
                    r.matrices.insert(name, (rows, cols, data));
                }
                _ => {
                    r.scalars.insert(key.to_string(), rest.to_string());
                }
            }
        }
        if !ended {
            return Err(bad("missing 'end' marker"));
        }
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn kind(&self) -> Result<&str> {
        self.scalars.get("kind").map(String::as_str).ok_or_else(|| bad("missing kind"))
    }

    pub fn scalar<V: FromStr>(&self, key: &str) -> Result<V> {
        let raw = self.scalars.get(key).ok_or_else(|| bad(format!("missing '{key}'")))?;
        raw.parse().map_err(|_| bad(format!("bad value for '{key}': '{raw}'")))
    }

    pub fn opt_scalar<V: FromStr>(&self, key: &str) -> Result<Option<V>> {
        match self.scalars.get(key) {
            None => Ok(None),
            Some(_) => self.scalar(key).map(Some),
        }
    }

    pub fn vector<T: Real>(&self, name: &str) -> Result<Vec<T>> {
        Ok(self.vectors.get(name).ok_or_else(|| bad(format!("missing vector '{name}'")))?.iter().map(|&v| T::lit(v)).collect())
    }

    pub fn indices(&self, name: &str) -> Result<Vec<usize>> {
        self.indices.get(name).cloned().ok_or_else(|| bad(format!("missing indices '{name}'")))
    }

    pub fn strings(&self, name: &str) -> Result<Vec<String>> {
        self.strings.get(name).cloned().ok_or_else(|| bad(format!("missing strings '{name}'")))
    }

    pub fn matrix<T: Real>(&self, name: &str) -> Result<Matrix<T>> {
        let (r, c, data) = self.matrices.get(name).ok_or_else(|| bad(format!("missing matrix '{name}'")))?;
        Matrix::new(*r, *c, data.iter().map(|&v| T::lit(v)).collect())
    }
}

fn parse_all<V: FromStr>(items: &[&str]) -> Result<Vec<V>> {
    items.iter().map(|s| s.parse().map_err(|_| bad(format!("bad number '{s}'")))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = Matrix::from_rows(&[[0.1, -2.0 / 3.0], [1e-300, 5e10]]).unwrap();
        let mut w = ModelWriter::new("test");
        w.scalar("d", 2).vector("v", &[1.0 / 7.0, 2.0]).indices("i", &[3, 1, 4]).strings("s", &["a b".into(), "c".into()]);
        w.matrix("m", &m).matrix("empty", &Matrix::<f64>::zeros(0, 3));
        let r = ModelReader::parse(&w.finish()).unwrap();
        assert_eq!(r.kind().unwrap(), "test");
        assert_eq!(r.scalar::<usize>("d").unwrap(), 2);
        assert_eq!(r.vector::<f64>("v").unwrap(), vec![1.0 / 7.0, 2.0]);
        assert_eq!(r.indices("i").unwrap(), vec![3, 1, 4]);
        assert_eq!(r.strings("s").unwrap(), vec!["a b".to_string(), "c".to_string()]);
        assert_eq!(r.matrix::<f64>("m").unwrap(), m);
        assert_eq!(r.matrix::<f64>("empty").unwrap().shape(), (0, 3));
    }

    #[test]
    fn rejects_truncated() {
        assert!(ModelReader::parse("nope\n").is_err());
        assert!(ModelReader::parse("ctxlite-model 1\nkind x\n").is_err());
        assert!(ModelReader::parse("ctxlite-model 1\nvector v 3\n1 2\nend\n").is_err());
    }
}

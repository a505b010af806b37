//! Dataset CSV: header `f0,...,f{n-1},label[,user]`, reals with 17
//! significant digits.

use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::{Dataset, FeatureSchema, LabelId, NameTable, Provenance, UserId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// User name given to rows of files without a `user` column.
pub const DEFAULT_USER: &str = "unknown";

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn save_csv<T: Real>(d: &Dataset<T>, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(d)).map_err(|e| Error::io(path, e))
}

pub fn to_csv_string<T: Real>(d: &Dataset<T>) -> String {
    let n = d.x.cols();
    let mut out = String::with_capacity(d.len() * (n * 8 + 16) + 64);
    for j in 0..n {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label,user\n");
    for (i, row) in d.x.row_iter().enumerate() {
        for &v in row {
            let v = v.as_f64();
            // Exact zeros dominate one-hot data; keep them short.
            if v == 0.0 && v.is_sign_positive() {
                out.push_str("0,");
            } else {
                out.push_str(&fmt_real(v));
                out.push(',');
            }
        }
        out.push_str(d.labels.name(d.y[i].0));
        out.push(',');
        out.push_str(d.user_names.name(d.users[i].0));
        out.push('\n');
    }
    out
}

pub fn load_csv<T: Real>(path: &Path) -> Result<Dataset<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn parse_csv<T: Real>(text: &str) -> Result<Dataset<T>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Csv { row: 0, col: 0, msg: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_col = cols
        .iter()
        .position(|c| *c == "label")
        .ok_or_else(|| Error::Csv { row: 1, col: 0, msg: "missing 'label' column".into() })?;
    let user_col = cols.iter().position(|c| *c == "user");
    let feature_cols: Vec<usize> = (0..cols.len()).filter(|&j| j != label_col && Some(j) != user_col).collect();
    let feature_names: Vec<&str> = feature_cols.iter().map(|&j| cols[j]).collect();

    let mut data: Vec<T> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut raw_users = Vec::new();
    for (i, line) in lines {
        let row = i + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != cols.len() {
            return Err(Error::Csv { row, col: cells.len().min(cols.len()) + 1, msg: format!("expected {} cells, got {}", cols.len(), cells.len()) });
        }
        for &j in &feature_cols {
            let v: f64 = cells[j]
                .parse()
                .map_err(|_| Error::Csv { row, col: j + 1, msg: format!("non-numeric cell '{}'", cells[j]) })?;
            data.push(T::lit(v));
        }
        raw_labels.push(cells[label_col].to_string());
        raw_users.push(user_col.map_or(DEFAULT_USER.to_string(), |u| cells[u].to_string()));
    }

    let labels = NameTable::from_names(raw_labels.iter().cloned());
    let users = NameTable::from_names(raw_users.iter().cloned());
    let x = Matrix::new(raw_labels.len(), feature_cols.len(), data)?;
    Dataset::new(
        x,
        raw_labels.iter().map(|l| LabelId(labels.id_of(l).expect("interned"))).collect(),
        raw_users.iter().map(|u| UserId(users.id_of(u).expect("interned"))).collect(),
        labels,
        users,
        FeatureSchema::opaque(&feature_names),
        Provenance::LoadedCsv,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn hand_written_fixture() {
        let d: Dataset<f64> = parse_csv("f0,f1,f2,label\n1,2,3,walk\n4.5,-1e-3,0,sit\n").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.x.row(1), &[4.5, -1e-3, 0.0]);
        assert_eq!(d.labels.name(d.y[0].0), "walk");
        assert_eq!(d.user_names.name(d.users[0].0), DEFAULT_USER);
        assert_eq!(d.provenance, Provenance::LoadedCsv);
    }

    #[test]
    fn errors_name_position() {
        assert!(parse_csv::<f64>("f0,f1\n1,2\n").unwrap_err().to_string().contains("label"));
        match parse_csv::<f64>("f0,label\n1,a\nx,b\n").unwrap_err() {
            Error::Csv { row, col, .. } => assert_eq!((row, col), (3, 1)),
            e => panic!("{e}"),
        }
    }

    proptest! {
        #[test]
        fn save_load_round_trip(seed in any::<u64>(), rows in 0usize..6, cols in 1usize..5) {
            let mut rng = Rng::new(seed);
            let x = Matrix::from_fn(rows, cols, |_, _| rng.normal() * 10f64.powi(rng.below(12) as i32 - 6));
            let labels = NameTable::from_names(["a", "b", "c"]);
            let users = NameTable::from_names(["u1", "u2"]);
            let y = (0..rows).map(|_| LabelId(rng.below(3) as u32)).collect();
            let u = (0..rows).map(|_| UserId(rng.below(2) as u32)).collect();
            let names: Vec<String> = (0..cols).map(|j| format!("f{j}")).collect();
            let d = Dataset::new(x, y, u, labels, users, FeatureSchema::opaque(&names), Provenance::Synthetic).unwrap();
            let back: Dataset<f64> = parse_csv(&to_csv_string(&d)).unwrap();
            prop_assert!(back.x.sub(&d.x).unwrap().max_abs() <= 1e-12);
            let names_of = |ds: &Dataset<f64>| ds.y.iter().map(|l| ds.labels.name(l.0).to_string()).collect::<Vec<_>>();
            prop_assert_eq!(names_of(&back), names_of(&d));
            let users_of = |ds: &Dataset<f64>| ds.users.iter().map(|l| ds.user_names.name(l.0).to_string()).collect::<Vec<_>>();
            prop_assert_eq!(users_of(&back), users_of(&d));
        }
    }
}

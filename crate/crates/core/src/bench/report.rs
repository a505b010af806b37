use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::Protocol;
use crate::classify::ClassifierKind;
use crate::dimred::ReducerKind;
use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "report.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const REPORT_HEADER: &str =
    "experiment,reducer,classifier,d,accuracy,dr_fit_ms,dr_transform_ms,train_ms,test_ms,n_train,n_test,seed,protocol";
const TIMINGS_HEADER: &str = "experiment,reducer,classifier,d,seed,dr_fit_ms,dr_transform_ms,train_ms,test_ms";

/// One benchmark cell for one repeat. `reducer = None` marks raw features;
/// `classifier = None` marks reducer-only timing rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub reducer: Option<ReducerKind>,
    pub classifier: Option<ClassifierKind>,
    pub d: usize,
    pub accuracy: Option<f64>,
    pub dr_fit_ms: Option<f64>,
    pub dr_transform_ms: Option<f64>,
    pub train_ms: Option<f64>,
    pub test_ms: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub protocol: Protocol,
}

impl ReportRow {
    pub fn reducer_name(&self) -> &'static str {
        self.reducer.map_or("none", ReducerKind::name)
    }

    pub fn classifier_name(&self) -> &'static str {
        self.classifier.map_or("none", ClassifierKind::name)
    }

    fn key(&self) -> String {
        format!("{},{},{},{},{}", self.experiment, self.reducer_name(), self.classifier_name(), self.d, self.seed)
    }
}

fn opt(v: Option<f64>, prec: Option<usize>) -> String {
    match (v, prec) {
        (None, _) => String::new(),
        (Some(x), Some(p)) => format!("{x:.p$}"),
        (Some(x), None) => format!("{x}"),
    }
}

/// Deterministic part of the report: timing columns are left empty so the
/// file is byte-identical across runs with the same seed.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},,,,,{},{},{},{}",
            r.experiment,
            r.reducer_name(),
            r.classifier_name(),
            r.d,
            opt(r.accuracy, None),
            r.n_train,
            r.n_test,
            r.seed,
            r.protocol
        );
    }
    s
}

/// Wall-clock columns, one line per report row in the same order.
pub fn timings_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(TIMINGS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.key(),
            opt(r.dr_fit_ms, Some(3)),
            opt(r.dr_transform_ms, Some(3)),
            opt(r.train_ms, Some(3)),
            opt(r.test_ms, Some(3))
        );
    }
    s
}

fn parse_opt(s: &str, what: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Csv { row: line, col: 0, msg: format!("bad {what} '{s}'") })
}

fn parse_num<V: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<V> {
    s.parse().map_err(|_| Error::Csv { row: line, col: 0, msg: format!("bad {what} '{s}'") })
}

pub fn parse_report(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        return Err(Error::Csv { row: 1, col: 0, msg: "unexpected report header".into() });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(Error::Csv { row: n, col: 0, msg: format!("expected 13 fields, got {}", f.len()) });
        }
        let reducer = match f[1] {
            "none" => None,
            s => Some(s.parse().map_err(|e: Error| Error::Csv { row: n, col: 2, msg: e.to_string() })?),
        };
        let classifier = match f[2] {
            "none" => None,
            s => Some(s.parse().map_err(|e: Error| Error::Csv { row: n, col: 3, msg: e.to_string() })?),
        };
        rows.push(ReportRow {
            experiment: f[0].to_string(),
            reducer,
            classifier,
            d: parse_num(f[3], "d", n)?,
            accuracy: parse_opt(f[4], "accuracy", n)?,
            dr_fit_ms: parse_opt(f[5], "dr_fit_ms", n)?,
            dr_transform_ms: parse_opt(f[6], "dr_transform_ms", n)?,
            train_ms: parse_opt(f[7], "train_ms", n)?,
            test_ms: parse_opt(f[8], "test_ms", n)?,
            n_train: parse_num(f[9], "n_train", n)?,
            n_test: parse_num(f[10], "n_test", n)?,
            seed: parse_num(f[11], "seed", n)?,
            protocol: f[12].parse().map_err(|e: Error| Error::Csv { row: n, col: 13, msg: e.to_string() })?,
        });
    }
    Ok(rows)
}

/// Copies timing columns from a timings file into matching rows.
pub fn merge_timings(rows: &mut [ReportRow], text: &str) -> Result<()> {
    let mut lines = text.lines();
    if lines.next() != Some(TIMINGS_HEADER) {
        return Err(Error::Csv { row: 1, col: 0, msg: "unexpected timings header".into() });
    }
    let body: Vec<&str> = lines.collect();
    if body.len() != rows.len() {
        return Err(Error::Csv { row: 0, col: 0, msg: format!("{} timing lines for {} report rows", body.len(), rows.len()) });
    }
    for (i, (row, line)) in rows.iter_mut().zip(body).enumerate() {
        let n = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 || f[..5].join(",") != row.key() {
            return Err(Error::Csv { row: n, col: 0, msg: "timings line does not match report row".into() });
        }
        row.dr_fit_ms = parse_opt(f[5], "dr_fit_ms", n)?;
        row.dr_transform_ms = parse_opt(f[6], "dr_transform_ms", n)?;
        row.train_ms = parse_opt(f[7], "train_ms", n)?;
        row.test_ms = parse_opt(f[8], "test_ms", n)?;
    }
    Ok(())
}

/// Reads `report.csv` and, when present, `timings.csv` from a directory.
pub fn load_report(dir: &Path) -> Result<Vec<ReportRow>> {
    let p = dir.join(REPORT_FILE);
    let mut rows = parse_report(&fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?)?;
    let t = dir.join(TIMINGS_FILE);
    if t.exists() {
        merge_timings(&mut rows, &fs::read_to_string(&t).map_err(|e| Error::io(&t, e))?)?;
    }
    Ok(rows)
}

pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

pub fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn cell(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.prec$}"))
}

/// Accuracy against d per reducer for one classifier, mean over repeats;
/// the `raw` column repeats the raw-feature accuracy.
pub fn fig7(rows: &[ReportRow], classifier: ClassifierKind) -> String {
    let exp1: Vec<&ReportRow> = rows.iter().filter(|r| r.experiment == "exp1" && r.classifier == Some(classifier)).collect();
    let reducers: Vec<ReducerKind> = ReducerKind::ALL.into_iter().filter(|k| exp1.iter().any(|r| r.reducer == Some(*k))).collect();
    let mut ds: Vec<usize> = exp1.iter().filter(|r| r.reducer.is_some()).map(|r| r.d).collect();
    ds.sort_unstable();
    ds.dedup();
    let acc = |reducer: Option<ReducerKind>, d: Option<usize>| -> Option<f64> {
        let v: Vec<f64> =
            exp1.iter().filter(|r| r.reducer == reducer && d.is_none_or(|d| r.d == d)).filter_map(|r| r.accuracy).collect();
        mean(&v)
    };
    let raw = acc(None, None);
    let mut s = String::from("# d");
    for k in &reducers {
        let _ = write!(s, " {k}");
    }
    s.push_str(" raw\n");
    for d in ds {
        let _ = write!(s, "{d}");
        for k in &reducers {
            let _ = write!(s, " {}", cell(acc(Some(*k), Some(d)), 6));
        }
        let _ = writeln!(s, " {}", cell(raw, 6));
    }
    s
}

/// Median fit+transform time (ms) against d per reducer.
pub fn fig8(rows: &[ReportRow]) -> String {
    let exp2: Vec<&ReportRow> = rows.iter().filter(|r| r.experiment == "exp2").collect();
    let reducers: Vec<ReducerKind> = ReducerKind::ALL.into_iter().filter(|k| exp2.iter().any(|r| r.reducer == Some(*k))).collect();
    let mut ds: Vec<usize> = exp2.iter().map(|r| r.d).collect();
    ds.sort_unstable();
    ds.dedup();
    let mut s = String::from("# d");
    for k in &reducers {
        let _ = write!(s, " {k}");
    }
    s.push('\n');
    for d in ds {
        let _ = write!(s, "{d}");
        for k in &reducers {
            let v: Vec<f64> = exp2
                .iter()
                .filter(|r| r.reducer == Some(*k) && r.d == d)
                .filter_map(|r| Some(r.dr_fit_ms? + r.dr_transform_ms?))
                .collect();
            let _ = write!(s, " {}", cell(median(v), 3));
        }
        s.push('\n');
    }
    s
}

/// Median train and test time per (reducer, classifier) at the selected d.
pub fn fig9(rows: &[ReportRow]) -> String {
    type Key = (Option<ReducerKind>, Option<ClassifierKind>, usize);
    let mut groups: BTreeMap<Key, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.experiment == "exp3") {
        groups.entry((r.reducer, r.classifier, r.d)).or_default().push(r);
    }
    let mut s = String::from("# reducer classifier d accuracy train_ms test_ms\n");
    for ((reducer, classifier, d), g) in groups {
        let acc = mean(&g.iter().filter_map(|r| r.accuracy).collect::<Vec<_>>());
        let train = median(g.iter().filter_map(|r| r.train_ms).collect());
        let test = median(g.iter().filter_map(|r| r.test_ms).collect());
        let _ = writeln!(
            s,
            "{} {} {d} {} {} {}",
            reducer.map_or("raw", ReducerKind::name),
            classifier.map_or("none", ClassifierKind::name),
            cell(acc, 6),
            cell(train, 3),
            cell(test, 3)
        );
    }
    s
}

/// Leave-one-user-out accuracy (mean of the per-repeat fold means).
pub fn fig10(rows: &[ReportRow]) -> String {
    let mut groups: BTreeMap<(Option<ReducerKind>, usize, Option<ClassifierKind>), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.experiment == "exp4:mean") {
        if let Some(a) = r.accuracy {
            groups.entry((r.reducer, r.d, r.classifier)).or_default().push(a);
        }
    }
    let mut s = String::from("# reducer d classifier accuracy\n");
    for ((reducer, d, classifier), v) in groups {
        let _ = writeln!(
            s,
            "{} {d} {} {}",
            reducer.map_or("raw", ReducerKind::name),
            classifier.map_or("none", ClassifierKind::name),
            cell(mean(&v), 6)
        );
    }
    s
}

/// Writes the plot-data files for whichever experiments the rows cover.
pub fn emit_figures(rows: &[ReportRow], out: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut write = |name: String, body: String| -> Result<()> {
        let p = out.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        files.push(p);
        Ok(())
    };
    for c in ClassifierKind::ALL {
        if rows.iter().any(|r| r.experiment == "exp1" && r.classifier == Some(c)) {
            write(format!("fig7_{c}.dat"), fig7(rows, c))?;
        }
    }
    if rows.iter().any(|r| r.experiment == "exp2") {
        write("fig8.dat".into(), fig8(rows))?;
    }
    if rows.iter().any(|r| r.experiment == "exp3") {
        write("fig9.dat".into(), fig9(rows))?;
    }
    if rows.iter().any(|r| r.experiment == "exp4:mean") {
        write("fig10.dat".into(), fig10(rows))?;
    }
    Ok(files)
}

/// Writes `report.csv`, `timings.csv` and the plot-data files.
pub fn emit_report(rows: &[ReportRow], out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = Vec::new();
    for (name, body) in [(REPORT_FILE, report_csv(rows)), (TIMINGS_FILE, timings_csv(rows))] {
        let p = out.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        files.push(p);
    }
    files.extend(emit_figures(rows, out)?);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(exp: &str, reducer: Option<ReducerKind>, classifier: Option<ClassifierKind>, d: usize, acc: f64, ms: f64) -> ReportRow {
        ReportRow {
            experiment: exp.into(),
            reducer,
            classifier,
            d,
            accuracy: Some(acc),
            dr_fit_ms: Some(ms),
            dr_transform_ms: Some(1.0),
            train_ms: Some(ms),
            test_ms: Some(ms / 2.0),
            n_train: 80,
            n_test: 20,
            seed: 7,
            protocol: Protocol::LeakFree,
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(report_csv(&[]), format!("{REPORT_HEADER}\n"));
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&[], dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        assert!(load_report(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn report_and_timings_round_trip() {
        let mut rows = vec![
            row("exp1", None, Some(ClassifierKind::Knn), 1331, 0.99, 12.5),
            row("exp2", Some(ReducerKind::Pca), None, 25, 0.0, 3.25),
        ];
        rows[1].accuracy = None;
        rows[1].train_ms = None;
        rows[1].test_ms = None;
        let dir = tempfile::tempdir().unwrap();
        emit_report(&rows, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        assert!(text.contains("exp1,none,knn,1331,0.99,,,,,80,20,7,leakfree\n"), "{text}");
        assert_eq!(load_report(dir.path()).unwrap(), rows);
    }

    #[test]
    fn figure_tables() {
        let (k, p, s) = (Some(ClassifierKind::Knn), Some(ReducerKind::Pca), Some(ReducerKind::Srp));
        let rows = vec![
            row("exp1", None, k, 100, 0.9, 1.0),
            row("exp1", p, k, 5, 0.5, 1.0),
            row("exp1", p, k, 10, 0.7, 1.0),
            row("exp1", s, k, 5, 0.4, 1.0),
            row("exp2", p, None, 5, 0.0, 10.0),
            row("exp2", p, None, 5, 0.0, 30.0),
            row("exp2", p, None, 5, 0.0, 20.0),
        ];
        assert_eq!(fig7(&rows, ClassifierKind::Knn), "# d pca srp raw\n5 0.500000 0.400000 0.900000\n10 0.700000 nan 0.900000\n");
        assert_eq!(fig8(&rows), "# d pca\n5 21.000\n");
        assert_eq!(median(vec![3.0, 1.0]), Some(2.0));
    }
}

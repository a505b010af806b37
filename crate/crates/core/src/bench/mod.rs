//! Experiment harness over the (reducer × d × classifier) grid.
//!
//! * exp1: accuracy of every cell plus raw-feature baselines.
//! * exp2: reducer fit + transform time on the whole dataset.
//! * exp3: train/test time of each classifier at its best d.
//! * exp4: leave-one-user-out accuracy with a random-guess baseline.
//!
//! Cells that record wall-clock times run one at a time on the calling
//! thread; accuracy-only cells may use a worker pool. Rows are always
//! assembled in grid order.

mod config;
mod report;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{ExperimentConfig, Protocol, Source, DEFAULT_D_GRID};
pub use report::{
    emit_figures, emit_report, fig10, fig7, fig8, fig9, load_report, mean, median, merge_timings, parse_report,
    report_csv, timings_csv, ReportRow, REPORT_FILE, REPORT_HEADER, TIMINGS_FILE,
};

use crate::balance::{smote, split, split_by_user, users_present, BalanceConfig};
use crate::classify::{accuracy, evaluate_timed, train, ClassifierKind};
use crate::dataset::Dataset;
use crate::dimred::{self, ReducerKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Which experiments to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    One,
    Two,
    Three,
    Four,
    All,
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Experiment::One),
            "2" => Ok(Experiment::Two),
            "3" => Ok(Experiment::Three),
            "4" => Ok(Experiment::Four),
            "all" => Ok(Experiment::All),
            _ => Err(Error::invalid(format!("unknown experiment '{s}' (expected 1, 2, 3, 4 or all)"))),
        }
    }
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Applies SMOTE when enabled. Balancing is seeded from the repeat seed.
fn maybe_balance(cfg: &ExperimentConfig, d: &Dataset<f64>, seed: u64) -> Result<Dataset<f64>> {
    if cfg.balance {
        smote(d, &BalanceConfig { k_neighbors: cfg.smote_k, seed })
    } else {
        Ok(d.clone())
    }
}

/// Train/test sets of one repeat under the configured protocol.
pub fn prepare_split(cfg: &ExperimentConfig, data: &Dataset<f64>, repeat: usize) -> Result<(Dataset<f64>, Dataset<f64>)> {
    let seed = cfg.repeat_seed(repeat);
    let mut rng = Rng::new(seed).fork(1);
    match cfg.protocol {
        Protocol::Paper => {
            let balanced = maybe_balance(cfg, data, seed)?;
            split(&balanced, cfg.train_fraction, &mut rng)
        }
        Protocol::LeakFree => {
            let (train, test) = split(data, cfg.train_fraction, &mut rng)?;
            Ok((maybe_balance(cfg, &train, seed)?, test))
        }
    }
}

/// Reducer and width of one grid cell; `None` is the raw feature space.
type Cell = (Option<ReducerKind>, usize);

struct CellInput<'a> {
    experiment: String,
    train: &'a Dataset<f64>,
    test: &'a Dataset<f64>,
    seed: u64,
    classifiers: &'a [ClassifierKind],
}

/// Fits the cell's reducer on the training rows and evaluates each classifier.
fn run_cell(cfg: &ExperimentConfig, input: &CellInput<'_>, cell: Cell, timed: bool) -> Result<Vec<ReportRow>> {
    let (reducer, d) = cell;
    let (mut fit_ms, mut transform_ms) = (None, None);
    let latent: Option<(Matrix<f64>, Matrix<f64>)> = match reducer {
        None => None,
        Some(kind) => {
            let spec = cfg.reducer_spec(kind, d, input.seed);
            let t0 = Instant::now();
            let model = dimred::fit(&spec, &input.train.x)?;
            let t1 = Instant::now();
            let ztr = model.transform(&input.train.x)?;
            let zte = model.transform(&input.test.x)?;
            let t2 = Instant::now();
            if timed {
                fit_ms = Some(ms(t1 - t0));
                transform_ms = Some(ms(t2 - t1));
            }
            Some((ztr, zte))
        }
    };
    let (xtr, xte) = match &latent {
        Some((a, b)) => (a, b),
        None => (&input.train.x, &input.test.x),
    };
    let mut rows = Vec::with_capacity(input.classifiers.len());
    for &c in input.classifiers {
        let spec = cfg.classifier_spec(c, input.seed);
        let e = evaluate_timed(&spec, xtr, &input.train.y, xte, &input.test.y)?;
        rows.push(ReportRow {
            experiment: input.experiment.clone(),
            reducer,
            classifier: Some(c),
            d,
            accuracy: Some(e.accuracy),
            dr_fit_ms: fit_ms,
            dr_transform_ms: transform_ms,
            train_ms: timed.then(|| ms(e.train_time)),
            test_ms: timed.then(|| ms(e.test_time)),
            n_train: input.train.len(),
            n_test: input.test.len(),
            seed: input.seed,
            protocol: cfg.protocol,
        });
    }
    Ok(rows)
}

/// Runs cells in grid order; timed cells sequentially, others on the pool.
fn run_cells(cfg: &ExperimentConfig, input: &CellInput<'_>, cells: &[Cell], timed: bool) -> Result<Vec<ReportRow>> {
    let results: Vec<Result<Vec<ReportRow>>> = if timed || cfg.threads <= 1 {
        cells.iter().map(|&c| run_cell(cfg, input, c, timed)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(|&c| run_cell(cfg, input, c, false)).collect())
    };
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

fn grid(cfg: &ExperimentConfig, width: usize) -> Vec<Cell> {
    let mut cells = vec![(None, width)];
    for &k in &cfg.reducers {
        for &d in &cfg.d_grid {
            cells.push((Some(k), d));
        }
    }
    cells
}

/// Accuracy over the full grid, with raw-feature baselines first. Times are
/// recorded only when running single-threaded.
pub fn exp1_accuracy(cfg: &ExperimentConfig, data: &Dataset<f64>) -> Result<Vec<ReportRow>> {
    cfg.check_width(data.x.cols())?;
    let timed = cfg.threads <= 1;
    let cells = grid(cfg, data.x.cols());
    let mut rows = Vec::new();
    for r in 0..cfg.repeats {
        let (train, test) = prepare_split(cfg, data, r)?;
        let input = CellInput { experiment: "exp1".into(), train: &train, test: &test, seed: cfg.repeat_seed(r), classifiers: &cfg.classifiers };
        rows.extend(run_cells(cfg, &input, &cells, timed)?);
    }
    Ok(rows)
}

/// Reducer fit and transform time on every row of the dataset.
pub fn exp2_dr_time(cfg: &ExperimentConfig, data: &Dataset<f64>) -> Result<Vec<ReportRow>> {
    cfg.check_width(data.x.cols())?;
    let mut rows = Vec::new();
    for r in 0..cfg.repeats {
        let seed = cfg.repeat_seed(r);
        for &k in &cfg.reducers {
            for &d in &cfg.d_grid {
                let spec = cfg.reducer_spec(k, d, seed);
                let t0 = Instant::now();
                let model = dimred::fit(&spec, &data.x)?;
                let t1 = Instant::now();
                let _latent = model.transform(&data.x)?;
                let t2 = Instant::now();
                rows.push(ReportRow {
                    experiment: "exp2".into(),
                    reducer: Some(k),
                    classifier: None,
                    d,
                    accuracy: None,
                    dr_fit_ms: Some(ms(t1 - t0)),
                    dr_transform_ms: Some(ms(t2 - t1)),
                    train_ms: None,
                    test_ms: None,
                    n_train: data.len(),
                    n_test: 0,
                    seed,
                    protocol: cfg.protocol,
                });
            }
        }
    }
    Ok(rows)
}

/// Best d per (reducer, classifier): highest mean accuracy over repeats,
/// ties to the smaller d. Only rows with a reducer, a classifier and an
/// accuracy take part.
pub fn select_best_d(rows: &[ReportRow]) -> BTreeMap<(ReducerKind, ClassifierKind), usize> {
    let mut acc: BTreeMap<(ReducerKind, ClassifierKind), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        if let (Some(k), Some(c), Some(a)) = (r.reducer, r.classifier, r.accuracy) {
            acc.entry((k, c)).or_default().entry(r.d).or_default().push(a);
        }
    }
    acc.into_iter()
        .map(|(key, by_d)| {
            let mut best: Option<(usize, f64)> = None;
            for (d, v) in by_d {
                let m = mean(&v).unwrap_or(f64::NEG_INFINITY);
                if best.is_none_or(|(_, bm)| m > bm) {
                    best = Some((d, m));
                }
            }
            (key, best.expect("non-empty group").0)
        })
        .collect()
}

/// Timed train/test of each classifier at its best d, plus raw baselines.
pub fn exp3_classifier_time(
    cfg: &ExperimentConfig,
    data: &Dataset<f64>,
    best_d: &BTreeMap<(ReducerKind, ClassifierKind), usize>,
) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for r in 0..cfg.repeats {
        let (train, test) = prepare_split(cfg, data, r)?;
        let seed = cfg.repeat_seed(r);
        let input = CellInput { experiment: "exp3".into(), train: &train, test: &test, seed, classifiers: &cfg.classifiers };
        rows.extend(run_cell(cfg, &input, (None, data.x.cols()), true)?);
        for &k in &cfg.reducers {
            // Classifiers sharing a best d share one reducer fit.
            let mut by_d: BTreeMap<usize, Vec<ClassifierKind>> = BTreeMap::new();
            for &c in &cfg.classifiers {
                let d = *best_d
                    .get(&(k, c))
                    .ok_or_else(|| Error::invalid(format!("no best d for ({k}, {c}); run exp1 first")))?;
                by_d.entry(d).or_default().push(c);
            }
            let mut cell_rows = Vec::new();
            for (d, cs) in by_d {
                let input = CellInput { experiment: "exp3".into(), train: &train, test: &test, seed, classifiers: &cs };
                cell_rows.extend(run_cell(cfg, &input, (Some(k), d), true)?);
            }
            for &c in &cfg.classifiers {
                rows.extend(cell_rows.iter().filter(|row| row.classifier == Some(c)).cloned());
            }
        }
    }
    Ok(rows)
}

/// Leave-one-user-out accuracy. Each fold balances its training users only;
/// a random guesser runs on raw features as the baseline. After the folds of
/// every repeat come `exp4:mean` rows averaging accuracy over folds.
pub fn exp4_subject_independent(cfg: &ExperimentConfig, data: &Dataset<f64>) -> Result<Vec<ReportRow>> {
    cfg.check_width(data.x.cols())?;
    let users = users_present(data);
    if users.len() < 2 {
        return Err(Error::invalid(format!("leave-one-user-out needs at least 2 users, found {}", users.len())));
    }
    let mut cfg = cfg.clone();
    cfg.protocol = Protocol::LeakFree;
    let mut raw_classifiers = cfg.classifiers.clone();
    if !raw_classifiers.contains(&ClassifierKind::Random) {
        raw_classifiers.push(ClassifierKind::Random);
    }
    let cells = grid(&cfg, data.x.cols());
    let mut rows = Vec::new();
    for r in 0..cfg.repeats {
        let seed = cfg.repeat_seed(r);
        let mut fold_rows = Vec::new();
        for &u in &users {
            let (train, test) = split_by_user(data, u)?;
            let train = maybe_balance(&cfg, &train, seed)?;
            let experiment = format!("exp4:{}", data.user_names.name(u.0));
            let raw_input = CellInput { experiment: experiment.clone(), train: &train, test: &test, seed, classifiers: &raw_classifiers };
            fold_rows.extend(run_cells(&cfg, &raw_input, &cells[..1], false)?);
            let input = CellInput { experiment, train: &train, test: &test, seed, classifiers: &cfg.classifiers };
            fold_rows.extend(run_cells(&cfg, &input, &cells[1..], false)?);
        }
        let folds = users.len();
        let per_fold = fold_rows.len() / folds;
        let mut means = Vec::with_capacity(per_fold);
        for i in 0..per_fold {
            let group: Vec<&ReportRow> = (0..folds).map(|f| &fold_rows[f * per_fold + i]).collect();
            let first = group[0];
            let accs: Vec<f64> = group.iter().filter_map(|g| g.accuracy).collect();
            means.push(ReportRow {
                experiment: "exp4:mean".into(),
                accuracy: mean(&accs),
                n_train: group.iter().map(|g| g.n_train).sum(),
                n_test: group.iter().map(|g| g.n_test).sum(),
                ..first.clone()
            });
        }
        rows.extend(fold_rows);
        rows.extend(means);
    }
    Ok(rows)
}

/// Runs the requested experiments in order 1, 2, 3, 4. Experiment 3 needs
/// the best d per cell, so it brings experiment 1 along.
pub fn run(cfg: &ExperimentConfig, data: &Dataset<f64>, which: Experiment) -> Result<Vec<ReportRow>> {
    use Experiment::*;
    let want = |e: Experiment| which == All || which == e;
    let mut rows = Vec::new();
    if want(One) || want(Three) {
        rows.extend(exp1_accuracy(cfg, data)?);
    }
    if want(Two) {
        rows.extend(exp2_dr_time(cfg, data)?);
    }
    if want(Three) {
        let best = select_best_d(&rows);
        rows.extend(exp3_classifier_time(cfg, data, &best)?);
    }
    if want(Four) {
        rows.extend(exp4_subject_independent(cfg, data)?);
    }
    Ok(rows)
}

/// A cell backing the headline claim: fewer than 10% of the raw features,
/// accuracy within 0.03 of raw, and test time at most a tenth of raw.
#[derive(Clone, Debug, PartialEq)]
pub struct ClaimWitness {
    pub experiment: String,
    pub reducer: ReducerKind,
    pub classifier: ClassifierKind,
    pub d: usize,
    pub accuracy: f64,
    pub raw_accuracy: f64,
    pub test_ms: f64,
    pub raw_test_ms: f64,
}

/// Searches timed rows (mean accuracy, median test time over repeats) for
/// cells satisfying the headline claim against the raw row of the same
/// experiment and classifier.
pub fn claim_witnesses(rows: &[ReportRow]) -> Vec<ClaimWitness> {
    type Key = (String, Option<ReducerKind>, ClassifierKind, usize);
    let mut groups: BTreeMap<Key, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        if let (Some(c), Some(a), Some(t)) = (r.classifier, r.accuracy, r.test_ms) {
            let g = groups.entry((r.experiment.clone(), r.reducer, c, r.d)).or_default();
            g.0.push(a);
            g.1.push(t);
        }
    }
    let summary: BTreeMap<Key, (f64, f64)> =
        groups.into_iter().map(|(k, (a, t))| (k, (mean(&a).unwrap_or(0.0), median(t).unwrap_or(0.0)))).collect();
    let mut out = Vec::new();
    for ((exp, reducer, c, d), &(acc, t)) in &summary {
        let Some(k) = reducer else { continue };
        let raw = summary.iter().find(|((e, red, cc, _), _)| e == exp && red.is_none() && cc == c);
        let Some(((_, _, _, width), &(raw_acc, raw_t))) = raw else { continue };
        if (*d as f64) < 0.10 * *width as f64 && acc >= raw_acc - 0.03 && t <= raw_t / 10.0 {
            out.push(ClaimWitness {
                experiment: exp.clone(),
                reducer: *k,
                classifier: *c,
                d: *d,
                accuracy: acc,
                raw_accuracy: raw_acc,
                test_ms: t,
                raw_test_ms: raw_t,
            });
        }
    }
    out
}

/// Accuracy of a trained model on a dataset, for ad-hoc checks.
pub fn holdout_accuracy(cfg: &ExperimentConfig, kind: ClassifierKind, train_set: &Dataset<f64>, test_set: &Dataset<f64>, seed: u64) -> Result<f64> {
    let m = train(&cfg.classifier_spec(kind, seed), &train_set.x, &train_set.y)?;
    Ok(accuracy(&m.predict(&test_set.x)?, &test_set.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::KvConfig;
    use std::path::Path;

    fn tiny(extra: &str) -> ExperimentConfig {
        let text = format!(
            "d_grid = 2, 4\nreducers = pca, srp, fa\nae_epochs = 2\n\
             world.users = 2\nworld.n_labels = 3\nworld.sessions_per_user_label = 2\n\
             world.session_min_ms = 8000\nworld.session_max_ms = 12000\n\
             world.streams = light, accelerometer, ringer_mode, battery\n{extra}"
        );
        ExperimentConfig::from_kv(&KvConfig::parse(&text).unwrap(), Path::new("."), Some(3)).unwrap()
    }

    #[test]
    fn exp1_grid_is_complete_and_deterministic() {
        let cfg = tiny("repeats = 2\n");
        let data = cfg.load_dataset().unwrap();
        let rows = exp1_accuracy(&cfg, &data).unwrap();
        // (raw + 3 reducers × 2 d) × 3 classifiers × 2 repeats.
        assert_eq!(rows.len(), (1 + 3 * 2) * 3 * 2);
        assert!(rows.iter().all(|r| r.accuracy.is_some_and(|a| (0.0..=1.0).contains(&a)) && r.test_ms.is_some()));
        assert_eq!(report_csv(&rows), report_csv(&exp1_accuracy(&cfg, &data).unwrap()));
        let mut par = cfg.clone();
        par.threads = 3;
        let prow = exp1_accuracy(&par, &data).unwrap();
        assert_eq!(report_csv(&rows), report_csv(&prow));
        assert!(prow.iter().all(|r| r.test_ms.is_none()));
    }

    #[test]
    fn protocol_changes_only_balancing_order() {
        let data = tiny("").load_dataset().unwrap();
        let a = exp1_accuracy(&tiny("repeats = 1\nprotocol = paper\n"), &data).unwrap();
        let b = exp1_accuracy(&tiny("repeats = 1\nprotocol = leakfree\n"), &data).unwrap();
        let keys = |rows: &[ReportRow]| -> Vec<String> { rows.iter().map(|r| format!("{} {} {} {} {}", r.experiment, r.reducer_name(), r.classifier_name(), r.d, r.seed)).collect() };
        assert_eq!(keys(&a), keys(&b));
    }

    #[test]
    fn best_d_ties_go_to_smaller_d() {
        let mk = |d, acc| ReportRow {
            experiment: "exp1".into(),
            reducer: Some(ReducerKind::Ae),
            classifier: Some(ClassifierKind::Cart),
            d,
            accuracy: Some(acc),
            dr_fit_ms: None,
            dr_transform_ms: None,
            train_ms: None,
            test_ms: None,
            n_train: 1,
            n_test: 1,
            seed: 0,
            protocol: Protocol::LeakFree,
        };
        let key = (ReducerKind::Ae, ClassifierKind::Cart);
        assert_eq!(select_best_d(&[mk(25, 0.97), mk(50, 0.97)])[&key], 25);
        assert_eq!(select_best_d(&[mk(10, 0.90), mk(25, 0.97)])[&key], 25);
        assert_eq!(select_best_d(&[mk(50, 0.97), mk(25, 0.97)])[&key], 25);
    }

    #[test]
    fn all_experiments_and_grid_arithmetic() {
        let cfg = tiny("repeats = 1\n");
        let data = cfg.load_dataset().unwrap();
        let rows = run(&cfg, &data, Experiment::All).unwrap();
        let count = |e: &str| rows.iter().filter(|r| r.experiment == e).count();
        assert_eq!(count("exp1"), (1 + 3 * 2) * 3);
        assert_eq!(count("exp2"), 3 * 2);
        assert_eq!(count("exp3"), 3 + 3 * 3);
        // Raw: 3 classifiers + random; latent: 3 reducers × 2 d × 3 classifiers.
        assert_eq!(count("exp4:mean"), 4 + 3 * 2 * 3);
        assert_eq!(count("exp4:u1"), count("exp4:mean"));
        let random = rows.iter().find(|r| r.experiment == "exp4:mean" && r.classifier == Some(ClassifierKind::Random)).unwrap();
        assert!(random.reducer.is_none());
    }

    #[test]
    fn default_grid_row_count() {
        let cfg = ExperimentConfig::new(Source::Csv("unused".into()), 0);
        assert_eq!(grid(&cfg, 1331).len() * cfg.classifiers.len(), 111);
    }
}

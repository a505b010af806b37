//! SMOTE oversampling and train/test partitioning.

use std::collections::HashMap;

use crate::dataset::{Dataset, Provenance, UserId};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::{self, Real};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceConfig {
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig { k_neighbors: 5, seed: 0 }
    }
}

/// Oversamples every class up to the majority count.
///
/// Each synthetic row is `x + u * (n - x)` with `x` a uniformly drawn member
/// of the class, `n` one of its `k` nearest same-class neighbours (chosen
/// uniformly) and `u ~ U[0, 1)`. Original rows come first, unchanged;
/// synthetic rows follow grouped by class id and inherit the donor's user.
/// `k` is clamped to `class size - 1`.
pub fn smote<T: Real>(d: &Dataset<T>, cfg: &BalanceConfig) -> Result<Dataset<T>> {
    if cfg.k_neighbors == 0 {
        return Err(Error::invalid("SMOTE needs k_neighbors >= 1"));
    }
    let counts = d.class_counts();
    let present: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    if present.len() < 2 {
        return Err(Error::invalid(format!("SMOTE needs at least two classes, found {}", present.len())));
    }
    if let Some(&c) = present.iter().find(|&&c| counts[c] == 1) {
        return Err(Error::SingletonClass(d.labels.name(c as u32).to_string()));
    }
    let majority = present.iter().map(|&c| counts[c]).max().unwrap_or(0);

    let mut out = d.clone();
    out.provenance = Provenance::Balanced;
    let base = Rng::new(cfg.seed);
    let width = d.x.cols();
    let mut synth_rows: Vec<T> = Vec::new();
    for &c in &present {
        let deficit = majority - counts[c];
        if deficit == 0 {
            continue;
        }
        let members: Vec<usize> = (0..d.len()).filter(|&r| d.y[r].index() == c).collect();
        let k = cfg.k_neighbors.min(members.len() - 1);
        let mut rng = base.fork(c as u64);
        let mut neighbours: HashMap<usize, Vec<usize>> = HashMap::new();
        for _ in 0..deficit {
            let donor = rng.below(members.len());
            let nn = neighbours.entry(donor).or_insert_with(|| nearest_within(d, &members, donor, k));
            let other = members[nn[rng.below(nn.len())]];
            let u = T::lit(rng.uniform());
            let x = d.x.row(members[donor]);
            let xn = d.x.row(other);
            synth_rows.extend(x.iter().zip(xn).map(|(&a, &b)| a + u * (b - a)));
            out.y.push(d.y[members[donor]]);
            out.users.push(d.users[members[donor]]);
        }
    }
    let mut data = out.x.into_data();
    data.extend(synth_rows);
    out.x = crate::matrix::Matrix::new(out.y.len(), width, data)?;
    Ok(out)
}

/// Positions (into `members`) of the `k` nearest members to `members[at]`,
/// excluding itself. Distance ties go to the lower position.
fn nearest_within<T: Real>(d: &Dataset<T>, members: &[usize], at: usize, k: usize) -> Vec<usize> {
    let x = d.x.row(members[at]);
    let mut dist: Vec<(T, usize)> = members
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != at)
        .map(|(p, &r)| (scalar::sq_dist(x, d.x.row(r)), p))
        .collect();
    let by = |a: &(T, usize), b: &(T, usize)| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, by);
        dist.truncate(k);
    }
    dist.sort_by(by);
    dist.into_iter().map(|(_, p)| p).collect()
}

/// Number of training rows for `n` rows at `fraction`: `floor(n * fraction)`.
pub fn train_size(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction + 1e-9).floor() as usize
}

/// Uniform random partition without replacement. Both parts keep the
/// original row order.
pub fn split<T: Real>(d: &Dataset<T>, train_fraction: f64, rng: &mut Rng) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    if d.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    let mut idx: Vec<usize> = (0..d.len()).collect();
    rng.shuffle(&mut idx);
    let n_train = train_size(d.len(), train_fraction);
    let (train, test) = idx.split_at_mut(n_train);
    train.sort_unstable();
    test.sort_unstable();
    Ok((d.select(train), d.select(test)))
}

/// Leave-one-user-out fold: the held-out user's rows form the test set.
pub fn split_by_user<T: Real>(d: &Dataset<T>, held_out: UserId) -> Result<(Dataset<T>, Dataset<T>)> {
    let mut seen = vec![false; d.user_names.len()];
    for u in &d.users {
        seen[u.index()] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::invalid("split_by_user needs at least two distinct users"));
    }
    if !seen.get(held_out.index()).copied().unwrap_or(false) {
        return Err(Error::invalid(format!("user id {} has no rows", held_out.0)));
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..d.len()).partition(|&r| d.users[r] == held_out);
    Ok((d.select(&train), d.select(&test)))
}

/// Users that own at least one row, in id order.
pub fn users_present<T: Real>(d: &Dataset<T>) -> Vec<UserId> {
    let mut seen = vec![false; d.user_names.len()];
    for u in &d.users {
        seen[u.index()] = true;
    }
    (0..seen.len()).filter(|&i| seen[i]).map(|i| UserId(i as u32)).collect()
}

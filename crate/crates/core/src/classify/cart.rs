use std::fmt::Write as _;

use crate::container::{ModelReader, ModelWriter};
use crate::dataset::LabelId;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum Node<T> {
    Leaf {
        /// Training rows per class (indexed like `CartModel::labels`).
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// Gini decision tree; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct CartModel<T> {
    pub labels: Vec<LabelId>,
    pub nodes: Vec<Node<T>>,
    pub width: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CartParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams { max_depth: None, min_samples_split: 2 }
    }
}

/// `n · gini` for a class histogram: `n − Σ c² / n`.
fn weighted_impurity(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

fn majority_index(counts: &[usize]) -> usize {
    let mut best = 0;
    for c in 1..counts.len() {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best
}

struct Builder<'a, T> {
    x: &'a Matrix<T>,
    class: Vec<usize>,
    n_classes: usize,
    params: CartParams,
    nodes: Vec<Node<T>>,
}

impl<T: Real> Builder<'_, T> {
    /// `sorted[f]` lists this node's rows ordered by feature `f`.
    fn grow(&mut self, sorted: Vec<Vec<u32>>, depth: usize) -> usize {
        let rows = &sorted[0];
        let n = rows.len();
        let mut counts = vec![0usize; self.n_classes];
        for &r in rows {
            counts[self.class[r as usize]] += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: counts.clone() });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || n < self.params.min_samples_split || self.params.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&sorted, &counts) else {
            return id;
        };
        let goes_left: Vec<bool> = {
            let mut g = vec![false; self.x.rows()];
            for &r in rows {
                g[r as usize] = self.x.get(r as usize, feature) <= threshold;
            }
            g
        };
        let mut left = Vec::with_capacity(sorted.len());
        let mut right = Vec::with_capacity(sorted.len());
        for list in sorted {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&r| goes_left[r as usize]);
            left.push(l);
            right.push(r);
        }
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split { feature, threshold, left: l, right: r };
        id
    }

    /// Lowest weighted Gini; ties keep the lower feature, then the lower threshold.
    fn best_split(&self, sorted: &[Vec<u32>], counts: &[usize]) -> Option<(usize, T)> {
        let n = sorted[0].len();
        let mut best: Option<(f64, usize, T)> = None;
        let mut left = vec![0usize; self.n_classes];
        for (f, list) in sorted.iter().enumerate() {
            let first = self.x.get(list[0] as usize, f);
            let last = self.x.get(list[n - 1] as usize, f);
            if first == last {
                continue;
            }
            left.iter_mut().for_each(|c| *c = 0);
            let mut right = counts.to_vec();
            for i in 0..n - 1 {
                let r = list[i] as usize;
                let c = self.class[r];
                left[c] += 1;
                right[c] -= 1;
                let a = self.x.get(r, f);
                let b = self.x.get(list[i + 1] as usize, f);
                if a == b {
                    continue;
                }
                let score = weighted_impurity(&left, i + 1) + weighted_impurity(&right, n - i - 1);
                if best.as_ref().is_none_or(|&(s, _, _)| score < s) {
                    let mut t = (a + b) / T::lit(2.0);
                    if t >= b {
                        t = a;
                    }
                    best = Some((score, f, t));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

impl<T: Real> CartModel<T> {
    pub fn train(x: &Matrix<T>, y: &[LabelId], params: CartParams) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::invalid("cart: empty training set"));
        }
        let mut labels = y.to_vec();
        labels.sort();
        labels.dedup();
        let class: Vec<usize> = y.iter().map(|l| labels.binary_search(l).expect("label present")).collect();
        let sorted: Vec<Vec<u32>> = (0..x.cols())
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
                idx.sort_by(|&a, &b| x.get(a as usize, f).partial_cmp(&x.get(b as usize, f)).expect("finite features").then(a.cmp(&b)));
                idx
            })
            .collect();
        let sorted = if sorted.is_empty() { vec![(0..x.rows() as u32).collect()] } else { sorted };
        let mut b = Builder { x, class, n_classes: labels.len(), params, nodes: Vec::new() };
        if x.cols() == 0 {
            let mut counts = vec![0; labels.len()];
            b.class.iter().for_each(|&c| counts[c] += 1);
            return Ok(CartModel { labels, nodes: vec![Node::Leaf { counts }], width: 0 });
        }
        b.grow(sorted, 0);
        Ok(CartModel { labels, nodes: b.nodes, width: x.cols() })
    }

    fn leaf_of(&self, row: &[T]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: &Matrix<T>) -> Vec<LabelId> {
        x.row_iter().map(|r| self.labels[majority_index(self.leaf_of(r))]).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Indented text rendering; `label_names[l]` names label id `l`.
    pub fn to_tree_text(&self, label_names: &[String]) -> String {
        let mut out = String::new();
        let name = |l: LabelId| label_names.get(l.index()).cloned().unwrap_or_else(|| format!("#{}", l.0));
        let mut stack = vec![(0usize, 0usize, String::new())];
        while let Some((i, depth, prefix)) = stack.pop() {
            let pad = "  ".repeat(depth);
            match &self.nodes[i] {
                Node::Leaf { counts } => {
                    let _ = writeln!(out, "{pad}{prefix}leaf {} {:?}", name(self.labels[majority_index(counts)]), counts);
                }
                Node::Split { feature, threshold, left, right } => {
                    let _ = writeln!(out, "{pad}{prefix}f{feature} <= {threshold}");
                    stack.push((*right, depth + 1, "else: ".into()));
                    stack.push((*left, depth + 1, "then: ".into()));
                }
            }
        }
        out
    }

    pub(super) fn write(&self, w: &mut ModelWriter) {
        let labels: Vec<usize> = self.labels.iter().map(|l| l.index()).collect();
        // Leaves use feature = width and carry counts; splits carry children.
        let mut feature = Vec::new();
        let mut threshold = Vec::new();
        let mut children = Vec::new();
        let mut counts = Vec::new();
        for node in &self.nodes {
            match node {
                Node::Leaf { counts: c } => {
                    feature.push(self.width);
                    threshold.push(T::zero());
                    children.extend([0, 0]);
                    counts.extend(c);
                }
                Node::Split { feature: f, threshold: t, left, right } => {
                    feature.push(*f);
                    threshold.push(*t);
                    children.extend([*left, *right]);
                    counts.extend(std::iter::repeat_n(0, self.labels.len()));
                }
            }
        }
        w.scalar("width", self.width)
            .indices("labels", &labels)
            .indices("feature", &feature)
            .vector("threshold", &threshold)
            .indices("children", &children)
            .indices("counts", &counts);
    }

    pub(super) fn read(r: &ModelReader) -> Result<Self> {
        let width: usize = r.scalar("width")?;
        let labels: Vec<LabelId> = r.indices("labels")?.into_iter().map(|i| LabelId(i as u32)).collect();
        let feature = r.indices("feature")?;
        let threshold: Vec<T> = r.vector("threshold")?;
        let children = r.indices("children")?;
        let counts = r.indices("counts")?;
        let m = feature.len();
        let c = labels.len();
        if threshold.len() != m || children.len() != 2 * m || counts.len() != c * m || m == 0 {
            return Err(Error::Model("cart: node arrays disagree".into()));
        }
        let nodes = (0..m)
            .map(|i| {
                if feature[i] >= width {
                    Ok(Node::Leaf { counts: counts[i * c..(i + 1) * c].to_vec() })
                } else if children[2 * i] <= i || children[2 * i + 1] <= i || children[2 * i].max(children[2 * i + 1]) >= m {
                    Err(Error::Model(format!("cart: node {i} has invalid children")))
                } else {
                    Ok(Node::Split { feature: feature[i], threshold: threshold[i], left: children[2 * i], right: children[2 * i + 1] })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CartModel { labels, nodes, width })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_threshold() {
        let xs = [-3.0, -2.0, -0.5, 0.0, 1.0, 2.5];
        let x = Matrix::from_fn(6, 1, |i, _| xs[i]);
        let y: Vec<LabelId> = xs.iter().map(|&v| LabelId(u32::from(v >= 0.0))).collect();
        let m = CartModel::train(&x, &y, CartParams::default()).unwrap();
        assert_eq!(m.nodes.len(), 3);
        match m.nodes[0] {
            Node::Split { feature, threshold, .. } => assert_eq!((feature, threshold), (0, -0.25)),
            _ => panic!("root should split"),
        }
        assert_eq!(m.predict(&x), y);
    }

    #[test]
    fn equal_gain_prefers_lower_feature() {
        // Columns 0 and 1 are identical, so both offer the same split.
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let m = CartModel::train(&x, &[LabelId(0), LabelId(1)], CartParams::default()).unwrap();
        assert!(matches!(m.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_limit_and_min_split() {
        let mut rng = Rng::new(2);
        let x = Matrix::from_fn(80, 3, |_, _| rng.normal());
        let y: Vec<LabelId> = (0..80).map(|_| LabelId(rng.below(3) as u32)).collect();
        let m = CartModel::train(&x, &y, CartParams { max_depth: Some(2), min_samples_split: 2 }).unwrap();
        assert!(m.depth() <= 2);
        let stump = CartModel::train(&x, &y, CartParams { max_depth: None, min_samples_split: 1000 }).unwrap();
        assert_eq!(stump.nodes.len(), 1);
    }

    #[test]
    fn text_export_and_round_trip() {
        let x = Matrix::from_rows(&[[0.0, 5.0], [1.0, 4.0], [2.0, 3.0]]).unwrap();
        let y = [LabelId(0), LabelId(1), LabelId(2)];
        let m = CartModel::train(&x, &y, CartParams::default()).unwrap();
        let names: Vec<String> = ["sit", "walk", "run"].iter().map(|s| s.to_string()).collect();
        let text = m.to_tree_text(&names);
        assert!(text.starts_with("f0 <= 0.5\n"), "{text}");
        assert!(text.contains("leaf sit") && text.contains("leaf run"));
        let mut w = ModelWriter::new("cart");
        m.write(&mut w);
        let back = CartModel::<f64>::read(&ModelReader::parse(&w.finish()).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn fits_any_consistent_training_set(seed in 0u64..500, rows in 1usize..60, cols in 1usize..5) {
            let mut rng = Rng::new(seed);
            // Coarse values create many duplicate coordinates; labels are a
            // function of the row so the set is consistent.
            let x = Matrix::from_fn(rows, cols, |_, _| rng.below(4) as f64);
            let y: Vec<LabelId> = x.row_iter().map(|r| LabelId((r.iter().sum::<f64>() as u32 * 7 + r[0] as u32) % 3)).collect();
            let m = CartModel::train(&x, &y, CartParams::default()).unwrap();
            prop_assert_eq!(m.predict(&x), y);
        }
    }
}

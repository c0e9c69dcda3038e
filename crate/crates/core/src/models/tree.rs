//! Greedy binary decision trees over numeric feature vectors.
//!
//! Internal nodes test `x[feature] <= threshold` (left) against
//! `x[feature] > threshold` (right). Regression trees minimise squared
//! error; classification trees minimise class-weighted Gini impurity.
//! Split ties go to the lowest feature index, then the lowest threshold.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::space::Verdict;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node<L> {
    Leaf {
        value: L,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub feature: usize,
    /// `true` for `<= threshold`, `false` for `> threshold`.
    pub le: bool,
    pub threshold: f64,
}

impl PathStep {
    pub fn holds(&self, x: &[f64]) -> bool {
        if self.le {
            x[self.feature] <= self.threshold
        } else {
            x[self.feature] > self.threshold
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafPath<L> {
    pub node: usize,
    pub steps: Vec<PathStep>,
    pub value: L,
    pub samples: usize,
}

/// Arena-allocated tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    nodes: Vec<Node<L>>,
}

impl<L: Clone> Tree<L> {
    /// Build from explicit nodes. Children must reference valid indices.
    pub fn from_nodes(nodes: Vec<Node<L>>) -> Option<Self> {
        if nodes.is_empty() {
            return None;
        }
        for n in &nodes {
            if let Node::Split { left, right, .. } = n {
                if *left >= nodes.len() || *right >= nodes.len() {
                    return None;
                }
            }
        }
        Some(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node<L>] {
        &self.nodes
    }

    pub fn leaf_of(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> &L {
        match &self.nodes[self.leaf_of(x)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("leaf_of returns leaves"),
        }
    }

    /// Root-to-leaf paths, leftmost leaf first.
    pub fn paths(&self) -> Vec<LeafPath<L>> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::<PathStep>::new())];
        while let Some((i, steps)) = stack.pop() {
            match &self.nodes[i] {
                Node::Leaf { value, samples } => out.push(LeafPath {
                    node: i,
                    steps,
                    value: value.clone(),
                    samples: *samples,
                }),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let mut r = steps.clone();
                    r.push(PathStep {
                        feature: *feature,
                        le: false,
                        threshold: *threshold,
                    });
                    let mut l = steps;
                    l.push(PathStep {
                        feature: *feature,
                        le: true,
                        threshold: *threshold,
                    });
                    stack.push((*right, r));
                    stack.push((*left, l));
                }
            }
        }
        out
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        self.paths().iter().map(|p| p.steps.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features considered per split; all when `None`.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_leaf: 1,
            max_features: None,
        }
    }
}

trait Criterion {
    type Acc: Clone;
    type Leaf;
    fn zero(&self) -> Self::Acc;
    fn add(&self, acc: &mut Self::Acc, row: usize);
    /// Additive impurity (children impurities sum to the split impurity).
    fn impurity(&self, acc: &Self::Acc) -> f64;
    fn scale(&self, acc: &Self::Acc) -> f64;
    fn leaf(&self, acc: &Self::Acc, rows: &[usize]) -> Self::Leaf;
}

struct SquaredError<'a> {
    y: &'a [f64],
}

impl Criterion for SquaredError<'_> {
    type Acc = (f64, f64, f64);
    type Leaf = f64;
    fn zero(&self) -> Self::Acc {
        (0.0, 0.0, 0.0)
    }
    fn add(&self, acc: &mut Self::Acc, row: usize) {
        let v = self.y[row];
        acc.0 += 1.0;
        acc.1 += v;
        acc.2 += v * v;
    }
    fn impurity(&self, acc: &Self::Acc) -> f64 {
        if acc.0 == 0.0 {
            0.0
        } else {
            (acc.2 - acc.1 * acc.1 / acc.0).max(0.0)
        }
    }
    fn scale(&self, acc: &Self::Acc) -> f64 {
        acc.2.abs() + 1.0
    }
    fn leaf(&self, _acc: &Self::Acc, rows: &[usize]) -> f64 {
        // shifted mean is exact for constant leaves
        let r = self.y[rows[0]];
        r + rows.iter().map(|&i| self.y[i] - r).sum::<f64>() / rows.len() as f64
    }
}

/// Class weights for Gini trees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassWeight {
    Uniform,
    /// `n / (2 * n_class)` per class.
    Balanced,
    Custom { pass: f64, fail: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassLeaf {
    pub verdict: Verdict,
    pub weight_pass: f64,
    pub weight_fail: f64,
}

struct WeightedGini<'a> {
    labels: &'a [Verdict],
    w_pass: f64,
    w_fail: f64,
}

impl Criterion for WeightedGini<'_> {
    type Acc = (f64, f64);
    type Leaf = ClassLeaf;
    fn zero(&self) -> Self::Acc {
        (0.0, 0.0)
    }
    fn add(&self, acc: &mut Self::Acc, row: usize) {
        match self.labels[row] {
            Verdict::Pass => acc.0 += self.w_pass,
            Verdict::Fail => acc.1 += self.w_fail,
        }
    }
    fn impurity(&self, acc: &Self::Acc) -> f64 {
        let w = acc.0 + acc.1;
        if w == 0.0 {
            0.0
        } else {
            2.0 * acc.0 * acc.1 / w
        }
    }
    fn scale(&self, acc: &Self::Acc) -> f64 {
        acc.0 + acc.1 + 1.0
    }
    fn leaf(&self, acc: &Self::Acc, _rows: &[usize]) -> ClassLeaf {
        ClassLeaf {
            // ties go to Pass
            verdict: if acc.1 > acc.0 { Verdict::Fail } else { Verdict::Pass },
            weight_pass: acc.0,
            weight_fail: acc.1,
        }
    }
}

const REL_TOL: f64 = 1e-12;

fn build<C: Criterion>(
    x: &[Vec<f64>],
    crit: &C,
    params: &TreeParams,
    mut rng: Option<&mut Rng>,
) -> Tree<C::Leaf> {
    let n_features = x.first().map_or(0, Vec::len);
    let min_leaf = params.min_leaf.max(1);
    let mut nodes: Vec<Node<C::Leaf>> = Vec::new();
    // (node slot, rows, depth)
    let mut work: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    nodes.push(placeholder());
    work.push((0, (0..x.len()).collect(), 0));

    fn placeholder<L>() -> Node<L> {
        Node::Split {
            feature: usize::MAX,
            threshold: f64::NAN,
            left: 0,
            right: 0,
        }
    }

    // LIFO with left pushed last keeps a preorder, left-first layout.
    while let Some((slot, rows, depth)) = work.pop() {
        let mut acc = crit.zero();
        for &r in &rows {
            crit.add(&mut acc, r);
        }
        let parent_imp = crit.impurity(&acc);
        let tol = REL_TOL * crit.scale(&acc);
        let make_leaf = |acc: &C::Acc| Node::Leaf {
            value: crit.leaf(acc, &rows),
            samples: rows.len(),
        };
        if depth >= params.max_depth || rows.len() < 2 * min_leaf || parent_imp <= tol {
            nodes[slot] = make_leaf(&acc);
            continue;
        }

        let mut features: Vec<usize> = (0..n_features).collect();
        if let (Some(k), Some(r)) = (params.max_features, rng.as_deref_mut()) {
            if k < n_features {
                features.shuffle(r);
                features.truncate(k.max(1));
                features.sort_unstable();
            }
        }

        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = rows.clone();
        for &f in &features {
            sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
            let mut left = crit.zero();
            let mut right_prefix: Vec<C::Acc> = Vec::with_capacity(sorted.len() + 1);
            // suffix accumulators: right_prefix[i] covers sorted[i..]
            {
                let mut acc_r = crit.zero();
                right_prefix.push(acc_r.clone());
                for &r in sorted.iter().rev() {
                    crit.add(&mut acc_r, r);
                    right_prefix.push(acc_r.clone());
                }
                right_prefix.reverse();
            }
            for i in 0..sorted.len() - 1 {
                crit.add(&mut left, sorted[i]);
                let n_left = i + 1;
                let n_right = sorted.len() - n_left;
                if n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let a = x[sorted[i]][f];
                let b = x[sorted[i + 1]][f];
                if !(a < b) {
                    continue;
                }
                let imp = crit.impurity(&left) + crit.impurity(&right_prefix[i + 1]);
                let better = match best {
                    None => true,
                    Some((bi, _, _)) => imp < bi - tol,
                };
                if better {
                    let mut thr = 0.5 * (a + b);
                    if !(thr < b) {
                        thr = a;
                    }
                    best = Some((imp, f, thr));
                }
            }
        }

        match best {
            Some((imp, f, thr)) if imp < parent_imp - tol => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] <= thr);
                let li = nodes.len();
                nodes.push(placeholder());
                let ri = nodes.len();
                nodes.push(placeholder());
                nodes[slot] = Node::Split {
                    feature: f,
                    threshold: thr,
                    left: li,
                    right: ri,
                };
                work.push((ri, r, depth + 1));
                work.push((li, l, depth + 1));
            }
            _ => nodes[slot] = make_leaf(&acc),
        }
    }
    Tree { nodes }
}

pub type RegressionTree = Tree<f64>;
pub type ClassTree = Tree<ClassLeaf>;

pub fn fit_regression(
    x: &[Vec<f64>],
    y: &[f64],
    params: &TreeParams,
    rng: Option<&mut Rng>,
) -> RegressionTree {
    assert_eq!(x.len(), y.len());
    assert!(!x.is_empty(), "cannot fit a tree on no rows");
    build(x, &SquaredError { y }, params, rng)
}

pub fn class_weights(labels: &[Verdict], w: ClassWeight) -> (f64, f64) {
    match w {
        ClassWeight::Uniform => (1.0, 1.0),
        ClassWeight::Custom { pass, fail } => (pass, fail),
        ClassWeight::Balanced => {
            let n = labels.len() as f64;
            let fails = labels.iter().filter(|&&v| v == Verdict::Fail).count() as f64;
            let passes = n - fails;
            let f = |c: f64| if c > 0.0 { n / (2.0 * c) } else { 1.0 };
            (f(passes), f(fails))
        }
    }
}

pub fn fit_classification(
    x: &[Vec<f64>],
    labels: &[Verdict],
    params: &TreeParams,
    weight: ClassWeight,
) -> ClassTree {
    assert_eq!(x.len(), labels.len());
    assert!(!x.is_empty(), "cannot fit a tree on no rows");
    let (w_pass, w_fail) = class_weights(labels, weight);
    build(
        x,
        &WeightedGini {
            labels,
            w_pass,
            w_fail,
        },
        params,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64 * 0.5]).collect()
    }

    #[test]
    fn constant_target_gives_single_leaf() {
        let x = grid_1d(20);
        let y = vec![4.2; 20];
        let t = fit_regression(&x, &y, &TreeParams::default(), None);
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(*t.predict(&[3.0]), 4.2);
    }

    #[test]
    fn min_leaf_equal_to_rows_keeps_root() {
        let x = grid_1d(20);
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let p = TreeParams {
            min_leaf: 20,
            ..Default::default()
        };
        assert_eq!(fit_regression(&x, &y, &p, None).n_leaves(), 1);
    }

    #[test]
    fn boundary_split_found_within_grid_step() {
        // fitness steps down when v1 crosses 10
        let x = grid_1d(41);
        let y: Vec<f64> = x.iter().map(|r| if r[0] <= 10.0 { 5.0 } else { -3.0 }).collect();
        let t = fit_regression(&x, &y, &TreeParams::default(), None);
        let thr: Vec<f64> = t
            .paths()
            .iter()
            .flat_map(|p| p.steps.iter().map(|s| s.threshold))
            .collect();
        assert!(thr.iter().any(|c| (c - 10.0).abs() <= 0.5), "{thr:?}");
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(t.predict(xi), yi);
        }
    }

    #[test]
    fn leaves_hold_training_means() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 7) as f64, (i % 5) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 1.5 - r[1]).collect();
        let p = TreeParams {
            max_depth: 3,
            min_leaf: 2,
            max_features: None,
        };
        let t = fit_regression(&x, &y, &p, None);
        let mut sums = std::collections::HashMap::<usize, (f64, usize)>::new();
        for (xi, yi) in x.iter().zip(&y) {
            let e = sums.entry(t.leaf_of(xi)).or_default();
            e.0 += yi;
            e.1 += 1;
        }
        for (leaf, (s, n)) in sums {
            match &t.nodes()[leaf] {
                Node::Leaf { value, samples } => {
                    assert_eq!(*samples, n);
                    assert!((value - s / n as f64).abs() < 1e-12);
                }
                _ => panic!(),
            }
        }
    }

    #[test]
    fn paths_are_leftmost_first() {
        let x = grid_1d(8);
        let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let t = fit_regression(&x, &y, &TreeParams::default(), None);
        let values: Vec<f64> = t.paths().iter().map(|p| p.value).collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(values, sorted);
    }

    #[test]
    fn pure_class_data_single_leaf() {
        let x = grid_1d(10);
        let labels = vec![Verdict::Pass; 10];
        let t = fit_classification(&x, &labels, &TreeParams::default(), ClassWeight::Balanced);
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[1.0]).verdict, Verdict::Pass);
    }

    #[test]
    fn class_weights_shift_minority_recall() {
        // overlapping classes: fails are rare and mixed in
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![(i % 10) as f64]).collect();
        let labels: Vec<Verdict> = (0..100)
            .map(|i| if i % 10 >= 7 && i % 3 == 0 { Verdict::Fail } else { Verdict::Pass })
            .collect();
        let p = TreeParams {
            max_depth: 2,
            min_leaf: 1,
            max_features: None,
        };
        let recall = |t: &ClassTree| {
            let fails: Vec<usize> = (0..100).filter(|&i| labels[i] == Verdict::Fail).collect();
            fails
                .iter()
                .filter(|&&i| t.predict(&x[i]).verdict == Verdict::Fail)
                .count() as f64
                / fails.len() as f64
        };
        let u = fit_classification(&x, &labels, &p, ClassWeight::Uniform);
        let w = fit_classification(&x, &labels, &p, ClassWeight::Custom { pass: 1.0, fail: 20.0 });
        assert!(recall(&w) > recall(&u), "{} vs {}", recall(&w), recall(&u));
    }
}

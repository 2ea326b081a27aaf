//! Pointwise classifiers behind one train/predict contract.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::rng;

pub trait Classifier: Send + Sync {
    fn train(&mut self, features: ArrayView2<f64>, labels: &[i64]) -> Result<()>;
    fn predict(&self, features: ArrayView2<f64>) -> Result<Vec<i64>>;
}

fn check_training(features: &ArrayView2<f64>, labels: &[i64]) -> Result<()> {
    if features.nrows() != labels.len() {
        return Err(invalid("features and labels differ in length"));
    }
    if labels.is_empty() {
        return Err(invalid("cannot train on zero samples"));
    }
    Ok(())
}

/// Sorted distinct labels and, per sample, the index of its class.
fn encode(labels: &[i64]) -> (Vec<i64>, Vec<usize>) {
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let ids = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    (classes, ids)
}

/// Index of the largest count; ties go to the smallest index.
fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Dummy,
    Knn,
    DecisionTree,
    Logistic,
    GaussianNb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Dummy,
        ModelKind::Knn,
        ModelKind::DecisionTree,
        ModelKind::Logistic,
        ModelKind::GaussianNb,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Dummy => "dummy",
            Self::Knn => "knn",
            Self::DecisionTree => "tree",
            Self::Logistic => "logistic",
            Self::GaussianNb => "gaussian_nb",
        }
    }

    /// Fresh, untrained instance with default hyperparameters.
    pub fn build(&self, seed: u64) -> Box<dyn Classifier> {
        match self {
            Self::Dummy => Box::new(Dummy::new(seed)),
            Self::Knn => Box::new(Knn::new(5)),
            Self::DecisionTree => Box::new(DecisionTree::new(None, 2, seed)),
            Self::Logistic => Box::new(Logistic::new(0.5, 2000, seed)),
            Self::GaussianNb => Box::new(GaussianNb::new()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dummy" => Ok(Self::Dummy),
            "knn" | "kneighbors" => Ok(Self::Knn),
            "tree" | "decision_tree" | "decisiontree" => Ok(Self::DecisionTree),
            "logistic" => Ok(Self::Logistic),
            "gaussian_nb" | "gaussiannb" | "nb" => Ok(Self::GaussianNb),
            other => Err(invalid(format!("unknown model `{other}`"))),
        }
    }
}

/// Predicts by sampling the training label marginal. The sampling stream
/// restarts from the construction seed on every `predict` call.
#[derive(Debug, Clone)]
pub struct Dummy {
    seed: u64,
    classes: Vec<i64>,
    cumulative: Vec<f64>,
}

impl Dummy {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            classes: vec![],
            cumulative: vec![],
        }
    }
}

impl Classifier for Dummy {
    fn train(&mut self, features: ArrayView2<f64>, labels: &[i64]) -> Result<()> {
        check_training(&features, labels)?;
        let (classes, ids) = encode(labels);
        let mut counts = vec![0usize; classes.len()];
        for i in ids {
            counts[i] += 1;
        }
        let total = labels.len() as f64;
        let mut acc = 0.0;
        self.cumulative = counts
            .iter()
            .map(|&c| {
                acc += c as f64 / total;
                acc
            })
            .collect();
        self.classes = classes;
        Ok(())
    }

    fn predict(&self, features: ArrayView2<f64>) -> Result<Vec<i64>> {
        if self.classes.is_empty() {
            return Err(Error::NotTrained);
        }
        let mut r = rng::seeded(self.seed);
        let last = self.classes.len() - 1;
        Ok((0..features.nrows())
            .map(|_| {
                let u: f64 = r.random();
                let k = self.cumulative.iter().position(|&c| u < c).unwrap_or(last);
                self.classes[k]
            })
            .collect())
    }
}

/// Brute-force Euclidean k-nearest neighbours. Training rows are kept sorted
/// along the first feature so that the search can stop once that coordinate
/// alone exceeds the current k-th distance.
#[derive(Debug, Clone)]
pub struct Knn {
    k: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<i64>,
}

impl Knn {
    pub fn new(k: usize) -> Self {
        Self {
            k: k.max(1),
            rows: vec![],
            labels: vec![],
        }
    }

    fn vote(&self, query: &[f64], best: &mut Vec<(f64, i64)>) -> i64 {
        best.clear();
        let key = query.first().copied().unwrap_or(0.0);
        let start = self.rows.partition_point(|r| r.first().copied().unwrap_or(0.0) < key);
        let consider = |i: usize, best: &mut Vec<(f64, i64)>| -> bool {
            let row = &self.rows[i];
            let d0 = row.first().map(|v| v - key).unwrap_or(0.0);
            if best.len() == self.k && d0 * d0 > best[self.k - 1].0 {
                return false;
            }
            let d: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            let cand = (d, self.labels[i]);
            if best.len() < self.k || cand < best[self.k - 1] {
                let pos = best.partition_point(|c| *c <= cand);
                best.insert(pos, cand);
                best.truncate(self.k);
            }
            true
        };
        let (mut lo, mut hi) = (start, start);
        let (mut go_lo, mut go_hi) = (true, true);
        while go_lo || go_hi {
            if go_hi {
                if hi < self.rows.len() {
                    go_hi = consider(hi, best);
                    hi += 1;
                } else {
                    go_hi = false;
                }
            }
            if go_lo {
                if lo > 0 {
                    lo -= 1;
                    go_lo = consider(lo, best);
                } else {
                    go_lo = false;
                }
            }
        }
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for &(_, l) in best.iter() {
            *counts.entry(l).or_default() += 1;
        }
        let top = counts.values().copied().max().unwrap_or(0);
        counts
            .into_iter()
            .find(|&(_, c)| c == top)
            .map(|(l, _)| l)
            .expect("non-empty vote")
    }
}

impl Classifier for Knn {
    fn train(&mut self, features: ArrayView2<f64>, labels: &[i64]) -> Result<()> {
        check_training(&features, labels)?;
        let mut pairs: Vec<(Vec<f64>, i64)> = features
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .zip(labels.iter().copied())
            .collect();
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        let (rows, labels) = pairs.into_iter().unzip();
        self.rows = rows;
        self.labels = labels;
        Ok(())
    }

    fn predict(&self, features: ArrayView2<f64>) -> Result<Vec<i64>> {
        if self.rows.is_empty() {
            return Err(Error::NotTrained);
        }
        if self.k > self.rows.len() {
            return Err(invalid(format!(
                "k = {} exceeds {} training samples",
                self.k,
                self.rows.len()
            )));
        }
        let mut best = Vec::with_capacity(self.k + 1);
        Ok(features
            .rows()
            .into_iter()
            .map(|q| {
                let q = q.to_vec();
                self.vote(&q, &mut best)
            })
            .collect())
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(i64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// CART classification tree with Gini impurity. Each split sends
/// `x[f] <= v` left, where `v` is a training value, so predictions are
/// unchanged by strictly increasing per-feature maps. Equal-gain candidates
/// are resolved by a seeded feature order.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    max_depth: Option<usize>,
    min_samples_split: usize,
    seed: u64,
    root: Option<Node>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct TreeBuilder<'a> {
    x: ArrayView2<'a, f64>,
    y: Vec<usize>,
    classes: Vec<i64>,
    feature_order: Vec<usize>,
    max_depth: Option<usize>,
    min_samples_split: usize,
}

impl TreeBuilder<'_> {
    fn leaf(&self, counts: &[usize]) -> Node {
        Node::Leaf(self.classes[argmax_count(counts)])
    }

    fn build(&self, idx: &mut [usize], depth: usize) -> Node {
        let n_classes = self.classes.len();
        let mut counts = vec![0usize; n_classes];
        for &i in idx.iter() {
            counts[self.y[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure
            || idx.len() < self.min_samples_split
            || self.max_depth.is_some_and(|d| depth >= d)
        {
            return self.leaf(&counts);
        }

        let n = idx.len();
        let parent = gini(&counts, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut left = vec![0usize; n_classes];
        for &f in &self.feature_order {
            idx.sort_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]));
            left.iter_mut().for_each(|c| *c = 0);
            for pos in 0..n - 1 {
                left[self.y[idx[pos]]] += 1;
                let (v, next) = (self.x[[idx[pos], f]], self.x[[idx[pos + 1], f]]);
                if v == next {
                    continue;
                }
                let nl = pos + 1;
                let right: Vec<usize> = counts.iter().zip(&left).map(|(t, l)| t - l).collect();
                let impurity = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                let gain = parent - impurity;
                if best.is_none_or(|(g, _, _)| gain > g + 1e-15) {
                    best = Some((gain, f, v));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(&counts);
        };
        let mut split: Vec<usize> = idx.to_vec();
        let mid = stable_partition(&mut split, |&i| self.x[[i, feature]] <= threshold);
        let (l, r) = split.split_at_mut(mid);
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.build(l, depth + 1)),
            right: Box::new(self.build(r, depth + 1)),
        }
    }
}

/// Stable in-place partition; returns the number of elements satisfying `pred`.
fn stable_partition<T: Copy>(v: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let (yes, no): (Vec<T>, Vec<T>) = v.iter().partition(|x| pred(x));
    let k = yes.len();
    for (slot, x) in v.iter_mut().zip(yes.into_iter().chain(no)) {
        *slot = x;
    }
    k
}

impl DecisionTree {
    pub fn new(max_depth: Option<usize>, min_samples_split: usize, seed: u64) -> Self {
        Self {
            max_depth,
            min_samples_split: min_samples_split.max(2),
            seed,
            root: None,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        self.root.as_ref().map(walk).unwrap_or(0)
    }
}

impl Classifier for DecisionTree {
    fn train(&mut self, features: ArrayView2<f64>, labels: &[i64]) -> Result<()> {
        check_training(&features, labels)?;
        let (classes, y) = encode(labels);
        let mut feature_order: Vec<usize> = (0..features.ncols()).collect();
        feature_order.shuffle(&mut rng::seeded(self.seed));
        let builder = TreeBuilder {
            x: features,
            y,
            classes,
            feature_order,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
        };
        let mut idx: Vec<usize> = (0..labels.len()).collect();
        self.root = Some(builder.build(&mut idx, 0));
        Ok(())
    }

    fn predict(&self, features: ArrayView2<f64>) -> Result<Vec<i64>> {
        let root = self.root.as_ref().ok_or(Error::NotTrained)?;
        Ok(features
            .rows()
            .into_iter()
            .map(|row| {
                let mut node = root;
                loop {
                    match node {
                        Node::Leaf(c) => return *c,
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => node = if row[*feature] <= *threshold { left } else { right },
                    }
                }
            })
            .collect())
    }
}

/// Binary logistic regression fitted by full-batch gradient descent on the
/// mean cross-entropy, with an intercept.
#[derive(Debug, Clone)]
pub struct Logistic {
    learning_rate: f64,
    max_iter: usize,
    seed: u64,
    classes: Vec<i64>,
    weights: Vec<f64>,
    bias: f64,
    converged: bool,
}

const LOGISTIC_GRAD_TOL: f64 = 1e-6;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn new(learning_rate: f64, max_iter: usize, seed: u64) -> Self {
        Self {
            learning_rate,
            max_iter,
            seed,
            classes: vec![],
            weights: vec![],
            bias: 0.0,
            converged: false,
        }
    }

    /// `false` when training stopped at `max_iter` with a gradient norm
    /// still above tolerance; the current parameters are kept.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn weights(&self) -> (&[f64], f64) {
        (&self.weights, self.bias)
    }
}

impl Classifier for Logistic {
    fn train(&mut self, features: ArrayView2<f64>, labels: &[i64]) -> Result<()> {
        check_training(&features, labels)?;
        let (classes, y) = encode(labels);
        if classes.len() > 2 {
            return Err(invalid("logistic regression supports two classes"));
        }
        let p = features.ncols();
        let init = Normal::new(0.0, 0.01).expect("valid normal");
        let mut r = rng::seeded(self.seed);
        self.weights = (0..p).map(|_| init.sample(&mut r)).collect();
        self.bias = 0.0;
        self.classes = classes;
        self.converged = self.classes.len() == 1;
        if self.converged {
            return Ok(());
        }
        let n = labels.len() as f64;
        let mut grad = vec![0.0; p];
        for _ in 0..self.max_iter {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut gb = 0.0;
            for (row, &yi) in features.rows().into_iter().zip(&y) {
                let z = self.bias + row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
                let e = sigmoid(z) - yi as f64;
                for (g, x) in grad.iter_mut().zip(row.iter()) {
                    *g += e * x;
                }
                gb += e;
            }
            let norm = (grad.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt() / n;
            if norm < LOGISTIC_GRAD_TOL {
                self.converged = true;
                break;
            }
            for (w, g) in self.weights.iter_mut().zip(&grad) {
                *w -= self.learning_rate * g / n;
            }
            self.bias -= self.learning_rate * gb / n;
        }
        Ok(())
    }

    fn predict(&self, features: ArrayView2<f64>) -> Result<Vec<i64>> {
        if self.classes.is_empty() {
            return Err(Error::NotTrained);
        }
        if self.classes.len() == 1 {
            return Ok(vec![self.classes[0]; features.nrows()]);
        }
        Ok(features
            .rows()
            .into_iter()
            .map(|row| {
                let z = self.bias + row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
                // z = 0 is a tie: smallest class id
                if z > 0.0 {
                    self.classes[1]
                } else {
                    self.classes[0]
                }
            })
            .collect())
    }
}

pub const NB_VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes: independent per-feature normal likelihoods per
/// class, priors from label frequencies.
#[derive(Debug, Clone, Default)]
pub struct GaussianNb {
    classes: Vec<i64>,
    log_prior: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn new() -> Self {
        Self::default()
    }

    /// Joint log-likelihood per class for one sample.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes.len())
            .map(|c| {
                self.log_prior[c]
                    + x.iter()
                        .zip(self.means[c].iter().zip(&self.vars[c]))
                        .map(|(v, (m, s2))| {
                            -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - (v - m) * (v - m) / (2.0 * s2)
                        })
                        .sum::<f64>()
            })
            .collect()
    }
}

impl Classifier for GaussianNb {
    fn train(&mut self, features: ArrayView2<f64>, labels: &[i64]) -> Result<()> {
        check_training(&features, labels)?;
        let (classes, y) = encode(labels);
        let (k, p) = (classes.len(), features.ncols());
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; p]; k];
        for (row, &c) in features.rows().into_iter().zip(&y) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row.iter()) {
                *s += v;
            }
        }
        let means: Vec<Vec<f64>> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| s.iter().map(|v| v / n as f64).collect())
            .collect();
        let mut sq = vec![vec![0.0; p]; k];
        for (row, &c) in features.rows().into_iter().zip(&y) {
            for ((s, v), m) in sq[c].iter_mut().zip(row.iter()).zip(&means[c]) {
                *s += (v - m) * (v - m);
            }
        }
        self.vars = sq
            .iter()
            .zip(&counts)
            .map(|(s, &n)| s.iter().map(|v| (v / n as f64).max(NB_VARIANCE_FLOOR)).collect())
            .collect();
        let total = labels.len() as f64;
        self.log_prior = counts.iter().map(|&c| (c as f64 / total).ln()).collect();
        self.means = means;
        self.classes = classes;
        Ok(())
    }

    fn predict(&self, features: ArrayView2<f64>) -> Result<Vec<i64>> {
        if self.classes.is_empty() {
            return Err(Error::NotTrained);
        }
        Ok(features
            .rows()
            .into_iter()
            .map(|row| {
                let s = self.scores(&row.to_vec());
                let mut best = 0;
                for (i, v) in s.iter().enumerate() {
                    if *v > s[best] {
                        best = i;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

/// Fraction of mismatched predictions.
pub fn zero_one_error(pred: &[i64], truth: &[i64]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(a, b)| a != b).count() as f64 / truth.len() as f64
}

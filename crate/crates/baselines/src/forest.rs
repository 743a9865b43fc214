//! CART decision trees and a random forest that combines tree posteriors
//! by product (computed in log space) rather than by averaging.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForestError {
    #[error("training data is empty or has fewer than two classes")]
    InsufficientData,
    #[error("sample has {got} features, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {0} out of range")]
    BadLabel(usize),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Nodes with at most this many samples become leaves.
    pub min_samples: usize,
    /// Candidate features drawn per split.
    pub features_per_split: usize,
    /// Added to every class count in a leaf.
    pub smoothing: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 30, min_samples: 5, features_per_split: 3, smoothing: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { posterior: Vec<f64> },
}

/// Binary tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// A single-leaf tree.
    pub fn leaf(posterior: Vec<f64>) -> DecisionTree {
        DecisionTree { nodes: vec![Node::Leaf { posterior }] }
    }

    pub fn posterior(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { posterior } => return posterior,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    /// Grows a CART tree with Gini impurity on the rows `idx` of `data`.
    pub fn grow<R: Rng>(data: &Dataset, idx: &[usize], params: &TreeParams, rng: &mut R) -> DecisionTree {
        let mut tree = DecisionTree { nodes: Vec::new() };
        let mut work = idx.to_vec();
        tree.grow_node(data, &mut work, 0, params, rng);
        tree
    }

    fn grow_node<R: Rng>(&mut self, data: &Dataset, idx: &mut [usize], depth: usize, params: &TreeParams, rng: &mut R) -> usize {
        let me = self.nodes.len();
        let counts = data.class_counts(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure || idx.len() <= params.min_samples || depth >= params.max_depth {
            None
        } else {
            best_split(data, idx, &counts, params.features_per_split, rng)
        };
        let Some((feature, threshold)) = split else {
            let n = idx.len() as f64;
            let k = data.num_classes as f64;
            let posterior = counts.iter().map(|&c| (c as f64 + params.smoothing) / (n + params.smoothing * k)).collect();
            self.nodes.push(Node::Leaf { posterior });
            return me;
        };
        self.nodes.push(Node::Leaf { posterior: Vec::new() });
        let mid = partition(idx, |i| data.x[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow_node(data, l, depth + 1, params, rng);
        let right = self.grow_node(data, r, depth + 1, params, rng);
        self.nodes[me] = Node::Split { feature, threshold, left, right };
        me
    }
}

fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut k = 0;
    for j in 0..idx.len() {
        if pred(idx[j]) {
            idx.swap(j, k);
            k += 1;
        }
    }
    k
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Best (feature, threshold) among randomly drawn candidate features. If
/// none of the first `per_split` features can split the node, the
/// remaining ones are tried in the same random order.
fn best_split<R: Rng>(
    data: &Dataset,
    idx: &[usize],
    counts: &[usize],
    per_split: usize,
    rng: &mut R,
) -> Option<(usize, f64)> {
    let n = idx.len();
    let parent = gini(counts, n);
    let mut features: Vec<usize> = (0..data.dim).collect();
    features.shuffle(rng);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (tried, &f) in features.iter().enumerate() {
        if tried >= per_split && best.is_some() {
            break;
        }
        sorted.clear();
        sorted.extend(idx.iter().map(|&i| (data.x[i][f], data.y[i])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = vec![0usize; data.num_classes];
        for j in 0..n - 1 {
            left[sorted[j].1] += 1;
            if sorted[j].0 == sorted[j + 1].0 {
                continue;
            }
            let nl = j + 1;
            let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
            let impurity = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
            if impurity < parent - 1e-12 && best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, f, (sorted[j].0 + sorted[j + 1].0) / 2.0));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Feature rows with class labels `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub num_classes: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn new(dim: usize, num_classes: usize) -> Dataset {
        Dataset { dim, num_classes, x: Vec::new(), y: Vec::new() }
    }

    pub fn push(&mut self, x: Vec<f64>, y: usize) -> Result<(), ForestError> {
        if x.len() != self.dim {
            return Err(ForestError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if y >= self.num_classes {
            return Err(ForestError::BadLabel(y));
        }
        self.x.push(x);
        self.y.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.num_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    /// Rows `idx` as a new dataset.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            dim: self.dim,
            num_classes: self.num_classes,
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Share of the most frequent class.
    pub fn majority_rate(&self) -> f64 {
        let all: Vec<usize> = (0..self.len()).collect();
        let counts = self.class_counts(&all);
        *counts.iter().max().unwrap_or(&0) as f64 / self.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub num_classes: usize,
    pub trees: Vec<DecisionTree>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 100, tree: TreeParams::default() }
    }
}

/// Trains each tree on its own bootstrap sample of the data.
pub fn train_forest(data: &Dataset, params: &ForestParams, seed: u64) -> Result<RandomForest, ForestError> {
    let all: Vec<usize> = (0..data.len()).collect();
    if data.is_empty() || data.class_counts(&all).iter().filter(|&&c| c > 0).count() < 2 {
        return Err(ForestError::InsufficientData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = data.len();
    let trees = (0..params.trees)
        .map(|_| {
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            DecisionTree::grow(data, &sample, &params.tree, &mut rng)
        })
        .collect();
    Ok(RandomForest { num_classes: data.num_classes, trees })
}

impl RandomForest {
    /// Normalized product of the tree posteriors.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut log = vec![0.0f64; self.num_classes];
        for tree in &self.trees {
            for (l, p) in log.iter_mut().zip(tree.posterior(x)) {
                *l += p.ln();
            }
        }
        let max = log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return vec![1.0 / self.num_classes as f64; self.num_classes];
        }
        let unnorm: Vec<f64> = log.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = unnorm.iter().sum();
        unnorm.iter().map(|u| u / z).collect()
    }

    /// Most probable class, ties to the lowest index.
    pub fn classify(&self, x: &[f64]) -> usize {
        argmax(&self.predict(x))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serializes")
    }

    pub fn from_json(s: &str) -> Result<RandomForest, ForestError> {
        serde_json::from_str(s).map_err(|e| ForestError::Checkpoint(e.to_string()))
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(forest: &RandomForest, data: &Dataset) -> f64 {
    let hits = data.x.iter().zip(&data.y).filter(|(x, &y)| forest.classify(x) == y).count();
    hits as f64 / data.len().max(1) as f64
}

/// Mean accuracy over `k` folds of a seeded shuffle.
pub fn cross_validate(data: &Dataset, k: usize, params: &ForestParams, seed: u64) -> Result<f64, ForestError> {
    if k < 2 || data.len() < k {
        return Err(ForestError::InsufficientData);
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut total = 0.0;
    for fold in 0..k {
        let (test, train): (Vec<usize>, Vec<usize>) =
            order.iter().enumerate().map(|(pos, &i)| (pos % k == fold, i)).fold(
                (Vec::new(), Vec::new()),
                |(mut te, mut tr), (is_test, i)| {
                    if is_test {
                        te.push(i)
                    } else {
                        tr.push(i)
                    }
                    (te, tr)
                },
            );
        let forest = train_forest(&data.subset(&train), params, seed.wrapping_add(fold as u64 + 1))?;
        total += accuracy(&forest, &data.subset(&test));
    }
    Ok(total / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, seed: u64) -> Dataset {
        // Class = which of three bands x0 falls into; x1 is noise.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = Dataset::new(2, 3);
        for _ in 0..n {
            let x0: f64 = rng.gen_range(0.0..3.0);
            let x1: f64 = rng.gen_range(0.0..1.0);
            d.push(vec![x0, x1], x0 as usize).unwrap();
        }
        d
    }

    #[test]
    fn product_of_two_trees() {
        let forest = RandomForest {
            num_classes: 2,
            trees: vec![DecisionTree::leaf(vec![0.8, 0.2]), DecisionTree::leaf(vec![0.6, 0.4])],
        };
        let p = forest.predict(&[0.0]);
        let (a, b) = (0.8 * 0.6, 0.2 * 0.4);
        assert!((p[0] - a / (a + b)).abs() < 1e-12);
        assert!((p[1] - b / (a + b)).abs() < 1e-12);
    }

    #[test]
    fn uniform_trees_stay_uniform() {
        let forest = RandomForest { num_classes: 5, trees: vec![DecisionTree::leaf(vec![0.2; 5]); 100] };
        for v in forest.predict(&[0.0]) {
            assert!((v - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_posterior_vetoes_class() {
        let forest = RandomForest {
            num_classes: 2,
            trees: vec![DecisionTree::leaf(vec![1.0, 0.0]), DecisionTree::leaf(vec![0.3, 0.7])],
        };
        assert_eq!(forest.predict(&[0.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn single_tree_forest_is_the_tree() {
        let d = toy(300, 6);
        let forest = train_forest(&d, &ForestParams { trees: 1, ..ForestParams::default() }, 3).unwrap();
        for x in toy(50, 7).x {
            let (p, q) = (forest.predict(&x), forest.trees[0].posterior(&x).to_vec());
            for (a, b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pure_leaf_smoothing() {
        // A pure leaf of five samples over five classes: (5+1)/(5+5).
        let mut d = Dataset::new(1, 5);
        for i in 0..5 {
            d.push(vec![i as f64], 2).unwrap();
        }
        let tree = DecisionTree::grow(&d, &[0, 1, 2, 3, 4], &TreeParams::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(tree.nodes.len(), 1);
        let p = tree.posterior(&[0.0]);
        assert!((p[2] - 0.6).abs() < 1e-12);
        assert!((p[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let mut d = Dataset::new(1, 5);
        d.push(vec![1.0], 3).unwrap();
        d.push(vec![2.0], 3).unwrap();
        assert_eq!(train_forest(&d, &ForestParams::default(), 0), Err(ForestError::InsufficientData));
        assert_eq!(train_forest(&Dataset::new(1, 5), &ForestParams::default(), 0), Err(ForestError::InsufficientData));
    }

    #[test]
    fn learns_bands() {
        let train = toy(600, 1);
        let test = toy(300, 2);
        let forest = train_forest(&train, &ForestParams { trees: 25, ..ForestParams::default() }, 7).unwrap();
        assert_eq!(forest.trees.len(), 25);
        assert!(accuracy(&forest, &test) > 0.95);
        for x in &test.x {
            let p = forest.predict(x);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            // Strictly positive; the top class can round to exactly 1.0.
            assert!(p.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn depth_limit() {
        let train = toy(300, 3);
        let params = TreeParams { max_depth: 2, ..TreeParams::default() };
        let tree = DecisionTree::grow(&train, &(0..300).collect::<Vec<_>>(), &params, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(tree.depth() <= 2);
    }

    #[test]
    fn deterministic_and_serializable() {
        let d = toy(200, 4);
        let params = ForestParams { trees: 10, ..ForestParams::default() };
        let a = train_forest(&d, &params, 9).unwrap();
        let b = train_forest(&d, &params, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(RandomForest::from_json(&a.to_json()).unwrap(), a);
        assert!(RandomForest::from_json("{").is_err());
    }

    #[test]
    fn cross_validation_runs() {
        let d = toy(200, 5);
        let acc = cross_validate(&d, 10, &ForestParams { trees: 5, ..ForestParams::default() }, 1).unwrap();
        assert!(acc > 0.9, "{acc}");
    }
}

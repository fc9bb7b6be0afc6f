//! Bagged CART classification trees with Gini impurity.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum SplitFeatures {
    Sqrt,
    Log2,
    Fraction(f64),
}

impl SplitFeatures {
    /// Candidate features per split out of `d`.
    pub fn count(&self, d: usize) -> usize {
        let m = match *self {
            SplitFeatures::Sqrt => (d as f64).sqrt().round() as usize,
            SplitFeatures::Log2 => (d as f64).log2().round() as usize,
            SplitFeatures::Fraction(f) => (f * d as f64).ceil() as usize,
        };
        m.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    #[default]
    None,
    /// Weights inversely proportional to class frequency in the training rows.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: SplitFeatures,
    pub class_weight: ClassWeight,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 6,
            min_leaf: 1,
            features_per_split: SplitFeatures::Sqrt,
            class_weight: ClassWeight::None,
        }
    }
}

impl HyperParams {
    pub const TREES: (usize, usize) = (50, 500);
    pub const DEPTH: (usize, usize) = (2, 12);
    pub const LEAF: (usize, usize) = (1, 8);

    pub fn validate(&self) -> Result<(), LearnError> {
        let within = |v: usize, (lo, hi): (usize, usize)| (lo..=hi).contains(&v);
        let fraction_ok = match self.features_per_split {
            SplitFeatures::Fraction(f) => f > 0.0 && f <= 1.0,
            _ => true,
        };
        if within(self.n_trees, Self::TREES) && within(self.max_depth, Self::DEPTH) && within(self.min_leaf, Self::LEAF) && fraction_ok {
            Ok(())
        } else {
            Err(LearnError::InvalidHyperParams(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf { positive: bool },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> bool {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { positive } => return positive,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
    n_features: usize,
}

struct Builder<'a> {
    /// Column-major copy of the training matrix.
    cols: &'a [Vec<f64>],
    scratch: Vec<(f64, u8)>,
    y: &'a [u8],
    weight: [f64; 2],
    hp: &'a HyperParams,
    m: usize,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

impl Builder<'_> {
    fn mass(&self, idx: &[usize]) -> [f64; 2] {
        let mut w = [0.0; 2];
        for &i in idx {
            w[self.y[i] as usize] += self.weight[self.y[i] as usize];
        }
        w
    }

    fn leaf(&mut self, w: [f64; 2]) -> usize {
        self.nodes.push(Node::Leaf { positive: w[1] > w[0] });
        self.nodes.len() - 1
    }

    /// Best (feature, threshold, impurity decrease) over a random feature subset.
    fn best_split(&mut self, idx: &[usize], total: [f64; 2]) -> Option<(usize, f64)> {
        let d = self.cols.len();
        let features = sample(&mut self.rng, d, self.m);
        let gini = |w: [f64; 2]| {
            let s = w[0] + w[1];
            if s <= 0.0 { 0.0 } else { 1.0 - (w[0] / s).powi(2) - (w[1] / s).powi(2) }
        };
        let sum = total[0] + total[1];
        let parent = gini(total) * sum;
        let min_leaf = self.hp.min_leaf;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut pairs = std::mem::take(&mut self.scratch);
        for f in features.iter() {
            let col = &self.cols[f];
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (col[i], self.y[i])));
            // Ties may land in any order: splits are only taken between distinct values.
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0.0; 2];
            for k in 0..pairs.len() - 1 {
                let (v, label) = pairs[k];
                left[label as usize] += self.weight[label as usize];
                let next = pairs[k + 1].0;
                if v == next || k + 1 < min_leaf || pairs.len() - k - 1 < min_leaf {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let child = gini(left) * (left[0] + left[1]) + gini(right) * (right[0] + right[1]);
                let gain = parent - child;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((f, 0.5 * (v + next), gain));
                }
            }
        }
        self.scratch = pairs;
        best.map(|(f, t, _)| (f, t))
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let w = self.mass(idx);
        if depth >= self.hp.max_depth || w[0] == 0.0 || w[1] == 0.0 || idx.len() < 2 * self.hp.min_leaf {
            return self.leaf(w);
        }
        let Some((feature, threshold)) = self.best_split(idx, w) else {
            return self.leaf(w);
        };
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { positive: false });
        let col = &self.cols[feature];
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| col[i] <= threshold);
        let l = self.grow(&mut left, depth + 1);
        let r = self.grow(&mut right, depth + 1);
        self.nodes[at] = Node::Split { feature, threshold, left: l, right: r };
        at
    }
}

/// Per-tree seed derived from the forest seed.
fn tree_seed(seed: u64, t: usize) -> u64 {
    super::derive_seed(seed, t as u64)
}

pub fn rf_train(x: &[Vec<f64>], y: &[u8], hp: &HyperParams, seed: u64) -> Result<Forest, LearnError> {
    assert_eq!(x.len(), y.len(), "rows and labels differ in length");
    let n_pos = y.iter().filter(|&&l| l == 1).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(LearnError::SingleClassTraining);
    }
    let n = y.len();
    let d = x[0].len();
    if d == 0 {
        return Err(LearnError::NoFeatures);
    }
    let weight = match hp.class_weight {
        ClassWeight::None => [1.0, 1.0],
        ClassWeight::Balanced => [n as f64 / (2.0 * (n - n_pos) as f64), n as f64 / (2.0 * n_pos as f64)],
    };
    let m = hp.features_per_split.count(d);
    let cols: Vec<Vec<f64>> = (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect();
    let trees = (0..hp.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
            let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut b = Builder { cols: &cols, scratch: Vec::new(), y, weight, hp, m, nodes: Vec::new(), rng };
            b.grow(&mut idx, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(Forest { trees, n_features: d })
}

impl Forest {
    /// Share of trees voting positive.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_features, "feature count mismatch");
        self.positive_votes(x) as f64 / self.trees.len() as f64
    }

    pub fn positive_votes(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.predict(x)).count()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }
}

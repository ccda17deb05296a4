use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_classes, check_features, ClassProbs, ProbSource};
use crate::error::{Error, Result};
use crate::nn::Reader;

pub const FOREST_TAG: &[u8; 4] = b"FRST";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per node; `None` means `ceil(sqrt(d))`.
    pub feature_subsample: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: None,
            min_leaf: 1,
            feature_subsample: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    /// One tree on the full sample with every feature tried at every node.
    pub fn single_cart() -> Self {
        ForestParams {
            trees: 1,
            bootstrap: false,
            feature_subsample: Some(usize::MAX),
            ..ForestParams::default()
        }
    }

    fn features_per_node(&self, dim: usize) -> usize {
        self.feature_subsample
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .clamp(1, dim.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class frequencies of the (bootstrap-weighted) samples in the leaf.
    Leaf { freq: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub seed: u64,
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = self.nodes[i]
        {
            i = if x[feature] <= threshold { left } else { right };
        }
        i
    }

    pub fn predict(&self, x: &[f64]) -> &[f64] {
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf { freq } => freq,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub classes: usize,
    pub dim: usize,
    pub n_train: usize,
    pub params: ForestParams,
}

fn bootstrap_counts(n: usize, bootstrap: bool, rng: &mut ChaCha8Rng) -> Vec<u64> {
    if !bootstrap {
        return vec![1; n];
    }
    let mut w = vec![0; n];
    for _ in 0..n {
        w[rng.random_range(0..n)] += 1;
    }
    w
}

/// Threshold strictly separating `a < b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a * 0.5 + b * 0.5;
    if mid < a || mid >= b {
        a
    } else {
        mid
    }
}

struct Best {
    feature: usize,
    threshold: f64,
    num: u128,
    den: u128,
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    w: &'a [u64],
    classes: usize,
    min_leaf: u64,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<u64> {
        let mut c = vec![0u64; self.classes];
        for &i in idx {
            c[self.y[i]] += self.w[i];
        }
        c
    }

    /// Best split on `feature`, improving on `best` only when strictly
    /// better (Gini gain compared exactly as rationals).
    fn scan(&self, idx: &mut [usize], feature: usize, total: &[u64], best: &mut Option<Best>) {
        idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
        let n: u64 = total.iter().sum();
        let mut left = vec![0u64; self.classes];
        let mut n_left = 0u64;
        for j in 0..idx.len() - 1 {
            let i = idx[j];
            left[self.y[i]] += self.w[i];
            n_left += self.w[i];
            let (a, b) = (self.x[i][feature], self.x[idx[j + 1]][feature]);
            if a == b {
                continue;
            }
            let n_right = n - n_left;
            if n_left < self.min_leaf || n_right < self.min_leaf {
                continue;
            }
            let sq_l: u128 = left.iter().map(|&c| (c as u128) * (c as u128)).sum();
            let sq_r: u128 = left
                .iter()
                .zip(total)
                .map(|(&l, &t)| ((t - l) as u128) * ((t - l) as u128))
                .sum();
            let num = sq_l * n_right as u128 + sq_r * n_left as u128;
            let den = n_left as u128 * n_right as u128;
            let better = match best {
                None => true,
                Some(b) => num * b.den > b.num * den,
            };
            if better {
                *best = Some(Best {
                    feature,
                    threshold: midpoint(a, b),
                    num,
                    den,
                });
            }
        }
    }

    fn grow(&self, seed: u64, params: &ForestParams, dim: usize) -> Tree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = bootstrap_counts(self.x.len(), params.bootstrap, &mut rng);
        let grower = Grower { w: &w, ..*self };
        let k = params.features_per_node(dim);
        let mut features: Vec<usize> = (0..dim).collect();
        let root: Vec<usize> = (0..self.x.len()).filter(|&i| w[i] > 0).collect();
        let mut nodes = vec![Node::Leaf { freq: vec![] }];
        let mut stack = vec![(0usize, root, 0usize)];
        while let Some((id, mut idx, depth)) = stack.pop() {
            let total = grower.counts(&idx);
            let n: u64 = total.iter().sum();
            let pure = total.iter().filter(|&&c| c > 0).count() <= 1;
            let capped = params.max_depth.is_some_and(|d| depth >= d);
            let mut best = None;
            if !pure && !capped && idx.len() > 1 {
                if k < dim {
                    features.shuffle(&mut rng);
                    let mut tried = features[..k].to_vec();
                    tried.sort_unstable();
                    for &f in &tried {
                        grower.scan(&mut idx, f, &total, &mut best);
                    }
                    if best.is_none() {
                        let mut rest = features[k..].to_vec();
                        rest.sort_unstable();
                        for &f in &rest {
                            grower.scan(&mut idx, f, &total, &mut best);
                        }
                    }
                } else {
                    for f in 0..dim {
                        grower.scan(&mut idx, f, &total, &mut best);
                    }
                }
            }
            match best {
                None => {
                    nodes[id] = Node::Leaf {
                        freq: total.iter().map(|&c| c as f64 / n as f64).collect(),
                    };
                }
                Some(b) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        idx.iter().partition(|&&i| self.x[i][b.feature] <= b.threshold);
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf { freq: vec![] });
                    nodes.push(Node::Leaf { freq: vec![] });
                    nodes[id] = Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Tree { seed, nodes }
    }
}

/// Grows `params.trees` CART trees (Gini impurity) on bootstrap resamples.
///
/// Ties between equally good splits go to the lowest feature index, then the
/// lowest threshold. Trees are grown in parallel from per-tree seeds drawn
/// from `params.seed`, so the forest does not depend on scheduling.
pub fn train_forest(
    features: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    params: &ForestParams,
) -> Result<ForestModel> {
    let dim = check_features(features, labels)?;
    check_classes(labels, classes)?;
    if params.trees == 0 {
        return Err(Error::invalid("a forest needs at least one tree"));
    }
    if params.min_leaf == 0 {
        return Err(Error::invalid("min_leaf must be positive"));
    }
    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let seeds: Vec<u64> = (0..params.trees).map(|_| master.random()).collect();
    let grower = Grower {
        x: features,
        y: labels,
        w: &[],
        classes,
        min_leaf: params.min_leaf as u64,
    };
    let trees = seeds.par_iter().map(|&s| grower.grow(s, params, dim)).collect();
    Ok(ForestModel {
        trees,
        classes,
        dim,
        n_train: features.len(),
        params: params.clone(),
    })
}

impl ForestModel {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::dims(format!("{} features", self.dim), x.len()));
        }
        Ok(())
    }

    /// Mean of the per-tree leaf frequency vectors.
    pub fn probs(&self, x: &[f64]) -> Result<ClassProbs> {
        self.check_dim(x)?;
        let mut acc = vec![0.0; self.classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.predict(x)) {
                *a += p;
            }
        }
        let m = self.trees.len() as f64;
        Ok(ClassProbs {
            probs: acc.into_iter().map(|v| v / m).collect(),
            source: ProbSource::Forest,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(self.probs(x)?.argmax())
    }

    /// Every tree is a single leaf (no feature could separate the data).
    pub fn is_degenerate(&self) -> bool {
        self.trees.iter().all(|t| t.nodes.len() == 1)
    }

    /// Weight each training point carries in tree `tree`'s prediction at
    /// `query`: its bootstrap multiplicity over the leaf total when it shares
    /// the query's leaf, zero otherwise. `train` must be the training set.
    pub fn tree_weights(&self, tree: usize, train: &[Vec<f64>], query: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(query)?;
        if train.len() != self.n_train {
            return Err(Error::dims(format!("{} training points", self.n_train), train.len()));
        }
        let t = self
            .trees
            .get(tree)
            .ok_or_else(|| Error::invalid(format!("tree {tree} out of range")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(t.seed);
        let w = bootstrap_counts(self.n_train, self.params.bootstrap, &mut rng);
        let leaf = t.leaf_index(query);
        let mut h: Vec<f64> = train
            .iter()
            .zip(&w)
            .map(|(x, &m)| if m > 0 && t.leaf_index(x) == leaf { m as f64 } else { 0.0 })
            .collect();
        let total: f64 = h.iter().sum();
        for v in &mut h {
            *v /= total;
        }
        Ok(h)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let params = serde_json::to_vec(&self.params).expect("params serialize");
        let mut out = Vec::new();
        out.extend_from_slice(&(params.len() as u32).to_le_bytes());
        out.extend_from_slice(&params);
        for v in [self.classes, self.dim, self.n_train, self.trees.len()] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for t in &self.trees {
            out.extend_from_slice(&t.seed.to_le_bytes());
            out.extend_from_slice(&(t.nodes.len() as u64).to_le_bytes());
            for node in &t.nodes {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        out.push(0);
                        out.extend_from_slice(&(*feature as u64).to_le_bytes());
                        out.extend_from_slice(&threshold.to_le_bytes());
                        out.extend_from_slice(&(*left as u64).to_le_bytes());
                        out.extend_from_slice(&(*right as u64).to_le_bytes());
                    }
                    Node::Leaf { freq } => {
                        out.push(1);
                        for p in freq {
                            out.extend_from_slice(&p.to_le_bytes());
                        }
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |msg: &str| Error::format(origin, format!("forest section: {msg}"));
        let mut r = Reader::new(bytes, origin);
        let n = r.u32()? as usize;
        let params: ForestParams = serde_json::from_slice(r.take(n)?).map_err(|e| bad(&e.to_string()))?;
        let classes = r.u64()? as usize;
        let dim = r.u64()? as usize;
        let n_train = r.u64()? as usize;
        let count = r.u64()? as usize;
        let f64_at = |r: &mut Reader| -> Result<f64> { Ok(f64::from_le_bytes(r.take(8)?.try_into().unwrap())) };
        let mut trees = Vec::new();
        for _ in 0..count {
            let seed = r.u64()?;
            let len = r.u64()? as usize;
            let mut nodes = Vec::new();
            for _ in 0..len {
                match r.take(1)?[0] {
                    0 => {
                        let feature = r.u64()? as usize;
                        let threshold = f64_at(&mut r)?;
                        let left = r.u64()? as usize;
                        let right = r.u64()? as usize;
                        if feature >= dim || left >= len || right >= len {
                            return Err(bad("node index out of range"));
                        }
                        nodes.push(Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        });
                    }
                    1 => {
                        let freq = (0..classes).map(|_| f64_at(&mut r)).collect::<Result<_>>()?;
                        nodes.push(Node::Leaf { freq });
                    }
                    _ => return Err(bad("unknown node kind")),
                }
            }
            if nodes.is_empty() {
                return Err(bad("empty tree"));
            }
            trees.push(Tree { seed, nodes });
        }
        if !r.done() || trees.is_empty() {
            return Err(bad("trailing bytes or no trees"));
        }
        Ok(ForestModel {
            trees,
            classes,
            dim,
            n_train,
            params,
        })
    }
}

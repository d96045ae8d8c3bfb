//! Random forest: bagged binary decision trees with Gini-decrease splits.

use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream};
use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [u32; 2],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf class counts for a sample; left branch takes value <= threshold.
    pub fn leaf_counts(&self, x: ArrayView1<f64>) -> [u32; 2] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Majority-vote class of the reached leaf (ties go to class 0).
    pub fn vote(&self, x: ArrayView1<f64>) -> u8 {
        let c = self.leaf_counts(x);
        u8::from(c[1] > c[0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
    /// Out-of-bag misclassification rate over samples with at least one
    /// out-of-bag tree, None when every sample landed in every bag.
    pub oob_error: Option<f64>,
}

fn class_counts(y: &[u8], idx: &[usize]) -> [u32; 2] {
    let mut c = [0u32; 2];
    for &i in idx {
        c[y[i] as usize] += 1;
    }
    c
}

fn gini_of(c: [u32; 2]) -> f64 {
    let t = (c[0] + c[1]) as f64;
    if t == 0.0 {
        return 0.0;
    }
    1.0 - (c[0] as f64 / t).powi(2) - (c[1] as f64 / t).powi(2)
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

/// Exhaustive threshold scan over the given features: candidate thresholds
/// are midpoints of consecutive sorted unique values; the split maximizing
/// the weighted Gini decrease wins, honoring min_leaf on both children.
fn best_split(
    x: &Array2<f64>,
    y: &[u8],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<SplitChoice> {
    let parent_counts = class_counts(y, idx);
    let parent_gini = gini_of(parent_counts);
    let n = idx.len() as f64;
    let mut best: Option<SplitChoice> = None;

    for &feat in features {
        let mut vals: Vec<(f64, u8)> = idx.iter().map(|&i| (x[[i, feat]], y[i])).collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0u32; 2];
        let mut right = parent_counts;
        for s in 0..vals.len() - 1 {
            left[vals[s].1 as usize] += 1;
            right[vals[s].1 as usize] -= 1;
            if vals[s].0 == vals[s + 1].0 {
                continue; // no boundary between equal values
            }
            let n_left = s + 1;
            let n_right = vals.len() - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let decrease = parent_gini
                - (n_left as f64 / n) * gini_of(left)
                - (n_right as f64 / n) * gini_of(right);
            if decrease > best.as_ref().map_or(1e-12, |b| b.decrease) {
                best = Some(SplitChoice {
                    feature: feat,
                    threshold: (vals[s].0 + vals[s + 1].0) / 2.0,
                    decrease,
                });
            }
        }
    }
    best
}

fn grow(
    x: &Array2<f64>,
    y: &[u8],
    idx: &[usize],
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
    n_features_per_split: usize,
    rng: &mut impl Rng,
    nodes: &mut Vec<Node>,
) -> usize {
    let counts = class_counts(y, idx);
    let make_leaf = |nodes: &mut Vec<Node>| {
        nodes.push(Node::Leaf { counts });
        nodes.len() - 1
    };

    if depth >= max_depth || counts[0] == 0 || counts[1] == 0 || idx.len() < 2 * min_leaf {
        return make_leaf(nodes);
    }

    let d = x.ncols();
    let mut all: Vec<usize> = (0..d).collect();
    all.shuffle(rng);
    all.truncate(n_features_per_split.min(d));
    all.sort_unstable(); // scan features in a stable order

    let Some(split) = best_split(x, y, idx, &all, min_leaf) else {
        return make_leaf(nodes);
    };

    let (l_idx, r_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| x[[i, split.feature]] <= split.threshold);

    let at = nodes.len();
    nodes.push(Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: 0,
        right: 0,
    });
    let left = grow(
        x, y, &l_idx, depth + 1, max_depth, min_leaf, n_features_per_split, rng, nodes,
    );
    let right = grow(
        x, y, &r_idx, depth + 1, max_depth, min_leaf, n_features_per_split, rng, nodes,
    );
    if let Node::Split {
        left: l, right: r, ..
    } = &mut nodes[at]
    {
        *l = left;
        *r = right;
    }
    at
}

/// Train a forest of `n_trees` on bootstrap resamples with sqrt(d) feature
/// subsampling per split. Deterministic given the seed.
pub fn rf_train(
    x: &Array2<f64>,
    y: &[u8],
    n_trees: usize,
    max_depth: usize,
    min_leaf: usize,
    seed: u64,
) -> Result<RfModel> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::invalid_input("rf_train: feature/label length mismatch"));
    }
    if n < min_leaf.max(1) {
        return Err(Error::invalid_input("rf_train: fewer samples than min_leaf"));
    }
    if n_trees == 0 {
        return Err(Error::invalid_input("rf_train: need at least one tree"));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::invalid_input("rf_train: labels must be 0/1"));
    }
    let min_leaf = min_leaf.max(1);
    let n_features_per_split = ((x.ncols() as f64).sqrt().floor() as usize).max(1);

    let mut trees = Vec::with_capacity(n_trees);
    let mut in_bag: Vec<Vec<bool>> = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let mut rng = derive_rng(seed, stream::BOOTSTRAP, t as u64);
        let mut bag = vec![false; n];
        let idx: Vec<usize> = (0..n)
            .map(|_| {
                let i = rng.gen_range(0..n);
                bag[i] = true;
                i
            })
            .collect();
        let mut nodes = Vec::new();
        grow(
            x,
            y,
            &idx,
            0,
            max_depth,
            min_leaf,
            n_features_per_split,
            &mut rng,
            &mut nodes,
        );
        trees.push(Tree { nodes });
        in_bag.push(bag);
    }

    // Out-of-bag error.
    let mut wrong = 0usize;
    let mut counted = 0usize;
    for i in 0..n {
        let mut votes = [0u32; 2];
        for (t, tree) in trees.iter().enumerate() {
            if !in_bag[t][i] {
                votes[tree.vote(x.row(i)) as usize] += 1;
            }
        }
        if votes[0] + votes[1] > 0 {
            counted += 1;
            let pred = u8::from(votes[1] > votes[0]);
            if pred != y[i] {
                wrong += 1;
            }
        }
    }
    let oob_error = (counted > 0).then(|| wrong as f64 / counted as f64);

    Ok(RfModel {
        trees,
        max_depth,
        min_leaf,
        seed,
        oob_error,
    })
}

/// Fraction of trees voting class 1.
pub fn rf_score(model: &RfModel, x: ArrayView1<f64>) -> f64 {
    let ones: usize = model
        .trees
        .iter()
        .map(|t| usize::from(t.vote(x) == 1))
        .sum();
    ones as f64 / model.trees.len() as f64
}

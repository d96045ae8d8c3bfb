//! Classic ML baselines over the hand-crafted feature vectors: a soft-margin
//! SVM trained with sequential minimal optimization and a random forest with
//! Gini splits, plus k-fold utilities and small hyperparameter grids.

mod forest;
mod svm;

pub use forest::{rf_score, rf_train, Node as TreeNode, RfModel, Tree};
pub use svm::{dual_objective, svm_score, svm_train, Kernel, SvmModel};

use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream};
use rand::seq::SliceRandom;

/// Gini impurity 1 - sum(p_z^2) of a class-count vector.
pub fn gini(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid_input("gini: all-zero counts"));
    }
    let t = total as f64;
    Ok(1.0 - class_counts
        .iter()
        .map(|&c| (c as f64 / t).powi(2))
        .sum::<f64>())
}

/// Shuffled k-fold splits of 0..n: disjoint validation folds covering every
/// index, sizes differing by at most one. Returns (train, validation) pairs.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::invalid_input("kfold: k must be >= 2"));
    }
    if k > n {
        return Err(Error::invalid_input("kfold: k must not exceed n"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = derive_rng(seed, stream::KFOLD, 0);
    order.shuffle(&mut rng);

    let base = n / k;
    let extra = n % k;
    let mut splits = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let len = base + usize::from(fold < extra);
        let validation: Vec<usize> = order[start..start + len].to_vec();
        let train: Vec<usize> = order[..start]
            .iter()
            .chain(order[start + len..].iter())
            .copied()
            .collect();
        splits.push((train, validation));
        start += len;
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_reference_values() {
        assert_eq!(gini(&[10, 0]).unwrap(), 0.0);
        assert_eq!(gini(&[5, 5]).unwrap(), 0.5);
        assert!((gini(&[3, 1]).unwrap() - 0.375).abs() < 1e-15);
        assert!(gini(&[0, 0]).is_err());
    }

    #[test]
    fn kfold_shapes_and_coverage() {
        let splits = kfold(10, 5, 3).unwrap();
        assert_eq!(splits.len(), 5);
        let mut all: Vec<usize> = Vec::new();
        for (train, val) in &splits {
            assert_eq!(val.len(), 2);
            assert_eq!(train.len(), 8);
            all.extend(val);
        }
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_uneven_sizes_differ_by_one() {
        let splits = kfold(11, 3, 0).unwrap();
        let sizes: Vec<usize> = splits.iter().map(|(_, v)| v.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 11);
        assert!(sizes.iter().all(|&s| s == 3 || s == 4));
    }

    #[test]
    fn kfold_is_seeded() {
        assert_eq!(kfold(20, 4, 9).unwrap(), kfold(20, 4, 9).unwrap());
        assert_ne!(kfold(20, 4, 9).unwrap(), kfold(20, 4, 10).unwrap());
    }

    #[test]
    fn kfold_rejects_bad_k() {
        assert!(kfold(5, 1, 0).is_err());
        assert!(kfold(5, 6, 0).is_err());
    }
}

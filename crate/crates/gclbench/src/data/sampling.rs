//! Deterministic subsampling and stratified fold assignment.

use rand::seq::SliceRandom;

use super::graph::FoldAssignment;
use super::{DataError, Result};
use crate::rng::RngFactory;

/// Choose `floor(fraction * n)` indices (at least one) from `indices`
/// uniformly without replacement, returned ascending.
///
/// Randomness comes from the factory's `"subsample"` stream, so the result
/// is a pure function of (indices, fraction, seed, run label).
pub fn subsample(indices: &[usize], fraction: f64, factory: &RngFactory) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DataError::BadFraction(fraction));
    }
    if indices.is_empty() {
        return Err(DataError::EmptyTarget);
    }
    let n = indices.len();
    let amount = ((fraction * n as f64).floor() as usize).clamp(1, n);
    let mut rng = factory.stream("subsample");
    let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, n, amount)
        .into_iter()
        .map(|i| indices[i])
        .collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Stratified K-fold assignment: within each class, indices are shuffled by
/// the factory's `"folds"` stream and dealt round-robin to the K folds.
///
/// Every class must have at least K members.
pub fn stratified_kfold(labels: &[usize], k: usize, factory: &RngFactory) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(DataError::BadFoldCount(k));
    }
    let num_classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = factory.stream("folds");
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(DataError::ClassTooSmall { class, count: members.len(), k });
        }
        members.shuffle(&mut rng);
        for (pos, &idx) in members.iter().enumerate() {
            folds[pos % k].push(idx);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldAssignment::new(folds, factory.global_seed()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factory(seed: u64) -> RngFactory {
        RngFactory::new(seed, "test")
    }

    #[test]
    fn full_fraction_returns_everything() {
        let idx: Vec<usize> = (10..20).collect();
        assert_eq!(subsample(&idx, 1.0, &factory(0)).unwrap(), idx);
    }

    #[test]
    fn half_of_thousand_is_five_hundred_distinct() {
        let idx: Vec<usize> = (0..1000).collect();
        let s = subsample(&idx, 0.5, &factory(3)).unwrap();
        assert_eq!(s.len(), 500);
        let mut dedup = s.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 500);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let idx: Vec<usize> = (0..1000).collect();
        let a = subsample(&idx, 0.5, &factory(7)).unwrap();
        let b = subsample(&idx, 0.5, &factory(7)).unwrap();
        assert_eq!(a, b);
        let mut all_same = true;
        for seed in 8..13 {
            if subsample(&idx, 0.5, &factory(seed)).unwrap() != a {
                all_same = false;
            }
        }
        assert!(!all_same);
    }

    #[test]
    fn tiny_fraction_keeps_at_least_one() {
        let idx: Vec<usize> = (0..10).collect();
        assert_eq!(subsample(&idx, 1e-6, &factory(0)).unwrap().len(), 1);
    }

    #[test]
    fn bad_fractions_rejected() {
        let idx = vec![0usize];
        assert!(matches!(subsample(&idx, 0.0, &factory(0)), Err(DataError::BadFraction(_))));
        assert!(matches!(subsample(&idx, 1.5, &factory(0)), Err(DataError::BadFraction(_))));
        assert!(matches!(subsample(&[], 0.5, &factory(0)), Err(DataError::EmptyTarget)));
    }

    #[test]
    fn sixty_forty_splits_evenly_over_ten_folds() {
        let labels: Vec<usize> =
            (0..100).map(|i| if i < 60 { 0 } else { 1 }).collect();
        let folds = stratified_kfold(&labels, 10, &factory(1)).unwrap();
        for f in 0..10 {
            let held = folds.held_out(f);
            let zeros = held.iter().filter(|&&i| labels[i] == 0).count();
            let ones = held.len() - zeros;
            assert_eq!((zeros, ones), (6, 4));
        }
    }

    #[test]
    fn folds_partition_the_index_set() {
        let labels: Vec<usize> = (0..97).map(|i| i % 3).collect();
        let folds = stratified_kfold(&labels, 5, &factory(9)).unwrap();
        let mut seen = vec![false; labels.len()];
        for f in 0..folds.k() {
            for &i in folds.held_out(f) {
                assert!(!seen[i], "index {} in two folds", i);
                seen[i] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn k_of_one_is_rejected() {
        assert!(matches!(stratified_kfold(&[0, 1], 1, &factory(0)), Err(DataError::BadFoldCount(1))));
    }

    #[test]
    fn small_class_is_named_in_error() {
        let labels = vec![0, 0, 0, 0, 1];
        match stratified_kfold(&labels, 3, &factory(0)) {
            Err(DataError::ClassTooSmall { class, count, k }) => {
                assert_eq!((class, count, k), (1, 1, 3));
            }
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn train_indices_complement_held_out() {
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let folds = stratified_kfold(&labels, 4, &factory(2)).unwrap();
        let held: Vec<usize> = folds.held_out(0).to_vec();
        let train = folds.train_indices(0);
        assert_eq!(held.len() + train.len(), labels.len());
        assert!(held.iter().all(|i| !train.contains(i)));
    }
}

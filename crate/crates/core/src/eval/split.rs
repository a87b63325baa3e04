use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Row indices per class, each class sorted by id and then shuffled with a
/// class-specific seed.
fn shuffled_classes(ids: &[String], labels: &[usize], seed: u64, what: &str) -> Result<BTreeMap<usize, Vec<usize>>> {
    if ids.len() != labels.len() {
        return Err(Error::data(format!("{what}: {} ids but {} labels", ids.len(), labels.len())));
    }
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::data(format!("{what}: duplicate id {id:?}")));
        }
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    for (c, rows) in by_class.iter_mut() {
        rows.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("{what}.{c}")));
        rows.shuffle(&mut rng);
    }
    Ok(by_class)
}

fn sorted_by_id(ids: &[String], mut rows: Vec<usize>) -> Vec<usize> {
    rows.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    rows
}

/// Per-class proportional train/test split. Each class puts
/// `round(train_frac * n)` rows in train, clamped so both sides get at least
/// one. Returned indices are ordered by id.
pub fn stratified_split(
    ids: &[String],
    labels: &[usize],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::config(format!("split: train_frac must be in (0, 1), got {train_frac}")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, rows) in shuffled_classes(ids, labels, seed, "split")? {
        let n = rows.len();
        if n < 2 {
            return Err(Error::data(format!("split: class {c} has a single sample")));
        }
        let k = ((train_frac * n as f64).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&rows[..k]);
        test.extend_from_slice(&rows[k..]);
    }
    Ok((sorted_by_id(ids, train), sorted_by_id(ids, test)))
}

/// `k` disjoint stratified folds. Within a class rows are dealt round-robin,
/// and each class starts where the previous one stopped so total fold sizes
/// stay within one of each other.
pub fn kfold(ids: &[String], labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::config(format!("kfold: k must be at least 2, got {k}")));
    }
    if ids.len() < k {
        return Err(Error::data(format!("kfold: {} samples cannot fill {k} folds", ids.len())));
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (_, rows) in shuffled_classes(ids, labels, seed, "kfold")? {
        for r in rows {
            folds[next].push(r);
            next = (next + 1) % k;
        }
    }
    Ok(folds.into_iter().map(|f| sorted_by_id(ids, f)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn balanced(per_class: usize) -> (Vec<String>, Vec<usize>) {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for c in 0..10 {
            for j in 0..per_class {
                ids.push(format!("R{c:02}{j:04}"));
                labels.push(c);
            }
        }
        (ids, labels)
    }

    fn class_sizes(rows: &[usize], labels: &[usize]) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for &r in rows {
            *m.entry(labels[r]).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn eighty_twenty_per_class() {
        let (ids, labels) = balanced(100);
        let (train, test) = stratified_split(&ids, &labels, 0.8, 1).unwrap();
        assert!(class_sizes(&train, &labels).values().all(|&n| n == 80));
        assert!(class_sizes(&test, &labels).values().all(|&n| n == 20));
        let all: BTreeSet<usize> = train.iter().chain(&test).copied().collect();
        assert_eq!(all.len(), 1000);
    }

    #[test]
    fn seeds_change_membership_not_sizes() {
        let (ids, labels) = balanced(30);
        let (a, _) = stratified_split(&ids, &labels, 0.8, 1).unwrap();
        let (b, _) = stratified_split(&ids, &labels, 0.8, 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(class_sizes(&a, &labels), class_sizes(&b, &labels));
    }

    #[test]
    fn singleton_class_is_rejected() {
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert!(stratified_split(&ids, &[0, 0, 1], 0.8, 0).is_err());
        assert!(stratified_split(&ids, &[0, 0, 0], 1.0, 0).is_err());
        assert!(stratified_split(&ids, &[0, 0], 0.5, 0).is_err());
        let dup: Vec<String> = ["a", "a"].iter().map(|s| s.to_string()).collect();
        assert!(stratified_split(&dup, &[0, 0], 0.5, 0).is_err());
    }

    #[test]
    fn folds_partition_and_balance() {
        let (ids, mut labels) = balanced(23);
        labels[0] = 3;
        let folds = kfold(&ids, &labels, 5, 4).unwrap();
        let all: BTreeSet<usize> = folds.iter().flatten().copied().collect();
        assert_eq!(all.len(), ids.len());
        assert_eq!(folds.iter().map(Vec::len).sum::<usize>(), ids.len());
        for c in 0..10 {
            let sizes: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&r| labels[r] == c).count()).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        assert_eq!(folds, kfold(&ids, &labels, 5, 4).unwrap());
        assert!(kfold(&ids, &labels, 1, 4).is_err());
        assert!(kfold(&ids[..3], &labels[..3], 5, 4).is_err());
    }

    proptest! {
        #[test]
        fn split_ignores_input_order(seed in 0u64..1000, rot in 0usize..60) {
            let (ids, labels) = balanced(6);
            let n = ids.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let ids2: Vec<String> = perm.iter().map(|&i| ids[i].clone()).collect();
            let labels2: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
            let names = |ids: &[String], rows: Vec<usize>| rows.into_iter().map(|r| ids[r].clone()).collect::<Vec<_>>();
            let (a, _) = stratified_split(&ids, &labels, 0.7, seed).unwrap();
            let (b, _) = stratified_split(&ids2, &labels2, 0.7, seed).unwrap();
            prop_assert_eq!(names(&ids, a), names(&ids2, b));
            let fa: Vec<Vec<String>> = kfold(&ids, &labels, 3, seed).unwrap().into_iter().map(|f| names(&ids, f)).collect();
            let fb: Vec<Vec<String>> = kfold(&ids2, &labels2, 3, seed).unwrap().into_iter().map(|f| names(&ids2, f)).collect();
            prop_assert_eq!(fa, fb);
        }
    }
}

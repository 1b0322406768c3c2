//! Orderings of edge subsets: Kendall-Tau distance, adjacency constraints
//! derived from future contractions, and the embedding trees built from an
//! ordering.

mod constraint;
mod embedding;

pub use constraint::{
    brute_force_min_distance, build_constraint_tree, constrained_orderings, ordering_under_constraint, satisfies, ConstraintNode,
    ConstraintTree, CtChild, NodeKind,
};
pub use embedding::{build_embedding_tree, Ansatz, Child, EmbeddingTree, TreeNode};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Number of pairs ordered differently by `sigma` and `tau`, which is also the
/// fewest adjacent transpositions turning one into the other.
pub fn kendall_tau<T: Ord + Copy>(sigma: &[T], tau: &[T]) -> Result<u64> {
    let rank: BTreeMap<T, usize> = tau.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    if rank.len() != tau.len() || sigma.len() != tau.len() {
        return Err(Error::OrderingMismatch);
    }
    let mut seq = Vec::with_capacity(sigma.len());
    for x in sigma {
        seq.push(*rank.get(x).ok_or(Error::OrderingMismatch)?);
    }
    let mut seen = vec![false; seq.len()];
    for &r in &seq {
        if std::mem::replace(&mut seen[r], true) {
            return Err(Error::OrderingMismatch);
        }
    }
    Ok(count_inversions(&mut seq))
}

fn count_inversions(v: &mut [usize]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = count_inversions(&mut v[..mid]) + count_inversions(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[i] <= v[j] {
            merged.push(v[i]);
            i += 1;
        } else {
            merged.push(v[j]);
            count += (mid - i) as u64;
            j += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..]);
    v.copy_from_slice(&merged);
    count
}

/// Orderings visited by adjacent swaps sorting `from` into `to`, one per swap,
/// starting after `from` and ending at `to`. Its length is the Kendall-Tau
/// distance.
pub fn bubble_path<T: Ord + Copy>(from: &[T], to: &[T]) -> Result<Vec<Vec<T>>> {
    kendall_tau(from, to)?;
    let rank: BTreeMap<T, usize> = to.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let mut cur = from.to_vec();
    let mut out = Vec::new();
    // Each pass bubbles the largest remaining target rank into place.
    for end in (1..cur.len()).rev() {
        for i in 0..end {
            if rank[&cur[i]] > rank[&cur[i + 1]] {
                cur.swap(i, i + 1);
                out.push(cur.clone());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(kendall_tau(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0);
        assert_eq!(kendall_tau(&[1, 2, 3], &[3, 2, 1]).unwrap(), 3);
        assert_eq!(kendall_tau(&[1, 3, 2], &[1, 2, 3]).unwrap(), 1);
        assert_eq!(kendall_tau(&[1, 2, 3, 4, 5], &[3, 4, 1, 2, 5]).unwrap(), 4);
    }

    #[test]
    fn different_sets_are_rejected() {
        assert!(kendall_tau(&[1, 2], &[1, 3]).is_err());
        assert!(kendall_tau(&[1, 1], &[1, 2]).is_err());
        assert!(kendall_tau(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn bubble_path_has_distance_many_steps() {
        let from = [4, 2, 0, 3, 1];
        let to = [0, 1, 2, 3, 4];
        let path = bubble_path(&from, &to).unwrap();
        assert_eq!(path.len() as u64, kendall_tau(&from, &to).unwrap());
        assert_eq!(path.last().unwrap(), &to.to_vec());
        let mut prev = from.to_vec();
        for p in &path {
            assert_eq!(kendall_tau(&prev, p).unwrap(), 1);
            prev = p.clone();
        }
    }
}

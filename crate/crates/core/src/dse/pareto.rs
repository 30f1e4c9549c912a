// SPDX-License-Identifier: Apache-2.0

//! Pareto dominance, the epsilon-dominance indicator and the archive of
//! non-dominated mappings.

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::mapping::Genotype;

/// Objective vector; every component is minimized.
pub type Objective = [f64; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("objective values must be positive, found {0}")]
    NonPositive(f64),
    #[error("front and reference set must be nonempty")]
    Empty,
    #[error("objective vectors differ in dimension")]
    Dimension,
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    assert_eq!(a.len(), b.len(), "objective vectors differ in dimension");
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Smallest `e` such that every reference point is covered by some front
/// point scaled by `1 - e`.
pub fn epsilon_dominance<F: AsRef<[f64]>, S: AsRef<[f64]>>(front: &[F], reference: &[S]) -> Result<f64, DomainError> {
    if front.is_empty() || reference.is_empty() {
        return Err(DomainError::Empty);
    }
    let dim = front[0].as_ref().len();
    for v in front.iter().map(AsRef::as_ref).chain(reference.iter().map(AsRef::as_ref)) {
        if v.len() != dim {
            return Err(DomainError::Dimension);
        }
        if let Some(&bad) = v.iter().find(|&&x| x.is_nan() || x <= 0.0) {
            return Err(DomainError::NonPositive(bad));
        }
    }
    let mut eps = 0.0f64;
    for s in reference {
        let s = s.as_ref();
        let best = front
            .iter()
            .map(|f| {
                f.as_ref()
                    .iter()
                    .zip(s)
                    .map(|(fo, so)| (1.0 - so / fo).max(0.0))
                    .fold(0.0f64, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        eps = eps.max(best);
    }
    Ok(eps)
}

/// Indices of the non-dominated vectors, keeping the first of equal ones.
pub fn nondominated<V: AsRef<[f64]>>(points: &[V]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let p = points[i].as_ref();
            !points.iter().enumerate().any(|(j, q)| {
                let q = q.as_ref();
                dominates(q, p) || (j < i && q == p)
            })
        })
        .collect()
}

pub(crate) fn cmp_vec(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArchiveEntry {
    pub objectives: Objective,
    pub genotype: Genotype,
}

/// Mutually non-dominated feasible mappings, at most one per objective
/// vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts unless dominated or already present; evicts entries the new
    /// point dominates. Returns whether it was inserted.
    pub fn insert(&mut self, objectives: Objective, genotype: Genotype) -> bool {
        if self
            .entries
            .iter()
            .any(|e| e.objectives == objectives || dominates(&e.objectives, &objectives))
        {
            return false;
        }
        self.entries.retain(|e| !dominates(&objectives, &e.objectives));
        self.entries.push(ArchiveEntry { objectives, genotype });
        true
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objectives(&self) -> Vec<Objective> {
        self.entries.iter().map(|e| e.objectives).collect()
    }

    /// Entries ordered by objective vector.
    pub fn sorted(&self) -> Vec<&ArchiveEntry> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by(|a, b| cmp_vec(&a.objectives, &b.objectives));
        v
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn is_mutually_nondominated(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, a)| {
            self.entries
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || (!dominates(&a.objectives, &b.objectives) && a.objectives != b.objectives))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]));
        assert!(!dominates(&[1.0, 2.0, 1.0], &[2.0, 1.0, 1.0]));
        assert!(!dominates(&[1.0, 2.0, 1.0], &[1.0, 2.0, 1.0]));
    }

    /// Smallest feasible epsilon by bisection on the definition itself.
    fn bisect(front: &[Vec<f64>], reference: &[Vec<f64>]) -> f64 {
        let covered = |e: f64| {
            reference.iter().all(|s| {
                front.iter().any(|f| f.iter().zip(s).all(|(fo, so)| (1.0 - e) * fo <= *so + 1e-12))
            })
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        if covered(0.0) {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = (lo + hi) / 2.0;
            if covered(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn epsilon_examples() {
        let f = vec![vec![1.0, 2.0], vec![3.0, 0.5]];
        assert_eq!(epsilon_dominance(&f, &f).unwrap(), 0.0);
        assert_eq!(epsilon_dominance(&[vec![2.0, 2.0]], &[vec![1.0, 1.0]]).unwrap(), 0.5);
        let s = vec![vec![1.0, 4.0], vec![4.0, 1.0]];
        let e = epsilon_dominance(&[vec![2.0, 2.0]], &s).unwrap();
        assert_eq!(e, 0.5);
        assert!((bisect(&[vec![2.0, 2.0]], &s) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn epsilon_domain() {
        assert!(matches!(
            epsilon_dominance(&[vec![0.0, 1.0]], &[vec![1.0, 1.0]]),
            Err(DomainError::NonPositive(_))
        ));
        let empty: Vec<Vec<f64>> = vec![];
        assert_eq!(epsilon_dominance(&empty, &[vec![1.0]]), Err(DomainError::Empty));
    }

    #[test]
    fn archive_keeps_front() {
        let g = Genotype { binding: vec![], reserved_cores: vec![], reserved_tiles: vec![] };
        let mut a = ParetoArchive::new();
        assert!(a.insert([2.0, 2.0, 2.0], g.clone()));
        assert!(!a.insert([2.0, 2.0, 2.0], g.clone()));
        assert!(!a.insert([3.0, 2.0, 2.0], g.clone()));
        assert!(a.insert([1.0, 3.0, 2.0], g.clone()));
        assert!(a.insert([1.0, 1.0, 1.0], g.clone()));
        assert_eq!(a.objectives(), vec![[1.0, 1.0, 1.0]]);
    }

    fn pts(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.1f64..10.0, 3), 1..n)
    }

    proptest! {
        #[test]
        fn epsilon_matches_bisection(f in pts(6), s in pts(6)) {
            let e = epsilon_dominance(&f, &s).unwrap();
            prop_assert!((e - bisect(&f, &s)).abs() < 1e-6);
            prop_assert!((0.0..1.0).contains(&e));
        }

        #[test]
        fn epsilon_monotone(f in pts(6), s in pts(6), extra in pts(4)) {
            let e = epsilon_dominance(&f, &s).unwrap();
            let mut bigger_f = f.clone();
            bigger_f.extend(extra.iter().cloned());
            prop_assert!(epsilon_dominance(&bigger_f, &s).unwrap() <= e);
            let mut bigger_s = s.clone();
            bigger_s.extend(extra);
            prop_assert!(epsilon_dominance(&f, &bigger_s).unwrap() >= e);
        }

        #[test]
        fn archive_invariant(points in pts(40)) {
            let g = Genotype { binding: vec![], reserved_cores: vec![], reserved_tiles: vec![] };
            let mut a = ParetoArchive::new();
            for p in &points {
                a.insert([p[0], p[1], p[2]], g.clone());
                prop_assert!(a.is_mutually_nondominated());
            }
            let nd = nondominated(&points);
            let mut want: Vec<Vec<f64>> = nd.iter().map(|&i| points[i].clone()).collect();
            let mut got: Vec<Vec<f64>> = a.objectives().iter().map(|o| o.to_vec()).collect();
            want.sort_by(|a, b| cmp_vec(a, b));
            got.sort_by(|a, b| cmp_vec(a, b));
            prop_assert_eq!(got, want);
        }
    }
}

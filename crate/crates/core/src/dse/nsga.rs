// SPDX-License-Identifier: Apache-2.0

//! Non-dominated sorting, crowding distance and survivor selection.

use std::cmp::Ordering;

use super::pareto::{dominates, Objective};

/// Front index per point; `None` entries (infeasible) share the rank after
/// the last front.
pub(crate) fn ranks(points: &[Option<Objective>]) -> Vec<usize> {
    let n = points.len();
    let feasible: Vec<usize> = (0..n).filter(|&i| points[i].is_some()).collect();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, &i) in feasible.iter().enumerate() {
        for &j in &feasible[a + 1..] {
            let (pi, pj) = (points[i].unwrap(), points[j].unwrap());
            if dominates(&pi, &pj) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&pj, &pi) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut rank = vec![usize::MAX; n];
    let mut current: Vec<usize> = feasible.iter().copied().filter(|&i| dominated_by[i] == 0).collect();
    let mut r = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = r;
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        current = next;
        r += 1;
    }
    for x in rank.iter_mut().filter(|x| **x == usize::MAX) {
        *x = r;
    }
    rank
}

/// Crowding distance within each front; infeasible points get zero.
pub(crate) fn crowding(points: &[Option<Objective>], rank: &[usize]) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0f64; n];
    let max_rank = rank.iter().copied().max().unwrap_or(0);
    for r in 0..=max_rank {
        let front: Vec<usize> = (0..n).filter(|&i| rank[i] == r && points[i].is_some()).collect();
        if front.is_empty() {
            continue;
        }
        for o in 0..3 {
            let mut sorted = front.clone();
            sorted.sort_by(|&a, &b| points[a].unwrap()[o].total_cmp(&points[b].unwrap()[o]).then(a.cmp(&b)));
            let lo = points[sorted[0]].unwrap()[o];
            let hi = points[*sorted.last().unwrap()].unwrap()[o];
            dist[sorted[0]] = f64::INFINITY;
            dist[*sorted.last().unwrap()] = f64::INFINITY;
            if hi > lo {
                for k in 1..sorted.len().saturating_sub(1) {
                    let gap = points[sorted[k + 1]].unwrap()[o] - points[sorted[k - 1]].unwrap()[o];
                    dist[sorted[k]] += gap / (hi - lo);
                }
            }
        }
    }
    dist
}

/// Better rank first, then larger crowding distance, then smaller digest.
pub(crate) fn better(rank: &[usize], crowd: &[f64], digest: &[String], a: usize, b: usize) -> Ordering {
    rank[a]
        .cmp(&rank[b])
        .then_with(|| crowd[b].total_cmp(&crowd[a]))
        .then_with(|| digest[a].cmp(&digest[b]))
}

/// Indices of the `keep` survivors, best first.
pub(crate) fn select(points: &[Option<Objective>], digest: &[String], keep: usize) -> Vec<usize> {
    let rank = ranks(points);
    let crowd = crowding(points, &rank);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| better(&rank, &crowd, digest, a, b));
    order.truncate(keep);
    order
}

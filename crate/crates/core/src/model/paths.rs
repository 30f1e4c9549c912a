// SPDX-License-Identifier: Apache-2.0

//! End-to-end paths through the application graph.

use std::collections::HashMap;

use thiserror::Error;

use super::ApplicationGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathNode {
    Task(usize),
    Message(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("application graph contains a cycle through task {0}")]
    Cycle(String),
    #[error("unknown task {0}")]
    UnknownTask(String),
}

/// Task-level successor lists: for every task, the `(message, consumer)`
/// pairs leaving it.
pub(crate) fn successors(app: &ApplicationGraph) -> Result<Vec<Vec<(usize, usize)>>, PathError> {
    let idx: HashMap<&str, usize> =
        app.tasks.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let lookup = |id: &str| idx.get(id).copied().ok_or_else(|| PathError::UnknownTask(id.to_string()));
    let mut succ = vec![Vec::new(); app.tasks.len()];
    for (mi, m) in app.messages.iter().enumerate() {
        let src = lookup(&m.src)?;
        for d in &m.dst {
            succ[src].push((mi, lookup(d)?));
        }
    }
    Ok(succ)
}

/// Tasks in a topological order (Kahn, lowest index first).
pub(crate) fn topological_tasks(app: &ApplicationGraph) -> Result<Vec<usize>, PathError> {
    let succ = successors(app)?;
    let n = app.tasks.len();
    let mut indeg = vec![0usize; n];
    for s in &succ {
        for &(_, d) in s {
            indeg[d] += 1;
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&t| indeg[t] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(t) = ready.pop_first() {
        order.push(t);
        for &(_, d) in &succ[t] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                ready.insert(d);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&t| indeg[t] > 0).expect("some task left");
        return Err(PathError::Cycle(app.tasks[stuck].id.clone()));
    }
    Ok(order)
}

/// All maximal source-to-sink chains, alternating tasks and messages. A task
/// without predecessors and successors forms a path of its own.
pub fn end_to_end_paths(app: &ApplicationGraph) -> Result<Vec<Vec<PathNode>>, PathError> {
    topological_tasks(app)?;
    let succ = successors(app)?;
    let mut has_pred = vec![false; app.tasks.len()];
    for s in &succ {
        for &(_, d) in s {
            has_pred[d] = true;
        }
    }
    let mut paths = Vec::new();
    let mut stack = Vec::new();
    for src in (0..app.tasks.len()).filter(|&t| !has_pred[t]) {
        stack.push(PathNode::Task(src));
        walk(src, &succ, &mut stack, &mut paths);
        stack.pop();
    }
    Ok(paths)
}

fn walk(t: usize, succ: &[Vec<(usize, usize)>], stack: &mut Vec<PathNode>, out: &mut Vec<Vec<PathNode>>) {
    if succ[t].is_empty() {
        out.push(stack.clone());
        return;
    }
    for &(m, d) in &succ[t] {
        stack.push(PathNode::Message(m));
        stack.push(PathNode::Task(d));
        walk(d, succ, stack, out);
        stack.pop();
        stack.pop();
    }
}

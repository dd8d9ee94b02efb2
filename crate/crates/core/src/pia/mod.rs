//! Phase interval analysis: a forward worklist fixpoint over the task graph.

pub mod lattice;

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

pub use lattice::{PhaseInterval, PiaLattice, DEFAULT_UPPER_BOUND};

use crate::taskgraph::{NodeId, TaskGraph, TgLoop};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PiaError {
    #[error("phase interval shrank from {from:?} to {to:?} across a loop iteration")]
    NegativeDelta { from: PhaseInterval, to: PhaseInterval },
    #[error("fixpoint not reached within {cap} node evaluations")]
    IterationCap { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiaResult {
    pub inputs: Vec<PhaseInterval>,
    pub outputs: Vec<PhaseInterval>,
    /// Node evaluations across all solves.
    pub iterations: usize,
}

impl PiaResult {
    /// Every phase the node can run in.
    pub fn span(&self, n: NodeId) -> PhaseInterval {
        self.inputs[n].join(self.outputs[n])
    }
}

/// Solve the graph. The root starts at `[0,0]`; loop headers with a known
/// trip count are summarized in closed form from the per-iteration growth of
/// their body, other headers are widened.
pub fn run_pia(g: &TaskGraph, lat: &PiaLattice) -> Result<PiaResult, PiaError> {
    let mut iterations = 0;
    let mut deltas = HashMap::new();
    let mut order: Vec<&TgLoop> = g.loops.iter().collect();
    order.sort_by_key(|l| l.body.len());
    for l in order {
        let sub = solve(g, lat, Some(l), &deltas)?;
        iterations += sub.iterations;
        let d = l.latches.iter().fold(PhaseInterval::BOTTOM, |acc, &x| acc.join(sub.outputs[x]));
        deltas.insert(l.header, if d.is_bottom() { PhaseInterval::point(0) } else { d });
    }
    let mut res = solve(g, lat, None, &deltas)?;
    res.iterations += iterations;
    Ok(res)
}

fn solve(
    g: &TaskGraph,
    lat: &PiaLattice,
    scope: Option<&TgLoop>,
    deltas: &HashMap<NodeId, PhaseInterval>,
) -> Result<PiaResult, PiaError> {
    let n = g.len();
    let member = |x: NodeId| scope.is_none_or(|l| l.body.contains(&x));
    let start = scope.map_or(g.root, |l| l.header);
    let headers: HashMap<NodeId, &TgLoop> = g.loops.iter().map(|l| (l.header, l)).collect();

    let mut inputs = vec![PhaseInterval::BOTTOM; n];
    let mut outputs = vec![PhaseInterval::BOTTOM; n];
    inputs[start] = PhaseInterval::point(0);
    outputs[start] = lat.transfer(&g.nodes[start], inputs[start]);

    let order: Vec<NodeId> = g.reverse_post_order().into_iter().filter(|&x| member(x)).collect();
    let mut queued = vec![false; n];
    let mut work: VecDeque<NodeId> = VecDeque::new();
    for &x in &order {
        queued[x] = true;
        work.push_back(x);
    }
    let cap = 16 * (n + 1) * (n + 1);
    let mut iterations = 0;

    while let Some(x) = work.pop_front() {
        queued[x] = false;
        if x == start {
            continue;
        }
        iterations += 1;
        if iterations > cap {
            return Err(PiaError::IterationCap { cap });
        }
        let preds = g.preds(x).iter().copied().filter(|&p| member(p));
        let new_in = match headers.get(&x) {
            Some(l) => match (l.trip_count, deltas.get(&x)) {
                (Some(tc), Some(&d)) => {
                    let entry = preds
                        .filter(|p| !l.body.contains(p))
                        .fold(PhaseInterval::BOTTOM, |acc, p| acc.join(outputs[p]));
                    if entry.is_bottom() {
                        entry
                    } else {
                        lat.accelerate_loop(entry, lat.add(entry, d), Some(tc))?
                    }
                }
                _ => {
                    let all = preds.fold(PhaseInterval::BOTTOM, |acc, p| acc.join(outputs[p]));
                    lat.widen(inputs[x], all, 0, lat.upper)
                }
            },
            None => preds.fold(PhaseInterval::BOTTOM, |acc, p| acc.join(outputs[p])),
        };
        let new_out = lat.transfer(&g.nodes[x], new_in);
        inputs[x] = new_in;
        if new_out != outputs[x] {
            outputs[x] = new_out;
            for &s in g.succs(x) {
                if member(s) && !queued[s] {
                    queued[s] = true;
                    work.push_back(s);
                }
            }
        }
    }
    Ok(PiaResult { inputs, outputs, iterations })
}

#[cfg(test)]
mod tests;

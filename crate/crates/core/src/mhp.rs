//! May-happen-in-parallel queries over a solved task graph.

use serde::Serialize;
use thiserror::Error;

use crate::pia::PiaResult;
use crate::taskgraph::{Guard, Multiplicity, NodeId, TaskGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MhpReason {
    PhaseOverlap,
    DisjointPhases,
    SameCriticalLock,
    BothMasterSameRegion,
    SingleInstanceSelf,
    /// Outside any team, or in different top-level teams.
    SequentialContext,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MhpVerdict {
    pub may_happen_in_parallel: bool,
    pub reason: MhpReason,
}

impl MhpVerdict {
    fn no(reason: MhpReason) -> Self {
        MhpVerdict { may_happen_in_parallel: false, reason }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MhpError {
    #[error("unknown task graph node {0}")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MhpOptions {
    /// With the engine off only team membership and single-instance
    /// self-pairs are considered.
    pub engine: bool,
}

impl Default for MhpOptions {
    fn default() -> Self {
        MhpOptions { engine: true }
    }
}

pub fn may_happen_in_parallel(
    u: NodeId,
    v: NodeId,
    g: &TaskGraph,
    pia: &PiaResult,
    opts: MhpOptions,
) -> Result<MhpVerdict, MhpError> {
    for n in [u, v] {
        if n >= g.len() || n >= pia.inputs.len() {
            return Err(MhpError::UnknownNode(n));
        }
    }
    let (a, b) = (&g.nodes[u], &g.nodes[v]);
    if u == v && a.multiplicity == Multiplicity::SingleInstance {
        return Ok(MhpVerdict::no(MhpReason::SingleInstanceSelf));
    }
    if a.team.is_none() || a.team != b.team {
        return Ok(MhpVerdict::no(MhpReason::SequentialContext));
    }
    if !opts.engine {
        return Ok(MhpVerdict { may_happen_in_parallel: true, reason: MhpReason::PhaseOverlap });
    }
    let shared_lock = a
        .guards
        .iter()
        .any(|g| matches!(g, Guard::CriticalBody(_)) && b.guards.contains(g));
    if shared_lock {
        return Ok(MhpVerdict::no(MhpReason::SameCriticalLock));
    }
    if a.guards.contains(&Guard::MasterBody) && b.guards.contains(&Guard::MasterBody) && a.region == b.region {
        return Ok(MhpVerdict::no(MhpReason::BothMasterSameRegion));
    }
    if pia.span(u).overlaps(pia.span(v)) {
        Ok(MhpVerdict { may_happen_in_parallel: true, reason: MhpReason::PhaseOverlap })
    } else {
        Ok(MhpVerdict::no(MhpReason::DisjointPhases))
    }
}

//! Memory access collection, data-sharing classification and race pairing.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::cfg::{var_key, AccessKind, Cfg, FrameId, Instr, LoopId, VarId};
use crate::frontend::ast::ClauseKind;
use crate::frontend::{AffineExpr, SourceLoc};
use crate::mhp::{may_happen_in_parallel, MhpOptions, MhpVerdict};
use crate::pia::{PhaseInterval, PiaResult};
use crate::taskgraph::{NodeId, ScopeKey, TaskGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SharingClass {
    Shared,
    Private,
    FirstPrivate,
    LastPrivate,
    ThreadPrivate,
    ReductionVar,
    LoopInduction,
}

impl SharingClass {
    /// Whether accesses of this class reach memory other threads see.
    pub fn is_racy(self) -> bool {
        matches!(self, SharingClass::Shared | SharingClass::ReductionVar)
    }
}

/// The worksharing loop whose iterations an access is split across.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DistributedLoop {
    pub cfg: usize,
    pub loop_id: LoopId,
    /// Subscript term key of the induction variable.
    pub var_key: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryAccess {
    pub cfg: usize,
    pub var: VarId,
    pub name: String,
    pub kind: AccessKind,
    pub subscript: Option<AffineExpr>,
    pub node: NodeId,
    pub loc: SourceLoc,
    pub sharing: SharingClass,
    /// Frame of the `reduction` clause for [`SharingClass::ReductionVar`].
    pub reduction: Option<ScopeKey>,
    pub atomic: bool,
    pub distributed: Option<DistributedLoop>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RaceKind {
    WriteWrite,
    WriteRead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaceReport {
    pub source: MemoryAccess,
    pub sink: MemoryAccess,
    pub source_phase: PhaseInterval,
    pub sink_phase: PhaseInterval,
    pub kind: RaceKind,
    pub verdict: MhpVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RaceError {
    #[error("{loc}: `{var}` appears in more than one data-sharing clause of the same directive")]
    ConflictingClauses { var: String, loc: SourceLoc },
}

/// Reject directives listing a variable in two data-sharing clauses.
/// `firstprivate` together with `lastprivate` is allowed.
pub fn check_clauses(cfg: &Cfg) -> Result<(), RaceError> {
    for fr in &cfg.frames {
        let mut seen: HashMap<VarId, &ClauseKind> = HashMap::new();
        for c in &fr.clauses {
            for (v, loc) in &c.vars {
                if let Some(prev) = seen.insert(*v, &c.kind) {
                    let pair = [prev, &c.kind];
                    let allowed = pair.contains(&&ClauseKind::FirstPrivate)
                        && pair.contains(&&ClauseKind::LastPrivate);
                    if !allowed && *prev != c.kind {
                        return Err(RaceError::ConflictingClauses { var: cfg.vars[*v].name.clone(), loc: loc.clone() });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Data-sharing class of `var` accessed under the directive context `ctx`
/// (outermost first), plus the frame of a governing `reduction` clause.
pub fn classify_sharing(cfg: &Cfg, var: VarId, ctx: &[FrameId]) -> (SharingClass, Option<FrameId>) {
    let info = &cfg.vars[var];
    for &f in ctx.iter().rev() {
        if info.decl_frames.contains(&f) {
            continue;
        }
        for c in &cfg.frames[f].clauses {
            if c.vars.iter().any(|(v, _)| *v == var) {
                return match c.kind {
                    ClauseKind::Shared => (SharingClass::Shared, None),
                    ClauseKind::Private => (SharingClass::Private, None),
                    ClauseKind::FirstPrivate => (SharingClass::FirstPrivate, None),
                    ClauseKind::LastPrivate => (SharingClass::LastPrivate, None),
                    ClauseKind::ThreadPrivate => (SharingClass::ThreadPrivate, None),
                    ClauseKind::Reduction(_) => (SharingClass::ReductionVar, Some(f)),
                    _ => unreachable!("only data-sharing clauses are kept on frames"),
                };
            }
        }
    }
    if info.threadprivate {
        return (SharingClass::ThreadPrivate, None);
    }
    let induction = ctx
        .iter()
        .filter_map(|&f| cfg.frames[f].loop_id)
        .any(|l| cfg.loops[l].var == var);
    if induction {
        return (SharingClass::LoopInduction, None);
    }
    match cfg.innermost_concurrency(ctx) {
        Some(f) if info.decl_frames.contains(&f) => (SharingClass::Private, None),
        _ => (SharingClass::Shared, None),
    }
}

fn distributed_loop(cfg: &Cfg, ci: usize, ctx: &[FrameId]) -> Option<DistributedLoop> {
    let l = ctx.iter().rev().find_map(|&f| {
        let fr = &cfg.frames[f];
        fr.kind.is_loop_construct().then_some(fr.loop_id).flatten()
    })?;
    let var = cfg.loops[l].var;
    Some(DistributedLoop { cfg: ci, loop_id: l, var_key: var_key(var, &cfg.vars[var].name) })
}

/// Every access of every block, tagged with its node and sharing class.
pub fn collect_accesses(cfgs: &[Cfg], g: &TaskGraph) -> Vec<MemoryAccess> {
    let nodes: HashMap<(usize, usize), NodeId> =
        g.nodes.iter().filter_map(|n| n.block.map(|b| (b, n.id))).collect();
    let mut out = Vec::new();
    for (ci, cfg) in cfgs.iter().enumerate() {
        for b in &cfg.blocks {
            let node = nodes[&(ci, b.id)];
            let distributed = distributed_loop(cfg, ci, &b.context);
            for i in &b.instrs {
                let Instr::Access(a) = i else { continue };
                let (sharing, red) = classify_sharing(cfg, a.var, &b.context);
                out.push(MemoryAccess {
                    cfg: ci,
                    var: a.var,
                    name: cfg.vars[a.var].name.clone(),
                    kind: a.kind,
                    subscript: a.subscript.clone(),
                    node,
                    loc: a.loc.clone(),
                    sharing,
                    reduction: red.map(|frame| ScopeKey { cfg: ci, frame }),
                    atomic: a.atomic,
                    distributed: distributed.clone(),
                });
            }
        }
    }
    out
}

/// Whether two subscripts of the same array can never name the same element
/// in concurrently running instances.
pub fn subscript_disjoint(a: &MemoryAccess, b: &MemoryAccess) -> bool {
    let (Some(sa), Some(sb)) = (&a.subscript, &b.subscript) else { return false };
    if let (Some(x), Some(y)) = (sa.as_constant(), sb.as_constant()) {
        return x != y;
    }
    let (Some(da), Some(db)) = (&a.distributed, &b.distributed) else { return false };
    if da != db {
        return false;
    }
    match (sa.as_unit_offset(), sb.as_unit_offset()) {
        (Some((va, ca)), Some((vb, cb))) => va == da.var_key && vb == da.var_key && ca == cb,
        _ => false,
    }
}

/// Candidate conflicting pairs that survive the sharing, atomicity, MHP and
/// subscript filters. One report per distinct (source, sink) location pair,
/// sorted by location.
pub fn detect_races(
    cfgs: &[Cfg],
    g: &TaskGraph,
    pia: &PiaResult,
    opts: MhpOptions,
) -> Result<Vec<RaceReport>, RaceError> {
    for cfg in cfgs {
        check_clauses(cfg)?;
    }
    let accesses = collect_accesses(cfgs, g);
    let mut by_var: BTreeMap<(usize, VarId), Vec<&MemoryAccess>> = BTreeMap::new();
    for a in accesses.iter().filter(|a| a.sharing.is_racy()) {
        by_var.entry((a.cfg, a.var)).or_default().push(a);
    }
    let mut seen = BTreeSet::new();
    let mut reports = Vec::new();
    for list in by_var.values() {
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i..] {
                if a.kind == AccessKind::Read && b.kind == AccessKind::Read {
                    continue;
                }
                if a.sharing == SharingClass::ReductionVar
                    && b.sharing == SharingClass::ReductionVar
                    && a.reduction == b.reduction
                {
                    continue;
                }
                if a.atomic && b.atomic {
                    continue;
                }
                let verdict = may_happen_in_parallel(a.node, b.node, g, pia, opts).expect("nodes of this graph");
                if !verdict.may_happen_in_parallel {
                    continue;
                }
                if subscript_disjoint(a, b) {
                    continue;
                }
                let (src, sink) = if (b.loc.line, b.loc.col) < (a.loc.line, a.loc.col) { (b, a) } else { (a, b) };
                if !seen.insert((src.loc.clone(), sink.loc.clone())) {
                    continue;
                }
                let kind = if a.kind == AccessKind::Write && b.kind == AccessKind::Write {
                    RaceKind::WriteWrite
                } else {
                    RaceKind::WriteRead
                };
                reports.push(RaceReport {
                    source: src.clone(),
                    sink: sink.clone(),
                    source_phase: pia.span(src.node),
                    sink_phase: pia.span(sink.node),
                    kind,
                    verdict,
                });
            }
        }
    }
    reports.sort_by(|x, y| (&x.source.loc, &x.sink.loc).cmp(&(&y.source.loc, &y.sink.loc)));
    Ok(reports)
}

#[cfg(test)]
mod tests;

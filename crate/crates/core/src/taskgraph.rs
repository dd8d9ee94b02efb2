//! Reduced task graph: one node per basic block plus a root `R` and a
//! terminal `T`, with bypass edges for threads that skip `single`, `master`
//! and `sections` bodies.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::cfg::{BlockId, BypassKind, Cfg, FrameId};
use crate::frontend::ast::DirectiveKind;
use crate::frontend::SourceLoc;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Multiplicity {
    SingleInstance,
    MultiInstance,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    MasterBody,
    SingleBody,
    /// Lock name; unnamed `critical` uses the empty string.
    CriticalBody(String),
    AtomicStmt,
}

/// A directive frame of a particular CFG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScopeKey {
    pub cfg: usize,
    pub frame: FrameId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TgNode {
    pub id: NodeId,
    pub name: String,
    /// `(cfg index, block)`; `None` for `R` and `T`.
    pub block: Option<(usize, BlockId)>,
    pub multiplicity: Multiplicity,
    pub is_barrier: bool,
    pub is_parallel_entry: bool,
    pub is_parallel_exit: bool,
    pub guards: BTreeSet<Guard>,
    /// Innermost enclosing `parallel`/`teams` region.
    pub region: Option<ScopeKey>,
    /// Outermost enclosing concurrency frame; nodes of different teams
    /// never run concurrently.
    pub team: Option<ScopeKey>,
    pub loc: Option<SourceLoc>,
}

impl TgNode {
    fn plain(id: NodeId, name: String) -> Self {
        TgNode {
            id,
            name,
            block: None,
            multiplicity: Multiplicity::SingleInstance,
            is_barrier: false,
            is_parallel_entry: false,
            is_parallel_exit: false,
            guards: BTreeSet::new(),
            region: None,
            team: None,
            loc: None,
        }
    }

    /// Whether the node moves every thread into a new phase.
    pub fn changes_phase(&self) -> bool {
        self.is_barrier || self.is_parallel_entry || self.is_parallel_exit
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TgLoop {
    pub header: NodeId,
    pub latches: Vec<NodeId>,
    /// Header, latches and every node between.
    pub body: BTreeSet<NodeId>,
    pub trip_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskGraph {
    pub nodes: Vec<TgNode>,
    pub edges: Vec<(NodeId, NodeId)>,
    pub root: NodeId,
    pub terminal: NodeId,
    pub loops: Vec<TgLoop>,
    succs: Vec<Vec<NodeId>>,
    preds: Vec<Vec<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskGraphError {
    #[error("{loc}: malformed directive nesting: {message}")]
    MalformedNesting { loc: SourceLoc, message: String },
}

impl Default for TaskGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl TaskGraph {
    /// A graph holding only the root `R`.
    pub fn new() -> Self {
        TaskGraph {
            nodes: vec![TgNode::plain(0, "R".into())],
            edges: Vec::new(),
            root: 0,
            terminal: 0,
            loops: Vec::new(),
            succs: vec![Vec::new()],
            preds: vec![Vec::new()],
        }
    }

    pub fn add_node(&mut self, name: impl Into<String>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(TgNode::plain(id, name.into()));
        self.succs.push(Vec::new());
        self.preds.push(Vec::new());
        id
    }

    pub fn add_terminal(&mut self) -> NodeId {
        let t = self.add_node("T");
        self.terminal = t;
        t
    }

    pub fn add_edge(&mut self, from: NodeId, to: NodeId) {
        if !self.succs[from].contains(&to) {
            self.edges.push((from, to));
            self.succs[from].push(to);
            self.preds[to].push(from);
        }
    }

    pub fn add_loop(&mut self, l: TgLoop) {
        self.loops.push(l);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn succs(&self, n: NodeId) -> &[NodeId] {
        &self.succs[n]
    }

    pub fn preds(&self, n: NodeId) -> &[NodeId] {
        &self.preds[n]
    }

    pub fn node_of_block(&self, cfg: usize, block: BlockId) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.block == Some((cfg, block)))
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Nodes in reverse post-order from the root; unreachable nodes follow
    /// in id order.
    pub fn reverse_post_order(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.len()];
        let mut post = Vec::with_capacity(self.len());
        let mut stack = vec![(self.root, 0usize)];
        seen[self.root] = true;
        while let Some((n, i)) = stack.pop() {
            if let Some(&s) = self.succs[n].get(i) {
                stack.push((n, i + 1));
                if !seen[s] {
                    seen[s] = true;
                    stack.push((s, 0));
                }
            } else {
                post.push(n);
            }
        }
        post.reverse();
        post.extend((0..self.len()).filter(|&n| !seen[n]));
        post
    }
}

/// Build the task graph over one or more root functions. `R` links to each
/// CFG entry and each CFG exit links to `T`.
pub fn build_taskgraph(cfgs: &[Cfg]) -> Result<TaskGraph, TaskGraphError> {
    for cfg in cfgs {
        check_nesting(cfg)?;
    }
    let mut g = TaskGraph::new();
    let (mut n_stmt, mut n_bar) = (0, 0);
    let mut offsets = Vec::with_capacity(cfgs.len());
    for (ci, cfg) in cfgs.iter().enumerate() {
        offsets.push(g.len());
        for b in &cfg.blocks {
            let name = if b.has_barrier() {
                n_bar += 1;
                format!("bar{n_bar}")
            } else {
                n_stmt += 1;
                format!("S{n_stmt}")
            };
            let id = g.add_node(name);
            let (multiplicity, guards) = classify(cfg, &b.context);
            let node = &mut g.nodes[id];
            node.block = Some((ci, b.id));
            node.multiplicity = multiplicity;
            node.guards = guards;
            node.is_barrier = b.has_barrier();
            node.is_parallel_entry = b.is_parallel_entry;
            node.is_parallel_exit = b.is_parallel_exit;
            node.region = b
                .context
                .iter()
                .rev()
                .find(|&&f| cfg.frames[f].is_team())
                .map(|&frame| ScopeKey { cfg: ci, frame });
            node.team = b
                .context
                .iter()
                .find(|&&f| cfg.frames[f].is_concurrency())
                .map(|&frame| ScopeKey { cfg: ci, frame });
            node.loc = Some(b.loc.clone());
        }
    }
    let t = g.add_terminal();
    g.nodes[t].is_parallel_exit = cfgs.iter().any(|c| c.exit_closes_parallel);

    for (ci, cfg) in cfgs.iter().enumerate() {
        let off = offsets[ci];
        g.add_edge(g.root, off + cfg.entry);
        for &(a, b) in &cfg.edges {
            g.add_edge(off + a, off + b);
        }
        for bp in &cfg.bypasses {
            debug_assert!(matches!(bp.kind, BypassKind::Single | BypassKind::Master | BypassKind::Sections));
            g.add_edge(off + bp.from, off + bp.to);
        }
        g.add_edge(off + cfg.exit, t);
        for l in &cfg.loops {
            g.add_loop(TgLoop {
                header: off + l.header,
                latches: vec![off + l.latch],
                body: l.body.iter().map(|&b| off + b).collect(),
                trip_count: l.trip_count,
            });
        }
    }
    Ok(g)
}

/// Multiplicity and guards from a block's directive context. Only frames
/// inside the innermost concurrency frame count.
fn classify(cfg: &Cfg, ctx: &[FrameId]) -> (Multiplicity, BTreeSet<Guard>) {
    let start = ctx.iter().rposition(|&f| cfg.frames[f].is_concurrency());
    let mut multiplicity = match start {
        Some(_) => Multiplicity::MultiInstance,
        None => Multiplicity::SingleInstance,
    };
    let mut guards = BTreeSet::new();
    let Some(start) = start else { return (multiplicity, guards) };
    for &f in &ctx[start + 1..] {
        let fr = &cfg.frames[f];
        match fr.kind {
            DirectiveKind::Single => {
                multiplicity = Multiplicity::SingleInstance;
                guards.insert(Guard::SingleBody);
            }
            DirectiveKind::Master => {
                multiplicity = Multiplicity::SingleInstance;
                guards.insert(Guard::MasterBody);
            }
            DirectiveKind::Section => multiplicity = Multiplicity::SingleInstance,
            DirectiveKind::Critical => {
                guards.insert(Guard::CriticalBody(fr.name.clone().unwrap_or_default()));
            }
            DirectiveKind::Atomic => {
                guards.insert(Guard::AtomicStmt);
            }
            _ => {}
        }
    }
    (multiplicity, guards)
}

/// Nearest enclosing frame a worksharing region or barrier binds to.
fn binding_ancestor(cfg: &Cfg, mut f: Option<FrameId>) -> Option<FrameId> {
    while let Some(id) = f {
        if cfg.frames[id].kind != DirectiveKind::Target {
            return Some(id);
        }
        f = cfg.frames[id].parent;
    }
    None
}

fn closely_nested_forbidden(kind: DirectiveKind) -> bool {
    use DirectiveKind::*;
    matches!(kind, For | ParallelFor | Sections | Single | Critical | Master | Section)
}

fn check_nesting(cfg: &Cfg) -> Result<(), TaskGraphError> {
    use DirectiveKind::*;
    for fr in &cfg.frames {
        let parent = fr.parent.map(|p| cfg.frames[p].kind);
        if fr.kind == Section && parent != Some(Sections) {
            return Err(TaskGraphError::MalformedNesting {
                loc: fr.loc.clone(),
                message: "`section` outside `sections`".into(),
            });
        }
        if matches!(fr.kind, For | Sections | Single) {
            if let Some(a) = binding_ancestor(cfg, fr.parent) {
                let ak = cfg.frames[a].kind;
                if closely_nested_forbidden(ak) {
                    return Err(TaskGraphError::MalformedNesting {
                        loc: fr.loc.clone(),
                        message: format!("`{}` closely nested in `{}`", fr.kind.keyword(), ak.keyword()),
                    });
                }
            }
        }
    }
    for b in &cfg.blocks {
        for i in &b.instrs {
            if let crate::cfg::Instr::Barrier { loc, implicit: false } = i {
                if let Some(a) = binding_ancestor(cfg, b.context.last().copied()) {
                    let ak = cfg.frames[a].kind;
                    if closely_nested_forbidden(ak) {
                        return Err(TaskGraphError::MalformedNesting {
                            loc: loc.clone(),
                            message: format!("`barrier` closely nested in `{}`", ak.keyword()),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

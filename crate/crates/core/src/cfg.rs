//! Per-function control-flow graphs with OpenMP directive context.
//!
//! Statements are lowered to memory accesses and barriers while the graph is
//! built. Same-file calls at statement level are inlined one level deep.

use std::collections::{BTreeSet, HashMap};

use crate::frontend::affine::AffineExpr;
use crate::frontend::ast::*;

pub type BlockId = usize;
pub type FrameId = usize;
pub type VarId = usize;
pub type LoopId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub decl_loc: Option<SourceLoc>,
    pub is_array: bool,
    pub global: bool,
    pub threadprivate: bool,
    /// Directive frames enclosing the declaration, outermost first.
    pub decl_frames: Vec<FrameId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedClause {
    pub kind: ClauseKind,
    pub vars: Vec<(VarId, SourceLoc)>,
    pub loc: SourceLoc,
}

/// One dynamic nesting level of a directive.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub id: FrameId,
    pub kind: DirectiveKind,
    pub name: Option<String>,
    pub clauses: Vec<ResolvedClause>,
    pub nowait: bool,
    pub loc: SourceLoc,
    pub parent: Option<FrameId>,
    /// The loop a loop construct distributes.
    pub loop_id: Option<LoopId>,
}

impl Frame {
    pub fn is_concurrency(&self) -> bool {
        matches!(
            self.kind,
            DirectiveKind::Parallel | DirectiveKind::ParallelFor | DirectiveKind::Teams | DirectiveKind::Simd
        )
    }

    pub fn is_team(&self) -> bool {
        matches!(self.kind, DirectiveKind::Parallel | DirectiveKind::ParallelFor | DirectiveKind::Teams)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawAccess {
    pub var: VarId,
    pub kind: AccessKind,
    /// Terms are keyed by [`var_key`] of the resolved variable.
    pub subscript: Option<AffineExpr>,
    pub loc: SourceLoc,
    /// Target of an `atomic` update.
    pub atomic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instr {
    Access(RawAccess),
    Barrier { loc: SourceLoc, implicit: bool },
    OpaqueCall { callee: String, loc: SourceLoc },
}

impl Instr {
    pub fn is_barrier(&self) -> bool {
        matches!(self, Instr::Barrier { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicBlock {
    pub id: BlockId,
    pub instrs: Vec<Instr>,
    /// Enclosing directive frames, outermost first.
    pub context: Vec<FrameId>,
    pub loc: SourceLoc,
    pub is_parallel_entry: bool,
    pub is_parallel_exit: bool,
}

impl BasicBlock {
    pub fn has_barrier(&self) -> bool {
        self.instrs.iter().any(Instr::is_barrier)
    }

    pub fn barrier_count(&self) -> usize {
        self.instrs.iter().filter(|i| i.is_barrier()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopInfo {
    pub id: LoopId,
    pub header: BlockId,
    pub latch: BlockId,
    /// Header, latch and everything between.
    pub body: Vec<BlockId>,
    pub trip_count: Option<u64>,
    pub var: VarId,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BypassKind {
    Single,
    Master,
    Sections,
}

/// Edge for threads that skip a `single`, `master` or `sections` body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bypass {
    pub kind: BypassKind,
    pub from: BlockId,
    pub to: BlockId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgWarning {
    pub loc: SourceLoc,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cfg {
    pub function: String,
    pub blocks: Vec<BasicBlock>,
    pub edges: Vec<(BlockId, BlockId)>,
    pub entry: BlockId,
    pub exit: BlockId,
    pub call_edges: Vec<(BlockId, String)>,
    pub frames: Vec<Frame>,
    pub vars: Vec<VarInfo>,
    pub loops: Vec<LoopInfo>,
    pub bypasses: Vec<Bypass>,
    /// The function ends by leaving a parallel region and the empty exit
    /// block for it was folded away; the terminal node takes the phase change.
    pub exit_closes_parallel: bool,
    pub warnings: Vec<CfgWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CfgOptions {
    /// Drop a trailing empty parallel-exit block (see [`Cfg::exit_closes_parallel`]).
    pub fold_trailing_parallel_exit: bool,
}

impl Default for CfgOptions {
    fn default() -> Self {
        CfgOptions { fold_trailing_parallel_exit: true }
    }
}

/// Key used for induction-variable terms in subscripts.
pub fn var_key(cfg_var: VarId, name: &str) -> String {
    format!("{name}#{cfg_var}")
}

impl Cfg {
    pub fn successors(&self, b: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.edges.iter().filter(move |e| e.0 == b).map(|e| e.1)
    }

    pub fn predecessors(&self, b: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.edges.iter().filter(move |e| e.1 == b).map(|e| e.0)
    }

    pub fn frame(&self, id: FrameId) -> &Frame {
        &self.frames[id]
    }

    /// Innermost concurrency frame (`parallel`, `teams`, `simd`) of a context.
    pub fn innermost_concurrency(&self, ctx: &[FrameId]) -> Option<FrameId> {
        ctx.iter().rev().copied().find(|&f| self.frames[f].is_concurrency())
    }
}

/// Roots of analysis: `main` first, then functions never called, in
/// declaration order. Falls back to the first function if every function is
/// called from somewhere.
pub fn root_functions(ast: &Ast) -> Vec<&str> {
    let mut called = BTreeSet::new();
    for f in &ast.functions {
        for s in &f.body {
            collect_calls(s, &f.name.name, &mut called);
        }
    }
    let mut roots: Vec<&str> = Vec::new();
    if ast.function("main").is_some() {
        roots.push("main");
    }
    for f in &ast.functions {
        let n = f.name.name.as_str();
        if !called.contains(n) && !roots.contains(&n) {
            roots.push(n);
        }
    }
    if roots.is_empty() {
        if let Some(f) = ast.functions.first() {
            roots.push(&f.name.name);
        }
    }
    roots
}

fn collect_calls(s: &Stmt, caller: &str, out: &mut BTreeSet<String>) {
    fn expr_calls(e: &Expr, caller: &str, out: &mut BTreeSet<String>) {
        match e {
            Expr::Call(c) => {
                if c.callee.name != caller {
                    out.insert(c.callee.name.clone());
                }
                c.args.iter().for_each(|a| expr_calls(a, caller, out));
            }
            Expr::Index { index, .. } => expr_calls(index, caller, out),
            Expr::Unary { expr, .. } => expr_calls(expr, caller, out),
            Expr::Binary { lhs, rhs, .. } => {
                expr_calls(lhs, caller, out);
                expr_calls(rhs, caller, out);
            }
            _ => {}
        }
    }
    match &s.kind {
        StmtKind::Call(c) => expr_calls(&Expr::Call(c.clone()), caller, out),
        StmtKind::Assign(a) => {
            if let Some(v) = &a.value {
                expr_calls(v, caller, out);
            }
            if let LValue::Index { index, .. } = &a.target {
                expr_calls(index, caller, out);
            }
        }
        StmtKind::Decl(d) => {
            for dc in &d.declarators {
                if let Some(i) = &dc.init {
                    expr_calls(i, caller, out);
                }
            }
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            expr_calls(cond, caller, out);
            collect_calls(then_branch, caller, out);
            if let Some(e) = else_branch {
                collect_calls(e, caller, out);
            }
        }
        StmtKind::For(f) => {
            expr_calls(&f.init, caller, out);
            expr_calls(&f.bound, caller, out);
            collect_calls(&f.body, caller, out);
        }
        StmtKind::Block(ss) => ss.iter().for_each(|s| collect_calls(s, caller, out)),
        StmtKind::Pragma { body, .. } => collect_calls(body, caller, out),
        StmtKind::Barrier(_) => {}
    }
}

/// Build the CFG of `func`, a function of `program`.
///
/// # Panics
/// If `func` is not a function of `program`.
pub fn build_cfg(program: &Ast, func: &str, opts: CfgOptions) -> Cfg {
    let f = program.function(func).unwrap_or_else(|| panic!("no function `{func}`"));
    let mut b = Builder::new(program, f);
    for p in &f.params {
        let id = b.new_var(&p.name.name, Some(p.name.loc.clone()), p.array.is_some(), false);
        b.scopes.last_mut().expect("scope").insert(p.name.name.clone(), id);
    }
    for s in &f.body {
        b.stmt(s);
    }
    b.finish(opts)
}

struct Builder<'a> {
    ast: &'a Ast,
    cfg: Cfg,
    cur: BlockId,
    ctx: Vec<FrameId>,
    scopes: Vec<HashMap<String, VarId>>,
    globals: HashMap<String, VarId>,
    inlining: Option<String>,
}

impl<'a> Builder<'a> {
    fn new(ast: &'a Ast, f: &FunctionDecl) -> Self {
        let entry = BasicBlock {
            id: 0,
            instrs: Vec::new(),
            context: Vec::new(),
            loc: f.loc.clone(),
            is_parallel_entry: false,
            is_parallel_exit: false,
        };
        let cfg = Cfg {
            function: f.name.name.clone(),
            blocks: vec![entry],
            edges: Vec::new(),
            entry: 0,
            exit: 0,
            call_edges: Vec::new(),
            frames: Vec::new(),
            vars: Vec::new(),
            loops: Vec::new(),
            bypasses: Vec::new(),
            exit_closes_parallel: false,
            warnings: Vec::new(),
        };
        let mut b = Builder {
            ast,
            cfg,
            cur: 0,
            ctx: Vec::new(),
            scopes: vec![HashMap::new()],
            globals: HashMap::new(),
            inlining: None,
        };
        for g in &ast.globals {
            match g {
                GlobalItem::Decl(d, _) => {
                    for dc in &d.declarators {
                        let id = b.new_var(&dc.name.name, Some(dc.name.loc.clone()), dc.array_len.is_some(), true);
                        b.globals.insert(dc.name.name.clone(), id);
                    }
                }
                GlobalItem::ThreadPrivate(c) => {
                    for v in &c.vars {
                        let id = b.global(&v.name);
                        b.cfg.vars[id].threadprivate = true;
                    }
                }
            }
        }
        b
    }

    fn finish(mut self, opts: CfgOptions) -> Cfg {
        let last = self.cur;
        let blk = &self.cfg.blocks[last];
        let preds: Vec<_> = self.cfg.predecessors(last).collect();
        if opts.fold_trailing_parallel_exit
            && blk.is_parallel_exit
            && blk.instrs.is_empty()
            && last == self.cfg.blocks.len() - 1
            && preds.len() == 1
        {
            self.cfg.blocks.pop();
            self.cfg.edges.retain(|e| e.1 != last);
            self.cfg.exit = preds[0];
            self.cfg.exit_closes_parallel = true;
        } else {
            self.cfg.exit = last;
        }
        self.cfg
    }

    // ---- variables -------------------------------------------------------

    fn new_var(&mut self, name: &str, loc: Option<SourceLoc>, is_array: bool, global: bool) -> VarId {
        let id = self.cfg.vars.len();
        self.cfg.vars.push(VarInfo {
            name: name.to_string(),
            decl_loc: loc,
            is_array,
            global,
            threadprivate: false,
            decl_frames: if global { Vec::new() } else { self.ctx.clone() },
        });
        id
    }

    /// Global named `name`, created on first use of an undeclared identifier.
    fn global(&mut self, name: &str) -> VarId {
        if let Some(&id) = self.globals.get(name) {
            return id;
        }
        let id = self.new_var(name, None, false, true);
        self.globals.insert(name.to_string(), id);
        id
    }

    fn lookup(&mut self, name: &str) -> VarId {
        for s in self.scopes.iter().rev() {
            if let Some(&id) = s.get(name) {
                return id;
            }
        }
        self.global(name)
    }

    fn declare(&mut self, name: &Ident, is_array: bool) -> VarId {
        let id = self.new_var(&name.name, Some(name.loc.clone()), is_array, false);
        self.scopes.last_mut().expect("scope").insert(name.name.clone(), id);
        id
    }

    // ---- blocks ----------------------------------------------------------

    fn new_block(&mut self, loc: &SourceLoc) -> BlockId {
        let id = self.cfg.blocks.len();
        self.cfg.blocks.push(BasicBlock {
            id,
            instrs: Vec::new(),
            context: self.ctx.clone(),
            loc: loc.clone(),
            is_parallel_entry: false,
            is_parallel_exit: false,
        });
        id
    }

    fn edge(&mut self, from: BlockId, to: BlockId) {
        if !self.cfg.edges.contains(&(from, to)) {
            self.cfg.edges.push((from, to));
        }
    }

    /// Start a new block reached from the current one.
    fn start_block(&mut self, loc: &SourceLoc) -> BlockId {
        let b = self.new_block(loc);
        self.edge(self.cur, b);
        self.cur = b;
        b
    }

    fn ensure_ctx(&mut self, loc: &SourceLoc) {
        if self.cfg.blocks[self.cur].context != self.ctx {
            self.start_block(loc);
        }
    }

    fn emit(&mut self, instr: Instr) {
        let loc = match &instr {
            Instr::Access(a) => a.loc.clone(),
            Instr::Barrier { loc, .. } | Instr::OpaqueCall { loc, .. } => loc.clone(),
        };
        self.ensure_ctx(&loc);
        let blk = &mut self.cfg.blocks[self.cur];
        if blk.instrs.is_empty() && !blk.is_parallel_entry && !blk.is_parallel_exit {
            blk.loc = loc;
        }
        blk.instrs.push(instr);
    }

    /// A standalone barrier block followed by a fresh open block.
    fn barrier_block(&mut self, loc: &SourceLoc, implicit: bool) -> BlockId {
        let b = self.start_block(loc);
        self.cfg.blocks[b].instrs.push(Instr::Barrier { loc: loc.clone(), implicit });
        self.start_block(loc);
        b
    }

    fn push_frame(&mut self, d: &Directive) -> FrameId {
        let id = self.cfg.frames.len();
        let clauses = d
            .clauses
            .iter()
            .filter(|c| c.is_data_sharing())
            .map(|c| ResolvedClause {
                kind: c.kind.clone(),
                vars: c.vars.iter().map(|v| (self.lookup(&v.name), v.loc.clone())).collect(),
                loc: c.loc.clone(),
            })
            .collect();
        self.cfg.frames.push(Frame {
            id,
            kind: d.kind,
            name: d.name.clone(),
            clauses,
            nowait: d.has_nowait(),
            loc: d.loc.clone(),
            parent: self.ctx.last().copied(),
            loop_id: None,
        });
        self.ctx.push(id);
        id
    }

    fn pop_frame(&mut self) {
        self.ctx.pop();
    }

    /// Mark the block where a parallel region starts. The current block is
    /// reused when it is still empty.
    fn parallel_entry(&mut self, loc: &SourceLoc) {
        let blk = &self.cfg.blocks[self.cur];
        let is_loop_block = self.cfg.loops.iter().any(|l| l.header == self.cur || l.latch == self.cur);
        let reusable = blk.instrs.is_empty() && !blk.is_parallel_entry && !blk.is_parallel_exit && !is_loop_block;
        if reusable {
            let ctx = self.ctx.clone();
            let blk = &mut self.cfg.blocks[self.cur];
            blk.context = ctx;
            blk.loc = loc.clone();
        } else {
            self.start_block(loc);
        }
        self.cfg.blocks[self.cur].is_parallel_entry = true;
    }

    fn parallel_exit(&mut self, loc: &SourceLoc) {
        let b = self.start_block(loc);
        self.cfg.blocks[b].is_parallel_exit = true;
    }

    // ---- expressions -----------------------------------------------------

    fn subscript(&mut self, e: &Expr) -> AffineExpr {
        let mut a = AffineExpr::from_expr(e);
        if !a.symbolic {
            let terms = std::mem::take(&mut a.terms);
            for (name, k) in terms {
                let id = self.lookup(&name);
                a.terms.insert(var_key(id, &name), k);
            }
        }
        a
    }

    fn read_var(&mut self, id: &Ident, subscript: Option<AffineExpr>) {
        let var = self.lookup(&id.name);
        if subscript.is_none() && self.cfg.vars[var].is_array {
            // Array name used as a value: no element is accessed.
            return;
        }
        self.emit(Instr::Access(RawAccess {
            var,
            kind: AccessKind::Read,
            subscript,
            loc: id.loc.clone(),
            atomic: false,
        }));
    }

    fn reads(&mut self, e: &Expr) {
        match e {
            Expr::Int(..) | Expr::Float(..) | Expr::Str(..) => {}
            Expr::Var(id) => self.read_var(id, None),
            Expr::Index { base, index } => {
                self.reads(index);
                let sub = self.subscript(index);
                self.read_var(base, Some(sub));
            }
            Expr::Unary { expr, .. } => self.reads(expr),
            Expr::Binary { lhs, rhs, .. } => {
                self.reads(lhs);
                self.reads(rhs);
            }
            Expr::Call(c) => {
                for a in &c.args {
                    self.reads(a);
                }
                if self.ast.function(&c.callee.name).is_some() {
                    self.warn(&c.callee.loc, format!("call to `{}` inside an expression is not inlined", c.callee.name));
                }
                self.emit(Instr::OpaqueCall { callee: c.callee.name.clone(), loc: c.callee.loc.clone() });
            }
        }
    }

    fn warn(&mut self, loc: &SourceLoc, message: String) {
        self.cfg.warnings.push(CfgWarning { loc: loc.clone(), message });
    }

    fn in_atomic(&self) -> bool {
        self.ctx.last().is_some_and(|&f| self.cfg.frames[f].kind == DirectiveKind::Atomic)
    }

    // ---- statements ------------------------------------------------------

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(d) => {
                for dc in &d.declarators {
                    if let Some(len) = &dc.array_len {
                        self.reads(len);
                    }
                    if let Some(init) = &dc.init {
                        self.reads(init);
                    }
                    let id = self.declare(&dc.name, dc.array_len.is_some());
                    if let (Some(_), Some(loc)) = (&dc.init, &dc.init_loc) {
                        self.emit(Instr::Access(RawAccess {
                            var: id,
                            kind: AccessKind::Write,
                            subscript: None,
                            loc: loc.clone(),
                            atomic: false,
                        }));
                    }
                }
            }
            StmtKind::Assign(a) => self.assign(a),
            StmtKind::If { cond, then_branch, else_branch } => {
                self.ensure_ctx(&s.loc);
                self.reads(cond);
                let c = self.cur;
                self.start_block(&then_branch.loc);
                self.scoped(|b| b.stmt(then_branch));
                let then_end = self.cur;
                let else_end = match else_branch {
                    Some(e) => {
                        self.cur = c;
                        self.start_block(&e.loc);
                        self.scoped(|b| b.stmt(e));
                        self.cur
                    }
                    None => c,
                };
                let j = self.new_block(&s.loc);
                self.edge(then_end, j);
                self.edge(else_end, j);
                self.cur = j;
            }
            StmtKind::For(f) => {
                self.scopes.push(HashMap::new());
                let header = self.for_loop(f, &s.loc);
                self.scopes.pop();
                self.exit_loop(header, &s.loc);
            }
            StmtKind::Block(stmts) => self.scoped(|b| stmts.iter().for_each(|s| b.stmt(s))),
            StmtKind::Pragma { directive, body } => self.pragma(directive, body, &s.loc),
            StmtKind::Call(c) => self.call(c),
            StmtKind::Barrier(d) => {
                self.ensure_ctx(&d.loc);
                self.barrier_block(&d.loc, false);
            }
        }
    }

    fn scoped(&mut self, f: impl FnOnce(&mut Self)) {
        self.scopes.push(HashMap::new());
        f(self);
        self.scopes.pop();
    }

    fn assign(&mut self, a: &Assign) {
        if let Some(v) = &a.value {
            self.reads(v);
        }
        let base = a.target.base();
        let subscript = match &a.target {
            LValue::Var(_) => None,
            LValue::Index { index, .. } => {
                self.reads(index);
                Some(self.subscript(index))
            }
        };
        let var = self.lookup(&base.name);
        let atomic = self.in_atomic();
        if a.op.reads_target() {
            self.emit(Instr::Access(RawAccess {
                var,
                kind: AccessKind::Read,
                subscript: subscript.clone(),
                loc: base.loc.clone(),
                atomic,
            }));
        }
        self.emit(Instr::Access(RawAccess {
            var,
            kind: AccessKind::Write,
            subscript,
            loc: a.op_loc.clone(),
            atomic,
        }));
    }

    /// Emit a `for` loop: init in the current block, then header, body and
    /// latch blocks. Returns the header; the caller attaches the exit.
    fn for_loop(&mut self, f: &ForLoop, loc: &SourceLoc) -> BlockId {
        self.reads(&f.init);
        let var = if f.declares_var { self.declare(&f.var, false) } else { self.lookup(&f.var.name) };
        self.emit(Instr::Access(RawAccess {
            var,
            kind: AccessKind::Write,
            subscript: None,
            loc: f.init_loc.clone(),
            atomic: false,
        }));
        let header = self.start_block(&f.cond_var.loc);
        self.read_var(&f.cond_var, None);
        self.reads(&f.bound);
        self.start_block(&f.body.loc);
        self.scoped(|b| b.stmt(&f.body));
        let latch = self.start_block(&f.step_loc);
        self.read_var(&f.step_var, None);
        let step_var = self.lookup(&f.step_var.name);
        self.emit(Instr::Access(RawAccess {
            var: step_var,
            kind: AccessKind::Write,
            subscript: None,
            loc: f.step_loc.clone(),
            atomic: false,
        }));
        self.edge(latch, header);
        let id = self.cfg.loops.len();
        self.cfg.loops.push(LoopInfo {
            id,
            header,
            latch,
            body: (header..=latch).collect(),
            trip_count: f.trip_count(),
            var,
            loc: loc.clone(),
        });
        header
    }

    fn exit_loop(&mut self, header: BlockId, loc: &SourceLoc) {
        let exit = self.new_block(loc);
        self.edge(header, exit);
        self.cur = exit;
    }

    fn pragma(&mut self, d: &Directive, body: &Stmt, loc: &SourceLoc) {
        use DirectiveKind::*;
        match d.kind {
            Parallel | Teams => {
                self.push_frame(d);
                self.parallel_entry(loc);
                self.scoped(|b| b.stmt(body));
                self.pop_frame();
                self.parallel_exit(loc);
            }
            For | ParallelFor | Simd | Distribute => self.loop_construct(d, body, loc),
            Single | Master => {
                self.ensure_ctx(loc);
                let pre = self.cur;
                self.push_frame(d);
                self.start_block(&body.loc);
                self.scoped(|b| b.stmt(body));
                self.pop_frame();
                let (kind, join) = if d.kind == Single && !d.has_nowait() {
                    (BypassKind::Single, self.barrier_block(loc, true))
                } else {
                    let kind = if d.kind == Single { BypassKind::Single } else { BypassKind::Master };
                    (kind, self.start_block(loc))
                };
                self.cfg.bypasses.push(Bypass { kind, from: pre, to: join });
            }
            Sections => {
                self.ensure_ctx(loc);
                let pre = self.cur;
                self.push_frame(d);
                let sections: Vec<&Stmt> = match &body.kind {
                    StmtKind::Block(ss) => ss.iter().collect(),
                    _ => vec![body],
                };
                let mut ends = Vec::new();
                for s in sections {
                    self.cur = pre;
                    match &s.kind {
                        StmtKind::Pragma { directive, body } if directive.kind == Section => {
                            self.push_frame(directive);
                            self.start_block(&body.loc);
                            self.scoped(|b| b.stmt(body));
                            self.pop_frame();
                        }
                        _ => {
                            self.start_block(&s.loc);
                            self.scoped(|b| b.stmt(s));
                        }
                    }
                    ends.push(self.cur);
                }
                self.pop_frame();
                let join = self.new_block(loc);
                if ends.is_empty() {
                    self.edge(pre, join);
                }
                for e in ends {
                    self.edge(e, join);
                }
                self.cur = join;
                if !d.has_nowait() {
                    self.cfg.blocks[join].instrs.push(Instr::Barrier { loc: loc.clone(), implicit: true });
                    self.start_block(loc);
                }
                self.cfg.bypasses.push(Bypass { kind: BypassKind::Sections, from: pre, to: join });
            }
            Section | Critical | Atomic => {
                self.push_frame(d);
                self.start_block(&body.loc);
                self.scoped(|b| b.stmt(body));
                self.pop_frame();
                self.start_block(loc);
            }
            Target => self.scoped(|b| b.stmt(body)),
            Barrier => {
                self.ensure_ctx(loc);
                self.barrier_block(loc, false);
                self.stmt(body);
            }
        }
    }

    /// `for`, `parallel for`, `simd`, `distribute` and chains of them bound
    /// to a single loop.
    fn loop_construct(&mut self, d: &Directive, body: &Stmt, loc: &SourceLoc) {
        let mut chain = vec![d];
        let mut inner = body;
        while let StmtKind::Pragma { directive, body } = &inner.kind {
            if !directive.kind.is_loop_construct() {
                break;
            }
            chain.push(directive);
            inner = body;
        }
        let StmtKind::For(f) = &inner.kind else {
            // The parser only accepts loop constructs over loops.
            unreachable!("loop construct without a loop at {loc}")
        };
        self.scopes.push(HashMap::new());
        let frames: Vec<FrameId> = chain.iter().map(|d| self.push_frame(d)).collect();
        if chain.iter().any(|d| d.kind == DirectiveKind::ParallelFor) {
            self.parallel_entry(loc);
        }
        let header = self.for_loop(f, &inner.loc);
        let loop_id = self.cfg.loops.len() - 1;
        for &fr in &frames {
            self.cfg.frames[fr].loop_id = Some(loop_id);
        }
        self.scopes.pop();

        let mut from = header;
        let mut ends_with_barrier = false;
        for dir in chain.iter().rev() {
            self.pop_frame();
            match dir.kind {
                DirectiveKind::For if !dir.has_nowait() => {
                    let b = self.new_block(loc);
                    self.edge(from, b);
                    self.cfg.blocks[b].instrs.push(Instr::Barrier { loc: loc.clone(), implicit: true });
                    from = b;
                    ends_with_barrier = true;
                }
                DirectiveKind::ParallelFor => {
                    let x = self.new_block(loc);
                    self.edge(from, x);
                    self.cfg.blocks[x].is_parallel_exit = true;
                    from = x;
                    ends_with_barrier = false;
                }
                _ => {}
            }
        }
        if from == header {
            self.exit_loop(header, loc);
        } else {
            self.cur = from;
            if ends_with_barrier {
                self.start_block(loc);
            }
        }
    }

    fn call(&mut self, c: &CallExpr) {
        let callee = self.ast.function(&c.callee.name);
        let inline = match callee {
            Some(f) if self.inlining.is_none() && f.name.name != self.cfg.function => Some(f),
            Some(_) => {
                let why = if self.inlining.is_some() { "nested call not inlined" } else { "recursive call" };
                self.warn(&c.callee.loc, format!("{why}: `{}` treated as opaque", c.callee.name));
                None
            }
            None => {
                self.warn(&c.callee.loc, format!("external function `{}` treated as opaque", c.callee.name));
                None
            }
        };
        let Some(f) = inline.filter(|f| f.params.len() == c.args.len()) else {
            if inline.is_some() {
                self.warn(&c.callee.loc, format!("argument count mismatch: `{}` treated as opaque", c.callee.name));
            }
            for a in &c.args {
                self.reads(a);
            }
            self.emit(Instr::OpaqueCall { callee: c.callee.name.clone(), loc: c.callee.loc.clone() });
            return;
        };

        self.ensure_ctx(&c.callee.loc);
        self.cfg.call_edges.push((self.cur, f.name.name.clone()));
        let mut scope = HashMap::new();
        for (p, arg) in f.params.iter().zip(&c.args) {
            if p.array.is_some() {
                let aliased = match arg {
                    Expr::Var(id) => {
                        let v = self.lookup(&id.name);
                        self.cfg.vars[v].is_array.then_some(v)
                    }
                    _ => None,
                };
                let v = match aliased {
                    Some(v) => v,
                    None => {
                        self.reads(arg);
                        self.new_var(&p.name.name, Some(p.name.loc.clone()), true, false)
                    }
                };
                scope.insert(p.name.name.clone(), v);
            } else {
                self.reads(arg);
                let v = self.new_var(&p.name.name, Some(p.name.loc.clone()), false, false);
                self.emit(Instr::Access(RawAccess {
                    var: v,
                    kind: AccessKind::Write,
                    subscript: None,
                    loc: arg.loc().clone(),
                    atomic: false,
                }));
                scope.insert(p.name.name.clone(), v);
            }
        }
        let saved = std::mem::replace(&mut self.scopes, vec![scope]);
        self.inlining = Some(f.name.name.clone());
        for s in &f.body {
            self.stmt(s);
        }
        self.inlining = None;
        self.scopes = saved;
    }
}

/// Split blocks so that each holds at most one barrier, placed last.
/// Blocks already in that form are left untouched.
pub fn normalize_barriers(mut cfg: Cfg) -> Cfg {
    let original = cfg.blocks.len();
    for b in 0..original {
        let blk = &cfg.blocks[b];
        let n = blk.barrier_count();
        let last_is_barrier = blk.instrs.last().is_some_and(Instr::is_barrier);
        if n == 0 || (n == 1 && last_is_barrier) {
            continue;
        }
        let mut parts: Vec<Vec<Instr>> = vec![Vec::new()];
        for instr in std::mem::take(&mut cfg.blocks[b].instrs) {
            let barrier = instr.is_barrier();
            parts.last_mut().expect("part").push(instr);
            if barrier {
                parts.push(Vec::new());
            }
        }
        let mut parts = parts.into_iter();
        cfg.blocks[b].instrs = parts.next().expect("first part");
        let is_exit = std::mem::replace(&mut cfg.blocks[b].is_parallel_exit, false);
        let mut ids = vec![b];
        for instrs in parts {
            let id = cfg.blocks.len();
            let loc = match instrs.first() {
                Some(Instr::Access(a)) => a.loc.clone(),
                Some(Instr::Barrier { loc, .. } | Instr::OpaqueCall { loc, .. }) => loc.clone(),
                None => cfg.blocks[b].loc.clone(),
            };
            cfg.blocks.push(BasicBlock {
                id,
                instrs,
                context: cfg.blocks[b].context.clone(),
                loc,
                is_parallel_entry: false,
                is_parallel_exit: false,
            });
            ids.push(id);
        }
        let last = *ids.last().expect("ids");
        cfg.blocks[last].is_parallel_exit = is_exit;
        for e in cfg.edges.iter_mut() {
            if e.0 == b {
                e.0 = last;
            }
        }
        for w in ids.windows(2) {
            cfg.edges.push((w[0], w[1]));
        }
        for l in cfg.loops.iter_mut() {
            if l.body.contains(&b) {
                l.body.extend(&ids[1..]);
            }
            if l.latch == b {
                l.latch = last;
            }
        }
        for bp in cfg.bypasses.iter_mut() {
            if bp.from == b {
                bp.from = last;
            }
        }
        if cfg.exit == b {
            cfg.exit = last;
        }
    }
    cfg
}

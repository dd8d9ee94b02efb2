//! Syntax tree for the mini-OMP-C input language.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

/// A 1-based position in an input file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SourceLoc {
    pub file: Arc<str>,
    pub line: u32,
    pub col: u32,
}

impl SourceLoc {
    pub fn new(file: Arc<str>, line: u32, col: u32) -> Self {
        debug_assert!(line >= 1 && col >= 1);
        SourceLoc { file, line, col }
    }

    /// Placeholder location used when comparing trees structurally.
    pub fn erased() -> Self {
        SourceLoc { file: Arc::from(""), line: 1, col: 1 }
    }
}

impl fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DirectiveKind {
    Parallel,
    For,
    ParallelFor,
    Single,
    Master,
    Critical,
    Barrier,
    Sections,
    Section,
    Atomic,
    Simd,
    Target,
    Teams,
    Distribute,
}

impl DirectiveKind {
    pub fn keyword(self) -> &'static str {
        match self {
            DirectiveKind::Parallel => "parallel",
            DirectiveKind::For => "for",
            DirectiveKind::ParallelFor => "parallel for",
            DirectiveKind::Single => "single",
            DirectiveKind::Master => "master",
            DirectiveKind::Critical => "critical",
            DirectiveKind::Barrier => "barrier",
            DirectiveKind::Sections => "sections",
            DirectiveKind::Section => "section",
            DirectiveKind::Atomic => "atomic",
            DirectiveKind::Simd => "simd",
            DirectiveKind::Target => "target",
            DirectiveKind::Teams => "teams",
            DirectiveKind::Distribute => "distribute",
        }
    }

    /// Directives whose body must be a `for` loop.
    pub fn is_loop_construct(self) -> bool {
        matches!(
            self,
            DirectiveKind::For | DirectiveKind::ParallelFor | DirectiveKind::Simd | DirectiveKind::Distribute
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ReductionOp {
    Add,
    Mul,
    Max,
    Min,
    And,
    Or,
}

impl ReductionOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ReductionOp::Add => "+",
            ReductionOp::Mul => "*",
            ReductionOp::Max => "max",
            ReductionOp::Min => "min",
            ReductionOp::And => "&&",
            ReductionOp::Or => "||",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+" => ReductionOp::Add,
            "*" => ReductionOp::Mul,
            "max" => ReductionOp::Max,
            "min" => ReductionOp::Min,
            "&&" => ReductionOp::And,
            "||" => ReductionOp::Or,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClauseKind {
    Shared,
    Private,
    FirstPrivate,
    LastPrivate,
    ThreadPrivate,
    Reduction(ReductionOp),
    NoWait,
    NumThreads(Expr),
    Schedule(String),
    /// Clauses with no bearing on race analysis (`map`, `default`, ...);
    /// the payload is kept verbatim for printing.
    Ignored { name: String, payload: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub kind: ClauseKind,
    pub vars: Vec<Ident>,
    pub loc: SourceLoc,
}

impl Clause {
    pub fn is_data_sharing(&self) -> bool {
        matches!(
            self.kind,
            ClauseKind::Shared
                | ClauseKind::Private
                | ClauseKind::FirstPrivate
                | ClauseKind::LastPrivate
                | ClauseKind::ThreadPrivate
                | ClauseKind::Reduction(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Directive {
    pub kind: DirectiveKind,
    /// Lock name of a named `critical`.
    pub name: Option<String>,
    pub clauses: Vec<Clause>,
    pub loc: SourceLoc,
}

impl Directive {
    pub fn has_nowait(&self) -> bool {
        self.clauses.iter().any(|c| c.kind == ClauseKind::NoWait)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    Int,
    Long,
    Float,
    Double,
    Char,
}

impl ScalarType {
    pub fn keyword(self) -> &'static str {
        match self {
            ScalarType::Int => "int",
            ScalarType::Long => "long",
            ScalarType::Float => "float",
            ScalarType::Double => "double",
            ScalarType::Char => "char",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "int" => ScalarType::Int,
            "long" => ScalarType::Long,
            "float" => ScalarType::Float,
            "double" => ScalarType::Double,
            "char" => ScalarType::Char,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64, SourceLoc),
    /// Floating literal kept as written.
    Float(String, SourceLoc),
    Str(String, SourceLoc),
    Var(Ident),
    Index { base: Ident, index: Box<Expr> },
    Unary { op: UnOp, expr: Box<Expr>, loc: SourceLoc },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call(CallExpr),
}

impl Expr {
    pub fn loc(&self) -> &SourceLoc {
        match self {
            Expr::Int(_, loc) | Expr::Float(_, loc) | Expr::Str(_, loc) => loc,
            Expr::Var(id) => &id.loc,
            Expr::Index { base, .. } => &base.loc,
            Expr::Unary { loc, .. } => loc,
            Expr::Binary { lhs, .. } => lhs.loc(),
            Expr::Call(c) => &c.callee.loc,
        }
    }

    /// Constant value if the expression folds to an integer.
    pub fn const_value(&self) -> Option<i64> {
        match self {
            Expr::Int(v, _) => Some(*v),
            Expr::Unary { op: UnOp::Neg, expr, .. } => expr.const_value()?.checked_neg(),
            Expr::Binary { op, lhs, rhs } => {
                let (a, b) = (lhs.const_value()?, rhs.const_value()?);
                match op {
                    BinOp::Add => a.checked_add(b),
                    BinOp::Sub => a.checked_sub(b),
                    BinOp::Mul => a.checked_mul(b),
                    BinOp::Div if b != 0 => a.checked_div(b),
                    BinOp::Rem if b != 0 => a.checked_rem(b),
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallExpr {
    pub callee: Ident,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LValue {
    Var(Ident),
    Index { base: Ident, index: Expr },
}

impl LValue {
    pub fn base(&self) -> &Ident {
        match self {
            LValue::Var(id) => id,
            LValue::Index { base, .. } => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
    Incr,
    Decr,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Incr => "++",
            AssignOp::Decr => "--",
        }
    }

    /// Compound forms read the target before writing it.
    pub fn reads_target(self) -> bool {
        self != AssignOp::Set
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assign {
    pub target: LValue,
    pub op: AssignOp,
    /// Absent for `++`/`--`.
    pub value: Option<Expr>,
    /// Location of the assignment operator; stores are attributed here.
    pub op_loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declarator {
    pub name: Ident,
    /// `Some` for arrays.
    pub array_len: Option<Expr>,
    pub init: Option<Expr>,
    /// Location of `=` when there is an initializer.
    pub init_loc: Option<SourceLoc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decl {
    pub ty: ScalarType,
    pub declarators: Vec<Declarator>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
    Ne,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForLoop {
    /// `for (int i = ...)` declares the induction variable.
    pub declares_var: bool,
    pub var: Ident,
    pub init: Expr,
    pub init_loc: SourceLoc,
    pub cond_var: Ident,
    pub rel: RelOp,
    pub bound: Expr,
    pub step_var: Ident,
    /// Increment per iteration (`++` is 1).
    pub step: i64,
    pub step_loc: SourceLoc,
    pub body: Box<Stmt>,
}

impl ForLoop {
    /// Statically known iteration count of an increasing loop with constant bounds.
    pub fn trip_count(&self) -> Option<u64> {
        if self.var.name != self.cond_var.name || self.var.name != self.step_var.name || self.step <= 0 {
            return None;
        }
        let start = self.init.const_value()?;
        let bound = self.bound.const_value()?;
        let end = match self.rel {
            RelOp::Lt => bound,
            RelOp::Le => bound.checked_add(1)?,
            _ => return None,
        };
        if end <= start {
            return Some(0);
        }
        let span = (end - start) as u64;
        let step = self.step as u64;
        Some(span.div_ceil(step))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl(Decl),
    Assign(Assign),
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    For(ForLoop),
    Block(Vec<Stmt>),
    Pragma { directive: Directive, body: Box<Stmt> },
    Call(CallExpr),
    Barrier(Directive),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: ScalarType,
    pub name: Ident,
    /// `int a[]` or `int a[N]`; the inner option is the declared length.
    pub array: Option<Option<Expr>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnType {
    Void,
    Int,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub ret: ReturnType,
    pub name: Ident,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub loc: SourceLoc,
}

/// File-scope items other than functions.
#[derive(Debug, Clone, PartialEq)]
pub enum GlobalItem {
    Decl(Decl, SourceLoc),
    /// `#pragma omp threadprivate(...)`
    ThreadPrivate(Clause),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ast {
    pub globals: Vec<GlobalItem>,
    pub functions: Vec<FunctionDecl>,
}

impl Ast {
    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name.name == name)
    }

    /// Replace every location with a placeholder so trees parsed from
    /// differently laid out text can be compared.
    pub fn erase_locs(&mut self) {
        for g in &mut self.globals {
            match g {
                GlobalItem::Decl(d, loc) => {
                    *loc = SourceLoc::erased();
                    erase_decl(d);
                }
                GlobalItem::ThreadPrivate(c) => erase_clause(c),
            }
        }
        for f in &mut self.functions {
            f.loc = SourceLoc::erased();
            erase_ident(&mut f.name);
            for p in &mut f.params {
                erase_ident(&mut p.name);
                if let Some(Some(len)) = &mut p.array {
                    erase_expr(len);
                }
            }
            f.body.iter_mut().for_each(erase_stmt);
        }
    }
}

fn erase_ident(id: &mut Ident) {
    id.loc = SourceLoc::erased();
}

fn erase_expr(e: &mut Expr) {
    match e {
        Expr::Int(_, loc) | Expr::Float(_, loc) | Expr::Str(_, loc) => *loc = SourceLoc::erased(),
        Expr::Var(id) => erase_ident(id),
        Expr::Index { base, index } => {
            erase_ident(base);
            erase_expr(index);
        }
        Expr::Unary { expr, loc, .. } => {
            *loc = SourceLoc::erased();
            erase_expr(expr);
        }
        Expr::Binary { lhs, rhs, .. } => {
            erase_expr(lhs);
            erase_expr(rhs);
        }
        Expr::Call(c) => erase_call(c),
    }
}

fn erase_call(c: &mut CallExpr) {
    erase_ident(&mut c.callee);
    c.args.iter_mut().for_each(erase_expr);
}

fn erase_lvalue(lv: &mut LValue) {
    match lv {
        LValue::Var(id) => erase_ident(id),
        LValue::Index { base, index } => {
            erase_ident(base);
            erase_expr(index);
        }
    }
}

fn erase_decl(d: &mut Decl) {
    for dc in &mut d.declarators {
        erase_ident(&mut dc.name);
        if let Some(len) = &mut dc.array_len {
            erase_expr(len);
        }
        if let Some(init) = &mut dc.init {
            erase_expr(init);
        }
        if dc.init_loc.is_some() {
            dc.init_loc = Some(SourceLoc::erased());
        }
    }
}

fn erase_clause(c: &mut Clause) {
    c.loc = SourceLoc::erased();
    c.vars.iter_mut().for_each(erase_ident);
    if let ClauseKind::NumThreads(e) = &mut c.kind {
        erase_expr(e);
    }
}

fn erase_directive(d: &mut Directive) {
    d.loc = SourceLoc::erased();
    d.clauses.iter_mut().for_each(erase_clause);
}

fn erase_stmt(s: &mut Stmt) {
    s.loc = SourceLoc::erased();
    match &mut s.kind {
        StmtKind::Decl(d) => erase_decl(d),
        StmtKind::Assign(a) => {
            erase_lvalue(&mut a.target);
            if let Some(v) = &mut a.value {
                erase_expr(v);
            }
            a.op_loc = SourceLoc::erased();
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            erase_expr(cond);
            erase_stmt(then_branch);
            if let Some(e) = else_branch {
                erase_stmt(e);
            }
        }
        StmtKind::For(f) => {
            erase_ident(&mut f.var);
            erase_expr(&mut f.init);
            f.init_loc = SourceLoc::erased();
            erase_ident(&mut f.cond_var);
            erase_expr(&mut f.bound);
            erase_ident(&mut f.step_var);
            f.step_loc = SourceLoc::erased();
            erase_stmt(&mut f.body);
        }
        StmtKind::Block(stmts) => stmts.iter_mut().for_each(erase_stmt),
        StmtKind::Pragma { directive, body } => {
            erase_directive(directive);
            erase_stmt(body);
        }
        StmtKind::Call(c) => erase_call(c),
        StmtKind::Barrier(d) => erase_directive(d),
    }
}

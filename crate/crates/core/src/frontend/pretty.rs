//! Source printer for the AST. The output re-parses to the same tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_ast(ast: &Ast) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    for g in &ast.globals {
        match g {
            GlobalItem::Decl(d, _) => {
                p.decl(d);
                p.out.push('\n');
            }
            GlobalItem::ThreadPrivate(c) => {
                p.out.push_str("#pragma omp threadprivate(");
                p.out.push_str(&join_idents(&c.vars));
                p.out.push_str(")\n");
            }
        }
    }
    for f in &ast.functions {
        p.function(f);
    }
    p.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e);
    s
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line_start(&mut self) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    fn function(&mut self, f: &FunctionDecl) {
        self.out.push_str(match f.ret {
            ReturnType::Void => "void ",
            ReturnType::Int => "int ",
        });
        self.out.push_str(&f.name.name);
        self.out.push('(');
        for (i, param) in f.params.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            let _ = write!(self.out, "{} {}", param.ty.keyword(), param.name.name);
            match &param.array {
                Some(Some(len)) => {
                    self.out.push('[');
                    expr(&mut self.out, len);
                    self.out.push(']');
                }
                Some(None) => self.out.push_str("[]"),
                None => {}
            }
        }
        self.out.push_str(") {\n");
        self.indent += 1;
        for s in &f.body {
            self.stmt(s);
        }
        self.indent -= 1;
        self.out.push_str("}\n");
    }

    fn decl(&mut self, d: &Decl) {
        self.out.push_str(d.ty.keyword());
        self.out.push(' ');
        for (i, dc) in d.declarators.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.out.push_str(&dc.name.name);
            if let Some(len) = &dc.array_len {
                self.out.push('[');
                expr(&mut self.out, len);
                self.out.push(']');
            }
            if let Some(init) = &dc.init {
                self.out.push_str(" = ");
                expr(&mut self.out, init);
            }
        }
        self.out.push(';');
    }

    fn stmt(&mut self, s: &Stmt) {
        self.line_start();
        match &s.kind {
            StmtKind::Decl(d) => {
                self.decl(d);
                self.out.push('\n');
            }
            StmtKind::Assign(a) => {
                lvalue(&mut self.out, &a.target);
                match &a.value {
                    Some(v) => {
                        let _ = write!(self.out, " {} ", a.op.symbol());
                        expr(&mut self.out, v);
                    }
                    None => self.out.push_str(a.op.symbol()),
                }
                self.out.push_str(";\n");
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                self.out.push_str("if (");
                expr(&mut self.out, cond);
                self.out.push_str(")\n");
                self.nested(then_branch);
                if let Some(e) = else_branch {
                    self.line_start();
                    self.out.push_str("else\n");
                    self.nested(e);
                }
            }
            StmtKind::For(f) => {
                self.out.push_str("for (");
                if f.declares_var {
                    self.out.push_str("int ");
                }
                let _ = write!(self.out, "{} = ", f.var.name);
                expr(&mut self.out, &f.init);
                let _ = write!(self.out, "; {} {} ", f.cond_var.name, f.rel.symbol());
                expr(&mut self.out, &f.bound);
                if f.step == 1 {
                    let _ = writeln!(self.out, "; {}++)", f.step_var.name);
                } else {
                    let _ = writeln!(self.out, "; {} += {})", f.step_var.name, f.step);
                }
                self.nested(&f.body);
            }
            StmtKind::Block(stmts) => {
                self.out.push_str("{\n");
                self.indent += 1;
                for s in stmts {
                    self.stmt(s);
                }
                self.indent -= 1;
                self.line_start();
                self.out.push_str("}\n");
            }
            StmtKind::Pragma { directive, body } => {
                self.directive(directive);
                self.stmt(body);
            }
            StmtKind::Call(c) => {
                call(&mut self.out, c);
                self.out.push_str(";\n");
            }
            StmtKind::Barrier(d) => self.directive(d),
        }
    }

    fn nested(&mut self, s: &Stmt) {
        self.indent += 1;
        self.stmt(s);
        self.indent -= 1;
    }

    fn directive(&mut self, d: &Directive) {
        let _ = write!(self.out, "#pragma omp {}", d.kind.keyword());
        if let Some(name) = &d.name {
            let _ = write!(self.out, "({name})");
        }
        for c in &d.clauses {
            self.out.push(' ');
            clause(&mut self.out, c);
        }
        self.out.push('\n');
    }
}

fn clause(out: &mut String, c: &Clause) {
    let vars = join_idents(&c.vars);
    let _ = match &c.kind {
        ClauseKind::Shared => write!(out, "shared({vars})"),
        ClauseKind::Private => write!(out, "private({vars})"),
        ClauseKind::FirstPrivate => write!(out, "firstprivate({vars})"),
        ClauseKind::LastPrivate => write!(out, "lastprivate({vars})"),
        ClauseKind::ThreadPrivate => write!(out, "threadprivate({vars})"),
        ClauseKind::Reduction(op) => write!(out, "reduction({}: {vars})", op.symbol()),
        ClauseKind::NoWait => write!(out, "nowait"),
        ClauseKind::NumThreads(e) => {
            out.push_str("num_threads(");
            expr(out, e);
            write!(out, ")")
        }
        ClauseKind::Schedule(p) => write!(out, "schedule({p})"),
        ClauseKind::Ignored { name, payload: Some(p) } => write!(out, "{name}({p})"),
        ClauseKind::Ignored { name, payload: None } => write!(out, "{name}"),
    };
}

fn join_idents(ids: &[Ident]) -> String {
    ids.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn lvalue(out: &mut String, lv: &LValue) {
    match lv {
        LValue::Var(id) => out.push_str(&id.name),
        LValue::Index { base, index } => {
            out.push_str(&base.name);
            out.push('[');
            expr(out, index);
            out.push(']');
        }
    }
}

fn call(out: &mut String, c: &CallExpr) {
    out.push_str(&c.callee.name);
    out.push('(');
    for (i, a) in c.args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a);
    }
    out.push(')');
}

fn expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(v, _) if *v < 0 => {
            let _ = write!(out, "({v})");
        }
        Expr::Int(v, _) => {
            let _ = write!(out, "{v}");
        }
        Expr::Float(s, _) => out.push_str(s),
        Expr::Str(s, _) => {
            let _ = write!(out, "\"{s}\"");
        }
        Expr::Var(id) => out.push_str(&id.name),
        Expr::Index { base, index } => {
            out.push_str(&base.name);
            out.push('[');
            expr(out, index);
            out.push(']');
        }
        Expr::Unary { op, expr: inner, .. } => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            if matches!(**inner, Expr::Binary { .. } | Expr::Unary { .. }) {
                out.push('(');
                expr(out, inner);
                out.push(')');
            } else {
                expr(out, inner);
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            operand(out, lhs, op.precedence());
            let _ = write!(out, " {} ", op.symbol());
            operand(out, rhs, op.precedence() + 1);
        }
        Expr::Call(c) => call(out, c),
    }
}

fn operand(out: &mut String, e: &Expr, min_prec: u8) {
    match e {
        Expr::Binary { op, .. } if op.precedence() < min_prec => {
            out.push('(');
            expr(out, e);
            out.push(')');
        }
        _ => expr(out, e),
    }
}

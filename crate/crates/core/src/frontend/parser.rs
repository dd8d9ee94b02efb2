use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::{FrontendError, Parsed, UnsupportedPragma};

const KEYWORDS: &[&str] = &["void", "int", "long", "float", "double", "char", "if", "else", "for", "return"];

/// Clauses accepted for completeness but irrelevant to race analysis.
const IGNORED_CLAUSES: &[&str] = &[
    "map",
    "default",
    "num_teams",
    "thread_limit",
    "safelen",
    "simdlen",
    "dist_schedule",
    "proc_bind",
    "if",
    "device",
    "aligned",
];

const CONSTRUCT_WORDS: &[&str] = &[
    "parallel",
    "for",
    "simd",
    "single",
    "master",
    "critical",
    "barrier",
    "sections",
    "section",
    "atomic",
    "target",
    "teams",
    "distribute",
];

/// Parse a token stream into an AST. Unsupported pragmas are collected as
/// diagnostics and parsing continues after them.
pub fn parse(tokens: &[Token]) -> Result<Parsed, FrontendError> {
    let mut p = Parser { toks: tokens, pos: 0, unsupported: Vec::new() };
    let ast = p.program()?;
    Ok(Parsed { ast, unsupported: p.unsupported })
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    unsupported: Vec<UnsupportedPragma>,
}

enum PragmaLine {
    Chain(Vec<Directive>),
    Barrier(Directive),
    ThreadPrivate(Clause),
    Unsupported(UnsupportedPragma),
}

/// Outcome of parsing one pragma clause.
enum ClauseResult {
    Clause(Clause),
    Unsupported(String),
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&'t Token> {
        self.toks.get(self.pos + off)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eof_loc(&self) -> SourceLoc {
        match self.toks.last() {
            Some(t) => t.loc.clone(),
            None => SourceLoc::new("".into(), 1, 1),
        }
    }

    fn error(&self, expected: impl Into<String>) -> FrontendError {
        let (loc, found) = match self.peek() {
            Some(t) => (t.loc.clone(), format!("`{}`", t.kind)),
            None => (self.eof_loc(), "end of input".to_string()),
        };
        FrontendError::SyntaxError { loc, expected: expected.into(), found }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Sym(x), .. }) if *x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Ident(x), .. }) if x == w)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<&'t Token, FrontendError> {
        if self.is_sym(s) {
            Ok(self.next().expect("checked"))
        } else {
            Err(self.error(format!("`{s}`")))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<&'t Token, FrontendError> {
        if self.is_word(w) {
            Ok(self.next().expect("checked"))
        } else {
            Err(self.error(format!("`{w}`")))
        }
    }

    fn ident(&mut self) -> Result<Ident, FrontendError> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(name), loc, .. }) if !KEYWORDS.contains(&name.as_str()) => {
                self.pos += 1;
                Ok(Ident { name: name.clone(), loc: loc.clone() })
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn scalar_type(&self) -> Option<ScalarType> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(w), in_pragma: false, .. }) => ScalarType::from_keyword(w),
            _ => None,
        }
    }

    // ---- top level -------------------------------------------------------

    fn program(&mut self) -> Result<Ast, FrontendError> {
        let mut ast = Ast::default();
        while let Some(tok) = self.peek() {
            if tok.kind == TokenKind::PragmaStart {
                match self.pragma_line()? {
                    PragmaLine::ThreadPrivate(c) => ast.globals.push(GlobalItem::ThreadPrivate(c)),
                    PragmaLine::Unsupported(u) => self.unsupported.push(u),
                    PragmaLine::Chain(ds) => {
                        self.unsupported.push(UnsupportedPragma {
                            loc: ds[0].loc.clone(),
                            text: "executable directive at file scope".into(),
                        });
                    }
                    PragmaLine::Barrier(d) => {
                        self.unsupported.push(UnsupportedPragma {
                            loc: d.loc,
                            text: "executable directive at file scope".into(),
                        });
                    }
                }
                continue;
            }
            let is_function = matches!(self.peek_at(2), Some(Token { kind: TokenKind::Sym("("), .. }));
            if is_function {
                ast.functions.push(self.function()?);
            } else if self.scalar_type().is_some() {
                let loc = tok.loc.clone();
                let decl = self.decl()?;
                ast.globals.push(GlobalItem::Decl(decl, loc));
            } else {
                return Err(self.error("function or declaration"));
            }
        }
        if ast.functions.is_empty() {
            return Err(self.error("at least one function"));
        }
        Ok(ast)
    }

    fn function(&mut self) -> Result<FunctionDecl, FrontendError> {
        let loc = self.peek().map(|t| t.loc.clone()).unwrap_or_else(|| self.eof_loc());
        let ret = if self.is_word("void") {
            ReturnType::Void
        } else if self.is_word("int") {
            ReturnType::Int
        } else {
            return Err(self.error("`void` or `int`"));
        };
        self.pos += 1;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if self.is_word("void") && matches!(self.peek_at(1), Some(Token { kind: TokenKind::Sym(")"), .. })) {
            self.pos += 1;
        } else if !self.is_sym(")") {
            loop {
                let ty = self.scalar_type().ok_or_else(|| self.error("parameter type"))?;
                self.pos += 1;
                let name = self.ident()?;
                let array = if self.eat_sym("[") {
                    let len = if self.is_sym("]") { None } else { Some(self.expr()?) };
                    self.expect_sym("]")?;
                    Some(len)
                } else {
                    None
                };
                params.push(Param { ty, name, array });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        if !self.is_sym("{") {
            return Err(self.error("`{`"));
        }
        let body = match self.stmt()?.kind {
            StmtKind::Block(stmts) => stmts,
            _ => unreachable!("brace starts a block"),
        };
        Ok(FunctionDecl { ret, name, params, body, loc })
    }

    // ---- statements ------------------------------------------------------

    fn block_items(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        let mut stmts = Vec::new();
        loop {
            if self.eat_sym("}") {
                return Ok(stmts);
            }
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            if let Some(s) = self.stmt_or_standalone()? {
                stmts.push(s);
            }
        }
    }

    /// A statement, or `None` for a skipped unsupported pragma.
    fn stmt_or_standalone(&mut self) -> Result<Option<Stmt>, FrontendError> {
        if matches!(self.peek(), Some(Token { kind: TokenKind::PragmaStart, .. })) {
            let start = self.pos;
            match self.pragma_line()? {
                PragmaLine::Unsupported(u) => {
                    self.unsupported.push(u);
                    return Ok(None);
                }
                _ => self.pos = start,
            }
        }
        self.stmt().map(Some)
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let tok = self.peek().ok_or_else(|| self.error("statement"))?;
        let loc = tok.loc.clone();
        match &tok.kind {
            TokenKind::PragmaStart => self.pragma_stmt(),
            TokenKind::Sym("{") => {
                self.pos += 1;
                Ok(Stmt { kind: StmtKind::Block(self.block_items()?), loc })
            }
            TokenKind::Sym(";") => {
                self.pos += 1;
                Ok(Stmt { kind: StmtKind::Block(Vec::new()), loc })
            }
            TokenKind::Sym("++") | TokenKind::Sym("--") => {
                let op = if self.eat_sym("++") {
                    AssignOp::Incr
                } else {
                    self.pos += 1;
                    AssignOp::Decr
                };
                let target = self.lvalue()?;
                self.expect_sym(";")?;
                Ok(Stmt { kind: StmtKind::Assign(Assign { target, op, value: None, op_loc: loc.clone() }), loc })
            }
            TokenKind::Ident(w) if w == "if" => self.if_stmt(),
            TokenKind::Ident(w) if w == "for" => self.for_stmt(),
            TokenKind::Ident(w) if ScalarType::from_keyword(w).is_some() => {
                let decl = self.decl()?;
                Ok(Stmt { kind: StmtKind::Decl(decl), loc })
            }
            TokenKind::Ident(_) => {
                if matches!(self.peek_at(1), Some(Token { kind: TokenKind::Sym("("), .. })) {
                    let call = self.call()?;
                    self.expect_sym(";")?;
                    return Ok(Stmt { kind: StmtKind::Call(call), loc });
                }
                let assign = self.assignment()?;
                self.expect_sym(";")?;
                Ok(Stmt { kind: StmtKind::Assign(assign), loc })
            }
            _ => Err(self.error("statement")),
        }
    }

    fn lvalue(&mut self) -> Result<LValue, FrontendError> {
        let base = self.ident()?;
        if self.eat_sym("[") {
            let index = self.expr()?;
            self.expect_sym("]")?;
            Ok(LValue::Index { base, index })
        } else {
            Ok(LValue::Var(base))
        }
    }

    fn assignment(&mut self) -> Result<Assign, FrontendError> {
        let target = self.lvalue()?;
        let op_tok = self.next().ok_or_else(|| self.error("assignment operator"))?;
        let op = match op_tok.kind {
            TokenKind::Sym("=") => AssignOp::Set,
            TokenKind::Sym("+=") => AssignOp::Add,
            TokenKind::Sym("-=") => AssignOp::Sub,
            TokenKind::Sym("*=") => AssignOp::Mul,
            TokenKind::Sym("/=") => AssignOp::Div,
            TokenKind::Sym("++") => AssignOp::Incr,
            TokenKind::Sym("--") => AssignOp::Decr,
            _ => {
                self.pos -= 1;
                return Err(self.error("assignment operator"));
            }
        };
        let value = match op {
            AssignOp::Incr | AssignOp::Decr => None,
            _ => Some(self.expr()?),
        };
        Ok(Assign { target, op, value, op_loc: op_tok.loc.clone() })
    }

    fn decl(&mut self) -> Result<Decl, FrontendError> {
        let ty = self.scalar_type().ok_or_else(|| self.error("type"))?;
        self.pos += 1;
        let mut declarators = Vec::new();
        loop {
            let name = self.ident()?;
            let array_len = if self.eat_sym("[") {
                let len = self.expr()?;
                self.expect_sym("]")?;
                Some(len)
            } else {
                None
            };
            let (init, init_loc) = if self.is_sym("=") {
                let eq = self.next().expect("checked").loc.clone();
                (Some(self.expr()?), Some(eq))
            } else {
                (None, None)
            };
            declarators.push(Declarator { name, array_len, init, init_loc });
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")?;
        Ok(Decl { ty, declarators })
    }

    fn if_stmt(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.expect_word("if")?.loc.clone();
        self.expect_sym("(")?;
        let cond = self.expr()?;
        self.expect_sym(")")?;
        let then_branch = Box::new(self.stmt()?);
        let else_branch = if self.is_word("else") {
            self.pos += 1;
            Some(Box::new(self.stmt()?))
        } else {
            None
        };
        Ok(Stmt { kind: StmtKind::If { cond, then_branch, else_branch }, loc })
    }

    fn for_stmt(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.expect_word("for")?.loc.clone();
        self.expect_sym("(")?;
        let declares_var = if self.is_word("int") || self.is_word("long") {
            self.pos += 1;
            true
        } else {
            false
        };
        let var = self.ident()?;
        let init_loc = self.expect_sym("=")?.loc.clone();
        let init = self.expr()?;
        self.expect_sym(";")?;
        let cond_var = self.ident()?;
        let rel = match self.next().map(|t| &t.kind) {
            Some(TokenKind::Sym("<")) => RelOp::Lt,
            Some(TokenKind::Sym("<=")) => RelOp::Le,
            Some(TokenKind::Sym(">")) => RelOp::Gt,
            Some(TokenKind::Sym(">=")) => RelOp::Ge,
            Some(TokenKind::Sym("!=")) => RelOp::Ne,
            _ => {
                self.pos -= 1;
                return Err(self.error("relational operator"));
            }
        };
        let bound = self.expr()?;
        self.expect_sym(";")?;
        let (step_var, step, step_loc) = if self.is_sym("++") {
            let l = self.next().expect("checked").loc.clone();
            (self.ident()?, 1, l)
        } else {
            let v = self.ident()?;
            if self.is_sym("++") {
                let l = self.next().expect("checked").loc.clone();
                (v, 1, l)
            } else if self.is_sym("+=") {
                let l = self.next().expect("checked").loc.clone();
                match self.next().map(|t| &t.kind) {
                    Some(TokenKind::Int(n)) => (v, *n, l),
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("integer step"));
                    }
                }
            } else {
                return Err(self.error("`++` or `+=`"));
            }
        };
        self.expect_sym(")")?;
        let body = Box::new(self.stmt()?);
        Ok(Stmt {
            kind: StmtKind::For(ForLoop {
                declares_var,
                var,
                init,
                init_loc,
                cond_var,
                rel,
                bound,
                step_var,
                step,
                step_loc,
                body,
            }),
            loc,
        })
    }

    // ---- pragmas ---------------------------------------------------------

    fn pragma_stmt(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.peek().expect("pragma").loc.clone();
        match self.pragma_line()? {
            PragmaLine::Barrier(d) => Ok(Stmt { kind: StmtKind::Barrier(d), loc }),
            PragmaLine::Unsupported(u) => {
                // In a single-statement position: report and parse what follows.
                self.unsupported.push(u);
                self.stmt()
            }
            PragmaLine::ThreadPrivate(c) => {
                self.unsupported.push(UnsupportedPragma {
                    loc: c.loc,
                    text: "threadprivate inside a function".into(),
                });
                self.stmt()
            }
            PragmaLine::Chain(chain) => {
                let innermost = chain.last().expect("non-empty chain").kind;
                let body = if innermost == DirectiveKind::Sections {
                    self.sections_body()?
                } else {
                    self.stmt()?
                };
                self.check_body(&chain, &body)?;
                let mut stmt = body;
                for d in chain.into_iter().rev() {
                    let loc = d.loc.clone();
                    stmt = Stmt { kind: StmtKind::Pragma { directive: d, body: Box::new(stmt) }, loc };
                }
                Ok(stmt)
            }
        }
    }

    /// `{ [stmt] (#pragma omp section stmt)* }`; a leading statement without
    /// a `section` directive is the implicit first section.
    fn sections_body(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.expect_sym("{")?.loc.clone();
        let mut sections = Vec::new();
        loop {
            if self.eat_sym("}") {
                break;
            }
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            let Some(s) = self.stmt_or_standalone()? else { continue };
            let is_section = matches!(
                &s.kind,
                StmtKind::Pragma { directive, .. } if directive.kind == DirectiveKind::Section
            );
            if is_section {
                sections.push(s);
            } else if sections.is_empty() {
                let d = Directive { kind: DirectiveKind::Section, name: None, clauses: Vec::new(), loc: s.loc.clone() };
                let sloc = s.loc.clone();
                sections.push(Stmt { kind: StmtKind::Pragma { directive: d, body: Box::new(s) }, loc: sloc });
            } else {
                return Err(FrontendError::SyntaxError {
                    loc: s.loc,
                    expected: "`#pragma omp section`".into(),
                    found: "statement".into(),
                });
            }
        }
        Ok(Stmt { kind: StmtKind::Block(sections), loc })
    }

    fn check_body(&self, chain: &[Directive], body: &Stmt) -> Result<(), FrontendError> {
        let innermost = chain.last().expect("non-empty chain");
        let fail = |what: &str| FrontendError::SyntaxError {
            loc: body.loc.clone(),
            expected: format!("{what} after `#pragma omp {}`", innermost.kind.keyword()),
            found: "statement".into(),
        };
        if innermost.kind.is_loop_construct() && !is_loop_nest_start(body) {
            return Err(fail("a for loop"));
        }
        if innermost.kind == DirectiveKind::Atomic && !matches!(body.kind, StmtKind::Assign(_)) {
            return Err(fail("an assignment"));
        }
        Ok(())
    }

    /// Tokens remaining on the current pragma line.
    fn pragma_tokens_left(&self) -> bool {
        matches!(self.peek(), Some(t) if t.in_pragma && t.kind != TokenKind::PragmaStart)
    }

    fn skip_pragma_rest(&mut self) -> Vec<String> {
        let mut words = Vec::new();
        while self.pragma_tokens_left() {
            words.push(self.next().expect("checked").kind.to_string());
        }
        words
    }

    fn pragma_word(&self) -> Option<&'t str> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(w), in_pragma: true, .. }) => Some(w.as_str()),
            _ => None,
        }
    }

    fn pragma_line(&mut self) -> Result<PragmaLine, FrontendError> {
        let start_tok = self.next().expect("pragma start");
        let loc = start_tok.loc.clone();
        let start = self.pos;
        let unsupported = |p: &mut Self, reason: Option<String>| {
            p.pos = start;
            let mut text = String::from("#pragma");
            for w in p.skip_pragma_rest() {
                text.push(' ');
                text.push_str(&w);
            }
            if let Some(r) = reason {
                text.push_str(&format!(" ({r})"));
            }
            PragmaLine::Unsupported(UnsupportedPragma { loc: loc.clone(), text })
        };

        if self.pragma_word() != Some("omp") {
            return Ok(unsupported(self, None));
        }
        self.pos += 1;

        if self.pragma_word() == Some("threadprivate") {
            let cloc = self.next().expect("checked").loc.clone();
            let vars = self.pragma_var_list()?;
            if self.pragma_tokens_left() {
                return Err(self.error("end of pragma"));
            }
            return Ok(PragmaLine::ThreadPrivate(Clause { kind: ClauseKind::ThreadPrivate, vars, loc: cloc }));
        }

        let mut kinds: Vec<(DirectiveKind, Option<String>)> = Vec::new();
        while let Some(w) = self.pragma_word().filter(|w| CONSTRUCT_WORDS.contains(w)) {
            self.pos += 1;
            let kind = match w {
                "parallel" => DirectiveKind::Parallel,
                "for" => DirectiveKind::For,
                "simd" => DirectiveKind::Simd,
                "single" => DirectiveKind::Single,
                "master" => DirectiveKind::Master,
                "critical" => DirectiveKind::Critical,
                "barrier" => DirectiveKind::Barrier,
                "sections" => DirectiveKind::Sections,
                "section" => DirectiveKind::Section,
                "atomic" => DirectiveKind::Atomic,
                "target" => DirectiveKind::Target,
                "teams" => DirectiveKind::Teams,
                _ => DirectiveKind::Distribute,
            };
            let mut name = None;
            if kind == DirectiveKind::Critical && self.pragma_tokens_left() && self.is_sym("(") {
                self.pos += 1;
                let id = self.ident()?;
                self.expect_sym(")")?;
                name = Some(id.name);
            }
            if kind == DirectiveKind::Atomic {
                if let Some("read" | "write" | "update" | "capture") = self.pragma_word() {
                    let w = self.pragma_word().expect("checked");
                    if w != "update" {
                        return Ok(unsupported(self, Some(format!("atomic {w}"))));
                    }
                    self.pos += 1;
                }
            }
            if kind == DirectiveKind::For && kinds.last().map(|k| k.0) == Some(DirectiveKind::Parallel) {
                kinds.last_mut().expect("checked").0 = DirectiveKind::ParallelFor;
            } else {
                kinds.push((kind, name));
            }
        }
        if kinds.is_empty() {
            return Ok(unsupported(self, None));
        }
        if !valid_combination(&kinds.iter().map(|k| k.0).collect::<Vec<_>>()) {
            return Ok(unsupported(self, Some("unsupported directive combination".into())));
        }

        let mut clauses = Vec::new();
        while self.pragma_tokens_left() {
            if self.eat_sym(",") {
                continue;
            }
            match self.clause()? {
                ClauseResult::Clause(c) => clauses.push(c),
                ClauseResult::Unsupported(name) => {
                    return Ok(unsupported(self, Some(format!("unsupported clause `{name}`"))));
                }
            }
        }

        let mut chain: Vec<Directive> = kinds
            .into_iter()
            .map(|(kind, name)| Directive { kind, name, clauses: Vec::new(), loc: loc.clone() })
            .collect();

        if chain.len() == 1 && chain[0].kind == DirectiveKind::Barrier {
            if let Some(c) = clauses.first() {
                return Err(FrontendError::SyntaxError {
                    loc: c.loc.clone(),
                    expected: "no clauses on `barrier`".into(),
                    found: "clause".into(),
                });
            }
            return Ok(PragmaLine::Barrier(chain.pop().expect("one")));
        }

        for c in clauses {
            let target = if c.kind == ClauseKind::NoWait {
                chain.iter().rposition(|d| {
                    matches!(d.kind, DirectiveKind::For | DirectiveKind::Sections | DirectiveKind::Single)
                })
            } else {
                Some(chain.len() - 1)
            };
            match target {
                Some(i) => chain[i].clauses.push(c),
                None => {
                    return Err(FrontendError::SyntaxError {
                        loc: c.loc,
                        expected: "`nowait` only on `for`, `sections` or `single`".into(),
                        found: "`nowait`".into(),
                    })
                }
            }
        }
        Ok(PragmaLine::Chain(chain))
    }

    fn pragma_var_list(&mut self) -> Result<Vec<Ident>, FrontendError> {
        self.expect_sym("(")?;
        let mut vars = vec![self.ident()?];
        while self.eat_sym(",") {
            vars.push(self.ident()?);
        }
        self.expect_sym(")")?;
        Ok(vars)
    }

    fn raw_payload(&mut self) -> Result<String, FrontendError> {
        self.expect_sym("(")?;
        let mut depth = 1;
        let mut words = Vec::new();
        while self.pragma_tokens_left() {
            let t = self.next().expect("checked");
            match t.kind {
                TokenKind::Sym("(") => depth += 1,
                TokenKind::Sym(")") => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(words.join(" "));
                    }
                }
                _ => {}
            }
            words.push(t.kind.to_string());
        }
        Err(self.error("`)`"))
    }

    fn clause(&mut self) -> Result<ClauseResult, FrontendError> {
        let Some(word) = self.pragma_word() else {
            return Err(self.error("clause"));
        };
        let loc = self.next().expect("checked").loc.clone();
        let simple = |kind| ClauseKind::clone(&kind);
        let kind = match word {
            "shared" => simple(ClauseKind::Shared),
            "private" => simple(ClauseKind::Private),
            "firstprivate" => simple(ClauseKind::FirstPrivate),
            "lastprivate" => simple(ClauseKind::LastPrivate),
            "nowait" => return Ok(ClauseResult::Clause(Clause { kind: ClauseKind::NoWait, vars: Vec::new(), loc })),
            "num_threads" => {
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                return Ok(ClauseResult::Clause(Clause { kind: ClauseKind::NumThreads(e), vars: Vec::new(), loc }));
            }
            "schedule" => {
                let payload = self.raw_payload()?;
                return Ok(ClauseResult::Clause(Clause { kind: ClauseKind::Schedule(payload), vars: Vec::new(), loc }));
            }
            "reduction" => {
                self.expect_sym("(")?;
                let op_text = match self.next() {
                    Some(t) => t.kind.to_string(),
                    None => return Err(self.error("reduction operator")),
                };
                let Some(op) = ReductionOp::from_symbol(&op_text) else {
                    return Ok(ClauseResult::Unsupported(format!("reduction({op_text}:...)")));
                };
                self.expect_sym(":")?;
                let mut vars = vec![self.ident()?];
                while self.eat_sym(",") {
                    vars.push(self.ident()?);
                }
                self.expect_sym(")")?;
                return Ok(ClauseResult::Clause(Clause { kind: ClauseKind::Reduction(op), vars, loc }));
            }
            w if IGNORED_CLAUSES.contains(&w) => {
                let payload = if self.pragma_tokens_left() && self.is_sym("(") { Some(self.raw_payload()?) } else { None };
                return Ok(ClauseResult::Clause(Clause {
                    kind: ClauseKind::Ignored { name: w.to_string(), payload },
                    vars: Vec::new(),
                    loc,
                }));
            }
            other => return Ok(ClauseResult::Unsupported(other.to_string())),
        };
        let vars = self.pragma_var_list()?;
        Ok(ClauseResult::Clause(Clause { kind, vars, loc }))
    }

    // ---- expressions -----------------------------------------------------

    fn call(&mut self) -> Result<CallExpr, FrontendError> {
        let callee = self.ident()?;
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            args.push(self.expr()?);
            while self.eat_sym(",") {
                args.push(self.expr()?);
            }
        }
        self.expect_sym(")")?;
        Ok(CallExpr { callee, args })
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        let Some(Token { kind: TokenKind::Sym(s), .. }) = self.peek() else {
            return None;
        };
        Some(match *s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop().filter(|op| op.precedence() >= min_prec) {
            self.pos += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let op = if self.is_sym("-") {
            Some(UnOp::Neg)
        } else if self.is_sym("!") {
            Some(UnOp::Not)
        } else {
            None
        };
        if let Some(op) = op {
            let loc = self.next().expect("checked").loc.clone();
            let expr = self.unary()?;
            return Ok(Expr::Unary { op, expr: Box::new(expr), loc });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        let Some(tok) = self.peek() else {
            return Err(self.error("expression"));
        };
        match &tok.kind {
            TokenKind::Int(v) => {
                self.pos += 1;
                Ok(Expr::Int(*v, tok.loc.clone()))
            }
            TokenKind::Float(s) => {
                self.pos += 1;
                Ok(Expr::Float(s.clone(), tok.loc.clone()))
            }
            TokenKind::Str(s) => {
                self.pos += 1;
                Ok(Expr::Str(s.clone(), tok.loc.clone()))
            }
            TokenKind::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            TokenKind::Ident(_) => {
                if matches!(self.peek_at(1), Some(Token { kind: TokenKind::Sym("("), .. })) {
                    return Ok(Expr::Call(self.call()?));
                }
                let base = self.ident()?;
                if self.eat_sym("[") {
                    let index = self.expr()?;
                    self.expect_sym("]")?;
                    Ok(Expr::Index { base, index: Box::new(index) })
                } else {
                    Ok(Expr::Var(base))
                }
            }
            _ => Err(self.error("expression")),
        }
    }
}

fn is_loop_nest_start(body: &Stmt) -> bool {
    match &body.kind {
        StmtKind::For(_) => true,
        StmtKind::Pragma { directive, body } => directive.kind.is_loop_construct() && is_loop_nest_start(body),
        _ => false,
    }
}

/// Combined constructs must list their parts in nesting order.
fn valid_combination(kinds: &[DirectiveKind]) -> bool {
    use DirectiveKind::*;
    if kinds.len() == 1 {
        return true;
    }
    let rank = |k: DirectiveKind| -> Option<u8> {
        Some(match k {
            Target => 0,
            Teams => 1,
            Distribute => 2,
            Parallel | ParallelFor => 3,
            For | Sections => 4,
            Simd => 5,
            _ => return None,
        })
    };
    let mut last = None;
    for (i, &k) in kinds.iter().enumerate() {
        let Some(r) = rank(k) else { return false };
        if last.is_some_and(|l| r <= l) {
            return false;
        }
        // `parallel` directly followed by `sections` is the only way a bare
        // `parallel` combines with a later part.
        if k == Parallel && i + 1 < kinds.len() && kinds[i + 1] != Sections {
            return false;
        }
        if k == Sections && i + 1 < kinds.len() {
            return false;
        }
        last = Some(r);
    }
    true
}

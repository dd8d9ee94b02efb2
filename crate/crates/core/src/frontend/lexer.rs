use std::fmt;
use std::sync::Arc;

use super::ast::SourceLoc;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// `#pragma` at the start of a line.
    PragmaStart,
    Ident(String),
    Int(i64),
    Float(String),
    Str(String),
    Sym(&'static str),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::PragmaStart => f.write_str("#pragma"),
            TokenKind::Ident(s) | TokenKind::Float(s) => f.write_str(s),
            TokenKind::Int(v) => write!(f, "{v}"),
            TokenKind::Str(s) => write!(f, "\"{s}\""),
            TokenKind::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: SourceLoc,
    /// True for `#pragma` and every token on its (possibly continued) line.
    pub in_pragma: bool,
}

// Longest first so that `<=` wins over `<`.
const SYMBOLS: &[&str] = &[
    "++", "--", "+=", "-=", "*=", "/=", "<=", ">=", "==", "!=", "&&", "||", "(", ")", "{", "}", "[", "]", ";", ",",
    "=", "+", "-", "*", "/", "%", "<", ">", "!", ":",
];

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: Arc<str>,
    /// Only whitespace seen so far on the current line.
    at_line_start: bool,
    in_pragma: bool,
    tokens: Vec<Token>,
}

/// Split source text into tokens. Pragma lines are kept in the stream,
/// introduced by [`TokenKind::PragmaStart`] and flagged with `in_pragma`.
/// `#include` lines are skipped.
pub fn tokenize(file: &str, source: &str) -> Result<Vec<Token>, FrontendError> {
    let mut lx = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file: Arc::from(file),
        at_line_start: true,
        in_pragma: false,
        tokens: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn loc(&self) -> SourceLoc {
        SourceLoc::new(self.file.clone(), self.line, self.col)
    }

    fn push(&mut self, kind: TokenKind, loc: SourceLoc) {
        self.tokens.push(Token { kind, loc, in_pragma: self.in_pragma });
        self.at_line_start = false;
    }

    fn run(&mut self) -> Result<(), FrontendError> {
        while let Some(c) = self.peek(0) {
            match c {
                '\n' => {
                    self.bump();
                    self.in_pragma = false;
                    self.at_line_start = true;
                }
                '\\' if self.in_pragma && self.peek(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '/' if self.peek(1) == Some('/') => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                '/' if self.peek(1) == Some('*') => self.block_comment()?,
                '#' if self.at_line_start => self.hash_line()?,
                '"' => self.string()?,
                c if c.is_ascii_digit() => self.number()?,
                c if c.is_ascii_alphabetic() || c == '_' => self.word(),
                _ => self.symbol()?,
            }
        }
        Ok(())
    }

    fn block_comment(&mut self) -> Result<(), FrontendError> {
        let loc = self.loc();
        self.bump();
        self.bump();
        loop {
            match self.peek(0) {
                None => {
                    return Err(FrontendError::SyntaxError {
                        loc,
                        expected: "`*/`".into(),
                        found: "end of input".into(),
                    })
                }
                Some('*') if self.peek(1) == Some('/') => {
                    self.bump();
                    self.bump();
                    return Ok(());
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
    }

    fn hash_line(&mut self) -> Result<(), FrontendError> {
        let loc = self.loc();
        let rest: String = self.chars[self.pos + 1..].iter().take_while(|c| c.is_ascii_alphabetic()).collect();
        match rest.as_str() {
            "pragma" => {
                for _ in 0..7 {
                    self.bump();
                }
                self.in_pragma = true;
                self.push(TokenKind::PragmaStart, loc);
                Ok(())
            }
            "include" => {
                while self.peek(0).is_some_and(|c| c != '\n') {
                    self.bump();
                }
                Ok(())
            }
            _ => Err(FrontendError::IllegalCharacter { loc, ch: '#' }),
        }
    }

    fn string(&mut self) -> Result<(), FrontendError> {
        let loc = self.loc();
        self.bump();
        let mut text = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => {
                    text.push('\\');
                    if let Some(c) = self.bump() {
                        text.push(c);
                    }
                }
                Some('\n') | None => {
                    return Err(FrontendError::SyntaxError {
                        loc,
                        expected: "closing `\"`".into(),
                        found: "end of line".into(),
                    })
                }
                Some(c) => text.push(c),
            }
        }
        self.push(TokenKind::Str(text), loc);
        Ok(())
    }

    fn number(&mut self) -> Result<(), FrontendError> {
        let loc = self.loc();
        let mut text = String::new();
        while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
            text.push(c);
            self.bump();
        }
        let mut is_float = false;
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            is_float = true;
            text.push('.');
            self.bump();
            while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
                text.push(c);
                self.bump();
            }
        }
        if matches!(self.peek(0), Some('e' | 'E')) {
            let sign = matches!(self.peek(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                for _ in 0..digit_at {
                    text.push(self.bump().unwrap_or('e'));
                }
                while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
                    text.push(c);
                    self.bump();
                }
            }
        }
        let kind = if is_float {
            TokenKind::Float(text)
        } else {
            TokenKind::Int(text.parse().map_err(|_| FrontendError::IntegerOverflow { loc: loc.clone() })?)
        };
        self.push(kind, loc);
        Ok(())
    }

    fn word(&mut self) {
        let loc = self.loc();
        let mut text = String::new();
        while let Some(c) = self.peek(0).filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
            text.push(c);
            self.bump();
        }
        self.push(TokenKind::Ident(text), loc);
    }

    fn symbol(&mut self) -> Result<(), FrontendError> {
        let loc = self.loc();
        for sym in SYMBOLS {
            let matches = sym.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c));
            if matches {
                for _ in 0..sym.len() {
                    self.bump();
                }
                self.push(TokenKind::Sym(sym), loc);
                return Ok(());
            }
        }
        let ch = self.peek(0).unwrap_or('\0');
        Err(FrontendError::IllegalCharacter { loc, ch })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize("t.c", src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn barrier_pragma() {
        let toks = tokenize("t.c", "#pragma omp barrier").unwrap();
        let k: Vec<_> = toks.iter().map(|t| t.kind.clone()).collect();
        assert_eq!(
            k,
            vec![TokenKind::PragmaStart, TokenKind::Ident("omp".into()), TokenKind::Ident("barrier".into())]
        );
        assert!(toks.iter().all(|t| t.in_pragma));
        assert_eq!((toks[0].loc.line, toks[0].loc.col), (1, 1));
        assert_eq!(toks[1].loc.col, 9);
        assert_eq!(toks[2].loc.col, 13);
    }

    #[test]
    fn assignment_statement() {
        let toks = tokenize("t.c", "a[i] = b + a[i]*5;").unwrap();
        // a [ i ] = b + a [ i ] * 5 ;
        assert_eq!(toks.len(), 14);
        assert_eq!(toks[0].loc.col, 1);
        assert_eq!(toks[4].kind, TokenKind::Sym("="));
        assert_eq!(toks[4].loc.col, 6);
        assert!(toks.iter().all(|t| !t.in_pragma));
    }

    #[test]
    fn nowait_follows_for() {
        let src = "#pragma omp parallel shared(b, error)\n{\n#pragma omp for nowait\n  for(i = 0; i < len; i++)\n    a[i] = b + a[i]*5;\n}\n";
        let k = kinds(src);
        let pos = k
            .windows(2)
            .position(|w| w[0] == TokenKind::Ident("for".into()) && w[1] == TokenKind::Ident("nowait".into()));
        assert!(pos.is_some());
    }

    #[test]
    fn pragma_ends_at_newline() {
        let toks = tokenize("t.c", "#pragma omp single\nx = 1;").unwrap();
        assert!(toks[2].in_pragma);
        assert!(!toks[3].in_pragma);
        assert_eq!(toks[3].loc.line, 2);
    }

    #[test]
    fn pragma_continuation_line() {
        let toks = tokenize("t.c", "#pragma omp parallel \\\n  private(x)\nx = 1;").unwrap();
        let last_pragma = toks.iter().rposition(|t| t.in_pragma).unwrap();
        assert_eq!(toks[last_pragma].kind, TokenKind::Sym(")"));
    }

    #[test]
    fn comments_and_includes_are_skipped() {
        let k = kinds("#include <omp.h>\n// hi\n/* a\n b */ x");
        assert_eq!(k, vec![TokenKind::Ident("x".into())]);
    }

    #[test]
    fn hash_mid_line_is_illegal() {
        let err = tokenize("t.c", "x = 1; #pragma omp barrier").unwrap_err();
        assert!(matches!(err, FrontendError::IllegalCharacter { ch: '#', .. }));
    }

    #[test]
    fn illegal_character_location() {
        let err = tokenize("t.c", "x = 1;\n  y @ 2;").unwrap_err();
        match err {
            FrontendError::IllegalCharacter { loc, ch } => {
                assert_eq!(ch, '@');
                assert_eq!((loc.line, loc.col), (2, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn numbers() {
        assert_eq!(kinds("12 1.5 2e3"), vec![
            TokenKind::Int(12),
            TokenKind::Float("1.5".into()),
            TokenKind::Float("2e3".into())
        ]);
        assert!(matches!(tokenize("t.c", "99999999999999999999"), Err(FrontendError::IntegerOverflow { .. })));
    }

    #[test]
    fn unterminated_comment() {
        assert!(matches!(tokenize("t.c", "/* never"), Err(FrontendError::SyntaxError { .. })));
    }
}

use std::collections::BTreeMap;
use std::fmt;

use super::ast::{BinOp, Expr, UnOp};

/// Array subscript in the form `Σ cᵢ·vᵢ + c`, or an opaque marker when the
/// expression is not affine (`a[b[i]]`, `a[i*j]`, calls, overflow).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineExpr {
    pub terms: BTreeMap<String, i64>,
    pub constant: i64,
    pub symbolic: bool,
}

impl AffineExpr {
    pub fn constant(c: i64) -> Self {
        AffineExpr { terms: BTreeMap::new(), constant: c, symbolic: false }
    }

    pub fn var(name: &str) -> Self {
        AffineExpr { terms: BTreeMap::from([(name.to_string(), 1)]), constant: 0, symbolic: false }
    }

    pub fn symbolic() -> Self {
        AffineExpr { terms: BTreeMap::new(), constant: 0, symbolic: true }
    }

    pub fn from_expr(e: &Expr) -> Self {
        match e {
            Expr::Int(v, _) => AffineExpr::constant(*v),
            Expr::Var(id) => AffineExpr::var(&id.name),
            Expr::Unary { op: UnOp::Neg, expr, .. } => AffineExpr::from_expr(expr).scale(-1),
            Expr::Binary { op: BinOp::Add, lhs, rhs } => AffineExpr::from_expr(lhs).add(&AffineExpr::from_expr(rhs)),
            Expr::Binary { op: BinOp::Sub, lhs, rhs } => {
                AffineExpr::from_expr(lhs).add(&AffineExpr::from_expr(rhs).scale(-1))
            }
            Expr::Binary { op: BinOp::Mul, lhs, rhs } => {
                let (l, r) = (AffineExpr::from_expr(lhs), AffineExpr::from_expr(rhs));
                match (l.as_constant(), r.as_constant()) {
                    (Some(c), _) => r.scale(c),
                    (_, Some(c)) => l.scale(c),
                    _ => AffineExpr::symbolic(),
                }
            }
            _ => match e.const_value() {
                Some(c) => AffineExpr::constant(c),
                None => AffineExpr::symbolic(),
            },
        }
    }

    pub fn as_constant(&self) -> Option<i64> {
        (!self.symbolic && self.terms.is_empty()).then_some(self.constant)
    }

    /// `(v, c)` when the expression is exactly `1·v + c`.
    pub fn as_unit_offset(&self) -> Option<(&str, i64)> {
        if self.symbolic || self.terms.len() != 1 {
            return None;
        }
        let (v, &k) = self.terms.iter().next()?;
        (k == 1).then_some((v.as_str(), self.constant))
    }

    fn scale(&self, c: i64) -> Self {
        if self.symbolic {
            return AffineExpr::symbolic();
        }
        let mut out = AffineExpr::constant(0);
        let Some(k) = self.constant.checked_mul(c) else { return AffineExpr::symbolic() };
        out.constant = k;
        for (v, &coef) in &self.terms {
            let Some(k) = coef.checked_mul(c) else { return AffineExpr::symbolic() };
            if k != 0 {
                out.terms.insert(v.clone(), k);
            }
        }
        out
    }

    fn add(&self, other: &Self) -> Self {
        if self.symbolic || other.symbolic {
            return AffineExpr::symbolic();
        }
        let Some(c) = self.constant.checked_add(other.constant) else { return AffineExpr::symbolic() };
        let mut out = AffineExpr { terms: self.terms.clone(), constant: c, symbolic: false };
        for (v, &coef) in &other.terms {
            let cur = out.terms.get(v).copied().unwrap_or(0);
            let Some(k) = cur.checked_add(coef) else { return AffineExpr::symbolic() };
            if k == 0 {
                out.terms.remove(v);
            } else {
                out.terms.insert(v.clone(), k);
            }
        }
        out
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbolic {
            return f.write_str("<symbolic>");
        }
        let mut first = true;
        for (v, k) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if *k == 1 {
                f.write_str(v)?;
            } else {
                write!(f, "{k}*{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0 {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::frontend::ast::StmtKind;

    fn subscript(src: &str) -> AffineExpr {
        let text = format!("void f() {{ x = {src}; }}");
        let parsed = parse_source("t.c", &text).unwrap();
        let StmtKind::Assign(a) = &parsed.ast.functions[0].body[0].kind else { panic!() };
        AffineExpr::from_expr(a.value.as_ref().unwrap())
    }

    #[test]
    fn unit_offsets() {
        assert_eq!(subscript("i").as_unit_offset(), Some(("i", 0)));
        assert_eq!(subscript("i + 1").as_unit_offset(), Some(("i", 1)));
        assert_eq!(subscript("1 + i - 3").as_unit_offset(), Some(("i", -2)));
        assert_eq!(subscript("2 * i").as_unit_offset(), None);
        assert_eq!(subscript("i * 2 - i").as_unit_offset(), Some(("i", 0)));
    }

    #[test]
    fn constants() {
        assert_eq!(subscript("9").as_constant(), Some(9));
        assert_eq!(subscript("3 * 4 - 2").as_constant(), Some(10));
        assert_eq!(subscript("i - i + 4").as_constant(), Some(4));
    }

    #[test]
    fn non_affine_is_symbolic() {
        assert!(subscript("b[i]").symbolic);
        assert!(subscript("i * j").symbolic);
        assert!(subscript("i / 2").symbolic);
        assert!(subscript("g(i)").symbolic);
        assert!(subscript("9223372036854775807 * i + 9223372036854775807 * i").symbolic);
    }

    #[test]
    fn display() {
        assert_eq!(subscript("2*i + j + 3").to_string(), "2*i + j + 3");
        assert_eq!(subscript("0").to_string(), "0");
        assert_eq!(subscript("b[i]").to_string(), "<symbolic>");
    }
}

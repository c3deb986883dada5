//! Guard and template expressions over phase and colour variables.
//!
//! Values are plain integers. Phases are read modulo 360 wherever they are
//! used; colours are `+1`/`-1`. Equality tests compare modulo 360, which is
//! exact for both kinds since `+1` and `-1` stay distinct.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub type Binding = BTreeMap<String, i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("unbound variable {0}")]
    Unbound(String),

    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Lit(i64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn eval(&self, b: &Binding) -> Result<i64, ExprError> {
        Ok(match self {
            Expr::Lit(v) => *v,
            Expr::Var(n) => *b.get(n).ok_or_else(|| ExprError::Unbound(n.clone()))?,
            Expr::Neg(e) => -e.eval(b)?,
            Expr::Add(x, y) => x.eval(b)? + y.eval(b)?,
            Expr::Sub(x, y) => x.eval(b)? - y.eval(b)?,
            Expr::Mul(x, y) => x.eval(b)? * y.eval(b)?,
        })
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(n) => out.push(n.clone()),
            Expr::Neg(e) => e.vars(out),
            Expr::Add(x, y) | Expr::Sub(x, y) | Expr::Mul(x, y) => {
                x.vars(out);
                y.vars(out);
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Lit(v) if *v < 0 => 2,
            Expr::Lit(_) | Expr::Var(_) => 3,
            Expr::Neg(_) => 2,
            Expr::Mul(..) => 1,
            Expr::Add(..) | Expr::Sub(..) => 0,
        }
    }

    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        let mut p = Parser::new(text);
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Var(n) => f.write_str(n),
            Expr::Neg(e) => {
                f.write_str("-")?;
                wrap(f, e, 3)
            }
            Expr::Add(x, y) => {
                wrap(f, x, 0)?;
                f.write_str("+")?;
                wrap(f, y, 1)
            }
            Expr::Sub(x, y) => {
                wrap(f, x, 0)?;
                f.write_str("-")?;
                wrap(f, y, 1)
            }
            Expr::Mul(x, y) => {
                wrap(f, x, 1)?;
                f.write_str("*")?;
                wrap(f, y, 2)
            }
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
}

/// One conjunct of a guard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Binds a fresh variable.
    Define(String, Expr),
    Test(Expr, CmpOp, Expr),
    /// Integrality; always true for bound integer phases, kept for fidelity
    /// with guards written as `int(A)`.
    Int(String),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Define(v, e) => write!(f, "{v} = {e}"),
            Constraint::Test(a, CmpOp::Eq, b) => write!(f, "{a} == {b}"),
            Constraint::Test(a, CmpOp::Ne, b) => write!(f, "{a} != {b}"),
            Constraint::Int(v) => write!(f, "int({v})"),
        }
    }
}

impl Constraint {
    /// Parses one constraint. `X = e` becomes a definition when `X` is not
    /// in `bound`, otherwise an equality test.
    pub fn parse(text: &str, bound: &dyn Fn(&str) -> bool) -> Result<Constraint, ExprError> {
        let t = text.trim();
        if let Some(inner) = t.strip_prefix("int(").and_then(|r| r.strip_suffix(')')) {
            let v = inner.trim();
            if is_ident(v) {
                return Ok(Constraint::Int(v.to_string()));
            }
            return Err(ExprError::Syntax { pos: 4, msg: "int() takes a variable".into() });
        }
        for (op, cmp) in [("=:=", CmpOp::Eq), ("==", CmpOp::Eq), ("!=", CmpOp::Ne), ("=\\=", CmpOp::Ne)] {
            if let Some(i) = t.find(op) {
                let lhs = Expr::parse(&t[..i])?;
                let rhs = Expr::parse(&t[i + op.len()..]).map_err(|e| shift(e, i + op.len()))?;
                return Ok(Constraint::Test(lhs, cmp, rhs));
            }
        }
        if let Some(i) = t.find('=') {
            let name = t[..i].trim();
            let rhs = Expr::parse(&t[i + 1..]).map_err(|e| shift(e, i + 1))?;
            if is_ident(name) && !bound(name) {
                return Ok(Constraint::Define(name.to_string(), rhs));
            }
            let lhs = Expr::parse(&t[..i])?;
            return Ok(Constraint::Test(lhs, CmpOp::Eq, rhs));
        }
        Err(ExprError::Syntax { pos: 0, msg: format!("expected a comparison or int(..) in {t:?}") })
    }
}

fn shift(e: ExprError, by: usize) -> ExprError {
    match e {
        ExprError::Syntax { pos, msg } => ExprError::Syntax { pos: pos + by, msg },
        other => other,
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A conjunction evaluated left to right; definitions extend the binding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Guard(pub Vec<Constraint>);

impl Guard {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn eval_guard(g: &Guard, binding: &mut Binding) -> Result<bool, ExprError> {
    for c in &g.0 {
        match c {
            Constraint::Define(v, e) => {
                let val = e.eval(binding)?;
                binding.insert(v.clone(), val);
            }
            Constraint::Test(a, op, b) => {
                let same = (a.eval(binding)? - b.eval(binding)?).rem_euclid(360) == 0;
                if same != (*op == CmpOp::Eq) {
                    return Ok(false);
                }
            }
            Constraint::Int(v) => {
                if !binding.contains_key(v) {
                    return Err(ExprError::Unbound(v.clone()));
                }
            }
        }
    }
    Ok(true)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Parser { src: s.as_bytes(), pos: 0 }
    }

    fn err(&self, msg: &str) -> ExprError {
        ExprError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    e = Expr::Add(Box::new(e), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    e = Expr::Sub(Box::new(e), Box::new(self.term()?));
                }
                _ => return Ok(e),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(match self.unary()? {
                Expr::Lit(v) => Expr::Lit(-v),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                s.parse().map(Expr::Lit).map_err(|_| self.err("integer out of range"))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                Ok(Expr::Var(std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string()))
            }
            _ => Err(self.err("expected a number, variable or '('")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bind(pairs: &[(&str, i64)]) -> Binding {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn guard(src: &[&str], bound: &[&str]) -> Guard {
        let mut names: Vec<String> = bound.iter().map(|s| s.to_string()).collect();
        let mut out = Vec::new();
        for s in src {
            let c = Constraint::parse(s, &|n| names.iter().any(|x| x == n)).unwrap();
            if let Constraint::Define(v, _) = &c {
                names.push(v.clone());
            }
            out.push(c);
        }
        Guard(out)
    }

    #[test]
    fn colour_product() {
        let g = guard(&["C1*C2 =:= -1"], &["C1", "C2"]);
        assert!(eval_guard(&g, &mut bind(&[("C1", 1), ("C2", -1)])).unwrap());
        assert!(!eval_guard(&g, &mut bind(&[("C1", -1), ("C2", -1)])).unwrap());
    }

    #[test]
    fn integrality() {
        let g = guard(&["int(A)"], &["A"]);
        assert!(eval_guard(&g, &mut bind(&[("A", 90)])).unwrap());
        assert_eq!(eval_guard(&g, &mut Binding::new()), Err(ExprError::Unbound("A".into())));
    }

    #[test]
    fn sum_definition() {
        let g = guard(&["ApB = A+B"], &["A", "B"]);
        assert!(matches!(g.0[0], Constraint::Define(..)));
        let mut b = bind(&[("A", 270), ("B", 180)]);
        assert!(eval_guard(&g, &mut b).unwrap());
        assert_eq!(b["ApB"].rem_euclid(360), 90);
    }

    #[test]
    fn equals_on_bound_name_is_a_test() {
        let g = guard(&["A = 0"], &["A"]);
        assert!(matches!(g.0[0], Constraint::Test(..)));
        assert!(!eval_guard(&g, &mut bind(&[("A", 90)])).unwrap());
        assert!(eval_guard(&g, &mut bind(&[("A", 360)])).unwrap());
    }

    #[test]
    fn syntax_error_position() {
        assert!(matches!(Expr::parse("A + * B"), Err(ExprError::Syntax { pos: 4, .. })));
        assert!(Expr::parse("(A").is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![(-400i64..400).prop_map(Expr::Lit), "[A-D]".prop_map(Expr::Var)];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_preserves_value(e in arb_expr(), a in -360i64..360, b in -360i64..360) {
            let back = Expr::parse(&e.to_string()).unwrap();
            let env = bind(&[("A", a), ("B", b), ("C", 1), ("D", -1)]);
            prop_assert_eq!(back.eval(&env).unwrap(), e.eval(&env).unwrap());
            prop_assert_eq!(Expr::parse(&back.to_string()).unwrap(), back);
        }
    }
}

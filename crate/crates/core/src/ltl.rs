//! LTL over explored state spaces.
//!
//! `check` negates the formula, builds a generalized Büchi automaton with the
//! tableau construction, degeneralizes it with a round-robin counter and looks
//! for an accepting lasso in the product by nested depth-first search. Final
//! states are completed with a self-loop labelled [`FINAL_LOOP`].

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::explore::{State, StateSpace};

pub const FINAL_LOOP: &str = "(final)";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LtlError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("state space is not exhaustive")]
    NonExhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    Spiders,
    HBoxes,
    Wires,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prop {
    True,
    False,
    Final,
    Count(Quantity, Cmp, usize),
    Budget(String, i64),
    TokenHead(String),
}

impl Prop {
    pub fn eval(&self, sp: &StateSpace, id: usize) -> bool {
        let st: &State = sp.state(id);
        let d = st.diagram();
        match self {
            Prop::True => true,
            Prop::False => false,
            Prop::Final => sp.is_final(id),
            Prop::Count(q, c, k) => {
                let n = match q {
                    Quantity::Spiders => d.spider_count(),
                    Quantity::HBoxes => d.hbox_count(),
                    Quantity::Wires => d.wire_count(),
                };
                match c {
                    Cmp::Le => n <= *k,
                    Cmp::Eq => n == *k,
                }
            }
            Prop::Budget(name, v) => st.budget(name).map(i64::from) == Some(*v),
            Prop::TokenHead(name) => st.token_head() == Some(name.as_str()),
        }
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prop::True => write!(f, "true"),
            Prop::False => write!(f, "false"),
            Prop::Final => write!(f, "final"),
            Prop::Count(q, c, k) => {
                let q = match q {
                    Quantity::Spiders => "spiders",
                    Quantity::HBoxes => "hboxes",
                    Quantity::Wires => "wires",
                };
                let c = if *c == Cmp::Le { "<=" } else { "=" };
                write!(f, "{q}{c}{k}")
            }
            Prop::Budget(n, v) => write!(f, "budget({n})={v}"),
            Prop::TokenHead(n) => write!(f, "token_head({n})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Prop(Prop),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn prop(p: Prop) -> Formula {
        Formula::Prop(p)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    /// Every proposition occurring in the formula, without repeats.
    pub fn props(&self) -> Vec<Prop> {
        fn walk(f: &Formula, out: &mut Vec<Prop>) {
            match f {
                Formula::Prop(p) => {
                    if !out.contains(p) {
                        out.push(p.clone());
                    }
                }
                Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) | Formula::Always(a) => walk(a, out),
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Prop(p) => write!(f, "{p}"),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::Next(a) => write!(f, "X {a}"),
            Formula::Eventually(a) => write!(f, "<>{a}"),
            Formula::Always(a) => write!(f, "[]{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Not,
    And,
    Or,
    Implies,
    Next,
    Eventually,
    Always,
    Until,
    Open,
    Close,
    Prop(Prop),
}

fn syntax(pos: usize, msg: impl Into<String>) -> LtlError {
    LtlError::Syntax { pos, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let b = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    let ident_char = |c: u8| c.is_ascii_alphanumeric() || c == b'_';
    let skip_ws = |i: &mut usize| {
        while *i < b.len() && b[*i].is_ascii_whitespace() {
            *i += 1;
        }
    };
    let number = |i: &mut usize| -> Result<i64, LtlError> {
        skip_ws(i);
        let start = *i;
        if *i < b.len() && b[*i] == b'-' {
            *i += 1;
        }
        while *i < b.len() && b[*i].is_ascii_digit() {
            *i += 1;
        }
        text[start..*i].parse().map_err(|_| syntax(start, "expected an integer"))
    };
    let expect = |i: &mut usize, s: &str| -> Result<(), LtlError> {
        skip_ws(i);
        if text[*i..].starts_with(s) {
            *i += s.len();
            Ok(())
        } else {
            Err(syntax(*i, format!("expected {s:?}")))
        }
    };
    let name = |i: &mut usize| -> Result<String, LtlError> {
        skip_ws(i);
        let start = *i;
        while *i < b.len() && ident_char(b[*i]) {
            *i += 1;
        }
        if start == *i {
            return Err(syntax(start, "expected a name"));
        }
        Ok(text[start..*i].to_string())
    };
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let rest = &text[i..];
        let tok = if rest.starts_with("<>") {
            i += 2;
            Tok::Eventually
        } else if rest.starts_with("[]") {
            i += 2;
            Tok::Always
        } else if rest.starts_with("->") {
            i += 2;
            Tok::Implies
        } else if rest.starts_with("&&") || rest.starts_with("||") {
            i += 2;
            if c == b'&' {
                Tok::And
            } else {
                Tok::Or
            }
        } else if c == b'!' {
            i += 1;
            Tok::Not
        } else if c == b'&' {
            i += 1;
            Tok::And
        } else if c == b'|' {
            i += 1;
            Tok::Or
        } else if c == b'(' {
            i += 1;
            Tok::Open
        } else if c == b')' {
            i += 1;
            Tok::Close
        } else if ident_char(c) {
            let word = name(&mut i)?;
            match word.as_str() {
                "X" => Tok::Next,
                "U" => Tok::Until,
                "F" => Tok::Eventually,
                "G" => Tok::Always,
                "true" => Tok::Prop(Prop::True),
                "false" => Tok::Prop(Prop::False),
                "final" => Tok::Prop(Prop::Final),
                "spiders" | "hboxes" | "wires" => {
                    let q = match word.as_str() {
                        "spiders" => Quantity::Spiders,
                        "hboxes" => Quantity::HBoxes,
                        _ => Quantity::Wires,
                    };
                    skip_ws(&mut i);
                    let cmp = if text[i..].starts_with("<=") {
                        i += 2;
                        Cmp::Le
                    } else if text[i..].starts_with('=') {
                        i += 1;
                        Cmp::Eq
                    } else {
                        return Err(syntax(i, "expected <= or ="));
                    };
                    let at = i;
                    let k = number(&mut i)?;
                    let k = usize::try_from(k).map_err(|_| syntax(at, "count must be non-negative"))?;
                    Tok::Prop(Prop::Count(q, cmp, k))
                }
                "budget" => {
                    expect(&mut i, "(")?;
                    let n = name(&mut i)?;
                    expect(&mut i, ")")?;
                    expect(&mut i, "=")?;
                    Tok::Prop(Prop::Budget(n, number(&mut i)?))
                }
                "token_head" => {
                    expect(&mut i, "(")?;
                    let n = name(&mut i)?;
                    expect(&mut i, ")")?;
                    Tok::Prop(Prop::TokenHead(n))
                }
                other => return Err(syntax(start, format!("unknown proposition {other:?}"))),
            }
        } else {
            return Err(syntax(i, format!("unexpected character {:?}", c as char)));
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn implication(&mut self) -> Result<Formula, LtlError> {
        let a = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let b = self.implication()?;
            return Ok(Formula::Implies(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn disjunction(&mut self) -> Result<Formula, LtlError> {
        let mut a = self.conjunction()?;
        while self.eat(&Tok::Or) {
            a = Formula::or(a, self.conjunction()?);
        }
        Ok(a)
    }

    fn conjunction(&mut self) -> Result<Formula, LtlError> {
        let mut a = self.until()?;
        while self.eat(&Tok::And) {
            a = Formula::and(a, self.until()?);
        }
        Ok(a)
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let a = self.unary()?;
        if self.eat(&Tok::Until) {
            return Ok(Formula::until(a, self.until()?));
        }
        Ok(a)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let at = self.at();
        match self.toks.get(self.pos).map(|(_, t)| t.clone()) {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Next) => {
                self.pos += 1;
                Ok(Formula::next(self.unary()?))
            }
            Some(Tok::Eventually) => {
                self.pos += 1;
                Ok(Formula::eventually(self.unary()?))
            }
            Some(Tok::Always) => {
                self.pos += 1;
                Ok(Formula::always(self.unary()?))
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let f = self.implication()?;
                if !self.eat(&Tok::Close) {
                    return Err(syntax(self.at(), "expected ')'"));
                }
                Ok(f)
            }
            Some(Tok::Prop(p)) => {
                self.pos += 1;
                Ok(Formula::Prop(p))
            }
            Some(_) => Err(syntax(at, "expected a formula")),
            None => Err(syntax(at, "unexpected end of formula")),
        }
    }
}

/// Parses a formula. Precedence from tightest: unary operators, `U`
/// (right associative), `&`, `|`, `->`.
pub fn parse_formula(text: &str) -> Result<Formula, LtlError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, end: text.len() };
    let f = p.implication()?;
    if p.pos != p.toks.len() {
        return Err(syntax(p.at(), "trailing input"));
    }
    Ok(f)
}

/// A finite path through the space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub states: Vec<usize>,
    /// `rules[i]` labels the step `states[i] -> states[i + 1]`.
    pub rules: Vec<String>,
}

/// An infinite run `states[..loop_start]` followed by `states[loop_start..]`
/// repeated forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lasso {
    pub states: Vec<usize>,
    /// `rules[i]` labels the step from `states[i]` to its successor; the last
    /// one closes the loop.
    pub rules: Vec<String>,
    pub loop_start: usize,
}

impl Lasso {
    pub fn successor(&self, i: usize) -> usize {
        if i + 1 < self.states.len() {
            i + 1
        } else {
            self.loop_start
        }
    }

    /// Whether every step is a transition of `sp` (or a final self-loop)
    /// with the recorded label.
    pub fn replays(&self, sp: &StateSpace) -> bool {
        if self.states.is_empty() || self.states[0] != 0 || self.rules.len() != self.states.len() {
            return false;
        }
        (0..self.states.len()).all(|i| {
            let (s, t) = (self.states[i], self.states[self.successor(i)]);
            if s >= sp.len() {
                return false;
            }
            if sp.is_final(s) {
                s == t && self.rules[i] == FINAL_LOOP
            } else {
                sp.outgoing(s).any(|(r, to)| to == t && r == self.rules[i])
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    /// A violating run, present iff a `check` fails.
    pub counterexample: Option<Lasso>,
    /// A path to a satisfying state, present iff a `reachable` query holds.
    pub witness: Option<Path>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", if self.holds { "HOLDS" } else { "VIOLATED" })?;
        if let Some(l) = &self.counterexample {
            for i in 0..l.states.len() {
                if i == l.loop_start {
                    writeln!(f, "-- cycle")?;
                }
                writeln!(f, "s{} -[{}]-> s{}", l.states[i], l.rules[i], l.states[l.successor(i)])?;
            }
        }
        if let Some(p) = &self.witness {
            if p.states.len() == 1 {
                writeln!(f, "s{}", p.states[0])?;
            }
            for (i, r) in p.rules.iter().enumerate() {
                writeln!(f, "s{} -[{}]-> s{}", p.states[i], r, p.states[i + 1])?;
            }
        }
        Ok(())
    }
}

/// Negation normal form, interned so subformula sets are index sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Nnf {
    True,
    False,
    Lit(usize, bool),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
}

#[derive(Default)]
struct Table {
    nodes: Vec<Nnf>,
    props: Vec<Prop>,
}

impl Table {
    fn intern(&mut self, n: Nnf) -> usize {
        if let Some(i) = self.nodes.iter().position(|m| *m == n) {
            return i;
        }
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn prop(&mut self, p: &Prop) -> usize {
        if let Some(i) = self.props.iter().position(|q| q == p) {
            return i;
        }
        self.props.push(p.clone());
        self.props.len() - 1
    }

    fn nnf(&mut self, f: &Formula, neg: bool) -> usize {
        let n = match f {
            Formula::Prop(Prop::True) => {
                if neg {
                    Nnf::False
                } else {
                    Nnf::True
                }
            }
            Formula::Prop(Prop::False) => {
                if neg {
                    Nnf::True
                } else {
                    Nnf::False
                }
            }
            Formula::Prop(p) => Nnf::Lit(self.prop(p), !neg),
            Formula::Not(a) => return self.nnf(a, !neg),
            Formula::And(a, b) | Formula::Or(a, b) => {
                let (x, y) = (self.nnf(a, neg), self.nnf(b, neg));
                if matches!(f, Formula::And(..)) != neg {
                    Nnf::And(x, y)
                } else {
                    Nnf::Or(x, y)
                }
            }
            Formula::Implies(a, b) => {
                let (x, y) = (self.nnf(a, !neg), self.nnf(b, neg));
                if neg {
                    Nnf::And(x, y)
                } else {
                    Nnf::Or(x, y)
                }
            }
            Formula::Next(a) => Nnf::Next(self.nnf(a, neg)),
            Formula::Eventually(a) => {
                let x = self.nnf(a, neg);
                if neg {
                    Nnf::Release(self.intern(Nnf::False), x)
                } else {
                    Nnf::Until(self.intern(Nnf::True), x)
                }
            }
            Formula::Always(a) => {
                let x = self.nnf(a, neg);
                if neg {
                    Nnf::Until(self.intern(Nnf::True), x)
                } else {
                    Nnf::Release(self.intern(Nnf::False), x)
                }
            }
            Formula::Until(a, b) => {
                let (x, y) = (self.nnf(a, neg), self.nnf(b, neg));
                if neg {
                    Nnf::Release(x, y)
                } else {
                    Nnf::Until(x, y)
                }
            }
        };
        self.intern(n)
    }
}

const INIT: usize = usize::MAX;

#[derive(Clone, Debug)]
struct TNode {
    incoming: BTreeSet<usize>,
    new: BTreeSet<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

/// Generalized Büchi automaton from the tableau construction.
struct Gba {
    /// Literals each node requires of the state it reads.
    labels: Vec<Vec<(usize, bool)>>,
    initial: Vec<usize>,
    succ: Vec<Vec<usize>>,
    /// One acceptance set per until subformula.
    accept: Vec<Vec<bool>>,
}

fn expand(t: &Table, mut node: TNode, done: &mut Vec<TNode>) {
    let Some(&eta) = node.new.iter().next() else {
        if let Some(nd) = done.iter_mut().find(|nd| nd.old == node.old && nd.next == node.next) {
            nd.incoming.extend(node.incoming);
            return;
        }
        let id = done.len();
        let next = node.next.clone();
        done.push(node);
        expand(
            t,
            TNode { incoming: BTreeSet::from([id]), new: next, old: BTreeSet::new(), next: BTreeSet::new() },
            done,
        );
        return;
    };
    node.new.remove(&eta);
    let add = |n: &mut TNode, f: usize| {
        if !n.old.contains(&f) {
            n.new.insert(f);
        }
    };
    match t.nodes[eta] {
        Nnf::False => {}
        Nnf::True => {
            node.old.insert(eta);
            expand(t, node, done);
        }
        Nnf::Lit(p, pos) => {
            let clash = node.old.iter().any(|&o| t.nodes[o] == Nnf::Lit(p, !pos));
            if !clash {
                node.old.insert(eta);
                expand(t, node, done);
            }
        }
        Nnf::And(a, b) => {
            node.old.insert(eta);
            add(&mut node, a);
            add(&mut node, b);
            expand(t, node, done);
        }
        Nnf::Next(a) => {
            node.old.insert(eta);
            node.next.insert(a);
            expand(t, node, done);
        }
        Nnf::Or(a, b) | Nnf::Until(a, b) | Nnf::Release(a, b) => {
            node.old.insert(eta);
            let mut n1 = node.clone();
            let mut n2 = node;
            match t.nodes[eta] {
                Nnf::Or(..) => {
                    add(&mut n1, a);
                    add(&mut n2, b);
                }
                Nnf::Until(..) => {
                    add(&mut n1, a);
                    n1.next.insert(eta);
                    add(&mut n2, b);
                }
                _ => {
                    add(&mut n1, b);
                    n1.next.insert(eta);
                    add(&mut n2, a);
                    add(&mut n2, b);
                }
            }
            expand(t, n1, done);
            expand(t, n2, done);
        }
    }
}

fn tableau(t: &Table, root: usize) -> Gba {
    let mut done = Vec::new();
    expand(
        t,
        TNode {
            incoming: BTreeSet::from([INIT]),
            new: BTreeSet::from([root]),
            old: BTreeSet::new(),
            next: BTreeSet::new(),
        },
        &mut done,
    );
    let n = done.len();
    let mut succ = vec![Vec::new(); n];
    let mut initial = Vec::new();
    for (j, nd) in done.iter().enumerate() {
        for &i in &nd.incoming {
            if i == INIT {
                initial.push(j);
            } else {
                succ[i].push(j);
            }
        }
    }
    let labels = done
        .iter()
        .map(|nd| {
            nd.old
                .iter()
                .filter_map(|&f| match t.nodes[f] {
                    Nnf::Lit(p, pos) => Some((p, pos)),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let mut accept: Vec<Vec<bool>> = (0..t.nodes.len())
        .filter_map(|u| match t.nodes[u] {
            Nnf::Until(_, b) => Some(done.iter().map(|nd| !nd.old.contains(&u) || nd.old.contains(&b)).collect()),
            _ => None,
        })
        .collect();
    if accept.is_empty() {
        accept.push(vec![true; n]);
    }
    Gba { labels, initial, succ, accept }
}

/// Kripke structure of the space: final states loop on themselves.
fn kripke(sp: &StateSpace) -> Vec<Vec<(String, usize)>> {
    (0..sp.len())
        .map(|s| {
            if sp.is_final(s) {
                vec![(FINAL_LOOP.to_string(), s)]
            } else {
                sp.outgoing(s).map(|(r, t)| (r.to_string(), t)).collect()
            }
        })
        .collect()
}

struct Product<'a> {
    gba: &'a Gba,
    kripke: Vec<Vec<(String, usize)>>,
    /// Truth of each table proposition per space state.
    truth: Vec<Vec<bool>>,
    nodes: usize,
    rounds: usize,
}

/// A product state `(space state, automaton node, acceptance round)` packed
/// into one index.
impl Product<'_> {
    fn pack(&self, s: usize, n: usize, r: usize) -> usize {
        (s * self.nodes + n) * self.rounds + r
    }

    fn unpack(&self, p: usize) -> (usize, usize, usize) {
        (p / self.rounds / self.nodes, p / self.rounds % self.nodes, p % self.rounds)
    }

    fn fits(&self, s: usize, n: usize) -> bool {
        self.gba.labels[n].iter().all(|&(p, pos)| self.truth[s][p] == pos)
    }

    fn accepting(&self, p: usize) -> bool {
        let (_, n, r) = self.unpack(p);
        r == 0 && self.gba.accept[0][n]
    }

    fn initial(&self) -> Vec<usize> {
        self.gba.initial.iter().filter(|&&n| self.fits(0, n)).map(|&n| self.pack(0, n, 0)).collect()
    }

    /// Successors with the index of the space edge taken.
    fn succ(&self, p: usize) -> Vec<(usize, usize)> {
        let (s, n, r) = self.unpack(p);
        let r2 = if self.gba.accept[r][n] { (r + 1) % self.rounds } else { r };
        let mut out = Vec::new();
        for (e, (_, t)) in self.kripke[s].iter().enumerate() {
            for &n2 in &self.gba.succ[n] {
                if self.fits(*t, n2) {
                    out.push((self.pack(*t, n2, r2), e));
                }
            }
        }
        out
    }
}

struct Frame {
    state: usize,
    succ: Vec<(usize, usize)>,
    next: usize,
}

/// Nested depth-first search for an accepting lasso. Returns the product
/// run and the space edge indices between its states.
fn nested_dfs(prod: &Product) -> Option<(Vec<usize>, Vec<usize>, usize)> {
    let total = prod.kripke.len() * prod.nodes * prod.rounds;
    let mut seen = vec![false; total];
    let mut on_stack = vec![false; total];
    let mut seen2 = vec![false; total];
    for root in prod.initial() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        on_stack[root] = true;
        let mut stack = vec![Frame { state: root, succ: prod.succ(root), next: 0 }];
        // Space edge used to enter each frame after the first.
        let mut edges: Vec<usize> = Vec::new();
        while let Some(top) = stack.last_mut() {
            if top.next < top.succ.len() {
                let (q, e) = top.succ[top.next];
                top.next += 1;
                if !seen[q] {
                    seen[q] = true;
                    on_stack[q] = true;
                    edges.push(e);
                    stack.push(Frame { state: q, succ: prod.succ(q), next: 0 });
                }
                continue;
            }
            let seed = top.state;
            if prod.accepting(seed) {
                if let Some((inner, inner_edges, target)) = inner_dfs(prod, seed, &on_stack, &mut seen2) {
                    let mut run: Vec<usize> = stack.iter().map(|f| f.state).collect();
                    let loop_start = run.iter().position(|&p| p == target).expect("target is on the stack");
                    let mut all_edges = edges.clone();
                    run.extend(&inner[1..]);
                    all_edges.extend(inner_edges);
                    return Some((run, all_edges, loop_start));
                }
            }
            on_stack[seed] = false;
            stack.pop();
            edges.pop();
        }
    }
    None
}

/// Searches from `seed` for a product state on the outer stack. Returns the
/// inner path (starting at `seed`), its edges including the closing one,
/// and the stack state it closes on.
fn inner_dfs(
    prod: &Product,
    seed: usize,
    on_stack: &[bool],
    seen2: &mut [bool],
) -> Option<(Vec<usize>, Vec<usize>, usize)> {
    let mut stack = vec![Frame { state: seed, succ: prod.succ(seed), next: 0 }];
    let mut edges: Vec<usize> = Vec::new();
    seen2[seed] = true;
    while let Some(top) = stack.last_mut() {
        if top.next < top.succ.len() {
            let (q, e) = top.succ[top.next];
            top.next += 1;
            if on_stack[q] {
                edges.push(e);
                return Some((stack.iter().map(|f| f.state).collect(), edges, q));
            }
            if !seen2[q] {
                seen2[q] = true;
                edges.push(e);
                stack.push(Frame { state: q, succ: prod.succ(q), next: 0 });
            }
            continue;
        }
        stack.pop();
        edges.pop();
    }
    None
}

/// Whether every infinite run from state 0 satisfies `f`.
pub fn check(sp: &StateSpace, f: &Formula) -> Result<Verdict, LtlError> {
    if !sp.exhaustive {
        return Err(LtlError::NonExhaustive);
    }
    if sp.is_empty() {
        return Ok(Verdict { holds: true, counterexample: None, witness: None });
    }
    let mut table = Table::default();
    let root = table.nnf(f, true);
    let gba = tableau(&table, root);
    let truth = (0..sp.len()).map(|s| table.props.iter().map(|p| p.eval(sp, s)).collect()).collect();
    let prod = Product {
        nodes: gba.labels.len().max(1),
        rounds: gba.accept.len(),
        gba: &gba,
        kripke: kripke(sp),
        truth,
    };
    let Some((run, edges, loop_start)) = nested_dfs(&prod) else {
        return Ok(Verdict { holds: true, counterexample: None, witness: None });
    };
    let states: Vec<usize> = run.iter().map(|&p| prod.unpack(p).0).collect();
    let rules = states.iter().zip(&edges).map(|(&s, &e)| prod.kripke[s][e].0.clone()).collect();
    Ok(Verdict { holds: false, counterexample: Some(Lasso { states, rules, loop_start }), witness: None })
}

pub fn check_str(sp: &StateSpace, text: &str) -> Result<Verdict, LtlError> {
    check(sp, &parse_formula(text)?)
}

/// Breadth-first search for a state satisfying `p`; the witness is a
/// shortest path.
pub fn reachable(sp: &StateSpace, p: &Prop) -> Verdict {
    let miss = Verdict { holds: false, counterexample: None, witness: None };
    if sp.is_empty() {
        return miss;
    }
    let mut parent: Vec<Option<(usize, String)>> = vec![None; sp.len()];
    let mut seen = vec![false; sp.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(s) = queue.pop_front() {
        if p.eval(sp, s) {
            let mut states = vec![s];
            let mut rules = Vec::new();
            let mut cur = s;
            while let Some((prev, r)) = parent[cur].clone() {
                states.push(prev);
                rules.push(r);
                cur = prev;
            }
            states.reverse();
            rules.reverse();
            return Verdict { holds: true, counterexample: None, witness: Some(Path { states, rules }) };
        }
        for (r, t) in sp.outgoing(s) {
            if !seen[t] {
                seen[t] = true;
                parent[t] = Some((s, r.to_string()));
                queue.push_back(t);
            }
        }
    }
    miss
}

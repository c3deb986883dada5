//! Shared generators and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use zxforge::explore::{entry_rewrites, Transition};
use zxforge::ltl::{Cmp, Formula, Lasso, Quantity};
use zxforge::rule::RuleEntry;
use zxforge::{canonical_key, equal_up_to_scalar, iso_oracle, tensor, CanonicalKey, Diagram, NodeKind, Prop, State, StateSpace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const PHASES: &[i64] = &[0, 45, 90, 180, 270];

fn phase(r: &mut ChaCha8Rng) -> i64 {
    *PHASES.choose(r).unwrap()
}

fn spider(z: bool, p: i64) -> NodeKind {
    if z {
        NodeKind::z(p)
    } else {
        NodeKind::x(p)
    }
}

/// A partial diagram: `open` lists one entry per dangling leg.
#[derive(Clone, Debug, Default)]
pub struct Motif {
    pub kinds: Vec<NodeKind>,
    pub wires: Vec<(usize, usize)>,
    pub open: Vec<usize>,
}

impl Motif {
    fn add(&mut self, k: NodeKind) -> usize {
        self.kinds.push(k);
        self.kinds.len() - 1
    }

    fn wire(&mut self, a: usize, b: usize) {
        self.wires.push((a, b));
    }

    fn legs(&mut self, n: usize, count: usize) {
        self.open.extend(std::iter::repeat_n(n, count));
    }

    /// `a -H- b`.
    fn h_edge(&mut self, a: usize, b: usize) {
        let h = self.add(NodeKind::hadamard());
        self.wire(a, h);
        self.wire(h, b);
    }
}

/// A motif containing a redex of the named rule, with random parameters.
pub fn motif(rule: &str, toggle: bool, r: &mut ChaCha8Rng) -> Motif {
    let mut m = Motif::default();
    let z = r.gen_bool(0.5);
    match rule {
        "f" => {
            let a = m.add(spider(z, phase(r)));
            let b = m.add(spider(z, phase(r)));
            for _ in 0..r.gen_range(1..=2) {
                m.wire(a, b);
            }
            let (na, nb) = (r.gen_range(0..=3), r.gen_range(0..=2));
            m.legs(a, na);
            m.legs(b, nb);
        }
        "id" => {
            let a = m.add(spider(z, 0));
            m.legs(a, 2);
        }
        "hh" => {
            let a = m.add(NodeKind::hadamard());
            let b = m.add(NodeKind::hadamard());
            m.wire(a, b);
            m.legs(a, 1);
            m.legs(b, 1);
        }
        "hopf" => {
            let a = m.add(spider(z, phase(r)));
            let b = m.add(spider(!z, phase(r)));
            m.wire(a, b);
            m.wire(a, b);
            let (na, nb) = (r.gen_range(0..=2), r.gen_range(0..=2));
            m.legs(a, na);
            m.legs(b, nb);
        }
        "pi" => {
            let a = m.add(spider(z, 180));
            let b = m.add(spider(!z, phase(r)));
            m.wire(a, b);
            m.legs(a, 1);
            let n = r.gen_range(0..=3);
            m.legs(b, n);
        }
        "c" | "c_pi" => {
            let p = if rule == "c" { 0 } else { *[0, 180].choose(r).unwrap() };
            let a = m.add(spider(z, p));
            let b = m.add(spider(!z, phase(r)));
            m.wire(a, b);
            let n = r.gen_range(0..=3);
            m.legs(b, n);
        }
        "h" => {
            let s = m.add(spider(z, phase(r)));
            let k = r.gen_range(1..=3);
            for _ in 0..k {
                let h = m.add(NodeKind::hadamard());
                m.wire(s, h);
                m.legs(h, 1);
            }
            if toggle {
                let n = r.gen_range(0..=2);
                m.legs(s, n);
            }
        }
        "b" => {
            let a = m.add(NodeKind::z(0));
            let b = m.add(NodeKind::x(0));
            m.wire(a, b);
            let (na, nb) = (r.gen_range(0..=2), r.gen_range(0..=2));
            m.legs(a, na);
            m.legs(b, nb);
        }
        "zh1" => {
            let x = m.add(NodeKind::x(*[0, 180].choose(r).unwrap()));
            let h = m.add(NodeKind::hadamard());
            m.wire(x, h);
            m.legs(x, 1);
            let n = r.gen_range(0..=3);
            m.legs(h, n);
        }
        "zh2" => {
            let s = m.add(NodeKind::z(0));
            let h = m.add(NodeKind::h(phase(r)));
            m.wire(s, h);
            let n = r.gen_range(0..=3);
            m.legs(h, n);
        }
        "zh3" => {
            let a = m.add(NodeKind::h(phase(r)));
            let b = m.add(NodeKind::h(phase(r)));
            for _ in 0..r.gen_range(1..=2) {
                let s = m.add(NodeKind::z(0));
                m.wire(s, a);
                m.wire(s, b);
                m.legs(s, 1);
            }
        }
        "lcomp" => {
            let c = m.add(NodeKind::z(*[90, 270].choose(r).unwrap()));
            let k = r.gen_range(1..=3);
            let ns: Vec<usize> = (0..k).map(|_| m.add(NodeKind::z(phase(r)))).collect();
            for &n in &ns {
                m.h_edge(c, n);
                m.legs(n, 1);
            }
            if k >= 2 && r.gen_bool(0.5) {
                m.h_edge(ns[0], ns[1]);
            }
        }
        "pivot" => {
            let u = m.add(NodeKind::z(*[0, 180].choose(r).unwrap()));
            let v = m.add(NodeKind::z(*[0, 180].choose(r).unwrap()));
            m.h_edge(u, v);
            for s in [u, v] {
                if r.gen_bool(0.6) {
                    let n = m.add(NodeKind::z(phase(r)));
                    m.h_edge(s, n);
                    m.legs(n, 1);
                }
            }
        }
        "idgen_g" => {
            let a = m.add(spider(z, phase(r)));
            let b = if r.gen_bool(0.3) { m.add(NodeKind::hadamard()) } else { m.add(spider(r.gen_bool(0.5), phase(r))) };
            m.wire(a, b);
            let (na, nb) = (r.gen_range(0..=2), r.gen_range(1..=2));
            m.legs(a, na);
            m.legs(b, nb);
        }
        other => panic!("no motif for {other}"),
    }
    m
}

/// Closes every open leg: a fresh boundary, a wire to another open leg, or
/// a wire to a random context node. `None` if the result has too many wires.
pub fn close(m: &Motif, r: &mut ChaCha8Rng, max_wires: usize) -> Option<Diagram> {
    let mut kinds = m.kinds.clone();
    let mut wires = m.wires.clone();
    let mut open = m.open.clone();
    open.shuffle(r);
    let mut ctx: Vec<usize> = Vec::new();
    let mut outputs = 0;
    let mut boundary = |kinds: &mut Vec<NodeKind>, wires: &mut Vec<(usize, usize)>, n: usize| {
        kinds.push(NodeKind::boundary(format!("o{outputs}")));
        wires.push((n, kinds.len() - 1));
        outputs += 1;
    };
    while let Some(n) = open.pop() {
        let roll: f64 = r.gen();
        if roll < 0.45 {
            boundary(&mut kinds, &mut wires, n);
        } else if roll < 0.6 && open.iter().any(|&o| o != n) {
            let i = open.iter().position(|&o| o != n).unwrap();
            let o = open.remove(i);
            wires.push((n, o));
        } else {
            let c = if ctx.is_empty() || r.gen_bool(0.4) {
                let k = match r.gen_range(0..5) {
                    0 => NodeKind::hadamard(),
                    1 => NodeKind::h(phase(r)),
                    2 => NodeKind::x(phase(r)),
                    _ => NodeKind::z(phase(r)),
                };
                kinds.push(k);
                ctx.push(kinds.len() - 1);
                if r.gen_bool(0.5) {
                    let last = kinds.len() - 1;
                    boundary(&mut kinds, &mut wires, last);
                }
                ctx[ctx.len() - 1]
            } else {
                *ctx.choose(r).unwrap()
            };
            wires.push((n, c));
        }
    }
    if wires.len() > max_wires {
        return None;
    }
    Diagram::from_parts(kinds, wires).ok()
}

/// A random diagram with at most `max_wires` wires and no motif.
pub fn random_diagram(r: &mut ChaCha8Rng, max_wires: usize) -> Diagram {
    loop {
        let n = r.gen_range(1..=5);
        let mut m = Motif::default();
        for _ in 0..n {
            let k = match r.gen_range(0..6) {
                0 => NodeKind::hadamard(),
                1 => NodeKind::h(phase(r)),
                2 | 3 => NodeKind::x(*[0, 90, 180].choose(r).unwrap()),
                _ => NodeKind::z(*[0, 90, 180, 270].choose(r).unwrap()),
            };
            m.add(k);
        }
        for _ in 0..r.gen_range(0..=n + 2) {
            let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
            if a != b {
                m.wire(a, b);
            }
        }
        for i in 0..n {
            let l = r.gen_range(0..=1);
            m.legs(i, l);
        }
        if let Some(d) = close(&m, r, max_wires) {
            return d;
        }
    }
}

#[derive(Debug, Default)]
pub struct Soundness {
    pub diagrams: usize,
    pub matched: usize,
    pub rewrites: usize,
    pub failures: Vec<String>,
}

/// Applies every match of `entry` on motif diagrams until `want` diagrams
/// with at least one match have been seen, comparing tensors.
pub fn soundness(entry: &RuleEntry, motif_name: &str, toggle: bool, want: usize, seed: u64) -> Soundness {
    let mut r = rng(seed);
    let mut rep = Soundness::default();
    let mut attempts = 0;
    while rep.matched < want && attempts < want * 50 {
        attempts += 1;
        let d = if attempts % 5 == 0 {
            random_diagram(&mut r, 10)
        } else {
            match close(&motif(motif_name, toggle, &mut r), &mut r, 10) {
                Some(d) => d,
                None => continue,
            }
        };
        rep.diagrams += 1;
        let outs = match entry_rewrites(entry, &d) {
            Ok(o) => o,
            Err(e) => {
                rep.failures.push(format!("{}: {e}", d.summary()));
                continue;
            }
        };
        if outs.is_empty() {
            continue;
        }
        rep.matched += 1;
        let t0 = tensor(&d).expect("small diagram");
        for o in outs {
            rep.rewrites += 1;
            let t1 = tensor(&o).expect("small diagram");
            if !equal_up_to_scalar(&t0, &t1, 1e-9).unwrap_or(false) {
                rep.failures.push(format!("{} => {}", d.to_json(), o.to_json()));
            }
        }
    }
    rep
}

/// A random space over small chain diagrams; deadlocks are the finals.
pub fn random_space(r: &mut ChaCha8Rng) -> StateSpace {
    let n = r.gen_range(1..=12);
    let states: Vec<State> = (0..n)
        .map(|_| {
            let spiders = r.gen_range(0..=4);
            let hboxes = r.gen_range(0..=2);
            let mut kinds = vec![NodeKind::boundary("in")];
            kinds.extend((0..spiders).map(|_| NodeKind::z(0)));
            kinds.extend((0..hboxes).map(|_| NodeKind::hadamard()));
            kinds.push(NodeKind::boundary("out"));
            let wires = (0..kinds.len() - 1).map(|i| (i, i + 1)).collect();
            let d = Diagram::from_parts(kinds, wires).unwrap();
            let mut budgets = BTreeMap::new();
            budgets.insert("b".to_string(), r.gen_range(0..=2));
            let tokens = if r.gen_bool(0.3) { vec!["t".to_string()] } else { Vec::new() };
            State::new(&d, budgets, tokens)
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut transitions = Vec::new();
    for _ in 0..r.gen_range(0..=2 * n) {
        let (from, to) = (r.gen_range(0..n), r.gen_range(0..n));
        let rule = ["f", "id", "h"].choose(r).unwrap().to_string();
        if seen.insert((from, rule.clone(), to)) {
            transitions.push(Transition { from, rule, to });
        }
    }
    transitions.sort_by(|a, b| (a.from, &a.rule, a.to).cmp(&(b.from, &b.rule, b.to)));
    StateSpace::from_parts(states, transitions, true)
}

pub fn random_prop(r: &mut ChaCha8Rng) -> Prop {
    match r.gen_range(0..7) {
        0 => Prop::Final,
        1 => Prop::Count(Quantity::Spiders, Cmp::Le, r.gen_range(0..=4)),
        2 => Prop::Count(Quantity::Spiders, Cmp::Eq, r.gen_range(0..=4)),
        3 => Prop::Count(Quantity::HBoxes, Cmp::Eq, r.gen_range(0..=2)),
        4 => Prop::Count(Quantity::Wires, Cmp::Le, r.gen_range(1..=7)),
        5 => Prop::Budget("b".into(), r.gen_range(0..=2)),
        _ => Prop::TokenHead("t".into()),
    }
}

pub fn random_formula(r: &mut ChaCha8Rng, depth: usize) -> Formula {
    if depth == 0 || r.gen_bool(0.25) {
        return Formula::prop(random_prop(r));
    }
    let sub = |r: &mut ChaCha8Rng| random_formula(r, depth - 1);
    match r.gen_range(0..8) {
        0 => Formula::not(sub(r)),
        1 => Formula::and(sub(r), sub(r)),
        2 => Formula::or(sub(r), sub(r)),
        3 => Formula::next(sub(r)),
        4 => Formula::eventually(sub(r)),
        5 => Formula::always(sub(r)),
        6 => Formula::until(sub(r), sub(r)),
        _ => Formula::Implies(Box::new(sub(r)), Box::new(sub(r))),
    }
}

/// Truth of an atomic proposition, read directly off the state.
pub fn atom(sp: &StateSpace, id: usize, p: &Prop) -> bool {
    let s = sp.state(id);
    let d = s.diagram();
    let holds = |q: &Quantity, c: &Cmp, k: usize| {
        let v = match q {
            Quantity::Spiders => d.nodes().iter().filter(|n| n.kind.is_spider()).count(),
            Quantity::HBoxes => d.nodes().iter().filter(|n| n.kind.is_hbox()).count(),
            Quantity::Wires => d.wires().len(),
        };
        match c {
            Cmp::Le => v <= k,
            Cmp::Eq => v == k,
        }
    };
    match p {
        Prop::True => true,
        Prop::False => false,
        Prop::Final => sp.transitions.iter().all(|t| t.from != id),
        Prop::Count(q, c, k) => holds(q, c, *k),
        Prop::Budget(name, v) => s.budgets.get(name).map(|&b| b as i64) == Some(*v),
        Prop::TokenHead(t) => s.tokens.first() == Some(t),
    }
}

/// Evaluates `f` at position 0 of the ultimately periodic run `lasso`.
pub fn eval_lasso(sp: &StateSpace, lasso: &Lasso, f: &Formula) -> bool {
    sat(sp, lasso, f)[0]
}

fn sat(sp: &StateSpace, l: &Lasso, f: &Formula) -> Vec<bool> {
    let n = l.states.len();
    let next = |v: &[bool]| (0..n).map(|i| v[l.successor(i)]).collect::<Vec<_>>();
    // Least fixpoint of X = b | (a & next X) over the n positions.
    let until = |a: &[bool], b: &[bool]| {
        let mut x = vec![false; n];
        loop {
            let nx = next(&x);
            let y: Vec<bool> = (0..n).map(|i| b[i] || (a[i] && nx[i])).collect();
            if y == x {
                return x;
            }
            x = y;
        }
    };
    match f {
        Formula::Prop(p) => l.states.iter().map(|&s| atom(sp, s, p)).collect(),
        Formula::Not(a) => sat(sp, l, a).into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => sat(sp, l, a).into_iter().zip(sat(sp, l, b)).map(|(x, y)| x && y).collect(),
        Formula::Or(a, b) => sat(sp, l, a).into_iter().zip(sat(sp, l, b)).map(|(x, y)| x || y).collect(),
        Formula::Implies(a, b) => sat(sp, l, a).into_iter().zip(sat(sp, l, b)).map(|(x, y)| !x || y).collect(),
        Formula::Next(a) => next(&sat(sp, l, a)),
        Formula::Eventually(a) => until(&vec![true; n], &sat(sp, l, a)),
        Formula::Always(a) => {
            let na: Vec<bool> = sat(sp, l, a).into_iter().map(|v| !v).collect();
            until(&vec![true; n], &na).into_iter().map(|v| !v).collect()
        }
        Formula::Until(a, b) => until(&sat(sp, l, a), &sat(sp, l, b)),
    }
}

/// Breadth-first reachability computed from the transition list alone.
pub fn reachable_ids(sp: &StateSpace) -> Vec<bool> {
    let mut seen = vec![false; sp.len()];
    if sp.is_empty() {
        return seen;
    }
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(s) = stack.pop() {
        for t in sp.transitions.iter().filter(|t| t.from == s) {
            if !seen[t.to] {
                seen[t.to] = true;
                stack.push(t.to);
            }
        }
    }
    seen
}

/// Node labels used by the canonicalization corpus.
pub fn corpus_alphabet() -> Vec<NodeKind> {
    vec![
        NodeKind::z(0),
        NodeKind::z(90),
        NodeKind::x(0),
        NodeKind::hadamard(),
        NodeKind::boundary("a"),
        NodeKind::boundary("b"),
    ]
}

/// Every loop-free diagram over `alphabet` with at most `max_nodes` nodes and
/// `max_wires` wires, one per (sorted label sequence, wire multiset).
pub fn corpus(alphabet: &[NodeKind], max_nodes: usize, max_wires: usize, mut visit: impl FnMut(Diagram)) {
    fn label_seqs(k: usize, len: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for l in start..k {
            cur.push(l);
            label_seqs(k, len, l, cur, out);
            cur.pop();
        }
    }
    fn wire_sets(pairs: &[(usize, usize)], max: usize, start: usize, cur: &mut Vec<(usize, usize)>, f: &mut dyn FnMut(&[(usize, usize)])) {
        f(cur);
        if cur.len() == max {
            return;
        }
        for i in start..pairs.len() {
            cur.push(pairs[i]);
            wire_sets(pairs, max, i, cur, f);
            cur.pop();
        }
    }
    for n in 0..=max_nodes {
        let mut seqs = Vec::new();
        label_seqs(alphabet.len(), n, 0, &mut Vec::new(), &mut seqs);
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for seq in seqs {
            let kinds: Vec<NodeKind> = seq.iter().map(|&l| alphabet[l].clone()).collect();
            let bounds: Vec<usize> = (0..n).filter(|&i| kinds[i].is_boundary()).collect();
            wire_sets(&pairs, max_wires, 0, &mut Vec::new(), &mut |ws| {
                let mut deg = vec![0; n];
                for &(a, b) in ws {
                    deg[a] += 1;
                    deg[b] += 1;
                }
                if bounds.iter().all(|&b| deg[b] == 1) {
                    visit(Diagram::from_parts(kinds.clone(), ws.to_vec()).unwrap());
                }
            });
        }
    }
}

/// Labels and degree sequence: equal for isomorphic diagrams.
pub fn invariant(d: &Diagram) -> (Vec<(NodeKind, usize)>, usize) {
    let deg = d.degrees();
    let mut v: Vec<(NodeKind, usize)> = d.nodes().iter().map(|n| n.kind.clone()).zip(deg).collect();
    v.sort();
    (v, d.wire_count())
}

/// `(label, entry, motif, toggle)` for every catalogue rule.
pub fn soundness_cases() -> Vec<(String, RuleEntry, &'static str, bool)> {
    use zxforge::rule::{HVariant, RuleSet};
    let names: &[(&str, &'static str)] = &[
        ("f", "f"),
        ("id", "id"),
        ("hh", "hh"),
        ("hopf", "hopf"),
        ("pi", "pi"),
        ("c", "c"),
        ("c_pi", "c_pi"),
        ("h", "h"),
        ("b", "b"),
        ("lcomp", "lcomp"),
        ("pivot", "pivot"),
        ("zh1", "zh1"),
        ("zh2", "zh2"),
        ("zh3", "zh3"),
        ("idgen_g", "idgen_g"),
        ("f_rl", "f"),
        ("id_rl", "idgen_g"),
        ("hh_rl", "idgen_g"),
        ("c_rl", "c"),
    ];
    let mut out = Vec::new();
    for &(name, m) in names {
        let variants: &[HVariant] = if name == "h" { &[HVariant::AllH, HVariant::Toggle] } else { &[HVariant::AllH] };
        for &v in variants {
            let rs = RuleSet::select(&[name], v).unwrap();
            let toggle = v == HVariant::Toggle;
            let label = if name == "h" { format!("h/{}", if toggle { "toggle" } else { "all-h" }) } else { name.to_string() };
            out.push((label, rs.entries()[0].clone(), m, toggle));
        }
    }
    out
}

pub struct CorpusReport {
    pub diagrams: usize,
    pub classes: usize,
    pub collisions: usize,
    pub splits: usize,
}

/// Groups the corpus by key: within a group every diagram must be
/// isomorphic to the first, and first members of groups that share an
/// invariant must be pairwise non-isomorphic.
pub fn run_corpus(max_nodes: usize, max_wires: usize) -> CorpusReport {
    let mut r = rng(7);
    let mut groups: BTreeMap<CanonicalKey, Diagram> = BTreeMap::new();
    let mut diagrams = 0;
    let mut collisions = 0;
    corpus(&corpus_alphabet(), max_nodes, max_wires, |d| {
        diagrams += 1;
        let mut perm: Vec<usize> = (0..d.node_count()).collect();
        perm.shuffle(&mut r);
        let d = d.permuted(&perm);
        let key = canonical_key(&d);
        match groups.get(&key) {
            Some(rep) => {
                if !iso_oracle(rep, &d).unwrap() {
                    collisions += 1;
                }
            }
            None => {
                groups.insert(key, d);
            }
        }
    });
    let mut buckets: BTreeMap<_, Vec<&Diagram>> = BTreeMap::new();
    for d in groups.values() {
        buckets.entry(invariant(d)).or_default().push(d);
    }
    let mut splits = 0;
    for reps in buckets.values() {
        for i in 0..reps.len() {
            for j in i + 1..reps.len() {
                if iso_oracle(reps[i], reps[j]).unwrap() {
                    splits += 1;
                }
            }
        }
    }
    CorpusReport { diagrams, classes: groups.len(), collisions, splits }
}

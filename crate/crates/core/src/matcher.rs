//! Matching quantified rules against diagrams and applying matches.
//!
//! A diagram port is a wire end, encoded as `2 * wire + end`. Matching first
//! places the unquantified patterns on nodes, then fixes the label
//! cardinalities from degree equations, then assigns every endpoint instance
//! to a port. Internal wire variables force their partner endpoint onto the
//! other end of the same wire, which is also how replicated pattern copies
//! find their nodes.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::canon::canonical_labeling;
use crate::diagram::{Diagram, DiagramError, Node, NodeId, NodeKind};
use crate::phase::{Color, PhaseDeg};
use crate::rule::{eval_guard, Binding, ExprError, Label, PatternKind, Rule, TemplateKind, Term, WireRole};

pub const DEFAULT_MATCH_LIMIT: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("match is stale: the diagram differs from the one it was found in")]
    Stale,

    #[error("rule {rule}: more than {limit} matches (wire partitions); raise the match limit")]
    TooMany { rule: String, limit: usize },

    #[error("rule {rule}: {source}")]
    Eval { rule: String, source: ExprError },

    #[error("rule {rule}: rewrite produced an invalid diagram: {source}")]
    Invalid { rule: String, source: DiagramError },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MatchedNode {
    pub pattern: usize,
    /// Copy index for replicated patterns.
    pub copy: Option<usize>,
    /// Node position in the diagram.
    pub node: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MatchedPort {
    /// Index into [`Match::nodes`].
    pub inst: usize,
    pub endpoint: usize,
    /// Group index for group endpoints.
    pub index: Option<usize>,
    /// Wire end, `2 * wire + end`.
    pub port: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Match {
    pub rule: String,
    pub cards: BTreeMap<Label, usize>,
    pub nodes: Vec<MatchedNode>,
    pub ports: Vec<MatchedPort>,
    pub binding: Binding,
    stamp: u64,
}

impl Match {
    /// Unquantified pattern index to node id.
    pub fn assignment(&self, d: &Diagram) -> BTreeMap<usize, NodeId> {
        self.nodes.iter().filter(|n| n.copy.is_none()).map(|n| (n.pattern, d.node(n.node).id)).collect()
    }

    /// Wire index of every unquantified wire variable.
    pub fn wire_map(&self, rule: &Rule) -> BTreeMap<String, usize> {
        self.ports
            .iter()
            .filter(|p| p.index.is_none() && self.nodes[p.inst].copy.is_none())
            .map(|p| (rule.lhs[self.nodes[p.inst].pattern].endpoints[p.endpoint].wire.clone(), p.port / 2))
            .collect()
    }

    /// Wires of the group `label` on unquantified pattern `pattern`, by group index.
    pub fn group_wires(&self, rule: &Rule, label: &str, pattern: usize) -> Vec<usize> {
        let mut out: Vec<(usize, usize)> = self
            .ports
            .iter()
            .filter(|p| {
                let n = &self.nodes[p.inst];
                n.pattern == pattern
                    && n.copy.is_none()
                    && rule.lhs[pattern].endpoints[p.endpoint].group.as_deref() == Some(label)
            })
            .map(|p| (p.index.unwrap_or(0), p.port / 2))
            .collect();
        out.sort_unstable();
        out.into_iter().map(|(_, w)| w).collect()
    }
}

fn stamp(d: &Diagram) -> u64 {
    let mut h = DefaultHasher::new();
    d.hash(&mut h);
    h.finish()
}

fn port_node(d: &Diagram, port: usize) -> usize {
    let (a, b) = d.wires()[port / 2];
    if port.is_multiple_of(2) {
        a
    } else {
        b
    }
}

/// Ports of every node, ascending.
fn ports_by_node(d: &Diagram) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); d.node_count()];
    for (w, &(a, b)) in d.wires().iter().enumerate() {
        out[a].push(2 * w);
        out[b].push(2 * w + 1);
    }
    out
}

fn lit_color(v: i64) -> Option<Color> {
    match v {
        1 => Some(Color::Z),
        -1 => Some(Color::X),
        _ => None,
    }
}

/// Whether `kind` fits `pat`, extending `binding` with new variables.
fn kind_fits(pat: &PatternKind, kind: &NodeKind, binding: &mut Binding) -> bool {
    let mut bind = |t: &Term, value: i64, modulo: bool| -> bool {
        match t {
            Term::Lit(v) => {
                if modulo {
                    (v - value).rem_euclid(360) == 0
                } else {
                    *v == value
                }
            }
            Term::Var(name) => match binding.get(name) {
                Some(&b) => b == value,
                None => {
                    binding.insert(name.clone(), value);
                    true
                }
            },
        }
    };
    match (pat, kind) {
        (PatternKind::Spider { color, phase }, NodeKind::Spider { color: c, phase: p }) => {
            bind(color, c.sign(), false) && bind(phase, p.degrees() as i64, true)
        }
        (PatternKind::HBox { phase }, NodeKind::HBox { phase: p }) => bind(phase, p.degrees() as i64, true),
        (PatternKind::Any, k) => !k.is_boundary(),
        (PatternKind::AnyNode, _) => true,
        _ => false,
    }
}

struct Plan<'r> {
    rule: &'r Rule,
    /// Unquantified patterns in search order, each with the earlier pattern
    /// it shares an unquantified internal wire with.
    order: Vec<(usize, Option<(usize, String)>)>,
    labels: Vec<Label>,
    roles: BTreeMap<String, WireRole>,
}

impl<'r> Plan<'r> {
    fn new(rule: &'r Rule) -> Self {
        let fixed: Vec<usize> = (0..rule.lhs.len()).filter(|&i| rule.lhs[i].replicate.is_none()).collect();
        let roles = rule.wire_roles();
        // owner patterns of unquantified internal variables
        let mut owners: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for &p in &fixed {
            for e in &rule.lhs[p].endpoints {
                if e.group.is_none() && roles.get(&e.wire) == Some(&WireRole::Internal) {
                    owners.entry(e.wire.as_str()).or_default().push(p);
                }
            }
        }
        let mut order: Vec<(usize, Option<(usize, String)>)> = Vec::new();
        let mut placed = BTreeSet::new();
        while placed.len() < fixed.len() {
            let mut next = None;
            'search: for &p in &fixed {
                if placed.contains(&p) {
                    continue;
                }
                for e in &rule.lhs[p].endpoints {
                    if let Some(os) = owners.get(e.wire.as_str()) {
                        if let Some(&q) = os.iter().find(|&&q| q != p && placed.contains(&q)) {
                            next = Some((p, Some((q, e.wire.clone()))));
                            break 'search;
                        }
                    }
                }
            }
            let next = next.unwrap_or_else(|| (*fixed.iter().find(|p| !placed.contains(*p)).unwrap(), None));
            placed.insert(next.0);
            order.push(next);
        }
        let labels = rule.lhs_labels().into_iter().collect();
        Plan { rule, order, labels, roles }
    }
}

/// Diagram-independent view of one expanded endpoint instance.
#[derive(Clone, Debug)]
struct EpInst {
    inst: usize,
    endpoint: usize,
    index: Option<usize>,
    key: (String, Vec<usize>),
    /// Anchor group: ports must increase with the group index.
    anchor: bool,
}

struct Search<'a> {
    d: &'a Diagram,
    rule: &'a Rule,
    ports_of: &'a [Vec<usize>],
    degrees: &'a [usize],
    insts: Vec<MatchedNode>,
    inst_node: Vec<Option<usize>>,
    eps: Vec<EpInst>,
    partner: Vec<Option<usize>>,
    assigned: Vec<Option<usize>>,
    port_used: Vec<bool>,
    node_used: Vec<bool>,
    out: Vec<Vec<Option<usize>>>,
    out_nodes: Vec<Vec<usize>>,
    limit: usize,
    overflow: bool,
}

impl Search<'_> {
    fn run(&mut self, k: usize) {
        if self.overflow {
            return;
        }
        if k == self.eps.len() {
            if self.out.len() >= self.limit {
                self.overflow = true;
                return;
            }
            self.out.push(self.assigned.clone());
            self.out_nodes.push(self.inst_node.iter().map(|n| n.expect("all instances placed")).collect());
            return;
        }
        if self.assigned[k].is_some() {
            self.run(k + 1);
            return;
        }
        let e = self.eps[k].clone();
        let node = self.inst_node[e.inst].expect("instance placed before its endpoints");
        let floor = if e.anchor && e.index.unwrap_or(0) > 0 {
            self.assigned[k - 1].map_or(0, |p| p + 1)
        } else {
            0
        };
        let candidates: Vec<usize> =
            self.ports_of[node].iter().copied().filter(|&p| p >= floor && !self.port_used[p]).collect();
        for p in candidates {
            if let Some(undo) = self.place(k, p) {
                self.run(k + 1);
                self.unplace(undo);
            }
            if self.overflow {
                return;
            }
        }
    }

    /// Assigns port `p` to endpoint instance `k` and propagates along an
    /// internal wire. Returns what to undo.
    fn place(&mut self, k: usize, p: usize) -> Option<(usize, Option<(usize, Option<usize>)>)> {
        self.assigned[k] = Some(p);
        self.port_used[p] = true;
        let Some(k2) = self.partner[k] else {
            return Some((k, None));
        };
        let q = p ^ 1;
        let back = |s: &mut Self| {
            s.assigned[k] = None;
            s.port_used[p] = false;
        };
        if self.port_used[q] || self.assigned[k2].is_some() {
            back(self);
            return None;
        }
        let n2 = port_node(self.d, q);
        let inst2 = self.eps[k2].inst;
        let mut placed_node = None;
        match self.inst_node[inst2] {
            Some(n) if n == n2 => {}
            Some(_) => {
                back(self);
                return None;
            }
            None => {
                let pat = &self.rule.lhs[self.insts[inst2].pattern];
                let mut scratch = Binding::new();
                if self.node_used[n2]
                    || self.degrees[n2] != pat.endpoints.len()
                    || !kind_fits(&pat.kind, self.d.kind(n2), &mut scratch)
                {
                    back(self);
                    return None;
                }
                self.inst_node[inst2] = Some(n2);
                self.node_used[n2] = true;
                placed_node = Some(inst2);
            }
        }
        if self.eps[k2].anchor && self.eps[k2].index.unwrap_or(0) > 0 {
            // forced anchors keep the increasing order
            let prev = self.assigned[k2 - 1];
            if prev.is_none_or(|pp| pp >= q) {
                if let Some(i) = placed_node {
                    self.inst_node[i] = None;
                    self.node_used[n2] = false;
                }
                back(self);
                return None;
            }
        }
        self.assigned[k2] = Some(q);
        self.port_used[q] = true;
        Some((k, Some((k2, placed_node))))
    }

    fn unplace(&mut self, undo: (usize, Option<(usize, Option<usize>)>)) {
        let (k, forced) = undo;
        let p = self.assigned[k].take().expect("placed");
        self.port_used[p] = false;
        if let Some((k2, placed)) = forced {
            let q = self.assigned[k2].take().expect("forced");
            self.port_used[q] = false;
            if let Some(i) = placed {
                let n = self.inst_node[i].take().expect("placed node");
                self.node_used[n] = false;
            }
        }
    }
}

/// All matches of `rule` in `d`, ordered by the canonical node order of `d`.
pub fn find_matches(rule: &Rule, d: &Diagram) -> Result<Vec<Match>, MatchError> {
    let (_, perm) = canonical_labeling(d);
    let mut order = vec![0usize; d.node_count()];
    for (pos, &c) in perm.iter().enumerate() {
        order[c] = pos;
    }
    find_matches_ordered(rule, d, &order, DEFAULT_MATCH_LIMIT)
}

/// All matches with nodes tried in the given order.
pub fn find_matches_ordered(rule: &Rule, d: &Diagram, order: &[usize], limit: usize) -> Result<Vec<Match>, MatchError> {
    let plan = Plan::new(rule);
    let ports_of = ports_by_node(d);
    let degrees: Vec<usize> = ports_of.iter().map(|p| p.len()).collect();
    let mut rank = vec![0usize; d.node_count()];
    for (i, &n) in order.iter().enumerate() {
        rank[n] = i;
    }
    let neighbours: Vec<Vec<usize>> = (0..d.node_count())
        .map(|n| {
            let mut v: Vec<usize> = ports_of[n].iter().map(|&p| port_node(d, p ^ 1)).filter(|&m| m != n).collect();
            v.sort_unstable_by_key(|&m| rank[m]);
            v.dedup();
            v
        })
        .collect();
    let st = stamp(d);
    let mut out = Vec::new();
    let mut fixed_nodes = vec![usize::MAX; rule.lhs.len()];
    let mut used = vec![false; d.node_count()];
    place_fixed(
        &plan, d, order, &neighbours, &degrees, &ports_of, 0, &mut fixed_nodes, &mut used, Binding::new(), st, limit,
        &mut out,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn place_fixed(
    plan: &Plan,
    d: &Diagram,
    order: &[usize],
    neighbours: &[Vec<usize>],
    degrees: &[usize],
    ports_of: &[Vec<usize>],
    i: usize,
    fixed_nodes: &mut Vec<usize>,
    used: &mut Vec<bool>,
    binding: Binding,
    st: u64,
    limit: usize,
    out: &mut Vec<Match>,
) -> Result<(), MatchError> {
    let rule = plan.rule;
    if i == plan.order.len() {
        let mut binding = binding;
        match eval_guard(&rule.guard, &mut binding) {
            Ok(true) => {}
            Ok(false) => return Ok(()),
            Err(e) => return Err(MatchError::Eval { rule: rule.name.clone(), source: e }),
        }
        return enumerate_cards(plan, d, degrees, ports_of, fixed_nodes, used, &binding, st, limit, out);
    }
    let (p, link) = &plan.order[i];
    let pat = &rule.lhs[*p];
    let candidates: &[usize] = match link {
        Some((q, _)) => &neighbours[fixed_nodes[*q]],
        None => order,
    };
    let fixed_eps = pat.endpoints.iter().filter(|e| e.group.is_none()).count();
    for &n in candidates {
        if used[n] {
            continue;
        }
        let deg = degrees[n];
        if deg < fixed_eps || (pat.context.is_none() && !pat.endpoints.iter().any(|e| e.group.is_some()) && deg != fixed_eps) {
            continue;
        }
        let mut b = binding.clone();
        if !kind_fits(&pat.kind, d.kind(n), &mut b) {
            continue;
        }
        used[n] = true;
        fixed_nodes[*p] = n;
        let r = place_fixed(plan, d, order, neighbours, degrees, ports_of, i + 1, fixed_nodes, used, b, st, limit, out);
        used[n] = false;
        fixed_nodes[*p] = usize::MAX;
        r?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn enumerate_cards(
    plan: &Plan,
    d: &Diagram,
    degrees: &[usize],
    ports_of: &[Vec<usize>],
    fixed_nodes: &[usize],
    used: &[bool],
    binding: &Binding,
    st: u64,
    limit: usize,
    out: &mut Vec<Match>,
) -> Result<(), MatchError> {
    let rule = plan.rule;
    // upper bound per label from the unquantified patterns carrying it
    let mut bounds: Vec<usize> = Vec::with_capacity(plan.labels.len());
    for l in &plan.labels {
        let mut ub = usize::MAX;
        for (p, _) in &plan.order {
            let pat = &rule.lhs[*p];
            let groups = pat.endpoints.iter().filter(|e| e.group.as_ref() == Some(l)).count();
            if groups > 0 {
                let fixed = pat.endpoints.iter().filter(|e| e.group.is_none()).count();
                ub = ub.min((degrees[fixed_nodes[*p]] - fixed) / groups);
            }
        }
        let lo = rule.min_card.get(l).copied().unwrap_or(0);
        if ub < lo {
            return Ok(());
        }
        bounds.push(ub);
    }
    let mut cards: Vec<usize> = plan.labels.iter().map(|l| rule.min_card.get(l).copied().unwrap_or(0)).collect();
    loop {
        let card_map: BTreeMap<Label, usize> = plan.labels.iter().cloned().zip(cards.iter().copied()).collect();
        let ok = plan.order.iter().all(|(p, _)| {
            let pat = &rule.lhs[*p];
            let need: usize = pat.endpoints.iter().map(|e| e.group.as_ref().map_or(1, |l| card_map[l])).sum();
            let deg = degrees[fixed_nodes[*p]];
            if pat.context.is_some() {
                deg >= need
            } else {
                deg == need
            }
        });
        if ok {
            match_endpoints(plan, d, degrees, ports_of, fixed_nodes, used, binding, &card_map, st, limit, out)?;
        }
        // next card vector
        let mut j = 0;
        loop {
            if j == cards.len() {
                return Ok(());
            }
            if cards[j] < bounds[j] {
                cards[j] += 1;
                break;
            }
            cards[j] = rule.min_card.get(&plan.labels[j]).copied().unwrap_or(0);
            j += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn match_endpoints(
    plan: &Plan,
    d: &Diagram,
    degrees: &[usize],
    ports_of: &[Vec<usize>],
    fixed_nodes: &[usize],
    used: &[bool],
    binding: &Binding,
    cards: &BTreeMap<Label, usize>,
    st: u64,
    limit: usize,
    out: &mut Vec<Match>,
) -> Result<(), MatchError> {
    let rule = plan.rule;
    let mut insts = Vec::new();
    let mut inst_node = Vec::new();
    for (p, _) in &plan.order {
        insts.push(MatchedNode { pattern: *p, copy: None, node: fixed_nodes[*p] });
        inst_node.push(Some(fixed_nodes[*p]));
    }
    for (p, pat) in rule.lhs.iter().enumerate() {
        if let Some(l) = &pat.replicate {
            for k in 0..cards[l] {
                insts.push(MatchedNode { pattern: p, copy: Some(k), node: usize::MAX });
                inst_node.push(None);
            }
        }
    }
    let mut anchored: BTreeSet<&Label> = BTreeSet::new();
    let mut eps = Vec::new();
    for (i, inst) in insts.iter().enumerate() {
        let pat = &rule.lhs[inst.pattern];
        for (e, ep) in pat.endpoints.iter().enumerate() {
            match (&ep.group, inst.copy) {
                (Some(l), _) => {
                    let anchor = anchored.insert(l);
                    for j in 0..cards[l] {
                        eps.push(EpInst { inst: i, endpoint: e, index: Some(j), key: (ep.wire.clone(), vec![j]), anchor });
                    }
                }
                (None, Some(k)) => {
                    eps.push(EpInst { inst: i, endpoint: e, index: None, key: (ep.wire.clone(), vec![k]), anchor: false });
                }
                (None, None) => {
                    eps.push(EpInst { inst: i, endpoint: e, index: None, key: (ep.wire.clone(), vec![]), anchor: false });
                }
            }
        }
    }
    let mut by_key: HashMap<&(String, Vec<usize>), Vec<usize>> = HashMap::new();
    for (k, e) in eps.iter().enumerate() {
        by_key.entry(&e.key).or_default().push(k);
    }
    let mut partner = vec![None; eps.len()];
    for (k, e) in eps.iter().enumerate() {
        if plan.roles.get(&e.key.0) == Some(&WireRole::Internal) {
            let pair = &by_key[&e.key];
            debug_assert_eq!(pair.len(), 2);
            partner[k] = pair.iter().copied().find(|&x| x != k);
        }
    }
    let mut node_used = used.to_vec();
    for n in inst_node.iter().flatten() {
        node_used[*n] = true;
    }
    let remaining = limit.saturating_sub(out.len());
    let mut s = Search {
        d,
        rule,
        ports_of,
        degrees,
        insts,
        inst_node,
        assigned: vec![None; eps.len()],
        partner,
        eps,
        port_used: vec![false; 2 * d.wire_count()],
        node_used,
        out: Vec::new(),
        out_nodes: Vec::new(),
        limit: remaining,
        overflow: false,
    };
    s.run(0);
    if s.overflow {
        return Err(MatchError::TooMany { rule: rule.name.clone(), limit });
    }
    for (assigned, nodes) in s.out.iter().zip(&s.out_nodes) {
        let nodes: Vec<MatchedNode> = s
            .insts
            .iter()
            .zip(nodes)
            .map(|(i, &n)| MatchedNode { pattern: i.pattern, copy: i.copy, node: n })
            .collect();
        let ports = s
            .eps
            .iter()
            .zip(assigned)
            .map(|(e, p)| MatchedPort { inst: e.inst, endpoint: e.endpoint, index: e.index, port: p.expect("complete") })
            .collect();
        out.push(Match {
            rule: rule.name.clone(),
            cards: cards.clone(),
            nodes,
            ports,
            binding: binding.clone(),
            stamp: st,
        });
    }
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum NodeRef {
    Old(usize),
    New(usize),
}

/// Applies a match and normalizes the result.
pub fn apply(rule: &Rule, m: &Match, d: &Diagram) -> Result<Diagram, MatchError> {
    if m.stamp != stamp(d) || m.rule != rule.name {
        return Err(MatchError::Stale);
    }
    let eval_err = |e| MatchError::Eval { rule: rule.name.clone(), source: e };

    let mut removed = vec![false; d.node_count()];
    let mut context_node: BTreeMap<&str, usize> = BTreeMap::new();
    for n in &m.nodes {
        match &rule.lhs[n.pattern].context {
            Some(c) => {
                context_node.insert(c.as_str(), n.node);
            }
            None => removed[n.node] = true,
        }
    }

    // points: terminals carry a node; inner points have degree two
    let mut terminal: Vec<Option<NodeRef>> = Vec::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    let new_point = |t: Option<NodeRef>, terminal: &mut Vec<Option<NodeRef>>, adj: &mut Vec<Vec<usize>>| {
        terminal.push(t);
        adj.push(Vec::new());
        terminal.len() - 1
    };
    let link = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
        adj[a].push(b);
        adj[b].push(a);
    };
    let mut occurrences: BTreeMap<(String, Vec<usize>), Vec<usize>> = BTreeMap::new();

    let mut port_point: HashMap<usize, usize> = HashMap::new();
    for mp in &m.ports {
        let inst = &m.nodes[mp.inst];
        let ep = &rule.lhs[inst.pattern].endpoints[mp.endpoint];
        let index = match (mp.index, inst.copy) {
            (Some(j), _) => vec![j],
            (None, Some(k)) => vec![k],
            (None, None) => vec![],
        };
        let pt = new_point(None, &mut terminal, &mut adj);
        port_point.insert(mp.port, pt);
        occurrences.entry((ep.wire.clone(), index)).or_default().push(pt);
    }

    let mut kept_wires = Vec::new();
    for (w, &(a, b)) in d.wires().iter().enumerate() {
        let ends = [(2 * w, a), (2 * w + 1, b)];
        let touched = ends.iter().any(|(p, n)| port_point.contains_key(p) || removed[*n]);
        if !touched {
            kept_wires.push((NodeRef::Old(a), NodeRef::Old(b)));
            continue;
        }
        let pts: Vec<usize> = ends
            .iter()
            .map(|&(p, n)| match port_point.get(&p) {
                Some(&pt) => pt,
                None => {
                    debug_assert!(!removed[n], "unmatched port on a removed node");
                    new_point(Some(NodeRef::Old(n)), &mut terminal, &mut adj)
                }
            })
            .collect();
        link(pts[0], pts[1], &mut adj);
    }

    // right-hand side
    let mut new_kinds: Vec<NodeKind> = Vec::new();
    let card = |l: &Label| m.cards.get(l).copied().unwrap_or(0);
    for t in &rule.rhs {
        let copies = t.replicate.as_ref().map_or(1, card);
        for k in 0..copies {
            let node = match &t.kind {
                TemplateKind::Context(c) => NodeRef::Old(context_node[c.as_str()]),
                TemplateKind::Spider { color, phase } => {
                    let c = color.eval(&m.binding).map_err(eval_err)?;
                    let p = phase.eval(&m.binding).map_err(eval_err)?;
                    let color = lit_color(c).ok_or_else(|| {
                        eval_err(ExprError::Syntax { pos: 0, msg: format!("colour evaluated to {c}") })
                    })?;
                    new_kinds.push(NodeKind::Spider { color, phase: PhaseDeg::new(p) });
                    NodeRef::New(new_kinds.len() - 1)
                }
                TemplateKind::HBox { phase } => {
                    let p = phase.eval(&m.binding).map_err(eval_err)?;
                    new_kinds.push(NodeKind::HBox { phase: PhaseDeg::new(p) });
                    NodeRef::New(new_kinds.len() - 1)
                }
            };
            for ep in &t.endpoints {
                let groups = ep.group.as_ref().map_or(1, card);
                for j in 0..groups {
                    let mut idx: Vec<(&Label, usize)> = Vec::new();
                    if let Some(r) = &t.replicate {
                        idx.push((r, k));
                    }
                    if let Some(g) = &ep.group {
                        idx.push((g, j));
                    }
                    idx.sort();
                    let pt = new_point(Some(node), &mut terminal, &mut adj);
                    occurrences.entry((ep.wire.clone(), idx.into_iter().map(|(_, i)| i).collect())).or_default().push(pt);
                }
            }
        }
    }
    for (a, b) in &rule.connect {
        let pa = new_point(None, &mut terminal, &mut adj);
        let pb = new_point(None, &mut terminal, &mut adj);
        link(pa, pb, &mut adj);
        occurrences.entry((a.clone(), vec![])).or_default().push(pa);
        occurrences.entry((b.clone(), vec![])).or_default().push(pb);
    }
    for (key, pts) in &occurrences {
        debug_assert_eq!(pts.len(), 2, "variable instance {key:?}");
        if pts.len() == 2 {
            link(pts[0], pts[1], &mut adj);
        }
    }

    // walk paths between terminals
    let mut seen = vec![false; terminal.len()];
    let mut new_wires = Vec::new();
    for start in 0..terminal.len() {
        let Some(a) = terminal[start] else { continue };
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let (mut prev, mut cur) = (start, adj[start][0]);
        loop {
            seen[cur] = true;
            if let Some(b) = terminal[cur] {
                new_wires.push((a, b));
                break;
            }
            let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
            prev = cur;
            cur = next;
        }
    }

    // assemble
    let mut pos_old = vec![usize::MAX; d.node_count()];
    let mut nodes: Vec<Node> = Vec::new();
    let mut next_id: NodeId = 0;
    for (i, n) in d.nodes().iter().enumerate() {
        next_id = next_id.max(n.id + 1);
        if !removed[i] {
            pos_old[i] = nodes.len();
            nodes.push(n.clone());
        }
    }
    let base = nodes.len();
    for (i, k) in new_kinds.into_iter().enumerate() {
        nodes.push(Node { id: next_id + i as NodeId, kind: k });
    }
    let resolve = |r: NodeRef| match r {
        NodeRef::Old(i) => pos_old[i],
        NodeRef::New(i) => base + i,
    };
    let wires: Vec<(usize, usize)> =
        kept_wires.into_iter().chain(new_wires).map(|(a, b)| (resolve(a), resolve(b))).collect();
    let out = Diagram::from_nodes(nodes, wires).map_err(|e| MatchError::Invalid { rule: rule.name.clone(), source: e })?;
    Ok(out.normalize())
}

/// Every rewrite of `d` by `rule`, in match order.
pub fn rewrites(rule: &Rule, d: &Diagram) -> Result<Vec<Diagram>, MatchError> {
    find_matches(rule, d)?.iter().map(|m| apply(rule, m, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::builtin_rule;

    fn line(kinds: Vec<NodeKind>, wires: Vec<(usize, usize)>) -> Diagram {
        Diagram::from_parts(kinds, wires).unwrap()
    }

    #[test]
    fn fusion_symmetric_matches() {
        let d = line(
            vec![NodeKind::boundary("a"), NodeKind::z(90), NodeKind::z(270), NodeKind::boundary("b")],
            vec![(0, 1), (1, 2), (2, 3)],
        );
        let f = builtin_rule("f").unwrap();
        let ms = find_matches(&f, &d).unwrap();
        assert_eq!(ms.len(), 2);
        let out = apply(&f, &ms[0], &d).unwrap();
        assert_eq!(out.spider_count(), 1);
        assert_eq!(out.wire_count(), 2);
        assert_eq!(out.nodes().iter().find(|n| n.kind.is_spider()).unwrap().kind, NodeKind::z(0));
    }

    #[test]
    fn fusion_needs_same_colour() {
        let d = line(vec![NodeKind::z(0), NodeKind::x(0)], vec![(0, 1)]);
        assert!(find_matches(&builtin_rule("f").unwrap(), &d).unwrap().is_empty());
    }

    #[test]
    fn pi_copies_through_neighbour() {
        let d = line(
            vec![
                NodeKind::boundary("a"),
                NodeKind::x(180),
                NodeKind::z(90),
                NodeKind::boundary("b"),
                NodeKind::boundary("c"),
            ],
            vec![(0, 1), (1, 2), (2, 3), (2, 4)],
        );
        let pi = builtin_rule("pi").unwrap();
        let ms = find_matches(&pi, &d).unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].cards["P"], 2);
        let out = apply(&pi, &ms[0], &d).unwrap();
        let xs = out.nodes().iter().filter(|n| n.kind == NodeKind::x(180)).count();
        assert_eq!(xs, 2);
        assert!(out.nodes().iter().any(|n| n.kind == NodeKind::z(270)));
    }

    #[test]
    fn bialgebra_k23() {
        // Z(0) with two boundary wires, X(0) with three
        let mut kinds = vec![NodeKind::z(0), NodeKind::x(0)];
        let mut wires = vec![(0, 1)];
        for (i, owner) in [0, 0, 1, 1, 1].iter().enumerate() {
            kinds.push(NodeKind::boundary(format!("b{i}")));
            wires.push((*owner, i + 2));
        }
        let d = line(kinds, wires);
        let b = builtin_rule("b").unwrap();
        let ms = find_matches(&b, &d).unwrap();
        assert_eq!(ms.len(), 1);
        let out = apply(&b, &ms[0], &d).unwrap();
        assert_eq!(out.spider_count(), 5);
        assert_eq!(out.wire_count(), 6 + 5);
    }

    #[test]
    fn stale_match_rejected() {
        let d = line(vec![NodeKind::boundary("a"), NodeKind::z(0), NodeKind::boundary("b")], vec![(0, 1), (1, 2)]);
        let id = builtin_rule("id").unwrap();
        let ms = find_matches(&id, &d).unwrap();
        // the two wires can be read either way round
        assert_eq!(ms.len(), 2);
        let out = apply(&id, &ms[0], &d).unwrap();
        assert_eq!(out.wire_count(), 1);
        assert_eq!(apply(&id, &ms[0], &out), Err(MatchError::Stale));
    }
}

//! Rewrites that are not single quantified rules: local complementation,
//! pivoting, and the Hadamard-toggling colour change.

use thiserror::Error;

use crate::diagram::{Diagram, Node, NodeId, NodeKind};
use crate::phase::{Color, PhaseDeg};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphLikeError {
    #[error("no node with id {0}")]
    UnknownNode(NodeId),

    #[error("node {id}: {msg}")]
    Precondition { id: NodeId, msg: String },
}

fn precondition(d: &Diagram, pos: usize, msg: &str) -> GraphLikeError {
    GraphLikeError::Precondition { id: d.node(pos).id, msg: msg.to_string() }
}

fn position(d: &Diagram, id: NodeId) -> Result<usize, GraphLikeError> {
    d.position_of(id).ok_or(GraphLikeError::UnknownNode(id))
}

fn is_hadamard(kind: &NodeKind) -> bool {
    *kind == NodeKind::hadamard()
}

/// For each wire of `s`: the far end, and the node behind it when the far
/// end is a 2-ary `H(180)`.
fn legs(d: &Diagram, inc: &[Vec<usize>], deg: &[usize], s: usize) -> Vec<(usize, Option<usize>)> {
    inc[s]
        .iter()
        .map(|&w| {
            let (a, b) = d.wires()[w];
            let x = if a == s { b } else { a };
            if x != s && is_hadamard(d.kind(x)) && deg[x] == 2 {
                let w2 = inc[x].iter().copied().find(|&w2| w2 != w).expect("2-ary");
                let (p, q) = d.wires()[w2];
                (x, Some(if p == x { q } else { p }))
            } else {
                (x, None)
            }
        })
        .collect()
}

/// Hadamard neighbours of a graph-like spider: `(hbox, neighbour)` pairs, or
/// `None` when some wire is not a Hadamard edge to a distinct Z-spider.
fn hadamard_neighbours(d: &Diagram, inc: &[Vec<usize>], deg: &[usize], s: usize) -> Option<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (x, y) in legs(d, inc, deg, s) {
        let y = y?;
        if y == s || d.kind(y).color() != Some(Color::Z) || out.iter().any(|&(_, n)| n == y) {
            return None;
        }
        out.push((x, y));
    }
    Some(out)
}

struct Builder {
    nodes: Vec<Node>,
    removed: Vec<bool>,
    wires: Vec<(usize, usize)>,
    next_id: NodeId,
}

impl Builder {
    fn new(d: &Diagram) -> Self {
        Builder {
            nodes: d.nodes().to_vec(),
            removed: vec![false; d.node_count()],
            wires: d.wires().to_vec(),
            next_id: d.nodes().iter().map(|n| n.id + 1).max().unwrap_or(0),
        }
    }

    fn add(&mut self, kind: NodeKind) -> usize {
        self.nodes.push(Node { id: self.next_id, kind });
        self.removed.push(false);
        self.next_id += 1;
        self.nodes.len() - 1
    }

    fn shift(&mut self, n: usize, by: PhaseDeg) {
        if let NodeKind::Spider { phase, .. } = &mut self.nodes[n].kind {
            *phase = *phase + by;
        }
    }

    /// Toggles a Hadamard edge between spiders `u` and `v`.
    fn toggle(&mut self, u: usize, v: usize) {
        let deg = |b: &Builder, x: usize| b.wires.iter().filter(|&&(p, q)| p == x || q == x).count();
        let existing = (0..self.nodes.len()).find(|&h| {
            !self.removed[h] && is_hadamard(&self.nodes[h].kind) && deg(self, h) == 2 && {
                let ends: Vec<usize> = self
                    .wires
                    .iter()
                    .filter_map(|&(p, q)| if p == h { Some(q) } else if q == h { Some(p) } else { None })
                    .collect();
                (ends[0] == u && ends[1] == v) || (ends[0] == v && ends[1] == u)
            }
        });
        match existing {
            Some(h) => self.removed[h] = true,
            None => {
                let h = self.add(NodeKind::hadamard());
                self.wires.push((u, h));
                self.wires.push((h, v));
            }
        }
    }

    fn finish(self) -> Diagram {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.into_iter().enumerate() {
            if !self.removed[i] {
                remap[i] = nodes.len();
                nodes.push(n);
            }
        }
        let wires = self
            .wires
            .into_iter()
            .filter(|&(a, b)| remap[a] != usize::MAX && remap[b] != usize::MAX)
            .map(|(a, b)| (remap[a], remap[b]))
            .collect();
        Diagram::from_nodes(nodes, wires).expect("graph-like rewrites keep boundaries intact").normalize()
    }
}

fn lcomp_check(d: &Diagram, inc: &[Vec<usize>], deg: &[usize], s: usize) -> Result<Vec<(usize, usize)>, GraphLikeError> {
    match d.kind(s) {
        NodeKind::Spider { color: Color::Z, phase } if phase.is_proper_clifford() => {}
        NodeKind::Spider { color: Color::Z, .. } => return Err(precondition(d, s, "phase must be 90 or 270")),
        _ => return Err(precondition(d, s, "not a Z-spider")),
    }
    hadamard_neighbours(d, inc, deg, s).ok_or_else(|| precondition(d, s, "neighbourhood is not graph-like"))
}

/// Removes a graph-like `Z(±90)` spider, complementing the Hadamard edges
/// among its neighbours and shifting their phases by minus its phase.
pub fn local_complement(d: &Diagram, s: NodeId) -> Result<Diagram, GraphLikeError> {
    let s = position(d, s)?;
    let inc = d.incidence();
    let deg = d.degrees();
    let nbrs = lcomp_check(d, &inc, &deg, s)?;
    let alpha = d.kind(s).phase().expect("spider");
    let mut b = Builder::new(d);
    b.removed[s] = true;
    for &(h, _) in &nbrs {
        b.removed[h] = true;
    }
    for (i, &(_, u)) in nbrs.iter().enumerate() {
        b.shift(u, -alpha);
        for &(_, v) in &nbrs[i + 1..] {
            b.toggle(u, v);
        }
    }
    Ok(b.finish())
}

fn pivot_check(
    d: &Diagram,
    inc: &[Vec<usize>],
    deg: &[usize],
    s: usize,
) -> Result<Vec<(usize, usize)>, GraphLikeError> {
    match d.kind(s) {
        NodeKind::Spider { color: Color::Z, phase } if phase.is_pauli() => {}
        NodeKind::Spider { color: Color::Z, .. } => return Err(precondition(d, s, "phase must be 0 or 180")),
        _ => return Err(precondition(d, s, "not a Z-spider")),
    }
    hadamard_neighbours(d, inc, deg, s).ok_or_else(|| precondition(d, s, "neighbourhood is not graph-like"))
}

/// Pivots along the Hadamard edge between two graph-like Pauli Z-spiders.
pub fn pivot(d: &Diagram, s1: NodeId, s2: NodeId) -> Result<Diagram, GraphLikeError> {
    let (p1, p2) = (position(d, s1)?, position(d, s2)?);
    if p1 == p2 {
        return Err(precondition(d, p1, "pivot needs two distinct spiders"));
    }
    let inc = d.incidence();
    let deg = d.degrees();
    let n1 = pivot_check(d, &inc, &deg, p1)?;
    let n2 = pivot_check(d, &inc, &deg, p2)?;
    if !n1.iter().any(|&(_, v)| v == p2) {
        return Err(precondition(d, p1, "not joined to the other spider by a Hadamard edge"));
    }
    let a = d.kind(p1).phase().expect("spider");
    let bph = d.kind(p2).phase().expect("spider");
    let only1: Vec<usize> = n1.iter().map(|&(_, v)| v).filter(|&v| v != p2 && !n2.iter().any(|&(_, w)| w == v)).collect();
    let only2: Vec<usize> = n2.iter().map(|&(_, v)| v).filter(|&v| v != p1 && !n1.iter().any(|&(_, w)| w == v)).collect();
    let common: Vec<usize> = n1.iter().map(|&(_, v)| v).filter(|&v| v != p2 && n2.iter().any(|&(_, w)| w == v)).collect();
    let mut b = Builder::new(d);
    b.removed[p1] = true;
    b.removed[p2] = true;
    for &(h, _) in n1.iter().chain(&n2) {
        b.removed[h] = true;
    }
    for &u in &only1 {
        for &v in only2.iter().chain(&common) {
            b.toggle(u, v);
        }
    }
    for &u in &only2 {
        for &v in &common {
            b.toggle(u, v);
        }
    }
    for &u in &only1 {
        b.shift(u, bph);
    }
    for &u in &only2 {
        b.shift(u, a);
    }
    for &u in &common {
        b.shift(u, a + bph + PhaseDeg::PI);
    }
    Ok(b.finish())
}

/// Hadamards hanging off `s` by exactly one wire; [`h_toggle`] removes these.
fn toggle_hadamards(d: &Diagram, inc: &[Vec<usize>], deg: &[usize], s: usize) -> Vec<bool> {
    let mut pass = vec![false; d.node_count()];
    for &w in &inc[s] {
        let (a, b) = d.wires()[w];
        let x = if a == s { b } else { a };
        if x != s && is_hadamard(d.kind(x)) && deg[x] == 2 {
            let back = inc[x].iter().filter(|&&w2| {
                let (p, q) = d.wires()[w2];
                p == s || q == s
            });
            pass[x] = back.count() == 1;
        }
    }
    pass
}

/// Flips the colour of a spider with at least one Hadamard wire: Hadamards
/// on its wires are removed and every other wire gains one. Self-loops,
/// with or without a Hadamard on them, are left alone.
pub fn h_toggle(d: &Diagram, s: NodeId) -> Result<Diagram, GraphLikeError> {
    let s = position(d, s)?;
    let color = d.kind(s).color().ok_or_else(|| precondition(d, s, "not a spider"))?;
    let inc = d.incidence();
    let deg = d.degrees();
    let pass = toggle_hadamards(d, &inc, &deg, s);
    if !pass.iter().any(|&p| p) {
        return Err(precondition(d, s, "no Hadamard on any wire"));
    }
    let mut b = Builder::new(d);
    let mut wires = Vec::new();
    for (w, &(p, q)) in d.wires().iter().enumerate() {
        let touches_s = p == s || q == s;
        if !touches_s {
            if !pass[p] && !pass[q] {
                wires.push((p, q));
            }
            continue;
        }
        let x = if p == s { q } else { p };
        if x == s || (is_hadamard(d.kind(x)) && deg[x] == 2 && !pass[x]) {
            wires.push((p, q));
        } else if pass[x] {
            b.removed[x] = true;
            let w2 = inc[x].iter().copied().find(|&w2| w2 != w).expect("2-ary");
            let (u, v) = d.wires()[w2];
            let y = if u == x { v } else { u };
            if !pass[y] {
                wires.push((s, y));
            } else if x < y {
                wires.push((s, s));
            }
        } else {
            let h = b.add(NodeKind::hadamard());
            wires.push((s, h));
            wires.push((h, x));
        }
    }
    b.wires = wires;
    if let NodeKind::Spider { color: c, .. } = &mut b.nodes[s].kind {
        *c = color.flip();
    }
    Ok(b.finish())
}

/// Spiders where [`local_complement`] applies, by position.
pub fn lcomp_sites(d: &Diagram) -> Vec<usize> {
    let inc = d.incidence();
    let deg = d.degrees();
    (0..d.node_count()).filter(|&s| lcomp_check(d, &inc, &deg, s).is_ok()).collect()
}

/// Unordered spider pairs where [`pivot`] applies, by position.
pub fn pivot_sites(d: &Diagram) -> Vec<(usize, usize)> {
    let inc = d.incidence();
    let deg = d.degrees();
    let mut out = Vec::new();
    for s in 0..d.node_count() {
        let Ok(n1) = pivot_check(d, &inc, &deg, s) else { continue };
        for &(_, t) in &n1 {
            if t > s && pivot_check(d, &inc, &deg, t).is_ok() {
                out.push((s, t));
            }
        }
    }
    out
}

/// Spiders where [`h_toggle`] applies, by position.
pub fn toggle_sites(d: &Diagram) -> Vec<usize> {
    let inc = d.incidence();
    let deg = d.degrees();
    (0..d.node_count())
        .filter(|&s| d.kind(s).is_spider() && toggle_hadamards(d, &inc, &deg, s).contains(&true))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{equal_up_to_scalar, tensor};

    fn equiv(a: &Diagram, b: &Diagram) -> bool {
        equal_up_to_scalar(&tensor(a).unwrap(), &tensor(b).unwrap(), 1e-9).unwrap()
    }

    #[test]
    fn lcomp_isolated_spider() {
        let d = Diagram::from_parts(vec![NodeKind::z(90)], vec![]).unwrap();
        let out = local_complement(&d, 0).unwrap();
        assert_eq!(out.node_count(), 0);
    }

    #[test]
    fn lcomp_two_neighbours() {
        // a - Z(0) -H- Z(90) -H- Z(0) - b
        let d = Diagram::from_parts(
            vec![
                NodeKind::boundary("a"),
                NodeKind::z(0),
                NodeKind::hadamard(),
                NodeKind::z(90),
                NodeKind::hadamard(),
                NodeKind::z(0),
                NodeKind::boundary("b"),
            ],
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)],
        )
        .unwrap();
        let out = local_complement(&d, 3).unwrap();
        assert_eq!(out.spider_count(), 2);
        assert!(out.nodes().iter().filter(|n| n.kind.is_spider()).all(|n| n.kind == NodeKind::z(270)));
        assert_eq!(out.hbox_count(), 1);
        assert!(equiv(&d, &out));
    }

    #[test]
    fn lcomp_rejects_zero_phase() {
        let d = Diagram::from_parts(vec![NodeKind::z(0)], vec![]).unwrap();
        assert!(matches!(local_complement(&d, 0), Err(GraphLikeError::Precondition { .. })));
    }

    #[test]
    fn pivot_pair_alone() {
        let d = Diagram::from_parts(vec![NodeKind::z(0), NodeKind::hadamard(), NodeKind::z(0)], vec![(0, 1), (1, 2)])
            .unwrap();
        assert_eq!(pivot(&d, 0, 2).unwrap().node_count(), 0);
    }

    #[test]
    fn pivot_exclusive_neighbours() {
        // a - Z(0) -H- Z(180) -H- Z(0) -H- Z(0) - b
        let d = Diagram::from_parts(
            vec![
                NodeKind::boundary("a"),
                NodeKind::z(0),
                NodeKind::hadamard(),
                NodeKind::z(180),
                NodeKind::hadamard(),
                NodeKind::z(0),
                NodeKind::hadamard(),
                NodeKind::z(0),
                NodeKind::boundary("b"),
            ],
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8)],
        )
        .unwrap();
        let out = pivot(&d, 3, 5).unwrap();
        assert_eq!(out.spider_count(), 2);
        assert_eq!(out.hbox_count(), 1);
        assert!(equiv(&d, &out));
        assert!(matches!(pivot(&d, 3, 1), Err(GraphLikeError::Precondition { .. })));
    }

    #[test]
    fn pivot_rejects_clifford_phase() {
        let d = Diagram::from_parts(vec![NodeKind::z(90), NodeKind::hadamard(), NodeKind::z(0)], vec![(0, 1), (1, 2)])
            .unwrap();
        assert!(pivot(&d, 0, 2).is_err());
    }

    #[test]
    fn toggle_is_involutive() {
        let d = Diagram::from_parts(
            vec![NodeKind::boundary("a"), NodeKind::hadamard(), NodeKind::z(45), NodeKind::boundary("b")],
            vec![(0, 1), (1, 2), (2, 3)],
        )
        .unwrap();
        let once = h_toggle(&d, 2).unwrap();
        assert!(equiv(&d, &once));
        let s = once.nodes().iter().find(|n| n.kind.is_spider()).unwrap().id;
        let twice = h_toggle(&once, s).unwrap();
        assert_eq!(crate::canon::canonical_key(&twice), crate::canon::canonical_key(&d));
    }
}

//! ZX/ZH diagrams as undirected port multigraphs.
//!
//! A diagram is a set of nodes (spiders, H-boxes and named boundary
//! terminals) and a multiset of wires. Endpoints at a node are unordered, so
//! a wire is just an unordered pair of node positions. Parallel wires and
//! self-loops are representable; [`Diagram::normalize`] removes the
//! self-loops that can be eliminated without changing the linear map.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase::{Color, PhaseDeg};

pub type NodeId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),

    #[error("wire endpoint references unknown node id {0}")]
    DanglingWire(NodeId),

    #[error("boundary node {id} has degree {degree}, expected 1")]
    BoundaryDegree { id: NodeId, degree: usize },

    #[error("node {id}: {msg}")]
    BadNode { id: NodeId, msg: String },

    #[error("malformed diagram file: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Spider { color: Color, phase: PhaseDeg },
    HBox { phase: PhaseDeg },
    Boundary { name: String },
}

impl NodeKind {
    pub fn z(phase: i64) -> Self {
        NodeKind::Spider { color: Color::Z, phase: PhaseDeg::new(phase) }
    }

    pub fn x(phase: i64) -> Self {
        NodeKind::Spider { color: Color::X, phase: PhaseDeg::new(phase) }
    }

    pub fn h(phase: i64) -> Self {
        NodeKind::HBox { phase: PhaseDeg::new(phase) }
    }

    /// The 2-ary Hadamard gate is `h(180)`; this is just the node kind.
    pub fn hadamard() -> Self {
        NodeKind::HBox { phase: PhaseDeg::PI }
    }

    pub fn boundary(name: impl Into<String>) -> Self {
        NodeKind::Boundary { name: name.into() }
    }

    pub fn is_spider(&self) -> bool {
        matches!(self, NodeKind::Spider { .. })
    }

    pub fn is_hbox(&self) -> bool {
        matches!(self, NodeKind::HBox { .. })
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, NodeKind::Boundary { .. })
    }

    pub fn color(&self) -> Option<Color> {
        match self {
            NodeKind::Spider { color, .. } => Some(*color),
            _ => None,
        }
    }

    pub fn phase(&self) -> Option<PhaseDeg> {
        match self {
            NodeKind::Spider { phase, .. } | NodeKind::HBox { phase } => Some(*phase),
            NodeKind::Boundary { .. } => None,
        }
    }

    /// Byte label used for canonical ordering. Distinct kinds never share a label.
    pub(crate) fn label_bytes(&self, out: &mut Vec<u8>) {
        match self {
            NodeKind::Spider { color, phase } => {
                out.push(match color {
                    Color::Z => 0,
                    Color::X => 1,
                });
                out.extend_from_slice(&phase.degrees().to_be_bytes());
            }
            NodeKind::HBox { phase } => {
                out.push(2);
                out.extend_from_slice(&phase.degrees().to_be_bytes());
            }
            NodeKind::Boundary { name } => {
                out.push(3);
                out.extend_from_slice(&(name.len() as u32).to_be_bytes());
                out.extend_from_slice(name.as_bytes());
            }
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Spider { color, phase } => write!(f, "{color}({phase})"),
            NodeKind::HBox { phase } => write!(f, "H({phase})"),
            NodeKind::Boundary { name } => write!(f, "<{name}>"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
}

/// An immutable, validated diagram. Wires refer to node positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Diagram {
    nodes: Vec<Node>,
    wires: Vec<(usize, usize)>,
}

impl Diagram {
    /// Validates and builds a diagram from node kinds and position-indexed
    /// wires. Node ids are assigned as positions.
    pub fn from_parts(kinds: Vec<NodeKind>, wires: Vec<(usize, usize)>) -> Result<Self, DiagramError> {
        let nodes = kinds
            .into_iter()
            .enumerate()
            .map(|(i, kind)| Node { id: i as NodeId, kind })
            .collect();
        Self::from_nodes(nodes, wires)
    }

    pub(crate) fn from_nodes(nodes: Vec<Node>, wires: Vec<(usize, usize)>) -> Result<Self, DiagramError> {
        let mut seen = HashMap::with_capacity(nodes.len());
        for n in &nodes {
            if seen.insert(n.id, ()).is_some() {
                return Err(DiagramError::DuplicateId(n.id));
            }
        }
        let mut degree = vec![0usize; nodes.len()];
        let mut norm = Vec::with_capacity(wires.len());
        for &(a, b) in &wires {
            for e in [a, b] {
                if e >= nodes.len() {
                    return Err(DiagramError::DanglingWire(e as NodeId));
                }
            }
            degree[a] += 1;
            degree[b] += 1;
            norm.push(if a <= b { (a, b) } else { (b, a) });
        }
        for (n, &deg) in nodes.iter().zip(&degree) {
            if n.kind.is_boundary() && deg != 1 {
                return Err(DiagramError::BoundaryDegree { id: n.id, degree: deg });
            }
        }
        Ok(Diagram { nodes, wires: norm })
    }

    pub fn empty() -> Self {
        Diagram { nodes: Vec::new(), wires: Vec::new() }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn kind(&self, idx: usize) -> &NodeKind {
        &self.nodes[idx].kind
    }

    pub fn wires(&self) -> &[(usize, usize)] {
        &self.wires
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn wire_count(&self) -> usize {
        self.wires.len()
    }

    pub fn position_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Incident wire indices per node; a self-loop is listed twice.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (w, &(a, b)) in self.wires.iter().enumerate() {
            inc[a].push(w);
            inc[b].push(w);
        }
        inc
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.wires
            .iter()
            .map(|&(a, b)| usize::from(a == idx) + usize::from(b == idx))
            .sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for &(a, b) in &self.wires {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn spider_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind.is_spider()).count()
    }

    pub fn hbox_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind.is_hbox()).count()
    }

    pub fn boundary_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind.is_boundary()).count()
    }

    /// Boundary positions sorted by name.
    pub fn boundaries_by_name(&self) -> Vec<usize> {
        let mut b: Vec<(&str, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match &n.kind {
                NodeKind::Boundary { name } => Some((name.as_str(), i)),
                _ => None,
            })
            .collect();
        b.sort();
        b.into_iter().map(|(_, i)| i).collect()
    }

    /// Every H-box is a 2-ary `H(180)`.
    pub fn is_pure_zx(&self) -> bool {
        let deg = self.degrees();
        self.nodes.iter().zip(&deg).all(|(n, &d)| match n.kind {
            NodeKind::HBox { phase } => phase == PhaseDeg::PI && d == 2,
            _ => true,
        })
    }

    pub fn has_self_loops(&self) -> bool {
        self.wires.iter().any(|&(a, b)| a == b)
    }

    /// Removes plain self-loops on spiders and folds every `H(180)` whose two
    /// wires both land on the same spider into a phase shift of 180 on that
    /// spider. Both steps preserve the linear map up to a non-zero scalar.
    pub fn normalize(&self) -> Diagram {
        let deg = self.degrees();
        let mut phase_shift = vec![false; self.nodes.len()];
        let mut drop_node = vec![false; self.nodes.len()];
        let mut hloop_of = vec![None; self.nodes.len()];
        for (h, n) in self.nodes.iter().enumerate() {
            if n.kind == NodeKind::hadamard() && deg[h] == 2 {
                let ends: Vec<usize> = self
                    .wires
                    .iter()
                    .filter_map(|&(a, b)| {
                        if a == h && b != h {
                            Some(b)
                        } else if b == h && a != h {
                            Some(a)
                        } else {
                            None
                        }
                    })
                    .collect();
                if ends.len() == 2 && ends[0] == ends[1] && self.nodes[ends[0]].kind.is_spider() {
                    hloop_of[h] = Some(ends[0]);
                }
            }
        }
        for (h, s) in hloop_of.iter().enumerate() {
            if let Some(s) = *s {
                drop_node[h] = true;
                phase_shift[s] ^= true;
            }
        }
        if !drop_node.iter().any(|&d| d)
            && !self.wires.iter().any(|&(a, b)| a == b && self.nodes[a].kind.is_spider())
        {
            return self.clone();
        }

        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            if drop_node[i] {
                continue;
            }
            let mut n = n.clone();
            if phase_shift[i] {
                if let NodeKind::Spider { phase, .. } = &mut n.kind {
                    *phase = *phase + PhaseDeg::PI;
                }
            }
            remap[i] = nodes.len();
            nodes.push(n);
        }
        let wires = self
            .wires
            .iter()
            .filter(|&&(a, b)| !drop_node[a] && !drop_node[b])
            .filter(|&&(a, b)| !(a == b && self.nodes[a].kind.is_spider()))
            .map(|&(a, b)| (remap[a], remap[b]))
            .collect();
        Diagram { nodes, wires }
    }

    /// Copy with every boundary renamed to the empty string.
    pub fn anonymous_boundaries(&self) -> Diagram {
        let mut d = self.clone();
        for n in &mut d.nodes {
            if let NodeKind::Boundary { name } = &mut n.kind {
                name.clear();
            }
        }
        d
    }

    /// Applies a node permutation: node at position `i` moves to `perm[i]`.
    /// Ids are reassigned to the new positions and wires sorted.
    pub fn permuted(&self, perm: &[usize]) -> Diagram {
        let mut nodes: Vec<Option<Node>> = vec![None; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            nodes[perm[i]] = Some(Node { id: perm[i] as NodeId, kind: n.kind.clone() });
        }
        let mut wires: Vec<(usize, usize)> = self
            .wires
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (perm[a], perm[b]);
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        wires.sort_unstable();
        Diagram {
            nodes: nodes.into_iter().map(|n| n.expect("perm is a bijection")).collect(),
            wires,
        }
    }

    /// Same diagram with node ids replaced by `ids` (position-indexed).
    pub fn with_ids(&self, ids: &[NodeId]) -> Result<Diagram, DiagramError> {
        let nodes = self
            .nodes
            .iter()
            .zip(ids)
            .map(|(n, &id)| Node { id, kind: n.kind.clone() })
            .collect();
        Diagram::from_nodes(nodes, self.wires.clone())
    }

    pub fn to_file(&self) -> DiagramFile {
        DiagramFile {
            nodes: self
                .nodes
                .iter()
                .map(|n| {
                    let (kind, phase, name) = match &n.kind {
                        NodeKind::Spider { color: Color::Z, phase } => ("z", Some(i64::from(*phase)), None),
                        NodeKind::Spider { color: Color::X, phase } => ("x", Some(i64::from(*phase)), None),
                        NodeKind::HBox { phase } => ("h", Some(i64::from(*phase)), None),
                        NodeKind::Boundary { name } => ("boundary", None, Some(name.clone())),
                    };
                    NodeEntry { id: n.id, kind: kind.to_string(), phase, name }
                })
                .collect(),
            wires: self
                .wires
                .iter()
                .map(|&(a, b)| [self.nodes[a].id, self.nodes[b].id])
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("diagram serializes")
    }

    pub fn from_json(text: &str) -> Result<Diagram, DiagramError> {
        let file: DiagramFile = serde_json::from_str(text).map_err(|e| DiagramError::Format(e.to_string()))?;
        make_diagram(&file)
    }

    /// Short human-readable summary, e.g. `7 spiders, 1 hbox, 3 boundaries, 10 wires`.
    pub fn summary(&self) -> String {
        format!(
            "{} spiders, {} hboxes, {} boundaries, {} wires",
            self.spider_count(),
            self.hbox_count(),
            self.boundary_count(),
            self.wire_count()
        )
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.nodes.iter().map(|n| format!("{}:{}", n.id, n.kind)).collect();
        write!(f, "[{}]", parts.join(" "))?;
        let wires: Vec<String> = self
            .wires
            .iter()
            .map(|&(a, b)| format!("{}-{}", self.nodes[a].id, self.nodes[b].id))
            .collect();
        write!(f, " {{{}}}", wires.join(" "))
    }
}

/// On-disk diagram description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramFile {
    pub nodes: Vec<NodeEntry>,
    pub wires: Vec<[NodeId; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: NodeId,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// Validates a node/wire listing into a [`Diagram`]. Does not normalize.
pub fn make_diagram(file: &DiagramFile) -> Result<Diagram, DiagramError> {
    let mut index: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for entry in &file.nodes {
        if index.insert(entry.id, nodes.len()).is_some() {
            return Err(DiagramError::DuplicateId(entry.id));
        }
        let need_phase = || {
            entry.phase.ok_or_else(|| DiagramError::BadNode {
                id: entry.id,
                msg: format!("kind {:?} requires a phase", entry.kind),
            })
        };
        let kind = match entry.kind.as_str() {
            "z" => NodeKind::z(need_phase()?),
            "x" => NodeKind::x(need_phase()?),
            "h" => NodeKind::h(need_phase()?),
            "boundary" => NodeKind::Boundary {
                name: entry.name.clone().ok_or_else(|| DiagramError::BadNode {
                    id: entry.id,
                    msg: "boundary requires a name".into(),
                })?,
            },
            other => {
                return Err(DiagramError::BadNode { id: entry.id, msg: format!("unknown kind {other:?}") })
            }
        };
        nodes.push(Node { id: entry.id, kind });
    }
    let mut wires = Vec::with_capacity(file.wires.len());
    for [a, b] in &file.wires {
        let pa = *index.get(a).ok_or(DiagramError::DanglingWire(*a))?;
        let pb = *index.get(b).ok_or(DiagramError::DanglingWire(*b))?;
        wires.push((pa, pb));
    }
    Diagram::from_nodes(nodes, wires)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: NodeId, kind: &str, phase: Option<i64>, name: Option<&str>) -> NodeEntry {
        NodeEntry { id, kind: kind.into(), phase, name: name.map(str::to_string) }
    }

    #[test]
    fn minimal_spider() {
        let d = make_diagram(&DiagramFile { nodes: vec![entry(0, "z", Some(0), None)], wires: vec![] }).unwrap();
        assert_eq!(d.node_count(), 1);
        assert_eq!(d.degree(0), 0);
    }

    #[test]
    fn boundary_degree_checked() {
        let err = make_diagram(&DiagramFile { nodes: vec![entry(0, "boundary", None, Some("in"))], wires: vec![] })
            .unwrap_err();
        assert_eq!(err, DiagramError::BoundaryDegree { id: 0, degree: 0 });
    }

    #[test]
    fn self_loop_is_representable() {
        let d = make_diagram(&DiagramFile {
            nodes: vec![entry(0, "z", Some(0), None), entry(1, "boundary", None, Some("b"))],
            wires: vec![[0, 1], [0, 0]],
        })
        .unwrap();
        assert!(d.has_self_loops());
        assert_eq!(d.degree(0), 3);
    }

    #[test]
    fn structural_errors() {
        let dup = DiagramFile { nodes: vec![entry(3, "z", Some(0), None), entry(3, "x", Some(0), None)], wires: vec![] };
        assert_eq!(make_diagram(&dup).unwrap_err(), DiagramError::DuplicateId(3));
        let dangling = DiagramFile { nodes: vec![entry(0, "z", Some(0), None)], wires: vec![[0, 7]] };
        assert_eq!(make_diagram(&dangling).unwrap_err(), DiagramError::DanglingWire(7));
        let bad = DiagramFile { nodes: vec![entry(0, "y", Some(0), None)], wires: vec![] };
        assert!(matches!(make_diagram(&bad), Err(DiagramError::BadNode { .. })));
        let nophase = DiagramFile { nodes: vec![entry(0, "h", None, None)], wires: vec![] };
        assert!(matches!(make_diagram(&nophase), Err(DiagramError::BadNode { .. })));
    }

    #[test]
    fn normalize_drops_plain_loop() {
        let d = Diagram::from_parts(vec![NodeKind::z(0), NodeKind::boundary("b")], vec![(0, 1), (0, 0)]).unwrap();
        let n = d.normalize();
        assert_eq!(n.wires(), &[(0, 1)]);
        assert_eq!(n.kind(0), &NodeKind::z(0));
    }

    #[test]
    fn normalize_folds_hadamard_loop() {
        let d = Diagram::from_parts(
            vec![NodeKind::z(90), NodeKind::hadamard(), NodeKind::boundary("b")],
            vec![(0, 1), (1, 0), (0, 2)],
        )
        .unwrap();
        let n = d.normalize();
        assert_eq!(n.node_count(), 2);
        assert_eq!(n.kind(0), &NodeKind::z(270));
        assert_eq!(n.wire_count(), 1);
        assert_eq!(n.normalize(), n);
    }

    #[test]
    fn json_roundtrip() {
        let d = Diagram::from_parts(
            vec![NodeKind::x(45), NodeKind::h(30), NodeKind::boundary("q0_out")],
            vec![(0, 1), (1, 2), (0, 1)],
        )
        .unwrap();
        assert_eq!(Diagram::from_json(&d.to_json()).unwrap(), d);
    }
}

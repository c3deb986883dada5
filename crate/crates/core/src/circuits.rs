//! Benchmark diagrams built from gate lists and parametric builders.
//!
//! Boundaries are named `q{i}_in` and `q{i}_out`. Gates translate to
//! `H -> H(180)`, `Z/X(q, a) -> ` 2-ary spider, `CNOT -> Z(0)` on the
//! control joined to `X(0)` on the target, `CZ -> Z(0) - H(180) - Z(0)`, and
//! `INIT0 -> X(0)` state in place of the input boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{Diagram, DiagramError, NodeKind};
use crate::rule::RuleSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("gate {index}: qubit {qubit} out of range for {qubits} qubits")]
    BadQubit { index: usize, qubit: usize, qubits: usize },

    #[error("gate {index}: {msg}")]
    BadGate { index: usize, msg: String },

    #[error("{builder}: {msg}")]
    BadParam { builder: &'static str, msg: String },

    #[error("malformed gate list: {0}")]
    Format(String),

    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    Z(usize, i64),
    X(usize, i64),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
    Init0(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateList {
    pub qubits: usize,
    pub gates: Vec<Gate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateEntry {
    pub g: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateFile {
    pub qubits: usize,
    pub gates: Vec<GateEntry>,
}

impl GateList {
    pub fn new(qubits: usize, gates: Vec<Gate>) -> Self {
        GateList { qubits, gates }
    }

    pub fn from_json(text: &str) -> Result<GateList, CircuitError> {
        let file: GateFile = serde_json::from_str(text).map_err(|e| CircuitError::Format(e.to_string()))?;
        let mut gates = Vec::new();
        for (index, e) in file.gates.iter().enumerate() {
            let need = |v: Option<usize>, field: &str| {
                v.ok_or_else(|| CircuitError::BadGate { index, msg: format!("{} needs field {field:?}", e.g) })
            };
            let gate = match e.g.to_ascii_uppercase().as_str() {
                "H" => Gate::H(need(e.q, "q")?),
                "Z" => Gate::Z(need(e.q, "q")?, e.phase.unwrap_or(180)),
                "X" => Gate::X(need(e.q, "q")?, e.phase.unwrap_or(180)),
                "CNOT" | "CX" => Gate::Cnot { control: need(e.c, "c")?, target: need(e.t, "t")? },
                "CZ" => Gate::Cz(need(e.c, "c")?, need(e.t, "t")?),
                "INIT0" => Gate::Init0(need(e.q, "q")?),
                other => return Err(CircuitError::BadGate { index, msg: format!("unknown gate {other:?}") }),
            };
            gates.push(gate);
        }
        Ok(GateList { qubits: file.qubits, gates })
    }

    pub fn to_json(&self) -> String {
        let entry = |g: &str| GateEntry { g: g.to_string(), q: None, c: None, t: None, phase: None };
        let gates = self
            .gates
            .iter()
            .map(|g| match *g {
                Gate::H(q) => GateEntry { q: Some(q), ..entry("H") },
                Gate::Z(q, p) => GateEntry { q: Some(q), phase: Some(p), ..entry("Z") },
                Gate::X(q, p) => GateEntry { q: Some(q), phase: Some(p), ..entry("X") },
                Gate::Cnot { control, target } => GateEntry { c: Some(control), t: Some(target), ..entry("CNOT") },
                Gate::Cz(a, b) => GateEntry { c: Some(a), t: Some(b), ..entry("CZ") },
                Gate::Init0(q) => GateEntry { q: Some(q), ..entry("INIT0") },
            })
            .collect();
        serde_json::to_string_pretty(&GateFile { qubits: self.qubits, gates }).expect("gate lists always serialize")
    }
}

/// Incremental diagram construction with one open wire end per qubit.
struct Wiring {
    kinds: Vec<NodeKind>,
    wires: Vec<(usize, usize)>,
    last: Vec<usize>,
}

impl Wiring {
    fn node(&mut self, kind: NodeKind) -> usize {
        self.kinds.push(kind);
        self.kinds.len() - 1
    }

    /// Places `kind` on qubit `q`'s wire.
    fn on(&mut self, q: usize, kind: NodeKind) -> usize {
        let n = self.node(kind);
        self.wires.push((self.last[q], n));
        self.last[q] = n;
        n
    }
}

/// Translates a gate list gate by gate.
pub fn from_gates(gl: &GateList) -> Result<Diagram, CircuitError> {
    let n = gl.qubits;
    let check = |index: usize, q: usize| {
        if q >= n {
            Err(CircuitError::BadQubit { index, qubit: q, qubits: n })
        } else {
            Ok(())
        }
    };
    let mut initialised = vec![false; n];
    let mut touched = vec![false; n];
    for (i, g) in gl.gates.iter().enumerate() {
        let qs: Vec<usize> = match *g {
            Gate::H(q) | Gate::Z(q, _) | Gate::X(q, _) | Gate::Init0(q) => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Cz(a, b) => vec![a, b],
        };
        for &q in &qs {
            check(i, q)?;
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(CircuitError::BadGate { index: i, msg: "two-qubit gate on a single qubit".into() });
        }
        if let Gate::Init0(q) = *g {
            if touched[q] || initialised[q] {
                return Err(CircuitError::BadGate { index: i, msg: format!("INIT0 on qubit {q} must come first") });
            }
            initialised[q] = true;
        }
        for q in qs {
            touched[q] = true;
        }
    }
    let mut w = Wiring { kinds: Vec::new(), wires: Vec::new(), last: vec![0; n] };
    for q in 0..n {
        w.last[q] = if initialised[q] { w.node(NodeKind::x(0)) } else { w.node(NodeKind::boundary(format!("q{q}_in"))) };
    }
    for g in &gl.gates {
        match *g {
            Gate::Init0(_) => {}
            Gate::H(q) => {
                w.on(q, NodeKind::hadamard());
            }
            Gate::Z(q, p) => {
                w.on(q, NodeKind::z(p));
            }
            Gate::X(q, p) => {
                w.on(q, NodeKind::x(p));
            }
            Gate::Cnot { control, target } => {
                let c = w.on(control, NodeKind::z(0));
                let t = w.on(target, NodeKind::x(0));
                w.wires.push((c, t));
            }
            Gate::Cz(a, b) => {
                let za = w.on(a, NodeKind::z(0));
                let zb = w.on(b, NodeKind::z(0));
                let h = w.node(NodeKind::hadamard());
                w.wires.push((za, h));
                w.wires.push((h, zb));
            }
        }
    }
    for q in 0..n {
        w.on(q, NodeKind::boundary(format!("q{q}_out")));
    }
    Ok(Diagram::from_parts(w.kinds, w.wires)?.normalize())
}

/// GHZ preparation: every qubit starts in |0>, then `H(0)` and a CNOT chain.
pub fn ghz_gates(n: usize) -> Result<GateList, CircuitError> {
    if n < 2 {
        return Err(CircuitError::BadParam { builder: "ghz", msg: format!("needs at least 2 qubits, got {n}") });
    }
    let mut gates: Vec<Gate> = (0..n).map(Gate::Init0).collect();
    gates.push(Gate::H(0));
    gates.extend((0..n - 1).map(|i| Gate::Cnot { control: i, target: i + 1 }));
    Ok(GateList::new(n, gates))
}

pub fn ghz(n: usize) -> Result<Diagram, CircuitError> {
    from_gates(&ghz_gates(n)?)
}

/// Teleportation with post-selected measurement outcomes `a` (on the
/// entangled half) and `b` (on the input qubit). The Bell pair is a bare
/// wire; the input qubit's CNOT control is measured after a Hadamard.
pub fn teleportation(a: u8, b: u8) -> Result<Diagram, CircuitError> {
    if a > 1 || b > 1 {
        return Err(CircuitError::BadParam { builder: "teleport", msg: format!("outcomes must be 0 or 1, got {a},{b}") });
    }
    let (pa, pb) = (180 * a as i64, 180 * b as i64);
    let kinds = vec![
        NodeKind::boundary("in"),  // 0
        NodeKind::z(0),            // 1 CNOT control
        NodeKind::hadamard(),      // 2
        NodeKind::x(pb),           // 3 outcome of the input qubit
        NodeKind::x(0),            // 4 CNOT target
        NodeKind::x(pa),           // 5 outcome of the entangled half
        NodeKind::x(pa),           // 6 X correction
        NodeKind::z(pb),           // 7 Z correction
        NodeKind::boundary("out"), // 8
    ];
    let wires = vec![(0, 1), (1, 2), (2, 3), (1, 4), (4, 5), (4, 6), (6, 7), (7, 8)];
    Ok(Diagram::from_parts(kinds, wires)?.normalize())
}

/// Two-qubit QFT without the final swap. The controlled-S is written as
/// `Z(45)` on both qubits and `Z(-45)` between two CNOTs.
pub fn qft2_gates() -> GateList {
    GateList::new(
        2,
        vec![
            Gate::H(0),
            Gate::Z(0, 45),
            Gate::Z(1, 45),
            Gate::Cnot { control: 0, target: 1 },
            Gate::Z(1, 315),
            Gate::Cnot { control: 0, target: 1 },
            Gate::H(1),
        ],
    )
}

pub fn qft2() -> Diagram {
    from_gates(&qft2_gates()).expect("fixed circuit is valid")
}

/// `n` Z-spiders pairwise joined by Hadamard edges, each with one boundary
/// `v{i}`.
pub fn kn_hadamard(n: usize) -> Diagram {
    let mut kinds = Vec::new();
    let mut wires = Vec::new();
    for i in 0..n {
        kinds.push(NodeKind::z(0));
        kinds.push(NodeKind::boundary(format!("v{i}")));
        wires.push((2 * i, 2 * i + 1));
    }
    for i in 0..n {
        for j in i + 1..n {
            kinds.push(NodeKind::hadamard());
            let h = kinds.len() - 1;
            wires.push((2 * i, h));
            wires.push((h, 2 * j));
        }
    }
    Diagram::from_parts(kinds, wires).expect("complete graph is valid")
}

/// Two Pauli spiders in front of a pair of opposed CNOTs, for pushing Paulis
/// through with the `pi` rule.
pub fn pauli_pushing_gates() -> GateList {
    GateList::new(
        2,
        vec![
            Gate::X(0, 180),
            Gate::Z(1, 180),
            Gate::Cnot { control: 0, target: 1 },
            Gate::Cnot { control: 1, target: 0 },
        ],
    )
}

pub fn pauli_pushing() -> Diagram {
    from_gates(&pauli_pushing_gates()).expect("fixed circuit is valid")
}

const LEMMA3: &str = include_str!("../rules/lemma_l/lemma3.json");
const STEP: &str = include_str!("../rules/lemma_l/step.json");

/// Token script for the inductive step of the K_n lemma at `n = 4`: the
/// `lemma3` token replaces a Hadamard triangle by a Z(90) star (the `n = 3`
/// case), then the `step` token folds the remaining vertex into the star.
/// Returns the rule set and the token list for [`kn_hadamard`]`(4)`.
pub fn lemma_l_script() -> (RuleSet, Vec<String>) {
    let mut rs = RuleSet::default();
    for text in [LEMMA3, STEP] {
        rs.push_rule_text(text).expect("script rules are valid");
    }
    for name in ["lemma3", "step"] {
        rs.set_token(name, name).expect("script rules exist");
    }
    (rs, vec!["lemma3".to_string(), "step".to_string()])
}

//! Dense tensor semantics for small diagrams.
//!
//! Every node becomes a factor over the wires incident to it, each boundary
//! opens one index, and wires are summed out one at a time. The result is a
//! vector over all boundaries ordered by name (boundary `k` in that order is
//! bit `n - 1 - k` of the flat index, i.e. the first name is the most
//! significant bit). Global scalars are never tracked; compare results with
//! [`equal_up_to_scalar`].

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::diagram::{Diagram, NodeKind};
use crate::phase::{Color, PhaseDeg};

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("diagram too large for dense evaluation: {what} = {got} exceeds {limit}")]
    TooLarge { what: &'static str, got: usize, limit: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TensorLimits {
    pub max_boundaries: usize,
    pub max_wires: usize,
}

impl Default for TensorLimits {
    fn default() -> Self {
        TensorLimits { max_boundaries: 12, max_wires: 24 }
    }
}

impl TensorLimits {
    pub fn unlimited_wires(max_boundaries: usize) -> Self {
        TensorLimits { max_boundaries, max_wires: usize::MAX }
    }
}

/// A `2^n` vector over the diagram's boundaries, sorted by name.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    pub boundaries: Vec<String>,
    pub entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn from_entries(boundaries: Vec<String>, entries: Vec<C64>) -> Self {
        assert_eq!(entries.len(), 1usize << boundaries.len());
        ComplexMatrix { boundaries, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Reshape as rows indexed by the first `row_bits` boundaries.
    pub fn rows(&self, row_bits: usize) -> Vec<Vec<C64>> {
        let cols = 1usize << (self.boundaries.len() - row_bits);
        self.entries.chunks(cols).map(|c| c.to_vec()).collect()
    }

    /// Rows of `re+imi` entries, scaled so the largest entry has modulus 1 and
    /// phase 0 on its first occurrence.
    pub fn render(&self, row_bits: usize) -> String {
        let scale = self
            .entries
            .iter()
            .copied()
            .find(|z| (z.norm() - self.max_abs()).abs() <= 1e-12 * self.max_abs().max(1.0))
            .filter(|z| z.norm() > 0.0)
            .unwrap_or(C64::new(1.0, 0.0));
        let mut out = String::new();
        for row in self.rows(row_bits) {
            let cells: Vec<String> = row.iter().map(|z| format_entry(*z / scale)).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(self.boundaries.len() / 2))
    }
}

fn clean(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn format_entry(z: C64) -> String {
    let (re, im) = (clean(z.re), clean(z.im));
    if im == 0.0 {
        format!("{re}")
    } else if im < 0.0 {
        format!("{re}{im}i")
    } else {
        format!("{re}+{im}i")
    }
}

fn unit(phase: PhaseDeg) -> C64 {
    match phase.degrees() {
        0 => C64::new(1.0, 0.0),
        90 => C64::new(0.0, 1.0),
        180 => C64::new(-1.0, 0.0),
        270 => C64::new(0.0, -1.0),
        _ => C64::from_polar(1.0, phase.radians()),
    }
}

/// Tensor entry of a generator for a leg assignment (bit `i` = leg `i`).
fn generator_entry(kind: &NodeKind, legs: usize, bits: u64) -> C64 {
    let all_ones = if legs == 0 { true } else { bits == (1u64 << legs) - 1 };
    let all_zeros = bits == 0;
    match kind {
        NodeKind::Spider { color: Color::Z, phase } => {
            let mut v = C64::new(0.0, 0.0);
            if all_zeros {
                v += 1.0;
            }
            if all_ones {
                v += unit(*phase);
            }
            v
        }
        NodeKind::Spider { color: Color::X, phase } => {
            // Z spider with a Hadamard [[1,1],[1,-1]] on every leg
            let parity = bits.count_ones() % 2;
            let sign = if parity == 0 { 1.0 } else { -1.0 };
            C64::new(1.0, 0.0) + unit(*phase) * sign
        }
        NodeKind::HBox { phase } => {
            if all_ones {
                unit(*phase)
            } else {
                C64::new(1.0, 0.0)
            }
        }
        NodeKind::Boundary { .. } => {
            // δ between the open index (leg 0) and the wire (leg 1)
            let a = bits & 1;
            let b = (bits >> 1) & 1;
            if a == b {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Factor {
    /// Sorted, distinct variables; variable `vars[i]` is bit `i` of the index.
    vars: Vec<usize>,
    data: Vec<C64>,
}

impl Factor {
    fn product(&self, other: &Factor) -> Factor {
        let vars: Vec<usize> = self.vars.iter().chain(&other.vars).copied().collect::<BTreeSet<_>>().into_iter().collect();
        let pos_a: Vec<usize> = self.vars.iter().map(|v| vars.binary_search(v).unwrap()).collect();
        let pos_b: Vec<usize> = other.vars.iter().map(|v| vars.binary_search(v).unwrap()).collect();
        let size = 1usize << vars.len();
        let mut data = Vec::with_capacity(size);
        for idx in 0..size {
            let ia = pos_a.iter().enumerate().fold(0usize, |acc, (i, &p)| acc | (((idx >> p) & 1) << i));
            let ib = pos_b.iter().enumerate().fold(0usize, |acc, (i, &p)| acc | (((idx >> p) & 1) << i));
            data.push(self.data[ia] * other.data[ib]);
        }
        Factor { vars, data }
    }

    fn sum_out(&self, var: usize) -> Factor {
        let p = self.vars.binary_search(&var).expect("variable present");
        let vars: Vec<usize> = self.vars.iter().copied().filter(|&v| v != var).collect();
        let size = 1usize << vars.len();
        let mut data = vec![C64::new(0.0, 0.0); size];
        for (idx, slot) in data.iter_mut().enumerate() {
            let low = idx & ((1 << p) - 1);
            let high = (idx >> p) << (p + 1);
            *slot = self.data[high | low] + self.data[high | low | (1 << p)];
        }
        Factor { vars, data }
    }
}

pub fn tensor(d: &Diagram) -> Result<ComplexMatrix, TensorError> {
    tensor_with_limits(d, TensorLimits::default())
}

pub fn tensor_with_limits(d: &Diagram, limits: TensorLimits) -> Result<ComplexMatrix, TensorError> {
    let order = d.boundaries_by_name();
    if order.len() > limits.max_boundaries {
        return Err(TensorError::TooLarge { what: "boundaries", got: order.len(), limit: limits.max_boundaries });
    }
    if d.wire_count() > limits.max_wires {
        return Err(TensorError::TooLarge { what: "wires", got: d.wire_count(), limit: limits.max_wires });
    }
    let n_open = order.len();
    let wire_var = |w: usize| n_open + w;
    let mut open_of = vec![usize::MAX; d.node_count()];
    for (k, &b) in order.iter().enumerate() {
        open_of[b] = k;
    }

    let incidence = d.incidence();
    let mut factors: Vec<Factor> = Vec::with_capacity(d.node_count());
    for (i, node) in d.nodes().iter().enumerate() {
        let legs: Vec<usize> = if node.kind.is_boundary() {
            vec![open_of[i], wire_var(incidence[i][0])]
        } else {
            incidence[i].iter().map(|&w| wire_var(w)).collect()
        };
        let vars: Vec<usize> = legs.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        if vars.len() > 26 {
            return Err(TensorError::TooLarge { what: "node arity", got: vars.len(), limit: 26 });
        }
        let leg_pos: Vec<usize> = legs.iter().map(|v| vars.binary_search(v).unwrap()).collect();
        let arity = if node.kind.is_boundary() { 2 } else { legs.len() };
        let data = (0..1usize << vars.len())
            .map(|idx| {
                let bits = leg_pos.iter().enumerate().fold(0u64, |acc, (l, &p)| acc | ((((idx >> p) & 1) as u64) << l));
                generator_entry(&node.kind, arity, bits)
            })
            .collect();
        factors.push(Factor { vars, data });
    }

    // eliminate wires, cheapest first
    let mut remaining: BTreeSet<usize> = (0..d.wire_count()).map(wire_var).collect();
    while !remaining.is_empty() {
        let (var, _) = remaining
            .iter()
            .map(|&v| {
                let vars: BTreeSet<usize> =
                    factors.iter().filter(|f| f.vars.contains(&v)).flat_map(|f| f.vars.iter().copied()).collect();
                (v, vars.len())
            })
            .min_by_key(|&(v, size)| (size, v))
            .expect("non-empty");
        remaining.remove(&var);
        let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        let merged = touching
            .into_iter()
            .reduce(|a, b| a.product(&b))
            .expect("every wire touches a factor");
        factors.push(merged.sum_out(var));
    }

    let result = factors.into_iter().fold(Factor { vars: vec![], data: vec![C64::new(1.0, 0.0)] }, |a, b| a.product(&b));
    // result.vars == 0..n_open, bit i is boundary i; flip to first-name-major order
    let mut entries = vec![C64::new(0.0, 0.0); 1 << n_open];
    for (idx, v) in result.data.iter().enumerate() {
        let mut flat = 0usize;
        for k in 0..n_open {
            if (idx >> k) & 1 == 1 {
                flat |= 1 << (n_open - 1 - k);
            }
        }
        entries[flat] = *v;
    }
    let boundaries = order
        .iter()
        .map(|&b| match &d.kind(b) {
            NodeKind::Boundary { name } => name.clone(),
            _ => unreachable!(),
        })
        .collect();
    Ok(ComplexMatrix { boundaries, entries })
}

/// True iff both are zero, or `m1 ≈ c·m2` for some non-zero `c`, with the
/// error measured in max-norm relative to `‖m1‖_max`. `c` is taken from the
/// largest-modulus entry of `m2`.
pub fn equal_up_to_scalar(m1: &ComplexMatrix, m2: &ComplexMatrix, tol: f64) -> Result<bool, TensorError> {
    if m1.len() != m2.len() {
        return Err(TensorError::DimensionMismatch(m1.len(), m2.len()));
    }
    let (n1, n2) = (m1.max_abs(), m2.max_abs());
    let eps = f64::MIN_POSITIVE.sqrt();
    match (n1 <= eps, n2 <= eps) {
        (true, true) => return Ok(true),
        (true, false) | (false, true) => return Ok(false),
        _ => {}
    }
    let k = m2
        .entries
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(k, _)| k)
        .unwrap();
    let c = m1.entries[k] / m2.entries[k];
    if c.norm() <= eps {
        return Ok(false);
    }
    let err = m1
        .entries
        .iter()
        .zip(&m2.entries)
        .map(|(a, b)| (a - c * b).norm())
        .fold(0.0, f64::max);
    Ok(err <= tol * n1)
}

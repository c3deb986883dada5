//! Canonical labelling of diagrams.
//!
//! Colour refinement over node labels and wire multiplicities, followed by an
//! exhaustive individualisation search. Every leaf of the search tree yields
//! a certificate; the lexicographically smallest one is the key. The result is
//! exact: two diagrams get the same key iff they are isomorphic as attributed
//! multigraphs (boundary names are labels, node ids are ignored).

use std::fmt;

use thiserror::Error;

use crate::diagram::Diagram;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = self.to_hex();
        if hex.len() > 32 {
            write!(f, "CanonicalKey({}..)", &hex[..32])
        } else {
            write!(f, "CanonicalKey({hex})")
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonError {
    #[error("isomorphism oracle limited to {limit} nodes, got {got}")]
    TooLarge { limit: usize, got: usize },
}

pub const ISO_ORACLE_LIMIT: usize = 8;

struct Graph {
    /// (neighbour, multiplicity), neighbours distinct and != self.
    adj: Vec<Vec<(usize, u32)>>,
    initial: Vec<u32>,
    labels: Vec<Vec<u8>>,
}

impl Graph {
    fn new(d: &Diagram) -> Self {
        let n = d.node_count();
        let mut loops = vec![0u32; n];
        let mut adj: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
        for &(a, b) in d.wires() {
            if a == b {
                loops[a] += 1;
                continue;
            }
            adj[a].push((b, 1));
            adj[b].push((a, 1));
        }
        for list in &mut adj {
            list.sort_unstable();
            let mut merged: Vec<(usize, u32)> = Vec::with_capacity(list.len());
            for &(nb, m) in list.iter() {
                match merged.last_mut() {
                    Some((p, pm)) if *p == nb => *pm += m,
                    _ => merged.push((nb, m)),
                }
            }
            *list = merged;
        }
        let labels: Vec<Vec<u8>> = d
            .nodes()
            .iter()
            .zip(&loops)
            .map(|(node, &l)| {
                let mut bytes = Vec::new();
                node.kind.label_bytes(&mut bytes);
                bytes.extend_from_slice(&l.to_be_bytes());
                bytes
            })
            .collect();
        let initial = rank(&labels);
        Graph { adj, initial, labels }
    }

    /// Equitable refinement. Colours are dense ranks of invariant signatures.
    fn refine(&self, colors: &mut Vec<u32>) {
        let mut classes = count_distinct(colors);
        loop {
            let sigs: Vec<(u32, Vec<(u32, u32)>)> = (0..colors.len())
                .map(|v| {
                    let mut s: Vec<(u32, u32)> = self.adj[v].iter().map(|&(u, m)| (colors[u], m)).collect();
                    s.sort_unstable();
                    (colors[v], s)
                })
                .collect();
            let next = rank(&sigs);
            let next_classes = count_distinct(&next);
            *colors = next;
            if next_classes == classes {
                return;
            }
            classes = next_classes;
        }
    }

    fn certificate(&self, colors: &[u32]) -> Vec<u8> {
        let n = colors.len();
        let mut order = vec![0usize; n];
        for (v, &c) in colors.iter().enumerate() {
            order[c as usize] = v;
        }
        let mut cert = Vec::with_capacity(16 * n);
        cert.extend_from_slice(&(n as u32).to_be_bytes());
        for &v in &order {
            cert.extend_from_slice(&(self.labels[v].len() as u32).to_be_bytes());
            cert.extend_from_slice(&self.labels[v]);
        }
        let mut edges: Vec<(u32, u32, u32)> = Vec::new();
        for v in 0..n {
            for &(u, m) in &self.adj[v] {
                let (a, b) = (colors[v], colors[u]);
                if a < b {
                    edges.push((a, b, m));
                }
            }
        }
        edges.sort_unstable();
        cert.extend_from_slice(&(edges.len() as u32).to_be_bytes());
        for (a, b, m) in edges {
            cert.extend_from_slice(&a.to_be_bytes());
            cert.extend_from_slice(&b.to_be_bytes());
            cert.extend_from_slice(&m.to_be_bytes());
        }
        cert
    }

    fn search(&self, mut colors: Vec<u32>, best: &mut Option<(Vec<u8>, Vec<u32>)>) {
        self.refine(&mut colors);
        let n = colors.len();
        let mut sizes = vec![0usize; n];
        for &c in &colors {
            sizes[c as usize] += 1;
        }
        let target = (0..n).filter(|&c| sizes[c] > 1).min_by_key(|&c| (sizes[c], c));
        let Some(target) = target else {
            let cert = self.certificate(&colors);
            if best.as_ref().is_none_or(|(b, _)| cert < *b) {
                *best = Some((cert, colors));
            }
            return;
        };
        let target = target as u32;
        for v in 0..n {
            if colors[v] != target {
                continue;
            }
            let child: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(u, &c)| 2 * c + u32::from(c == target && u != v))
                .collect();
            self.search(child, best);
        }
    }
}

fn count_distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn rank<T: Ord>(items: &[T]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&a, &b| items[a].cmp(&items[b]));
    let mut out = vec![0u32; items.len()];
    let mut r = 0u32;
    for k in 0..idx.len() {
        if k > 0 && items[idx[k]] != items[idx[k - 1]] {
            r += 1;
        }
        out[idx[k]] = r;
    }
    out
}

/// Canonical key and the canonical position of every node.
pub fn canonical_labeling(d: &Diagram) -> (CanonicalKey, Vec<usize>) {
    let g = Graph::new(d);
    let mut best = None;
    g.search(g.initial.clone(), &mut best);
    match best {
        Some((cert, colors)) => (CanonicalKey(cert), colors.into_iter().map(|c| c as usize).collect()),
        None => (CanonicalKey(g.certificate(&[])), Vec::new()),
    }
}

pub fn canonical_key(d: &Diagram) -> CanonicalKey {
    canonical_labeling(d).0
}

/// The key together with the diagram relabelled into canonical node order.
pub fn canonicalize(d: &Diagram) -> (CanonicalKey, Diagram) {
    let (key, perm) = canonical_labeling(d);
    (key, d.permuted(&perm))
}

/// Exhaustive isomorphism test over all label-preserving node bijections.
pub fn iso_oracle(d1: &Diagram, d2: &Diagram) -> Result<bool, CanonError> {
    for d in [d1, d2] {
        if d.node_count() > ISO_ORACLE_LIMIT {
            return Err(CanonError::TooLarge { limit: ISO_ORACLE_LIMIT, got: d.node_count() });
        }
    }
    if d1.node_count() != d2.node_count() || d1.wire_count() != d2.wire_count() {
        return Ok(false);
    }
    let n = d1.node_count();
    let mut target: Vec<(usize, usize)> = d2.wires().to_vec();
    target.sort_unstable();
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];

    fn rec(
        i: usize,
        d1: &Diagram,
        d2: &Diagram,
        target: &[(usize, usize)],
        perm: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        let n = perm.len();
        if i == n {
            let mut mapped: Vec<(usize, usize)> = d1
                .wires()
                .iter()
                .map(|&(a, b)| {
                    let (a, b) = (perm[a], perm[b]);
                    (a.min(b), a.max(b))
                })
                .collect();
            mapped.sort_unstable();
            return mapped == target;
        }
        for j in 0..n {
            if used[j] || d1.kind(i) != d2.kind(j) {
                continue;
            }
            used[j] = true;
            perm[i] = j;
            if rec(i + 1, d1, d2, target, perm, used) {
                return true;
            }
            used[j] = false;
        }
        false
    }

    Ok(rec(0, d1, d2, &target, &mut perm, &mut used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::NodeKind;

    #[test]
    fn relabelled_pair_has_same_key() {
        let a = Diagram::from_parts(vec![NodeKind::z(0), NodeKind::x(0)], vec![(0, 1)]).unwrap();
        let b = Diagram::from_parts(vec![NodeKind::x(0), NodeKind::z(0)], vec![(1, 0)]).unwrap();
        assert_eq!(canonical_key(&a), canonical_key(&b));
    }

    #[test]
    fn attribute_difference_changes_key() {
        let mk = |p| {
            Diagram::from_parts(
                vec![NodeKind::boundary("i"), NodeKind::z(p), NodeKind::boundary("o")],
                vec![(0, 1), (1, 2)],
            )
            .unwrap()
        };
        assert_ne!(canonical_key(&mk(90)), canonical_key(&mk(180)));
    }

    #[test]
    fn oracle_colour_mismatch() {
        let a = Diagram::from_parts(vec![NodeKind::z(0), NodeKind::boundary("b")], vec![(0, 1)]).unwrap();
        let b = Diagram::from_parts(vec![NodeKind::x(0), NodeKind::boundary("b")], vec![(0, 1)]).unwrap();
        assert!(!iso_oracle(&a, &b).unwrap());
        assert!(iso_oracle(&a, &a).unwrap());
    }

    #[test]
    fn oracle_size_limit() {
        let d = Diagram::from_parts(vec![NodeKind::z(0); 9], vec![]).unwrap();
        assert_eq!(iso_oracle(&d, &d), Err(CanonError::TooLarge { limit: 8, got: 9 }));
    }

    #[test]
    fn multiplicity_matters() {
        let one = Diagram::from_parts(vec![NodeKind::z(0), NodeKind::x(0)], vec![(0, 1)]).unwrap();
        let two = Diagram::from_parts(vec![NodeKind::z(0), NodeKind::x(0)], vec![(0, 1), (0, 1)]).unwrap();
        assert_ne!(canonical_key(&one), canonical_key(&two));
    }

    #[test]
    fn symmetric_cycle_is_stable() {
        // 6-cycle vs two triangles: refinement alone cannot split these
        let cycle = Diagram::from_parts(
            vec![NodeKind::z(0); 6],
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)],
        )
        .unwrap();
        let triangles = Diagram::from_parts(
            vec![NodeKind::z(0); 6],
            vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)],
        )
        .unwrap();
        assert_ne!(canonical_key(&cycle), canonical_key(&triangles));
        let (k, relabelled) = canonicalize(&cycle);
        assert_eq!(canonical_key(&relabelled), k);
    }
}

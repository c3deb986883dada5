//! Breadth-first state-space construction with canonical deduplication.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::{canonical_labeling, CanonicalKey};
use crate::diagram::{make_diagram, Diagram, DiagramError, DiagramFile};
use crate::graphlike::{self, GraphLikeError};
use crate::matcher::{apply, find_matches_ordered, MatchError, DEFAULT_MATCH_LIMIT};
use crate::rule::{Gating, RuleBody, RuleEntry, RuleSet};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Match(#[from] MatchError),

    #[error(transparent)]
    GraphLike(#[from] GraphLikeError),

    #[error(transparent)]
    Diagram(#[from] DiagramError),

    #[error("state space is not exhaustive (exploration hit a limit)")]
    NonExhaustive,

    #[error("malformed state-space file: {0}")]
    Format(String),

    #[error("could not start worker threads: {0}")]
    Threads(String),
}

/// How diagrams are identified when deduplicating states.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// Isomorphism preserving boundary names.
    #[default]
    Labelled,
    /// Isomorphism that may permute boundaries.
    AnonymousBoundaries,
}

/// A diagram in canonical form together with its budget counters and
/// pending tokens. All three make up the state's identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    diagram: Diagram,
    key: CanonicalKey,
    identity: Identity,
    pub budgets: BTreeMap<String, u32>,
    pub tokens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    pub diagram: CanonicalKey,
    pub budgets: BTreeMap<String, u32>,
    pub tokens: Vec<String>,
}

impl State {
    /// Normalizes and canonicalizes `d`.
    pub fn new(d: &Diagram, budgets: BTreeMap<String, u32>, tokens: Vec<String>) -> State {
        State::with_identity(d, budgets, tokens, Identity::Labelled)
    }

    /// Like [`State::new`]. Under [`Identity::AnonymousBoundaries`] the key
    /// ignores boundary names but the stored diagram keeps them.
    pub fn with_identity(
        d: &Diagram,
        budgets: BTreeMap<String, u32>,
        tokens: Vec<String>,
        identity: Identity,
    ) -> State {
        let d = d.normalize();
        let (key, perm) = match identity {
            Identity::Labelled => canonical_labeling(&d),
            Identity::AnonymousBoundaries => canonical_labeling(&d.anonymous_boundaries()),
        };
        State { diagram: d.permuted(&perm), key, identity, budgets, tokens }
    }

    pub fn identity(&self) -> Identity {
        self.identity
    }

    /// Initial state for a rule set: its budgets, no tokens.
    pub fn initial(d: &Diagram, rs: &RuleSet) -> State {
        State::new(d, rs.initial_budgets(), Vec::new())
    }

    pub fn with_tokens(mut self, tokens: Vec<String>) -> State {
        self.tokens = tokens;
        self
    }

    pub fn diagram(&self) -> &Diagram {
        &self.diagram
    }

    pub fn canonical_key(&self) -> &CanonicalKey {
        &self.key
    }

    pub fn key(&self) -> StateKey {
        StateKey { diagram: self.key.clone(), budgets: self.budgets.clone(), tokens: self.tokens.clone() }
    }

    pub fn budget(&self, name: &str) -> Option<u32> {
        self.budgets.get(name).copied()
    }

    pub fn token_head(&self) -> Option<&str> {
        self.tokens.first().map(String::as_str)
    }
}

/// Whether `entry` may fire in `s`.
pub fn enabled(entry: &RuleEntry, s: &State) -> bool {
    match &entry.gating {
        Gating::None => true,
        Gating::Budget(b) => s.budgets.get(b).copied().unwrap_or(0) > 0,
        Gating::Token(t) => s.token_head() == Some(t.as_str()),
    }
}

/// Every rewrite of `d` by one rule-set entry, ignoring gating.
pub fn entry_rewrites(entry: &RuleEntry, d: &Diagram) -> Result<Vec<Diagram>, ExploreError> {
    let order: Vec<usize> = (0..d.node_count()).collect();
    Ok(match &entry.body {
        RuleBody::Pattern(rule) => find_matches_ordered(rule, d, &order, DEFAULT_MATCH_LIMIT)?
            .iter()
            .map(|m| apply(rule, m, d))
            .collect::<Result<_, _>>()?,
        RuleBody::LocalComplement => graphlike::lcomp_sites(d)
            .into_iter()
            .map(|s| graphlike::local_complement(d, d.node(s).id))
            .collect::<Result<_, _>>()?,
        RuleBody::Pivot => graphlike::pivot_sites(d)
            .into_iter()
            .map(|(a, b)| graphlike::pivot(d, d.node(a).id, d.node(b).id))
            .collect::<Result<_, _>>()?,
        RuleBody::ColorToggle => graphlike::toggle_sites(d)
            .into_iter()
            .map(|s| graphlike::h_toggle(d, d.node(s).id))
            .collect::<Result<_, _>>()?,
    })
}

/// Successor states, sorted by rule name then target identity, with
/// repeated `(rule, target)` pairs collapsed.
pub fn successors(rs: &RuleSet, s: &State) -> Result<Vec<(String, State)>, ExploreError> {
    let mut out: BTreeMap<(String, StateKey), State> = BTreeMap::new();
    for entry in rs.entries() {
        if !enabled(entry, s) {
            continue;
        }
        let mut budgets = s.budgets.clone();
        let mut tokens = s.tokens.clone();
        match &entry.gating {
            Gating::None => {}
            Gating::Budget(b) => {
                *budgets.get_mut(b).expect("enabled") -= 1;
            }
            Gating::Token(_) => {
                tokens.remove(0);
            }
        }
        for d in entry_rewrites(entry, &s.diagram)? {
            let next = State::with_identity(&d, budgets.clone(), tokens.clone(), s.identity);
            out.entry((entry.name.clone(), next.key())).or_insert(next);
        }
    }
    Ok(out.into_iter().map(|((name, _), st)| (name, st)).collect())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 1_000_000, max_depth: usize::MAX }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub rule: String,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    pub states: Vec<State>,
    pub transitions: Vec<Transition>,
    /// Outgoing transition indices per state, in successor order.
    out: Vec<Vec<usize>>,
    pub exhaustive: bool,
}

impl StateSpace {
    /// Assembles a space from parts; transitions must stay inside `states`.
    pub fn from_parts(states: Vec<State>, transitions: Vec<Transition>, exhaustive: bool) -> Self {
        let mut out = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            out[t.from].push(i);
        }
        StateSpace { states, transitions, out, exhaustive }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, id: usize) -> &State {
        &self.states[id]
    }

    /// Outgoing `(rule, target)` pairs of a state.
    pub fn outgoing(&self, id: usize) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.out[id].iter().map(|&t| (self.transitions[t].rule.as_str(), self.transitions[t].to))
    }

    pub fn is_final(&self, id: usize) -> bool {
        self.out[id].is_empty()
    }

    /// Ids of the out-degree-0 states.
    pub fn final_ids(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_final(i)).collect()
    }

    /// The final states; only meaningful for an exhaustive space.
    pub fn final_states(&self) -> Result<Vec<&State>, ExploreError> {
        if !self.exhaustive {
            return Err(ExploreError::NonExhaustive);
        }
        Ok(self.final_ids().into_iter().map(|i| &self.states[i]).collect())
    }

    /// A minimum-length path from state 0 to the lowest-numbered nearest
    /// state satisfying `pred`.
    pub fn shortest_path(&self, pred: impl Fn(usize, &State) -> bool) -> Option<Vec<(String, usize)>> {
        if self.is_empty() {
            return None;
        }
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.len()];
        let mut dist = vec![usize::MAX; self.len()];
        dist[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &t in &self.out[v] {
                let w = self.transitions[t].to;
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = Some((v, t));
                    queue.push_back(w);
                }
            }
        }
        let target = (0..self.len())
            .filter(|&i| dist[i] != usize::MAX && pred(i, &self.states[i]))
            .min_by_key(|&i| (dist[i], i))?;
        let mut path = Vec::new();
        let mut cur = target;
        while let Some((p, t)) = parent[cur] {
            path.push((self.transitions[t].rule.clone(), cur));
            cur = p;
        }
        path.reverse();
        Some(path)
    }

    /// Graphviz text: one node per state, finals with a double border.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph {\n");
        for (i, st) in self.states.iter().enumerate() {
            let label = format!(
                "s{i}\\n{} spiders, {} hboxes",
                st.diagram.spider_count(),
                st.diagram.hbox_count()
            );
            if self.is_final(i) && self.exhaustive {
                let _ = writeln!(s, "  s{i} [shape=ellipse, peripheries=2, label=\"{label}\"];");
            } else {
                let _ = writeln!(s, "  s{i} [shape=ellipse, label=\"{label}\"];");
            }
        }
        for t in &self.transitions {
            let _ = writeln!(s, "  s{} -> s{} [label=\"{}\"];", t.from, t.to, t.rule);
        }
        s.push_str("}\n");
        s
    }

    pub fn to_file(&self) -> SpaceFile {
        SpaceFile {
            exhaustive: self.exhaustive,
            identity: self.states.first().map(State::identity).unwrap_or_default(),
            states: self
                .states
                .iter()
                .enumerate()
                .map(|(id, st)| StateEntry {
                    id,
                    budgets: st.budgets.clone(),
                    tokens: st.tokens.clone(),
                    diagram: st.diagram.to_file(),
                })
                .collect(),
            transitions: self.transitions.iter().map(|t| (t.from, t.rule.clone(), t.to)).collect(),
            finals: if self.exhaustive { self.final_ids() } else { Vec::new() },
        }
    }

    /// Structured export: every state with its diagram, the transitions, and
    /// the final states.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("spaces always serialize")
    }

    pub fn from_json(text: &str) -> Result<StateSpace, ExploreError> {
        let file: SpaceFile = serde_json::from_str(text).map_err(|e| ExploreError::Format(e.to_string()))?;
        let mut states = Vec::with_capacity(file.states.len());
        for (i, e) in file.states.iter().enumerate() {
            if e.id != i {
                return Err(ExploreError::Format(format!("state {} listed at position {i}", e.id)));
            }
            let d = make_diagram(&e.diagram)?;
            states.push(State::with_identity(&d, e.budgets.clone(), e.tokens.clone(), file.identity));
        }
        let mut transitions = Vec::with_capacity(file.transitions.len());
        for (from, rule, to) in file.transitions {
            if from >= states.len() || to >= states.len() {
                return Err(ExploreError::Format(format!("transition {from} -> {to} leaves the space")));
            }
            transitions.push(Transition { from, rule, to });
        }
        let sp = StateSpace::from_parts(states, transitions, file.exhaustive);
        if sp.exhaustive && sp.final_ids() != file.finals {
            return Err(ExploreError::Format("final-state list disagrees with the transitions".into()));
        }
        Ok(sp)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateEntry {
    pub id: usize,
    pub budgets: BTreeMap<String, u32>,
    pub tokens: Vec<String>,
    pub diagram: DiagramFile,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub exhaustive: bool,
    #[serde(default)]
    pub identity: Identity,
    pub states: Vec<StateEntry>,
    pub transitions: Vec<(usize, String, usize)>,
    pub finals: Vec<usize>,
}

/// Explores from `init` breadth first. States are numbered in BFS order
/// with each state's successors in sorted order, so the result does not
/// depend on `threads`.
pub fn explore(rs: &RuleSet, init: State, limits: Limits, threads: usize) -> Result<StateSpace, ExploreError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| ExploreError::Threads(e.to_string()))?;
    pool.install(|| explore_in_pool(rs, init, limits))
}

fn explore_in_pool(rs: &RuleSet, init: State, limits: Limits) -> Result<StateSpace, ExploreError> {
    let mut index: HashMap<StateKey, usize> = HashMap::new();
    index.insert(init.key(), 0);
    let mut states = vec![init];
    let mut transitions = Vec::new();
    let mut exhaustive = true;
    let mut frontier = vec![0usize];
    let mut depth = 0usize;
    while !frontier.is_empty() {
        let expanded: Vec<Result<Vec<(String, State)>, ExploreError>> =
            frontier.par_iter().map(|&id| successors(rs, &states[id])).collect();
        let mut next = Vec::new();
        for (&from, succ) in frontier.iter().zip(expanded) {
            let succ = succ?;
            if depth >= limits.max_depth {
                if !succ.is_empty() {
                    exhaustive = false;
                }
                continue;
            }
            for (rule, st) in succ {
                let key = st.key();
                let to = match index.get(&key) {
                    Some(&to) => to,
                    None => {
                        if states.len() >= limits.max_states {
                            exhaustive = false;
                            continue;
                        }
                        let to = states.len();
                        index.insert(key, to);
                        states.push(st);
                        next.push(to);
                        to
                    }
                };
                transitions.push(Transition { from, rule, to });
            }
        }
        frontier = next;
        depth += 1;
    }
    Ok(StateSpace::from_parts(states, transitions, exhaustive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::NodeKind;
    use crate::rule::HVariant;

    fn id_redex() -> Diagram {
        Diagram::from_parts(
            vec![NodeKind::boundary("a"), NodeKind::z(0), NodeKind::boundary("b")],
            vec![(0, 1), (1, 2)],
        )
        .unwrap()
    }

    #[test]
    fn single_redex() {
        let rs = RuleSet::select(&["id"], HVariant::AllH).unwrap();
        let s = State::initial(&id_redex(), &rs);
        let succ = successors(&rs, &s).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].1.diagram().spider_count(), 0);

        let sp = explore(&rs, s, Limits::default(), 1).unwrap();
        assert_eq!(sp.len(), 2);
        assert_eq!(sp.final_ids(), vec![1]);
        assert_eq!(sp.shortest_path(|i, _| sp.is_final(i)), Some(vec![("id".to_string(), 1)]));
        assert_eq!(sp.shortest_path(|_, _| false), None);
        let dot = sp.to_dot();
        assert!(dot.contains("s0 -> s1 [label=\"id\"]"));
        assert!(dot.contains("peripheries=2"));
        assert_eq!(StateSpace::from_json(&sp.to_json()).unwrap(), sp);
    }

    #[test]
    fn exhausted_budget_blocks() {
        let rs = RuleSet::select(&["idgen_g"], HVariant::AllH).unwrap();
        let s = State::initial(&id_redex(), &rs);
        assert_eq!(s.budget("idgen_g"), Some(0));
        assert!(successors(&rs, &s).unwrap().is_empty());
    }

    #[test]
    fn tokens_order_rules() {
        let d = Diagram::from_parts(
            vec![NodeKind::boundary("a"), NodeKind::z(90), NodeKind::z(270), NodeKind::boundary("b")],
            vec![(0, 1), (1, 2), (2, 3)],
        )
        .unwrap();
        let mut rs = RuleSet::select(&["f", "id"], HVariant::AllH).unwrap();
        rs.set_token("f", "t_f").unwrap();
        rs.set_token("id", "t_id").unwrap();
        let s = State::initial(&d, &rs).with_tokens(vec!["t_id".into(), "t_f".into()]);
        assert!(successors(&rs, &s).unwrap().is_empty());
        let s = State::initial(&d, &rs).with_tokens(vec!["t_f".into(), "t_id".into()]);
        let succ = successors(&rs, &s).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].0, "f");
        let after = successors(&rs, &succ[0].1).unwrap();
        assert_eq!(after.len(), 1);
        assert_eq!(after[0].0, "id");
    }

    #[test]
    fn depth_limit_marks_truncation() {
        let rs = RuleSet::select(&["id"], HVariant::AllH).unwrap();
        let s = State::initial(&id_redex(), &rs);
        let sp = explore(&rs, s, Limits { max_states: 10, max_depth: 0 }, 1).unwrap();
        assert_eq!(sp.len(), 1);
        assert!(!sp.exhaustive);
        assert!(sp.final_states().is_err());
    }
}

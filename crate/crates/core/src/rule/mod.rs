//! Quantified rewrite rules.
//!
//! A rule has a left-hand side of node patterns, a guard, and a right-hand
//! side of node templates. Wires are named by variables. Quantified parts use
//! labels: an endpoint `{group: "M", wire: "L"}` stands for zero or more
//! wires `L[0..M]`, and a pattern or template with `replicate: "M"` stands for
//! zero or more copies of a node. All occurrences of one label share a single
//! cardinality, bound while matching the left-hand side. An endpoint inside a
//! replicated template that carries a different group label is indexed by
//! both labels, so `M` copies each with an `N`-group yields `M*N` wires.
//!
//! Every wire variable occurs exactly twice in the rule, with the same set of
//! labels at both occurrences:
//!
//! * twice on the left: an internal wire, consumed by the rewrite;
//! * once on each side: a wire to the context, reattached on the right;
//! * twice on the right: a fresh wire.
//!
//! `connect` pairs join two variables directly (a bare wire on the right).
//! A pattern with a `context` keeps its unlisted wires and its attributes and
//! must be reproduced by exactly one `context` template.

mod builtin;
pub mod expr;
mod file;
mod set;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use builtin::{builtin_pattern_rules, builtin_rule, BUILTIN_NAMES};
pub use expr::{eval_guard, Binding, CmpOp, Constraint, Expr, ExprError, Guard};
pub use file::{parse_rule, EndpointSpec, GatingSpec, NodeSpec, RuleFile, Scalar};
pub use set::{builtin_rules, is_builtin, HVariant, RuleBody, RuleEntry, RuleSet, RuleSetError, DEFAULT_RULES};

pub type Label = String;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule {rule}: wire variable {wire} occurs {count} times; link names must occur exactly twice")]
    LinkCondition { rule: String, wire: String, count: usize },

    #[error("rule {rule}: wire variable {wire} is used with different quantifier labels at its two occurrences")]
    LabelMismatch { rule: String, wire: String },

    #[error("rule {rule}: label {label:?} is used on the right but never bound on the left")]
    UnboundLabel { rule: String, label: String },

    #[error("rule {rule}: variable {var} is not bound")]
    UnboundVariable { rule: String, var: String },

    #[error("rule {rule}: variable {var} is used both as a colour and as a phase")]
    TypeConflict { rule: String, var: String },

    #[error("rule {rule}: unknown node kind {kind:?}")]
    UnknownKind { rule: String, kind: String },

    #[error("rule {rule}: {msg}")]
    Invalid { rule: String, msg: String },

    #[error("rule {rule}: guard: {source}")]
    Guard { rule: String, source: ExprError },

    #[error("malformed rule file: {0}")]
    Format(String),
}

/// Left-hand side attribute: a literal or a variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Lit(i64),
    Var(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endpoint {
    pub wire: String,
    pub group: Option<Label>,
}

impl Endpoint {
    pub fn fixed(wire: &str) -> Self {
        Endpoint { wire: wire.to_string(), group: None }
    }

    pub fn group(label: &str, wire: &str) -> Self {
        Endpoint { wire: wire.to_string(), group: Some(label.to_string()) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatternKind {
    Spider { color: Term, phase: Term },
    HBox { phase: Term },
    /// Any spider or H-box.
    Any,
    /// Any node, boundaries included.
    AnyNode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodePattern {
    pub kind: PatternKind,
    pub replicate: Option<Label>,
    pub endpoints: Vec<Endpoint>,
    pub context: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TemplateKind {
    Spider { color: Expr, phase: Expr },
    HBox { phase: Expr },
    /// Rebuilds the node matched by the pattern with this context name.
    Context(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeTemplate {
    pub kind: TemplateKind,
    pub replicate: Option<Label>,
    pub endpoints: Vec<Endpoint>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gating {
    #[default]
    None,
    /// Fires only while the named counter is positive; decrements it.
    Budget(String),
    /// Fires only when the named token heads the token list; pops it.
    Token(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub lhs: Vec<NodePattern>,
    pub guard: Guard,
    pub rhs: Vec<NodeTemplate>,
    pub connect: Vec<(String, String)>,
    pub min_card: BTreeMap<Label, usize>,
    pub gating: Gating,
}

/// Where a wire variable occurs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Occurrence {
    Lhs { node: usize, endpoint: usize },
    Rhs { node: usize, endpoint: usize },
    Connect,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub(crate) enum WireRole {
    Internal,
    Context,
    Fresh,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum VarType {
    Color,
    Phase,
}

impl Rule {
    /// Builds and validates a rule.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        lhs: Vec<NodePattern>,
        guard: Guard,
        rhs: Vec<NodeTemplate>,
        connect: Vec<(String, String)>,
        min_card: BTreeMap<Label, usize>,
        gating: Gating,
    ) -> Result<Rule, RuleError> {
        let rule = Rule { name: name.into(), lhs, guard, rhs, connect, min_card, gating };
        rule.validate()?;
        Ok(rule)
    }

    pub fn with_gating(mut self, gating: Gating) -> Rule {
        self.gating = gating;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Rule {
        self.name = name.into();
        self
    }

    fn invalid(&self, msg: impl Into<String>) -> RuleError {
        RuleError::Invalid { rule: self.name.clone(), msg: msg.into() }
    }

    /// Labels attached to an endpoint occurrence.
    pub(crate) fn labels_of(replicate: &Option<Label>, ep: &Endpoint) -> BTreeSet<Label> {
        replicate.iter().chain(ep.group.iter()).cloned().collect()
    }

    pub(crate) fn occurrences(&self) -> BTreeMap<String, Vec<Occurrence>> {
        let mut occ: BTreeMap<String, Vec<Occurrence>> = BTreeMap::new();
        for (n, p) in self.lhs.iter().enumerate() {
            for (e, ep) in p.endpoints.iter().enumerate() {
                occ.entry(ep.wire.clone()).or_default().push(Occurrence::Lhs { node: n, endpoint: e });
            }
        }
        for (n, t) in self.rhs.iter().enumerate() {
            for (e, ep) in t.endpoints.iter().enumerate() {
                occ.entry(ep.wire.clone()).or_default().push(Occurrence::Rhs { node: n, endpoint: e });
            }
        }
        for (a, b) in &self.connect {
            occ.entry(a.clone()).or_default().push(Occurrence::Connect);
            occ.entry(b.clone()).or_default().push(Occurrence::Connect);
        }
        occ
    }

    pub(crate) fn wire_roles(&self) -> BTreeMap<String, WireRole> {
        self.occurrences()
            .into_iter()
            .map(|(w, occ)| {
                let in_lhs = occ.iter().filter(|o| matches!(o, Occurrence::Lhs { .. })).count();
                let role = match in_lhs {
                    2 => WireRole::Internal,
                    1 => WireRole::Context,
                    _ => WireRole::Fresh,
                };
                (w, role)
            })
            .collect()
    }

    /// Labels bound by the left-hand side.
    pub fn lhs_labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        for p in &self.lhs {
            out.extend(p.replicate.iter().cloned());
            out.extend(p.endpoints.iter().filter_map(|e| e.group.clone()));
        }
        out
    }

    /// Attribute variables bound by the left-hand side.
    pub fn lhs_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for p in &self.lhs {
            match &p.kind {
                PatternKind::Spider { color, phase } => {
                    for t in [color, phase] {
                        if let Term::Var(v) = t {
                            out.insert(v.clone());
                        }
                    }
                }
                PatternKind::HBox { phase: Term::Var(v) } => {
                    out.insert(v.clone());
                }
                _ => {}
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        let name = &self.name;
        if self.lhs.is_empty() {
            return Err(self.invalid("left-hand side is empty"));
        }

        // link condition and label agreement
        for (wire, occ) in self.occurrences() {
            if occ.len() != 2 {
                return Err(RuleError::LinkCondition { rule: name.clone(), wire, count: occ.len() });
            }
            let labels: Vec<BTreeSet<Label>> = occ
                .iter()
                .map(|o| match o {
                    Occurrence::Lhs { node, endpoint } => {
                        Self::labels_of(&self.lhs[*node].replicate, &self.lhs[*node].endpoints[*endpoint])
                    }
                    Occurrence::Rhs { node, endpoint } => {
                        Self::labels_of(&self.rhs[*node].replicate, &self.rhs[*node].endpoints[*endpoint])
                    }
                    Occurrence::Connect => BTreeSet::new(),
                })
                .collect();
            if labels[0] != labels[1] {
                return Err(RuleError::LabelMismatch { rule: name.clone(), wire });
            }
            if let [Occurrence::Lhs { node: a, .. }, Occurrence::Lhs { node: b, .. }] = occ.as_slice() {
                if a == b && self.lhs[*a].replicate.is_none() && labels[0].is_empty() {
                    return Err(self.invalid(format!("wire {wire} would be a self-loop on the left")));
                }
            }
        }

        // quantifier structure on the left
        let mut anchored: BTreeSet<Label> = BTreeSet::new();
        for p in &self.lhs {
            if let Some(r) = &p.replicate {
                if p.endpoints.iter().any(|e| e.group.is_some()) {
                    return Err(self.invalid("nested quantifiers are not supported on the left-hand side"));
                }
                if p.context.is_some() {
                    return Err(self.invalid("a replicated pattern cannot carry a context"));
                }
                match &p.kind {
                    PatternKind::Spider { color, phase } => {
                        if matches!(color, Term::Var(_)) || matches!(phase, Term::Var(_)) {
                            return Err(self.invalid(format!("replicated pattern under {r:?} must use literal attributes")));
                        }
                    }
                    PatternKind::HBox { phase } => {
                        if matches!(phase, Term::Var(_)) {
                            return Err(self.invalid(format!("replicated pattern under {r:?} must use literal attributes")));
                        }
                    }
                    PatternKind::Any | PatternKind::AnyNode => {
                        return Err(self.invalid("a replicated pattern needs a concrete kind"));
                    }
                }
            } else {
                anchored.extend(p.endpoints.iter().filter_map(|e| e.group.clone()));
            }
            if matches!(p.kind, PatternKind::Any | PatternKind::AnyNode) && p.context.is_none() {
                return Err(self.invalid("patterns of kind any/node require a context"));
            }
        }
        if self.lhs.iter().all(|p| p.replicate.is_some()) {
            return Err(self.invalid("left-hand side needs at least one unquantified pattern"));
        }
        let lhs_labels = self.lhs_labels();
        for l in &lhs_labels {
            if !anchored.contains(l) {
                return Err(self.invalid(format!("label {l:?} has no group endpoint on an unquantified pattern")));
            }
        }
        // replicated patterns must hang off a group endpoint, or off an
        // earlier replicated pattern of the same label
        let roles = self.wire_roles();
        let occ = self.occurrences();
        for (i, p) in self.lhs.iter().enumerate().filter(|(_, p)| p.replicate.is_some()) {
            let reachable = p.endpoints.iter().any(|e| {
                roles.get(&e.wire) == Some(&WireRole::Internal)
                    && occ[&e.wire].iter().any(|o| match o {
                        Occurrence::Lhs { node, endpoint } => {
                            let q = &self.lhs[*node];
                            match &q.replicate {
                                None => q.endpoints[*endpoint].group.is_some(),
                                Some(l) => *node < i && Some(l) == p.replicate.as_ref(),
                            }
                        }
                        _ => false,
                    })
            });
            if !reachable {
                return Err(self.invalid("replicated pattern is not connected to a group endpoint"));
            }
        }
        for l in self.min_card.keys() {
            if !lhs_labels.contains(l) {
                return Err(RuleError::UnboundLabel { rule: name.clone(), label: l.clone() });
            }
        }

        // right-hand side labels
        for t in &self.rhs {
            for l in t.replicate.iter().chain(t.endpoints.iter().filter_map(|e| e.group.as_ref())) {
                if !lhs_labels.contains(l) {
                    return Err(RuleError::UnboundLabel { rule: name.clone(), label: l.clone() });
                }
            }
            if let (Some(r), true) = (&t.replicate, t.endpoints.iter().any(|e| e.group.as_ref() == t.replicate.as_ref())) {
                return Err(self.invalid(format!("template replicated by {r:?} also has a group with the same label")));
            }
        }
        for p in &self.lhs {
            if let Some(r) = &p.replicate {
                if p.endpoints.iter().any(|e| e.group.as_ref() == Some(r)) {
                    return Err(self.invalid(format!("pattern replicated by {r:?} also has a group with the same label")));
                }
            }
        }

        // contexts
        let lhs_ctx: Vec<&String> = self.lhs.iter().filter_map(|p| p.context.as_ref()).collect();
        let rhs_ctx: Vec<&String> = self
            .rhs
            .iter()
            .filter_map(|t| match &t.kind {
                TemplateKind::Context(c) => Some(c),
                _ => None,
            })
            .collect();
        let lhs_set: BTreeSet<&String> = lhs_ctx.iter().copied().collect();
        let rhs_set: BTreeSet<&String> = rhs_ctx.iter().copied().collect();
        if lhs_set.len() != lhs_ctx.len() || rhs_set.len() != rhs_ctx.len() || lhs_set != rhs_set {
            return Err(self.invalid("every context must appear once on each side"));
        }
        for t in &self.rhs {
            if matches!(t.kind, TemplateKind::Context(_)) && t.replicate.is_some() {
                return Err(self.invalid("context templates cannot be replicated"));
            }
        }

        // attribute variables: types and binding
        let mut types: BTreeMap<String, VarType> = BTreeMap::new();
        let mut note = |v: &str, ty: VarType| -> Result<(), RuleError> {
            match types.insert(v.to_string(), ty) {
                Some(prev) if prev != ty => Err(RuleError::TypeConflict { rule: name.clone(), var: v.to_string() }),
                _ => Ok(()),
            }
        };
        for p in &self.lhs {
            match &p.kind {
                PatternKind::Spider { color, phase } => {
                    if let Term::Var(v) = color {
                        note(v, VarType::Color)?;
                    }
                    if let Term::Lit(c) = color {
                        if *c != 1 && *c != -1 {
                            return Err(self.invalid(format!("colour literal {c} is not +1 or -1")));
                        }
                    }
                    if let Term::Var(v) = phase {
                        note(v, VarType::Phase)?;
                    }
                }
                PatternKind::HBox { phase: Term::Var(v) } => note(v, VarType::Phase)?,
                _ => {}
            }
        }
        let mut bound: BTreeSet<String> = self.lhs_vars();
        for c in &self.guard.0 {
            let mut used = Vec::new();
            match c {
                Constraint::Define(v, e) => {
                    e.vars(&mut used);
                    check_bound(name, &bound, &used)?;
                    bound.insert(v.clone());
                }
                Constraint::Test(a, _, b) => {
                    a.vars(&mut used);
                    b.vars(&mut used);
                    check_bound(name, &bound, &used)?;
                }
                Constraint::Int(v) => check_bound(name, &bound, std::slice::from_ref(v))?,
            }
        }
        for t in &self.rhs {
            let mut used = Vec::new();
            match &t.kind {
                TemplateKind::Spider { color, phase } => {
                    color.vars(&mut used);
                    phase.vars(&mut used);
                    if let Expr::Lit(c) = color {
                        if *c != 1 && *c != -1 {
                            return Err(self.invalid(format!("colour literal {c} is not +1 or -1")));
                        }
                    }
                }
                TemplateKind::HBox { phase } => phase.vars(&mut used),
                TemplateKind::Context(_) => {}
            }
            check_bound(name, &bound, &used)?;
        }
        Ok(())
    }
}

fn check_bound(rule: &str, bound: &BTreeSet<String>, used: &[String]) -> Result<(), RuleError> {
    for v in used {
        if !bound.contains(v) {
            return Err(RuleError::UnboundVariable { rule: rule.to_string(), var: v.clone() });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spider(color: Term, phase: Term, eps: Vec<Endpoint>) -> NodePattern {
        NodePattern { kind: PatternKind::Spider { color, phase }, replicate: None, endpoints: eps, context: None }
    }

    #[test]
    fn link_condition_three_occurrences() {
        let lhs = vec![
            spider(Term::Lit(1), Term::Lit(0), vec![Endpoint::fixed("L1"), Endpoint::fixed("L1")]),
            spider(Term::Lit(1), Term::Lit(0), vec![Endpoint::fixed("L1")]),
        ];
        let err = Rule::new("bad", lhs, Guard::default(), vec![], vec![], BTreeMap::new(), Gating::None).unwrap_err();
        assert!(matches!(err, RuleError::LinkCondition { ref wire, count: 3, .. } if wire == "L1"));
        assert!(err.to_string().contains("exactly twice"));
    }

    #[test]
    fn unbound_rhs_label() {
        let lhs = vec![spider(Term::Lit(1), Term::Lit(0), vec![Endpoint::fixed("L1")])];
        let rhs = vec![NodeTemplate {
            kind: TemplateKind::Spider { color: Expr::Lit(1), phase: Expr::Lit(0) },
            replicate: Some("K".into()),
            endpoints: vec![],
        }];
        let err = Rule::new("bad", lhs, Guard::default(), rhs, vec![("L1".into(), "L9".into())], BTreeMap::new(), Gating::None);
        // L9 occurs once: the link condition fires before label checks
        assert!(matches!(err, Err(RuleError::LinkCondition { .. })));

        let lhs = vec![spider(Term::Lit(1), Term::Lit(0), vec![Endpoint::fixed("L1"), Endpoint::fixed("L2")])];
        let rhs = vec![NodeTemplate {
            kind: TemplateKind::Spider { color: Expr::Lit(1), phase: Expr::Lit(0) },
            replicate: Some("K".into()),
            endpoints: vec![],
        }];
        let err = Rule::new("bad", lhs, Guard::default(), rhs, vec![("L1".into(), "L2".into())], BTreeMap::new(), Gating::None);
        assert!(matches!(err, Err(RuleError::UnboundLabel { ref label, .. }) if label == "K"));
    }

    #[test]
    fn unbound_guard_variable() {
        let lhs = vec![spider(Term::Lit(1), Term::Var("A".into()), vec![Endpoint::fixed("L1"), Endpoint::fixed("L2")])];
        let guard = Guard(vec![Constraint::Test(Expr::var("B"), CmpOp::Eq, Expr::Lit(0))]);
        let err = Rule::new("bad", lhs, guard, vec![], vec![("L1".into(), "L2".into())], BTreeMap::new(), Gating::None);
        assert!(matches!(err, Err(RuleError::UnboundVariable { ref var, .. }) if var == "B"));
    }

    #[test]
    fn colour_phase_conflict() {
        let lhs = vec![
            spider(Term::Var("A".into()), Term::Lit(0), vec![Endpoint::fixed("L1")]),
            spider(Term::Lit(1), Term::Var("A".into()), vec![Endpoint::fixed("L1")]),
        ];
        let err = Rule::new("bad", lhs, Guard::default(), vec![], vec![], BTreeMap::new(), Gating::None);
        assert!(matches!(err, Err(RuleError::TypeConflict { .. })));
    }
}

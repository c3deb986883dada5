//! JSON rule files.
//!
//! ```json
//! {
//!   "name": "f",
//!   "lhs": [
//!     {"kind": "spider", "color": "C", "phase": "A",
//!      "endpoints": [{"wire": "L1"}, {"group": "M", "wire": "L2"}]},
//!     {"kind": "spider", "color": "C", "phase": "B",
//!      "endpoints": [{"wire": "L1"}, {"group": "N", "wire": "L3"}]}
//!   ],
//!   "guard": ["AB = A + B"],
//!   "rhs": [
//!     {"kind": "spider", "color": "C", "phase": "AB",
//!      "endpoints": [{"group": "M", "wire": "L2"}, {"group": "N", "wire": "L3"}]}
//!   ]
//! }
//! ```
//!
//! Kinds are `spider` (needs `color`), `z`, `x`, `h`, `any` and `node` (left
//! only, need `context`) and `context` (right only, names the context).
//! Attributes are integers or strings; on the left a string must be a
//! variable name, on the right it is an expression.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::expr::{is_ident, Constraint, Expr, Guard};
use super::{Endpoint, Gating, NodePattern, NodeTemplate, PatternKind, Rule, RuleError, TemplateKind, Term};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub wire: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default)]
    pub endpoints: Vec<EndpointSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatingSpec {
    Budget(String),
    Token(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleFile {
    pub name: String,
    pub lhs: Vec<NodeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guard: Vec<String>,
    #[serde(default)]
    pub rhs: Vec<NodeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub connect: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub min_card: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gating: Option<GatingSpec>,
}

/// Parses and validates a rule file.
pub fn parse_rule(text: &str) -> Result<Rule, RuleError> {
    let file: RuleFile = serde_json::from_str(text).map_err(|e| RuleError::Format(e.to_string()))?;
    file.to_rule()
}

fn endpoints_in(specs: &[EndpointSpec]) -> Vec<Endpoint> {
    specs.iter().map(|e| Endpoint { wire: e.wire.clone(), group: e.group.clone() }).collect()
}

fn endpoints_out(eps: &[Endpoint]) -> Vec<EndpointSpec> {
    eps.iter().map(|e| EndpointSpec { group: e.group.clone(), wire: e.wire.clone() }).collect()
}

impl RuleFile {
    pub fn to_rule(&self) -> Result<Rule, RuleError> {
        let name = &self.name;
        let unknown = |kind: &str| RuleError::UnknownKind { rule: name.clone(), kind: kind.to_string() };
        let invalid = |msg: String| RuleError::Invalid { rule: name.clone(), msg };

        let term = |s: &Option<Scalar>, what: &str| -> Result<Term, RuleError> {
            match s {
                None => Err(invalid(format!("missing {what}"))),
                Some(Scalar::Int(v)) => Ok(Term::Lit(*v)),
                Some(Scalar::Text(t)) => {
                    let t = t.trim();
                    if let Ok(v) = t.parse::<i64>() {
                        Ok(Term::Lit(v))
                    } else if is_ident(t) {
                        Ok(Term::Var(t.to_string()))
                    } else {
                        Err(invalid(format!("left-hand {what} must be a literal or a variable, got {t:?}")))
                    }
                }
            }
        };
        let expr = |s: &Option<Scalar>, what: &str| -> Result<Expr, RuleError> {
            match s {
                None => Err(invalid(format!("missing {what}"))),
                Some(Scalar::Int(v)) => Ok(Expr::Lit(*v)),
                Some(Scalar::Text(t)) => {
                    Expr::parse(t).map_err(|e| RuleError::Guard { rule: name.clone(), source: e })
                }
            }
        };

        let mut lhs = Vec::new();
        for n in &self.lhs {
            let kind = match n.kind.as_str() {
                "spider" => PatternKind::Spider { color: term(&n.color, "colour")?, phase: term(&n.phase, "phase")? },
                "z" | "x" => {
                    if n.color.is_some() {
                        return Err(invalid(format!("kind {} fixes the colour", n.kind)));
                    }
                    let c = if n.kind == "z" { 1 } else { -1 };
                    PatternKind::Spider { color: Term::Lit(c), phase: term(&n.phase, "phase")? }
                }
                "h" => PatternKind::HBox { phase: term(&n.phase, "phase")? },
                "any" => PatternKind::Any,
                "node" => PatternKind::AnyNode,
                other => return Err(unknown(other)),
            };
            lhs.push(NodePattern {
                kind,
                replicate: n.replicate.clone(),
                endpoints: endpoints_in(&n.endpoints),
                context: n.context.clone(),
            });
        }

        let mut rhs = Vec::new();
        for n in &self.rhs {
            let kind = match n.kind.as_str() {
                "spider" => TemplateKind::Spider { color: expr(&n.color, "colour")?, phase: expr(&n.phase, "phase")? },
                "z" | "x" => {
                    let c = if n.kind == "z" { 1 } else { -1 };
                    TemplateKind::Spider { color: Expr::Lit(c), phase: expr(&n.phase, "phase")? }
                }
                "h" => TemplateKind::HBox { phase: expr(&n.phase, "phase")? },
                "context" => match &n.context {
                    Some(c) => TemplateKind::Context(c.clone()),
                    None => return Err(invalid("context template without a context name".into())),
                },
                other => return Err(unknown(other)),
            };
            if n.context.is_some() && !matches!(kind, TemplateKind::Context(_)) {
                return Err(invalid("only context templates may name a context".into()));
            }
            rhs.push(NodeTemplate { kind, replicate: n.replicate.clone(), endpoints: endpoints_in(&n.endpoints) });
        }

        let partial = Rule {
            name: name.clone(),
            lhs,
            guard: Guard::default(),
            rhs: Vec::new(),
            connect: Vec::new(),
            min_card: BTreeMap::new(),
            gating: Gating::None,
        };
        let mut bound: BTreeSet<String> = partial.lhs_vars();
        let mut guard = Vec::new();
        for g in &self.guard {
            let c = Constraint::parse(g, &|v| bound.contains(v))
                .map_err(|e| RuleError::Guard { rule: name.clone(), source: e })?;
            if let Constraint::Define(v, _) = &c {
                bound.insert(v.clone());
            }
            guard.push(c);
        }
        let gating = match &self.gating {
            None => Gating::None,
            Some(GatingSpec::Budget(b)) => Gating::Budget(b.clone()),
            Some(GatingSpec::Token(t)) => Gating::Token(t.clone()),
        };
        Rule::new(
            name.clone(),
            partial.lhs,
            Guard(guard),
            rhs,
            self.connect.iter().map(|[a, b]| (a.clone(), b.clone())).collect(),
            self.min_card.clone(),
            gating,
        )
    }
}

fn term_out(t: &Term) -> Scalar {
    match t {
        Term::Lit(v) => Scalar::Int(*v),
        Term::Var(v) => Scalar::Text(v.clone()),
    }
}

fn expr_out(e: &Expr) -> Scalar {
    match e {
        Expr::Lit(v) => Scalar::Int(*v),
        other => Scalar::Text(other.to_string()),
    }
}

impl Rule {
    pub fn to_file(&self) -> RuleFile {
        let lhs = self
            .lhs
            .iter()
            .map(|p| {
                let (kind, color, phase) = match &p.kind {
                    PatternKind::Spider { color: Term::Lit(1), phase } => ("z", None, Some(term_out(phase))),
                    PatternKind::Spider { color: Term::Lit(-1), phase } => ("x", None, Some(term_out(phase))),
                    PatternKind::Spider { color, phase } => ("spider", Some(term_out(color)), Some(term_out(phase))),
                    PatternKind::HBox { phase } => ("h", None, Some(term_out(phase))),
                    PatternKind::Any => ("any", None, None),
                    PatternKind::AnyNode => ("node", None, None),
                };
                NodeSpec {
                    kind: kind.to_string(),
                    color,
                    phase,
                    replicate: p.replicate.clone(),
                    context: p.context.clone(),
                    endpoints: endpoints_out(&p.endpoints),
                }
            })
            .collect();
        let rhs = self
            .rhs
            .iter()
            .map(|t| {
                let (kind, color, phase, context) = match &t.kind {
                    TemplateKind::Spider { color: Expr::Lit(1), phase } => ("z", None, Some(expr_out(phase)), None),
                    TemplateKind::Spider { color: Expr::Lit(-1), phase } => ("x", None, Some(expr_out(phase)), None),
                    TemplateKind::Spider { color, phase } => {
                        ("spider", Some(expr_out(color)), Some(expr_out(phase)), None)
                    }
                    TemplateKind::HBox { phase } => ("h", None, Some(expr_out(phase)), None),
                    TemplateKind::Context(c) => ("context", None, None, Some(c.clone())),
                };
                NodeSpec {
                    kind: kind.to_string(),
                    color,
                    phase,
                    replicate: t.replicate.clone(),
                    context,
                    endpoints: endpoints_out(&t.endpoints),
                }
            })
            .collect();
        RuleFile {
            name: self.name.clone(),
            lhs,
            guard: self.guard.0.iter().map(|c| c.to_string()).collect(),
            rhs,
            connect: self.connect.iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
            min_card: self.min_card.clone(),
            gating: match &self.gating {
                Gating::None => None,
                Gating::Budget(b) => Some(GatingSpec::Budget(b.clone())),
                Gating::Token(t) => Some(GatingSpec::Token(t.clone())),
            },
        }
    }

    /// Pretty-printed rule file text; `parse_rule` reads it back unchanged.
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("rule files always serialize")
    }
}

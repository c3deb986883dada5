//! Ordered rule collections with gating.

use std::collections::BTreeMap;

use thiserror::Error;

use super::builtin::builtin_pattern_rules;
use super::{parse_rule, Gating, Rule, RuleError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleSetError {
    #[error("unknown rule {0:?}")]
    Unknown(String),

    #[error("duplicate rule name {0:?}")]
    Duplicate(String),

    #[error("budget {name} must be non-negative, got {value}")]
    NegativeBudget { name: String, value: i64 },

    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// Which reading of the colour-change rule `h` to use.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum HVariant {
    /// Every wire of the spider carries an H-box; all are removed.
    #[default]
    AllH,
    /// At least one H-box; H-boxes are removed where present and added elsewhere.
    Toggle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleBody {
    Pattern(Rule),
    LocalComplement,
    Pivot,
    ColorToggle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleEntry {
    pub name: String,
    pub body: RuleBody,
    pub gating: Gating,
}

impl RuleEntry {
    pub fn pattern(rule: Rule) -> Self {
        RuleEntry { name: rule.name.clone(), gating: rule.gating.clone(), body: RuleBody::Pattern(rule) }
    }

    fn algorithmic(name: &str, body: RuleBody) -> Self {
        RuleEntry { name: name.to_string(), body, gating: Gating::None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    entries: Vec<RuleEntry>,
    budgets: BTreeMap<String, u32>,
}

/// Names accepted by [`RuleSet::select`] besides the rule-file rules.
const ALGORITHMIC: &[&str] = &["h_toggle", "lcomp", "pivot"];

/// Rules applied by default in simplification runs.
pub const DEFAULT_RULES: &[&str] = &["f", "id", "h"];

/// The full catalogue: every pattern rule plus the algorithmic ones.
pub fn builtin_rules() -> RuleSet {
    let mut entries: Vec<RuleEntry> = Vec::new();
    for r in builtin_pattern_rules() {
        let after_h = r.name == "h";
        entries.push(RuleEntry::pattern(r));
        if after_h {
            entries.push(RuleEntry::algorithmic("h_toggle", RuleBody::ColorToggle));
        }
    }
    let b = entries.iter().position(|e| e.name == "b").map_or(entries.len(), |i| i + 1);
    entries.insert(b, RuleEntry::algorithmic("lcomp", RuleBody::LocalComplement));
    entries.insert(b + 1, RuleEntry::algorithmic("pivot", RuleBody::Pivot));
    RuleSet { entries, budgets: BTreeMap::new() }
}

impl RuleSet {
    pub fn new(entries: Vec<RuleEntry>) -> Result<Self, RuleSetError> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.name.clone()) {
                return Err(RuleSetError::Duplicate(e.name.clone()));
            }
        }
        Ok(RuleSet { entries, budgets: BTreeMap::new() })
    }

    /// Catalogue rules by name, in the given order. `h` resolves to the
    /// chosen variant.
    pub fn select<S: AsRef<str>>(names: &[S], h: HVariant) -> Result<Self, RuleSetError> {
        let all = builtin_rules();
        let mut entries = Vec::new();
        for n in names {
            let n = n.as_ref();
            let entry = if n == "h" && h == HVariant::Toggle {
                RuleEntry::algorithmic("h", RuleBody::ColorToggle)
            } else {
                all.entry(n).cloned().ok_or_else(|| RuleSetError::Unknown(n.to_string()))?
            };
            entries.push(entry);
        }
        RuleSet::new(entries)
    }

    pub fn default_set() -> Self {
        RuleSet::select(DEFAULT_RULES, HVariant::AllH).expect("default rules exist")
    }

    /// Adds a rule from rule-file text.
    pub fn push_rule_text(&mut self, text: &str) -> Result<(), RuleSetError> {
        self.push(RuleEntry::pattern(parse_rule(text)?))
    }

    pub fn push(&mut self, entry: RuleEntry) -> Result<(), RuleSetError> {
        if self.entry(&entry.name).is_some() {
            return Err(RuleSetError::Duplicate(entry.name));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[RuleEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&RuleEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sets an initial budget. A rule with the same name that is not yet
    /// budget-gated becomes gated by this counter.
    pub fn set_budget(&mut self, name: &str, value: i64) -> Result<(), RuleSetError> {
        if value < 0 {
            return Err(RuleSetError::NegativeBudget { name: name.to_string(), value });
        }
        for e in &mut self.entries {
            if e.name == name && !matches!(e.gating, Gating::Budget(_)) {
                e.gating = Gating::Budget(name.to_string());
            }
        }
        self.budgets.insert(name.to_string(), value as u32);
        Ok(())
    }

    /// Initial budget of every counter some rule is gated on (0 unless set).
    pub fn initial_budgets(&self) -> BTreeMap<String, u32> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            if let Gating::Budget(b) = &e.gating {
                out.insert(b.clone(), self.budgets.get(b).copied().unwrap_or(0));
            }
        }
        for (k, v) in &self.budgets {
            out.insert(k.clone(), *v);
        }
        out
    }

    /// Gates the named rule on a token.
    pub fn set_token(&mut self, rule: &str, token: &str) -> Result<(), RuleSetError> {
        let e = self
            .entries
            .iter_mut()
            .find(|e| e.name == rule)
            .ok_or_else(|| RuleSetError::Unknown(rule.to_string()))?;
        e.gating = Gating::Token(token.to_string());
        Ok(())
    }
}

/// Whether `name` is a catalogue rule.
pub fn is_builtin(name: &str) -> bool {
    ALGORITHMIC.contains(&name) || builtin_rules().entry(name).is_some()
}

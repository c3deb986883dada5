//! The built-in rule library. Pattern rules live as rule files under
//! `rules/` and are parsed once.

use std::sync::OnceLock;

use super::file::parse_rule;
use super::Rule;

const SOURCES: &[(&str, &str)] = &[
    ("f", include_str!("../../rules/f.json")),
    ("id", include_str!("../../rules/id.json")),
    ("hh", include_str!("../../rules/hh.json")),
    ("hopf", include_str!("../../rules/hopf.json")),
    ("pi", include_str!("../../rules/pi.json")),
    ("c", include_str!("../../rules/c.json")),
    ("c_pi", include_str!("../../rules/c_pi.json")),
    ("h", include_str!("../../rules/h.json")),
    ("b", include_str!("../../rules/b.json")),
    ("idgen_g", include_str!("../../rules/idgen_g.json")),
    ("zh1", include_str!("../../rules/zh1.json")),
    ("zh2", include_str!("../../rules/zh2.json")),
    ("zh3", include_str!("../../rules/zh3.json")),
    ("f_rl", include_str!("../../rules/f_rl.json")),
    ("id_rl", include_str!("../../rules/id_rl.json")),
    ("hh_rl", include_str!("../../rules/hh_rl.json")),
    ("c_rl", include_str!("../../rules/c_rl.json")),
];

/// Names of the pattern rules shipped as rule files.
pub const BUILTIN_NAMES: &[&str] = &[
    "f", "id", "hh", "hopf", "pi", "c", "c_pi", "h", "b", "idgen_g", "zh1", "zh2", "zh3", "f_rl", "id_rl", "hh_rl",
    "c_rl",
];

fn library() -> &'static [Rule] {
    static LIB: OnceLock<Vec<Rule>> = OnceLock::new();
    LIB.get_or_init(|| {
        SOURCES
            .iter()
            .map(|(name, text)| {
                let rule = parse_rule(text).unwrap_or_else(|e| panic!("built-in rule {name} is invalid: {e}"));
                assert_eq!(&rule.name, name);
                rule
            })
            .collect()
    })
}

/// A built-in pattern rule by name.
pub fn builtin_rule(name: &str) -> Option<Rule> {
    library().iter().find(|r| r.name == name).cloned()
}

/// All built-in pattern rules in catalogue order.
pub fn builtin_pattern_rules() -> Vec<Rule> {
    library().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_round_trips() {
        assert_eq!(BUILTIN_NAMES.len(), SOURCES.len());
        for name in BUILTIN_NAMES {
            let r = builtin_rule(name).unwrap();
            let again = parse_rule(&r.to_text()).unwrap();
            assert_eq!(r, again, "{name}");
        }
    }

    #[test]
    fn pi_matches_table_shape() {
        let r = builtin_rule("pi").unwrap();
        assert_eq!(r.lhs.len(), 2);
        assert_eq!(r.rhs[1].replicate.as_deref(), Some("P"));
        assert_eq!(r.guard.0.len(), 2);
    }
}

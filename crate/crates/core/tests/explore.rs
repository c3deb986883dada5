use zxforge::circuits::lemma_l_script;
use zxforge::ltl::{check_str, LtlError};
use zxforge::rule::{builtin_rules, HVariant, RuleSet};
use zxforge::{
    equal_up_to_scalar, explore, ghz, kn_hadamard, teleportation, tensor, Identity, Limits, NodeKind, State, StateSpace,
};

fn fih() -> RuleSet {
    RuleSet::select(&["f", "id", "h"], HVariant::AllH).unwrap()
}

fn run(d: &zxforge::Diagram, rs: &RuleSet, id: Identity, threads: usize) -> StateSpace {
    let init = State::with_identity(d, rs.initial_budgets(), Vec::new(), id);
    explore(rs, init, Limits::default(), threads).unwrap()
}

fn is_bare_wire(d: &zxforge::Diagram) -> bool {
    d.node_count() == 2 && d.wire_count() == 1 && d.nodes().iter().all(|n| n.kind.is_boundary())
}

#[test]
fn output_is_identical_across_thread_counts() {
    let d = ghz(5).unwrap();
    for id in [Identity::Labelled, Identity::AnonymousBoundaries] {
        let base = run(&d, &fih(), id, 1).to_json();
        for t in [2, 8] {
            assert!(run(&d, &fih(), id, t).to_json() == base, "{t} threads, {id:?}");
        }
    }
}

#[test]
fn ghz3_space() {
    let sp = run(&ghz(3).unwrap(), &fih(), Identity::AnonymousBoundaries, 1);
    assert_eq!(sp.len(), 39);
    let labelled = run(&ghz(3).unwrap(), &fih(), Identity::Labelled, 1);
    assert!(labelled.len() >= sp.len());
    let t0 = tensor(&ghz(3).unwrap()).unwrap();
    for s in &labelled.states {
        assert!(equal_up_to_scalar(&t0, &tensor(s.diagram()).unwrap(), 1e-9).unwrap());
    }
}

#[test]
fn teleportation_simplifies_to_a_wire() {
    for (a, b) in [(0, 0), (1, 1)] {
        let sp = run(&teleportation(a, b).unwrap(), &fih(), Identity::Labelled, 1);
        let finals = sp.final_ids();
        assert_eq!(finals.len(), 1, "({a},{b})");
        let d = sp.state(finals[0]).diagram();
        assert!(is_bare_wire(d), "{}", d.summary());
        let names: Vec<&str> = d.nodes().iter().filter_map(|n| match &n.kind {
            NodeKind::Boundary { name } => Some(name.as_str()),
            _ => None,
        }).collect();
        assert!(names.contains(&"in") && names.contains(&"out"));
    }
}

#[test]
fn limits_make_the_space_partial() {
    let rs = fih();
    let init = State::initial(&ghz(4).unwrap(), &rs);
    let sp = explore(&rs, init, Limits { max_states: 10, max_depth: usize::MAX }, 1).unwrap();
    assert!(!sp.exhaustive);
    assert!(sp.len() <= 10);
    assert!(matches!(check_str(&sp, "<> final"), Err(LtlError::NonExhaustive)));
    let init = State::initial(&ghz(4).unwrap(), &rs);
    let sp = explore(&rs, init, Limits { max_states: usize::MAX, max_depth: 2 }, 1).unwrap();
    assert!(!sp.exhaustive);
}

#[test]
fn space_files_round_trip() {
    let sp = run(&ghz(3).unwrap(), &fih(), Identity::AnonymousBoundaries, 1);
    let back = StateSpace::from_json(&sp.to_json()).unwrap();
    assert_eq!(back.to_json(), sp.to_json());
    assert_eq!(back.len(), sp.len());
    assert_eq!(back.final_ids(), sp.final_ids());
}

#[test]
fn budgets_bound_rule_use() {
    let mut rs = fih();
    rs.push(builtin_rules().entry("idgen_g").unwrap().clone()).unwrap();
    rs.set_budget("idgen_g", 1).unwrap();
    let sp = run(&teleportation(0, 0).unwrap(), &rs, Identity::Labelled, 1);
    for t in &sp.transitions {
        let (a, b) = (sp.state(t.from).budget("idgen_g").unwrap(), sp.state(t.to).budget("idgen_g").unwrap());
        if t.rule == "idgen_g" {
            assert_eq!(b + 1, a);
        } else {
            assert_eq!(a, b);
        }
    }
    let v = check_str(&sp, "!<>(final & budget(idgen_g)=1)").unwrap();
    assert!(!v.holds);
    assert!(v.counterexample.unwrap().replays(&sp));
}

#[test]
fn token_script_converges() {
    let (rs, tokens) = lemma_l_script();
    let d = kn_hadamard(4);
    let sp = explore(&rs, State::initial(&d, &rs).with_tokens(tokens.clone()), Limits::default(), 1).unwrap();
    assert_eq!(sp.final_ids().len(), 1);
    let fin = sp.state(sp.final_ids()[0]);
    assert!(fin.tokens.is_empty());
    for t in &sp.transitions {
        assert_eq!(sp.state(t.from).token_head(), Some(t.rule.as_str()));
    }
    let t0 = tensor(&d).unwrap();
    assert!(equal_up_to_scalar(&t0, &tensor(fin.diagram()).unwrap(), 1e-9).unwrap());
    assert!(check_str(&sp, "<> final").unwrap().holds);
}

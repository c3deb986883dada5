mod common;

use std::time::Instant;

#[test]
fn every_rule_preserves_the_tensor() {
    let t = Instant::now();
    for (i, (label, entry, m, toggle)) in common::soundness_cases().into_iter().enumerate() {
        let rep = common::soundness(&entry, m, toggle, 200, 1000 + i as u64);
        println!("{label}: {} diagrams, {} with matches, {} rewrites", rep.diagrams, rep.matched, rep.rewrites);
        assert!(rep.failures.is_empty(), "{label}: {:#?}", &rep.failures[..rep.failures.len().min(3)]);
        assert!(rep.matched >= 200, "{label}: only {} diagrams had a match", rep.matched);
    }
    assert!(t.elapsed().as_secs() < 60, "took {:?}", t.elapsed());
}

#[test]
fn colour_toggle_keeps_loops() {
    use zxforge::graphlike::{h_toggle, toggle_sites};
    use zxforge::{equal_up_to_scalar, tensor, Diagram, NodeKind};
    let cases = [
        // H-loop plus a Hadamard leg
        (vec![NodeKind::z(90), NodeKind::hadamard(), NodeKind::hadamard(), NodeKind::boundary("o")], vec![(0, 1), (0, 1), (0, 2), (2, 3)]),
        // two Hadamards in a cycle through the spider
        (vec![NodeKind::z(180), NodeKind::hadamard(), NodeKind::hadamard(), NodeKind::boundary("o")], vec![(0, 1), (1, 2), (2, 0), (0, 3)]),
    ];
    for (kinds, wires) in cases {
        let d = Diagram::from_parts(kinds, wires).unwrap();
        let sites = toggle_sites(&d);
        assert!(!sites.is_empty());
        for s in sites {
            let e = h_toggle(&d, d.node(s).id).unwrap();
            assert!(equal_up_to_scalar(&tensor(&d).unwrap(), &tensor(&e).unwrap(), 1e-9).unwrap());
        }
    }
}

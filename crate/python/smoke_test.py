"""Smoke test for the zxforge Python bindings.

Build first: pip install --no-build-isolation -e crates/python
"""

import zxforge_py as zx


def main():
    g3 = zx.ghz(3)
    assert (g3.spiders, g3.hboxes, g3.boundaries) == (7, 1, 3)
    assert zx.Diagram.from_json(g3.to_json()).canonical_key() == g3.canonical_key()

    names, entries = zx.tensor(g3)
    assert names == ["q0_out", "q1_out", "q2_out"]
    nonzero = [i for i, (re, im) in enumerate(entries) if abs(re) + abs(im) > 1e-9]
    assert nonzero == [0, 7], nonzero

    rs = zx.RuleSet(["f", "id", "h"])
    sp = zx.explore(g3, rs, anonymous_boundaries=True)
    assert len(sp) == 39 and sp.exhaustive
    [final] = sp.final_ids()
    assert zx.equivalent(g3, sp.diagram(final))

    holds, lasso = sp.check("<> final")
    assert holds and lasso is None

    rs = zx.RuleSet(["f", "id", "h", "idgen_g"])
    rs.set_budget("idgen_g", 1)
    sp = zx.explore(zx.teleportation(), rs, threads=2)
    holds, lasso = sp.check("!<>(final & budget(idgen_g)=1)")
    assert not holds
    states, rules, loop_start = lasso
    assert states[0] == 0 and len(rules) == len(states)

    fused = zx.rewrites("f", zx.Diagram.from_json(
        '{"nodes": [{"id": 0, "kind": "z", "phase": 90}, {"id": 1, "kind": "z", "phase": 270},'
        ' {"id": 2, "kind": "boundary", "name": "a"}, {"id": 3, "kind": "boundary", "name": "b"}],'
        ' "wires": [[0, 1], [0, 2], [1, 3]]}'))
    assert fused and all(d.spiders == 1 for d in fused)

    print("python smoke test ok")


if __name__ == "__main__":
    main()
